use gis_core::integrate::{integrate, integrate_fundamental, IntegratorConfig, Method};
use gis_core::linalg::Matrix;
use gis_core::system::builtin::{example1_standard, harmonic_oscillator, scalar_decay, scalar_growth, Example1Variant};
use gis_core::system::QuadratureRule;
use gis_core::SystemSpec;
use proptest::prelude::*;

fn builtins() -> Vec<SystemSpec> {
    vec![
        example1_standard(Example1Variant::Fig1),
        example1_standard(Example1Variant::Fig2),
        scalar_decay(),
        scalar_growth(),
        harmonic_oscillator(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn averaged_jacobian_from_origin_reproduces_field_difference(
        x in prop::collection::vec(-10.0..10.0f64, 2), t in 0.0..3.0f64
    ) {
        let sys = example1_standard(Example1Variant::Fig1);
        let rule = QuadratureRule::default();
        let a = sys.averaged_jacobian(&[0.0, 0.0], &x, t, &rule).unwrap();
        let lhs = a.matvec(&x).unwrap();
        let fx = sys.nominal(&x, t).unwrap();
        let f0 = sys.nominal(&[0.0, 0.0], t).unwrap();
        for i in 0..2 {
            prop_assert!((lhs[i] - (fx[i] - f0[i])).abs() < 1e-10);
        }
    }

    #[test]
    fn analytic_and_finite_difference_jacobians_agree(
        x in prop::collection::vec(-10.0..10.0f64, 2), t in 0.0..3.0f64
    ) {
        for sys in builtins() {
            let x = &x[..sys.dim()];
            let analytic = sys.jacobian(x, t).unwrap();
            let fd = sys.finite_difference_jacobian(x, t).unwrap();
            prop_assert!(analytic.sub(&fd).unwrap().max_abs() < 1e-6);
        }
    }

    #[test]
    fn zero_length_segment_gives_pointwise_jacobian(
        x in prop::collection::vec(-10.0..10.0f64, 2), t in 0.0..3.0f64
    ) {
        let sys = example1_standard(Example1Variant::Fig2);
        let avg = sys.averaged_jacobian(&x, &x, t, &QuadratureRule::default()).unwrap();
        let point = sys.jacobian(&x, t).unwrap();
        prop_assert!(avg.sub(&point).unwrap().max_abs() <= 1e-13 * (1.0 + point.max_abs()));
    }

    #[test]
    fn trajectories_have_increasing_times_and_finite_states(
        entries in prop::collection::vec(-2.0..2.0f64, 9),
        x0 in prop::collection::vec(-3.0..3.0f64, 3),
        rk4 in any::<bool>(),
    ) {
        let sys = SystemSpec::linear(Matrix::new(3, 3, entries).unwrap());
        let cfg = if rk4 { IntegratorConfig::rk4(0.01) } else { IntegratorConfig::default() };
        let traj = integrate(&sys, &x0, 0.0, 2.0, &cfg).unwrap();
        prop_assert!(traj.times().windows(2).all(|w| w[1] > w[0]));
        prop_assert!(traj.states().iter().all(|s| s.iter().all(|v| v.is_finite())));
        prop_assert_eq!(*traj.times().last().unwrap(), 2.0);
    }
}

#[test]
fn fundamental_determinant_follows_liouville() {
    // det Φ(t) = exp(∫ tr A).
    let a = |t: f64| Matrix::from_rows(&[&[-1.0 + t.sin(), t], &[0.5, -2.0 * t]]);
    let fund = integrate_fundamental(a, 0.0, 2.0, &IntegratorConfig::default()).unwrap();
    for (t, phi) in fund.times.iter().zip(&fund.matrices) {
        let det = phi[(0, 0)] * phi[(1, 1)] - phi[(0, 1)] * phi[(1, 0)];
        let trace_integral = -t + (1.0 - t.cos()) - t * t;
        assert!((det - trace_integral.exp()).abs() < 1e-8 * trace_integral.exp().max(1.0), "t = {t}");
    }
}

#[test]
fn rk4_and_adaptive_agree_on_example1() {
    let sys = example1_standard(Example1Variant::Fig1);
    let adaptive = integrate(&sys, &[-2.0, 5.0], 0.0, 3.0, &IntegratorConfig::default()).unwrap();
    let fixed = integrate(&sys, &[-2.0, 5.0], 0.0, 3.0, &IntegratorConfig::rk4(1e-3)).unwrap();
    assert_eq!(IntegratorConfig::rk4(1e-3).method, Method::Rk4Fixed);
    let (_, a) = adaptive.last().unwrap();
    let (_, b) = fixed.last().unwrap();
    for i in 0..2 {
        assert!((a[i] - b[i]).abs() < 1e-9, "{} vs {}", a[i], b[i]);
    }
}
