//! End-to-end acceptance criteria. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits nonzero on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gis_core::certify::{
    check_a2_ratio, check_demidovich, estimate_contraction_rate, verify_incremental_bound, verify_origin_convergence,
    A2Settings, Domain, RatioVerdict, SamplingPlan, SamplingScheme,
};
use gis_core::integrate::{integrate, integrate_sampled, transition_bound_check, IntegratorConfig};
use gis_core::linalg::{induced_matrix_norm, Matrix, NormKind};
use gis_core::lognorm::{default_theta_sequence, log_norm, log_norm_limit_estimate, mu_p_quadratic_form};
use gis_core::system::builtin::{
    example1_log_norm_l2, example1_phi, example1_rate, example1_standard, harmonic_oscillator, scalar_decay,
    scalar_growth, Example1Variant, EXAMPLE1_B, EXAMPLE1_TF, EXAMPLE1_X0,
};
use gis_core::system::QuadratureRule;
use gis_core::SystemSpec;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Matrix {
    Matrix::new(n, n, (0..n * n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let b = random_matrix(rng, n, 1.0);
    b.transpose().matmul(&b).unwrap().shift_diagonal(0.5).unwrap()
}

fn kinds(rng: &mut ChaCha8Rng, n: usize) -> Vec<NormKind> {
    vec![NormKind::L1, NormKind::L2, NormKind::LInf, NormKind::weighted(random_spd(rng, n)).unwrap()]
}

fn criterion_1() -> Outcome {
    let sys = example1_standard(Example1Variant::Fig1);
    let start = Instant::now();
    let traj =
        integrate(&sys, &EXAMPLE1_X0, 0.0, EXAMPLE1_TF, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let (_, x20) = traj.last().unwrap();
    let sup = x20.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let origin = verify_origin_convergence(&traj, &NormKind::LInf, 0.25, 0.01).map_err(|e| e.to_string())?;
    // Independent route: fixed-step RK4 must land on the same endpoint. Its
    // step must stay inside the stability region for rates near −t³.
    let oracle =
        integrate(&sys, &EXAMPLE1_X0, 0.0, EXAMPLE1_TF, &IntegratorConfig::rk4(1e-4)).map_err(|e| e.to_string())?;
    let (_, y20) = oracle.last().unwrap();
    let gap = x20.iter().zip(y20.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    check(
        sup < 0.01 && origin.converged() && elapsed < Duration::from_secs(5) && gap < 1e-8,
        format!(
            "|x(20)|_inf = {sup:.3e}, origin verdict {}, runtime {:.2?}, rk4 gap {gap:.1e}",
            origin.verdict.label(),
            elapsed
        ),
    )
}

fn criterion_2() -> Outcome {
    let cfg = IntegratorConfig::default();
    let sys = example1_standard(Example1Variant::Fig2);
    let traj = integrate_sampled(&sys, &EXAMPLE1_X0, 0.0, &[10.0, EXAMPLE1_TF], &cfg).map_err(|e| e.to_string())?;
    let x10 = &traj.states()[0];
    let x20 = &traj.states()[1];
    let full = integrate(&sys, &EXAMPLE1_X0, 0.0, EXAMPLE1_TF, &cfg).map_err(|e| e.to_string())?;
    let n = full.len();
    let x1_tail = full.states()[3 * n / 4..].iter().fold(0.0f64, |m, s| m.max(s[0].abs()));

    let settings = A2Settings::default();
    let fig2 = check_a2_ratio(&sys, example1_rate, 1.0, 1000.0, 400, &settings).map_err(|e| e.to_string())?;
    let fig1 = check_a2_ratio(&example1_standard(Example1Variant::Fig1), example1_rate, 1.0, 1000.0, 400, &settings)
        .map_err(|e| e.to_string())?;
    check(
        (x10[1] - 4.0).abs() < 0.05
            && x1_tail < 0.01
            && x20[0].abs() < 0.01
            && fig2.verdict == RatioVerdict::RatioPersists
            && fig1.verdict == RatioVerdict::RatioVanishes,
        format!(
            "x2(10) = {:.5}, max |x1| over tail = {x1_tail:.2e}, A2 fig2 {} (slope {:.3}), fig1 {} (slope {:.3})",
            x10[1],
            fig2.verdict.label(),
            fig2.trend_slope,
            fig1.verdict.label(),
            fig1.trend_slope
        ),
    )
}

fn criterion_3() -> Outcome {
    let sys = example1_standard(Example1Variant::Fig1);
    let domain = Domain::cube(2, -10.0, 10.0, 0.0, 2.0).unwrap();
    let at_zero = SamplingPlan::new(201 * 201, 1, SamplingScheme::UniformGrid).unwrap();
    let cert = estimate_contraction_rate(&sys, &domain, &NormKind::L2, &at_zero).map_err(|e| e.to_string())?;
    let (x, t) = &cert.argmax;
    let near_corner = x[0].cos() > 0.99 && x[1].cos() > 0.99 && *t == 0.0;

    // Independent route: the closed-form expression maximized over the same grid.
    let grid = at_zero.points(&domain).unwrap();
    let oracle = grid[0]
        .1
        .iter()
        .map(|p| example1_log_norm_l2(EXAMPLE1_B, example1_phi(0.0), p))
        .fold(f64::NEG_INFINITY, f64::max);

    let over_time = SamplingPlan::new(101 * 101, 21, SamplingScheme::UniformGrid).unwrap();
    let timed = estimate_contraction_rate(&sys, &domain, &NormKind::L2, &over_time).map_err(|e| e.to_string())?;
    let dominance = cert.check_rate_dominance(example1_rate);
    let timed_dominance = timed.check_rate_dominance(example1_rate);
    check(
        (cert.mu_sup - -1.3074).abs() <= 0.002
            && (cert.mu_sup - oracle).abs() < 1e-12
            && near_corner
            && dominance.holds
            && timed_dominance.holds,
        format!(
            "mu_sup = {:.7} at ({:.3}, {:.3}), oracle {:.7}, worst margin mu + alpha(t) = {:.4} over t in [0, 2]",
            cert.mu_sup, x[0], x[1], oracle, timed_dominance.worst_margin
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..20)
        .map(|_| {
            let mut p = || (0..2).map(|_| rng.random_range(-5.0..5.0)).collect::<Vec<f64>>();
            (p(), p())
        })
        .collect();
    let cfg = IntegratorConfig::default();
    let sys = example1_standard(Example1Variant::Fig1);
    let report = verify_incremental_bound(&sys, &pairs, 0.0, EXAMPLE1_TF, 0.5, &NormKind::L2, &cfg)
        .map_err(|e| e.to_string())?;
    let growth = verify_incremental_bound(
        &scalar_growth(),
        &[(vec![1.0], vec![2.0])],
        0.0,
        EXAMPLE1_TF,
        0.5,
        &NormKind::L2,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    check(
        report.passed && report.violations == 0 && !growth.passed,
        format!(
            "{} pairs, worst violation {:.3e} (tolerance {:.3e}), expanding system violation {:.3e}",
            report.pair_count, report.worst_violation, report.tolerance, growth.worst_violation
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let thetas = default_theta_sequence();
    let labels = ["l1", "l2", "linf", "weighted"];
    let mut worst_limit = [0.0f64; 4];
    let mut worst_quad = 0.0f64;
    for (k, worst) in worst_limit.iter_mut().enumerate() {
        for _ in 0..500 {
            let n = rng.random_range(2..=8);
            let a = random_matrix(&mut rng, n, 5.0);
            let kind = match k {
                0 => NormKind::L1,
                1 => NormKind::L2,
                2 => NormKind::LInf,
                _ => NormKind::weighted(random_spd(&mut rng, n)).unwrap(),
            };
            let closed = log_norm(&a, &kind).map_err(|e| e.to_string())?;
            let limit = log_norm_limit_estimate(&a, &kind, &thetas).map_err(|e| e.to_string())?.value;
            *worst = worst.max((closed - limit).abs() / closed.abs());
            if let NormKind::Weighted(w) = &kind {
                let quad = mu_p_quadratic_form(&a, w.weight()).map_err(|e| e.to_string())?;
                worst_quad = worst_quad.max((closed - quad).abs() / closed.abs());
            }
        }
    }
    let detail = labels.iter().zip(worst_limit).map(|(l, w)| format!("{l} {w:.1e}")).collect::<Vec<_>>().join(", ");
    check(
        worst_limit.iter().all(|w| *w <= 1e-6) && worst_quad <= 1e-8,
        format!("worst relative closed-vs-limit: {detail}; weighted quadratic form {worst_quad:.1e}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_convex, mut worst_lipschitz) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..4 {
        for _ in 0..1000 {
            let n = rng.random_range(2..=6);
            let kind = kinds(&mut rng, n).swap_remove(k);
            let a = random_matrix(&mut rng, n, 5.0);
            let b = random_matrix(&mut rng, n, 5.0);
            let c: f64 = rng.random();
            let mix = a.scale(c).add(&b.scale(1.0 - c)).unwrap();
            let (ma, mb) = (log_norm(&a, &kind).unwrap(), log_norm(&b, &kind).unwrap());
            worst_convex = worst_convex.max(log_norm(&mix, &kind).unwrap() - (c * ma + (1.0 - c) * mb));
            let dist = induced_matrix_norm(&a.sub(&b).unwrap(), &kind).unwrap();
            worst_lipschitz = worst_lipschitz.max((ma - mb).abs() - dist);
        }
    }
    check(
        worst_convex <= 1e-10 && worst_lipschitz <= 1e-10,
        format!("largest convexity excess {worst_convex:.2e}, largest Lipschitz excess {worst_lipschitz:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = IntegratorConfig::default();
    let (mut failures, mut checks, mut worst) = (0, 0, f64::INFINITY);
    for sys_idx in 0..100 {
        let n = rng.random_range(1..=4);
        let coeffs: Vec<Matrix> = (0..3).map(|_| random_matrix(&mut rng, n, 1.0)).collect();
        let a_fn = |t: f64| coeffs[0].add(&coeffs[1].scale(t)).unwrap().add(&coeffs[2].scale(t * t)).unwrap();
        for kind in kinds(&mut rng, n) {
            let r =
                transition_bound_check(a_fn, &kind, 0.0, 2.0, 20, &cfg, sys_idx as u64).map_err(|e| e.to_string())?;
            checks += 1;
            failures += usize::from(!r.passed);
            worst = worst
                .min(r.worst_upper_slack)
                .min(r.worst_lower_slack)
                .min(r.worst_state_upper_slack)
                .min(r.worst_state_lower_slack);
        }
    }
    check(
        failures == 0,
        format!("{checks} system/norm checks x 20 pairs, {failures} failed, smallest normalized slack {worst:.2e}"),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rule = QuadratureRule::default();
    let sys = example1_standard(Example1Variant::Fig1);
    let mut worst_nonlinear = 0.0f64;
    for _ in 0..1000 {
        let x_star: Vec<f64> = (0..2).map(|_| rng.random_range(-10.0..10.0)).collect();
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-10.0..10.0)).collect();
        let t = rng.random_range(0.0..3.0);
        worst_nonlinear = worst_nonlinear.max(sys.lemma1_residual(&x_star, &x, t, &rule).map_err(|e| e.to_string())?);
    }
    let mut worst_linear = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=4);
        let lin = SystemSpec::linear(random_matrix(&mut rng, n, 1.0));
        let x_star: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        worst_linear = worst_linear.max(lin.lemma1_residual(&x_star, &x, 0.0, &rule).map_err(|e| e.to_string())?);
    }
    check(
        worst_nonlinear < 1e-10 && worst_linear < 1e-14,
        format!("worst residual: example {worst_nonlinear:.2e}, linear {worst_linear:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let sys = SystemSpec::linear(Matrix::from_rows(&[&[-1.0, 4.0], &[0.0, -1.0]]));
    let domain = Domain::cube(2, -1.0, 1.0, 0.0, 1.0).unwrap();
    let plan = SamplingPlan::new(25, 2, SamplingScheme::UniformGrid).unwrap();
    let identity = check_demidovich(&sys, &Matrix::identity(2), &domain, &plan).map_err(|e| e.to_string())?;
    let weighted =
        check_demidovich(&sys, &Matrix::from_diag(&[1.0, 16.0]), &domain, &plan).map_err(|e| e.to_string())?;
    // Hand computation: ½(PJ + JᵀP) = [[−1, 2], [2, −16]].
    let expected = (-17.0 + 241f64.sqrt()) / 2.0;
    check(
        !identity.passed
            && (identity.max_eigenvalue - 1.0).abs() < 1e-12
            && weighted.passed
            && (weighted.max_eigenvalue - expected).abs() < 1e-12
            && identity.consistent
            && weighted.consistent,
        format!(
            "P = I: max eigenvalue {:.6} (fails); P = diag(1, 16): max eigenvalue {:.6} (passes)",
            identity.max_eigenvalue, weighted.max_eigenvalue
        ),
    )
}

fn criterion_10() -> Outcome {
    let endpoint_error = |sys: &SystemSpec, x0: &[f64], tf: f64, exact: &[f64], h: f64| -> Result<f64, String> {
        let traj = integrate(sys, x0, 0.0, tf, &IntegratorConfig::rk4(h)).map_err(|e| e.to_string())?;
        let (_, x) = traj.last().unwrap();
        Ok(x.iter().zip(exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    };
    let decay_exact = [(-1f64).exp()];
    let r_decay = endpoint_error(&scalar_decay(), &[1.0], 1.0, &decay_exact, 0.1)?
        / endpoint_error(&scalar_decay(), &[1.0], 1.0, &decay_exact, 0.05)?;
    let osc_exact = [2f64.cos(), -(2f64.sin())];
    let r_osc = endpoint_error(&harmonic_oscillator(), &[1.0, 0.0], 2.0, &osc_exact, 0.1)?
        / endpoint_error(&harmonic_oscillator(), &[1.0, 0.0], 2.0, &osc_exact, 0.05)?;
    let in_band = |r: f64| (12.0..=20.0).contains(&r);
    check(
        in_band(r_decay) && in_band(r_osc),
        format!("error ratio under step halving: decay {r_decay:.3}, oscillator {r_osc:.3}"),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("example 1, admissible perturbation converges to the origin", criterion_1),
        ("example 1, borderline perturbation converges to (0, 4)", criterion_2),
        ("sampled contraction rate of example 1", criterion_3),
        ("exponential incremental bound on random pairs", criterion_4),
        ("closed form, limit estimate and quadratic form agree", criterion_5),
        ("log-norm convexity and Lipschitz inequalities", criterion_6),
        ("transition-matrix and state-norm bounds on random LTV systems", criterion_7),
        ("averaged-Jacobian residual", criterion_8),
        ("Demidovich criterion depends on the weight", criterion_9),
        ("RK4 convergence order", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.2}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
