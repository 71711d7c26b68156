//! Built-in demonstration systems.

use crate::linalg::Matrix;
use crate::system::SystemSpec;

/// The planar example
///
/// ```text
/// f(x, t) = ( φ(t) x₁ + sin x₁,
///             b x₁ + (2 + φ(t)) x₂ + sin x₂ )
/// ```
///
/// with analytic Jacobian `[[φ + cos x₁, 0], [b, 2 + φ + cos x₂]]`.
pub fn example1(
    b: f64,
    phi: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    delta: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
) -> SystemSpec {
    let phi_j = phi.clone();
    SystemSpec::new(2, move |x, t| {
        let p = phi(t);
        vec![p * x[0] + x[0].sin(), b * x[0] + (2.0 + p) * x[1] + x[1].sin()]
    })
    .with_jacobian(move |x, t| {
        let p = phi_j(t);
        Matrix::from_rows(&[&[p + x[0].cos(), 0.0], &[b, 2.0 + p + x[1].cos()]])
    })
    .with_perturbation(delta)
}

pub const EXAMPLE1_B: f64 = 5.0;
pub const EXAMPLE1_X0: [f64; 2] = [-2.0, 5.0];
pub const EXAMPLE1_TF: f64 = 20.0;

/// `φ(t) = −6 − t³`.
pub fn example1_phi(t: f64) -> f64 {
    -6.0 - t.powi(3)
}

/// The contraction rate `α(t) = 0.5 + t³` claimed for the example.
pub fn example1_rate(t: f64) -> f64 {
    0.5 + t.powi(3)
}

/// Which perturbation of the planar example to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Example1Variant {
    /// `δ(t) = (5 sin² t, t)`: admissible, all solutions tend to the origin.
    Fig1,
    /// `δ(t) = (5 sin² t, 4t³)`: borderline, solutions tend to `(0, 4)`.
    Fig2,
    /// `δ(t) = (5 sin² t, c t³)`.
    Cubic(f64),
}

impl Example1Variant {
    pub fn delta(self, t: f64) -> Vec<f64> {
        let s = t.sin();
        let second = match self {
            Example1Variant::Fig1 => t,
            Example1Variant::Fig2 => 4.0 * t.powi(3),
            Example1Variant::Cubic(c) => c * t.powi(3),
        };
        vec![5.0 * s * s, second]
    }

    /// The point every solution approaches.
    pub fn limit(self) -> [f64; 2] {
        match self {
            Example1Variant::Fig1 => [0.0, 0.0],
            Example1Variant::Fig2 => [0.0, 4.0],
            Example1Variant::Cubic(c) => [0.0, c],
        }
    }
}

/// The example with `b = 5`, `φ(t) = −6 − t³` and the chosen perturbation.
pub fn example1_standard(variant: Example1Variant) -> SystemSpec {
    example1(EXAMPLE1_B, example1_phi, move |t| variant.delta(t))
}

/// Closed-form Euclidean logarithmic norm of the example's Jacobian:
/// `φ + ½(cos x₁ + cos x₂ + √ϑ) + 1` with `ϑ = b² + (cos x₁ − cos x₂ − 2)²`.
pub fn example1_log_norm_l2(b: f64, phi_t: f64, x: &[f64]) -> f64 {
    let (c1, c2) = (x[0].cos(), x[1].cos());
    let vartheta = b * b + (c1 - c2 - 2.0).powi(2);
    phi_t + 0.5 * (c1 + c2 + vartheta.sqrt()) + 1.0
}

/// `ẋ = −x` in one dimension.
pub fn scalar_decay() -> SystemSpec {
    SystemSpec::linear(Matrix::from_rows(&[&[-1.0]]))
}

/// `ẋ = +x` in one dimension.
pub fn scalar_growth() -> SystemSpec {
    SystemSpec::linear(Matrix::from_rows(&[&[1.0]]))
}

/// `ẋ₁ = x₂, ẋ₂ = −x₁`.
pub fn harmonic_oscillator() -> SystemSpec {
    SystemSpec::linear(Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::NormKind;
    use crate::lognorm::log_norm;

    #[test]
    fn closed_form_measure_matches_eigen_route() {
        let sys = example1_standard(Example1Variant::Fig1);
        for &(x1, x2, t) in &[(0.0, 0.0, 0.0), (1.3, -2.2, 0.7), (3.1, 0.4, 1.9), (-9.0, 7.5, 0.1)] {
            let j = sys.jacobian(&[x1, x2], t).unwrap();
            let via_eig = log_norm(&j, &NormKind::L2).unwrap();
            let closed = example1_log_norm_l2(EXAMPLE1_B, example1_phi(t), &[x1, x2]);
            assert!((via_eig - closed).abs() < 1e-12, "{via_eig} vs {closed}");
        }
    }

    #[test]
    fn variant_limits() {
        assert_eq!(Example1Variant::Fig2.limit(), [0.0, 4.0]);
        assert_eq!(Example1Variant::Fig2.delta(1.0)[1], 4.0);
        assert_eq!(Example1Variant::Fig1.delta(3.0)[1], 3.0);
    }
}
