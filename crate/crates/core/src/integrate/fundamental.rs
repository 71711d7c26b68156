use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{cumulative_simpson, solve, IntegratorConfig};
use crate::error::{Error, Result};
use crate::linalg::{induced_matrix_norm, invert, vec_norm, Matrix, NormKind};
use crate::lognorm::log_norm;

/// Transition matrices beyond this 1-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Fundamental matrix `Φ(t)` of `Φ̇ = A(t)Φ`, `Φ(t0) = I`.
#[derive(Debug, Clone)]
pub struct FundamentalTrajectory {
    pub times: Vec<f64>,
    pub matrices: Vec<Matrix>,
    /// Accumulated local error estimate of the adaptive run.
    pub error_estimate: Option<f64>,
}

/// Solves `Φ̇ = A(t) Φ` from the identity. All `n` columns are stacked into a
/// single state so they share one time grid.
pub fn integrate_fundamental<F>(a_fn: F, t0: f64, tf: f64, cfg: &IntegratorConfig) -> Result<FundamentalTrajectory>
where
    F: Fn(f64) -> Matrix,
{
    let a0 = a_fn(t0);
    let n = a0.require_square()?;
    let phi0 = Matrix::identity(n);
    let rhs = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let a = a_fn(t);
        if a.rows() != n || a.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.rows() });
        }
        let phi = Matrix::new(n, n, y.to_vec()).map_err(|_| Error::Evaluation {
            what: "fundamental matrix",
            t,
            x: y.to_vec(),
        })?;
        Ok(a.matmul(&phi)?.as_slice().to_vec())
    };
    let sol = solve(rhs, phi0.as_slice(), t0, tf, cfg)?;
    let matrices = sol.states.into_iter().map(|y| Matrix::new(n, n, y)).collect::<Result<Vec<_>>>()?;
    Ok(FundamentalTrajectory { times: sol.times, matrices, error_estimate: sol.error_estimate })
}

/// Worst-case slacks of the two-sided transition-matrix and state bounds
///
/// ```text
/// exp(−∫_τ^t μ[−A]) ≤ ‖Φ(t)Φ(τ)⁻¹‖ ≤ exp(∫_τ^t μ[A])
/// |x(t₀)| exp(−∫ μ[−A]) ≤ |x(t)| ≤ |x(t₀)| exp(∫ μ[A])
/// ```
///
/// Slacks are `bound − value` (upper) and `value − bound` (lower), divided by
/// `max(1, bound)`; a slack below `−tolerance` is a violation.
#[derive(Debug, Clone)]
pub struct TransitionBoundReport {
    pub kind: NormKind,
    pub pairs: usize,
    pub worst_upper_slack: f64,
    pub worst_lower_slack: f64,
    pub worst_state_upper_slack: f64,
    pub worst_state_lower_slack: f64,
    /// `1e-6 + 10 ×` the integrator's error estimate.
    pub tolerance: f64,
    pub max_condition: f64,
    pub violations: usize,
    pub passed: bool,
}

/// Checks the transition-matrix and state-norm bounds on `n_pairs` randomly
/// sampled `(τ, t)` grid pairs with `t0 ≤ τ ≤ t ≤ tf`.
pub fn transition_bound_check<F>(
    a_fn: F,
    kind: &NormKind,
    t0: f64,
    tf: f64,
    n_pairs: usize,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<TransitionBoundReport>
where
    F: Fn(f64) -> Matrix,
{
    if n_pairs == 0 {
        return Err(Error::InvalidInput("need at least one (tau, t) pair".into()));
    }
    let fund = integrate_fundamental(&a_fn, t0, tf, cfg)?;
    let n = fund.matrices[0].rows();
    kind.check_dim(n)?;

    let mu_plus = |t: f64| log_norm(&a_fn(t), kind);
    let mu_minus = |t: f64| log_norm(&a_fn(t).scale(-1.0), kind);
    let plus_nodes = fund.times.iter().map(|&t| mu_plus(t)).collect::<Result<Vec<_>>>()?;
    let minus_nodes = fund.times.iter().map(|&t| mu_minus(t)).collect::<Result<Vec<_>>>()?;
    let int_plus = cumulative_simpson(&fund.times, &plus_nodes, mu_plus)?;
    let int_minus = cumulative_simpson(&fund.times, &minus_nodes, mu_minus)?;

    let tolerance = 1e-6 + 10.0 * fund.error_estimate.unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = fund.times.len() - 1;
    let mut report = TransitionBoundReport {
        kind: kind.clone(),
        pairs: n_pairs,
        worst_upper_slack: f64::INFINITY,
        worst_lower_slack: f64::INFINITY,
        worst_state_upper_slack: f64::INFINITY,
        worst_state_lower_slack: f64::INFINITY,
        tolerance,
        max_condition: 1.0,
        violations: 0,
        passed: true,
    };

    for _ in 0..n_pairs {
        let a = rng.random_range(0..=last);
        let b = rng.random_range(0..=last);
        let (i, j) = (a.min(b), a.max(b));

        let inv = invert(&fund.matrices[i], MAX_CONDITION)?;
        report.max_condition = report.max_condition.max(inv.condition);
        let transition = fund.matrices[j].matmul(&inv.inverse)?;
        let norm = induced_matrix_norm(&transition, kind)?;
        let upper = (int_plus[j] - int_plus[i]).exp();
        let lower = (-(int_minus[j] - int_minus[i])).exp();
        let upper_slack = (upper - norm) / upper.max(1.0);
        let lower_slack = (norm - lower) / lower.max(1.0);

        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x0_norm = vec_norm(&x0, kind)?;
        let xt = fund.matrices[j].matvec(&x0)?;
        let xt_norm = vec_norm(&xt, kind)?;
        let state_upper = x0_norm * int_plus[j].exp();
        let state_lower = x0_norm * (-int_minus[j]).exp();
        let state_upper_slack = (state_upper - xt_norm) / state_upper.max(1.0);
        let state_lower_slack = (xt_norm - state_lower) / state_lower.max(1.0);

        report.worst_upper_slack = report.worst_upper_slack.min(upper_slack);
        report.worst_lower_slack = report.worst_lower_slack.min(lower_slack);
        report.worst_state_upper_slack = report.worst_state_upper_slack.min(state_upper_slack);
        report.worst_state_lower_slack = report.worst_state_lower_slack.min(state_lower_slack);
        report.violations += [upper_slack, lower_slack, state_upper_slack, state_lower_slack]
            .iter()
            .filter(|s| **s < -tolerance)
            .count();
    }
    report.passed = report.violations == 0;
    Ok(report)
}
