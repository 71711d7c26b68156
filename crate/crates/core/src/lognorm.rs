//! Logarithmic norms (matrix measures).
//!
//! `μ[A] = lim_{θ→0⁺} (‖I + θA‖ − 1) / θ` depends on the vector norm. Three
//! independent routes are provided:
//!
//! * [`log_norm`]: closed forms for every [`NormKind`];
//! * [`log_norm_limit_estimate`]: the one-sided difference quotient evaluated
//!   on a decreasing θ sequence and Richardson-extrapolated to θ = 0;
//! * [`mu_p_quadratic_form`]: for weighted Euclidean norms, the largest
//!   generalized eigenvalue of `½(PA + AᵀP) v = λ P v`, reduced through a
//!   Cholesky congruence.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, induced_matrix_norm, lower_triangular_inverse, sym_eig_max, Matrix, NormKind};

/// How a logarithmic norm value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogNormMethod {
    ClosedForm,
    LimitEstimate,
    QuadraticForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogNormResult {
    pub value: f64,
    pub kind: NormKind,
    pub method: LogNormMethod,
}

/// Closed-form `μ[A]` for the given norm.
///
/// * L1: `max_j (a_jj + Σ_{i≠j} |a_ij|)`
/// * L∞: `max_i (a_ii + Σ_{j≠i} |a_ij|)`
/// * L2: `½ λ_max(A + Aᵀ)`
/// * weighted: `½ λ_max(Â + Âᵀ)` with `Â = P₀ A P₀⁻¹`
pub fn log_norm(a: &Matrix, kind: &NormKind) -> Result<f64> {
    let n = a.require_square()?;
    kind.check_dim(n)?;
    match kind {
        NormKind::L1 => Ok((0..n)
            .map(|j| a[(j, j)] + (0..n).filter(|&i| i != j).map(|i| a[(i, j)].abs()).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)),
        NormKind::LInf => Ok((0..n)
            .map(|i| a[(i, i)] + (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)),
        NormKind::L2 => Ok(0.5 * sym_eig_max(&a.sym_part_doubled()?)?),
        NormKind::Weighted(w) => Ok(0.5 * sym_eig_max(&w.similarity(a)?.sym_part_doubled()?)?),
    }
}

pub fn log_norm_result(a: &Matrix, kind: &NormKind) -> Result<LogNormResult> {
    Ok(LogNormResult { value: log_norm(a, kind)?, kind: kind.clone(), method: LogNormMethod::ClosedForm })
}

/// `{1e-1, 1e-2, …, 1e-7}`. Below ~1e-8 cancellation in `‖I+θA‖ − 1` dominates.
pub fn default_theta_sequence() -> Vec<f64> {
    (1..=7).map(|k| 10f64.powi(-k)).collect()
}

/// Diagnostics of the difference-quotient estimate of `μ[A]`.
#[derive(Debug, Clone)]
pub struct LimitEstimate {
    /// The selected extrapolated value.
    pub value: f64,
    /// `(θ, (‖I+θA‖ − 1)/θ)` for each θ.
    pub quotients: Vec<(f64, f64)>,
    /// Two-point Richardson values from consecutive quotient pairs.
    pub extrapolated: Vec<f64>,
    /// `|R_k − R_{k−1}|` between consecutive extrapolated values.
    pub successive_differences: Vec<f64>,
    /// Whether the raw quotients move monotonically as θ shrinks. This is
    /// evidence that the limit exists; it is recorded, never asserted.
    pub monotone_quotients: bool,
}

/// Estimates `μ[A]` straight from its limit definition.
///
/// The quotient has an error expansion `c₁θ + c₂θ² + …`, so each consecutive
/// pair `(θ_k, θ_{k+1})` is combined into the two-point Richardson value
/// `(r q_{k+1} − q_k)/(r − 1)` with `r = θ_k/θ_{k+1}`. Truncation error
/// shrinks with θ while cancellation grows like `ε/θ`; the value returned is
/// the extrapolant that moved least from its predecessor.
pub fn log_norm_limit_estimate(a: &Matrix, kind: &NormKind, thetas: &[f64]) -> Result<LimitEstimate> {
    let n = a.require_square()?;
    kind.check_dim(n)?;
    if thetas.is_empty() {
        return Err(Error::InvalidInput("theta sequence is empty".into()));
    }
    if thetas.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput("theta values must be positive and finite".into()));
    }
    if thetas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("theta sequence must be strictly decreasing".into()));
    }

    let quotients = thetas
        .iter()
        .map(|&theta| {
            let shifted = a.scale(theta).shift_diagonal(1.0)?;
            Ok((theta, (induced_matrix_norm(&shifted, kind)? - 1.0) / theta))
        })
        .collect::<Result<Vec<_>>>()?;

    let diffs: Vec<f64> = quotients.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let monotone_quotients = diffs.iter().all(|d| *d <= 0.0) || diffs.iter().all(|d| *d >= 0.0);

    if quotients.len() == 1 {
        let value = quotients[0].1;
        return Ok(LimitEstimate {
            value,
            quotients,
            extrapolated: vec![value],
            successive_differences: Vec::new(),
            monotone_quotients,
        });
    }

    let extrapolated: Vec<f64> = quotients
        .windows(2)
        .map(|w| {
            let (t0, q0) = w[0];
            let (t1, q1) = w[1];
            let r = t0 / t1;
            (r * q1 - q0) / (r - 1.0)
        })
        .collect();
    let successive_differences: Vec<f64> = extrapolated.windows(2).map(|w| (w[1] - w[0]).abs()).collect();

    let value = match successive_differences.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) {
        Some((k, _)) => extrapolated[k + 1],
        None => extrapolated[0],
    };

    Ok(LimitEstimate { value, quotients, extrapolated, successive_differences, monotone_quotients })
}

/// `μ_P[A] = max_{x≠0} xᵀ(PA + AᵀP)x / (2 xᵀPx)`.
///
/// The generalized symmetric eigenproblem `M v = λ P v` with
/// `M = ½(PA + AᵀP)` is reduced with `P = LLᵀ` to the ordinary problem for
/// `L⁻¹ M L⁻ᵀ`.
pub fn mu_p_quadratic_form(a: &Matrix, p: &Matrix) -> Result<f64> {
    let n = a.require_square()?;
    if p.rows() != n || p.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.rows() });
    }
    let l = cholesky(p)?;
    let l_inv = lower_triangular_inverse(&l)?;
    let pa = p.matmul(a)?;
    let m = pa.add(&pa.transpose())?.scale(0.5);
    let reduced = l_inv.matmul(&m)?.matmul(&l_inv.transpose())?;
    // Restore exact symmetry lost to roundoff in the triple product.
    let reduced = reduced.add(&reduced.transpose())?.scale(0.5);
    sym_eig_max(&reduced)
}
