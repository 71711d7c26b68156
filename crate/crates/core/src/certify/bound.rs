use crate::error::{Error, Result};
use crate::integrate::{cumulative_simpson, solve, IntegratorConfig};
use crate::linalg::{vec_norm, NormKind};
use crate::system::SystemSpec;

/// Worst excess of one pair's distance over the exponential envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub initial_distance: f64,
    pub final_distance: f64,
    /// `max_t |x(t) − x*(t)| − β(t) |x(t0) − x*(t0)|`.
    pub worst_violation: f64,
    pub worst_time: f64,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct GisBoundReport {
    pub kind: NormKind,
    pub pair_count: usize,
    pub pairs: Vec<PairOutcome>,
    pub worst_violation: f64,
    /// `1e-6 + 10 ×` the largest integrator error estimate over the pairs.
    pub tolerance: f64,
    /// Pairs whose violation exceeded the tolerance.
    pub violations: usize,
    pub passed: bool,
}

/// Checks `|x(t) − x*(t)| ≤ e^{−α₀(t−t0)} |x(t0) − x*(t0)|` along each pair.
pub fn verify_incremental_bound(
    sys: &SystemSpec,
    initial_pairs: &[(Vec<f64>, Vec<f64>)],
    t0: f64,
    tf: f64,
    alpha0: f64,
    kind: &NormKind,
    cfg: &IntegratorConfig,
) -> Result<GisBoundReport> {
    if !(alpha0 > 0.0) || !alpha0.is_finite() {
        return Err(Error::InvalidRate { t: t0, value: alpha0 });
    }
    check_pairs(sys, initial_pairs, kind)?;
    let mut reports = Vec::with_capacity(initial_pairs.len());
    for (x, x_star) in initial_pairs {
        let (times, distances, err) = pair_distances(sys, x, x_star, t0, tf, kind, cfg)?;
        let decay: Vec<f64> = times.iter().map(|t| (-alpha0 * (t - t0)).exp()).collect();
        reports.push((outcome(&times, &distances, &decay), err));
    }
    Ok(assemble(kind, reports))
}

/// As [`verify_incremental_bound`] with the non-uniform envelope
/// `exp(−∫_{t0}^{t} α(τ) dτ)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_incremental_bound_with_rate(
    sys: &SystemSpec,
    initial_pairs: &[(Vec<f64>, Vec<f64>)],
    t0: f64,
    tf: f64,
    alpha_fn: impl Fn(f64) -> f64,
    kind: &NormKind,
    cfg: &IntegratorConfig,
) -> Result<GisBoundReport> {
    check_pairs(sys, initial_pairs, kind)?;
    let rate = |t: f64| {
        let v = alpha_fn(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidRate { t, value: v })
        }
    };
    let mut reports = Vec::with_capacity(initial_pairs.len());
    for (x, x_star) in initial_pairs {
        let (times, distances, err) = pair_distances(sys, x, x_star, t0, tf, kind, cfg)?;
        let at_nodes = times.iter().map(|&t| rate(t)).collect::<Result<Vec<_>>>()?;
        let integral = cumulative_simpson(&times, &at_nodes, rate)?;
        let decay: Vec<f64> = integral.iter().map(|i| (-i).exp()).collect();
        reports.push((outcome(&times, &distances, &decay), err));
    }
    Ok(assemble(kind, reports))
}

fn check_pairs(sys: &SystemSpec, pairs: &[(Vec<f64>, Vec<f64>)], kind: &NormKind) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("need at least one initial pair".into()));
    }
    kind.check_dim(sys.dim())?;
    for (a, b) in pairs {
        for v in [a, b] {
            if v.len() != sys.dim() {
                return Err(Error::DimensionMismatch { expected: sys.dim(), got: v.len() });
            }
        }
    }
    Ok(())
}

/// Integrates the pair as one stacked system so both share a time grid.
fn pair_distances(
    sys: &SystemSpec,
    x: &[f64],
    x_star: &[f64],
    t0: f64,
    tf: f64,
    kind: &NormKind,
    cfg: &IntegratorConfig,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if t0 < sys.t0() {
        return Err(Error::InvalidInput(format!("start time {t0} precedes t0 = {}", sys.t0())));
    }
    let n = sys.dim();
    let y0: Vec<f64> = x.iter().chain(x_star).copied().collect();
    let rhs = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let mut out = sys.rhs_unchecked_time(&y[..n], t)?.into_inner();
        out.extend_from_slice(&sys.rhs_unchecked_time(&y[n..], t)?);
        Ok(out)
    };
    let sol = solve(rhs, &y0, t0, tf, cfg)?;
    let mut distances = Vec::with_capacity(sol.times.len());
    let mut diff = vec![0.0; n];
    for y in &sol.states {
        for i in 0..n {
            diff[i] = y[i] - y[n + i];
        }
        distances.push(vec_norm(&diff, kind)?);
    }
    Ok((sol.times, distances, sol.error_estimate.unwrap_or(0.0)))
}

fn outcome(times: &[f64], distances: &[f64], decay: &[f64]) -> PairOutcome {
    let d0 = distances[0];
    let (worst_violation, worst_time) = times
        .iter()
        .zip(distances.iter().zip(decay))
        .map(|(t, (d, b))| (d - b * d0, *t))
        .fold((f64::NEG_INFINITY, times[0]), |acc, v| if v.0 > acc.0 { v } else { acc });
    PairOutcome {
        initial_distance: d0,
        final_distance: *distances.last().unwrap(),
        worst_violation,
        worst_time,
        samples: times.len(),
    }
}

fn assemble(kind: &NormKind, reports: Vec<(PairOutcome, f64)>) -> GisBoundReport {
    let max_err = reports.iter().map(|r| r.1).fold(0.0, f64::max);
    let tolerance = 1e-6 + 10.0 * max_err;
    let pairs: Vec<PairOutcome> = reports.into_iter().map(|r| r.0).collect();
    let worst_violation = pairs.iter().map(|p| p.worst_violation).fold(f64::NEG_INFINITY, f64::max);
    let violations = pairs.iter().filter(|p| p.worst_violation > tolerance).count();
    GisBoundReport {
        kind: kind.clone(),
        pair_count: pairs.len(),
        pairs,
        worst_violation,
        tolerance,
        violations,
        passed: worst_violation <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::builtin::{example1_standard, scalar_decay, scalar_growth, Example1Variant};

    #[test]
    fn decay_is_the_equality_case() {
        let pairs = vec![(vec![1.0], vec![2.0])];
        let r = verify_incremental_bound(
            &scalar_decay(),
            &pairs,
            0.0,
            5.0,
            1.0,
            &NormKind::L2,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(r.passed);
        assert!(r.worst_violation.abs() < 1e-8, "{}", r.worst_violation);
        assert!(r.worst_violation >= -1e-8);
    }

    #[test]
    fn growth_violates_immediately() {
        let pairs = vec![(vec![1.0], vec![2.0])];
        let r = verify_incremental_bound(
            &scalar_growth(),
            &pairs,
            0.0,
            2.0,
            0.5,
            &NormKind::L2,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(!r.passed);
        assert_eq!(r.violations, 1);
        assert!(r.worst_violation > 1.0);
    }

    #[test]
    fn example1_pairs_with_time_varying_rate() {
        let sys = example1_standard(Example1Variant::Fig1);
        let pairs = vec![(vec![-2.0, 5.0], vec![3.0, -4.0]), (vec![0.5, 0.5], vec![-0.5, 1.0])];
        let cfg = IntegratorConfig::default();
        let uniform = verify_incremental_bound(&sys, &pairs, 0.0, 5.0, 0.5, &NormKind::L2, &cfg).unwrap();
        assert!(uniform.passed);
        let varying =
            verify_incremental_bound_with_rate(&sys, &pairs, 0.0, 5.0, |t| 0.5 + t.powi(3), &NormKind::L2, &cfg)
                .unwrap();
        assert!(varying.passed, "{}", varying.worst_violation);
    }

    #[test]
    fn blow_up_is_an_error() {
        let sys = SystemSpec::new(1, |x, _| vec![x[0] * x[0]]);
        let pairs = vec![(vec![1.0], vec![2.0])];
        let err = verify_incremental_bound(&sys, &pairs, 0.0, 2.0, 0.5, &NormKind::L2, &IntegratorConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::Diverged { .. } | Error::StepUnderflow { .. }), "{err:?}");
    }

    #[test]
    fn input_validation() {
        let cfg = IntegratorConfig::default();
        assert!(verify_incremental_bound(&scalar_decay(), &[], 0.0, 1.0, 1.0, &NormKind::L2, &cfg).is_err());
        let pairs = vec![(vec![1.0], vec![2.0])];
        assert!(verify_incremental_bound(&scalar_decay(), &pairs, 0.0, 1.0, 0.0, &NormKind::L2, &cfg).is_err());
        let bad = vec![(vec![1.0, 0.0], vec![2.0])];
        assert!(verify_incremental_bound(&scalar_decay(), &bad, 0.0, 1.0, 1.0, &NormKind::L2, &cfg).is_err());
    }
}
