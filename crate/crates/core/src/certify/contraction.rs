use rayon::prelude::*;

use super::{Domain, SamplingPlan};
use crate::error::Result;
use crate::linalg::NormKind;
use crate::lognorm::log_norm;
use crate::system::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateVerdict {
    /// `μ < 0` at every sample of the domain. Not a global statement.
    CertifiedOnDomain,
    NotCertified,
}

/// Largest sampled `μ[J_x f(x, t)]` on one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSup {
    pub t: f64,
    pub mu_sup: f64,
    pub argmax: Vec<f64>,
}

/// Sampled evidence for `μ[J_x f(x,t)] ≤ −α(t) ≤ −α₀ < 0` on a domain.
#[derive(Debug, Clone)]
pub struct ContractionCertificate {
    pub kind: NormKind,
    pub mu_sup: f64,
    /// `(x, t)` where `mu_sup` was attained.
    pub argmax: (Vec<f64>, f64),
    /// `−mu_sup` when certified.
    pub alpha0_estimate: Option<f64>,
    /// Per-slice suprema; `−mu_sup(t)` is an empirical `α(t)`.
    pub alpha_samples: Vec<SliceSup>,
    pub samples: usize,
    pub domain: Domain,
    pub plan: SamplingPlan,
    pub verdict: CertificateVerdict,
}

/// How well a claimed rate `α(t)` is dominated by the sampled measure.
#[derive(Debug, Clone)]
pub struct DominanceReport {
    /// `max_t (μ_sup(t) + α(t))`; non-positive when `μ ≤ −α(t)` held everywhere.
    pub worst_margin: f64,
    pub worst_time: f64,
    pub holds: bool,
}

impl ContractionCertificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == CertificateVerdict::CertifiedOnDomain
    }

    /// Checks `μ(x, t) ≤ −α(t)` at every sample, slice by slice.
    pub fn check_rate_dominance(&self, alpha_fn: impl Fn(f64) -> f64) -> DominanceReport {
        let (worst_margin, worst_time) = self
            .alpha_samples
            .iter()
            .map(|s| (s.mu_sup + alpha_fn(s.t), s.t))
            .fold((f64::NEG_INFINITY, f64::NAN), |acc, m| if m.0 > acc.0 { m } else { acc });
        DominanceReport { worst_margin, worst_time, holds: worst_margin <= 0.0 }
    }
}

/// Samples `μ[J_x f(x, t)]` over the plan's points. The perturbation does not
/// enter: it is independent of `x`.
pub fn estimate_contraction_rate(
    sys: &SystemSpec,
    domain: &Domain,
    kind: &NormKind,
    plan: &SamplingPlan,
) -> Result<ContractionCertificate> {
    kind.check_dim(sys.dim())?;
    if domain.dim() != sys.dim() {
        return Err(crate::Error::DimensionMismatch { expected: sys.dim(), got: domain.dim() });
    }
    let slices = plan.points(domain)?;
    let mut alpha_samples = Vec::with_capacity(slices.len());
    let mut samples = 0;
    for (t, points) in &slices {
        let values = points.par_iter().map(|x| log_norm(&sys.jacobian(x, *t)?, kind)).collect::<Result<Vec<f64>>>()?;
        samples += values.len();
        let (k, mu) = values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if *v > acc.1 { (k, *v) } else { acc });
        alpha_samples.push(SliceSup { t: *t, mu_sup: mu, argmax: points[k].clone() });
    }
    let best = alpha_samples.iter().fold(&alpha_samples[0], |acc, s| if s.mu_sup > acc.mu_sup { s } else { acc });
    let mu_sup = best.mu_sup;
    let argmax = (best.argmax.clone(), best.t);
    // Strict inequality: a supremum of exactly zero does not certify.
    let verdict = if mu_sup < 0.0 { CertificateVerdict::CertifiedOnDomain } else { CertificateVerdict::NotCertified };
    Ok(ContractionCertificate {
        kind: kind.clone(),
        mu_sup,
        argmax,
        alpha0_estimate: (mu_sup < 0.0).then_some(-mu_sup),
        alpha_samples,
        samples,
        domain: domain.clone(),
        plan: plan.clone(),
        verdict,
    })
}
