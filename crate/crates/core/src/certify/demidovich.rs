use rayon::prelude::*;

use super::{Domain, SamplingPlan};
use crate::error::{Error, Result};
use crate::linalg::{sym_eig_max, Matrix, NormKind};
use crate::lognorm::log_norm;
use crate::system::SystemSpec;

/// Values within this band of zero are not counted as sign disagreements.
const SIGN_TIE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DemidovichReport {
    /// Largest eigenvalue of `½(P J + Jᵀ P)` over all samples.
    pub max_eigenvalue: f64,
    /// `(x, t)` where `max_eigenvalue` was attained.
    pub argmax: (Vec<f64>, f64),
    /// Largest `μ_P[J]` over the same samples.
    pub max_weighted_log_norm: f64,
    pub samples: usize,
    /// Samples where the form and `μ_P[J]` disagreed in sign.
    pub sign_disagreements: usize,
    pub consistent: bool,
    pub passed: bool,
}

/// Checks negative definiteness of `½(P J_x f + J_x fᵀ P)` at every sample.
pub fn check_demidovich(
    sys: &SystemSpec,
    p: &Matrix,
    domain: &Domain,
    plan: &SamplingPlan,
) -> Result<DemidovichReport> {
    let kind = NormKind::weighted(p.clone())?;
    let n = sys.dim();
    kind.check_dim(n)?;
    if domain.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: domain.dim() });
    }
    let weight = match &kind {
        NormKind::Weighted(w) => w.weight().clone(),
        _ => unreachable!(),
    };
    let slices = plan.points(domain)?;
    let mut report = DemidovichReport {
        max_eigenvalue: f64::NEG_INFINITY,
        argmax: (Vec::new(), f64::NAN),
        max_weighted_log_norm: f64::NEG_INFINITY,
        samples: 0,
        sign_disagreements: 0,
        consistent: true,
        passed: false,
    };
    for (t, points) in &slices {
        let values = points
            .par_iter()
            .map(|x| -> Result<(f64, f64)> {
                let j = sys.jacobian(x, *t)?;
                let pj = weight.matmul(&j)?;
                let form = pj.sym_part_doubled()?.scale(0.5);
                Ok((sym_eig_max(&form)?, log_norm(&j, &kind)?))
            })
            .collect::<Result<Vec<_>>>()?;
        for (x, (eig, mu)) in points.iter().zip(values) {
            report.samples += 1;
            if eig > report.max_eigenvalue {
                report.max_eigenvalue = eig;
                report.argmax = (x.clone(), *t);
            }
            report.max_weighted_log_norm = report.max_weighted_log_norm.max(mu);
            let tie = eig.abs() < SIGN_TIE || mu.abs() < SIGN_TIE;
            if !tie && (eig < 0.0) != (mu < 0.0) {
                report.sign_disagreements += 1;
            }
        }
    }
    report.consistent = report.sign_disagreements == 0;
    report.passed = report.max_eigenvalue < 0.0;
    Ok(report)
}
