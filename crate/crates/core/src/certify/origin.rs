use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::linalg::{vec_norm, NormKind};

/// Fewest tail samples accepted as evidence.
const MIN_TAIL_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OriginVerdict {
    Converged,
    NotConverged,
    InsufficientData,
}

impl OriginVerdict {
    pub fn label(self) -> &'static str {
        match self {
            OriginVerdict::Converged => "converged",
            OriginVerdict::NotConverged => "not_converged",
            OriginVerdict::InsufficientData => "insufficient_data",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OriginReport {
    pub target: Vec<f64>,
    /// Largest `|x(t) − target|` over the tail window.
    pub tail_max: f64,
    /// Largest distance over a window of the same width centred mid-trajectory.
    pub mid_max: f64,
    pub tail_start: f64,
    pub tail_samples: usize,
    pub tol: f64,
    pub verdict: OriginVerdict,
}

impl OriginReport {
    pub fn converged(&self) -> bool {
        self.verdict == OriginVerdict::Converged
    }
}

/// Convergence to the origin; see [`verify_convergence_to`].
pub fn verify_origin_convergence(
    traj: &Trajectory,
    kind: &NormKind,
    tail_fraction: f64,
    tol: f64,
) -> Result<OriginReport> {
    let dim = traj.dim().unwrap_or(1);
    verify_convergence_to(traj, &vec![0.0; dim], kind, tail_fraction, tol)
}

/// Converged when the distance to `target` stays below `tol` over the final
/// `tail_fraction` of the time span and the tail maximum is at most half the
/// maximum over an equally wide window around the midpoint.
pub fn verify_convergence_to(
    traj: &Trajectory,
    target: &[f64],
    kind: &NormKind,
    tail_fraction: f64,
    tol: f64,
) -> Result<OriginReport> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidInput(format!("tail fraction {tail_fraction} must lie in (0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    let mut report = OriginReport {
        target: target.to_vec(),
        tail_max: f64::NAN,
        mid_max: f64::NAN,
        tail_start: f64::NAN,
        tail_samples: 0,
        tol,
        verdict: OriginVerdict::InsufficientData,
    };
    let (Some(dim), Some((t_end, _))) = (traj.dim(), traj.last()) else {
        return Ok(report);
    };
    if dim != target.len() {
        return Err(Error::DimensionMismatch { expected: dim, got: target.len() });
    }
    kind.check_dim(dim)?;
    let t_start = traj.times()[0];
    let width = tail_fraction * (t_end - t_start);
    let tail_start = t_end - width;
    let mid = 0.5 * (t_start + t_end);
    let (mid_lo, mid_hi) = (mid - 0.5 * width, mid + 0.5 * width);

    let mut diff = vec![0.0; dim];
    let (mut tail_max, mut mid_max, mut tail_samples) = (0.0f64, 0.0f64, 0);
    for (t, x) in traj.times().iter().zip(traj.states()) {
        for i in 0..dim {
            diff[i] = x[i] - target[i];
        }
        let d = vec_norm(&diff, kind)?;
        if *t >= tail_start {
            tail_max = tail_max.max(d);
            tail_samples += 1;
        }
        if (mid_lo..=mid_hi).contains(t) {
            mid_max = mid_max.max(d);
        }
    }
    report.tail_max = tail_max;
    report.mid_max = mid_max;
    report.tail_start = tail_start;
    report.tail_samples = tail_samples;
    report.verdict = if tail_samples < MIN_TAIL_SAMPLES {
        OriginVerdict::InsufficientData
    } else if tail_max == 0.0 || (tail_max < tol && tail_max <= 0.5 * mid_max) {
        OriginVerdict::Converged
    } else {
        OriginVerdict::NotConverged
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate, IntegratorConfig};
    use crate::linalg::Vector;
    use crate::system::builtin::{example1_standard, harmonic_oscillator, Example1Variant, EXAMPLE1_TF, EXAMPLE1_X0};

    #[test]
    fn constant_zero_trajectory_converges() {
        let times: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let states = times.iter().map(|_| Vector::zeros(2)).collect();
        let traj = Trajectory::new(times, states).unwrap();
        let r = verify_origin_convergence(&traj, &NormKind::L2, 0.25, 1e-3).unwrap();
        assert!(r.converged());
        assert_eq!(r.tail_max, 0.0);
    }

    #[test]
    fn example1_fig1_converges_to_origin() {
        let sys = example1_standard(Example1Variant::Fig1);
        let traj = integrate(&sys, &EXAMPLE1_X0, 0.0, EXAMPLE1_TF, &IntegratorConfig::default()).unwrap();
        let r = verify_origin_convergence(&traj, &NormKind::LInf, 0.25, 0.01).unwrap();
        assert!(r.converged(), "{r:?}");
    }

    #[test]
    fn example1_fig2_converges_to_shifted_limit() {
        let sys = example1_standard(Example1Variant::Fig2);
        let traj = integrate(&sys, &EXAMPLE1_X0, 0.0, EXAMPLE1_TF, &IntegratorConfig::default()).unwrap();
        let to_origin = verify_origin_convergence(&traj, &NormKind::LInf, 0.25, 0.05).unwrap();
        assert_eq!(to_origin.verdict, OriginVerdict::NotConverged);
        let shifted = verify_convergence_to(&traj, &[0.0, 4.0], &NormKind::LInf, 0.25, 0.05).unwrap();
        assert!(shifted.converged(), "{shifted:?}");
    }

    #[test]
    fn oscillation_does_not_converge() {
        let traj = integrate(&harmonic_oscillator(), &[1.0, 0.0], 0.0, 20.0, &IntegratorConfig::default()).unwrap();
        let r = verify_origin_convergence(&traj, &NormKind::L2, 0.25, 0.01).unwrap();
        assert_eq!(r.verdict, OriginVerdict::NotConverged);
    }

    #[test]
    fn short_tail_is_insufficient() {
        let traj = Trajectory::new(vec![0.0, 1.0], vec![Vector::zeros(1), Vector::zeros(1)]).unwrap();
        let r = verify_origin_convergence(&traj, &NormKind::L2, 0.5, 1e-3).unwrap();
        assert_eq!(r.verdict, OriginVerdict::InsufficientData);
        let empty = Trajectory::new(vec![], vec![]).unwrap();
        assert_eq!(
            verify_origin_convergence(&empty, &NormKind::L2, 0.5, 1e-3).unwrap().verdict,
            OriginVerdict::InsufficientData
        );
    }
}
