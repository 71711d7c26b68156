use crate::error::{Error, Result};
use crate::linalg::{vec_norm, NormKind};
use crate::system::{QuadratureRule, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioVerdict {
    RatioVanishes,
    RatioPersists,
    Inconclusive,
}

impl RatioVerdict {
    pub fn label(self) -> &'static str {
        match self {
            RatioVerdict::RatioVanishes => "ratio_vanishes",
            RatioVerdict::RatioPersists => "ratio_persists",
            RatioVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Thresholds of the finite-horizon classifier for `|f(0,t) + δ(t)| / α(t) → 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct A2Settings {
    /// Vanishing needs a fitted slope below this.
    pub vanish_slope: f64,
    /// and a final ratio below `vanish_drop ×` the initial one.
    pub vanish_drop: f64,
    /// Persisting needs `|slope|` at most this.
    pub persist_slope: f64,
    /// and a final ratio above this.
    pub persist_level: f64,
    /// Half-width, in samples, of the running maximum applied before fitting.
    pub smoothing: usize,
    pub kind: NormKind,
}

impl Default for A2Settings {
    fn default() -> Self {
        Self {
            vanish_slope: -0.1,
            vanish_drop: 0.1,
            persist_slope: 0.05,
            persist_level: 1e-3,
            smoothing: 3,
            kind: NormKind::L2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// `(t, |f(0,t) + δ(t)| / α(t))` on a log-spaced grid.
    pub ratio_samples: Vec<(f64, f64)>,
    /// Running maximum of the ratios; oscillating perturbations touch zero.
    pub envelope: Vec<f64>,
    /// Least-squares slope of `log envelope` against `log t` over the last decade.
    pub trend_slope: f64,
    pub initial_ratio: f64,
    pub final_ratio: f64,
    pub verdict: RatioVerdict,
    pub settings: A2Settings,
}

/// Samples the drift-to-rate ratio on `n_samples` log-spaced times ending at
/// `t_hi` and classifies its trend. When `t_lo ≤ 0` the grid starts at
/// `t_hi / 1000`.
pub fn check_a2_ratio(
    sys: &SystemSpec,
    alpha_fn: impl Fn(f64) -> f64,
    t_lo: f64,
    t_hi: f64,
    n_samples: usize,
    settings: &A2Settings,
) -> Result<ConvergenceReport> {
    if n_samples < 3 {
        return Err(Error::InvalidInput("the ratio check needs at least 3 samples".into()));
    }
    if !(t_hi > 0.0) || !(t_lo < t_hi) || !t_hi.is_finite() {
        return Err(Error::InvalidInput(format!("invalid ratio window [{t_lo}, {t_hi}]")));
    }
    settings.kind.check_dim(sys.dim())?;
    let start = if t_lo > 0.0 { t_lo } else { t_hi / 1000.0 };
    let (ls, le) = (start.ln(), t_hi.ln());
    let origin = vec![0.0; sys.dim()];
    let mut ratio_samples = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let t = if k + 1 == n_samples { t_hi } else { (ls + (le - ls) * k as f64 / (n_samples - 1) as f64).exp() };
        let alpha = alpha_fn(t);
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidRate { t, value: alpha });
        }
        let drift = sys.eval_rhs(&origin, t)?;
        ratio_samples.push((t, vec_norm(&drift, &settings.kind)? / alpha));
    }

    let w = settings.smoothing;
    let envelope: Vec<f64> = (0..n_samples)
        .map(|k| {
            let lo = k.saturating_sub(w);
            let hi = (k + w).min(n_samples - 1);
            ratio_samples[lo..=hi].iter().map(|s| s.1).fold(0.0, f64::max)
        })
        .collect();

    // The last decade, or the upper half in log scale for narrower windows.
    let tail_start = if start < t_hi / 10.0 { t_hi / 10.0 } else { (start * t_hi).sqrt() };
    let tail: Vec<(f64, f64)> = ratio_samples
        .iter()
        .zip(&envelope)
        .filter(|((t, _), _)| *t >= tail_start)
        .map(|((t, _), e)| (*t, *e))
        .collect();
    let initial_ratio = envelope[0];
    let final_ratio = envelope[n_samples - 1];

    let (trend_slope, verdict) = if tail.iter().all(|(_, e)| *e == 0.0) {
        (f64::NEG_INFINITY, RatioVerdict::RatioVanishes)
    } else {
        let pts: Vec<(f64, f64)> = tail.iter().filter(|(_, e)| *e > 0.0).map(|(t, e)| (t.ln(), e.ln())).collect();
        match log_log_slope(&pts) {
            None => (f64::NAN, RatioVerdict::Inconclusive),
            Some(slope) => {
                let verdict = if slope < settings.vanish_slope && final_ratio < settings.vanish_drop * initial_ratio {
                    RatioVerdict::RatioVanishes
                } else if slope.abs() <= settings.persist_slope && final_ratio > settings.persist_level {
                    RatioVerdict::RatioPersists
                } else {
                    RatioVerdict::Inconclusive
                };
                (slope, verdict)
            }
        }
    };
    Ok(ConvergenceReport {
        ratio_samples,
        envelope,
        trend_slope,
        initial_ratio,
        final_ratio,
        verdict,
        settings: settings.clone(),
    })
}

fn log_log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxedVerdict {
    DivergentIntegral,
    ConvergentIntegral,
    Inconclusive,
}

impl RelaxedVerdict {
    pub fn label(self) -> &'static str {
        match self {
            RelaxedVerdict::DivergentIntegral => "divergent_integral",
            RelaxedVerdict::ConvergentIntegral => "convergent_integral",
            RelaxedVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Partial integrals of `α` at doubling horizons. This is a finite-horizon
/// heuristic: no finite computation decides whether `∫ α = ∞`.
#[derive(Debug, Clone)]
pub struct RelaxedReport {
    pub horizons: Vec<f64>,
    /// `∫_{t0}^{T_k} α`.
    pub partial_integrals: Vec<f64>,
    /// `∫_{T_{k−1}}^{T_k} α`.
    pub increments: Vec<f64>,
    pub verdict: RelaxedVerdict,
    pub note: &'static str,
}

pub const RELAXED_NOTE: &str = "finite-horizon heuristic; divergence of the integral is not decidable numerically";

const DOUBLINGS: usize = 10;
const PIECES_PER_SEGMENT: usize = 8;
/// Divergent when the last doubling adds more than this share of the total.
const GROWTH_SHARE: f64 = 0.1;
/// Convergent when the last three increment ratios are at most this.
const GEOMETRIC_RATIO: f64 = 0.75;

/// Classifies `∫_{t0}^{∞} α(τ) dτ` from partial integrals at
/// `T_k = t0 + (horizon − t0) / 2^{K−k}`, `k = 0..K`.
pub fn check_relaxed_condition(alpha_fn: impl Fn(f64) -> f64, t0: f64, horizon: f64) -> Result<RelaxedReport> {
    if !(horizon > t0) || !t0.is_finite() || !horizon.is_finite() {
        return Err(Error::InvalidInput(format!("need finite t0 < horizon, got [{t0}, {horizon}]")));
    }
    let rule = QuadratureRule::gauss_legendre(16)?;
    let span = horizon - t0;
    let horizons: Vec<f64> = (0..=DOUBLINGS).map(|k| t0 + span / 2f64.powi((DOUBLINGS - k) as i32)).collect();

    let bad = std::cell::Cell::new(None);
    let integrate = |a: f64, b: f64| {
        let h = (b - a) / PIECES_PER_SEGMENT as f64;
        (0..PIECES_PER_SEGMENT)
            .map(|p| {
                rule.integrate_on(a + p as f64 * h, a + (p + 1) as f64 * h, |t| {
                    let v = alpha_fn(t);
                    if !v.is_finite() && bad.get().is_none() {
                        bad.set(Some((t, v)));
                    }
                    v
                })
            })
            .sum::<f64>()
    };
    let mut partial_integrals = vec![integrate(t0, horizons[0])];
    let mut increments = Vec::with_capacity(DOUBLINGS);
    for k in 1..=DOUBLINGS {
        let d = integrate(horizons[k - 1], horizons[k]);
        increments.push(d);
        partial_integrals.push(partial_integrals[k - 1] + d);
    }
    if let Some((t, value)) = bad.get() {
        return Err(Error::InvalidRate { t, value });
    }

    let total = partial_integrals[DOUBLINGS];
    let last = increments[DOUBLINGS - 1];
    let shrinking =
        increments[DOUBLINGS - 4..].windows(2).all(|w| w[0] > 0.0 && w[1] >= 0.0 && w[1] / w[0] <= GEOMETRIC_RATIO);
    let verdict = if last > GROWTH_SHARE * total.abs() {
        RelaxedVerdict::DivergentIntegral
    } else if shrinking {
        RelaxedVerdict::ConvergentIntegral
    } else {
        RelaxedVerdict::Inconclusive
    };
    Ok(RelaxedReport { horizons, partial_integrals, increments, verdict, note: RELAXED_NOTE })
}
