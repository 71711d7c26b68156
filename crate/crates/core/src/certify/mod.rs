//! Certification of incremental stability from logarithmic-norm conditions.
//!
//! The contraction condition `μ[J_x f(x,t)] ≤ −α(t) ≤ −α₀ < 0` quantifies over
//! all of state space and all future time, which no finite procedure can
//! verify. Every check here is therefore scoped to a [`Domain`] and a
//! [`SamplingPlan`], and the resulting certificates say so.

mod bound;
mod contraction;
mod demidovich;
mod origin;
mod rates;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Vector;

pub use bound::{verify_incremental_bound, verify_incremental_bound_with_rate, GisBoundReport, PairOutcome};
pub use contraction::{
    estimate_contraction_rate, CertificateVerdict, ContractionCertificate, DominanceReport, SliceSup,
};
pub use demidovich::{check_demidovich, DemidovichReport};
pub use origin::{verify_convergence_to, verify_origin_convergence, OriginReport, OriginVerdict};
pub use rates::{
    check_a2_ratio, check_relaxed_condition, A2Settings, ConvergenceReport, RatioVerdict, RelaxedReport, RelaxedVerdict,
};

/// Seed used when none is given, so certificates are reproducible.
pub const DEFAULT_SEED: u64 = 42;

/// Axis-aligned box in state space times a time window.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lower: Vector,
    upper: Vector,
    t_lo: f64,
    t_hi: f64,
}

impl Domain {
    pub fn new(lower: Vector, upper: Vector, t_lo: f64, t_hi: f64) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::DimensionMismatch { expected: lower.dim(), got: upper.dim() });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidInput("domain lower bounds must be below upper bounds".into()));
        }
        if !(t_lo < t_hi) || !t_lo.is_finite() || !t_hi.is_finite() {
            return Err(Error::InvalidInput(format!("invalid time window [{t_lo}, {t_hi}]")));
        }
        Ok(Self { lower, upper, t_lo, t_hi })
    }

    /// The box `[lo, hi]ⁿ` over `[t_lo, t_hi]`.
    pub fn cube(dim: usize, lo: f64, hi: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        Self::new(Vector::new(vec![lo; dim])?, Vector::new(vec![hi; dim])?, t_lo, t_hi)
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }

    pub fn t_lo(&self) -> f64 {
        self.t_lo
    }

    pub fn t_hi(&self) -> f64 {
        self.t_hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(self.upper.iter())).all(|(v, (l, u))| l <= v && v <= u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingScheme {
    UniformGrid,
    LatinHypercube,
    UniformRandom,
}

impl SamplingScheme {
    pub fn label(self) -> &'static str {
        match self {
            SamplingScheme::UniformGrid => "uniform_grid",
            SamplingScheme::LatinHypercube => "latin_hypercube",
            SamplingScheme::UniformRandom => "uniform_random",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "uniform_grid" => Some(SamplingScheme::UniformGrid),
            "latin_hypercube" => Some(SamplingScheme::LatinHypercube),
            "uniform_random" => Some(SamplingScheme::UniformRandom),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    /// Spatial samples per time slice. For the grid scheme this is rounded
    /// to `kⁿ` with `k = round(n_space^{1/n})` points per axis.
    pub n_space: usize,
    /// Time slices, evenly spaced over the window (just `t_lo` when 1).
    pub n_time: usize,
    pub scheme: SamplingScheme,
    pub seed: u64,
}

impl SamplingPlan {
    pub fn new(n_space: usize, n_time: usize, scheme: SamplingScheme) -> Result<Self> {
        let plan = Self { n_space, n_time, scheme, seed: DEFAULT_SEED };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_space == 0 || self.n_time == 0 {
            return Err(Error::InvalidInput("sampling counts must be positive".into()));
        }
        Ok(())
    }

    pub fn times(&self, domain: &Domain) -> Vec<f64> {
        if self.n_time == 1 {
            return vec![domain.t_lo];
        }
        let span = domain.t_hi - domain.t_lo;
        (0..self.n_time).map(|k| domain.t_lo + span * k as f64 / (self.n_time - 1) as f64).collect()
    }

    /// All `(t, x)` sample points, slice by slice. Deterministic given the
    /// seed and scheme.
    pub fn points(&self, domain: &Domain) -> Result<Vec<(f64, Vec<Vec<f64>>)>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let grid = match self.scheme {
            SamplingScheme::UniformGrid => Some(grid_points(domain, self.n_space)),
            _ => None,
        };
        Ok(self
            .times(domain)
            .into_iter()
            .map(|t| {
                let pts = match self.scheme {
                    SamplingScheme::UniformGrid => grid.clone().unwrap(),
                    SamplingScheme::UniformRandom => random_points(domain, self.n_space, &mut rng),
                    SamplingScheme::LatinHypercube => latin_hypercube(domain, self.n_space, &mut rng),
                };
                (t, pts)
            })
            .collect())
    }
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self { n_space: 1681, n_time: 11, scheme: SamplingScheme::UniformGrid, seed: DEFAULT_SEED }
    }
}

fn grid_points(domain: &Domain, n_space: usize) -> Vec<Vec<f64>> {
    let n = domain.dim();
    let per_axis = ((n_space as f64).powf(1.0 / n as f64).round() as usize).max(2);
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|d| {
            let (lo, hi) = (domain.lower[d], domain.upper[d]);
            (0..per_axis).map(|k| lo + (hi - lo) * k as f64 / (per_axis - 1) as f64).collect()
        })
        .collect();
    let total = per_axis.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; n];
            for d in (0..n).rev() {
                p[d] = axes[d][idx % per_axis];
                idx /= per_axis;
            }
            p
        })
        .collect()
}

fn random_points(domain: &Domain, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            (0..domain.dim())
                .map(|d| domain.lower[d] + (domain.upper[d] - domain.lower[d]) * rng.random::<f64>())
                .collect()
        })
        .collect()
}

/// One point per stratum along every axis, strata paired by random
/// permutation.
fn latin_hypercube(domain: &Domain, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = domain.dim();
    let mut pts = vec![vec![0.0; n]; count];
    for d in 0..n {
        let mut strata: Vec<usize> = (0..count).collect();
        for i in (1..count).rev() {
            let j = rng.random_range(0..=i);
            strata.swap(i, j);
        }
        let (lo, hi) = (domain.lower[d], domain.upper[d]);
        for (p, s) in pts.iter_mut().zip(strata) {
            let u = (s as f64 + rng.random::<f64>()) / count as f64;
            p[d] = lo + (hi - lo) * u;
        }
    }
    pts
}
