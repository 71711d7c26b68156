//! Explicit Runge-Kutta integration of `ẋ = f(x, t) + δ(t)` and of linear
//! time-varying matrix equations `Φ̇ = A(t) Φ`.

mod fundamental;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::system::SystemSpec;

pub use fundamental::{integrate_fundamental, transition_bound_check, FundamentalTrajectory, TransitionBoundReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4Fixed,
    /// Runge-Kutta-Fehlberg 4(5) with local error control.
    Rkf45Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4, initial step for RKF45.
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Attempted steps (accepted plus rejected) before giving up.
    pub max_steps: usize,
    /// Upper bound on the adaptive step. The −t³ rate in the planar example
    /// makes the problem increasingly stiff, so steps are capped.
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rkf45Adaptive,
            step: 1e-3,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps: 5_000_000,
            max_step: 0.1,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        Self { method: Method::Rk4Fixed, step, ..Self::default() }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.step) || !positive(self.max_step) {
            return Err(Error::InvalidInput("integrator steps must be positive".into()));
        }
        if !positive(self.rel_tol) || !positive(self.abs_tol) {
            return Err(Error::InvalidInput("integrator tolerances must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Time-stamped states of one solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vector>,
    /// `ẋ` at each sample, present for integrator output; enables cubic
    /// Hermite dense output.
    slopes: Option<Vec<Vec<f64>>>,
    error_estimate: Option<f64>,
}

impl Trajectory {
    /// Validated trajectory: equal lengths, strictly increasing times,
    /// matching state dimensions. An empty trajectory is allowed.
    pub fn new(times: Vec<f64>, states: Vec<Vector>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), got: states.len() });
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("trajectory times must be finite and strictly increasing".into()));
        }
        if let Some(first) = states.first() {
            if let Some(bad) = states.iter().find(|s| s.dim() != first.dim()) {
                return Err(Error::DimensionMismatch { expected: first.dim(), got: bad.dim() });
            }
        }
        Ok(Self { times, states, slopes: None, error_estimate: None })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.states.first().map(Vector::dim)
    }

    pub fn last(&self) -> Option<(f64, &Vector)> {
        self.times.last().map(|t| (*t, self.states.last().unwrap()))
    }

    /// Accumulated `∞`-norm of the accepted local error estimates, a rough
    /// global error budget. `None` for fixed-step runs.
    pub fn error_estimate(&self) -> Option<f64> {
        self.error_estimate
    }

    /// State at `t` by cubic Hermite interpolation between samples (local
    /// error `O(h⁴)`), or linear interpolation when slopes are unavailable.
    pub fn interpolate(&self, t: f64) -> Result<Vector> {
        let (first, last) = match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => (*a, *b),
            _ => return Err(Error::InvalidInput("cannot interpolate an empty trajectory".into())),
        };
        if !(first..=last).contains(&t) {
            return Err(Error::InvalidInput(format!("time {t} outside [{first}, {last}]")));
        }
        let k = match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(k) => return Ok(self.states[k].clone()),
            Err(k) => k - 1,
        };
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (&self.states[k], &self.states[k + 1]);
        let out = match &self.slopes {
            Some(slopes) => {
                let (d0, d1) = (&slopes[k], &slopes[k + 1]);
                let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                let h10 = s * (1.0 - s) * (1.0 - s);
                let h01 = s * s * (3.0 - 2.0 * s);
                let h11 = s * s * (s - 1.0);
                (0..y0.dim()).map(|i| h00 * y0[i] + h10 * h * d0[i] + h01 * y1[i] + h11 * h * d1[i]).collect()
            }
            None => (0..y0.dim()).map(|i| (1.0 - s) * y0[i] + s * y1[i]).collect(),
        };
        Vector::new(out)
    }

    /// Resamples the trajectory at the given times.
    pub fn resample(&self, times: &[f64]) -> Result<Trajectory> {
        let states = times.iter().map(|&t| self.interpolate(t)).collect::<Result<Vec<_>>>()?;
        let mut out = Trajectory::new(times.to_vec(), states)?;
        out.error_estimate = self.error_estimate;
        Ok(out)
    }
}

/// Raw integrator output on a plain state vector.
#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub slopes: Vec<Vec<f64>>,
    pub error_estimate: Option<f64>,
}

/// Integrates `x(t0) = x0` to `tf` for the perturbed system.
pub fn integrate(sys: &SystemSpec, x0: &[f64], t0: f64, tf: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    integrate_with_stops(sys, x0, t0, tf, cfg, &[])
}

fn integrate_with_stops(
    sys: &SystemSpec,
    x0: &[f64],
    t0: f64,
    tf: f64,
    cfg: &IntegratorConfig,
    stops: &[f64],
) -> Result<Trajectory> {
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: x0.len() });
    }
    if t0 < sys.t0() {
        return Err(Error::InvalidInput(format!("start time {t0} precedes t0 = {}", sys.t0())));
    }
    let sol = solve_with_stops(|t, x| sys.rhs_unchecked_time(x, t).map(Vec::from), x0, t0, tf, cfg, stops)?;
    let states = sol.states.into_iter().map(Vector::new).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times: sol.times, states, slopes: Some(sol.slopes), error_estimate: sol.error_estimate })
}

/// Returns the solution at `sample_times`. The adaptive method shortens steps
/// to land exactly on each requested time; fixed-step RK4 falls back to
/// Hermite interpolation.
pub fn integrate_sampled(
    sys: &SystemSpec,
    x0: &[f64],
    t0: f64,
    sample_times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let tf = match sample_times.last() {
        Some(t) => *t,
        None => return Err(Error::InvalidInput("no sample times requested".into())),
    };
    if sample_times[0] < t0 {
        return Err(Error::InvalidInput("sample times must not precede t0".into()));
    }
    if sample_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("sample times must be strictly increasing".into()));
    }
    let full = integrate_with_stops(sys, x0, t0, tf, cfg, sample_times)?;
    full.resample(sample_times)
}

/// Cumulative `∫_{t0}^{t_k} g` over a grid, with Simpson's rule on each
/// interval using an extra midpoint evaluation.
pub(crate) fn cumulative_simpson(times: &[f64], at_nodes: &[f64], g: impl Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..times.len() {
        let (a, b) = (times[k - 1], times[k]);
        let mid = g(0.5 * (a + b))?;
        acc += (b - a) / 6.0 * (at_nodes[k - 1] + 4.0 * mid + at_nodes[k]);
        out.push(acc);
    }
    Ok(out)
}

/// Generic driver over a plain right-hand side.
pub(crate) fn solve<F>(rhs: F, x0: &[f64], t0: f64, tf: f64, cfg: &IntegratorConfig) -> Result<Solution>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    solve_with_stops(rhs, x0, t0, tf, cfg, &[])
}

/// As [`solve`], with times (sorted) the adaptive method must step onto.
pub(crate) fn solve_with_stops<F>(
    rhs: F,
    x0: &[f64],
    t0: f64,
    tf: f64,
    cfg: &IntegratorConfig,
    stops: &[f64],
) -> Result<Solution>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    if !(tf > t0) || !t0.is_finite() || !tf.is_finite() {
        return Err(Error::InvalidInput(format!("need finite t0 < tf, got [{t0}, {tf}]")));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial state must be finite".into()));
    }
    match cfg.method {
        Method::Rk4Fixed => rk4_fixed(&rhs, x0, t0, tf, cfg),
        Method::Rkf45Adaptive => rkf45(&rhs, x0, t0, tf, cfg, stops),
    }
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o += h * c * v;
        }
    }
    out
}

fn rk4_fixed<F>(rhs: &F, x0: &[f64], t0: f64, tf: f64, cfg: &IntegratorConfig) -> Result<Solution>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    // The step is shrunk slightly so an integer number of steps lands on tf.
    let n_steps = ((tf - t0) / cfg.step - 1e-9).ceil().max(1.0) as usize;
    if n_steps > cfg.max_steps {
        return Err(Error::StepLimit { max_steps: cfg.max_steps, t: t0 });
    }
    let h = (tf - t0) / n_steps as f64;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut slopes = Vec::with_capacity(n_steps + 1);
    let mut y = x0.to_vec();
    let mut k1 = rhs(t0, &y)?;
    times.push(t0);
    states.push(y.clone());
    slopes.push(k1.clone());
    for step in 0..n_steps {
        let t = t0 + step as f64 * h;
        let k2 = rhs(t + 0.5 * h, &axpy(&y, h, &[(0.5, &k1)]))?;
        let k3 = rhs(t + 0.5 * h, &axpy(&y, h, &[(0.5, &k2)]))?;
        let k4 = rhs(t + h, &axpy(&y, h, &[(1.0, &k3)]))?;
        y = axpy(&y, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { last_time: t });
        }
        let t_next = if step + 1 == n_steps { tf } else { t0 + (step + 1) as f64 * h };
        k1 = match rhs(t_next, &y) {
            Ok(k) => k,
            Err(Error::Evaluation { .. }) => return Err(Error::Diverged { last_time: t }),
            Err(e) => return Err(e),
        };
        times.push(t_next);
        states.push(y.clone());
        slopes.push(k1.clone());
    }
    Ok(Solution { times, states, slopes, error_estimate: None })
}

/// Fehlberg 4(5) coefficients.
mod fehlberg {
    pub const C: [f64; 6] = [0.0, 1.0 / 4.0, 3.0 / 8.0, 12.0 / 13.0, 1.0, 1.0 / 2.0];
    pub const A: [[f64; 5]; 6] = [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0 / 4.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
        [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
        [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
        [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
    ];
    pub const B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0];
    pub const B5: [f64; 6] = [16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0];
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

enum StepOutcome {
    Done {
        y5: Vec<f64>,
        err: Vec<f64>,
    },
    /// A stage produced a non-finite value; treat as a rejected step.
    Blowup,
}

fn rkf45_attempt<F>(rhs: &F, t: f64, y: &[f64], k1: &[f64], h: f64) -> Result<StepOutcome>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    use fehlberg::*;
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(6);
    ks.push(k1.to_vec());
    for s in 1..6 {
        let terms: Vec<(f64, &[f64])> = (0..s).map(|j| (A[s][j], ks[j].as_slice())).collect();
        let stage = axpy(y, h, &terms);
        if stage.iter().any(|v| !v.is_finite()) {
            return Ok(StepOutcome::Blowup);
        }
        match rhs(t + C[s] * h, &stage) {
            Ok(k) => ks.push(k),
            Err(Error::Evaluation { .. }) => return Ok(StepOutcome::Blowup),
            Err(e) => return Err(e),
        }
    }
    let terms5: Vec<(f64, &[f64])> = (0..6).map(|j| (B5[j], ks[j].as_slice())).collect();
    let y5 = axpy(y, h, &terms5);
    let err: Vec<f64> = (0..y.len()).map(|i| h * (0..6).map(|j| (B5[j] - B4[j]) * ks[j][i]).sum::<f64>()).collect();
    if y5.iter().chain(&err).any(|v| !v.is_finite()) {
        return Ok(StepOutcome::Blowup);
    }
    Ok(StepOutcome::Done { y5, err })
}

fn rkf45<F>(rhs: &F, x0: &[f64], t0: f64, tf: f64, cfg: &IntegratorConfig, stops: &[f64]) -> Result<Solution>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let mut t = t0;
    let mut y = x0.to_vec();
    let mut k1 = rhs(t, &y)?;
    let mut times = vec![t];
    let mut states = vec![y.clone()];
    let mut slopes = vec![k1.clone()];
    let mut h = cfg.step.min(cfg.max_step).min(tf - t0);
    let mut error_budget = 0.0;
    let mut attempts = 0usize;
    let mut stops = stops.iter().copied().filter(|s| *s > t0 && *s < tf).peekable();

    while t < tf {
        if attempts >= cfg.max_steps {
            return Err(Error::StepLimit { max_steps: cfg.max_steps, t });
        }
        attempts += 1;
        while stops.next_if(|s| *s <= t).is_some() {}
        let target = stops.peek().copied().unwrap_or(tf);
        let last = t + h >= target;
        let h_try = if last { target - t } else { h };
        if h_try <= 1e-14 * t.abs().max(1.0) {
            return Err(if y.iter().all(|v| v.is_finite()) && k1.iter().all(|v| v.is_finite()) {
                Error::StepUnderflow { t }
            } else {
                Error::Diverged { last_time: t }
            });
        }

        let (y5, err) = match rkf45_attempt(rhs, t, &y, &k1, h_try)? {
            StepOutcome::Done { y5, err } => (y5, err),
            StepOutcome::Blowup => {
                h = h_try * MIN_FACTOR;
                if h <= 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Diverged { last_time: t });
                }
                continue;
            }
        };
        let ratio = err
            .iter()
            .zip(y.iter().zip(&y5))
            .map(|(e, (a, b))| e.abs() / (cfg.abs_tol + cfg.rel_tol * a.abs().max(b.abs())))
            .fold(0.0, f64::max);

        let factor = if ratio == 0.0 { MAX_FACTOR } else { (SAFETY * ratio.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };

        if ratio <= 1.0 {
            let t_new = if last { target } else { t + h_try };
            let k_new = match rhs(t_new, &y5) {
                Ok(k) => k,
                Err(Error::Evaluation { .. }) => return Err(Error::Diverged { last_time: t }),
                Err(e) => return Err(e),
            };
            error_budget += err.iter().fold(0.0, |m: f64, e| m.max(e.abs()));
            t = t_new;
            y = y5;
            k1 = k_new;
            times.push(t);
            states.push(y.clone());
            slopes.push(k1.clone());
            // A truncated final step should not shrink the controller's step.
            h = (h.max(h_try) * factor).min(cfg.max_step);
        } else {
            h = (h_try * factor).min(cfg.max_step);
        }
    }
    Ok(Solution { times, states, slopes, error_estimate: Some(error_budget) })
}
