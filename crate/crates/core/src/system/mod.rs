//! The perturbed system `ẋ = f(x, t) + δ(t)`.
//!
//! A [`SystemSpec`] bundles the nominal field `f`, an optional analytic
//! Jacobian `J_x f` (central finite differences otherwise) and a time-only
//! perturbation `δ`. User closures must be safe to call concurrently.

pub mod builtin;
mod quadrature;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

pub use quadrature::{QuadratureRule, DEFAULT_NODES};

pub type FieldFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64], f64) -> Matrix + Send + Sync>;
pub type PerturbationFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct SystemSpec {
    dim: usize,
    field: FieldFn,
    jacobian: Option<JacobianFn>,
    perturbation: Option<PerturbationFn>,
    t0: f64,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("perturbed", &self.perturbation.is_some())
            .field("t0", &self.t0)
            .finish()
    }
}

impl SystemSpec {
    /// Unperturbed system `ẋ = f(x, t)` starting at `t0 = 0`.
    pub fn new(dim: usize, field: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        assert!(dim > 0, "system dimension must be positive");
        Self { dim, field: Arc::new(field), jacobian: None, perturbation: None, t0: 0.0 }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&[f64], f64) -> Matrix + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn with_perturbation(mut self, delta: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.perturbation = Some(Arc::new(delta));
        self
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    /// Drops the analytic Jacobian so finite differences are used.
    pub fn without_jacobian(mut self) -> Self {
        self.jacobian = None;
        self
    }

    /// `ẋ = A x` with its exact Jacobian.
    pub fn linear(a: Matrix) -> Self {
        assert!(a.is_square(), "linear system needs a square matrix");
        let n = a.rows();
        let field_a = a.clone();
        Self::new(n, move |x, _| field_a.matvec(x).expect("dimension checked")).with_jacobian(move |_, _| a.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    fn check_output(&self, what: &'static str, out: &[f64], x: &[f64], t: f64) -> Result<()> {
        if out.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: out.len() });
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation { what, t, x: x.to_vec() });
        }
        Ok(())
    }

    /// The nominal field `f(x, t)`.
    pub fn nominal(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_state(x)?;
        let out = (self.field)(x, t);
        self.check_output("nominal field", &out, x, t)?;
        Ok(out)
    }

    /// `δ(t)`; zero for an unperturbed system.
    pub fn perturbation(&self, t: f64) -> Result<Vec<f64>> {
        match &self.perturbation {
            None => Ok(vec![0.0; self.dim]),
            Some(delta) => {
                let out = delta(t);
                self.check_output("perturbation", &out, &[], t)?;
                Ok(out)
            }
        }
    }

    /// `f(x, t) + δ(t)`.
    pub fn eval_rhs(&self, x: &[f64], t: f64) -> Result<Vector> {
        if t < self.t0 {
            return Err(Error::InvalidInput(format!("time {t} precedes t0 = {}", self.t0)));
        }
        self.rhs_unchecked_time(x, t)
    }

    pub(crate) fn rhs_unchecked_time(&self, x: &[f64], t: f64) -> Result<Vector> {
        let mut out = self.nominal(x, t)?;
        if self.perturbation.is_some() {
            for (o, d) in out.iter_mut().zip(self.perturbation(t)?) {
                *o += d;
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation { what: "right-hand side", t, x: x.to_vec() });
        }
        Vector::new(out)
    }

    /// `J_x f(x, t)`: analytic when supplied, central differences otherwise.
    pub fn jacobian(&self, x: &[f64], t: f64) -> Result<Matrix> {
        self.check_state(x)?;
        match &self.jacobian {
            Some(jac) => {
                let j = jac(x, t);
                if j.rows() != self.dim || j.cols() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: j.rows() });
                }
                if !j.is_finite() {
                    return Err(Error::Evaluation { what: "jacobian", t, x: x.to_vec() });
                }
                Ok(j)
            }
            None => self.finite_difference_jacobian(x, t),
        }
    }

    /// Central differences with step `h_i = ε^{1/3} max(1, |x_i|)`.
    ///
    /// Truncation and rounding errors balance at this step, leaving roughly
    /// `ε^{2/3} ≈ 4e-11` relative accuracy for smooth `f`; rough fields do worse.
    pub fn finite_difference_jacobian(&self, x: &[f64], t: f64) -> Result<Matrix> {
        self.check_state(x)?;
        let n = self.dim;
        let base_step = f64::EPSILON.cbrt();
        let mut j = Matrix::zeros(n, n);
        let mut probe = x.to_vec();
        for col in 0..n {
            let h = base_step * x[col].abs().max(1.0);
            probe[col] = x[col] + h;
            let plus = self.nominal(&probe, t)?;
            probe[col] = x[col] - h;
            let minus = self.nominal(&probe, t)?;
            probe[col] = x[col];
            // Use the representable step actually taken.
            let span = (x[col] + h) - (x[col] - h);
            for row in 0..n {
                j[(row, col)] = (plus[row] - minus[row]) / span;
            }
        }
        if !j.is_finite() {
            return Err(Error::Evaluation { what: "finite-difference jacobian", t, x: x.to_vec() });
        }
        Ok(j)
    }

    /// `∫₀¹ J_x f(x* + ξ(x − x*), t) dξ`, so that
    /// `f(x, t) − f(x*, t) = [averaged Jacobian] (x − x*)`.
    /// With `x* = 0` this gives the matrix `Ã` with `f(x,t) − f(0,t) = Ã x`.
    pub fn averaged_jacobian(&self, x_star: &[f64], x: &[f64], t: f64, rule: &QuadratureRule) -> Result<Matrix> {
        self.check_state(x_star)?;
        self.check_state(x)?;
        let n = self.dim;
        let mut acc = Matrix::zeros(n, n);
        let mut point = vec![0.0; n];
        for (xi, w) in rule.nodes().iter().zip(rule.weights()) {
            for k in 0..n {
                point[k] = x_star[k] + xi * (x[k] - x_star[k]);
            }
            acc = acc.add(&self.jacobian(&point, t)?.scale(*w))?;
        }
        Ok(acc)
    }

    /// Euclidean norm of `averaged_jacobian · (x − x*) − (f(x,t) − f(x*,t))`.
    pub fn lemma1_residual(&self, x_star: &[f64], x: &[f64], t: f64, rule: &QuadratureRule) -> Result<f64> {
        let a = self.averaged_jacobian(x_star, x, t, rule)?;
        let dx: Vec<f64> = x.iter().zip(x_star).map(|(a, b)| a - b).collect();
        let lhs = a.matvec(&dx)?;
        let fx = self.nominal(x, t)?;
        let fs = self.nominal(x_star, t)?;
        Ok(lhs
            .iter()
            .zip(fx.iter().zip(&fs))
            .map(|(l, (p, q))| {
                let r = l - (p - q);
                r * r
            })
            .sum::<f64>()
            .sqrt())
    }
}
