//! Dense small-matrix linear algebra.
//!
//! Row-major [`Matrix`] and [`Vector`] types, the vector norms of [`NormKind`]
//! with their induced matrix norms, a cyclic Jacobi eigensolver for symmetric
//! matrices and the principal square root of SPD matrices. Everything here is
//! sized for small dense problems (n up to a few dozen).

use std::fmt;
use std::ops::{Deref, Index, IndexMut};

use crate::error::{Error, Result};

/// Relative tolerance for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues of an SPD weight must exceed this fraction of the largest one.
pub const SPD_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;

/// A real column vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Wraps `entries`, rejecting empty or non-finite input.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("vector must have at least one entry".into()));
        }
        if let Some(v) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite vector entry {v}")));
        }
        Ok(Self(entries))
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(entries.to_vec())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sub(&self, other: &[f64]) -> Vector {
        Vector(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

/// A dense real matrix stored in row-major order: `data[i * cols + j] = A[i, j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite matrix entry {v}")));
        }
        Ok(Self { data, rows, cols })
    }

    /// Builds a matrix from row slices.
    ///
    /// # Panics
    /// Panics on an empty or ragged row set, or on non-finite entries.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty(), "matrix needs at least one row");
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(rows.len(), cols, data).expect("invalid matrix rows")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { data: vec![0.0; rows * cols], rows, cols }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare { rows: self.rows, cols: self.cols })
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.rows * self.cols, got: other.rows * other.cols });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(Matrix { data, rows: self.rows, cols: self.cols })
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix { data: self.data.iter().map(|a| a * c).collect(), rows: self.rows, cols: self.cols }
    }

    /// `self + c * I`.
    pub fn shift_diagonal(&self, c: f64) -> Result<Matrix> {
        let n = self.require_square()?;
        let mut m = self.clone();
        for i in 0..n {
            m[(i, i)] += c;
        }
        Ok(m)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `A + Aᵀ`.
    pub fn sym_part_doubled(&self) -> Result<Matrix> {
        self.require_square()?;
        self.add(&self.transpose())
    }

    /// Fails unless the matrix is square and symmetric to [`SYMMETRY_TOL`]
    /// relative to its largest entry.
    pub fn check_symmetric(&self) -> Result<()> {
        self.require_square()?;
        let asymmetry = self.asymmetry();
        if asymmetry > SYMMETRY_TOL * self.max_abs() {
            return Err(Error::NotSymmetric { asymmetry });
        }
        Ok(())
    }

    fn symmetrized(&self) -> Matrix {
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        s
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Eigen-decomposition `S = V diag(values) Vᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: Matrix,
}

impl SymEigen {
    /// `V diag(g(λ)) Vᵀ`.
    pub fn reassemble(&self, g: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        for (k, lambda) in self.values.iter().enumerate() {
            let w = g(*lambda);
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)];
                }
            }
        }
        out
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
pub fn sym_eigen(s: &Matrix) -> Result<SymEigen> {
    s.check_symmetric()?;
    let n = s.rows();
    let mut a = s.symmetrized();
    let mut v = Matrix::identity(n);

    let scale = a.frobenius();
    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off.sqrt() <= f64::EPSILON * 1e-2 * scale {
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok(SymEigen { values, vectors })
}

/// One Jacobi rotation annihilating `a[p][q]`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let n = a.rows();
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_eig_max(s: &Matrix) -> Result<f64> {
    let eig = sym_eigen(s)?;
    Ok(*eig.values.last().expect("non-empty spectrum"))
}

/// Principal square root `P₀` of an SPD matrix together with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdRoot {
    pub root: Matrix,
    pub root_inv: Matrix,
}

/// Factors an SPD matrix as `P = P₀ P₀` through its eigen-decomposition.
pub fn spd_root(p: &Matrix) -> Result<SpdRoot> {
    let eig = sym_eigen(p)?;
    let lambda_max = *eig.values.last().unwrap();
    let lambda_min = eig.values[0];
    if lambda_max <= 0.0 || lambda_min <= SPD_TOL * lambda_max {
        return Err(Error::InvalidNorm(format!(
            "weight matrix is not positive definite (eigenvalues in [{lambda_min:e}, {lambda_max:e}])"
        )));
    }
    Ok(SpdRoot { root: eig.reassemble(f64::sqrt), root_inv: eig.reassemble(|l| 1.0 / l.sqrt()) })
}

pub fn matrix_sqrt_spd(p: &Matrix) -> Result<Matrix> {
    spd_root(p).map(|r| r.root)
}

/// Lower-triangular Cholesky factor `L` with `P = L Lᵀ`.
pub fn cholesky(p: &Matrix) -> Result<Matrix> {
    p.check_symmetric()?;
    let n = p.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let d = p[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if d <= 0.0 {
            return Err(Error::InvalidNorm("matrix is not positive definite".into()));
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let s = p[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix with non-zero diagonal.
pub fn lower_triangular_inverse(l: &Matrix) -> Result<Matrix> {
    let n = l.require_square()?;
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let rhs = if i == j { 1.0 } else { 0.0 };
            let s: f64 = (j..i).map(|k| l[(i, k)] * inv[(k, j)]).sum();
            if l[(i, i)] == 0.0 {
                return Err(Error::Singular { condition: f64::INFINITY });
            }
            inv[(i, j)] = (rhs - s) / l[(i, i)];
        }
    }
    Ok(inv)
}

/// Result of [`invert`]: the inverse and a 1-norm condition number estimate.
#[derive(Debug, Clone)]
pub struct Inverse {
    pub inverse: Matrix,
    pub condition: f64,
}

/// Gauss-Jordan elimination with partial pivoting.
///
/// Fails with [`Error::Singular`] when the 1-norm condition number exceeds
/// `max_condition`.
pub fn invert(a: &Matrix, max_condition: f64) -> Result<Inverse> {
    let n = a.require_square()?;
    let mut work = a.clone();
    let mut inv = Matrix::identity(n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| work[(i, col)].abs().total_cmp(&work[(j, col)].abs())).unwrap();
        let pv = work[(pivot, col)];
        if pv == 0.0 {
            return Err(Error::Singular { condition: f64::INFINITY });
        }
        if pivot != col {
            for k in 0..n {
                work.data.swap(pivot * n + k, col * n + k);
                inv.data.swap(pivot * n + k, col * n + k);
            }
        }
        for k in 0..n {
            work[(col, k)] /= pv;
            inv[(col, k)] /= pv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = work[(r, col)];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                work[(r, k)] -= factor * work[(col, k)];
                inv[(r, k)] -= factor * inv[(col, k)];
            }
        }
    }
    let condition = one_norm(a) * one_norm(&inv);
    if !condition.is_finite() || condition > max_condition {
        return Err(Error::Singular { condition });
    }
    Ok(Inverse { inverse: inv, condition })
}

fn one_norm(a: &Matrix) -> f64 {
    (0..a.cols()).map(|j| (0..a.rows()).map(|i| a[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn inf_norm(a: &Matrix) -> f64 {
    (0..a.rows()).map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// A weighted Euclidean norm `|x|_P = (xᵀPx)^{1/2}` with precomputed `P₀ = √P`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNorm {
    weight: Matrix,
    root: SpdRoot,
}

impl WeightedNorm {
    pub fn new(weight: Matrix) -> Result<Self> {
        let root = spd_root(&weight)?;
        Ok(Self { weight, root })
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn root(&self) -> &Matrix {
        &self.root.root
    }

    pub fn root_inv(&self) -> &Matrix {
        &self.root.root_inv
    }

    pub fn dim(&self) -> usize {
        self.weight.rows()
    }

    /// `Â = P₀ A P₀⁻¹`.
    pub fn similarity(&self, a: &Matrix) -> Result<Matrix> {
        self.root.root.matmul(a)?.matmul(&self.root.root_inv)
    }
}

/// The vector norm in play, and with it the induced matrix norm and
/// logarithmic norm.
#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    L1,
    L2,
    LInf,
    Weighted(WeightedNorm),
}

impl NormKind {
    /// Weighted norm from an SPD matrix; fails if `p` is not SPD.
    pub fn weighted(p: Matrix) -> Result<Self> {
        WeightedNorm::new(p).map(NormKind::Weighted)
    }

    pub fn label(&self) -> &'static str {
        match self {
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
            NormKind::LInf => "linf",
            NormKind::Weighted(_) => "weighted",
        }
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            NormKind::Weighted(w) if w.dim() != n => Err(Error::DimensionMismatch { expected: w.dim(), got: n }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `|v|` in the chosen norm.
pub fn vec_norm(v: &[f64], kind: &NormKind) -> Result<f64> {
    kind.check_dim(v.len())?;
    Ok(match kind {
        NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
        NormKind::L2 => euclid(v),
        NormKind::LInf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        NormKind::Weighted(w) => {
            let pv = w.weight().matvec(v)?;
            pv.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
        }
    })
}

/// Operator norm `‖A‖ = max{|Ax| : |x| = 1}` induced by `kind`.
pub fn induced_matrix_norm(a: &Matrix, kind: &NormKind) -> Result<f64> {
    let n = a.require_square()?;
    kind.check_dim(n)?;
    match kind {
        NormKind::L1 => Ok(one_norm(a)),
        NormKind::LInf => Ok(inf_norm(a)),
        NormKind::L2 => spectral_norm(a),
        NormKind::Weighted(w) => spectral_norm(&w.similarity(a)?),
    }
}

/// Largest singular value, as `sqrt(λ_max(AᵀA))`.
fn spectral_norm(a: &Matrix) -> Result<f64> {
    let ata = a.transpose().matmul(a)?;
    let lambda = sym_eig_max(&ata)?;
    // Roundoff can leave a tiny negative top eigenvalue for A ≈ 0.
    Ok(lambda.max(0.0).sqrt())
}
