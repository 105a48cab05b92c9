//! States, the three constraint operators, their symbols, kernels and
//! compatibility projections.
//!
//! Closed forms:
//!
//! * curl: `P(ξ)a = (aξ)⊗ξ`
//! * div: `P(ξ)a = a − (aξ)⊗ξ`
//! * curlcurl (`d = 2`, symmetric states): `P(ξ)a = G_ξ(aξ)⊙ξ` with
//!   `G_ξ(v) = 2v − (ξ·v)ξ` and `b⊙ξ = (b⊗ξ + ξ⊗b)/2`.
//!
//! [`project_compatible_oracle`] recomputes the projection from an SVD of the
//! flattened symbol and serves as an independent check.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TwoWellError};
use crate::scalar::Real;

/// Relative singular value threshold below which a direction is null.
pub const NULL_TOL: f64 = 1e-9;
/// Band above [`NULL_TOL`] in which a singular value is considered ambiguous.
pub const AMBIGUOUS_TOL: f64 = 1e-6;

/// Dense row-major `d×d` real matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    d: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = self.data.chunks(self.d).collect();
        write!(f, "Matrix{rows:?}")
    }
}

impl<T: Real> Matrix<T> {
    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn new(d: usize, data: Vec<T>) -> Result<Self> {
        if d < 2 {
            return Err(TwoWellError::DimensionTooSmall(d));
        }
        if data.len() != d * d {
            return Err(TwoWellError::DimensionMismatch { expected: d * d, found: data.len() });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(TwoWellError::NonFinite);
        }
        Ok(Self { d, data })
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let d = rows.len();
        let mut data = Vec::with_capacity(d * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(TwoWellError::DimensionMismatch { expected: d, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(d, data)
    }

    /// Builds a matrix from `f64` rows.
    pub fn from_f64_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let conv: Vec<Vec<T>> =
            rows.iter().map(|r| r.as_ref().iter().map(|&x| T::lit(x)).collect()).collect();
        Self::from_rows(&conv)
    }

    /// Zero matrix.
    pub fn zeros(d: usize) -> Self {
        Self { d, data: vec![T::zero(); d * d] }
    }

    /// Identity matrix.
    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Diagonal matrix.
    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Outer product `b⊗ξ` with entries `b_i ξ_j`.
    pub fn outer(b: &[T], xi: &[T]) -> Self {
        let d = b.len();
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = b[i] * xi[j];
            }
        }
        m
    }

    /// Symmetric product `b⊙ξ = (b⊗ξ + ξ⊗b)/2`.
    pub fn sym_outer(b: &[T], xi: &[T]) -> Self {
        let half = T::lit(0.5);
        let d = b.len();
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = half * (b[i] * xi[j] + xi[i] * b[j]);
            }
        }
        m
    }

    /// Dimension `d`.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Nested rows.
    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.d).map(|r| r.to_vec()).collect()
    }

    /// Transpose.
    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.d);
        for i in 0..self.d {
            for j in 0..self.d {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    /// Symmetric part `(m + mᵀ)/2`.
    pub fn sym(&self) -> Self {
        let half = T::lit(0.5);
        let mut m = Self::zeros(self.d);
        for i in 0..self.d {
            for j in 0..self.d {
                m[(i, j)] = half * (self[(i, j)] + self[(j, i)]);
            }
        }
        m
    }

    /// Frobenius norm of the antisymmetric part.
    pub fn asymmetry(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.d {
            for j in 0..self.d {
                let x = self[(i, j)] - self[(j, i)];
                s = s + x * x;
            }
        }
        (s / T::lit(4.0)).sqrt()
    }

    /// Exact entrywise symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.d).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).map(|(&x, &y)| x * y).sum()
    }

    /// Squared Frobenius norm.
    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    /// Trace.
    pub fn trace(&self) -> T {
        (0..self.d).map(|i| self[(i, i)]).sum()
    }

    /// Matrix product.
    pub fn matmul(&self, other: &Self) -> Self {
        let d = self.d;
        let mut m = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                for j in 0..d {
                    m[(i, j)] = m[(i, j)] + a * other[(k, j)];
                }
            }
        }
        m
    }

    /// Matrix-vector product `a v`.
    pub fn mat_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.d).map(|i| (0..self.d).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    /// `aᵀa`.
    pub fn gram(&self) -> Self {
        self.transpose().matmul(self)
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Converts the scalar type.
    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix { d: self.d, data: self.data.iter().map(|&x| U::lit(x.as_f64())).collect() }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if self.d != d {
            return Err(TwoWellError::DimensionMismatch { expected: d, found: self.d });
        }
        Ok(())
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.d + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.d + j]
    }
}

impl<T: Real> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: Self) -> Matrix<T> {
        assert_eq!(self.d, rhs.d, "dimension mismatch");
        Matrix { d: self.d, data: self.data.iter().zip(&rhs.data).map(|(&x, &y)| x + y).collect() }
    }
}

impl<T: Real> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: Self) -> Matrix<T> {
        assert_eq!(self.d, rhs.d, "dimension mismatch");
        Matrix { d: self.d, data: self.data.iter().zip(&rhs.data).map(|(&x, &y)| x - y).collect() }
    }
}

impl<T: Real> Add for Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: Self) -> Matrix<T> {
        &self + &rhs
    }
}

impl<T: Real> Sub for Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: Self) -> Matrix<T> {
        &self - &rhs
    }
}

impl<T: Real> AddAssign<&Matrix<T>> for Matrix<T> {
    fn add_assign(&mut self, rhs: &Matrix<T>) {
        for (x, &y) in self.data.iter_mut().zip(&rhs.data) {
            *x = *x + y;
        }
    }
}

impl<T: Real> Mul<T> for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, s: T) -> Matrix<T> {
        Matrix { d: self.d, data: self.data.iter().map(|&x| x * s).collect() }
    }
}

impl<T: Real> Mul<T> for Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, s: T) -> Matrix<T> {
        &self * s
    }
}

impl<T: Real> Neg for &Matrix<T> {
    type Output = Matrix<T>;
    fn neg(self) -> Matrix<T> {
        self * (-T::one())
    }
}

/// Symmetric matrix; exact symmetry is enforced at construction.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct SymMatrix<T>(Matrix<T>);

impl<T: Real> SymMatrix<T> {
    /// Symmetrizes an arbitrary matrix.
    pub fn symmetrize(m: &Matrix<T>) -> Self {
        Self(m.sym())
    }

    /// Accepts a matrix whose asymmetry is below `1e−12·max(|m|, 1)`.
    pub fn try_from_matrix(m: &Matrix<T>) -> Result<Self> {
        let asym = m.asymmetry();
        if asym > T::lit(1e-12) * m.norm().max(T::one()) {
            return Err(TwoWellError::NotSymmetric(asym.as_f64()));
        }
        Ok(Self(m.sym()))
    }

    /// Underlying dense matrix.
    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.0
    }

    /// Consumes into the dense matrix.
    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }
}

/// Constraint operator kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    /// Row-wise curl; `u = ∇v`.
    Curl,
    /// Row-wise divergence.
    Div,
    /// Saint-Venant compatibility; `u = ∇^sym v` on symmetric states.
    CurlCurl,
}

impl OpKind {
    /// Lower-case name used by the CLI.
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Curl => "curl",
            OpKind::Div => "div",
            OpKind::CurlCurl => "curlcurl",
        }
    }
}

impl std::str::FromStr for OpKind {
    type Err = TwoWellError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "curl" => Ok(OpKind::Curl),
            "div" => Ok(OpKind::Div),
            "curlcurl" | "curl_curl" => Ok(OpKind::CurlCurl),
            other => Err(TwoWellError::InvalidArgument(format!("unknown operator {other:?}"))),
        }
    }
}

/// Constraint operator with its ambient dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiffOp {
    /// Operator kind.
    pub kind: OpKind,
    /// Spatial dimension.
    pub d: usize,
}

impl DiffOp {
    /// Validated constructor.
    pub fn new(kind: OpKind, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(TwoWellError::DimensionTooSmall(d));
        }
        Ok(Self { kind, d })
    }

    /// Curl in dimension `d`.
    pub fn curl(d: usize) -> Self {
        Self { kind: OpKind::Curl, d }
    }

    /// Divergence in dimension `d`.
    pub fn div(d: usize) -> Self {
        Self { kind: OpKind::Div, d }
    }

    /// Planar curlcurl.
    pub fn curl_curl() -> Self {
        Self { kind: OpKind::CurlCurl, d: 2 }
    }

    /// Whether states must be symmetric.
    pub fn symmetric_states(&self) -> bool {
        self.kind == OpKind::CurlCurl
    }

    /// Rejects operators without closed forms.
    pub fn require_closed_form(&self) -> Result<()> {
        if self.kind == OpKind::CurlCurl && self.d != 2 {
            return Err(TwoWellError::UnsupportedDimension { op: "curlcurl", d: self.d });
        }
        Ok(())
    }

    /// Validates a state against this operator.
    pub fn check_state<T: Real>(&self, a: &Matrix<T>) -> Result<()> {
        a.check_dim(self.d)?;
        if self.symmetric_states() {
            let asym = a.asymmetry();
            if asym > T::lit(1e-12) * a.norm().max(T::one()) {
                return Err(TwoWellError::NotSymmetric(asym.as_f64()));
            }
        }
        Ok(())
    }

    /// Length of the flattened codomain of the symbol.
    pub fn codomain_len(&self) -> usize {
        match self.kind {
            OpKind::Curl => self.d.pow(3),
            OpKind::Div => self.d,
            OpKind::CurlCurl => self.d.pow(4),
        }
    }
}

/// Unit direction in `ℝ^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction<T> {
    xi: Vec<T>,
}

impl<T: Real> Direction<T> {
    /// Normalizes `v`; rejects norms below `1e−12`.
    pub fn new(v: Vec<T>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(TwoWellError::NonFinite);
        }
        let n = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        if n < T::lit(1e-12) {
            return Err(TwoWellError::DegenerateDirection(n.as_f64()));
        }
        Ok(Self { xi: v.into_iter().map(|x| x / n).collect() })
    }

    /// Standard basis vector `e_i`.
    pub fn axis(d: usize, i: usize) -> Self {
        let mut xi = vec![T::zero(); d];
        xi[i] = T::one();
        Self { xi }
    }

    /// Planar direction at angle `phi`.
    pub fn from_angle(phi: T) -> Self {
        Self { xi: vec![phi.cos(), phi.sin()] }
    }

    /// Components.
    pub fn as_slice(&self) -> &[T] {
        &self.xi
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    /// Antipodal direction.
    pub fn neg(&self) -> Self {
        Self { xi: self.xi.iter().map(|&x| -x).collect() }
    }

    /// Euclidean distance to another direction.
    pub fn chord(&self, other: &Self) -> T {
        self.xi.iter().zip(&other.xi).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt()
    }
}

fn check_xi<T: Real>(op: &DiffOp, xi: &Direction<T>) -> Result<()> {
    if xi.dim() != op.d {
        return Err(TwoWellError::DimensionMismatch { expected: op.d, found: xi.dim() });
    }
    Ok(())
}

/// Applies the symbol `𝔸(ξ)` to `a` and returns the flattened result.
///
/// The curlcurl symbol drops the global sign of the second-order Fourier
/// factor, which does not affect its kernel.
pub fn symbol_apply<T: Real>(op: &DiffOp, xi: &Direction<T>, a: &Matrix<T>) -> Result<Vec<T>> {
    op.check_state(a)?;
    check_xi(op, xi)?;
    Ok(symbol_raw(op, xi.as_slice(), a.as_slice()))
}

fn symbol_raw<T: Real>(op: &DiffOp, xi: &[T], a: &[T]) -> Vec<T> {
    let d = op.d;
    let at = |i: usize, j: usize| a[i * d + j];
    let mut out = Vec::with_capacity(op.codomain_len());
    match op.kind {
        OpKind::Curl => {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        out.push(at(i, j) * xi[k] - at(i, k) * xi[j]);
                    }
                }
            }
        }
        OpKind::Div => {
            for i in 0..d {
                out.push((0..d).map(|j| at(i, j) * xi[j]).sum());
            }
        }
        OpKind::CurlCurl => {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        for l in 0..d {
                            out.push(
                                xi[i] * xi[j] * at(k, l) + xi[k] * xi[l] * at(i, j)
                                    - xi[i] * xi[l] * at(k, j)
                                    - xi[k] * xi[j] * at(i, l),
                            );
                        }
                    }
                }
            }
        }
    }
    out
}

/// Closed-form compatibility projection `P_A(ξ)a`.
pub fn project_compatible<T: Real>(
    op: &DiffOp,
    xi: &Direction<T>,
    a: &Matrix<T>,
) -> Result<Matrix<T>> {
    op.require_closed_form()?;
    op.check_state(a)?;
    check_xi(op, xi)?;
    Ok(project_raw(op, xi.as_slice(), a))
}

pub(crate) fn project_raw<T: Real>(op: &DiffOp, xi: &[T], a: &Matrix<T>) -> Matrix<T> {
    let axi = a.mat_vec(xi);
    match op.kind {
        OpKind::Curl => Matrix::outer(&axi, xi),
        OpKind::Div => a - &Matrix::outer(&axi, xi),
        OpKind::CurlCurl => {
            let g = g_xi(xi, &axi);
            Matrix::sym_outer(&g, xi)
        }
    }
}

/// `G_ξ(v) = 2v − (ξ·v)ξ`.
pub fn g_xi<T: Real>(xi: &[T], v: &[T]) -> Vec<T> {
    let s: T = xi.iter().zip(v).map(|(&x, &y)| x * y).sum();
    v.iter().zip(xi).map(|(&vi, &xii)| T::lit(2.0) * vi - s * xii).collect()
}

/// Orthonormal basis of the state space as flattened `d×d` matrices.
fn state_basis(op: &DiffOp) -> Vec<Vec<f64>> {
    let d = op.d;
    let mut basis = Vec::new();
    if op.symmetric_states() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..d {
            for j in i..d {
                let mut m = vec![0.0; d * d];
                if i == j {
                    m[i * d + i] = 1.0;
                } else {
                    m[i * d + j] = s;
                    m[j * d + i] = s;
                }
                basis.push(m);
            }
        }
    } else {
        for k in 0..d * d {
            let mut m = vec![0.0; d * d];
            m[k] = 1.0;
            basis.push(m);
        }
    }
    basis
}

/// Orthonormal basis of `ker 𝔸(ξ)` from an SVD of the flattened symbol.
pub fn kernel_basis<T: Real>(op: &DiffOp, xi: &Direction<T>) -> Result<Vec<Matrix<T>>> {
    check_xi(op, xi)?;
    let d = op.d;
    let xi64: Vec<f64> = xi.as_slice().iter().map(|x| x.as_f64()).collect();
    let basis = state_basis(op);
    let n = basis.len();
    let m = op.codomain_len();
    let rows = m.max(n);
    let mut sym = DMatrix::<f64>::zeros(rows, n);
    for (c, e) in basis.iter().enumerate() {
        let col = symbol_raw(op, &xi64, e);
        for (r, v) in col.into_iter().enumerate() {
            sym[(r, c)] = v;
        }
    }
    let svd = sym.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| TwoWellError::Oracle("SVD did not converge".into()))?;
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Err(TwoWellError::Oracle("symbol vanishes identically".into()));
    }
    let mut out = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let r = s / smax;
        if r > NULL_TOL && r <= AMBIGUOUS_TOL {
            return Err(TwoWellError::Oracle(format!(
                "ambiguous singular value ratio {r:e} in rank detection"
            )));
        }
        if r <= NULL_TOL {
            let mut flat = vec![0.0; d * d];
            for (c, e) in basis.iter().enumerate() {
                let w = vt[(k, c)];
                for (f, &x) in flat.iter_mut().zip(e) {
                    *f += w * x;
                }
            }
            out.push(Matrix::new(d, flat.into_iter().map(T::lit).collect())?);
        }
    }
    Ok(out)
}

/// Projection onto `ker 𝔸(ξ)` computed from [`kernel_basis`].
pub fn project_compatible_oracle<T: Real>(
    op: &DiffOp,
    xi: &Direction<T>,
    a: &Matrix<T>,
) -> Result<Matrix<T>> {
    op.check_state(a)?;
    let basis = kernel_basis(op, xi)?;
    let mut p = Matrix::zeros(op.d);
    for e in &basis {
        p += &(e * a.dot(e));
    }
    Ok(p)
}

/// Kernel dimensions of the symbol over `samples` random directions.
pub fn wave_cone_rank(op: &DiffOp, samples: usize, seed: u64) -> Result<Vec<usize>> {
    if samples == 0 {
        return Err(TwoWellError::InvalidArgument("samples must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let v: Vec<f64> = (0..op.d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let xi = Direction::new(v)?;
            Ok(kernel_basis(op, &xi)?.len())
        })
        .collect()
}

/// Uniformly distributed random direction.
pub fn random_direction<T: Real, R: rand::Rng>(d: usize, rng: &mut R) -> Direction<T> {
    loop {
        let v: Vec<T> = (0..d).map(|_| T::lit(StandardNormal.sample(rng))).collect();
        if let Ok(xi) = Direction::new(v) {
            return xi;
        }
    }
}
