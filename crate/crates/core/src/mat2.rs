//! Fixed-size `2×2` matrices for the planar constructions.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TwoWellError};
use crate::operator_kernel::Matrix;
use crate::scalar::Real;

/// Row-major `2×2` matrix.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2<T>(pub [[T; 2]; 2]);

impl<T: Real> Mat2<T> {
    /// Zero matrix.
    pub fn zero() -> Self {
        Self([[T::zero(); 2]; 2])
    }

    /// Identity.
    pub fn identity() -> Self {
        Self([[T::one(), T::zero()], [T::zero(), T::one()]])
    }

    /// `diag(1, −1)`.
    pub fn flip() -> Self {
        Self([[T::one(), T::zero()], [T::zero(), -T::one()]])
    }

    /// Rotation with first column `(c, s)`.
    pub fn rotation(c: T, s: T) -> Self {
        Self([[c, -s], [s, c]])
    }

    /// `b⊗ξ`.
    pub fn outer(b: [T; 2], xi: [T; 2]) -> Self {
        Self([[b[0] * xi[0], b[0] * xi[1]], [b[1] * xi[0], b[1] * xi[1]]])
    }

    /// Entry access.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.0[i][j]
    }

    /// Transpose.
    #[inline]
    pub fn t(&self) -> Self {
        let m = self.0;
        Self([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    /// Symmetric part.
    #[inline]
    pub fn sym(&self) -> Self {
        let m = self.0;
        let o = T::lit(0.5) * (m[0][1] + m[1][0]);
        Self([[m[0][0], o], [o, m[1][1]]])
    }

    /// Frobenius inner product.
    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        let (a, b) = (self.0, o.0);
        a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
    }

    /// Squared Frobenius norm.
    #[inline]
    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    /// Matrix product.
    #[inline]
    pub fn mm(&self, o: &Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }

    /// Matrix-vector product.
    #[inline]
    pub fn mv(&self, v: [T; 2]) -> [T; 2] {
        let a = self.0;
        [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
    }

    /// Converts from a dense `2×2` matrix.
    pub fn from_matrix(m: &Matrix<T>) -> Result<Self> {
        if m.dim() != 2 {
            return Err(TwoWellError::UnsupportedDimension { op: "planar construction", d: m.dim() });
        }
        Ok(Self([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]))
    }

    /// Converts into a dense matrix.
    pub fn to_matrix(&self) -> Matrix<T> {
        Matrix::from_rows(&[self.0[0], self.0[1]]).expect("finite 2x2")
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self([[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]])
    }
}

impl<T: Real> Neg for Mat2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * (-T::one())
    }
}

impl<T: Real> Mul<T> for Mat2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        let a = self.0;
        Self([[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]])
    }
}

impl<T: Real> AddAssign for Mat2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Linear map taking a residual of the canonical construction to the
/// residual in the original frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StrainMap<T> {
    /// `M ↦ M·Q`.
    Right(Mat2<T>),
    /// `M ↦ sym(M·Q)`.
    SymRight(Mat2<T>),
    /// `M ↦ R·M·Rᵀ`.
    Conjugate(Mat2<T>),
}

impl<T: Real> StrainMap<T> {
    /// Applies the map.
    #[inline]
    pub fn apply(&self, m: &Mat2<T>) -> Mat2<T> {
        match self {
            StrainMap::Right(q) => m.mm(q),
            StrainMap::SymRight(q) => m.mm(q).sym(),
            StrainMap::Conjugate(r) => r.mm(m).mm(&r.t()),
        }
    }
}
