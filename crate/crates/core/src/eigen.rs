//! Symmetric eigendecomposition: closed form for `2×2`, cyclic Jacobi above.

use crate::operator_kernel::Matrix;
use crate::scalar::Real;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SymEigen<T> {
    /// Eigenvalues in ascending order.
    pub values: Vec<T>,
    /// Unit eigenvectors, `vectors[k]` belongs to `values[k]`.
    pub vectors: Vec<Vec<T>>,
}

/// Closed-form eigenpairs of `[[p, q], [q, r]]`, ascending.
pub fn sym_eigen_2x2<T: Real>(p: T, q: T, r: T) -> SymEigen<T> {
    let half = T::lit(0.5);
    let mean = half * (p + r);
    let dev = half * (p - r);
    let rad = dev.hypot(q);
    let phi = half * (T::lit(2.0) * q).atan2(p - r);
    let (s, c) = phi.sin_cos();
    SymEigen { values: vec![mean - rad, mean + rad], vectors: vec![vec![-s, c], vec![c, s]] }
}

/// Eigenpairs of the symmetric part of `m`.
pub fn sym_eigen<T: Real>(m: &Matrix<T>) -> SymEigen<T> {
    let d = m.dim();
    if d == 2 {
        let half = T::lit(0.5);
        return sym_eigen_2x2(m[(0, 0)], half * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    }
    jacobi(&m.sym())
}

fn jacobi<T: Real>(m: &Matrix<T>) -> SymEigen<T> {
    let d = m.dim();
    let mut a = m.clone();
    let mut v = Matrix::<T>::identity(d);
    let scale = a.norm().max(T::min_positive_value());
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    off = off + a[(i, j)] * a[(i, j)];
                }
            }
        }
        if off.sqrt() <= T::epsilon() * T::lit(1e-2) * scale {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    SymEigen {
        values: idx.iter().map(|&i| a[(i, i)]).collect(),
        vectors: idx.iter().map(|&i| (0..d).map(|k| v[(k, i)]).collect()).collect(),
    }
}

/// Indices of eigenvalues within `tol` of `values[target]`.
pub fn cluster<T: Real>(values: &[T], target: usize, tol: T) -> Vec<usize> {
    let t = values[target];
    (0..values.len()).filter(|&k| (values[k] - t).abs() <= tol).collect()
}
