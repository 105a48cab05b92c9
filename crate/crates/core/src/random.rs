//! Seeded generators of random two-well instances.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::compatibility::is_equicompatible;
use crate::error::Result;
use crate::operator_kernel::{DiffOp, Matrix, OpKind};
use crate::relaxation::{relax, ProblemData, Regime};

/// Spectral class of a symmetric `2×2` well difference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CcClass {
    /// One zero eigenvalue.
    RankOne,
    /// Both eigenvalues of one sign.
    Definite,
    /// Eigenvalues of opposite signs.
    Indefinite,
}

/// Matrix with independent standard normal entries.
pub fn random_matrix<R: Rng>(rng: &mut R, d: usize) -> Matrix<f64> {
    let data = (0..d * d).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::new(d, data).expect("square data")
}

/// Symmetric part of a normal matrix.
pub fn random_sym<R: Rng>(rng: &mut R, d: usize) -> Matrix<f64> {
    random_matrix(rng, d).sym()
}

/// Symmetric `2×2` matrix of the given class, eigenvalue ratio in `[0.1, 0.9]`.
pub fn random_cc_difference<R: Rng>(rng: &mut R, class: CcClass) -> Matrix<f64> {
    let phi: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let l1: f64 = sign * rng.random_range(0.5..2.0);
    let r: f64 = rng.random_range(0.1..0.9);
    let l2 = match class {
        CcClass::RankOne => 0.0,
        CcClass::Definite => r * l1,
        CcClass::Indefinite => -r * l1,
    };
    let (c, s) = (phi.cos(), phi.sin());
    let e1 = [c, s];
    let e2 = [-s, c];
    &(&Matrix::outer(&e1, &e1) * l1) + &(&Matrix::outer(&e2, &e2) * l2)
}

/// Random data for `op`: wells and boundary datum independent normals.
pub fn random_problem<R: Rng>(rng: &mut R, op: DiffOp) -> Result<ProblemData<f64>> {
    let d = op.d;
    let gen = |rng: &mut R| {
        if op.kind == OpKind::CurlCurl {
            random_sym(rng, d)
        } else {
            random_matrix(rng, d)
        }
    };
    let a0 = gen(rng);
    let a1 = gen(rng);
    let f = gen(rng);
    ProblemData::new(op, f, a0, a1)
}

/// Random non-equicompatible Mixing data with `θ̃ ∈ [0.05, 0.95]`.
///
/// For curlcurl, `class` fixes the spectrum of `a₁ − a₀`.
pub fn random_mixing<R: Rng>(
    rng: &mut R,
    op: DiffOp,
    class: Option<CcClass>,
) -> Result<ProblemData<f64>> {
    let d = op.d;
    loop {
        let (a0, a) = if op.kind == OpKind::CurlCurl {
            let a = random_cc_difference(rng, class.unwrap_or(CcClass::Indefinite));
            (random_sym(rng, 2), a)
        } else {
            (random_matrix(rng, d), random_matrix(rng, d))
        };
        if is_equicompatible(&op, &a) {
            continue;
        }
        let a1 = &a0 + &a;
        let t: f64 = rng.random_range(0.15..0.85);
        let mut noise = random_matrix(rng, d);
        if op.kind == OpKind::CurlCurl {
            noise = noise.sym();
        }
        let f = &(&a0 + &(&a * t)) + &(&noise * (0.3 * a.norm()));
        let data = ProblemData::new(op, f, a0, a1)?;
        let rep = relax(&data)?;
        if rep.regime == Regime::Mixing && (0.05..=0.95).contains(&rep.theta_tilde) {
            return Ok(data);
        }
    }
}
