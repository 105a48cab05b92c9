//! Compatibility quantifiers, optimal lamination directions, the Fourier
//! multiplier `p_{A,a}` and its maximal vanishing order.
//!
//! Closed forms:
//!
//! * curl: `g = λ_max(aᵀa)`, `S` = unit sphere of the top eigenspace.
//! * div: `h = λ_min(aᵀa)`, `S` = unit sphere of the bottom eigenspace.
//! * curlcurl (`d = 2`, eigenvalues `λ₋ ≤ λ₊`): semidefinite states give
//!   `g = max λ²`, `h = min λ²`; indefinite states give `h = 0` with four
//!   optimal directions `r₋(±e₋) + r₊(±e₊)`, `r₊² = λ₊/(λ₊−λ₋)`.
//!
//! Every closed form has a sampling counterpart in this module.

use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::eigen::{cluster, sym_eigen};
use crate::error::{Result, TwoWellError};
use crate::fit::{linear_fit, LinearFit};
use crate::operator_kernel::{
    project_compatible_oracle, project_raw, DiffOp, Direction, Matrix, OpKind,
};
use crate::scalar::Real;

/// Relative tolerance of the equicompatibility tests.
pub const EQUI_TOL: f64 = 1e-10;
/// Relative tolerance deciding eigenvalue degeneracy and rank.
pub const RANK_TOL: f64 = 1e-10;

/// Shape of the set of optimal lamination directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LaminationKind<T> {
    /// Unit sphere of the span of an orthonormal `basis`.
    Subsphere {
        /// Orthonormal basis of the eigenspace.
        basis: Vec<Vec<T>>,
    },
    /// Four directions in two antipodal pairs (indefinite curlcurl states).
    FourPoints {
        /// Weight on `±e₋`.
        r_minus: T,
        /// Weight on `±e₊`.
        r_plus: T,
    },
    /// Every direction is optimal.
    FullSphere,
}

/// Optimal lamination directions with explicit witnesses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaminationSet<T> {
    /// Set description.
    pub kind: LaminationKind<T>,
    /// Members of the set; the first one is the default witness.
    pub witnesses: Vec<Direction<T>>,
}

impl<T: Real> LaminationSet<T> {
    /// Default witness.
    pub fn first(&self) -> &Direction<T> {
        &self.witnesses[0]
    }

    /// Euclidean distance from `xi` to the set.
    pub fn distance(&self, xi: &Direction<T>) -> T {
        match &self.kind {
            LaminationKind::FullSphere => T::zero(),
            LaminationKind::FourPoints { .. } => self
                .witnesses
                .iter()
                .map(|w| w.chord(xi))
                .fold(T::infinity(), |m, x| m.min(x)),
            LaminationKind::Subsphere { basis } => {
                let x = xi.as_slice();
                let mut proj = vec![T::zero(); x.len()];
                for u in basis {
                    let c: T = u.iter().zip(x).map(|(&p, &q)| p * q).sum();
                    for (pi, &ui) in proj.iter_mut().zip(u) {
                        *pi = *pi + c * ui;
                    }
                }
                match Direction::new(proj) {
                    Ok(p) => p.chord(xi),
                    Err(_) => T::lit(std::f64::consts::SQRT_2),
                }
            }
        }
    }
}

/// Compatibility quantifiers of a state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatQuantifiers<T> {
    /// `min_ξ |a − P(ξ)a|²`.
    pub h: T,
    /// `max_ξ |P(ξ)a|² = |a|² − h`.
    pub g: T,
    /// Every direction is optimal.
    pub equicompatible: bool,
    /// Maximal vanishing order of `p_{A,a}`; absent when equicompatible.
    pub vanishing_order: Option<u32>,
}

/// Sign pattern of a planar symmetric state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Definiteness {
    /// `λ₋ ≥ 0`.
    PositiveSemidefinite,
    /// `λ₊ ≤ 0`.
    NegativeSemidefinite,
    /// `λ₋ < 0 < λ₊`.
    Indefinite,
}

/// Spectral data of a planar symmetric state with near-zero eigenvalues snapped.
#[derive(Clone, Debug)]
pub struct CcSpectrum<T> {
    /// Smaller eigenvalue.
    pub lambda_minus: T,
    /// Larger eigenvalue.
    pub lambda_plus: T,
    /// Eigenvector of `λ₋`.
    pub e_minus: Vec<T>,
    /// Eigenvector of `λ₊`.
    pub e_plus: Vec<T>,
    /// Sign pattern.
    pub definiteness: Definiteness,
    /// `min |λ| ≤ 1e−10 max |λ|`.
    pub rank_one: bool,
}

/// Eigen-analysis of a planar symmetric state.
pub fn cc_spectrum<T: Real>(a: &Matrix<T>) -> CcSpectrum<T> {
    let e = sym_eigen(a);
    let (mut lm, mut lp) = (e.values[0], e.values[1]);
    let big = lm.abs().max(lp.abs());
    let tol = T::lit(RANK_TOL) * big;
    let rank_one = lm.abs().min(lp.abs()) <= tol;
    if lm.abs() <= tol {
        lm = T::zero();
    }
    if lp.abs() <= tol {
        lp = T::zero();
    }
    let definiteness = if lm >= T::zero() {
        Definiteness::PositiveSemidefinite
    } else if lp <= T::zero() {
        Definiteness::NegativeSemidefinite
    } else {
        Definiteness::Indefinite
    };
    CcSpectrum {
        lambda_minus: lm,
        lambda_plus: lp,
        e_minus: e.vectors[0].clone(),
        e_plus: e.vectors[1].clone(),
        definiteness,
        rank_one,
    }
}

fn check_input<T: Real>(op: &DiffOp, a: &Matrix<T>) -> Result<()> {
    op.require_closed_form()?;
    op.check_state(a)?;
    let n = a.norm();
    if !(n > T::zero()) {
        return Err(TwoWellError::DegenerateWells(n.as_f64()));
    }
    Ok(())
}

/// Whether `a` is equicompatible for `op`.
pub fn is_equicompatible<T: Real>(op: &DiffOp, a: &Matrix<T>) -> bool {
    let tol = T::lit(EQUI_TOL);
    match op.kind {
        OpKind::Curl | OpKind::Div => {
            let m = a.gram();
            let c = m.trace() / T::from_usize_lossy(op.d);
            let dev = &m - &(Matrix::identity(op.d) * c);
            dev.norm() <= tol * a.norm_sq()
        }
        OpKind::CurlCurl => {
            let c = a.trace() / T::from_usize_lossy(op.d);
            let dev = a - &(Matrix::identity(op.d) * c);
            dev.norm() <= tol * a.norm()
        }
    }
}

/// Closed-form quantifiers `h`, `g`, equicompatibility and vanishing order.
pub fn quantifiers<T: Real>(op: &DiffOp, a: &Matrix<T>) -> Result<CompatQuantifiers<T>> {
    check_input(op, a)?;
    let equicompatible = is_equicompatible(op, a);
    let (h, g, order) = match op.kind {
        OpKind::Curl | OpKind::Div => {
            let e = sym_eigen(&a.gram());
            let vals: Vec<T> = e.values.iter().map(|&v| v.max(T::zero())).collect();
            let (h, g) = if op.kind == OpKind::Curl {
                let g = *vals.last().unwrap();
                (vals[..vals.len() - 1].iter().copied().sum(), g)
            } else {
                (vals[0], vals[1..].iter().copied().sum())
            };
            (h, g, 1)
        }
        OpKind::CurlCurl => {
            let s = cc_spectrum(a);
            let (lm, lp) = (s.lambda_minus, s.lambda_plus);
            let (h, g) = match s.definiteness {
                Definiteness::PositiveSemidefinite => (lm * lm, lp * lp),
                Definiteness::NegativeSemidefinite => (lp * lp, lm * lm),
                Definiteness::Indefinite => (T::zero(), a.norm_sq()),
            };
            (h, g, if s.rank_one { 2 } else { 1 })
        }
    };
    Ok(CompatQuantifiers {
        h,
        g,
        equicompatible,
        vanishing_order: if equicompatible { None } else { Some(order) },
    })
}

fn subsphere<T: Real>(basis: Vec<Vec<T>>) -> Result<LaminationSet<T>> {
    let mut witnesses = Vec::with_capacity(2 * basis.len());
    for u in &basis {
        let w = Direction::new(u.clone())?;
        witnesses.push(w.clone());
        witnesses.push(w.neg());
    }
    Ok(LaminationSet { kind: LaminationKind::Subsphere { basis }, witnesses })
}

fn full_sphere<T: Real>(d: usize) -> LaminationSet<T> {
    let witnesses = (0..d).map(|i| Direction::axis(d, i)).collect();
    LaminationSet { kind: LaminationKind::FullSphere, witnesses }
}

/// Closed-form optimal lamination directions.
pub fn optimal_directions<T: Real>(op: &DiffOp, a: &Matrix<T>) -> Result<LaminationSet<T>> {
    check_input(op, a)?;
    if is_equicompatible(op, a) {
        return Ok(full_sphere(op.d));
    }
    match op.kind {
        OpKind::Curl | OpKind::Div => {
            let e = sym_eigen(&a.gram());
            let target = if op.kind == OpKind::Curl { op.d - 1 } else { 0 };
            let idx = cluster(&e.values, target, T::lit(RANK_TOL) * a.norm_sq());
            if idx.len() == op.d {
                return Ok(full_sphere(op.d));
            }
            subsphere(idx.into_iter().map(|k| e.vectors[k].clone()).collect())
        }
        OpKind::CurlCurl => {
            let s = cc_spectrum(a);
            match s.definiteness {
                Definiteness::PositiveSemidefinite => subsphere(vec![s.e_plus]),
                Definiteness::NegativeSemidefinite => subsphere(vec![s.e_minus]),
                Definiteness::Indefinite => {
                    let (lm, lp) = (s.lambda_minus, s.lambda_plus);
                    let gap = lp - lm;
                    let r_plus = (lp / gap).sqrt();
                    let r_minus = (-lm / gap).sqrt();
                    let point = |sm: T, sp: T| {
                        Direction::new(vec![
                            sm * r_minus * s.e_minus[0] + sp * r_plus * s.e_plus[0],
                            sm * r_minus * s.e_minus[1] + sp * r_plus * s.e_plus[1],
                        ])
                    };
                    let one = T::one();
                    let witnesses = vec![
                        point(one, one)?,
                        point(-one, -one)?,
                        point(one, -one)?,
                        point(-one, one)?,
                    ];
                    Ok(LaminationSet {
                        kind: LaminationKind::FourPoints { r_minus, r_plus },
                        witnesses,
                    })
                }
            }
        }
    }
}

/// `p_{A,a}(ξ) = |a − P(ξ)a|² − h`, clamped at zero.
pub fn multiplier_p<T: Real>(op: &DiffOp, a: &Matrix<T>, xi: &Direction<T>) -> Result<T> {
    let q = quantifiers(op, a)?;
    multiplier_p_with_h(op, a, q.h, xi)
}

/// [`multiplier_p`] with a precomputed `h`.
pub fn multiplier_p_with_h<T: Real>(
    op: &DiffOp,
    a: &Matrix<T>,
    h: T,
    xi: &Direction<T>,
) -> Result<T> {
    if xi.dim() != op.d {
        return Err(TwoWellError::DimensionMismatch { expected: op.d, found: xi.dim() });
    }
    let p = project_raw(op, xi.as_slice(), a);
    Ok(((a - &p).norm_sq() - h).max(T::zero()))
}

/// Sampled quantifiers with polished extremizers.
#[derive(Clone, Debug)]
pub struct SampledQuantifiers<T> {
    /// Sampled minimum of `|a − P(ξ)a|²`.
    pub h: T,
    /// Sampled maximum of `|P(ξ)a|²`.
    pub g: T,
    /// Minimizer of `|a − P(ξ)a|²`, an approximate member of `S_A(a)`.
    pub argmin: Direction<T>,
}

/// Evaluates `P(ξ)a` without closed-form dimension restrictions.
fn sampled_projection(op: &DiffOp, a: &Matrix<f64>, xi: &[f64]) -> Matrix<f64> {
    if op.kind == OpKind::CurlCurl && op.d != 2 {
        let dir = Direction::new(xi.to_vec()).expect("unit sample");
        project_compatible_oracle(op, &dir, a).expect("oracle projection")
    } else {
        let n = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let x: Vec<f64> = xi.iter().map(|v| v / n).collect();
        project_raw(op, &x, a)
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-14 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Orthonormal tangent basis at a unit vector in `ℝ³`.
fn tangent_frame(x: &[f64]) -> ([f64; 3], [f64; 3]) {
    let pick = if x[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let c: f64 = pick.iter().zip(x).map(|(p, q)| p * q).sum();
    let mut t1 = [pick[0] - c * x[0], pick[1] - c * x[1], pick[2] - c * x[2]];
    let n1 = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    t1.iter_mut().for_each(|v| *v /= n1);
    let t2 = [
        x[1] * t1[2] - x[2] * t1[1],
        x[2] * t1[0] - x[0] * t1[2],
        x[0] * t1[1] - x[1] * t1[0],
    ];
    (t1, t2)
}

fn polish_3d(f: &impl Fn(&[f64]) -> f64, start: &[f64], step0: f64) -> Vec<f64> {
    let mut x = start.to_vec();
    let mut fx = f(&x);
    let mut step = step0;
    while step > 1e-10 {
        let (t1, t2) = tangent_frame(&x);
        let mut improved = false;
        for (s1, s2) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let cand: Vec<f64> =
                (0..3).map(|i| x[i] + step * (s1 * t1[i] + s2 * t2[i])).collect();
            let n = cand.iter().map(|v| v * v).sum::<f64>().sqrt();
            let cand: Vec<f64> = cand.iter().map(|v| v / n).collect();
            let fc = f(&cand);
            if fc < fx {
                x = cand;
                fx = fc;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    x
}

/// Sphere-sampling oracle for `h` and `g` with a local refinement of the
/// best sample.
///
/// Planar problems use `n_dirs` equispaced angles on a half circle; spatial
/// problems use a Fibonacci lattice of `n_dirs` points.
pub fn sampled_quantifiers<T: Real>(
    op: &DiffOp,
    a: &Matrix<T>,
    n_dirs: usize,
) -> Result<SampledQuantifiers<T>> {
    op.check_state(a)?;
    if n_dirs == 0 {
        return Err(TwoWellError::InvalidArgument("n_dirs must be positive".into()));
    }
    let a64: Matrix<f64> = a.cast();
    let f = |x: &[f64]| (&a64 - &sampled_projection(op, &a64, x)).norm_sq();
    let pg = |x: &[f64]| sampled_projection(op, &a64, x).norm_sq();
    let (hmin, argmin, gmax) = if op.d == 2 {
        let dphi = std::f64::consts::PI / n_dirs as f64;
        let ang = |k: usize| (k as f64 + 0.5) * dphi;
        let fa = |phi: f64| f(&[phi.cos(), phi.sin()]);
        let ga = |phi: f64| pg(&[phi.cos(), phi.sin()]);
        let vals: Vec<f64> = (0..n_dirs).map(|k| fa(ang(k))).collect();
        let gvals: Vec<f64> = (0..n_dirs).map(|k| ga(ang(k))).collect();
        let (kmin, _) = extremum(&vals, |x, y| x < y);
        let (kmax, _) = extremum(&gvals, |x, y| x > y);
        let pmin = golden_min(fa, ang(kmin) - dphi, ang(kmin) + dphi);
        let pmax = golden_min(|p| -ga(p), ang(kmax) - dphi, ang(kmax) + dphi);
        let hmin = fa(pmin).min(vals[kmin]);
        let gmax = ga(pmax).max(gvals[kmax]);
        (hmin, vec![pmin.cos(), pmin.sin()], gmax)
    } else if op.d == 3 {
        let pts = fibonacci_sphere(n_dirs);
        let vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
        let gvals: Vec<f64> = pts.iter().map(|p| pg(p)).collect();
        let (kmin, _) = extremum(&vals, |x, y| x < y);
        let (kmax, _) = extremum(&gvals, |x, y| x > y);
        let step = (4.0 * std::f64::consts::PI / n_dirs as f64).sqrt();
        let xmin = polish_3d(&f, &pts[kmin], step);
        let xmax = polish_3d(&|x: &[f64]| -pg(x), &pts[kmax], step);
        (f(&xmin).min(vals[kmin]), xmin.clone(), pg(&xmax).max(gvals[kmax]))
    } else {
        return Err(TwoWellError::UnsupportedDimension { op: "sampling oracle", d: op.d });
    };
    Ok(SampledQuantifiers {
        h: T::lit(hmin.max(0.0)),
        g: T::lit(gmax.max(0.0)),
        argmin: Direction::new(argmin.into_iter().map(T::lit).collect())?,
    })
}

fn extremum(vals: &[f64], better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, vals[0]);
    for (k, &v) in vals.iter().enumerate().skip(1) {
        if better(v, best.1) {
            best = (k, v);
        }
    }
    best
}

/// Result of a vanishing-order fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VanishingFit {
    /// Fitted slope of `log p` against `log dist(ξ, S)`.
    pub slope: f64,
    /// `slope / 2`, the estimate of `L`.
    pub order: f64,
    /// Underlying line fit.
    pub fit: LinearFit,
    /// Sampled distances to the optimal set.
    pub dist: Vec<f64>,
    /// Sampled multiplier values.
    pub p: Vec<f64>,
}

/// `|P(ξ/|ξ|)a|²` in double-double precision, up to a state-only constant.
fn proj_norm_dd(op: &DiffOp, a: &Matrix<f64>, xi: &[f64]) -> Dd {
    let d = op.d;
    let w: Vec<Dd> = (0..d)
        .map(|i| (0..d).fold(Dd::ZERO, |s, j| s + Dd::from(a[(i, j)]) * Dd::from(xi[j])))
        .collect();
    let n = xi.iter().fold(Dd::ZERO, |s, &x| s + Dd::from(x) * Dd::from(x));
    let ww = w.iter().fold(Dd::ZERO, |s, &x| s + x * x);
    match op.kind {
        OpKind::Curl => ww / n,
        OpKind::Div => -(ww / n),
        OpKind::CurlCurl => {
            let xw = w.iter().zip(xi).fold(Dd::ZERO, |s, (&wi, &x)| s + wi * Dd::from(x));
            Dd::from(2.0) * ww / n - (xw * xw) / (n * n)
        }
    }
}

/// Number of geometric sample distances used by [`vanishing_order_fit`].
pub const FIT_POINTS: usize = 31;

/// Fits the local vanishing exponent of `p_{A,a}` at the default witness.
///
/// Directions `cos ρ ξ₀ + sin ρ t` with `ρ` geometric in `[1e−4, 1e−1]` and
/// `t` a unit tangent leaving `S_A(a)` are sampled; the multiplier is
/// evaluated in double-double precision.
pub fn vanishing_order_fit<T: Real>(op: &DiffOp, a: &Matrix<T>) -> Result<VanishingFit> {
    let q = quantifiers(op, a)?;
    if q.equicompatible {
        return Err(TwoWellError::Equicompatible("vanishing order is undefined"));
    }
    let set = optimal_directions(op, a)?;
    let set64 = LaminationSet::<f64> {
        kind: match &set.kind {
            LaminationKind::Subsphere { basis } => LaminationKind::Subsphere {
                basis: basis.iter().map(|u| u.iter().map(|x| x.as_f64()).collect()).collect(),
            },
            LaminationKind::FourPoints { r_minus, r_plus } => LaminationKind::FourPoints {
                r_minus: r_minus.as_f64(),
                r_plus: r_plus.as_f64(),
            },
            LaminationKind::FullSphere => LaminationKind::FullSphere,
        },
        witnesses: set
            .witnesses
            .iter()
            .map(|w| Direction::new(w.as_slice().iter().map(|x| x.as_f64()).collect()))
            .collect::<Result<_>>()?,
    };
    let a64: Matrix<f64> = a.cast();
    let xi0 = set64.first().as_slice().to_vec();
    let tangent = leaving_tangent(&set64, &xi0);
    let q0 = proj_norm_dd(op, &a64, &xi0);
    let scale = a64.norm_sq();
    let (lo, hi) = (1e-4f64.ln(), 1e-1f64.ln());
    let mut dist = Vec::new();
    let mut pv = Vec::new();
    for k in 0..FIT_POINTS {
        let rho = (lo + (hi - lo) * k as f64 / (FIT_POINTS - 1) as f64).exp();
        let (s, c) = rho.sin_cos();
        let xi: Vec<f64> = xi0.iter().zip(&tangent).map(|(&x, &t)| c * x + s * t).collect();
        let p = (q0 - proj_norm_dd(op, &a64, &xi)).to_f64();
        let dir = Direction::new(xi)?;
        let dd = set64.distance(&dir);
        if p > 1e-14 * scale && dd > 0.0 {
            dist.push(dd);
            pv.push(p);
        }
    }
    if pv.len() < 3 {
        return Err(TwoWellError::Equicompatible("multiplier below 1e-14 along the fit path"));
    }
    let lx: Vec<f64> = dist.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = pv.iter().map(|x| x.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(VanishingFit { slope: fit.slope, order: fit.slope / 2.0, fit, dist, p: pv })
}

/// Unit tangent at `xi0` pointing away from the optimal set.
fn leaving_tangent(set: &LaminationSet<f64>, xi0: &[f64]) -> Vec<f64> {
    let d = xi0.len();
    let span: Vec<Vec<f64>> = match &set.kind {
        LaminationKind::Subsphere { basis } => basis.clone(),
        _ => vec![xi0.to_vec()],
    };
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for i in 0..d {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        for u in &span {
            let c: f64 = u.iter().zip(&v).map(|(p, q)| p * q).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= c * ui;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > best_norm {
            best_norm = n;
            best = Some(v.into_iter().map(|x| x / n).collect());
        }
    }
    best.expect("non-full optimal set has a normal direction")
}
