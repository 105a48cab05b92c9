//! Excess energy, the quasiconvex envelope at fixed volume fraction, the
//! optimal volume fraction and compatible approximations.
//!
//! With `a = a₁ − a₀` and `a_θ = (1−θ)a₀ + θa₁` the envelope is
//! `H(θ) = |F − a_θ|² + θ(1−θ)h`, a strictly convex quadratic with leading
//! coefficient `g`. Its minimizer over `[0, 1]` is
//! `θ̃ = clamp((2⟨F − a₀, a⟩ − h) / (2g))` and `E₀ = H(θ̃)`.

use serde::{Deserialize, Serialize};

use crate::compatibility::{
    multiplier_p_with_h, optimal_directions, quantifiers, CompatQuantifiers, LaminationSet,
};
use crate::error::{Result, TwoWellError};
use crate::operator_kernel::{project_raw, DiffOp, Direction, Matrix, OpKind};
use crate::scalar::Real;

/// Distance from 0 or 1 within which `θ̃` is snapped to the boundary.
pub const SNAP_TOL: f64 = 1e-12;
/// Relative tolerance on `p_{A,a}(ξ*)` accepted for a lamination direction.
pub const OPTIMAL_TOL: f64 = 1e-8;

/// Boundary datum and well pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemData<T> {
    /// Constraint operator.
    pub op: DiffOp,
    /// Boundary datum `F`.
    pub f: Matrix<T>,
    /// Well `a₀`.
    pub a0: Matrix<T>,
    /// Well `a₁`.
    pub a1: Matrix<T>,
}

impl<T: Real> ProblemData<T> {
    /// Validates dimensions, symmetry and well separation.
    pub fn new(op: DiffOp, f: Matrix<T>, a0: Matrix<T>, a1: Matrix<T>) -> Result<Self> {
        for m in [&f, &a0, &a1] {
            op.check_state(m)?;
        }
        let (f, a0, a1) = if op.symmetric_states() {
            (f.sym(), a0.sym(), a1.sym())
        } else {
            (f, a0, a1)
        };
        let diff = (&a1 - &a0).norm();
        let scale = a0.norm().max(a1.norm()).max(T::one());
        if diff <= T::lit(1e-12) * scale {
            return Err(TwoWellError::DegenerateWells(diff.as_f64()));
        }
        Ok(Self { op, f, a0, a1 })
    }

    /// Well difference `a = a₁ − a₀`.
    pub fn a(&self) -> Matrix<T> {
        &self.a1 - &self.a0
    }

    /// Weighted average `a_θ = (1−θ)a₀ + θa₁`.
    pub fn a_theta(&self, theta: T) -> Matrix<T> {
        &(&self.a0 * (T::one() - theta)) + &(&self.a1 * theta)
    }

    /// Converts the scalar type.
    pub fn cast<U: Real>(&self) -> ProblemData<U> {
        ProblemData { op: self.op, f: self.f.cast(), a0: self.a0.cast(), a1: self.a1.cast() }
    }
}

/// Phase regime determined by `θ̃`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `θ̃ = 0`: the constant state `a₀` is optimal.
    Pure0,
    /// `θ̃ ∈ (0, 1)`.
    Mixing,
    /// `θ̃ = 1`: the constant state `a₁` is optimal.
    Pure1,
}

impl Regime {
    /// Short name.
    pub fn name(self) -> &'static str {
        match self {
            Regime::Pure0 => "pure0",
            Regime::Mixing => "mixing",
            Regime::Pure1 => "pure1",
        }
    }
}

/// Compatible approximation of the wells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TildeWells<T> {
    /// `ã₀ = F − θ̃ P(ξ*)a`.
    pub a0: Matrix<T>,
    /// `ã₁ = F + (1−θ̃) P(ξ*)a`.
    pub a1: Matrix<T>,
    /// Lamination direction.
    pub xi: Direction<T>,
    /// Amplitude with `P(ξ*)a = b⊗ξ*` (curl, div) or `b⊙ξ*` (curlcurl).
    pub b: Vec<T>,
}

/// Relaxation summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelaxReport<T> {
    /// Optimal volume fraction.
    pub theta_tilde: T,
    /// Excess energy per unit volume.
    #[serde(rename = "E0_density")]
    pub e0_density: T,
    /// Phase regime.
    pub regime: Regime,
    /// Quantifiers of `a`.
    pub quantifiers: CompatQuantifiers<T>,
    /// Projection coefficient `θ* = ⟨F − a₀, a⟩/|a|²`.
    pub theta_star: T,
    /// Slab half-margin `R_A = h/(2|a|²)`.
    #[serde(rename = "R_A")]
    pub r_a: T,
    /// Optimal lamination directions.
    pub lamination: LaminationSet<T>,
    /// Compatible approximation for the default witness.
    pub tilde_wells: Option<TildeWells<T>>,
}

/// `|F − a_θ|² + θ(1−θ)h` for a known `h`.
pub fn envelope_with_h<T: Real>(data: &ProblemData<T>, h: T, theta: T) -> T {
    (&data.f - &data.a_theta(theta)).norm_sq() + theta * (T::one() - theta) * h
}

/// Quasiconvex envelope at fixed volume fraction.
pub fn envelope_at_fraction<T: Real>(data: &ProblemData<T>, theta: T) -> Result<T> {
    if !(theta >= T::zero() && theta <= T::one()) {
        return Err(TwoWellError::ThetaOutOfRange(theta.as_f64()));
    }
    let q = quantifiers(&data.op, &data.a())?;
    Ok(envelope_with_h(data, q.h, theta))
}

fn fraction_from<T: Real>(data: &ProblemData<T>, q: &CompatQuantifiers<T>) -> Result<(T, T)> {
    if !(q.g > T::zero()) {
        return Err(TwoWellError::Internal(format!("leading coefficient g = {} ≤ 0", q.g)));
    }
    let a = data.a();
    let proj = (&data.f - &data.a0).dot(&a);
    let raw = (T::lit(2.0) * proj - q.h) / (T::lit(2.0) * q.g);
    let snap = T::lit(SNAP_TOL);
    let theta = if raw <= snap {
        T::zero()
    } else if raw >= T::one() - snap {
        T::one()
    } else {
        raw
    };
    Ok((theta, envelope_with_h(data, q.h, theta)))
}

/// Optimal volume fraction `θ̃` and excess energy density `E₀`.
pub fn optimal_fraction<T: Real>(data: &ProblemData<T>) -> Result<(T, T)> {
    let q = quantifiers(&data.op, &data.a())?;
    fraction_from(data, &q)
}

/// Regime of a fraction.
pub fn regime_of<T: Real>(theta: T) -> Regime {
    if theta == T::zero() {
        Regime::Pure0
    } else if theta == T::one() {
        Regime::Pure1
    } else {
        Regime::Mixing
    }
}

/// Extracts `b` from `P(ξ*)a`.
pub fn extract_b<T: Real>(op: &DiffOp, pa: &Matrix<T>, xi: &Direction<T>) -> Vec<T> {
    match op.kind {
        OpKind::Curl | OpKind::Div => pa.mat_vec(xi.as_slice()),
        OpKind::CurlCurl => {
            let w = pa.mat_vec(xi.as_slice());
            crate::operator_kernel::g_xi(xi.as_slice(), &w)
        }
    }
}

/// Compatible approximation `(ã₀, ã₁, b)` for an optimal direction `ξ*`.
pub fn compatible_approximation<T: Real>(
    data: &ProblemData<T>,
    xi_star: &Direction<T>,
) -> Result<TildeWells<T>> {
    let q = quantifiers(&data.op, &data.a())?;
    let (theta, _) = fraction_from(data, &q)?;
    tilde_wells_with(data, &q, theta, xi_star)
}

fn tilde_wells_with<T: Real>(
    data: &ProblemData<T>,
    q: &CompatQuantifiers<T>,
    theta: T,
    xi: &Direction<T>,
) -> Result<TildeWells<T>> {
    let a = data.a();
    let p = multiplier_p_with_h(&data.op, &a, q.h, xi)?;
    if p > T::lit(OPTIMAL_TOL) * a.norm_sq() {
        return Err(TwoWellError::NotOptimal(p.as_f64()));
    }
    let pa = project_raw(&data.op, xi.as_slice(), &a);
    Ok(TildeWells {
        a0: &data.f - &(&pa * theta),
        a1: &data.f + &(&pa * (T::one() - theta)),
        xi: xi.clone(),
        b: extract_b(&data.op, &pa, xi),
    })
}

/// Full relaxation analysis with the default witness.
pub fn relax<T: Real>(data: &ProblemData<T>) -> Result<RelaxReport<T>> {
    let a = data.a();
    let q = quantifiers(&data.op, &a)?;
    let (theta, e0) = fraction_from(data, &q)?;
    let lamination = optimal_directions(&data.op, &a)?;
    let n2 = a.norm_sq();
    let tilde = tilde_wells_with(data, &q, theta, lamination.first())?;
    Ok(RelaxReport {
        theta_tilde: theta,
        e0_density: e0,
        regime: regime_of(theta),
        quantifiers: q,
        theta_star: (&data.f - &data.a0).dot(&a) / n2,
        r_a: q.h / (T::lit(2.0) * n2),
        lamination,
        tilde_wells: Some(tilde),
    })
}

/// Grid-search oracle: minimizer and minimum of the envelope on
/// `points + 1` equispaced fractions.
pub fn grid_search_fraction<T: Real>(data: &ProblemData<T>, h: T, points: usize) -> (f64, f64) {
    let d64: ProblemData<f64> = data.cast();
    let h = h.as_f64();
    let fa0 = &d64.f - &d64.a0;
    let a = d64.a();
    let fv = fa0.as_slice();
    let av = a.as_slice();
    let mut best = (0.0, f64::INFINITY);
    for k in 0..=points {
        let t = k as f64 / points as f64;
        let mut s = 0.0;
        for (x, y) in fv.iter().zip(av) {
            let r = x - t * y;
            s += r * r;
        }
        let e = s + t * (1.0 - t) * h;
        if e < best.1 {
            best = (t, e);
        }
    }
    best
}
