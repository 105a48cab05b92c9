//! Reduction of a mixing two-well problem to canonical data with `e₁` optimal.
//!
//! * curl: `F′ = FR`, `a′ⱼ = aⱼR` with `Re₁ = ξ*`; back: `u = u′Rᵀ`.
//! * div: `F′ = FSᵀ`, `a′ⱼ = aⱼSᵀ` with `S` the quarter turn, then the curl
//!   rotation; back: `u = u″RᵀS`.
//! * curlcurl, symmetrization path: semidefinite wells are reused, indefinite
//!   wells are lifted to `a_θ̃ − θ̃ b⊗ξ*`, `a_θ̃ + (1−θ̃) b⊗ξ*`; back:
//!   `u = sym(u″Rᵀ)`.
//! * curlcurl rank one, Chan–Conti path: `F′ = RᵀFR`, `a′ⱼ = RᵀaⱼR`; back:
//!   `u = R u′ Rᵀ`.

use serde::{Deserialize, Serialize};

use crate::compatibility::{cc_spectrum, multiplier_p, Definiteness};
use crate::error::{Result, TwoWellError};
use crate::mat2::{Mat2, StrainMap};
use crate::operator_kernel::{DiffOp, Direction, Matrix, OpKind};
use crate::relaxation::{compatible_approximation, relax, ProblemData, RelaxReport, Regime};
use crate::scalar::Real;

use super::cells::Physics;

/// Which canonical construction is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReductionPath {
    /// Gradient construction, measured by right multiplication.
    Grad,
    /// Gradient construction, measured after symmetrization.
    GradSym,
    /// Chan–Conti construction for rank-one curlcurl differences.
    ChanConti,
}

/// Canonical problem together with the back-transform.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Canonical<T> {
    /// Construction path.
    pub path: ReductionPath,
    /// Original data.
    pub original: ProblemData<T>,
    /// Relaxation of the original data.
    pub relax: RelaxReport<T>,
    /// Optimal direction used.
    pub xi_star: Direction<T>,
    /// Canonical data (curl for gradient paths, curlcurl for Chan–Conti).
    pub data: ProblemData<T>,
    /// Relaxation of the canonical data.
    pub canon_relax: RelaxReport<T>,
    /// Rotation with `Re₁` equal to the lamination direction.
    pub rotation: Mat2<T>,
    /// Right factor applied before the rotation (`Sᵀ` for div, else `I`).
    pub pre: Mat2<T>,
    /// Canonical amplitude `b` with `P(e₁)a′ = b⊗e₁` (or `(λ, 0)`).
    pub amplitude: [T; 2],
    /// Measurement data in the original frame.
    pub physics: Physics<T>,
}

impl<T: Real> Canonical<T> {
    /// Maps a canonical well-like matrix back to the original frame.
    pub fn back_state(&self, m: &Mat2<T>) -> Mat2<T> {
        let r = self.rotation;
        match self.path {
            ReductionPath::Grad => m.mm(&r.t()).mm(&self.pre.t()),
            ReductionPath::GradSym => m.mm(&r.t()).sym(),
            ReductionPath::ChanConti => r.mm(m).mm(&r.t()),
        }
    }

    /// Maps a canonical point to the original frame.
    pub fn back_point(&self, y: [T; 2]) -> [T; 2] {
        self.rotation.mv(y)
    }

    /// Maps a canonical displacement to the original frame.
    pub fn back_displacement(&self, v: [T; 2]) -> [T; 2] {
        match self.path {
            ReductionPath::ChanConti => self.rotation.mv(v),
            _ => v,
        }
    }

    /// Lamination direction in the original frame.
    pub fn direction(&self) -> [T; 2] {
        [self.rotation.at(0, 0), self.rotation.at(1, 0)]
    }
}

/// Reduces with the default path for the operator and state.
pub fn reduce_to_canonical<T: Real>(
    data: &ProblemData<T>,
    xi_star: &Direction<T>,
) -> Result<Canonical<T>> {
    let path = match data.op.kind {
        OpKind::Curl | OpKind::Div => ReductionPath::Grad,
        OpKind::CurlCurl => {
            if cc_spectrum(&data.a()).rank_one {
                ReductionPath::ChanConti
            } else {
                ReductionPath::GradSym
            }
        }
    };
    reduce_with_path(data, xi_star, path)
}

fn mat2<T: Real>(m: &Matrix<T>) -> Result<Mat2<T>> {
    Mat2::from_matrix(m)
}

/// Reduces with an explicit path.
pub fn reduce_with_path<T: Real>(
    data: &ProblemData<T>,
    xi_star: &Direction<T>,
    path: ReductionPath,
) -> Result<Canonical<T>> {
    if data.op.d != 2 {
        return Err(TwoWellError::UnsupportedDimension { op: "construction", d: data.op.d });
    }
    let a = data.a();
    let report = relax(data)?;
    if report.quantifiers.equicompatible {
        return Err(TwoWellError::Equicompatible("no branching construction is provided"));
    }
    if report.regime != Regime::Mixing {
        return Err(TwoWellError::PureRegime(report.regime.name()));
    }
    let theta = report.theta_tilde;
    let tilde = compatible_approximation(data, xi_star)?;
    let xi = xi_star.as_slice();
    let (f, a0, a1) = (mat2(&data.f)?, mat2(&data.a0)?, mat2(&data.a1)?);
    let offsets = [mat2(&tilde.a0)? - a0, mat2(&tilde.a1)? - a1];
    let rot = Mat2::rotation(xi[0], xi[1]);
    let id = Mat2::identity();
    let one = T::one();

    let (pre, map, canon_op, cf, c0, c1) = match (data.op.kind, path) {
        (OpKind::Curl, ReductionPath::Grad) => {
            (id, StrainMap::Right(rot.t()), DiffOp::curl(2), f.mm(&rot), a0.mm(&rot), a1.mm(&rot))
        }
        (OpKind::Div, ReductionPath::Grad) => {
            let s = Mat2::rotation(T::zero(), one);
            let st = s.t();
            let q = rot.t().mm(&s);
            (
                st,
                StrainMap::Right(q),
                DiffOp::curl(2),
                f.mm(&st).mm(&rot),
                a0.mm(&st).mm(&rot),
                a1.mm(&st).mm(&rot),
            )
        }
        (OpKind::CurlCurl, ReductionPath::GradSym) => {
            let spec = cc_spectrum(&a);
            let (l0, l1) = if spec.definiteness == Definiteness::Indefinite {
                let at = mat2(&data.a_theta(theta))?;
                let bx = Mat2::outer([tilde.b[0], tilde.b[1]], [xi[0], xi[1]]);
                (at - bx * theta, at + bx * (one - theta))
            } else {
                (a0, a1)
            };
            (id, StrainMap::SymRight(rot.t()), DiffOp::curl(2), f.mm(&rot), l0.mm(&rot), l1.mm(&rot))
        }
        (OpKind::CurlCurl, ReductionPath::ChanConti) => {
            let spec = cc_spectrum(&a);
            if !spec.rank_one {
                return Err(TwoWellError::InvalidArgument(
                    "Chan-Conti path needs a rank-one well difference".into(),
                ));
            }
            let conj = |m: Mat2<T>| rot.t().mm(&m).mm(&rot).sym();
            (id, StrainMap::Conjugate(rot), DiffOp::curl_curl(), conj(f), conj(a0), conj(a1))
        }
        (kind, p) => {
            return Err(TwoWellError::InvalidArgument(format!(
                "path {p:?} is not available for {}",
                kind.name()
            )))
        }
    };
    let canon = ProblemData::new(canon_op, cf.to_matrix(), c0.to_matrix(), c1.to_matrix())?;
    let canon_relax = relax(&canon)?;
    let ca = c1 - c0;
    let amplitude = match path {
        ReductionPath::ChanConti => [ca.at(0, 0), T::zero()],
        _ => [ca.at(0, 0), ca.at(1, 0)],
    };
    Ok(Canonical {
        path,
        original: data.clone(),
        relax: report,
        xi_star: xi_star.clone(),
        data: canon,
        canon_relax,
        rotation: rot,
        pre,
        amplitude,
        physics: Physics {
            map,
            offsets,
            a_norm: a.norm(),
            e0: relax(data)?.e0_density,
        },
    })
}

/// Measured conditions (C1)–(C4) of the canonical data.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Conditions {
    /// `p(e₁)` of the canonical difference, relative to `|a′|²`.
    pub c1_multiplier: f64,
    /// `|θ̃′ − θ̃|`.
    pub c2_theta: f64,
    /// Largest back-transform mismatch of the wells, relative to `|a|`.
    pub c3_wells: f64,
    /// `|E₀′ − E₀|` relative to `max(E₀, |a|²)`.
    pub c4_e0: f64,
    /// Canonical fraction lies in `(0, 1)`.
    pub mixing: bool,
}

impl Conditions {
    /// All measured quantities within `tol`.
    pub fn hold(&self, tol: f64) -> bool {
        self.mixing
            && self.c1_multiplier <= tol
            && self.c2_theta <= tol
            && self.c3_wells <= tol
            && self.c4_e0 <= tol
    }
}

/// Measures (C1)–(C4) for a reduction.
pub fn check_conditions<T: Real>(c: &Canonical<T>) -> Result<Conditions> {
    let ca = c.data.a();
    let e1 = Direction::axis(2, 0);
    let p = multiplier_p(&c.data.op, &ca, &e1)?;
    let an = c.original.a().norm();
    let wells = [
        (mat2(&c.data.a0)?, mat2(&c.original.a0)?),
        (mat2(&c.data.a1)?, mat2(&c.original.a1)?),
    ];
    let c3 = wells
        .iter()
        .map(|(cw, ow)| (c.back_state(cw) - *ow).norm_sq().sqrt().as_f64())
        .fold(0.0, f64::max)
        / an.as_f64();
    let scale = c.relax.e0_density.max(c.original.a().norm_sq()).as_f64();
    Ok(Conditions {
        c1_multiplier: (p / ca.norm_sq()).as_f64(),
        c2_theta: (c.canon_relax.theta_tilde - c.relax.theta_tilde).abs().as_f64(),
        c3_wells: c3,
        c4_e0: (c.canon_relax.e0_density - c.relax.e0_density).abs().as_f64() / scale,
        mixing: c.canon_relax.regime == Regime::Mixing,
    })
}
