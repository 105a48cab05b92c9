//! Unit cells: displacement, phase, residual, quadrature and ledgers.

use serde::{Deserialize, Serialize};

use super::sawtooth;
use crate::error::{Result, TwoWellError};
use crate::mat2::{Mat2, StrainMap};
use crate::quadrature::{adaptive_simpson, gauss_legendre_on};
use crate::scalar::Real;

/// Gauss–Legendre order in `x₂` for curved cells.
pub const CC_GL_ORDER: usize = 32;

/// Cell type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    /// Sheared five-region gradient cell.
    GradInterior,
    /// Gradient cut-off cell with vanishing top trace.
    GradCutoff,
    /// Chan–Conti cell with curved interfaces.
    CcInterior,
    /// Cut-off cell for symmetric gradients.
    CcCutoff,
}

impl CellKind {
    /// Whether the residual uses the symmetric gradient.
    pub fn symmetric(self) -> bool {
        matches!(self, CellKind::CcInterior | CellKind::CcCutoff)
    }

    /// Whether this is a cut-off cell.
    pub fn cutoff(self) -> bool {
        matches!(self, CellKind::GradCutoff | CellKind::CcCutoff)
    }
}

/// Mirror rule for the lower half square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mirror {
    /// `v` even in `x₂`; residual `M ↦ M·D`.
    Even,
    /// `v₁` even, `v₂` odd; residual `M ↦ D·M·D`.
    EvenOdd,
}

impl Mirror {
    /// Transforms a residual or gradient of the upper cell.
    #[inline]
    pub fn apply<T: Real>(self, m: &Mat2<T>) -> Mat2<T> {
        let d = Mat2::flip();
        match self {
            Mirror::Even => m.mm(&d),
            Mirror::EvenOdd => d.mm(m).mm(&d),
        }
    }

    /// Transforms a displacement of the upper cell.
    #[inline]
    pub fn apply_vec<T: Real>(self, v: [T; 2]) -> [T; 2] {
        match self {
            Mirror::Even => v,
            Mirror::EvenOdd => [v[0], -v[1]],
        }
    }
}

/// Cell geometry and amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSpec<T> {
    /// Half-width.
    pub l: T,
    /// Height.
    pub h: T,
    /// Volume fraction of phase 1.
    pub theta: T,
    /// Amplitude: `P(e₁)a = b⊗e₁`; curlcurl cells use `b = (λ, 0)`.
    pub b: [T; 2],
    /// Cell type.
    pub kind: CellKind,
}

/// `ψ(t)`: 1 on `[0, 1/2]`, `3 − 4t` on `(1/2, 3/4)`, 0 beyond.
pub fn cutoff_psi<T: Real>(t: T) -> (T, T) {
    if t <= T::lit(0.5) {
        (T::one(), T::zero())
    } else if t < T::lit(0.75) {
        (T::lit(3.0) - T::lit(4.0) * t, T::lit(-4.0))
    } else {
        (T::zero(), T::zero())
    }
}

/// `γ(s) = 3s² − 2s³` with first and second derivatives.
pub fn cc_interp<T: Real>(s: T) -> (T, T, T) {
    let (two, three, six) = (T::lit(2.0), T::lit(3.0), T::lit(6.0));
    (three * s * s - two * s * s * s, six * s - six * s * s, six - T::lit(12.0) * s)
}

impl<T: Real> CellSpec<T> {
    /// Validated constructor.
    pub fn new(l: T, h: T, theta: T, b: [T; 2], kind: CellKind) -> Result<Self> {
        if !(theta > T::zero() && theta < T::one()) {
            return Err(TwoWellError::ThetaOutOfRange(theta.as_f64()));
        }
        let (lf, hf) = (l.as_f64(), h.as_f64());
        let ok = if kind.cutoff() {
            l > T::zero() && l <= T::lit(2.0) * h && T::lit(2.0) * h <= T::one()
        } else {
            l > T::zero() && l <= h && h <= T::one()
        };
        if !ok {
            let rule = if kind.cutoff() { "0 < l <= 2h <= 1" } else { "0 < l <= h <= 1" };
            return Err(TwoWellError::Aspect { l: lf, h: hf, rule });
        }
        Ok(Self { l, h, theta, b, kind })
    }

    /// Shear `γ = (1−θ)l/(2h)` of the gradient cell.
    pub fn gamma_shear(&self) -> T {
        (T::one() - self.theta) * self.l / (T::lit(2.0) * self.h)
    }

    /// Interface offset `α = (1−θ)l/2` of the Chan–Conti cell.
    pub fn alpha(&self) -> T {
        (T::one() - self.theta) * self.l / T::lit(2.0)
    }

    /// Left boundaries of regions 2..5 at height `x2`.
    fn breaks(&self, x2: T) -> [T; 4] {
        let tl = self.theta * self.l;
        let s = match self.kind {
            CellKind::GradInterior => self.gamma_shear() * x2,
            CellKind::CcInterior => self.alpha() * cc_interp(x2 / self.h).0,
            _ => T::zero(),
        };
        [-tl - s, -s, s, tl + s]
    }

    /// Region index: `1..=5` for interior cells, `1..=3` for cut-off cells.
    pub fn region(&self, x1: T, x2: T) -> u8 {
        if self.kind.cutoff() {
            let tl = self.theta * self.l;
            return if x1 < -tl {
                1
            } else if x1 < tl {
                2
            } else {
                3
            };
        }
        let br = self.breaks(x2);
        1 + br.iter().filter(|&&b| x1 >= b).count() as u8
    }

    /// Phase index (0 or 1) at a local point.
    pub fn phase(&self, x1: T, x2: T) -> u8 {
        let r = self.region(x1, x2);
        if self.kind.cutoff() {
            u8::from(r == 2)
        } else {
            u8::from(r == 2 || r == 4)
        }
    }

    fn phase_of_region(&self, r: u8) -> u8 {
        if self.kind.cutoff() {
            u8::from(r == 2)
        } else {
            u8::from(r == 2 || r == 4)
        }
    }

    /// Displacement at a local point.
    pub fn displacement(&self, x1: T, x2: T) -> [T; 2] {
        let (th, l, h) = (self.theta, self.l, self.h);
        let one = T::one();
        match self.kind {
            CellKind::GradInterior => {
                let g = self.gamma_shear();
                let s = match self.region(x1, x2) {
                    1 => -th * (l + x1),
                    2 => (one - th) * x1 + g * x2,
                    3 => -th * x1,
                    4 => (one - th) * x1 - g * x2,
                    _ => -th * (x1 - l),
                };
                [s * self.b[0], s * self.b[1]]
            }
            CellKind::GradCutoff | CellKind::CcCutoff => {
                let s = cutoff_psi(x2 / h).0 * sawtooth(th, l, x1);
                [s * self.b[0], s * self.b[1]]
            }
            CellKind::CcInterior => {
                let al = self.alpha();
                let (gm, gp, _) = cc_interp(x2 / h);
                let a = al * gm;
                let tl = th * l;
                let k = al / h * gp;
                let (v1, v2) = match self.region(x1, x2) {
                    1 => (-th * (l + x1), T::zero()),
                    2 => ((one - th) * x1 + a, -k * (tl + a + x1)),
                    3 => (-th * x1, -k * tl),
                    4 => ((one - th) * x1 - a, -k * (tl + a - x1)),
                    _ => (-th * (x1 - l), T::zero()),
                };
                [self.b[0] * v1, self.b[0] * v2]
            }
        }
    }

    /// Full gradient `∇v` at a local point inside a region.
    pub fn gradient(&self, x1: T, x2: T) -> Mat2<T> {
        self.gradient_in(self.region(x1, x2), x1, x2)
    }

    fn gradient_in(&self, r: u8, x1: T, x2: T) -> Mat2<T> {
        let (th, l, h) = (self.theta, self.l, self.h);
        let one = T::one();
        let b = self.b;
        match self.kind {
            CellKind::GradInterior => {
                let g = self.gamma_shear();
                let (d1, d2) = match r {
                    2 => (one - th, g),
                    4 => (one - th, -g),
                    _ => (-th, T::zero()),
                };
                Mat2::outer(b, [d1, d2])
            }
            CellKind::GradCutoff | CellKind::CcCutoff => {
                let (psi, dpsi) = cutoff_psi(x2 / h);
                let phi = sawtooth(th, l, x1);
                let dphi = if r == 2 { one - th } else { -th };
                Mat2::outer(b, [psi * dphi, dpsi / h * phi])
            }
            CellKind::CcInterior => {
                let al = self.alpha();
                let (gm, gp, gpp) = cc_interp(x2 / h);
                let a = al * gm;
                let tl = th * l;
                let k = al / h * gp;
                let kk = al / (h * h) * gpp;
                let m = match r {
                    2 => [[one - th, k], [-k, -kk * (tl + a + x1) - k * k]],
                    3 => [[-th, T::zero()], [T::zero(), -kk * tl]],
                    4 => [[one - th, -k], [k, -kk * (tl + a - x1) - k * k]],
                    _ => [[-th, T::zero()], [T::zero(), T::zero()]],
                };
                Mat2(m) * b[0]
            }
        }
    }

    /// Residual `D v − (χ₁ − θ) b⊗e₁` with `D` the (symmetric) gradient.
    pub fn residual(&self, x1: T, x2: T) -> Mat2<T> {
        let r = self.region(x1, x2);
        self.residual_in(r, x1, x2)
    }

    fn residual_in(&self, r: u8, x1: T, x2: T) -> Mat2<T> {
        let g = self.gradient_in(r, x1, x2);
        let g = if self.kind.symmetric() { g.sym() } else { g };
        let j = T::from_usize_lossy(self.phase_of_region(r) as usize);
        g - Mat2::outer(self.b, [T::one(), T::zero()]) * (j - self.theta)
    }

    /// Quadrature nodes, exact for the squared residual of this cell.
    pub fn quadrature_nodes(&self, gl_order: usize) -> Vec<QNode<T>> {
        let (th, l, h) = (self.theta.as_f64(), self.l.as_f64(), self.h.as_f64());
        let mut nodes = Vec::new();
        match self.kind {
            CellKind::GradInterior => {
                let g = self.gamma_shear().as_f64();
                let y = 0.5 * h;
                let s = g * y;
                let tri = g * h * h / 2.0;
                let outer = (1.0 - th) * l * h - tri;
                let pts = [
                    (0.5 * (-l - th * l - s), 1u8, outer),
                    (-th * l * 0.5 - s, 2, th * l * h),
                    (0.0, 3, 2.0 * tri),
                    (th * l * 0.5 + s, 4, th * l * h),
                    (0.5 * (l + th * l + s), 5, outer),
                ];
                for (x, r, w) in pts {
                    nodes.push(QNode { x1: T::lit(x), x2: T::lit(y), w: T::lit(w), region: r });
                }
            }
            CellKind::GradCutoff | CellKind::CcCutoff => {
                let xs = [(-l, -th * l, 1u8), (-th * l, th * l, 2), (th * l, l, 3)];
                let ys = [(0.0, 0.5 * h), (0.5 * h, 0.75 * h), (0.75 * h, h)];
                for (xa, xb, r) in xs {
                    for &(ya, yb) in &ys {
                        for (x, wx) in gauss_legendre_on(3, xa, xb) {
                            for (y, wy) in gauss_legendre_on(3, ya, yb) {
                                nodes.push(QNode {
                                    x1: T::lit(x),
                                    x2: T::lit(y),
                                    w: T::lit(wx * wy),
                                    region: r,
                                });
                            }
                        }
                    }
                }
            }
            CellKind::CcInterior => {
                for (y, wy) in gauss_legendre_on(gl_order, 0.0, h) {
                    let br: Vec<f64> =
                        self.breaks(T::lit(y)).iter().map(|b| b.as_f64()).collect();
                    let edges = [-l, br[0], br[1], br[2], br[3], l];
                    for r in 0..5 {
                        for (x, wx) in gauss_legendre_on(3, edges[r], edges[r + 1]) {
                            nodes.push(QNode {
                                x1: T::lit(x),
                                x2: T::lit(y),
                                w: T::lit(wx * wy),
                                region: r as u8 + 1,
                            });
                        }
                    }
                }
            }
        }
        nodes
    }

    /// Length of the phase interface inside the cell.
    pub fn interface_length(&self) -> T {
        let h = self.h;
        match self.kind {
            CellKind::GradInterior => {
                let g = self.gamma_shear();
                T::lit(4.0) * (h * h + g * g * h * h).sqrt()
            }
            CellKind::GradCutoff | CellKind::CcCutoff => T::lit(2.0) * h,
            CellKind::CcInterior => {
                let al = self.alpha().as_f64();
                let hf = h.as_f64();
                let f = |s: f64| (hf * hf + al * al * cc_interp(s).1.powi(2)).sqrt();
                T::lit(4.0 * adaptive_simpson(&f, 0.0, 1.0, 1e-15 * hf))
            }
        }
    }

    /// Default mirror rule of the cell family.
    pub fn mirror(&self) -> Mirror {
        if self.kind.symmetric() {
            Mirror::EvenOdd
        } else {
            Mirror::Even
        }
    }
}

/// Quadrature node inside a cell.
#[derive(Clone, Copy, Debug)]
pub struct QNode<T> {
    /// Local abscissa.
    pub x1: T,
    /// Local ordinate.
    pub x2: T,
    /// Weight.
    pub w: T,
    /// Region containing the node.
    pub region: u8,
}

/// Data to measure canonical residuals in the original frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Physics<T> {
    /// Residual map to the original frame.
    pub map: StrainMap<T>,
    /// `χ̃ − χ` per phase in the original frame.
    pub offsets: [Mat2<T>; 2],
    /// `|a₁ − a₀|` in the original frame.
    pub a_norm: T,
    /// Excess energy density of the original problem.
    pub e0: T,
}

/// Exact integrals of one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellIntegrals<T> {
    /// `∫|u − χ|²`.
    pub direct: T,
    /// `∫|u − χ̃|²`.
    pub tilde: T,
    /// `2∫⟨u − χ̃, χ̃ − χ⟩`.
    pub cross: T,
    /// `∫|χ̃ − χ|²`.
    pub excess: T,
    /// Area of phase 1.
    pub phase1_area: T,
    /// Cell area.
    pub area: T,
    /// `∫(u − χ̃)` in the original frame.
    pub mean_residual: Mat2<T>,
}

/// Integrates a cell against `physics`; `mirror` selects the lower-half copy.
pub fn cell_integrals<T: Real>(
    spec: &CellSpec<T>,
    physics: &Physics<T>,
    mirror: Option<Mirror>,
    gl_order: usize,
) -> CellIntegrals<T> {
    let mut out = CellIntegrals::<T>::default();
    for q in spec.quadrature_nodes(gl_order) {
        let r = spec.residual_in(q.region, q.x1, q.x2);
        let r = match mirror {
            Some(m) => m.apply(&r),
            None => r,
        };
        let m = physics.map.apply(&r);
        let j = spec.phase_of_region(q.region) as usize;
        let c = physics.offsets[j];
        out.direct = out.direct + q.w * (m + c).norm_sq();
        out.tilde = out.tilde + q.w * m.norm_sq();
        out.cross = out.cross + q.w * T::lit(2.0) * m.dot(&c);
        out.excess = out.excess + q.w * c.norm_sq();
        out.area = out.area + q.w;
        if j == 1 {
            out.phase1_area = out.phase1_area + q.w;
        }
        out.mean_residual += m * q.w;
    }
    out
}

/// Analytic ledger of a cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellLedger<T> {
    /// `2lh·E₀`.
    pub excess: T,
    /// Elastic energy against the compatible approximation.
    pub elastic_compat: T,
    /// Mixed term.
    pub cross: T,
    /// `|a|·` interface length.
    pub surface: T,
}

/// Closed-form ledger of the gradient interior cell.
pub fn grad_unit_cell_closed_form<T: Real>(spec: &CellSpec<T>, e0: T, a_norm: T) -> CellLedger<T> {
    let (th, l, h) = (spec.theta, spec.l, spec.h);
    let b2 = spec.b[0] * spec.b[0] + spec.b[1] * spec.b[1];
    let one = T::one();
    let g = spec.gamma_shear();
    CellLedger {
        excess: T::lit(2.0) * l * h * e0,
        elastic_compat: th * (one - th) * (one - th) * l * l * l / (T::lit(2.0) * h) * b2,
        cross: T::zero(),
        surface: a_norm * T::lit(4.0) * (g * g * h * h + h * h).sqrt(),
    }
}

/// Closed-form ledger of the gradient cut-off cell.
pub fn grad_cutoff_closed_form<T: Real>(spec: &CellSpec<T>, e0: T, a_norm: T) -> CellLedger<T> {
    let (th, l, h) = (spec.theta, spec.l, spec.h);
    let b2 = spec.b[0] * spec.b[0] + spec.b[1] * spec.b[1];
    let q = th * (T::one() - th);
    CellLedger {
        excess: T::lit(2.0) * l * h * e0,
        elastic_compat: b2
            * (T::lit(2.0 / 3.0) * q * l * h + T::lit(8.0 / 3.0) * q * q * l * l * l / h),
        cross: T::zero(),
        surface: a_norm * T::lit(2.0) * h,
    }
}
