//! Self-similar layer layout, assembly and samplers.

use serde::{Deserialize, Serialize};

use super::cells::{cell_integrals, CellIntegrals, CellKind, CellSpec, Mirror, Physics, CC_GL_ORDER};
use super::reduce::{reduce_with_path, Canonical, ReductionPath};
use crate::compatibility::cc_spectrum;
use crate::error::{Result, TwoWellError};
use crate::mat2::{Mat2, StrainMap};
use crate::operator_kernel::{Direction, OpKind};
use crate::relaxation::{compatible_approximation, relax, ProblemData};
use crate::scalar::Real;

/// One layer of cells in the upper half square.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer<T> {
    /// Layer index.
    pub j: usize,
    /// Cell half-width `l_j = 1/(2N·2^j)`.
    pub l: T,
    /// Cell height.
    pub h: T,
    /// Lower edge `y_j = 1 − τ^j/2`.
    pub y: T,
    /// Number of cells `N·2^j`.
    pub count: u64,
    /// Cut-off layer.
    pub cutoff: bool,
}

/// Layer table for `N` oscillations and refinement ratio `τ`.
///
/// Interior layers `j = 0..=j₀` with `j₀ = max{j : l_j ≤ h_j}` are followed
/// by one cut-off layer of height `τ^{j₀+1}/2`.
pub fn layer_table<T: Real>(n: usize, tau: T) -> Result<(Vec<Layer<T>>, usize)> {
    if n < 2 {
        return Err(TwoWellError::InvalidArgument(format!("N = {n} must be at least 2")));
    }
    if !(tau > T::lit(0.25) && tau < T::lit(0.5)) {
        return Err(TwoWellError::InvalidArgument(format!("tau = {tau} outside (1/4, 1/2)")));
    }
    let half = T::lit(0.5);
    let nf = T::from_usize_lossy(n);
    let mut layers = Vec::new();
    let mut j = 0usize;
    loop {
        let count = (n as u64)
            .checked_mul(1u64.checked_shl(j as u32).unwrap_or(0))
            .filter(|&c| c > 0 && j < 63)
            .ok_or_else(|| TwoWellError::InvalidArgument("layer count overflow".into()))?;
        let tj = tau.powi(j as i32);
        let l = T::one() / (T::lit(2.0) * nf * T::lit(2f64.powi(j as i32)));
        let h = tj * (T::one() - tau) * half;
        let y = T::one() - tj * half;
        if l <= h {
            layers.push(Layer { j, l, h, y, count, cutoff: false });
            j += 1;
        } else {
            if j == 0 {
                return Err(TwoWellError::Aspect {
                    l: l.as_f64(),
                    h: h.as_f64(),
                    rule: "l_0 <= h_0 requires N(1 - tau) >= 1",
                });
            }
            layers.push(Layer { j, l, h: tj * half, y, count, cutoff: true });
            return Ok((layers, j - 1));
        }
    }
}

/// Integrals of one layer.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LayerLedger<T> {
    /// Layer geometry.
    pub layer: Layer<T>,
    /// Cell specification shared by all cells of the layer.
    pub spec: CellSpec<T>,
    /// Integrals of one upper-half cell.
    pub upper: CellIntegrals<T>,
    /// Integrals of one mirrored cell.
    pub lower: CellIntegrals<T>,
    /// Interface length of one cell.
    pub cell_interface: T,
}

/// Totals over the unit square.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct BranchLedger<T> {
    /// `∫|χ̃ − χ|²`.
    pub excess: T,
    /// `∫|u − χ̃|²`.
    pub elastic_compat: T,
    /// `2∫⟨u − χ̃, χ̃ − χ⟩`.
    pub cross: T,
    /// `∫|u − χ|²`.
    pub direct: T,
    /// `|a|·` total interface length.
    pub surface: T,
    /// Total interface length.
    pub interface_length: T,
    /// Area of phase 1.
    pub phase1_area: T,
    /// Total area.
    pub area: T,
    /// Largest per-cell mixed term in absolute value.
    pub max_cell_cross: T,
    /// `∫(u − χ̃)` over the square.
    pub mean_residual: Mat2<T>,
    /// Excess energy density of the original data.
    pub e0: T,
}

impl<T: Real> BranchLedger<T> {
    /// `∫|u − χ|² + ε·TV(χ)`.
    pub fn total(&self, eps: T) -> T {
        self.direct + eps * self.surface
    }

    /// `E_ε − E₀` from the split terms.
    pub fn corrected(&self, eps: T) -> T {
        self.elastic_compat + self.cross + (self.excess - self.e0) + eps * self.surface
    }
}

/// Position of a canonical point inside the construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Locate<T> {
    /// Index into the layer table.
    pub layer: usize,
    /// Cell index within the layer.
    pub cell: u64,
    /// Lower half (mirrored copy).
    pub mirrored: bool,
    /// Local abscissa in `[−l, l]`.
    pub x1: T,
    /// Local ordinate in `[0, h]`.
    pub x2: T,
    /// Region inside the cell.
    pub region: u8,
}

/// Assembled branching microstructure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchField<T> {
    /// Number of oscillations in layer 0.
    pub n: usize,
    /// Refinement ratio.
    pub tau: T,
    /// Last interior layer.
    pub j0: usize,
    /// Layer table including the cut-off layer.
    pub layers: Vec<Layer<T>>,
    /// Volume fraction `θ̃`.
    pub theta: T,
    /// Reduction data.
    pub canonical: Canonical<T>,
    /// Measurement data.
    pub physics: Physics<T>,
    /// Mirror rule.
    pub mirror: Mirror,
    /// Gauss–Legendre order in `x₂` for curved cells.
    pub gl_order: usize,
    /// Per-layer integrals.
    pub layer_ledgers: Vec<LayerLedger<T>>,
    /// Totals.
    pub ledger: BranchLedger<T>,
}

/// Gradient branching for curl, div and (via symmetrization) curlcurl data.
pub fn grad_branching<T: Real>(
    data: &ProblemData<T>,
    xi_star: &Direction<T>,
    n: usize,
    tau: T,
) -> Result<BranchField<T>> {
    let path = match data.op.kind {
        OpKind::CurlCurl => ReductionPath::GradSym,
        _ => ReductionPath::Grad,
    };
    assemble(reduce_with_path(data, xi_star, path)?, n, tau)
}

/// Chan–Conti branching for curlcurl data with a rank-one well difference.
pub fn cc_branching<T: Real>(
    data: &ProblemData<T>,
    xi_star: &Direction<T>,
    n: usize,
    tau: T,
) -> Result<BranchField<T>> {
    if data.op.kind != OpKind::CurlCurl || !cc_spectrum(&data.a()).rank_one {
        return Err(TwoWellError::InvalidArgument(
            "Chan-Conti branching needs curlcurl data with a rank-one difference".into(),
        ));
    }
    assemble(reduce_with_path(data, xi_star, ReductionPath::ChanConti)?, n, tau)
}

/// Builds the layered field for canonical data.
pub fn assemble<T: Real>(canonical: Canonical<T>, n: usize, tau: T) -> Result<BranchField<T>> {
    let (layers, j0) = layer_table(n, tau)?;
    let theta = canonical.relax.theta_tilde;
    let cc = canonical.path == ReductionPath::ChanConti;
    let (interior, cutoff) = if cc {
        (CellKind::CcInterior, CellKind::CcCutoff)
    } else {
        (CellKind::GradInterior, CellKind::GradCutoff)
    };
    let mirror = if cc { Mirror::EvenOdd } else { Mirror::Even };
    let mut specs = Vec::with_capacity(layers.len());
    for layer in &layers {
        let kind = if layer.cutoff { cutoff } else { interior };
        specs.push(CellSpec::new(layer.l, layer.h, theta, canonical.amplitude, kind)?);
    }
    let physics = canonical.physics;
    let mut field = BranchField {
        n,
        tau,
        j0,
        layers,
        theta,
        canonical,
        physics,
        mirror,
        gl_order: CC_GL_ORDER,
        layer_ledgers: Vec::new(),
        ledger: BranchLedger::default(),
    };
    field.layer_ledgers = field
        .layers
        .iter()
        .zip(specs)
        .map(|(layer, spec)| LayerLedger {
            layer: *layer,
            spec,
            upper: CellIntegrals::default(),
            lower: CellIntegrals::default(),
            cell_interface: spec.interface_length(),
        })
        .collect();
    field.integrate();
    Ok(field)
}

/// Re-measures a gradient field built for lifted curl wells against the
/// symmetric problem `cc_data`, i.e. `u ↦ sym u`, `χ ↦ sym χ`.
pub fn symmetrize_field<T: Real>(
    field: &BranchField<T>,
    cc_data: &ProblemData<T>,
) -> Result<BranchField<T>> {
    if field.canonical.path != ReductionPath::Grad || field.canonical.original.op.kind != OpKind::Curl
    {
        return Err(TwoWellError::InvalidArgument("symmetrization needs a curl field".into()));
    }
    if cc_data.op.kind != OpKind::CurlCurl {
        return Err(TwoWellError::InvalidArgument("target data must be curlcurl".into()));
    }
    let orig = &field.canonical.original;
    for (w, s) in [(&orig.a0, &cc_data.a0), (&orig.a1, &cc_data.a1), (&orig.f, &cc_data.f)] {
        let diff = (&w.sym() - s).norm();
        if diff > T::lit(1e-10) * s.norm().max(T::one()) {
            return Err(TwoWellError::InvalidArgument(format!(
                "symmetric part of the curl data differs from the target by {diff:e}"
            )));
        }
    }
    let dir = field.canonical.direction();
    let xi = Direction::new(dir.to_vec())?;
    let tilde = compatible_approximation(cc_data, &xi)?;
    let report = relax(cc_data)?;
    let m = |x: &crate::operator_kernel::Matrix<T>| Mat2::from_matrix(x);
    let q = match field.physics.map {
        StrainMap::Right(q) => q,
        _ => return Err(TwoWellError::InvalidArgument("field is already symmetrized".into())),
    };
    let mut out = field.clone();
    out.physics = Physics {
        map: StrainMap::SymRight(q),
        offsets: [m(&tilde.a0)? - m(&cc_data.a0)?, m(&tilde.a1)? - m(&cc_data.a1)?],
        a_norm: cc_data.a().norm(),
        e0: report.e0_density,
    };
    out.integrate();
    Ok(out)
}

impl<T: Real> BranchField<T> {
    /// Recomputes all ledgers with Gauss–Legendre order `order` in `x₂`.
    pub fn with_gl_order(&self, order: usize) -> Self {
        let mut f = self.clone();
        f.gl_order = order;
        f.integrate();
        f
    }

    fn integrate(&mut self) {
        let mut tot = BranchLedger::<T> { e0: self.physics.e0, ..Default::default() };
        for ll in &mut self.layer_ledgers {
            ll.upper = cell_integrals(&ll.spec, &self.physics, None, self.gl_order);
            ll.lower = cell_integrals(&ll.spec, &self.physics, Some(self.mirror), self.gl_order);
            let c = T::lit(ll.layer.count as f64);
            for ci in [&ll.upper, &ll.lower] {
                tot.excess = tot.excess + c * ci.excess;
                tot.elastic_compat = tot.elastic_compat + c * ci.tilde;
                tot.cross = tot.cross + c * ci.cross;
                tot.direct = tot.direct + c * ci.direct;
                tot.phase1_area = tot.phase1_area + c * ci.phase1_area;
                tot.area = tot.area + c * ci.area;
                tot.mean_residual += ci.mean_residual * c;
                tot.max_cell_cross = tot.max_cell_cross.max(ci.cross.abs());
            }
            tot.interface_length = tot.interface_length + T::lit(2.0) * c * ll.cell_interface;
        }
        tot.surface = self.physics.a_norm * tot.interface_length;
        self.ledger = tot;
    }

    /// Locates a canonical point of the closed unit square.
    pub fn locate(&self, y: [T; 2]) -> Option<Locate<T>> {
        let (x, mut yy) = (y[0], y[1]);
        if !(x >= T::zero() && x <= T::one() && yy >= T::zero() && yy <= T::one()) {
            return None;
        }
        let half = T::lit(0.5);
        let mirrored = yy < half;
        if mirrored {
            yy = T::one() - yy;
        }
        let idx = self.layers.partition_point(|l| l.y <= yy).saturating_sub(1);
        let layer = &self.layers[idx];
        let w = T::lit(2.0) * layer.l;
        let k = (x / w).floor().to_f64().unwrap_or(0.0).max(0.0) as u64;
        let k = k.min(layer.count - 1);
        let centre = (T::lit(k as f64) * T::lit(2.0) + T::one()) * layer.l;
        let x1 = x - centre;
        let x2 = (yy - layer.y).min(layer.h);
        let spec = &self.layer_ledgers[idx].spec;
        Some(Locate { layer: idx, cell: k, mirrored, x1, x2, region: spec.region(x1, x2) })
    }

    /// Canonical displacement `v`.
    pub fn displacement(&self, y: [T; 2]) -> [T; 2] {
        match self.locate(y) {
            None => [T::zero(); 2],
            Some(p) => {
                let v = self.layer_ledgers[p.layer].spec.displacement(p.x1, p.x2);
                if p.mirrored {
                    self.mirror.apply_vec(v)
                } else {
                    v
                }
            }
        }
    }

    /// Phase index at a canonical point.
    pub fn phase(&self, y: [T; 2]) -> u8 {
        match self.locate(y) {
            None => 0,
            Some(p) => self.layer_ledgers[p.layer].spec.phase(p.x1, p.x2),
        }
    }

    /// Exact canonical gradient `∇v` at a canonical point.
    pub fn gradient(&self, y: [T; 2]) -> Mat2<T> {
        match self.locate(y) {
            None => Mat2::zero(),
            Some(p) => {
                let g = self.layer_ledgers[p.layer].spec.gradient(p.x1, p.x2);
                if p.mirrored {
                    self.mirror.apply(&g)
                } else {
                    g
                }
            }
        }
    }

    /// Residual `u − χ̃` in the original frame at a canonical point.
    pub fn residual(&self, y: [T; 2]) -> Mat2<T> {
        match self.locate(y) {
            None => Mat2::zero(),
            Some(p) => {
                let r = self.layer_ledgers[p.layer].spec.residual(p.x1, p.x2);
                let r = if p.mirrored { self.mirror.apply(&r) } else { r };
                self.physics.map.apply(&r)
            }
        }
    }

    /// Whether the gradient is symmetrized (curlcurl cells).
    pub fn symmetric_gradient(&self) -> bool {
        self.canonical.path == ReductionPath::ChanConti
    }

    /// Width of the narrowest cell.
    pub fn finest_width(&self) -> T {
        self.layers.iter().map(|l| T::lit(2.0) * l.l).fold(T::infinity(), |a, b| a.min(b))
    }

    /// Canonical boundary datum and wells.
    pub fn canonical_states(&self) -> Result<(Mat2<T>, [Mat2<T>; 2])> {
        let d = &self.canonical.data;
        Ok((
            Mat2::from_matrix(&d.f)?,
            [Mat2::from_matrix(&d.a0)?, Mat2::from_matrix(&d.a1)?],
        ))
    }
}
