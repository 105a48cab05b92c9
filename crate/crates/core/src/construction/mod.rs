//! Explicit branching microstructures.
//!
//! Unit cells live on `ω = (−l, l) × (0, h)` in the canonical frame where
//! `e₁` is an optimal lamination direction. Layers of cells refine towards
//! the top edge of the upper half square, finish with a cut-off layer, and
//! are mirrored about `x₂ = 1/2`. Every cell of a layer is a translate of
//! the same cell, so ledgers are integrated once per layer and multiplied by
//! the cell count.

mod branching;
mod cells;
mod reduce;

pub use branching::{
    assemble, cc_branching, grad_branching, layer_table, symmetrize_field, BranchField,
    BranchLedger, Layer, LayerLedger, Locate,
};
pub use cells::{
    cc_interp, cell_integrals, cutoff_psi, grad_cutoff_closed_form, grad_unit_cell_closed_form,
    CellIntegrals, CellKind, CellLedger, CellSpec, Mirror, Physics, QNode,
};
pub use reduce::{
    check_conditions, reduce_to_canonical, reduce_with_path, Canonical, Conditions,
    ReductionPath,
};

use crate::scalar::Real;

/// Target scaling law used to couple `ε` and `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ExponentKind {
    /// `N = ⌈ε^{−1/3}⌉`.
    TwoThirds,
    /// `N = ⌈ε^{−1/5}⌉`.
    FourFifths,
}

/// Number of oscillations for a given `ε`, at least 2.
///
/// Roots within `1e−9` relative of an integer are snapped before the ceiling.
pub fn choose_n(epsilon: f64, kind: ExponentKind) -> usize {
    let p = match kind {
        ExponentKind::TwoThirds => 1.0 / 3.0,
        ExponentKind::FourFifths => 1.0 / 5.0,
    };
    let x = epsilon.powf(-p);
    let r = x.round();
    let x = if (x - r).abs() <= 1e-9 * x { r } else { x };
    (x.ceil() as usize).max(2)
}

/// Scalar sawtooth `φ` on `[−1, 1)`, extended 2-periodically.
pub fn sawtooth_unit<T: Real>(theta: T, s: T) -> T {
    let two = T::lit(2.0);
    let s = s - two * ((s + T::one()) / two).floor();
    if s < -theta {
        -theta * (T::one() + s)
    } else if s < theta {
        (T::one() - theta) * s
    } else {
        -theta * (s - T::one())
    }
}

/// `φ_r(t) = r·φ(t/r)`, continuous and `2r`-periodic.
pub fn sawtooth<T: Real>(theta: T, r: T, t: T) -> T {
    r * sawtooth_unit(theta, t / r)
}

/// Derivative of [`sawtooth`] (right-continuous at kinks).
pub fn sawtooth_slope<T: Real>(theta: T, r: T, t: T) -> T {
    let two = T::lit(2.0);
    let s = t / r;
    let s = s - two * ((s + T::one()) / two).floor();
    if s < -theta || s >= theta {
        -theta
    } else {
        T::one() - theta
    }
}
