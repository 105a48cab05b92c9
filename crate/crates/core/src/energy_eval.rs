//! Independent grid evaluation of elastic, surface and Fourier energies.
//!
//! Grids live on the canonical unit square: `v` at the `(n+1)²` nodes,
//! phases at the `n²` cell centres. Gradients are staggered central
//! differences at cell centres, integrated by the midpoint rule.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::construction::BranchField;
use crate::error::{Result, TwoWellError};
use crate::mat2::{Mat2, StrainMap};
use crate::scalar::Real;

/// Sampled displacement and phase on a uniform grid.
#[derive(Clone, Debug)]
pub struct GridField<T> {
    /// Cells per side.
    pub n: usize,
    /// Node values, row-major in `x₂` then `x₁`: index `j·(n+1) + i`.
    pub v: Vec<[T; 2]>,
    /// Cell phases, index `j·n + i`.
    pub phase: Vec<u8>,
    /// Use the symmetric gradient.
    pub symmetric: bool,
    /// Finest construction cell narrower than two grid cells.
    pub under_resolved: bool,
}

fn check_resolution(n: usize) -> Result<()> {
    if !n.is_power_of_two() || !(64..=8192).contains(&n) {
        return Err(TwoWellError::InvalidArgument(format!(
            "grid resolution {n} must be a power of two in [64, 8192]"
        )));
    }
    Ok(())
}

impl<T: Real> GridField<T> {
    /// Wraps sampled data.
    pub fn new(n: usize, v: Vec<[T; 2]>, phase: Vec<u8>, symmetric: bool) -> Result<Self> {
        check_resolution(n)?;
        if v.len() != (n + 1) * (n + 1) || phase.len() != n * n {
            return Err(TwoWellError::DimensionMismatch {
                expected: (n + 1) * (n + 1),
                found: v.len(),
            });
        }
        Ok(Self { n, v, phase, symmetric, under_resolved: false })
    }

    /// Zero displacement with a constant phase.
    pub fn constant(n: usize, phase: u8, symmetric: bool) -> Result<Self> {
        Self::new(n, vec![[T::zero(); 2]; (n + 1) * (n + 1)], vec![phase; n * n], symmetric)
    }

    /// Samples a branching field in its canonical frame.
    pub fn from_branch(field: &BranchField<T>, n: usize) -> Result<Self> {
        check_resolution(n)?;
        let h = T::one() / T::from_usize_lossy(n);
        let v: Vec<[T; 2]> = (0..=n)
            .into_par_iter()
            .flat_map_iter(|j| {
                let y = T::from_usize_lossy(j) * h;
                (0..=n).map(move |i| field.displacement([T::from_usize_lossy(i) * h, y]))
            })
            .collect();
        let half = T::lit(0.5);
        let phase: Vec<u8> = (0..n)
            .into_par_iter()
            .flat_map_iter(|j| {
                let y = (T::from_usize_lossy(j) + half) * h;
                (0..n).map(move |i| field.phase([(T::from_usize_lossy(i) + half) * h, y]))
            })
            .collect();
        let mut g = Self::new(n, v, phase, field.symmetric_gradient())?;
        g.under_resolved = field.finest_width() < T::lit(2.0) * h;
        Ok(g)
    }

    /// Staggered central-difference gradient at the centre of cell `(i, j)`.
    #[inline]
    pub fn cell_gradient(&self, i: usize, j: usize) -> Mat2<T> {
        let m = self.n + 1;
        let nf = T::from_usize_lossy(self.n);
        let half = T::lit(0.5);
        let a = self.v[j * m + i];
        let b = self.v[j * m + i + 1];
        let c = self.v[(j + 1) * m + i];
        let d = self.v[(j + 1) * m + i + 1];
        let mut g = [[T::zero(); 2]; 2];
        for k in 0..2 {
            g[k][0] = half * nf * (b[k] + d[k] - a[k] - c[k]);
            g[k][1] = half * nf * (c[k] + d[k] - a[k] - b[k]);
        }
        let g = Mat2(g);
        if self.symmetric {
            g.sym()
        } else {
            g
        }
    }

    /// Area average of the (symmetric) gradient.
    pub fn mean_gradient(&self) -> Mat2<T> {
        let n = self.n;
        let w = T::one() / T::from_usize_lossy(n * n);
        let mut s = Mat2::zero();
        for j in 0..n {
            for i in 0..n {
                s += self.cell_gradient(i, j) * w;
            }
        }
        s
    }

    /// Grid volume fraction of phase 1.
    pub fn phase1_fraction(&self) -> T {
        let ones = self.phase.iter().filter(|&&p| p == 1).count();
        T::from_usize_lossy(ones) / T::from_usize_lossy(self.phase.len())
    }
}

/// Elastic energy result.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ElasticResult<T> {
    /// Midpoint-rule energy.
    pub energy: T,
    /// Construction finer than the grid.
    pub under_resolved: bool,
}

/// `∫|map(F + Dv − χ)|²` by the midpoint rule.
pub fn elastic_energy<T: Real>(
    grid: &GridField<T>,
    f: &Mat2<T>,
    wells: &[Mat2<T>; 2],
    map: &StrainMap<T>,
) -> ElasticResult<T> {
    let n = grid.n;
    let w = T::one() / T::from_usize_lossy(n * n);
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut s = T::zero();
            for i in 0..n {
                let g = grid.cell_gradient(i, j);
                let r = *f + g - wells[grid.phase[j * n + i] as usize];
                s = s + map.apply(&r).norm_sq();
            }
            (s * w).as_f64()
        })
        .collect();
    ElasticResult { energy: T::lit(rows.iter().sum()), under_resolved: grid.under_resolved }
}

/// Elastic energy of a branching field against its wells.
pub fn field_elastic_energy<T: Real>(field: &BranchField<T>, grid: &GridField<T>) -> Result<ElasticResult<T>> {
    let (f, wells) = field.canonical_states()?;
    Ok(elastic_energy(grid, &f, &wells, &field.physics.map))
}

/// Elastic energy of a branching field against the compatible approximation.
pub fn field_tilde_energy<T: Real>(field: &BranchField<T>, grid: &GridField<T>) -> Result<ElasticResult<T>> {
    let (f, _) = field.canonical_states()?;
    let bx = Mat2::outer(field.canonical.amplitude, [T::one(), T::zero()]);
    let th = field.theta;
    let wells = [f - bx * th, f + bx * (T::one() - th)];
    Ok(elastic_energy(grid, &f, &wells, &field.physics.map))
}

/// Total variation of a two-valued phase from grid edge jumps.
///
/// Axis-aligned edges overestimate oblique interfaces by at most `√2`.
pub fn surface_energy_grid<T: Real>(grid: &GridField<T>, jump: T) -> T {
    let n = grid.n;
    let mut edges = 0usize;
    for j in 0..n {
        for i in 0..n {
            let p = grid.phase[j * n + i];
            if i + 1 < n && grid.phase[j * n + i + 1] != p {
                edges += 1;
            }
            if j + 1 < n && grid.phase[(j + 1) * n + i] != p {
                edges += 1;
            }
        }
    }
    jump * T::from_usize_lossy(edges) / T::from_usize_lossy(n)
}

/// Total variation from an exact interface length.
pub fn surface_energy_analytic<T: Real>(interface_length: T, jump: T) -> T {
    jump * interface_length
}

/// Elastic and surface parts of the singularly perturbed energy.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnergyBreakdown<T> {
    /// Elastic energy.
    pub elastic: T,
    /// Total variation of the phase.
    pub surface: T,
}

impl<T: Real> EnergyBreakdown<T> {
    /// `elastic + ε·surface`.
    pub fn total(&self, eps: T) -> T {
        self.elastic + eps * self.surface
    }

    /// `total(ε) − |Ω|·E₀` with `|Ω| = 1`.
    pub fn excess_corrected(&self, eps: T, e0: T) -> T {
        self.total(eps) - e0
    }
}

/// Fourier energy of `f = χ₁ − θ` and its spectral mass.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FourierReport {
    /// `Σ_{ξ≠0} |f̂|² dist^{2L}(ξ/|ξ|, W)`.
    pub energy: f64,
    /// `Σ_{ξ≠0} |f̂|²`.
    pub mass_nonzero: f64,
    /// `∫|f|²`.
    pub l2_sq: f64,
    /// `∫f`.
    pub integral: f64,
    /// Area of the periodic box.
    pub box_area: f64,
}

/// Fourier energy of a phase field, zero-padded to twice its size.
///
/// `lines` holds unit directions spanning the subspaces of `W` (at most two
/// in the plane); the weight is `min_k (1 − (ξ̂·w_k)²)^L`.
pub fn fourier_relaxed_energy<T: Real>(
    phase: &[u8],
    n: usize,
    theta: f64,
    lines: &[[f64; 2]],
    order: u32,
) -> Result<FourierReport> {
    if phase.len() != n * n {
        return Err(TwoWellError::DimensionMismatch { expected: n * n, found: phase.len() });
    }
    if lines.is_empty() {
        return Err(TwoWellError::Equicompatible("W is the whole space"));
    }
    let m = 2 * n;
    let cell = 1.0 / (n as f64 * n as f64);
    let mut buf = vec![Complex::<T>::new(T::zero(), T::zero()); m * m];
    let mut l2 = 0.0;
    let mut integral = 0.0;
    for j in 0..n {
        for i in 0..n {
            let f = phase[j * n + i] as f64 - theta;
            l2 += f * f * cell;
            integral += f * cell;
            buf[j * m + i] = Complex::new(T::lit(f), T::zero());
        }
    }
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(m);
    buf[..n * m].par_chunks_mut(m).for_each(|row| fft.process(row));
    let mut t = vec![Complex::<T>::new(T::zero(), T::zero()); m * m];
    for j in 0..m {
        for i in 0..m {
            t[i * m + j] = buf[j * m + i];
        }
    }
    drop(buf);
    t.par_chunks_mut(m).for_each(|row| fft.process(row));
    let box_area = 4.0;
    let scale = box_area * cell * cell / (box_area * box_area);
    let signed = |k: usize| if k < m / 2 { k as f64 } else { k as f64 - m as f64 };
    let (energy, mass) = t
        .par_chunks(m)
        .enumerate()
        .map(|(i, col)| {
            let k1 = signed(i);
            let mut e = 0.0;
            let mut s = 0.0;
            for (j, c) in col.iter().enumerate() {
                let k2 = signed(j);
                if i == 0 && j == 0 {
                    continue;
                }
                let p = (c.re.as_f64().powi(2) + c.im.as_f64().powi(2)) * scale;
                let r2 = k1 * k1 + k2 * k2;
                let wgt = lines
                    .iter()
                    .map(|w| {
                        let dot = k1 * w[0] + k2 * w[1];
                        (1.0 - dot * dot / r2).max(0.0)
                    })
                    .fold(f64::INFINITY, f64::min)
                    .powi(order as i32);
                e += p * wgt;
                s += p;
            }
            (e, s)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(FourierReport { energy, mass_nonzero: mass, l2_sq: l2, integral, box_area })
}
