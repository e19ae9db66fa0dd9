//! Riesz potential `I_α ∗ g` for radial `g` on a [`RadialGrid`].
//!
//! The kernel matrix is a Galerkin discretization: `g` is taken piecewise
//! constant on the grid cells, and row `i` returns the average of
//! `I_α ∗ g` over cell `i`. Entries are `K_ij = c_α B_ij / w_i` where
//! `B_ij = ∫_{cell i}∫_{cell j} |x-y|^{α-2} dy dx` is symmetric, so
//! `w_i K_ij = w_j K_ji` holds up to rounding.

mod assembly;
mod cache;
mod oracle;

pub use cache::{cache_file_name, load_or_assemble, read_kernel, write_kernel};
pub use oracle::{brute_force_oracle, brute_force_oracle_fn, OracleOptions};

use crate::error::{invalid, Result};
use crate::grid::{RadialField, RadialGrid};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// The normalizing constant `c_α` of `I_α(x) = c_α |x|^{α-2}` in the plane.
pub fn riesz_constant(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    use statrs::function::gamma::gamma;
    Ok(gamma(1.0 - 0.5 * alpha) / (2f64.powf(alpha) * PI * gamma(0.5 * alpha)))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        invalid(format!("alpha must lie in (0,2), got {alpha}"))
    }
}

#[derive(Debug, Clone)]
pub struct RieszKernelMatrix {
    alpha: f64,
    grid: Arc<RadialGrid>,
    /// Row-major `N × N`.
    entries: Vec<f64>,
}

pub fn assemble_kernel(grid: &Arc<RadialGrid>, alpha: f64) -> Result<RieszKernelMatrix> {
    let c = riesz_constant(alpha)?;
    let n = grid.len();
    let mut entries = assembly::cell_pair_matrix(grid, alpha);
    for (row, w) in entries.chunks_mut(n).zip(grid.weights()) {
        for v in row {
            *v *= c / w;
        }
    }
    Ok(RieszKernelMatrix {
        alpha,
        grid: Arc::clone(grid),
        entries,
    })
}

impl RieszKernelMatrix {
    pub(crate) fn from_parts(grid: Arc<RadialGrid>, alpha: f64, entries: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        let n = grid.len();
        if entries.len() != n * n {
            return invalid(format!(
                "kernel payload has {} entries, expected {}",
                entries.len(),
                n * n
            ));
        }
        Ok(Self {
            alpha,
            grid,
            entries,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.entries[i * n..(i + 1) * n]
    }

    /// `K g` on raw nodal values.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let n = self.len();
        debug_assert_eq!(g.len(), n);
        self.entries
            .par_chunks(n)
            .map(|row| row.iter().zip(g).map(|(k, v)| k * v).sum())
            .collect()
    }
}

/// `I_α ∗ g` sampled at the grid nodes.
pub fn convolve(kernel: &RieszKernelMatrix, g: &RadialField) -> Result<RadialField> {
    g.check_grid(kernel.grid())?;
    RadialField::new(Arc::clone(kernel.grid()), kernel.apply(g.values()))
}
