//! Radial discretization of the plane.
//!
//! A [`RadialGrid`] splits the disk `B_R` into `N` annular cells with edges
//! `0 = e_0 < e_1 < ... < e_N = R`. Each cell carries one node and a weight
//! equal to the exact annulus area, so `Σ w_i g(r_i)` is a midpoint-type rule
//! for `∫_{ℝ²} g(|x|) dx` with the `2πr` Jacobian folded in. Fields vanish
//! beyond `R`.

use crate::error::{invalid, ChoquardError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    UniformMidpoint,
    /// Cell edges `R (k/N)²`: nodes cluster quadratically near the origin.
    Graded,
}

impl GridScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            GridScheme::UniformMidpoint => "uniform-midpoint",
            GridScheme::Graded => "graded",
        }
    }
}

impl std::str::FromStr for GridScheme {
    type Err = ChoquardError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-midpoint" | "uniform" => Ok(GridScheme::UniformMidpoint),
            "graded" => Ok(GridScheme::Graded),
            other => invalid(format!(
                "unknown grid scheme '{other}' (expected uniform-midpoint or graded)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    scheme: GridScheme,
    r_max: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    edges: Vec<f64>,
    /// Coefficients of the discrete Dirichlet form `Σ_k c_k (u_{k+1} - u_k)²`.
    stiffness: Vec<f64>,
}

/// Build a grid with `n` cells on `(0, r_max]`.
pub fn make_grid(n: usize, r_max: f64, scheme: GridScheme) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(n, r_max, scheme).map(Arc::new)
}

impl RadialGrid {
    pub fn new(n: usize, r_max: f64, scheme: GridScheme) -> Result<Self> {
        if n < MIN_NODES {
            return invalid(format!("grid needs at least {MIN_NODES} nodes, got {n}"));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return invalid(format!("r_max must be positive and finite, got {r_max}"));
        }
        let nf = n as f64;
        let (edges, nodes): (Vec<f64>, Vec<f64>) = match scheme {
            GridScheme::UniformMidpoint => (
                (0..=n).map(|k| r_max * k as f64 / nf).collect(),
                (1..=n).map(|i| r_max * (i as f64 - 0.5) / nf).collect(),
            ),
            GridScheme::Graded => (
                (0..=n).map(|k| r_max * (k as f64 / nf).powi(2)).collect(),
                (1..=n)
                    .map(|i| r_max * ((i as f64 - 0.5) / nf).powi(2))
                    .collect(),
            ),
        };
        let mut edges = edges;
        edges[n] = r_max;
        let weights = edges
            .windows(2)
            .map(|e| PI * (e[1] * e[1] - e[0] * e[0]))
            .collect();
        let stiffness = Self::dirichlet_form(&nodes, r_max);
        Ok(Self {
            scheme,
            r_max,
            nodes,
            weights,
            edges,
            stiffness,
        })
    }

    // Edge k joins nodes k and k+1; a field linear on [r_k, r_{k+1}] has its
    // gradient energy 2π∫|u'|² r dr reproduced exactly. The slope of the last
    // edge is carried out to R; the slope on [0, r_1] is taken as zero.
    fn dirichlet_form(nodes: &[f64], r_max: f64) -> Vec<f64> {
        let n = nodes.len();
        let mut c: Vec<f64> = nodes
            .windows(2)
            .map(|p| PI * (p[1] * p[1] - p[0] * p[0]) / (p[1] - p[0]).powi(2))
            .collect();
        let last = nodes[n - 1];
        let dl = last - nodes[n - 2];
        c[n - 2] += PI * (r_max * r_max - last * last) / (dl * dl);
        c
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Cell edges, `len() + 1` of them, starting at 0 and ending at `r_max`.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn stiffness(&self) -> &[f64] {
        &self.stiffness
    }

    pub fn same_as(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.scheme == other.scheme
                && self.r_max == other.r_max
                && self.nodes == other.nodes)
    }

    /// `Σ w_i g_i`.
    pub fn sum(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, g)| w * g).sum()
    }

    /// `Σ_k c_k (u_{k+1} - u_k)²`, the discrete `∥∇u∥₂²`.
    pub fn dirichlet_energy(&self, values: &[f64]) -> f64 {
        self.stiffness
            .iter()
            .zip(values.windows(2))
            .map(|(c, p)| c * (p[1] - p[0]).powi(2))
            .sum()
    }

    /// `L u` where `u ↦ ½ uᵀ L u` is half the Dirichlet form; `(L u)_i / w_i`
    /// is the discrete `-Δu` at node i.
    pub fn apply_stiffness(&self, values: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for (k, c) in self.stiffness.iter().enumerate() {
            let flux = c * (values[k + 1] - values[k]);
            out[k] -= flux;
            out[k + 1] += flux;
        }
        out
    }

    /// Discrete `-Δu = -u'' - u'/r` at every node.
    pub fn neg_laplacian(&self, values: &[f64]) -> Vec<f64> {
        let mut out = self.apply_stiffness(values);
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o /= w;
        }
        out
    }

    /// Piecewise-linear interpolation of nodal values at radius `r`:
    /// constant below the first node, linear down to zero on `[r_N, R]`,
    /// zero beyond `R`.
    pub fn interpolate_linear(&self, values: &[f64], r: f64) -> f64 {
        let n = self.len();
        if r <= self.nodes[0] {
            return values[0];
        }
        if r >= self.r_max {
            return 0.0;
        }
        if r >= self.nodes[n - 1] {
            let t = (self.r_max - r) / (self.r_max - self.nodes[n - 1]);
            return values[n - 1] * t;
        }
        let k = self.nodes.partition_point(|&x| x <= r) - 1;
        let (r0, r1) = (self.nodes[k], self.nodes[k + 1]);
        let t = (r - r0) / (r1 - r0);
        values[k] * (1.0 - t) + values[k + 1] * t
    }

    /// Four-point Lagrange interpolation of nodal values (cubic where the
    /// stencil fits, linear in the end cells). Zero beyond `R`.
    pub fn interpolate_cubic(&self, values: &[f64], r: f64) -> f64 {
        let n = self.len();
        if r <= self.nodes[0] {
            return values[0];
        }
        if r >= self.nodes[n - 1] {
            return self.interpolate_linear(values, r);
        }
        let k = self.nodes.partition_point(|&x| x <= r) - 1;
        if k == 0 || k + 2 >= n {
            return self.interpolate_linear(values, r);
        }
        let idx = [k - 1, k, k + 1, k + 2];
        let mut acc = 0.0;
        for &i in &idx {
            let mut l = 1.0;
            for &j in &idx {
                if i != j {
                    l *= (r - self.nodes[j]) / (self.nodes[i] - self.nodes[j]);
                }
            }
            acc += l * values[i];
        }
        acc
    }

    /// CSV with header `r,w`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,w\n");
        for (r, w) in self.nodes.iter().zip(&self.weights) {
            let _ = writeln!(s, "{r:.17e},{w:.17e}");
        }
        s
    }
}

/// Samples of a radial function on a shared grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("field value at node {i} is not finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, g: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| g(r)).collect();
        Self::new(Arc::clone(grid), values)
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            Arc::clone(&self.grid),
            self.values.iter().map(|&v| g(v)).collect(),
        )
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.map(|v| factor * v)
    }

    pub(crate) fn check_grid(&self, grid: &RadialGrid) -> Result<()> {
        if self.grid.same_as(grid) {
            Ok(())
        } else {
            invalid("field lives on a different grid")
        }
    }

    /// CSV with header `r,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,value\n");
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            let _ = writeln!(s, "{r:.17e},{v:.17e}");
        }
        s
    }
}

/// `∫_{ℝ²} g dx ≈ Σ w_i g(r_i)`.
pub fn integrate(grid: &RadialGrid, g: &RadialField) -> Result<f64> {
    g.check_grid(grid)?;
    Ok(grid.sum(g.values()))
}

/// Discrete `∥∇u∥₂²` (nonnegative, zero exactly on constants).
pub fn grad_norm_sq(grid: &RadialGrid, u: &RadialField) -> Result<f64> {
    u.check_grid(grid)?;
    Ok(grid.dirichlet_energy(u.values()))
}

pub fn lp_norm(grid: &RadialGrid, u: &RadialField, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("Lp exponent must be finite and >= 1, got {p}"));
    }
    u.check_grid(grid)?;
    let s: f64 = grid
        .weights()
        .iter()
        .zip(u.values())
        .map(|(w, v)| w * v.abs().powf(p))
        .sum();
    Ok(s.powf(1.0 / p))
}

pub fn l2_norm(u: &RadialField) -> f64 {
    u.grid()
        .weights()
        .iter()
        .zip(u.values())
        .map(|(w, v)| w * v * v)
        .sum::<f64>()
        .sqrt()
}

/// `(a / ∥u∥₂) u`, which lies on the discrete mass sphere of radius `a`.
pub fn rescale_mass(u: &RadialField, a: f64) -> Result<RadialField> {
    if !(a > 0.0 && a.is_finite()) {
        return invalid(format!("mass must be positive, got {a}"));
    }
    let norm = l2_norm(u);
    if norm == 0.0 || !norm.is_finite() {
        return Err(ChoquardError::DegenerateField(
            "cannot rescale a field with zero L2 norm".into(),
        ));
    }
    u.scaled(a / norm)
}
