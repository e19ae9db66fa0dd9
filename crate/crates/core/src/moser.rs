//! Moser concentrating sequences and the mountain-pass level bound.

use crate::energy::check_inputs;
use crate::error::{invalid, ChoquardError, Result};
use crate::fiber::fiber_point;
use crate::grid::{rescale_mass, RadialField, RadialGrid};
use crate::nonlin::NonlinearityModel;
use crate::riesz::{check_alpha, RieszKernelMatrix};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

/// Nodes required inside the plateau `[0, 1/n]`.
pub const MIN_PLATEAU_NODES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoserScanResult {
    pub n: u32,
    pub t_values: Vec<f64>,
    /// `-∞` where `t w_n` exceeds the overflow guard.
    pub g_values: Vec<f64>,
    pub t_n: f64,
    pub g_max: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoserSummary {
    pub n: u32,
    pub t_n: f64,
    pub g_max: f64,
    pub bound: f64,
    pub margin: f64,
}

impl MoserScanResult {
    pub fn summary(&self) -> MoserSummary {
        MoserSummary {
            n: self.n,
            t_n: self.t_n,
            g_max: self.g_max,
            bound: self.bound,
            margin: self.margin,
        }
    }

    /// CSV with header `t,g`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,g\n");
        for (t, g) in self.t_values.iter().zip(&self.g_values) {
            let _ = writeln!(out, "{t:.17e},{g:.17e}");
        }
        out
    }
}

fn check_resolution(grid: &RadialGrid, n: u32) -> Result<()> {
    if n < 2 {
        return invalid(format!("Moser index must be at least 2, got {n}"));
    }
    if grid.r_max() < 1.0 {
        return Err(ChoquardError::ResolutionError(format!(
            "grid radius {} does not cover the unit disk",
            grid.r_max()
        )));
    }
    let inner = 1.0 / n as f64;
    let count = grid.nodes().iter().take_while(|&&r| r <= inner).count();
    if count < MIN_PLATEAU_NODES {
        return Err(ChoquardError::ResolutionError(format!(
            "only {count} nodes inside [0, 1/{n}], need {MIN_PLATEAU_NODES}"
        )));
    }
    Ok(())
}

/// Profile of `w̃_n` at radius `r`.
pub fn moser_profile(n: u32, r: f64) -> f64 {
    let ln = (n as f64).ln();
    let c = 1.0 / (2.0 * PI).sqrt();
    if r <= 1.0 / n as f64 {
        c * ln.sqrt()
    } else if r < 1.0 {
        c * (1.0 / r).ln() / ln.sqrt()
    } else {
        0.0
    }
}

/// `w̃_n`, with unit Dirichlet energy.
pub fn moser_field(grid: &Arc<RadialGrid>, n: u32) -> Result<RadialField> {
    check_resolution(grid, n)?;
    RadialField::from_fn(grid, |r| moser_profile(n, r))
}

/// `w_n = a w̃_n / ∥w̃_n∥₂`.
pub fn normalized_moser(grid: &Arc<RadialGrid>, n: u32, a: f64) -> Result<RadialField> {
    if !(a > 0.0 && a.is_finite()) {
        return invalid(format!("mass must be positive, got {a}"));
    }
    let w = moser_field(grid, n)?;
    rescale_mass(&w, a)
}

/// `(2+α)π/(2γ₀)`.
pub fn mp_upper_bound(alpha: f64, gamma0: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(gamma0 > 0.0 && gamma0.is_finite()) {
        return invalid(format!("gamma0 must be positive, got {gamma0}"));
    }
    Ok((2.0 + alpha) * PI / (2.0 * gamma0))
}

/// `t_values` log-spaced over `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}

/// `g_n(t) = t²/2 ∥∇w_n∥² - t^{-(2+α)}/2 ∫(I_α∗F(t w_n))F(t w_n)`, or
/// `None` on overflow.
fn g_value(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    w: &[f64],
    t: f64,
) -> Result<Option<f64>> {
    match fiber_point(grid, kernel, model, w, t.ln()) {
        Ok(p) => {
            let alpha = model.alpha();
            Ok(Some(
                0.5 * t * t * p.grad_sq - 0.5 * t.powf(-(2.0 + alpha)) * p.n,
            ))
        }
        Err(ChoquardError::EnergyOverflow { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Scan `g_n` over `t_grid` and locate its maximum, refined by a parabola in
/// `ln t` through the discrete argmax and its neighbours. The refined point
/// is inserted into the scan when it improves on the discrete maximum.
pub fn g_scan(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    n: u32,
    a: f64,
    t_grid: &[f64],
) -> Result<MoserScanResult> {
    let gamma0 = model.gamma0().ok_or_else(|| {
        ChoquardError::InvalidArgument("the level bound needs an exponential model".into())
    })?;
    let bound = mp_upper_bound(model.alpha(), gamma0)?;
    if t_grid.len() < 3 {
        return invalid("t grid needs at least three points");
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite()))
        || t_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return invalid("t grid must be increasing and positive");
    }
    let grid_arc = kernel.grid();
    if !grid_arc.same_as(grid) {
        return invalid("kernel was assembled on a different grid");
    }
    let wn = normalized_moser(grid_arc, n, a)?;
    check_inputs(grid, kernel, model, &wn)?;
    let w = wn.values();

    let mut t_values = t_grid.to_vec();
    let mut g_values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        g_values.push(g_value(grid, kernel, model, w, t)?.unwrap_or(f64::NEG_INFINITY));
    }
    let k = argmax(&g_values).ok_or_else(|| {
        ChoquardError::ScanOverflow(format!("every g_{n}(t) overflowed; reduce the t range"))
    })?;

    if k > 0 && k + 1 < t_values.len() && g_values[k - 1].is_finite() && g_values[k + 1].is_finite()
    {
        let (x0, x1, x2) = (t_values[k - 1].ln(), t_values[k].ln(), t_values[k + 1].ln());
        let (y0, y1, y2) = (g_values[k - 1], g_values[k], g_values[k + 1]);
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let curv = (d12 - d01) / (x2 - x0);
        if curv < 0.0 {
            let xs = (0.5 * (x0 + x1) - d01 / (2.0 * curv)).clamp(x0, x2);
            let ts = xs.exp();
            if let Some(gs) = g_value(grid, kernel, model, w, ts)? {
                if gs > y1 && ts != t_values[k] {
                    let at = if ts < t_values[k] { k } else { k + 1 };
                    t_values.insert(at, ts);
                    g_values.insert(at, gs);
                }
            }
        }
    }
    let k = argmax(&g_values).expect("finite value exists");
    Ok(MoserScanResult {
        n,
        t_n: t_values[k],
        g_max: g_values[k],
        bound,
        margin: bound - g_values[k],
        t_values,
        g_values,
    })
}

fn argmax(v: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in v.iter().enumerate() {
        if x.is_finite() && best.is_none_or(|b| x > v[b]) {
            best = Some(i);
        }
    }
    best
}

/// `∥w̃_n∥₂²` in closed form.
pub fn moser_mass_sq(n: u32) -> f64 {
    let ln = (n as f64).ln();
    let eps = 1.0 / n as f64;
    // ∫_ε^1 ln²(1/r) r dr = 1/4 - ε²(ln²ε/2 - lnε/2 + 1/4)
    let le = eps.ln();
    let tail = 0.25 - eps * eps * (0.5 * le * le - 0.5 * le + 0.25);
    ln * eps * eps / 2.0 + tail / ln
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::jtilde;
    use crate::grid::{grad_norm_sq, l2_norm, make_grid, GridScheme};
    use crate::quad;
    use crate::riesz::assemble_kernel;

    #[test]
    fn bound_values() {
        assert!((mp_upper_bound(1.0, 1.0).unwrap() - 4.71238898038469).abs() < 1e-12);
        assert!(
            (mp_upper_bound(1.0, 2.0).unwrap() - 0.5 * mp_upper_bound(1.0, 1.0).unwrap()).abs()
                < 1e-15
        );
        assert!((mp_upper_bound(1e-9, 1.0).unwrap() - PI).abs() < 1e-8);
        assert!(mp_upper_bound(2.0, 1.0).is_err());
        assert!(mp_upper_bound(1.0, 0.0).is_err());
    }

    #[test]
    fn closed_form_mass_matches_quadrature() {
        for n in [10u32, 100, 1000] {
            let eps = 1.0 / n as f64;
            let mut acc =
                quad::integrate(20, 0.0, eps, |r| 2.0 * PI * r * moser_profile(n, r).powi(2));
            let edges = log_spaced(eps, 1.0, 40);
            for w in edges.windows(2) {
                acc += quad::integrate(20, w[0], w[1], |r| {
                    2.0 * PI * r * moser_profile(n, r).powi(2)
                });
            }
            assert!((acc - moser_mass_sq(n)).abs() < 1e-13, "{n}");
        }
    }

    #[test]
    fn unit_gradient_and_mass_law() {
        let g = make_grid(4096, 1.0, GridScheme::Graded).unwrap();
        let mut prev = f64::INFINITY;
        for n in [10u32, 100, 1000] {
            let w = moser_field(&g, n).unwrap();
            let q = grad_norm_sq(&g, &w).unwrap();
            assert!((q - 1.0).abs() < 1e-3, "n={n}: {q}");
            let law = 4.0 * (n as f64).ln() * l2_norm(&w).powi(2);
            let dev = (law - 1.0).abs();
            assert!(dev < prev);
            prev = dev;
            if n == 1000 {
                assert!(law > 0.9 && law < 1.1);
            }
            assert!(w
                .values()
                .iter()
                .zip(g.nodes())
                .all(|(v, r)| *r < 1.0 || *v == 0.0));
        }
    }

    #[test]
    fn normalized_sequence() {
        let g = make_grid(4096, 1.0, GridScheme::Graded).unwrap();
        let a = 1.3;
        let n = 1000;
        let w = normalized_moser(&g, n, a).unwrap();
        assert!((l2_norm(&w) - a).abs() < 1e-12);
        let ln = (n as f64).ln();
        let c = w.values()[0] / (a * (2.0 / PI).sqrt() * ln);
        assert!(c > 0.9 && c < 1.1, "{c}");
        let q = grad_norm_sq(&g, &w).unwrap() / (4.0 * a * a * ln);
        assert!(q > 0.9 && q < 1.1, "{q}");
    }

    #[test]
    fn coarse_grids_are_rejected() {
        let g = make_grid(64, 1.0, GridScheme::UniformMidpoint).unwrap();
        assert!(matches!(
            moser_field(&g, 100),
            Err(ChoquardError::ResolutionError(_))
        ));
        let small = make_grid(64, 0.5, GridScheme::Graded).unwrap();
        assert!(matches!(
            moser_field(&small, 4),
            Err(ChoquardError::ResolutionError(_))
        ));
        assert!(moser_field(&g, 1).is_err());
    }

    #[test]
    fn scan_shape_and_fiber_agreement() {
        let g = make_grid(256, 1.0, GridScheme::Graded).unwrap();
        let kernel = assemble_kernel(&g, 1.0).unwrap();
        let model = NonlinearityModel::exp_critical(4.0, 1.0, 1.0, 1.0).unwrap();
        let ts = log_spaced(0.01, 10.0, 121);
        let scan = g_scan(&g, &kernel, &model, 16, 1.0, &ts).unwrap();
        assert!(scan.t_values.contains(&scan.t_n));
        assert!(scan.g_values.iter().all(|&v| v <= scan.g_max));
        assert!(scan.g_values[0] < 1e-3 * scan.g_max);
        assert!(scan.g_values.iter().any(|&v| v < 0.0));
        assert_eq!(scan.margin, scan.bound - scan.g_max);

        let wn = normalized_moser(&g, 16, 1.0).unwrap();
        for (t, gv) in scan.t_values.iter().zip(&scan.g_values) {
            if gv.is_finite() {
                let j = jtilde(&g, &kernel, &model, &wn, t.ln()).unwrap();
                assert!((j - gv).abs() <= 1e-8 * gv.abs().max(1e-300), "{t}");
            }
        }
        let csv = scan.to_csv();
        assert!(csv.starts_with("t,g\n"));
        assert_eq!(csv.lines().count(), scan.t_values.len() + 1);
    }

    #[test]
    fn all_overflow_is_an_error() {
        let g = make_grid(64, 1.0, GridScheme::Graded).unwrap();
        let kernel = assemble_kernel(&g, 1.0).unwrap();
        let model = NonlinearityModel::exp_critical(4.0, 1.0, 1.0, 1.0).unwrap();
        let ts = log_spaced(1e3, 1e4, 5);
        assert!(matches!(
            g_scan(&g, &kernel, &model, 4, 1.0, &ts),
            Err(ChoquardError::ScanOverflow(_))
        ));
        let power = NonlinearityModel::power(4.0, 1.0).unwrap();
        assert!(g_scan(&g, &kernel, &power, 4, 1.0, &log_spaced(0.1, 1.0, 5)).is_err());
    }
}
