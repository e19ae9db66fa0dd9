//! Direct planar quadrature of `c_α ∫ g(|y|) |x-y|^{α-2} dy`.
//!
//! Polar coordinates are centered at the evaluation point `x` with
//! `ρ = e^v`, which turns `ρ^{α-1} dρ` into the smooth `e^{αv} dv`. The ball
//! `ρ < ε` is replaced by `c_α g(|x|) 2π ε^α / α`.

use super::riesz_constant;
use crate::error::Result;
use crate::grid::RadialField;
use crate::quad;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Radius of the excluded ball around the singularity.
    pub eps: f64,
    /// Panels per smooth piece, in both `v = ln ρ` and `θ`.
    pub panels: usize,
    /// Gauss-Legendre points per panel.
    pub order: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            eps: 1e-7,
            panels: 12,
            order: 12,
        }
    }
}

/// Oracle on a sampled field, interpolated by piecewise cubics; the field is
/// zero beyond the grid's `r_max`.
pub fn brute_force_oracle(
    g: &RadialField,
    alpha: f64,
    eval_radii: &[f64],
    opts: OracleOptions,
) -> Result<Vec<f64>> {
    let grid = g.grid();
    let values = g.values();
    brute_force_oracle_fn(
        |r| grid.interpolate_cubic(values, r),
        grid.r_max(),
        alpha,
        eval_radii,
        opts,
    )
}

/// Oracle on a radial profile `g` supported in `|y| ≤ support`.
pub fn brute_force_oracle_fn(
    g: impl Fn(f64) -> f64 + Sync,
    support: f64,
    alpha: f64,
    eval_radii: &[f64],
    opts: OracleOptions,
) -> Result<Vec<f64>> {
    let c = riesz_constant(alpha)?;
    Ok(eval_radii
        .par_iter()
        .map(|&r| c * potential_at(&g, support, alpha, r, opts))
        .collect())
}

fn potential_at(
    g: &impl Fn(f64) -> f64,
    support: f64,
    alpha: f64,
    r: f64,
    o: OracleOptions,
) -> f64 {
    let eps = o.eps;
    let mut cuts = vec![eps.ln(), (r + support).ln()];
    let inner = (support - r).abs();
    if inner > eps {
        cuts.push(inner.ln());
    }
    cuts.sort_by(f64::total_cmp);

    let ring = |rho: f64| -> f64 {
        if r == 0.0 {
            return 2.0 * PI * g(rho);
        }
        // |x + ρe^{iθ}| ≤ support iff cos θ ≤ bound.
        let bound = (support * support - r * r - rho * rho) / (2.0 * r * rho);
        if bound <= -1.0 {
            return 0.0;
        }
        let lo = if bound >= 1.0 { 0.0 } else { bound.acos() };
        let step = (PI - lo) / o.panels as f64;
        let mut acc = 0.0;
        for p in 0..o.panels {
            let a = lo + p as f64 * step;
            acc += quad::integrate(o.order, a, a + step, |th| {
                let d2 = r * r + rho * rho + 2.0 * r * rho * th.cos();
                g(d2.max(0.0).sqrt())
            });
        }
        2.0 * acc
    };

    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (v0, v1) = (w[0], w[1]);
        if v1 <= v0 {
            continue;
        }
        let step = (v1 - v0) / o.panels as f64;
        for p in 0..o.panels {
            let a = v0 + p as f64 * step;
            total += quad::integrate(o.order, a, a + step, |v| {
                let rho = v.exp();
                (alpha * v).exp() * ring(rho)
            });
        }
    }
    total + g(r) * 2.0 * PI * eps.powf(alpha) / alpha
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_profile_gives_zero() {
        let out = brute_force_oracle_fn(
            |_| 0.0,
            3.0,
            1.0,
            &[0.0, 1.0, 5.0],
            OracleOptions::default(),
        )
        .unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disk_potential_at_center() {
        for alpha in [0.5, 1.0, 1.5] {
            let out = brute_force_oracle_fn(
                |r| if r <= 1.0 { 1.0 } else { 0.0 },
                1.0,
                alpha,
                &[0.0],
                OracleOptions::default(),
            )
            .unwrap();
            let want = riesz_constant(alpha).unwrap() * 2.0 * PI / alpha;
            assert!((out[0] - want).abs() < 1e-10 * want);
        }
    }

    #[test]
    fn disk_potential_off_center_alpha_one() {
        // For α = 1 the potential of the unit disk is c·4E(k), k = |x| < 1.
        // The jump of g at the rim caps the attainable accuracy.
        let agm_e = |k: f64| {
            // E(k) from the arithmetic-geometric mean.
            let (mut a, mut b) = (1.0f64, (1.0 - k * k).sqrt());
            let mut sum = 0.5 * k * k;
            let mut pow = 0.5;
            for _ in 0..30 {
                let c = 0.5 * (a - b);
                let an = 0.5 * (a + b);
                b = (a * b).sqrt();
                a = an;
                pow *= 2.0;
                sum += pow * c * c;
            }
            PI / (2.0 * a) * (1.0 - sum)
        };
        let radii = [0.2, 0.5, 0.9];
        let out = brute_force_oracle_fn(
            |r| if r <= 1.0 { 1.0 } else { 0.0 },
            1.0,
            1.0,
            &radii,
            OracleOptions::default(),
        )
        .unwrap();
        for (r, got) in radii.iter().zip(out) {
            let want = 4.0 * agm_e(*r) / (2.0 * PI);
            assert!((got - want).abs() < 2e-5 * want, "r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn refinement_is_stable() {
        let g = |r: f64| (-r * r).exp();
        let radii = [0.0, 0.3, 1.0, 2.5, 6.0];
        let base = OracleOptions::default();
        let fine = OracleOptions {
            eps: base.eps / 2.0,
            panels: base.panels * 2,
            order: base.order,
        };
        let a = brute_force_oracle_fn(g, 10.0, 1.0, &radii, base).unwrap();
        let b = brute_force_oracle_fn(g, 10.0, 1.0, &radii, fine).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-4 * y.abs(), "{x} vs {y}");
        }
    }
}
