//! Cell-pair integrals of `|x - y|^{α-2}` over annuli.

use crate::grid::RadialGrid;
use crate::quad;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

const GRADING_RATIO: f64 = 0.2;
/// `log10(1/GRADING_RATIO)`.
const GRADING_DIGITS: f64 = 0.699;
/// Digits of accuracy targeted by the truncated geometric grading.
const TARGET_DIGITS: f64 = 11.0;

/// `∫_0^{2π} (r² + s² - 2rs cos θ)^β dθ` with `delta = |r - s| > 0` passed
/// separately so that it keeps full precision when `r ≈ s`.
pub(crate) fn angular(r: f64, s: f64, delta: f64, beta: f64) -> f64 {
    debug_assert!(delta > 0.0);
    let rs4 = 4.0 * r * s;
    let d2 = delta * delta;
    if rs4 == 0.0 {
        return 2.0 * PI * d2.powf(beta);
    }
    let g = |phi: f64| {
        let sn = phi.sin();
        (d2 + rs4 * sn * sn).powf(beta)
    };
    let phic = delta / rs4.sqrt();
    let total = if phic >= 2.0 {
        quad::integrate(8, 0.0, FRAC_PI_2, g)
    } else if phic >= 0.5 {
        quad::integrate(20, 0.0, FRAC_PI_2, g)
    } else {
        let mut acc = 0.0;
        let (mut lo, mut hi) = (0.0, phic);
        loop {
            let top = hi.min(FRAC_PI_2);
            acc += quad::integrate(10, lo, top, g);
            if top >= FRAC_PI_2 {
                break;
            }
            lo = top;
            hi *= 3.0;
        }
        acc
    };
    4.0 * total
}

/// Panels `[q^{k+1} L, q^k L]` for `k < count`, ordered from the origin out.
fn graded_panels(len: f64, count: usize) -> impl Iterator<Item = (f64, f64)> {
    (0..count).rev().map(move |k| {
        let hi = len * GRADING_RATIO.powi(k as i32);
        (hi * GRADING_RATIO, hi)
    })
}

fn panel_count(exponent: f64) -> usize {
    (TARGET_DIGITS / (exponent * GRADING_DIGITS)).ceil() as usize
}

/// `∫_lo^hi g` for `g` analytic except near `lo - dist`: panels grow
/// geometrically away from that point.
fn away_from(lo: f64, hi: f64, dist: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
    let end = hi - lo + dist;
    let mut t = dist;
    let mut acc = 0.0;
    while t < end {
        let next = (3.0 * t).min(end);
        acc += quad::integrate(8, lo + t - dist, lo + next - dist, &mut g);
        t = next;
    }
    acc
}

/// `∫_{[a,b]²} r s A(r,s) dr ds`.
fn diagonal(a: f64, b: f64, beta: f64, alpha: f64) -> f64 {
    let h = b - a;
    let mut acc = 0.0;
    for (lo, hi) in graded_panels(h, panel_count(alpha.min(1.0))) {
        for (d, wd) in quad::mapped(12, lo, hi) {
            // A(s + d, s) varies on the scale max(s, d) near s = 0.
            let inner = away_from(a, b - d, a + 0.25 * d, |s| {
                let r = s + d;
                r * s * angular(r, s, d, beta)
            });
            acc += wd * inner;
        }
    }
    2.0 * acc
}

/// `∫_a^b ∫_b^c r s A(r,s) ds dr` for cells sharing the edge `b`.
fn adjacent(a: f64, b: f64, c: f64, beta: f64, alpha: f64) -> f64 {
    let (h1, h2) = (b - a, c - b);
    let (d1, d2, d3) = (h1.min(h2), h1.max(h2), h1 + h2);
    let inner = |d: f64| {
        let lo = a.max(b - d);
        let hi = b.min(c - d);
        if hi <= lo {
            return 0.0;
        }
        away_from(lo, hi, lo + 0.25 * d, |r| {
            let s = r + d;
            r * s * angular(r, s, d, beta)
        })
    };
    let mut acc = 0.0;
    for (lo, hi) in graded_panels(d1, panel_count(alpha + 1.0)) {
        acc += quad::integrate(12, lo, hi, inner);
    }
    if d2 > d1 {
        acc += quad::integrate(8, d1, d2, inner);
    }
    acc + quad::integrate(8, d2, d3, inner)
}

fn separated_order(sep: f64) -> usize {
    match sep {
        s if s < 1.5 => 8,
        s if s < 3.0 => 6,
        s if s < 8.0 => 4,
        s if s < 20.0 => 3,
        _ => 2,
    }
}

/// `∫_{[a1,b1]} ∫_{[a2,b2]} r s A(r,s) ds dr` for cells with a gap between them.
fn separated(a1: f64, b1: f64, a2: f64, b2: f64, beta: f64) -> f64 {
    let gap = if b1 <= a2 { a2 - b1 } else { a1 - b2 };
    let width = (b1 - a1).max(b2 - a2);
    let q = separated_order(gap / width);
    let mut acc = 0.0;
    for (r, wr) in quad::mapped(q, a1, b1) {
        let mut row = 0.0;
        for (s, ws) in quad::mapped(q, a2, b2) {
            row += ws * s * angular(r, s, (r - s).abs(), beta);
        }
        acc += wr * r * row;
    }
    acc
}

/// Symmetric matrix `B_ij = ∫_{ann_i} ∫_{ann_j} |x - y|^{α-2} dy dx`, row-major.
pub(crate) fn cell_pair_matrix(grid: &RadialGrid, alpha: f64) -> Vec<f64> {
    let n = grid.len();
    let e = grid.edges();
    let beta = 0.5 * (alpha - 2.0);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    let v = if j == i {
                        diagonal(e[i], e[i + 1], beta, alpha)
                    } else if j == i + 1 {
                        adjacent(e[i], e[i + 1], e[j + 1], beta, alpha)
                    } else {
                        separated(e[i], e[i + 1], e[j], e[j + 1], beta)
                    };
                    2.0 * PI * v
                })
                .collect()
        })
        .collect();
    let mut b = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            let j = i + k;
            b[i * n + j] = v;
            b[j * n + i] = v;
        }
    }
    b
}
