//! The mass-preserving scaling `H(u,s) = e^s u(e^s ·)` and the energy along
//! its orbits.
//!
//! `J̃(u,s) = J(H(u,s))` and its `s`-derivative are evaluated in closed form
//! from the amplitude-scaled field `e^s u` on the original grid:
//!
//! ```text
//! J̃(u,s)      = e^{2s}/2 ∥∇u∥² - e^{-(2+α)s}/2 ∫(I_α∗F(e^s u))F(e^s u)
//! 𝒫(H(u,s))   = e^{2s} (∥∇u∥² - ψ_u(s))
//! ψ_u(s)      = e^{-(4+α)s} ∫(I_α∗F(e^s u)) F̃(e^s u)
//! ```

use crate::energy::{check_inputs, nonlocal_terms};
use crate::error::{ChoquardError, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::nonlin::NonlinearityModel;
use crate::riesz::RieszKernelMatrix;
use std::fmt::Write as _;
use std::sync::Arc;

/// Bracket expansion stops at `[-S_CAP, S_CAP]`.
pub const S_CAP: f64 = 20.0;
/// Default relative tolerance on `𝒫(H(u,s*)) / (e^{2s*}∥∇u∥²)`.
pub const DEFAULT_ROOT_TOL: f64 = 1e-11;
const SIGN_SCAN_POINTS: usize = 17;

#[derive(Debug, Clone, PartialEq)]
pub struct FiberScan {
    pub s_values: Vec<f64>,
    /// `-∞` where `e^s u` exceeds the overflow guard.
    pub jtilde_values: Vec<f64>,
    /// `dJ̃/ds`; `-∞` where `e^s u` exceeds the overflow guard.
    pub pohozaev_values: Vec<f64>,
    pub root: Option<f64>,
}

impl FiberScan {
    /// CSV with header `s,jtilde,pohozaev`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,jtilde,pohozaev\n");
        for i in 0..self.s_values.len() {
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e}",
                self.s_values[i], self.jtilde_values[i], self.pohozaev_values[i]
            );
        }
        out
    }
}

/// The quantities of one fiber point, computed together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FiberPoint {
    pub grad_sq: f64,
    /// `Σ w KF(v) F(v)` for `v = e^s u`.
    pub n: f64,
    /// `Σ w KF(v) F̃(v)`.
    pub n_tilde: f64,
}

pub(crate) fn fiber_point(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    u: &[f64],
    s: f64,
) -> Result<FiberPoint> {
    let scale = s.exp();
    let v: Vec<f64> = u.iter().map(|x| scale * x).collect();
    let terms = nonlocal_terms(kernel, model, &v)?;
    let w = grid.weights();
    let mut n = 0.0;
    let mut n_tilde = 0.0;
    for ((wi, kf), val) in w.iter().zip(&terms.kf).zip(&terms.vals) {
        n += wi * kf * val.big_f;
        n_tilde += wi * kf * val.f_tilde;
    }
    if !(n.is_finite() && n_tilde.is_finite()) {
        let node = (0..v.len())
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .unwrap_or(0);
        return Err(ChoquardError::EnergyOverflow {
            node,
            amplitude: v.get(node).copied().unwrap_or(0.0),
        });
    }
    Ok(FiberPoint {
        grad_sq: grid.dirichlet_energy(u),
        n,
        n_tilde,
    })
}

impl FiberPoint {
    fn jtilde(&self, s: f64, alpha: f64) -> f64 {
        0.5 * (2.0 * s).exp() * self.grad_sq - 0.5 * (-(2.0 + alpha) * s).exp() * self.n
    }

    fn pohozaev(&self, s: f64, alpha: f64) -> f64 {
        (2.0 * s).exp() * self.grad_sq - (-(2.0 + alpha) * s).exp() * self.n_tilde
    }

    fn psi(&self, s: f64, alpha: f64) -> f64 {
        (-(4.0 + alpha) * s).exp() * self.n_tilde
    }
}

/// `J(H(u,s))`.
pub fn jtilde(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    u: &RadialField,
    s: f64,
) -> Result<f64> {
    check_inputs(grid, kernel, model, u)?;
    Ok(fiber_point(grid, kernel, model, u.values(), s)?.jtilde(s, model.alpha()))
}

/// `𝒫(H(u,s)) = dJ̃(u,s)/ds`.
pub fn pohozaev_scaled(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    u: &RadialField,
    s: f64,
) -> Result<f64> {
    check_inputs(grid, kernel, model, u)?;
    Ok(fiber_point(grid, kernel, model, u.values(), s)?.pohozaev(s, model.alpha()))
}

/// `ψ_u(s)`, strictly increasing in `s` when `F̃` is nondecreasing.
pub fn psi(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    u: &RadialField,
    s: f64,
) -> Result<f64> {
    check_inputs(grid, kernel, model, u)?;
    Ok(fiber_point(grid, kernel, model, u.values(), s)?.psi(s, model.alpha()))
}

/// `J̃` and `dJ̃/ds` over `s_values`, plus the fiber maximum if it lies
/// between two samples of opposite sign.
pub fn fiber_scan(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    u: &RadialField,
    s_values: &[f64],
) -> Result<FiberScan> {
    check_inputs(grid, kernel, model, u)?;
    let alpha = model.alpha();
    let mut jt = Vec::with_capacity(s_values.len());
    let mut po = Vec::with_capacity(s_values.len());
    for &s in s_values {
        match fiber_point(grid, kernel, model, u.values(), s) {
            Ok(p) => {
                jt.push(p.jtilde(s, alpha));
                po.push(p.pohozaev(s, alpha));
            }
            Err(ChoquardError::EnergyOverflow { .. }) => {
                jt.push(f64::NEG_INFINITY);
                po.push(f64::NEG_INFINITY);
            }
            Err(e) => return Err(e),
        }
    }
    let changes: Vec<usize> = (1..po.len())
        .filter(|&k| po[k - 1] > 0.0 && po[k] <= 0.0)
        .collect();
    let root = match changes.as_slice() {
        [k] => Some(project_pohozaev(
            grid,
            kernel,
            model,
            u,
            (s_values[k - 1], s_values[*k]),
        )?),
        _ => None,
    };
    Ok(FiberScan {
        s_values: s_values.to_vec(),
        jtilde_values: jt,
        pohozaev_values: po,
        root,
    })
}

/// `1 - ψ_u(s)/∥∇u∥²`, with overflow counted as negative.
fn normalized_gap(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    u: &[f64],
    grad_sq: f64,
    s: f64,
) -> Result<f64> {
    match fiber_point(grid, kernel, model, u, s) {
        Ok(p) => Ok(1.0 - p.psi(s, model.alpha()) / grad_sq),
        Err(ChoquardError::EnergyOverflow { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// The unique `s*` with `𝒫(H(u,s*)) = 0`, i.e. the maximum of `s ↦ J̃(u,s)`.
///
/// `s_bracket` is widened by doubling until `𝒫` changes sign, up to
/// `[-20, 20]`.
pub fn project_pohozaev(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    u: &RadialField,
    s_bracket: (f64, f64),
) -> Result<f64> {
    project_with_tol(grid, kernel, model, u, s_bracket, DEFAULT_ROOT_TOL)
}

pub fn project_with_tol(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    u: &RadialField,
    s_bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    check_inputs(grid, kernel, model, u)?;
    let uv = u.values();
    let grad_sq = grid.dirichlet_energy(uv);
    if grad_sq == 0.0 || uv.iter().all(|&x| x <= 0.0) {
        return Err(ChoquardError::ProjectionFailed(
            "field has no gradient or no positive part".into(),
        ));
    }
    let gap = |s: f64| normalized_gap(grid, kernel, model, uv, grad_sq, s);

    let (mut lo, mut hi) = s_bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(ChoquardError::InvalidArgument(format!(
            "bad bracket [{lo}, {hi}]"
        )));
    }
    let mut g_lo = gap(lo)?;
    let mut g_hi = gap(hi)?;
    while g_lo <= 0.0 || g_hi > 0.0 {
        if lo <= -S_CAP && hi >= S_CAP {
            return Err(ChoquardError::ProjectionFailed(format!(
                "no sign change of the Pohozaev functional on [{lo}, {hi}]"
            )));
        }
        if g_lo <= 0.0 {
            lo = (2.0 * lo - hi.max(lo + 1.0))
                .max(-S_CAP)
                .min(lo - 1.0)
                .max(-S_CAP);
            g_lo = gap(lo)?;
        }
        if g_hi > 0.0 {
            hi = (2.0 * hi - lo.min(hi - 1.0))
                .min(S_CAP)
                .max(hi + 1.0)
                .min(S_CAP);
            g_hi = gap(hi)?;
        }
    }

    // At most one sign change across the bracket.
    let mut signs = Vec::with_capacity(SIGN_SCAN_POINTS);
    for k in 0..SIGN_SCAN_POINTS {
        let s = lo + (hi - lo) * k as f64 / (SIGN_SCAN_POINTS - 1) as f64;
        let g = match k {
            0 => g_lo,
            k if k == SIGN_SCAN_POINTS - 1 => g_hi,
            _ => gap(s)?,
        };
        signs.push((s, g));
    }
    let changes = signs
        .windows(2)
        .filter(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0))
        .count();
    if changes > 1 {
        return Err(ChoquardError::MonotonicityViolation(format!(
            "Pohozaev functional changes sign {changes} times on [{lo}, {hi}]"
        )));
    }
    let k = signs
        .windows(2)
        .position(|w| w[0].1 > 0.0 && w[1].1 <= 0.0)
        .expect("one sign change exists");
    let (mut a, mut ga) = signs[k];
    let (mut b, mut gb) = signs[k + 1];

    // Illinois regula falsi; bisection whenever the upper end has overflowed.
    let mut side = 0i8;
    for _ in 0..200 {
        let c = if gb.is_finite() {
            let c = b - gb * (b - a) / (gb - ga);
            if c > a && c < b {
                c
            } else {
                0.5 * (a + b)
            }
        } else {
            0.5 * (a + b)
        };
        let gc = gap(c)?;
        if gc.abs() < tol || (b - a) < 1e-15 * (1.0 + c.abs()) {
            return Ok(c);
        }
        if gc > 0.0 {
            a = c;
            ga = gc;
            if side == 1 && gb.is_finite() {
                gb *= 0.5;
            }
            side = 1;
        } else {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        }
    }
    Ok(0.5 * (a + b))
}

/// `H(u,s)` sampled on the same grid by linear interpolation.
pub fn scale_field(grid: &RadialGrid, u: &RadialField, s: f64) -> Result<RadialField> {
    u.check_grid(grid)?;
    let e = s.exp();
    let vals = grid
        .nodes()
        .iter()
        .map(|&r| e * grid.interpolate_linear(u.values(), e * r))
        .collect();
    RadialField::new(Arc::clone(u.grid()), vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::evaluate_energy;
    use crate::grid::{grad_norm_sq, l2_norm, make_grid, GridScheme};
    use crate::riesz::assemble_kernel;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    struct Setup {
        grid: Arc<RadialGrid>,
        kernel: RieszKernelMatrix,
        model: NonlinearityModel,
    }

    fn setup() -> &'static Setup {
        static S: OnceLock<Setup> = OnceLock::new();
        S.get_or_init(|| {
            let grid = make_grid(96, 6.0, GridScheme::Graded).unwrap();
            let kernel = assemble_kernel(&grid, 1.0).unwrap();
            let model = NonlinearityModel::exp_critical(4.0, 1.0, 1.0, 1.0).unwrap();
            Setup {
                grid,
                kernel,
                model,
            }
        })
    }

    fn bump(s: &Setup, amp: f64, width: f64) -> RadialField {
        RadialField::from_fn(&s.grid, |r| amp * (-(r / width).powi(2)).exp()).unwrap()
    }

    #[test]
    fn s_zero_reproduces_energy() {
        let s = setup();
        let u = bump(s, 1.2, 0.8);
        let e = evaluate_energy(&s.grid, &s.kernel, &s.model, &u, 1.0).unwrap();
        let j = jtilde(&s.grid, &s.kernel, &s.model, &u, 0.0).unwrap();
        let p = pohozaev_scaled(&s.grid, &s.kernel, &s.model, &u, 0.0).unwrap();
        assert!((j - e.j).abs() <= 1e-12 * e.j.abs());
        assert!((p - e.pohozaev).abs() <= 1e-12 * e.coupling);
    }

    #[test]
    fn zero_field_is_flat() {
        let s = setup();
        let u = RadialField::zeros(&s.grid);
        for t in [-3.0, 0.0, 2.0] {
            assert_eq!(jtilde(&s.grid, &s.kernel, &s.model, &u, t).unwrap(), 0.0);
            assert_eq!(
                pohozaev_scaled(&s.grid, &s.kernel, &s.model, &u, t).unwrap(),
                0.0
            );
        }
        assert!(matches!(
            project_pohozaev(&s.grid, &s.kernel, &s.model, &u, (-1.0, 1.0)),
            Err(ChoquardError::ProjectionFailed(_))
        ));
    }

    #[test]
    fn fiber_vanishes_at_minus_infinity_and_turns_negative() {
        let s = setup();
        let u = bump(s, 1.0, 1.0);
        let j0 = jtilde(&s.grid, &s.kernel, &s.model, &u, 0.0).unwrap();
        let jm = jtilde(&s.grid, &s.kernel, &s.model, &u, -10.0).unwrap();
        assert!(jm.abs() < 1e-3 * j0.abs());
        let scan =
            fiber_scan(&s.grid, &s.kernel, &s.model, &u, &[0.0, 0.5, 1.0, 1.5, 2.0]).unwrap();
        assert!(scan.jtilde_values.iter().any(|&v| v < 0.0));
    }

    #[test]
    fn finite_differences_are_second_order() {
        let s = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let power = NonlinearityModel::power(4.0, 1.0).unwrap();
        for _ in 0..5 {
            let amp = rng.random_range(0.5..1.5);
            let width = rng.random_range(0.5..1.5);
            let t = rng.random_range(-0.5..0.5);
            let u = bump(s, amp, width);
            let exact = pohozaev_scaled(&s.grid, &s.kernel, &power, &u, t).unwrap();
            let fd = |h: f64| {
                (jtilde(&s.grid, &s.kernel, &power, &u, t + h).unwrap()
                    - jtilde(&s.grid, &s.kernel, &power, &u, t - h).unwrap())
                    / (2.0 * h)
            };
            let e1 = (fd(0.02) - exact).abs();
            let e2 = (fd(0.01) - exact).abs();
            let ratio = e1 / e2;
            assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
        }
    }

    #[test]
    fn projection_lands_on_manifold() {
        let s = setup();
        let u = bump(s, 0.9, 1.1);
        let st = project_pohozaev(&s.grid, &s.kernel, &s.model, &u, (-1.0, 1.0)).unwrap();
        let p = pohozaev_scaled(&s.grid, &s.kernel, &s.model, &u, st).unwrap();
        let q = grad_norm_sq(&s.grid, &u).unwrap();
        assert!(p.abs() < 1e-10 * (2.0 * st).exp() * q);
    }

    #[test]
    fn group_law_shifts_the_root() {
        // s*(H(u,σ)) = s*(u) - σ where H is applied exactly: take u with
        // closed-form profile so H(u,σ) can be sampled without interpolation.
        let s = setup();
        let prof = |r: f64| (-(r / 0.9).powi(2)).exp();
        let u = RadialField::from_fn(&s.grid, prof).unwrap();
        let st = project_pohozaev(&s.grid, &s.kernel, &s.model, &u, (-1.0, 1.0)).unwrap();
        for sig in [-0.3f64, 0.25] {
            let h = RadialField::from_fn(&s.grid, |r| sig.exp() * prof(sig.exp() * r)).unwrap();
            let sh = project_pohozaev(&s.grid, &s.kernel, &s.model, &h, (-1.0, 1.0)).unwrap();
            // Discretization breaks exact dilation symmetry; the shift holds
            // to grid accuracy.
            assert!(
                (sh - (st - sig)).abs() < 2e-2,
                "σ={sig}: {sh} vs {}",
                st - sig
            );
        }
        let on = RadialField::from_fn(&s.grid, |r| st.exp() * prof(st.exp() * r)).unwrap();
        let s0 = project_pohozaev(&s.grid, &s.kernel, &s.model, &on, (-1.0, 1.0)).unwrap();
        assert!(s0.abs() < 2e-2, "{s0}");
    }

    #[test]
    fn scan_of_random_bump_changes_sign_once() {
        let s = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let amp = rng.random_range(0.3..2.0);
            let width = rng.random_range(0.3..2.0);
            let u = bump(s, amp, width);
            let svals: Vec<f64> = (0..81).map(|k| -6.0 + 12.0 * k as f64 / 80.0).collect();
            let scan = fiber_scan(&s.grid, &s.kernel, &s.model, &u, &svals).unwrap();
            let signs = scan
                .pohozaev_values
                .windows(2)
                .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
                .count();
            assert_eq!(signs, 1);
            assert!(scan.root.is_some());
            // ψ_u nondecreasing along the scan.
            let mut prev = f64::NEG_INFINITY;
            for &t in &svals {
                if let Ok(p) = psi(&s.grid, &s.kernel, &s.model, &u, t) {
                    assert!(
                        p >= prev - 1e-10 * p.abs(),
                        "s={t} amp={amp} w={width} {prev} -> {p}"
                    );
                    prev = p;
                }
            }
        }
    }

    #[test]
    fn scale_field_properties() {
        let g = make_grid(512, 12.0, GridScheme::UniformMidpoint).unwrap();
        let u = RadialField::from_fn(&g, |r| (-r * r).exp()).unwrap();
        let same = scale_field(&g, &u, 0.0).unwrap();
        assert_eq!(same.values(), u.values());
        let q = grad_norm_sq(&g, &u).unwrap();
        for t in [-0.5, 0.4] {
            let h = scale_field(&g, &u, t).unwrap();
            assert!((l2_norm(&h) - l2_norm(&u)).abs() < 1e-3);
            let qh = grad_norm_sq(&g, &h).unwrap();
            assert!((qh.sqrt() - t.exp() * q.sqrt()).abs() < 1e-2 * q.sqrt());
        }
        let a = scale_field(&g, &scale_field(&g, &u, 0.3).unwrap(), -0.1).unwrap();
        let b = scale_field(&g, &u, 0.2).unwrap();
        let diff = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-3, "{diff}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn projection_is_unique_maximum(amp in 0.3f64..2.0, width in 0.4f64..2.0) {
            let s = setup();
            let u = bump(s, amp, width);
            let st = project_pohozaev(&s.grid, &s.kernel, &s.model, &u, (-1.0, 1.0)).unwrap();
            let jmax = jtilde(&s.grid, &s.kernel, &s.model, &u, st).unwrap();
            for d in [-0.5, -0.05, 0.05, 0.5] {
                if let Ok(j) = jtilde(&s.grid, &s.kernel, &s.model, &u, st + d) {
                    prop_assert!(j <= jmax);
                }
            }
        }
    }
}
