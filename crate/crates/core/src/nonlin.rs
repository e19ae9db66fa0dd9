//! Nonlinearities `f`, their primitives `F` and `F̃(t) = f(t)t - (2+α)/2 F(t)`.
//!
//! Three families are supported:
//! - exponential-critical: `f(s) = s^{σ-1}` below the matching point `s₀`
//!   and `β₀(γ₀s² - 1)e^{γ₀s²}/(γ₀s³)` above it;
//! - pure power `F(t) = t^p / p`;
//! - exponential-power: `F(s) = s^p` below `s₀` and `B e^{γ₀s²}/s^q` above.
//!
//! Everything vanishes for `t ≤ 0`. Whenever `γ₀t² > 700` the value is
//! replaced by an [`Eval::Overflow`] sentinel carrying `ln F(t)`.

use crate::error::{invalid, ChoquardError, Result};
use serde::{Deserialize, Serialize};

/// Largest exponent `γ₀t²` evaluated directly.
pub const EXP_GUARD: f64 = 700.0;
/// Default relative tolerance of the assumption audit.
pub const DEFAULT_AUDIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum ModelKind {
    ExpCritical {
        sigma: f64,
        gamma0: f64,
        beta0: f64,
        s0: f64,
    },
    Power {
        p: f64,
    },
    ExpPower {
        p: f64,
        q: f64,
        gamma0: f64,
        s0: f64,
        /// Prefactor making `F` continuous at `s₀`.
        b: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityModel {
    alpha: f64,
    #[serde(flatten)]
    kind: ModelKind,
}

/// `(f, F, F̃)` at one amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinValue {
    pub f: f64,
    pub big_f: f64,
    pub f_tilde: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eval {
    Value(NonlinValue),
    /// `γ₀t² > 700`; `log_big_f` is `ln F(t)`.
    Overflow {
        log_big_f: f64,
    },
}

impl Eval {
    pub fn value(self) -> Option<NonlinValue> {
        match self {
            Eval::Value(v) => Some(v),
            Eval::Overflow { .. } => None,
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    crate::riesz::check_alpha(alpha)
}

/// `ln` of the defining-equation ratio `s^{σ-1} / [β₀(γ₀s²-1)e^{γ₀s²}/(γ₀s³)]`;
/// positive just above `1/√γ₀`, negative for large `s`.
fn matching_gap(s: f64, sigma: f64, gamma0: f64, beta0: f64) -> f64 {
    let g = gamma0 * s * s;
    (sigma - 1.0) * s.ln() - (beta0.ln() + (g - 1.0).ln() + g - gamma0.ln() - 3.0 * s.ln())
}

/// Matching point `s₀` where both branches of the exponential-critical `f`
/// agree. If several crossings exist, the largest one is returned.
pub fn solve_matching(sigma: f64, gamma0: f64, beta0: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(sigma > 2.0 + alpha && sigma < 6.0) {
        return invalid(format!(
            "sigma must lie in (2+alpha, 6) = ({}, 6), got {sigma}",
            2.0 + alpha
        ));
    }
    solve_matching_raw(sigma, gamma0, beta0)
}

fn solve_matching_raw(sigma: f64, gamma0: f64, beta0: f64) -> Result<f64> {
    check_positive("gamma0", gamma0)?;
    check_positive("beta0", beta0)?;
    check_positive("sigma", sigma)?;
    let lo = 1.0 / gamma0.sqrt();
    let h = |s: f64| matching_gap(s, sigma, gamma0, beta0);
    let mut hi = 10.0 * lo;
    while h(hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(ChoquardError::NoMatchingPoint(format!(
                "no sign change of the matching equation up to s = 1e6 (sigma={sigma}, gamma0={gamma0}, beta0={beta0})"
            )));
        }
    }
    // Scan for the last sign change, then bisect inside it.
    let m = 4000;
    let nodes: Vec<f64> = (0..=m)
        .map(|k| lo * (hi / lo).powf(k as f64 / m as f64))
        .collect();
    let mut bracket = None;
    for w in nodes.windows(2).rev() {
        let (a, b) = (w[0].max(lo * (1.0 + 1e-12)), w[1]);
        if h(a) > 0.0 && h(b) <= 0.0 {
            bracket = Some((a, b));
            break;
        }
    }
    let (mut a, mut b) = bracket.ok_or_else(|| {
        ChoquardError::NoMatchingPoint("matching equation has no sign change in the bracket".into())
    })?;
    while b - a > 1e-13 * b {
        let mid = 0.5 * (a + b);
        if h(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

impl NonlinearityModel {
    /// Exponential-critical family with `σ ∈ (2+α, 6)`.
    pub fn exp_critical(sigma: f64, gamma0: f64, beta0: f64, alpha: f64) -> Result<Self> {
        let s0 = solve_matching(sigma, gamma0, beta0, alpha)?;
        Ok(Self {
            alpha,
            kind: ModelKind::ExpCritical {
                sigma,
                gamma0,
                beta0,
                s0,
            },
        })
    }

    /// Exponential-critical family without the range check on `σ`, for
    /// auditing deliberately broken parameters.
    pub fn exp_critical_unchecked(sigma: f64, gamma0: f64, beta0: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let s0 = solve_matching_raw(sigma, gamma0, beta0)?;
        Ok(Self {
            alpha,
            kind: ModelKind::ExpCritical {
                sigma,
                gamma0,
                beta0,
                s0,
            },
        })
    }

    /// `F(t) = t^p / p` with `p > 2 + α/2`.
    pub fn power(p: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(p > 2.0 + 0.5 * alpha && p.is_finite()) {
            return invalid(format!(
                "p must exceed 2+alpha/2 = {}, got {p}",
                2.0 + 0.5 * alpha
            ));
        }
        Ok(Self {
            alpha,
            kind: ModelKind::Power { p },
        })
    }

    /// `F(s) = s^p` for `s < s₀`, `B e^{γ₀s²}/s^q` for `s ≥ s₀`.
    pub fn exp_power(p: f64, q: f64, gamma0: f64, s0: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_positive("gamma0", gamma0)?;
        if !(p > 2.0 + 0.5 * alpha && p.is_finite()) {
            return invalid(format!(
                "p must exceed 2+alpha/2 = {}, got {p}",
                2.0 + 0.5 * alpha
            ));
        }
        if !(q <= 2.0 && q.is_finite()) {
            return invalid(format!("q must be at most 2, got {q}"));
        }
        let min_s0 = ((p + q).max(0.0) / (2.0 * gamma0)).sqrt();
        if !(s0 > min_s0 && s0.is_finite()) {
            return invalid(format!("s0 must exceed {min_s0}, got {s0}"));
        }
        if gamma0 * s0 * s0 > EXP_GUARD {
            return invalid(format!("s0 = {s0} is beyond the exponential guard"));
        }
        let b = s0.powf(p + q) * (-gamma0 * s0 * s0).exp();
        Ok(Self {
            alpha,
            kind: ModelKind::ExpPower {
                p,
                q,
                gamma0,
                s0,
                b,
            },
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Ambrosetti–Rabinowitz exponent: `σ` or `p`.
    pub fn mu(&self) -> f64 {
        match self.kind {
            ModelKind::ExpCritical { sigma, .. } => sigma,
            ModelKind::Power { p } | ModelKind::ExpPower { p, .. } => p,
        }
    }

    /// Critical exponent `γ₀`, absent for the power family.
    pub fn gamma0(&self) -> Option<f64> {
        match self.kind {
            ModelKind::ExpCritical { gamma0, .. } | ModelKind::ExpPower { gamma0, .. } => {
                Some(gamma0)
            }
            ModelKind::Power { .. } => None,
        }
    }

    /// Lower bound `β₀` of `t f(t) e^{-γ₀t²}` at infinity. For the
    /// exponential-power family the limit is `2γ₀B` when `q = 2` and `+∞`
    /// otherwise; `2γ₀B` is reported in both cases.
    pub fn beta0(&self) -> Option<f64> {
        match self.kind {
            ModelKind::ExpCritical { beta0, .. } => Some(beta0),
            ModelKind::ExpPower { gamma0, b, .. } => Some(2.0 * gamma0 * b),
            ModelKind::Power { .. } => None,
        }
    }

    /// Matching point, if the family has one.
    pub fn s0(&self) -> Option<f64> {
        match self.kind {
            ModelKind::ExpCritical { s0, .. } | ModelKind::ExpPower { s0, .. } => Some(s0),
            ModelKind::Power { .. } => None,
        }
    }

    /// Largest amplitude evaluated without the overflow sentinel.
    pub fn t_guard(&self) -> f64 {
        match self.gamma0() {
            Some(g) => (EXP_GUARD / g).sqrt(),
            None => f64::INFINITY,
        }
    }

    fn tilde(&self, t: f64, f: f64, big_f: f64) -> NonlinValue {
        NonlinValue {
            f,
            big_f,
            f_tilde: f * t - 0.5 * (2.0 + self.alpha) * big_f,
        }
    }

    pub fn eval(&self, t: f64) -> Eval {
        if t <= 0.0 || t.is_nan() {
            return Eval::Value(NonlinValue {
                f: 0.0,
                big_f: 0.0,
                f_tilde: 0.0,
            });
        }
        match self.kind {
            ModelKind::Power { p } => {
                let f = t.powf(p - 1.0);
                Eval::Value(self.tilde(t, f, f * t / p))
            }
            ModelKind::ExpCritical {
                sigma,
                gamma0,
                beta0,
                s0,
            } => {
                if t < s0 {
                    let f = t.powf(sigma - 1.0);
                    return Eval::Value(self.tilde(t, f, f * t / sigma));
                }
                let g = gamma0 * t * t;
                if g > EXP_GUARD {
                    return Eval::Overflow {
                        log_big_f: g + (beta0 / (2.0 * g)).ln(),
                    };
                }
                let e = g.exp();
                let f = beta0 * (g - 1.0) * e / (gamma0 * t * t * t);
                let g0 = gamma0 * s0 * s0;
                let big_f = s0.powf(sigma) / sigma
                    + beta0 / (2.0 * gamma0) * (e / (t * t) - g0.exp() / (s0 * s0));
                Eval::Value(self.tilde(t, f, big_f))
            }
            ModelKind::ExpPower {
                p,
                q,
                gamma0,
                s0,
                b,
            } => {
                if t < s0 {
                    let big_f = t.powf(p);
                    return Eval::Value(self.tilde(t, p * big_f / t, big_f));
                }
                let g = gamma0 * t * t;
                if g > EXP_GUARD {
                    return Eval::Overflow {
                        log_big_f: b.ln() + g - q * t.ln(),
                    };
                }
                let big_f = b * g.exp() * t.powf(-q);
                let f = big_f * (2.0 * gamma0 * t - q / t);
                Eval::Value(self.tilde(t, f, big_f))
            }
        }
    }

    /// `f'(t)` (one-sided from above at the matching point); `None` past the
    /// overflow guard.
    pub fn f_prime(&self, t: f64) -> Option<f64> {
        if t <= 0.0 {
            return Some(0.0);
        }
        match self.kind {
            ModelKind::Power { p } => Some((p - 1.0) * t.powf(p - 2.0)),
            ModelKind::ExpCritical {
                sigma,
                gamma0,
                beta0,
                s0,
            } => {
                if t < s0 {
                    return Some((sigma - 1.0) * t.powf(sigma - 2.0));
                }
                let g = gamma0 * t * t;
                if g > EXP_GUARD {
                    return None;
                }
                Some(beta0 * g.exp() / (gamma0 * t.powi(4)) * (2.0 * g * g - 3.0 * g + 3.0))
            }
            ModelKind::ExpPower {
                p,
                q,
                gamma0,
                s0,
                b,
            } => {
                if t < s0 {
                    return Some(p * (p - 1.0) * t.powf(p - 2.0));
                }
                let g = gamma0 * t * t;
                if g > EXP_GUARD {
                    return None;
                }
                let big_f = b * g.exp() * t.powf(-q);
                let k = 2.0 * gamma0 * t - q / t;
                Some(big_f * (k * k + 2.0 * gamma0 + q / (t * t)))
            }
        }
    }

    /// `(f, F, F̃)` at every node, or the first node hitting the guard.
    pub(crate) fn eval_all(&self, u: &[f64]) -> Result<Vec<NonlinValue>> {
        u.iter()
            .enumerate()
            .map(|(node, &t)| {
                self.eval(t)
                    .value()
                    .ok_or(ChoquardError::EnergyOverflow { node, amplitude: t })
            })
            .collect()
    }
}

/// `(f(t), F(t), F̃(t))`, or the overflow sentinel.
pub fn evaluate(model: &NonlinearityModel, t: f64) -> Eval {
    model.eval(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub status: CheckStatus,
    /// The sampled quantity the verdict rests on.
    pub witness: Option<f64>,
    pub witness_t: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub tol: f64,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// No check failed (not-applicable checks are neutral).
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .map(|c| c.name.as_str())
            .collect()
    }
}

fn check(
    name: &str,
    pass: bool,
    witness: Option<f64>,
    witness_t: Option<f64>,
    detail: String,
) -> AssumptionCheck {
    AssumptionCheck {
        name: name.into(),
        status: if pass {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        witness,
        witness_t,
        detail,
    }
}

fn not_applicable(name: &str, detail: &str) -> AssumptionCheck {
    AssumptionCheck {
        name: name.into(),
        status: CheckStatus::NotApplicable,
        witness: None,
        witness_t: None,
        detail: detail.into(),
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect()
}

/// Default audit samples: log-spaced on `[1e-8, s₀)` and `(s₀, t_max]`,
/// where `t_max` sits just inside the overflow guard (or at 50 for the
/// power family).
pub fn default_sample_grids(model: &NonlinearityModel) -> (Vec<f64>, Vec<f64>) {
    let split = model.s0().unwrap_or(1.0);
    let t_max = match model.gamma0() {
        Some(_) => model.t_guard() * (1.0 - 1e-9),
        None => 50.0,
    };
    let small = log_grid(1e-8, split * (1.0 - 1e-9), 600);
    let large = log_grid(split, t_max, 600);
    (small, large)
}

/// Richardson limit of `v(t)` assuming `v = L + c/t² + …`.
fn limit_in_inverse_square(t1: f64, v1: f64, t2: f64, v2: f64) -> f64 {
    (v2 * t2 * t2 - v1 * t1 * t1) / (t2 * t2 - t1 * t1)
}

/// Sampled audit of the structural assumptions on `f`. `t_small` should
/// resolve the behavior near 0 and `t_large` the growth up to the guard.
pub fn check_assumptions(
    model: &NonlinearityModel,
    t_small: &[f64],
    t_large: &[f64],
    tol: f64,
) -> Result<AssumptionReport> {
    for (name, grid) in [("t_small", t_small), ("t_large", t_large)] {
        if grid.len() < 3 {
            return invalid(format!("{name} needs at least 3 samples"));
        }
        if !grid.windows(2).all(|w| w[0] < w[1]) || grid[0] <= 0.0 {
            return invalid(format!("{name} must be positive and strictly increasing"));
        }
    }
    if !(tol > 0.0 && tol < 1.0) {
        return invalid(format!("tolerance must lie in (0,1), got {tol}"));
    }
    let alpha = model.alpha();
    let mut all: Vec<f64> = t_small.iter().chain(t_large).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let vals: Vec<(f64, NonlinValue)> = all
        .iter()
        .filter_map(|&t| model.eval(t).value().map(|v| (t, v)))
        .collect();
    let large: Vec<(f64, NonlinValue)> = t_large
        .iter()
        .filter_map(|&t| model.eval(t).value().map(|v| (t, v)))
        .collect();
    if large.len() < 3 {
        return invalid("t_large has fewer than 3 samples below the overflow guard");
    }
    let mut checks = Vec::new();

    // (f0): vanishing on t ≤ 0, nonnegative, continuous across s₀.
    {
        let neg_ok = [-2.0, -1.0, -1e-3, 0.0].iter().all(|&t| {
            model
                .eval(t)
                .value()
                .is_some_and(|v| v.f == 0.0 && v.big_f == 0.0)
        });
        let nonneg = vals.iter().all(|(_, v)| v.f >= 0.0 && v.big_f >= 0.0);
        let jump = model.s0().map(|s0| {
            let below = model
                .eval(s0 * (1.0 - 1e-12))
                .value()
                .map(|v| v.f)
                .unwrap_or(0.0);
            let above = model.eval(s0).value().map(|v| v.f).unwrap_or(0.0);
            (above - below).abs() / above.abs().max(1e-300)
        });
        let cont = match model.kind() {
            ModelKind::ExpCritical { .. } => jump.unwrap_or(0.0) < 1e-9,
            _ => true,
        };
        checks.push(check(
            "f0",
            neg_ok && nonneg && cont,
            jump,
            model.s0(),
            format!("vanishes on t<=0: {neg_ok}; nonnegative: {nonneg}; relative jump of f at s0: {jump:?}"),
        ));
    }

    // (f1): f(t)/t^{1+α/2} decreases to 0 as t → 0⁺.
    {
        let ratio: Vec<f64> = t_small
            .iter()
            .map(|&t| {
                model
                    .eval(t)
                    .value()
                    .map_or(f64::INFINITY, |v| v.f / t.powf(1.0 + 0.5 * alpha))
            })
            .collect();
        let k = ratio.len().min(t_small.len() / 2 + 1);
        let monotone = ratio[..k].windows(2).all(|w| w[0] <= w[1]);
        let first = ratio[0];
        checks.push(check(
            "f1",
            monotone && first < tol,
            Some(first),
            Some(t_small[0]),
            format!("f/t^(1+alpha/2) at the smallest sample is {first:.3e}; increasing over the lower half: {monotone}"),
        ));
    }

    // (f2): exact exponential rate γ₀, i.e. d ln f / d(t²) → γ₀.
    match model.gamma0() {
        None => checks.push(not_applicable(
            "f2",
            "no exponential growth in the power family",
        )),
        Some(g0) => {
            let n = large.len();
            let (t1, v1) = large[n - 2];
            let (t2, v2) = large[n - 1];
            let slope = (v2.f.ln() - v1.f.ln()) / (t2 * t2 - t1 * t1);
            checks.push(check(
                "f2",
                (slope - g0).abs() <= 0.02 * g0,
                Some(slope),
                Some(t2),
                format!(
                    "d ln f / d(t^2) at the largest samples is {slope:.6} against gamma0 = {g0}"
                ),
            ));
        }
    }

    // (f3): μ > 2+α/2 and μF ≤ ft, sampled. The witness is
    // f t - (2+α/2) F at the sample where f t / F is smallest.
    {
        let mu = model.mu();
        let threshold = 2.0 + 0.5 * alpha;
        let mut worst = (f64::INFINITY, 0.0, 0.0);
        let mut ar_ok = true;
        for (t, v) in &vals {
            if v.big_f <= 0.0 {
                continue;
            }
            let ratio = v.f * t / v.big_f;
            if ratio < worst.0 {
                worst = (ratio, *t, v.f * t - threshold * v.big_f);
            }
            if mu * v.big_f > v.f * t * (1.0 + tol) {
                ar_ok = false;
            }
        }
        let pass = mu > threshold && worst.0 > threshold && ar_ok;
        checks.push(check(
            "f3",
            pass,
            Some(worst.2),
            Some(worst.1),
            format!(
                "mu = {mu}, min f t / F = {:.6} (threshold {threshold}); mu F <= f t on samples: {ar_ok}",
                worst.0
            ),
        ));
    }

    // (f4): F/(f t) → 0.
    {
        let n = large.len();
        let r = |k: usize| {
            let (t, v) = large[k];
            v.big_f / (v.f * t)
        };
        let tail: Vec<f64> = (n.saturating_sub(10)..n).map(r).collect();
        let decreasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + tol));
        let last = *tail.last().expect("nonempty");
        checks.push(check(
            "f4",
            last < 0.05 && decreasing,
            Some(last),
            Some(large[n - 1].0),
            format!("F/(f t) at the largest sample is {last:.3e}; decreasing over the last samples: {decreasing}"),
        ));
    }

    // (f5) and its consequence: limits extrapolated from the two largest
    // samples, assuming O(1/t²) corrections.
    match (model.gamma0(), model.beta0()) {
        (Some(g0), Some(b0)) => {
            let n = large.len();
            let (t1, v1) = large[n - 2];
            let (t2, v2) = large[n - 1];
            let scaled = |t: f64, x: f64| x * (-g0 * t * t).exp();
            let lim5 =
                limit_in_inverse_square(t1, scaled(t1, t1 * v1.f), t2, scaled(t2, t2 * v2.f));
            checks.push(check(
                "f5",
                lim5 >= b0 * (1.0 - tol),
                Some(lim5),
                Some(t2),
                format!("extrapolated lim t f / e^(gamma0 t^2) = {lim5:.9} against beta0 = {b0}"),
            ));
            let limr = limit_in_inverse_square(
                t1,
                scaled(t1, v1.big_f * t1 * t1),
                t2,
                scaled(t2, v2.big_f * t2 * t2),
            );
            let want = b0 / (2.0 * g0);
            checks.push(check(
                "F_Ruf",
                limr >= want * (1.0 - tol),
                Some(limr),
                Some(t2),
                format!("extrapolated lim F t^2 / e^(gamma0 t^2) = {limr:.9} against beta0/(2 gamma0) = {want}"),
            ));
        }
        _ => {
            checks.push(not_applicable(
                "f5",
                "no exponential growth in the power family",
            ));
            checks.push(not_applicable(
                "F_Ruf",
                "no exponential growth in the power family",
            ));
        }
    }

    // (f6): F̃ nondecreasing.
    {
        let mut worst: Option<(f64, f64)> = None;
        for w in vals.windows(2) {
            let (a, b) = (w[0].1.f_tilde, w[1].1.f_tilde);
            let drop = a - b;
            if drop > tol * a.abs().max(b.abs()) && worst.is_none_or(|(d, _)| drop > d) {
                worst = Some((drop, w[1].0));
            }
        }
        checks.push(check(
            "f6",
            worst.is_none(),
            worst.map(|w| -w.0),
            worst.map(|w| w.1),
            match worst {
                None => "F-tilde nondecreasing across all samples".into(),
                Some((d, t)) => format!("F-tilde drops by {d:.3e} at t = {t}"),
            },
        ));
    }

    Ok(AssumptionReport { tol, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> NonlinearityModel {
        NonlinearityModel::exp_critical(4.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn matching_point_of_reference_model() {
        let s0 = solve_matching(4.0, 1.0, 1.0, 1.0).unwrap();
        assert!(s0 > 1.0);
        let res = (s0.powi(3) - (s0 * s0 - 1.0) * (s0 * s0).exp() / s0.powi(3)).abs();
        assert!(res < 1e-10, "residual {res}");
        // Independent bracket from the defining equation s⁶ = (s²-1)e^{s²}.
        assert!(s0 * s0 > 2.1 && s0 * s0 < 2.2);
    }

    #[test]
    fn doubling_beta0_flips_residual_sign() {
        let s0 = solve_matching(4.0, 1.0, 1.0, 1.0).unwrap();
        let rhs = |b: f64| b * (s0 * s0 - 1.0) * (s0 * s0).exp() / s0.powi(3);
        let lhs = s0.powi(3);
        assert!(lhs - rhs(2.0) < 0.0);
        assert!(rhs(2.0) > rhs(1.0));
    }

    #[test]
    fn matching_rejects_bad_sigma() {
        assert!(solve_matching(3.0, 1.0, 1.0, 1.0).is_err());
        assert!(solve_matching(6.0, 1.0, 1.0, 1.0).is_err());
        assert!(solve_matching(4.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn negative_amplitudes_vanish() {
        for m in [reference(), NonlinearityModel::power(4.0, 1.0).unwrap()] {
            let v = m.eval(-1.0).value().unwrap();
            assert_eq!((v.f, v.big_f, v.f_tilde), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn power_law_algebra() {
        for p in [3.0, 4.0, 5.5] {
            let m = NonlinearityModel::power(p, 1.0).unwrap();
            let v = m.eval(2.0).value().unwrap();
            let close = |a: f64, b: f64| (a - b).abs() < 1e-12 * b.abs();
            assert!(close(v.f, 2f64.powf(p - 1.0)));
            assert!(close(v.big_f, 2f64.powf(p) / p));
            assert!(close(v.f_tilde, 2f64.powf(p) * (1.0 - 3.0 / (2.0 * p))));
        }
    }

    #[test]
    fn first_branch_primitive_below_matching_point() {
        let m = reference();
        let t = m.s0().unwrap() * (1.0 - 1e-6);
        let v = m.eval(t).value().unwrap();
        assert!((v.big_f - t.powi(4) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn f_is_continuous_at_matching_point() {
        let m = reference();
        let s0 = m.s0().unwrap();
        let below = s0.powi(3);
        let above = m.eval(s0).value().unwrap().f;
        assert!((below - above).abs() < 1e-10 * above);
        let fb = m.eval(s0 * (1.0 - 1e-14)).value().unwrap().big_f;
        let fa = m.eval(s0).value().unwrap().big_f;
        assert!((fa - fb).abs() < 1e-10 * fa);
    }

    #[test]
    fn overflow_sentinel_past_guard() {
        let m = reference();
        match m.eval(27.0) {
            Eval::Overflow { log_big_f } => assert!(log_big_f > 700.0),
            other => panic!("expected overflow, got {other:?}"),
        }
        assert!(m.eval(26.4).value().is_some());
        assert!(matches!(
            m.eval_all(&[1.0, 30.0]),
            Err(ChoquardError::EnergyOverflow { node: 1, .. })
        ));
    }

    fn fd_check(m: &NonlinearityModel, lo: f64, hi: f64) {
        // Centered differences of F converge to f at second order.
        for k in 0..20 {
            let t = lo + (hi - lo) * (k as f64 + 0.5) / 20.0;
            let err = |h: f64| {
                let fp = m.eval(t + h).value().unwrap().big_f;
                let fm = m.eval(t - h).value().unwrap().big_f;
                ((fp - fm) / (2.0 * h) - m.eval(t).value().unwrap().f).abs()
            };
            let (e1, e2) = (err(1e-3 * t), err(5e-4 * t));
            let scale = m.eval(t).value().unwrap().f;
            assert!(e1 < 1e-3 * scale, "t={t}: {e1}");
            if e1 > 1e-9 * scale {
                let ratio = e1 / e2;
                assert!(ratio > 3.5 && ratio < 4.5, "t={t}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn primitive_matches_f_on_smooth_ranges() {
        let m = reference();
        let s0 = m.s0().unwrap();
        fd_check(&m, 0.1, 0.95 * s0);
        fd_check(&m, 1.05 * s0, 5.0);
        fd_check(&NonlinearityModel::power(4.0, 1.0).unwrap(), 0.1, 5.0);
        let ep = NonlinearityModel::exp_power(3.0, 1.0, 1.0, 1.6, 1.0).unwrap();
        fd_check(&ep, 0.1, 1.5);
        fd_check(&ep, 1.7, 4.0);
    }

    #[test]
    fn derivative_matches_differences() {
        let models = [
            reference(),
            NonlinearityModel::power(4.0, 1.0).unwrap(),
            NonlinearityModel::exp_power(3.0, 1.0, 1.0, 1.6, 1.0).unwrap(),
        ];
        for m in &models {
            let s0 = m.s0().unwrap_or(10.0);
            for &t in &[0.3, 0.9, 0.97 * s0, 1.03 * s0, 2.5, 4.0] {
                let h = 1e-6 * t;
                let fd = (m.eval(t + h).value().unwrap().f - m.eval(t - h).value().unwrap().f)
                    / (2.0 * h);
                let d = m.f_prime(t).unwrap();
                assert!(
                    (fd - d).abs() < 1e-6 * d.abs().max(1.0),
                    "{m:?} t={t}: {fd} vs {d}"
                );
            }
        }
    }

    #[test]
    fn reference_model_passes_audit() {
        let m = reference();
        let (small, large) = default_sample_grids(&m);
        let rep = check_assumptions(&m, &small, &large, DEFAULT_AUDIT_TOL).unwrap();
        for c in &rep.checks {
            assert_eq!(c.status, CheckStatus::Pass, "{c:?}");
        }
    }

    #[test]
    fn power_model_audit() {
        let m = NonlinearityModel::power(4.0, 1.0).unwrap();
        let (small, large) = default_sample_grids(&m);
        let rep = check_assumptions(&m, &small, &large, DEFAULT_AUDIT_TOL).unwrap();
        for name in ["f1", "f3", "f6"] {
            assert_eq!(rep.get(name).unwrap().status, CheckStatus::Pass, "{name}");
        }
        for name in ["f2", "f5", "F_Ruf"] {
            assert_eq!(
                rep.get(name).unwrap().status,
                CheckStatus::NotApplicable,
                "{name}"
            );
        }
        // F/(f t) = 1/p never tends to 0.
        assert_eq!(rep.get("f4").unwrap().status, CheckStatus::Fail);
    }

    #[test]
    fn broken_sigma_fails_ar_condition() {
        let m = NonlinearityModel::exp_critical_unchecked(2.0, 1.0, 1.0, 1.0).unwrap();
        let (small, large) = default_sample_grids(&m);
        let rep = check_assumptions(&m, &small, &large, DEFAULT_AUDIT_TOL).unwrap();
        let f3 = rep.get("f3").unwrap();
        assert_eq!(f3.status, CheckStatus::Fail);
        assert!(f3.witness.unwrap() < 0.0);
        // f t - (2+α/2) F at t = 1 is 1 - 2.5/2.
        let v = m.eval(1.0).value().unwrap();
        assert!((v.f - 2.5 * v.big_f + 0.25).abs() < 1e-12);
    }

    #[test]
    fn exp_power_audit_passes() {
        let m = NonlinearityModel::exp_power(3.0, 1.0, 1.0, 1.6, 1.0).unwrap();
        let (small, large) = default_sample_grids(&m);
        let rep = check_assumptions(&m, &small, &large, DEFAULT_AUDIT_TOL).unwrap();
        for name in ["f0", "f3", "f4", "f6"] {
            assert_eq!(
                rep.get(name).unwrap().status,
                CheckStatus::Pass,
                "{name}: {:?}",
                rep.get(name)
            );
        }
    }

    #[test]
    fn unsorted_samples_rejected() {
        let m = reference();
        assert!(check_assumptions(&m, &[0.1, 0.05, 0.2], &[2.0, 3.0, 4.0], 1e-6).is_err());
    }

    #[test]
    fn exp_power_parameter_checks() {
        assert!(NonlinearityModel::exp_power(3.0, 2.5, 1.0, 2.0, 1.0).is_err());
        assert!(NonlinearityModel::exp_power(3.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(NonlinearityModel::exp_power(2.2, 1.0, 1.0, 2.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn primitive_nonneg_and_ar_holds(t in -3.0f64..20.0) {
            let m = reference();
            if let Some(v) = m.eval(t).value() {
                prop_assert!(v.big_f >= 0.0 && v.f >= 0.0);
                if t <= 0.0 { prop_assert!(v.big_f == 0.0); }
                prop_assert!(m.mu() * v.big_f <= v.f * t.max(0.0) * (1.0 + 1e-12) + 1e-300);
            }
        }

        #[test]
        fn f_tilde_nondecreasing(a in 0.01f64..20.0, b in 0.01f64..20.0) {
            let m = reference();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if let (Some(x), Some(y)) = (m.eval(lo).value(), m.eval(hi).value()) {
                prop_assert!(y.f_tilde >= x.f_tilde * (1.0 - 1e-12));
            }
        }
    }
}
