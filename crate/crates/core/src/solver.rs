//! Normalized ground states by minimizing the reduced functional
//! `E(v) = max_s J̃(v,s)` over the radial mass sphere.
//!
//! Descent runs on `E` with an `H¹`-preconditioned tangential gradient and
//! Armijo backtracking. Once the gradient is small the discrete
//! Euler–Lagrange system with the mass constraint is finished by Newton's
//! method on `(u, λ)`.

use crate::energy::{
    breakdown, check_inputs, nonlocal_terms, residual_from_terms, EnergyBreakdown,
};
use crate::error::{invalid, ChoquardError, Result};
use crate::fiber::{fiber_point, project_pohozaev, scale_field};
use crate::grid::{rescale_mass, RadialField, RadialGrid};
use crate::moser::mp_upper_bound;
use crate::nonlin::{ModelKind, NonlinearityModel};
use crate::riesz::RieszKernelMatrix;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

const LAMBDA_FLOOR: f64 = 1e-2;
const MAX_BACKTRACKS: usize = 40;
const NEWTON_TARGET: f64 = 1e-13;
const STALL_REL: f64 = 1e-12;
const STALL_ITERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Gaussian,
    Tent,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Gaussian => "gaussian",
            Profile::Tent => "tent",
        }
    }
}

impl FromStr for Profile {
    type Err = ChoquardError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Profile::Gaussian),
            "tent" => Ok(Profile::Tent),
            _ => invalid(format!("unknown profile '{s}' (expected gaussian or tent)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    #[serde(rename = "mass")]
    pub a: f64,
    /// Initial and largest descent step.
    pub step: f64,
    pub tol_grad: f64,
    pub tol_pohozaev: f64,
    pub max_iter: usize,
    pub profile: Profile,
    /// Backtracking factor in `(0,1)`.
    pub armijo_shrink: f64,
    /// Sufficient-decrease constant in `(0,1)`.
    pub armijo_c: f64,
    /// Relative gradient below which Newton takes over.
    pub newton_switch: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            step: 1.0,
            tol_grad: 1e-5,
            tol_pohozaev: 1e-4,
            max_iter: 5000,
            profile: Profile::Gaussian,
            armijo_shrink: 0.5,
            armijo_c: 1e-4,
            newton_switch: 1e-3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a", self.a),
            ("step", self.step),
            ("tol_grad", self.tol_grad),
            ("tol_pohozaev", self.tol_pohozaev),
            ("newton_switch", self.newton_switch),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if self.max_iter < 1 {
            return invalid("max_iter must be at least 1");
        }
        for (name, v) in [
            ("armijo_shrink", self.armijo_shrink),
            ("armijo_c", self.armijo_c),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return invalid(format!("{name} must lie in (0,1), got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Descent,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iter: usize,
    pub phase: Phase,
    /// `E(u)` during descent, `J(u)` during Newton.
    pub j: f64,
    /// `|𝒫(u)| / ∥∇u∥²`.
    pub pohozaev_residual: f64,
    /// Relative norm of the tangential gradient.
    pub grad_norm: f64,
    pub lambda: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub field: RadialField,
    /// Equal to `energy.lambda_est`.
    pub lambda: f64,
    /// `(∫(I_α∗F(u))f(u)u - ∥∇u∥²)/a²`.
    pub lambda_mult: f64,
    pub energy: EnergyBreakdown,
    /// Relative Euler–Lagrange residual with `lambda_mult`.
    pub el_residual: f64,
    pub pohozaev_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostic: Option<String>,
    pub history: Vec<HistoryEntry>,
}

impl SolveResult {
    /// CSV with header `iter,phase,J,pohozaev_residual,grad_norm,lambda,step`.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("iter,phase,J,pohozaev_residual,grad_norm,lambda,step\n");
        for h in &self.history {
            let phase = match h.phase {
                Phase::Descent => "descent",
                Phase::Newton => "newton",
            };
            let _ = writeln!(
                out,
                "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                h.iter, phase, h.j, h.pohozaev_residual, h.grad_norm, h.lambda, h.step
            );
        }
        out
    }
}

/// Starting field on the mass sphere.
pub fn initial_guess(grid: &Arc<RadialGrid>, a: f64, profile: Profile) -> Result<RadialField> {
    let r_max = grid.r_max();
    let u = match profile {
        Profile::Gaussian => RadialField::from_fn(grid, |r| (-r * r).exp())?,
        Profile::Tent => RadialField::from_fn(grid, |r| (1.0 - r / r_max).max(0.0))?,
    };
    rescale_mass(&u, a)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn w_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

/// Solve `(σL + μW) x = b` for the tridiagonal stiffness `L`.
fn solve_shifted(grid: &RadialGrid, sigma: f64, mu: f64, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let c = grid.stiffness();
    let w = grid.weights();
    let mut diag: Vec<f64> = (0..n).map(|i| mu * w[i]).collect();
    for (k, ck) in c.iter().enumerate() {
        diag[k] += sigma * ck;
        diag[k + 1] += sigma * ck;
    }
    let off: Vec<f64> = c.iter().map(|ck| -sigma * ck).collect();
    // Thomas algorithm; the matrix is symmetric positive definite.
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = if n > 1 { off[0] / diag[0] } else { 0.0 };
    dp[0] = b[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off[i - 1] * cp[i - 1];
        if i + 1 < n {
            cp[i] = off[i] / m;
        }
        dp[i] = (b[i] - off[i - 1] * dp[i - 1]) / m;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    x
}

struct Problem<'a> {
    grid: &'a RadialGrid,
    kernel: &'a RieszKernelMatrix,
    model: &'a NonlinearityModel,
    a: f64,
}

/// A point on the sphere together with its fiber maximum.
struct Projected {
    u: RadialField,
    s: f64,
    e: f64,
}

impl Problem<'_> {
    fn project(&self, u: RadialField, guess: f64) -> Result<Projected> {
        let s = project_pohozaev(
            self.grid,
            self.kernel,
            self.model,
            &u,
            (guess - 1.0, guess + 1.0),
        )?;
        let p = fiber_point(self.grid, self.kernel, self.model, u.values(), s)?;
        let alpha = self.model.alpha();
        let e = 0.5 * (2.0 * s).exp() * p.grad_sq - 0.5 * (-(2.0 + alpha) * s).exp() * p.n;
        Ok(Projected { u, s, e })
    }

    /// `∂_v J̃(v,s)` as a dual vector.
    fn fiber_gradient(&self, v: &[f64], s: f64) -> Result<Vec<f64>> {
        let es = s.exp();
        let scaled: Vec<f64> = v.iter().map(|x| es * x).collect();
        let terms = nonlocal_terms(self.kernel, self.model, &scaled)?;
        let lv = self.grid.apply_stiffness(v);
        let w = self.grid.weights();
        let e2 = (2.0 * s).exp();
        let en = (-(1.0 + self.model.alpha()) * s).exp();
        Ok((0..v.len())
            .map(|i| e2 * lv[i] - en * w[i] * terms.vals[i].f * terms.kf[i])
            .collect())
    }

    fn pohozaev_residual(&self, e: &EnergyBreakdown) -> f64 {
        let q = e.grad_sq();
        if q == 0.0 {
            f64::INFINITY
        } else {
            e.pohozaev.abs() / q
        }
    }
}

fn positive_part(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.max(0.0)).collect()
}

/// Minimize `E` on the mass sphere and return the candidate ground state.
pub fn minimize_reduced(
    config: &SolverConfig,
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
) -> Result<SolveResult> {
    config.validate()?;
    let grid_arc = Arc::clone(kernel.grid());
    let u0 = initial_guess(&grid_arc, config.a, config.profile)?;
    check_inputs(grid, kernel, model, &u0)?;
    let pb = Problem {
        grid,
        kernel,
        model,
        a: config.a,
    };
    let a2 = config.a * config.a;
    let w = grid.weights();
    let mut history = Vec::new();
    let mut iter = 0usize;
    let mut diagnostic = None;

    let mut cur = pb.project(u0, 0.0)?;
    let mut tau = config.step;
    let mut stalled = 0usize;
    let mut prev_e = f64::INFINITY;
    loop {
        if cur.s != 0.0 {
            let moved = scale_field(grid, &cur.u, cur.s)
                .and_then(|v| {
                    rescale_mass(
                        &RadialField::new(Arc::clone(&grid_arc), positive_part(v.into_values()))?,
                        config.a,
                    )
                })
                .and_then(|v| pb.project(v, 0.0));
            if let Ok(p) = moved {
                cur = p;
            }
        }
        let u = cur.u.values();
        let g = pb.fiber_gradient(u, cur.s)?;
        let lambda = -dot(&g, u) / a2;
        let tangential: Vec<f64> = (0..u.len()).map(|i| g[i] + lambda * w[i] * u[i]).collect();
        let e2 = (2.0 * cur.s).exp();
        let lu = grid.apply_stiffness(u);
        let scale_num: f64 = (0..u.len())
            .map(|i| tangential[i].powi(2) / w[i])
            .sum::<f64>()
            .sqrt();
        let scale_den: f64 = (0..u.len())
            .map(|i| (e2 * lu[i] + lambda * w[i] * u[i]).powi(2) / w[i])
            .sum::<f64>()
            .sqrt();
        let grad_norm = if scale_num == 0.0 {
            0.0
        } else {
            scale_num / scale_den
        };
        let terms = nonlocal_terms(kernel, model, u)?;
        let eb = breakdown(grid, model, u, &terms, config.a);
        history.push(HistoryEntry {
            iter,
            phase: Phase::Descent,
            j: cur.e,
            pohozaev_residual: pb.pohozaev_residual(&eb),
            grad_norm,
            lambda,
            step: tau,
        });
        if cur.e >= prev_e - STALL_REL * prev_e.abs() {
            stalled += 1;
        } else {
            stalled = 0;
        }
        prev_e = cur.e;
        if grad_norm < config.newton_switch || stalled >= STALL_ITERS {
            break;
        }
        if iter >= config.max_iter {
            return finish(
                &pb,
                &grid_arc,
                cur.u,
                iter,
                history,
                config,
                Some("max_iter reached during descent".into()),
            );
        }
        iter += 1;

        let rhs: Vec<f64> = tangential.iter().map(|x| -x).collect();
        let mut d = solve_shifted(grid, e2, lambda.max(LAMBDA_FLOOR), &rhs);
        let along = w_dot(w, &d, u) / a2;
        for (di, ui) in d.iter_mut().zip(u) {
            *di -= along * ui;
        }
        let slope = dot(&tangential, &d);
        if slope >= 0.0 {
            break;
        }
        let mut accepted = None;
        let mut t = tau;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = positive_part(u.iter().zip(&d).map(|(x, y)| x + t * y).collect());
            let candidate = RadialField::new(Arc::clone(&grid_arc), trial)
                .and_then(|v| rescale_mass(&v, config.a))
                .and_then(|v| pb.project(v, cur.s));
            if let Ok(p) = candidate {
                if p.e <= cur.e + config.armijo_c * t * slope {
                    accepted = Some(p);
                    break;
                }
            }
            t *= config.armijo_shrink;
        }
        match accepted {
            Some(p) => {
                cur = p;
                tau = (2.0 * t).min(config.step);
            }
            None => break,
        }
    }

    if let Some(last) = history.last() {
        if last.j <= 0.0 {
            diagnostic = Some("trivial-branch".to_string());
            return finish(&pb, &grid_arc, cur.u, iter, history, config, diagnostic);
        }
    }

    let u = newton(&pb, &grid_arc, cur.u, &mut iter, &mut history, config)?;
    if iter >= config.max_iter && diagnostic.is_none() {
        diagnostic = Some("max_iter reached during Newton".into());
    }
    finish(&pb, &grid_arc, u, iter, history, config, diagnostic)
}

fn newton(
    pb: &Problem<'_>,
    grid_arc: &Arc<RadialGrid>,
    u0: RadialField,
    iter: &mut usize,
    history: &mut Vec<HistoryEntry>,
    config: &SolverConfig,
) -> Result<RadialField> {
    let grid = pb.grid;
    let n = grid.len();
    let w = grid.weights();
    let a2 = pb.a * pb.a;
    let mut u = u0.into_values();

    let residual =
        |u: &[f64], lambda: f64| -> Result<(Vec<f64>, f64, crate::energy::NonlocalTerms)> {
            let terms = nonlocal_terms(pb.kernel, pb.model, u)?;
            let lu = grid.apply_stiffness(u);
            let mut r: Vec<f64> = (0..n)
                .map(|i| lu[i] + lambda * w[i] * u[i] - w[i] * terms.vals[i].f * terms.kf[i])
                .collect();
            r.push(0.5 * (w_dot(w, u, u) - a2));
            let norm = (0..n).map(|i| r[i] * r[i] / w[i]).sum::<f64>() + r[n] * r[n] / a2;
            Ok((r, norm.sqrt(), terms))
        };

    let terms0 = nonlocal_terms(pb.kernel, pb.model, &u)?;
    let eb0 = breakdown(grid, pb.model, &u, &terms0, pb.a);
    let mut lambda = eb0.lambda_multiplier(pb.a);
    let (mut r, mut rnorm, mut terms) = residual(&u, lambda)?;
    let mut step = 1.0;
    loop {
        let eb = breakdown(grid, pb.model, &u, &terms, pb.a);
        let (_, rel) = residual_from_terms(grid, &u, &terms, lambda);
        history.push(HistoryEntry {
            iter: *iter,
            phase: Phase::Newton,
            j: eb.j,
            pohozaev_residual: pb.pohozaev_residual(&eb),
            grad_norm: rel,
            lambda,
            step,
        });
        if rel < NEWTON_TARGET || *iter >= config.max_iter {
            break;
        }

        let mut jac = DMatrix::<f64>::zeros(n + 1, n + 1);
        let c = grid.stiffness();
        for (k, ck) in c.iter().enumerate() {
            jac[(k, k)] += ck;
            jac[(k + 1, k + 1)] += ck;
            jac[(k, k + 1)] -= ck;
            jac[(k + 1, k)] -= ck;
        }
        let fp: Vec<f64> = u
            .iter()
            .map(|&t| pb.model.f_prime(t))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| ChoquardError::EnergyOverflow {
                node: u
                    .iter()
                    .position(|&t| pb.model.f_prime(t).is_none())
                    .unwrap_or(0),
                amplitude: u.iter().cloned().fold(0.0, f64::max),
            })?;
        let f: Vec<f64> = terms.vals.iter().map(|v| v.f).collect();
        for i in 0..n {
            jac[(i, i)] += lambda * w[i] - w[i] * fp[i] * terms.kf[i];
            let row = pb.kernel.row(i);
            let wf = w[i] * f[i];
            if wf != 0.0 {
                for j in 0..n {
                    jac[(i, j)] -= wf * row[j] * f[j];
                }
            }
            jac[(i, n)] = w[i] * u[i];
            jac[(n, i)] = w[i] * u[i];
        }
        let rhs = DVector::from_iterator(n + 1, r.iter().map(|x| -x));
        let Some(delta) = jac.lu().solve(&rhs) else {
            break;
        };

        let mut t = 1.0;
        let mut improved = None;
        for _ in 0..12 {
            let trial: Vec<f64> = positive_part((0..n).map(|i| u[i] + t * delta[i]).collect());
            let lt = lambda + t * delta[n];
            if let Ok((rt, nt, tt)) = residual(&trial, lt) {
                if nt < rnorm {
                    improved = Some((trial, lt, rt, nt, tt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((nu, nl, nr, nn, nt)) = improved else {
            break;
        };
        *iter += 1;
        u = nu;
        lambda = nl;
        r = nr;
        rnorm = nn;
        terms = nt;
        step = t;
    }
    RadialField::new(Arc::clone(grid_arc), u)
}

fn finish(
    pb: &Problem<'_>,
    grid_arc: &Arc<RadialGrid>,
    u: RadialField,
    iterations: usize,
    history: Vec<HistoryEntry>,
    config: &SolverConfig,
    diagnostic: Option<String>,
) -> Result<SolveResult> {
    let u = rescale_mass(
        &RadialField::new(Arc::clone(grid_arc), positive_part(u.into_values()))?,
        pb.a,
    )?;
    let terms = nonlocal_terms(pb.kernel, pb.model, u.values())?;
    let energy = breakdown(pb.grid, pb.model, u.values(), &terms, pb.a);
    let lambda_mult = energy.lambda_multiplier(pb.a);
    let (_, el_residual) = residual_from_terms(pb.grid, u.values(), &terms, lambda_mult);
    let pohozaev_residual = pb.pohozaev_residual(&energy);
    let converged = diagnostic.is_none()
        && el_residual < config.tol_grad
        && pohozaev_residual < config.tol_pohozaev;
    Ok(SolveResult {
        field: u,
        lambda: energy.lambda_est,
        lambda_mult,
        energy,
        el_residual,
        pohozaev_residual,
        iterations,
        converged,
        diagnostic,
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationCheck {
    pub name: String,
    pub passed: Option<bool>,
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<VerificationCheck>,
}

impl VerificationReport {
    /// Every applicable check passed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }

    pub fn get(&self, name: &str) -> Option<&VerificationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| c.passed == Some(false))
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Relative slack in the gradient bound.
pub const GRADIENT_BOUND_TOL: f64 = 1e-3;

/// Upper end of the admissible range of `λ`:
/// `(2+α)²π / (2γ₀a²(μ-2-α/2))`.
pub fn lambda_upper_bound(alpha: f64, gamma0: f64, a: f64, mu: f64) -> Result<f64> {
    let gap = mu - 2.0 - 0.5 * alpha;
    if !(gap > 0.0) || !(gamma0 > 0.0) || !(a > 0.0) {
        return invalid("lambda bound needs mu > 2 + alpha/2 and positive gamma0, a");
    }
    Ok((2.0 + alpha).powi(2) * std::f64::consts::PI / (2.0 * gamma0 * a * a * gap))
}

/// Checks (a)–(f) on a converged solve.
pub fn verify_solution(
    result: &SolveResult,
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    config: &SolverConfig,
) -> Result<VerificationReport> {
    if !result.converged {
        return Err(ChoquardError::InvalidState(
            "verification needs a converged solve".into(),
        ));
    }
    let u = &result.field;
    check_inputs(grid, kernel, model, u)?;
    let a = config.a;
    let alpha = model.alpha();
    let mu = model.mu();
    let terms = nonlocal_terms(kernel, model, u.values())?;
    let e = breakdown(grid, model, u.values(), &terms, a);
    let q = e.grad_sq();
    let mut checks = Vec::new();

    let prel = if q > 0.0 {
        e.pohozaev.abs() / q
    } else {
        f64::INFINITY
    };
    checks.push(VerificationCheck {
        name: "pohozaev".into(),
        passed: Some(prel < config.tol_pohozaev),
        value: prel,
        limit: config.tol_pohozaev,
        detail: "|P(u)| / |grad u|^2".into(),
    });

    let (_, el) = residual_from_terms(grid, u.values(), &terms, result.lambda);
    checks.push(VerificationCheck {
        name: "euler-lagrange".into(),
        passed: Some(el < config.tol_pohozaev),
        value: el,
        limit: config.tol_pohozaev,
        detail: "relative residual of -Δu + λu - (I*F(u))f(u) at the reported λ".into(),
    });

    let lambda = result.lambda;
    match (model.gamma0(), model.kind()) {
        (Some(g0), ModelKind::ExpCritical { .. }) => {
            let hi = lambda_upper_bound(alpha, g0, a, mu)?;
            checks.push(VerificationCheck {
                name: "lambda-range".into(),
                passed: Some(lambda > 0.0 && lambda < hi),
                value: lambda,
                limit: hi,
                detail: "0 < λ < (2+α)²π/(2γ₀a²(μ-2-α/2))".into(),
            });
        }
        _ => checks.push(VerificationCheck {
            name: "lambda-range".into(),
            passed: None,
            value: lambda,
            limit: f64::NAN,
            detail: "skipped: the range needs the exponential-critical model".into(),
        }),
    }

    let gbound = 2.0 * e.j * (mu - 0.5 * (2.0 + alpha)) / (mu - (2.0 + 0.5 * alpha));
    checks.push(VerificationCheck {
        name: "gradient-bound".into(),
        passed: Some(q <= gbound * (1.0 + GRADIENT_BOUND_TOL)),
        value: q,
        limit: gbound,
        detail: "|grad u|^2 <= 2J(μ-(2+α)/2)/(μ-(2+α/2))".into(),
    });

    let interior = &u.values()[..u.values().len() - 1];
    let witness = interior.iter().position(|&v| !(v > 0.0));
    checks.push(VerificationCheck {
        name: "positivity".into(),
        passed: Some(witness.is_none()),
        value: interior.iter().cloned().fold(f64::INFINITY, f64::min),
        limit: 0.0,
        detail: match witness {
            Some(i) => format!("u <= 0 at node {i}"),
            None => "u > 0 on interior nodes".into(),
        },
    });

    match model.gamma0() {
        Some(g0) => {
            let bound = mp_upper_bound(alpha, g0)?;
            checks.push(VerificationCheck {
                name: "level-bound".into(),
                passed: Some(e.j < bound),
                value: e.j,
                limit: bound,
                detail: "J(u) < (2+α)π/(2γ₀)".into(),
            });
        }
        None => checks.push(VerificationCheck {
            name: "level-bound".into(),
            passed: None,
            value: e.j,
            limit: f64::NAN,
            detail: "skipped: the bound needs γ₀".into(),
        }),
    }
    Ok(VerificationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{l2_norm, make_grid, GridScheme};
    use crate::riesz::assemble_kernel;
    use std::sync::OnceLock;

    struct Setup {
        grid: Arc<RadialGrid>,
        kernel: RieszKernelMatrix,
        model: NonlinearityModel,
        result: SolveResult,
    }

    fn setup() -> &'static Setup {
        static S: OnceLock<Setup> = OnceLock::new();
        S.get_or_init(|| {
            let grid = make_grid(256, 12.0, GridScheme::Graded).unwrap();
            let kernel = assemble_kernel(&grid, 1.0).unwrap();
            let model = NonlinearityModel::exp_critical(4.0, 1.0, 1.0, 1.0).unwrap();
            let result =
                minimize_reduced(&SolverConfig::default(), &grid, &kernel, &model).unwrap();
            Setup {
                grid,
                kernel,
                model,
                result,
            }
        })
    }

    #[test]
    fn initial_guesses() {
        let g = make_grid(64, 12.0, GridScheme::UniformMidpoint).unwrap();
        let a = 1.7;
        let gs = initial_guess(&g, a, Profile::Gaussian).unwrap();
        let tent = initial_guess(&g, a, Profile::Tent).unwrap();
        for u in [&gs, &tent] {
            assert!((l2_norm(u) - a).abs() < 1e-14);
            assert!(u.values().iter().all(|&v| v > 0.0));
        }
        assert_ne!(gs.values(), tent.values());
        assert_eq!("tent".parse::<Profile>().unwrap(), Profile::Tent);
        assert!("box".parse::<Profile>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = [
            SolverConfig {
                a: 0.0,
                ..Default::default()
            },
            SolverConfig {
                tol_grad: -1.0,
                ..Default::default()
            },
            SolverConfig {
                max_iter: 0,
                ..Default::default()
            },
            SolverConfig {
                armijo_shrink: 1.0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn shifted_solve_inverts() {
        let g = make_grid(40, 3.0, GridScheme::Graded).unwrap();
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
        let x = solve_shifted(&g, 1.5, 0.7, &b);
        let lx = g.apply_stiffness(&x);
        for i in 0..40 {
            let back = 1.5 * lx[i] + 0.7 * g.weights()[i] * x[i];
            assert!((back - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn reference_solve_is_a_ground_state() {
        let s = setup();
        let r = &s.result;
        assert!(r.converged, "{:?}", r.diagnostic);
        assert!((l2_norm(&r.field) - 1.0).abs() < 1e-13);
        assert!(r.field.values().iter().all(|&v| v >= 0.0));
        assert_eq!(r.lambda, r.energy.lambda_est);
        assert!(((r.lambda - r.lambda_mult) / r.lambda).abs() < 1e-3);
        assert!(r.energy.j > 0.0);
        let report =
            verify_solution(r, &s.grid, &s.kernel, &s.model, &SolverConfig::default()).unwrap();
        assert!(report.all_passed(), "{:?}", report.failed());
        assert_eq!(report.checks.len(), 6);
    }

    #[test]
    fn descent_is_monotone() {
        let s = setup();
        let es: Vec<f64> = s
            .result
            .history
            .iter()
            .filter(|h| h.phase == Phase::Descent)
            .map(|h| h.j)
            .collect();
        assert!(es.len() > 1);
        for w in es.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn profiles_reach_the_same_level() {
        let s = setup();
        let cfg = SolverConfig {
            profile: Profile::Tent,
            ..Default::default()
        };
        let tent = minimize_reduced(&cfg, &s.grid, &s.kernel, &s.model).unwrap();
        assert!(tent.converged);
        assert!((tent.energy.j - s.result.energy.j).abs() < 1e-3 * s.result.energy.j);
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let s = setup();
        let cfg = SolverConfig {
            max_iter: 2,
            ..Default::default()
        };
        let r = minimize_reduced(&cfg, &s.grid, &s.kernel, &s.model).unwrap();
        assert!(!r.converged);
        assert!(r.diagnostic.is_some());
        assert!(!r.history.is_empty());
        assert!(matches!(
            verify_solution(&r, &s.grid, &s.kernel, &s.model, &cfg),
            Err(ChoquardError::InvalidState(_))
        ));
    }

    #[test]
    fn negated_field_fails_positivity() {
        let s = setup();
        let mut r = s.result.clone();
        r.field = r.field.map(|v| -v).unwrap();
        let report =
            verify_solution(&r, &s.grid, &s.kernel, &s.model, &SolverConfig::default()).unwrap();
        let pos = report.get("positivity").unwrap();
        assert_eq!(pos.passed, Some(false));
        assert!(pos.detail.contains("node 0"));
    }

    #[test]
    fn lambda_bound_plug_in() {
        let v = lambda_upper_bound(1.0, 1.0, 1.0, 4.0).unwrap();
        assert!((v - 3.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(lambda_upper_bound(1.0, 1.0, 1.0, 2.5).is_err());
    }

    #[test]
    fn power_model_skips_gamma_checks() {
        let s = setup();
        let power = NonlinearityModel::power(4.0, 1.0).unwrap();
        let r = minimize_reduced(&SolverConfig::default(), &s.grid, &s.kernel, &power).unwrap();
        assert!(r.converged, "{:?}", r.diagnostic);
        let report =
            verify_solution(&r, &s.grid, &s.kernel, &power, &SolverConfig::default()).unwrap();
        assert_eq!(report.get("lambda-range").unwrap().passed, None);
        assert_eq!(report.get("level-bound").unwrap().passed, None);
        assert!(report.all_passed(), "{:?}", report.failed());
    }
}
