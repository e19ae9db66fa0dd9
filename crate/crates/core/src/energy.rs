//! The energy `J`, the Pohožaev functional and the Euler–Lagrange residual.

use crate::error::{invalid, Result};
use crate::grid::{l2_norm, RadialField, RadialGrid};
use crate::nonlin::{NonlinValue, NonlinearityModel};
use crate::riesz::RieszKernelMatrix;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `½∥∇u∥₂²`.
    pub kinetic: f64,
    /// `½∫(I_α∗F(u))F(u)`.
    pub nonlocal: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub pohozaev: f64,
    /// `∫(I_α∗F(u))f(u)u`.
    pub coupling: f64,
    pub lambda_est: f64,
    pub mass: f64,
}

impl EnergyBreakdown {
    /// `∥∇u∥₂²`.
    pub fn grad_sq(&self) -> f64 {
        2.0 * self.kinetic
    }

    /// Multiplier from testing the equation with `u`:
    /// `λ a² = ∫(I_α∗F(u))f(u)u - ∥∇u∥²`.
    pub fn lambda_multiplier(&self, a: f64) -> f64 {
        (self.coupling - self.grad_sq()) / (a * a)
    }
}

/// Nodal `(f, F, F̃)` of a field together with `K F(u)`.
#[derive(Debug, Clone)]
pub(crate) struct NonlocalTerms {
    pub vals: Vec<NonlinValue>,
    pub kf: Vec<f64>,
}

pub(crate) fn check_inputs(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    u: &RadialField,
) -> Result<()> {
    u.check_grid(grid)?;
    if !kernel.grid().same_as(grid) {
        return invalid("kernel was assembled on a different grid");
    }
    if kernel.alpha() != model.alpha() {
        return invalid(format!(
            "kernel alpha {} differs from model alpha {}",
            kernel.alpha(),
            model.alpha()
        ));
    }
    Ok(())
}

pub(crate) fn nonlocal_terms(
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    u: &[f64],
) -> Result<NonlocalTerms> {
    let vals = model.eval_all(u)?;
    let big_f: Vec<f64> = vals.iter().map(|v| v.big_f).collect();
    let kf = kernel.apply(&big_f);
    if let Some(node) = kf.iter().position(|k| !k.is_finite()) {
        return Err(crate::error::ChoquardError::EnergyOverflow {
            node,
            amplitude: u[node],
        });
    }
    Ok(NonlocalTerms { vals, kf })
}

pub(crate) fn breakdown(
    grid: &RadialGrid,
    model: &NonlinearityModel,
    u: &[f64],
    terms: &NonlocalTerms,
    a: f64,
) -> EnergyBreakdown {
    let alpha = model.alpha();
    let w = grid.weights();
    let mut nonlocal = 0.0;
    let mut coupling = 0.0;
    for i in 0..u.len() {
        let v = terms.vals[i];
        nonlocal += w[i] * terms.kf[i] * v.big_f;
        coupling += w[i] * terms.kf[i] * v.f * u[i];
    }
    nonlocal *= 0.5;
    let kinetic = 0.5 * grid.dirichlet_energy(u);
    EnergyBreakdown {
        kinetic,
        nonlocal,
        j: kinetic - nonlocal,
        pohozaev: 2.0 * kinetic + (2.0 + alpha) * nonlocal - coupling,
        coupling,
        lambda_est: (1.0 + 0.5 * alpha) * 2.0 * nonlocal / (a * a),
        mass: grid
            .weights()
            .iter()
            .zip(u)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt(),
    }
}

/// All energy integrals of `u` on the sphere of radius `a`.
pub fn evaluate_energy(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    u: &RadialField,
    a: f64,
) -> Result<EnergyBreakdown> {
    check_inputs(grid, kernel, model, u)?;
    if !(a > 0.0 && a.is_finite()) {
        return invalid(format!("mass must be positive, got {a}"));
    }
    let terms = nonlocal_terms(kernel, model, u.values())?;
    Ok(breakdown(grid, model, u.values(), &terms, a))
}

/// Nodal `-Δu + λu - (I_α∗F(u))f(u)` and its norm relative to `-Δu + λu`.
pub fn el_residual(
    grid: &RadialGrid,
    kernel: &RieszKernelMatrix,
    model: &NonlinearityModel,
    u: &RadialField,
    lambda: f64,
) -> Result<(RadialField, f64)> {
    check_inputs(grid, kernel, model, u)?;
    if !lambda.is_finite() {
        return invalid(format!("lambda must be finite, got {lambda}"));
    }
    let terms = nonlocal_terms(kernel, model, u.values())?;
    let (res, rel) = residual_from_terms(grid, u.values(), &terms, lambda);
    Ok((RadialField::new(Arc::clone(u.grid()), res)?, rel))
}

pub(crate) fn residual_from_terms(
    grid: &RadialGrid,
    u: &[f64],
    terms: &NonlocalTerms,
    lambda: f64,
) -> (Vec<f64>, f64) {
    let lap = grid.neg_laplacian(u);
    let mut res = Vec::with_capacity(u.len());
    let mut lin = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        let l = lap[i] + lambda * u[i];
        lin.push(l);
        res.push(l - terms.kf[i] * terms.vals[i].f);
    }
    let w = grid.weights();
    let nr: f64 = w
        .iter()
        .zip(&res)
        .map(|(w, r)| w * r * r)
        .sum::<f64>()
        .sqrt();
    let nl: f64 = w
        .iter()
        .zip(&lin)
        .map(|(w, r)| w * r * r)
        .sum::<f64>()
        .sqrt();
    let rel = if nr == 0.0 { 0.0 } else { nr / nl };
    (res, rel)
}

/// `∥u∥₂` on the field's own grid.
pub fn mass(u: &RadialField) -> f64 {
    l2_norm(u)
}
