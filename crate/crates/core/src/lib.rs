//! Normalized radial ground states of the planar Choquard equation
//! `-Δu + λu = (I_α ∗ F(u)) f(u)` with `∫u² = a²`.

pub mod energy;
pub mod error;
pub mod fiber;
pub mod grid;
pub mod moser;
pub mod nonlin;
pub(crate) mod quad;
pub mod riesz;
pub mod solver;

pub use energy::{el_residual, evaluate_energy, EnergyBreakdown};
pub use error::{ChoquardError, Result};
pub use fiber::{
    fiber_scan, jtilde, pohozaev_scaled, project_pohozaev, psi, scale_field, FiberScan,
};
pub use grid::{make_grid, GridScheme, RadialField, RadialGrid};
pub use moser::{g_scan, moser_field, mp_upper_bound, normalized_moser, MoserScanResult};
pub use nonlin::{check_assumptions, evaluate, solve_matching, Eval, NonlinearityModel};
pub use riesz::{assemble_kernel, convolve, riesz_constant, RieszKernelMatrix};
pub use solver::{
    initial_guess, minimize_reduced, verify_solution, Profile, SolveResult, SolverConfig,
    VerificationReport,
};
