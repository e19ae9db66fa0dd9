//! Pipelines behind each subcommand.

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use choquard_core::moser::{g_scan, log_spaced, MoserSummary};
use choquard_core::nonlin::{
    check_assumptions, default_sample_grids, AssumptionReport, DEFAULT_AUDIT_TOL,
};
use choquard_core::riesz::{brute_force_oracle_fn, load_or_assemble, OracleOptions};
use choquard_core::solver::{minimize_reduced, verify_solution, SolveResult, VerificationReport};
use choquard_core::{convolve, make_grid, RadialField, RadialGrid, RieszKernelMatrix};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const CACHE_ENV: &str = "CHOQUARD_KERNEL_CACHE";
/// Relative sup-error accepted by `convolve-test`.
pub const CONVOLVE_TOL: f64 = 1e-3;

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    grid: &'a crate::config::GridConfig,
    model: &'a crate::config::ModelConfig,
    config: &'a RunConfig,
    code_version: &'static str,
}

#[derive(Debug, Serialize)]
struct Report<'a, T: Serialize> {
    command: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    command: Command,
    config: &RunConfig,
    body: T,
) -> Result<(), CliError> {
    let report = Report {
        command: command.as_str(),
        config,
        body,
    };
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn write_manifest(dir: &Path, config: &RunConfig) -> Result<(), CliError> {
    let m = Manifest {
        grid: &config.grid,
        model: &config.model,
        config,
        code_version: env!("CARGO_PKG_VERSION"),
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&m)? + "\n",
    )?;
    Ok(())
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn kernel_for(grid: &Arc<RadialGrid>, alpha: f64) -> Result<RieszKernelMatrix, CliError> {
    Ok(load_or_assemble(grid, alpha, cache_dir().as_deref())?)
}

/// Execute `command`; the returned line is the human summary for stdout.
pub fn run(command: Command, config: &RunConfig) -> Result<String, CliError> {
    let dir = &config.output.dir;
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Usage(format!("output directory {}: {e}", dir.display())))?;
    write_manifest(dir, config)?;
    match command {
        Command::Solve => solve(config, false),
        Command::Verify => solve(config, true),
        Command::MoserScan => moser_scan(config),
        Command::CheckAssumptions => audit(config),
        Command::ConvolveTest => convolve_test(config),
    }
}

fn solve(config: &RunConfig, verify: bool) -> Result<String, CliError> {
    let dir = &config.output.dir;
    let model = config.model()?;
    let grid = make_grid(config.grid.n, config.grid.r, config.grid.scheme)?;
    let kernel = kernel_for(&grid, model.alpha())?;
    let result = minimize_reduced(&config.solver, &grid, &kernel, &model)?;
    write_outputs(dir, config, &result)?;
    let line = format!(
        "{}: J={:.10} lambda={:.10} |P|/|grad u|^2={:.3e} residual={:.3e} iterations={} converged={}",
        if verify { "verify" } else { "solve" },
        result.energy.j,
        result.lambda,
        result.pohozaev_residual,
        result.el_residual,
        result.iterations,
        result.converged
    );
    if !result.converged {
        return Err(CliError::Numerical(format!(
            "solver did not converge ({}); {line}",
            result.diagnostic.as_deref().unwrap_or("tolerances not met")
        )));
    }
    if !verify {
        return Ok(line);
    }
    let report = verify_solution(&result, &grid, &kernel, &model, &config.solver)?;
    #[derive(Serialize)]
    struct Body<'a> {
        passed: bool,
        verification: &'a VerificationReport,
    }
    let passed = report.all_passed();
    write_json(
        dir,
        "verification.json",
        Command::Verify,
        config,
        Body {
            passed,
            verification: &report,
        },
    )?;
    if passed {
        Ok(format!("{line} checks=all-passed"))
    } else {
        Err(CliError::Verification(format!(
            "failed checks: {}",
            report.failed().join(", ")
        )))
    }
}

fn write_outputs(dir: &Path, config: &RunConfig, result: &SolveResult) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Body<'a> {
        result: &'a SolveResult,
    }
    write_json(dir, "result.json", Command::Solve, config, Body { result })?;
    std::fs::write(dir.join("field.csv"), result.field.to_csv())?;
    std::fs::write(dir.join("history.csv"), result.history_csv())?;
    Ok(())
}

fn moser_scan(config: &RunConfig) -> Result<String, CliError> {
    let dir = &config.output.dir;
    let model = config.model()?;
    let mo = &config.moser;
    let grid = make_grid(config.grid.n, mo.r_max, config.grid.scheme)?;
    let kernel = kernel_for(&grid, model.alpha())?;
    let ts = log_spaced(mo.t_min, mo.t_max, mo.t_count);
    let mut scans: Vec<MoserSummary> = Vec::new();
    for &n in &mo.n_values {
        let scan = g_scan(&grid, &kernel, &model, n, config.solver.a, &ts)?;
        std::fs::write(dir.join(format!("moser_n{n}.csv")), scan.to_csv())?;
        scans.push(scan.summary());
    }
    let witness = scans
        .iter()
        .filter(|s| s.margin > 0.0)
        .max_by(|a, b| a.margin.total_cmp(&b.margin))
        .map(|s| s.n);
    let best = scans
        .iter()
        .max_by(|a, b| a.margin.total_cmp(&b.margin))
        .expect("n_values is nonempty");
    #[derive(Serialize)]
    struct Body<'a> {
        scans: &'a [MoserSummary],
        witness: Option<u32>,
    }
    write_json(
        dir,
        "moser.json",
        Command::MoserScan,
        config,
        Body {
            scans: &scans,
            witness,
        },
    )?;
    let line = format!(
        "moser-scan: best n={} g_max={:.6} bound={:.6} margin={:.6}",
        best.n, best.g_max, best.bound, best.margin
    );
    match witness {
        Some(_) => Ok(line),
        None => Err(CliError::Verification(format!(
            "no scanned n beats the level bound; {line}"
        ))),
    }
}

fn audit(config: &RunConfig) -> Result<String, CliError> {
    let model = config.model_unchecked()?;
    let (small, large) = default_sample_grids(&model);
    let report = check_assumptions(&model, &small, &large, DEFAULT_AUDIT_TOL)?;
    #[derive(Serialize)]
    struct Body<'a> {
        passed: bool,
        assumptions: &'a AssumptionReport,
    }
    let passed = report.all_passed();
    write_json(
        &config.output.dir,
        "assumptions.json",
        Command::CheckAssumptions,
        config,
        Body {
            passed,
            assumptions: &report,
        },
    )?;
    if passed {
        Ok(format!(
            "check-assumptions: all {} checks passed or not applicable",
            report.checks.len()
        ))
    } else {
        Err(CliError::Verification(format!(
            "failed assumptions: {}",
            report.failed().join(", ")
        )))
    }
}

/// Named radial profile with its support radius (`None`: the whole grid).
pub type Profile = (&'static str, fn(f64) -> f64, Option<f64>);

/// Smooth radial test profiles for `convolve-test`.
pub fn convolve_profiles() -> Vec<Profile> {
    fn gaussian(r: f64) -> f64 {
        (-r * r).exp()
    }
    fn bump(r: f64) -> f64 {
        if r < 1.0 {
            (1.0 - 1.0 / (1.0 - r * r)).exp()
        } else {
            0.0
        }
    }
    fn polynomial(r: f64) -> f64 {
        if r < 1.0 {
            (1.0 - r * r).powi(3)
        } else {
            0.0
        }
    }
    vec![
        ("gaussian", gaussian, None),
        ("bump", bump, Some(1.0)),
        ("truncated-polynomial", polynomial, Some(1.0)),
    ]
}

fn convolve_test(config: &RunConfig) -> Result<String, CliError> {
    let alpha = config.model.alpha;
    let grid = make_grid(config.grid.n, config.grid.r, config.grid.scheme)?;
    let kernel = kernel_for(&grid, alpha)?;
    #[derive(Serialize)]
    struct Row {
        profile: &'static str,
        max_rel_error: f64,
    }
    let mut rows = Vec::new();
    for (name, g, support) in convolve_profiles() {
        let field = RadialField::from_fn(&grid, g)?;
        let got = convolve(&kernel, &field)?;
        let support = support.unwrap_or(grid.r_max()).min(grid.r_max());
        let want =
            brute_force_oracle_fn(g, support, alpha, grid.nodes(), OracleOptions::default())?;
        let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = got
            .values()
            .iter()
            .zip(&want)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        rows.push(Row {
            profile: name,
            max_rel_error: err / scale,
        });
    }
    #[derive(Serialize)]
    struct Body<'a> {
        alpha: f64,
        tol: f64,
        passed: bool,
        results: &'a [Row],
    }
    let worst = rows.iter().fold(0.0f64, |m, r| m.max(r.max_rel_error));
    let passed = worst < CONVOLVE_TOL;
    write_json(
        &config.output.dir,
        "convolve.json",
        Command::ConvolveTest,
        config,
        Body {
            alpha,
            tol: CONVOLVE_TOL,
            passed,
            results: &rows,
        },
    )?;
    let line = format!("convolve-test: alpha={alpha} worst relative sup-error={worst:.3e}");
    if passed {
        Ok(line)
    } else {
        Err(CliError::Verification(line))
    }
}
