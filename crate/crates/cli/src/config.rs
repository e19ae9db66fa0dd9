//! Run configuration: defaults, JSON file, command-line overrides.

use crate::error::CliError;
use choquard_core::nonlin::NonlinearityModel;
use choquard_core::{GridScheme, SolverConfig};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Minimize the reduced energy and write the ground state
    Solve,
    /// Scan Moser sequences against the mountain-pass level bound
    MoserScan,
    /// Audit the structural assumptions on the nonlinearity
    CheckAssumptions,
    /// Compare the Riesz kernel with direct planar quadrature
    ConvolveTest,
    /// Solve, then check the identities and bounds of a ground state
    Verify,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::MoserScan => "moser-scan",
            Command::CheckAssumptions => "check-assumptions",
            Command::ConvolveTest => "convolve-test",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    ExpCritical,
    Power,
    ExpPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub variant: Variant,
    pub alpha: f64,
    pub gamma0: f64,
    pub beta0: f64,
    pub sigma: f64,
    /// Power exponent for `power` and `exp-power`.
    pub p: f64,
    /// Exponential-power denominator exponent.
    pub q: f64,
    /// Matching point of `exp-power`.
    pub s0: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::ExpCritical,
            alpha: 1.0,
            gamma0: 1.0,
            beta0: 1.0,
            sigma: 4.0,
            p: 4.0,
            q: 1.0,
            s0: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub r: f64,
    pub scheme: GridScheme,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 512,
            r: 12.0,
            scheme: GridScheme::Graded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MoserConfig {
    pub n_values: Vec<u32>,
    /// Radius of the scan grid; the Moser fields vanish beyond 1.
    pub r_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
}

impl Default for MoserConfig {
    fn default() -> Self {
        Self {
            n_values: (2..=10).map(|k| 1u32 << k).collect(),
            r_max: 1.0,
            t_min: 0.01,
            t_max: 10.0,
            t_count: 241,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// The effective configuration of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub moser: MoserConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Parser)]
#[command(
    name = "choquard",
    version,
    about = "Normalized ground states of the planar Choquard equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Flags override values from `--config`, which override the defaults.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Flat JSON config with sections model, grid, solver, moser, output
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Riesz order in (0,2) [default: 1]
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Critical exponential rate [default: 1]
    #[arg(long, global = true)]
    pub gamma0: Option<f64>,
    /// Exponential amplitude [default: 1]
    #[arg(long, global = true)]
    pub beta0: Option<f64>,
    /// Small-amplitude power in (2+alpha, 6) [default: 4]
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// L2 mass a [default: 1]
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    /// Number of radial nodes [default: 512]
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    /// Truncation radius [default: 12]
    #[arg(long, global = true)]
    pub grid_r: Option<f64>,
    /// uniform-midpoint or graded [default: graded]
    #[arg(long, global = true)]
    pub grid_scheme: Option<String>,
    /// Output directory [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Relative gradient tolerance [default: 1e-5]
    #[arg(long, global = true)]
    pub tol_grad: Option<f64>,
    /// Relative Pohozaev tolerance [default: 1e-4]
    #[arg(long, global = true)]
    pub tol_pohozaev: Option<f64>,
    /// Iteration cap [default: 5000]
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
}

fn read_file(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

impl Overrides {
    pub fn apply(&self, mut c: RunConfig) -> Result<RunConfig, CliError> {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut c.model.alpha, self.alpha);
        set(&mut c.model.gamma0, self.gamma0);
        set(&mut c.model.beta0, self.beta0);
        set(&mut c.model.sigma, self.sigma);
        set(&mut c.solver.a, self.mass);
        set(&mut c.grid.r, self.grid_r);
        set(&mut c.solver.tol_grad, self.tol_grad);
        set(&mut c.solver.tol_pohozaev, self.tol_pohozaev);
        if let Some(n) = self.grid_n {
            c.grid.n = n;
        }
        if let Some(s) = &self.grid_scheme {
            c.grid.scheme = s.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
        }
        if let Some(d) = &self.out {
            c.output.dir = d.clone();
        }
        if let Some(m) = self.max_iter {
            c.solver.max_iter = m;
        }
        Ok(c)
    }
}

/// Parse arguments (without the program name), read `--config` if given,
/// apply flag overrides and validate.
pub fn parse_config<I, S>(args: I) -> Result<(Command, RunConfig), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("choquard"))
        .chain(args.into_iter().map(Into::into));
    let cli =
        Cli::try_parse_from(argv).map_err(|e| CliError::Clap(e.to_string(), e.exit_code() == 0))?;
    let base = match &cli.overrides.config {
        Some(p) => read_file(p)?,
        None => RunConfig::default(),
    };
    let config = cli.overrides.apply(base)?;
    config.validate(cli.command)?;
    Ok((cli.command, config))
}

impl RunConfig {
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        let m = &self.model;
        if !(m.alpha > 0.0 && m.alpha < 2.0) {
            return Err(CliError::Usage(format!(
                "alpha must lie in (0,2), got {}",
                m.alpha
            )));
        }
        // The audit must be able to report on models outside the admissible
        // range, so only basic positivity is demanded there.
        if command == Command::CheckAssumptions {
            self.model_unchecked()
                .map_err(|e| CliError::Usage(e.to_string()))?;
        } else {
            self.model().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        choquard_core::RadialGrid::new(self.grid.n, self.grid.r, self.grid.scheme)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        self.solver
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let mo = &self.moser;
        if mo.n_values.is_empty() || mo.n_values.iter().any(|&n| n < 2) {
            return Err(CliError::Usage(
                "moser.n_values must be nonempty with every n >= 2".into(),
            ));
        }
        if !(mo.t_min > 0.0 && mo.t_max > mo.t_min && mo.t_count >= 3 && mo.r_max >= 1.0) {
            return Err(CliError::Usage(
                "moser scan needs 0 < t_min < t_max, t_count >= 3 and r_max >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn model(&self) -> choquard_core::Result<NonlinearityModel> {
        let m = &self.model;
        match m.variant {
            Variant::ExpCritical => {
                NonlinearityModel::exp_critical(m.sigma, m.gamma0, m.beta0, m.alpha)
            }
            Variant::Power => NonlinearityModel::power(m.p, m.alpha),
            Variant::ExpPower => NonlinearityModel::exp_power(m.p, m.q, m.gamma0, m.s0, m.alpha),
        }
    }

    /// As [`RunConfig::model`] but without the admissibility range on `σ`.
    pub fn model_unchecked(&self) -> choquard_core::Result<NonlinearityModel> {
        let m = &self.model;
        match m.variant {
            Variant::ExpCritical => {
                NonlinearityModel::exp_critical_unchecked(m.sigma, m.gamma0, m.beta0, m.alpha)
            }
            _ => self.model(),
        }
    }
}
