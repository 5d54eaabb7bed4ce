//! Run configuration: a TOML file mirrored by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::CliError;
use haar_core::registry::parse_params;
use haar_core::verify::{CheckConfig, Sidedness, QUADRATURE_TOL};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub construction: ConstructionSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionSection {
    pub builtin: Option<String>,
    pub base: Option<String>,
    pub forward: Option<String>,
    pub inverse: Option<String>,
    pub params: Option<BTreeMap<String, f64>>,
    pub domain: Option<String>,
    pub codomain: Option<String>,
    pub decreasing: Option<bool>,
    pub dist: Option<String>,
    pub escape: Option<String>,
    pub sigma_finite: Option<String>,
    pub density: Option<String>,
    pub carrier: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    pub names: Option<Vec<String>>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub quad_tol: Option<f64>,
    pub side: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub report: Option<PathBuf>,
    pub json: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Flags shared by every command that runs checks.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated check names (default: every applicable check).
    #[arg(long, value_delimiter = ',')]
    pub checks: Option<Vec<String>>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Overrides each check's default tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub quad_tol: Option<f64>,
    /// left, right or two-sided.
    #[arg(long)]
    pub side: Option<String>,
    /// Defaults to $HAAR_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print reports as JSON lines instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Also write JSON-lines reports to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Construction flags; which ones apply depends on the command.
#[derive(Debug, Args, Default)]
pub struct ConstructionArgs {
    /// Built-in group selector, e.g. `velocity:1`.
    #[arg(long, alias = "group")]
    pub builtin: Option<String>,
    /// Base group of a custom transport: real-line or circle.
    #[arg(long)]
    pub base: Option<String>,
    /// Forward map expression in `x`.
    #[arg(long, allow_hyphen_values = true)]
    pub forward: Option<String>,
    /// Inverse map expression in `x`.
    #[arg(long, allow_hyphen_values = true)]
    pub inverse: Option<String>,
    /// Parameters as `name=value,...`.
    #[arg(long)]
    pub params: Option<String>,
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub codomain: Option<String>,
    #[arg(long)]
    pub decreasing: bool,
    /// Distribution selector, e.g. `normal:0,1`.
    #[arg(long)]
    pub dist: Option<String>,
    /// Escape sequence: `arithmetic:<origin>,<step>` or `geometric:<lo>,<hi>`.
    #[arg(long)]
    pub escape: Option<String>,
    /// σ-finite input measure: `lebesgue`, `dist:<selector>` or `density`.
    #[arg(long)]
    pub sigma_finite: Option<String>,
    /// Density expression for `--sigma-finite density`.
    #[arg(long, allow_hyphen_values = true)]
    pub density: Option<String>,
    #[arg(long)]
    pub carrier: Option<String>,
}

/// Flags merged over the file.
#[derive(Debug)]
pub struct Construction {
    pub builtin: Option<String>,
    pub base: String,
    pub forward: Option<String>,
    pub inverse: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub domain: Option<String>,
    pub codomain: Option<String>,
    pub decreasing: bool,
    pub dist: Option<String>,
    pub escape: Option<String>,
    pub sigma_finite: Option<String>,
    pub density: Option<String>,
    pub carrier: Option<String>,
}

#[derive(Debug)]
pub struct RunConfig {
    pub construction: Construction,
    pub checks: Option<Vec<String>>,
    pub check: CheckConfig,
    pub seed: u64,
    pub json: bool,
    pub report: Option<PathBuf>,
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("HAAR_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("HAAR_SEED={v} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn positive(name: &str, v: Option<f64>) -> Result<Option<f64>, CliError> {
    match v {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(CliError::Config(format!("{name} must be positive, got {t}"))),
        _ => Ok(v),
    }
}

impl RunConfig {
    pub fn resolve(run: &RunArgs, c: ConstructionArgs) -> Result<Self, CliError> {
        let file = FileConfig::load(run.config.as_deref())?;
        let fc = file.construction;
        let mut params = fc.params.unwrap_or_default();
        if let Some(p) = &c.params {
            params.extend(parse_params(p)?);
        }
        let construction = Construction {
            builtin: c.builtin.or(fc.builtin),
            base: c.base.or(fc.base).unwrap_or_else(|| "real-line".into()),
            forward: c.forward.or(fc.forward),
            inverse: c.inverse.or(fc.inverse),
            params,
            domain: c.domain.or(fc.domain),
            codomain: c.codomain.or(fc.codomain),
            decreasing: c.decreasing || fc.decreasing.unwrap_or(false),
            dist: c.dist.or(fc.dist),
            escape: c.escape.or(fc.escape),
            sigma_finite: c.sigma_finite.or(fc.sigma_finite),
            density: c.density.or(fc.density),
            carrier: c.carrier.or(fc.carrier),
        };
        let side = match run.side.clone().or(file.checks.side) {
            Some(s) => s.parse::<Sidedness>()?,
            None => Sidedness::TwoSided,
        };
        let defaults = CheckConfig::default();
        let samples = run.samples.or(file.checks.samples).unwrap_or(defaults.samples);
        if samples == 0 {
            return Err(CliError::Config("samples must be positive".into()));
        }
        let check = CheckConfig {
            samples,
            tol: positive("tol", run.tol.or(file.checks.tol))?,
            quad_tol: positive("quad-tol", run.quad_tol.or(file.checks.quad_tol))?.unwrap_or(QUADRATURE_TOL),
            side,
        };
        let seed = match run.seed.or(file.seed) {
            Some(s) => s,
            None => env_seed()?.unwrap_or(0),
        };
        Ok(RunConfig {
            construction,
            checks: run.checks.clone().or(file.checks.names),
            check,
            seed,
            json: run.json || file.output.json.unwrap_or(false),
            report: run.report.clone().or(file.output.report),
        })
    }
}
