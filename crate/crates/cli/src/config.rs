//! Run configuration: TOML file merged with command-line overrides.

use std::path::{Path, PathBuf};

use hjmvol_core::{CalibrationConfig, Convention, McConfig, DEFAULT_DAY_COUNT_FACTOR};
use serde::Deserialize;

use crate::error::{CliError, Result};

/// Environment variable holding the default config file path.
pub const CONFIG_ENV: &str = "HJMVOL_CONFIG";

/// Everything a workflow needs; every field has a default and can come from
/// the TOML config file, with file paths and a few scalars overridable on
/// the command line.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Grid step in years.
    pub dt: f64,
    /// Discounting convention.
    pub convention: Convention,
    /// Float-leg day-count factor `A` (set to 1.0 to disable).
    pub day_count_factor: f64,
    /// Fixed-leg payments per year.
    pub frequency: u32,
    /// Monte-Carlo paths.
    pub n_paths: usize,
    /// Monte-Carlo seed.
    pub seed: u64,
    /// Antithetic path mirroring.
    pub antithetic: bool,
    /// Debug hook: drop the no-arbitrage drift (negative control).
    pub disable_drift: bool,
    /// MC validation band in standard errors.
    pub mc_band_k: f64,
    /// Relative IV tolerance for calibrated quotes.
    pub fit_tolerance: f64,
    /// Spline-fill missing target tenors before bootstrapping.
    pub tenor_fill: bool,
    /// Tenor grid the calibration covers at each quoted expiry.
    pub target_tenors: Vec<f64>,
    /// Expiries priced / validated (cartesian with `tenors`).
    pub expiries: Vec<f64>,
    /// Tenors priced / validated (cartesian with `expiries`).
    pub tenors: Vec<f64>,
    /// Expiries excluded from calibration.
    pub exclude_expiries: Vec<f64>,
    /// Discount curve CSV.
    pub curve: Option<PathBuf>,
    /// Spread curve CSV (dual convention).
    pub spread: Option<PathBuf>,
    /// Quote CSV.
    pub quotes: Option<PathBuf>,
    /// Surface CSV.
    pub surface: Option<PathBuf>,
    /// Output directory for report files.
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dt: 0.5,
            convention: Convention::Single,
            day_count_factor: DEFAULT_DAY_COUNT_FACTOR,
            frequency: 2,
            n_paths: 10_000,
            seed: 0,
            antithetic: false,
            disable_drift: false,
            mc_band_k: 3.0,
            fit_tolerance: 1e-8,
            tenor_fill: true,
            target_tenors: vec![1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            expiries: Vec::new(),
            tenors: Vec::new(),
            exclude_expiries: Vec::new(),
            curve: None,
            spread: None,
            quotes: None,
            surface: None,
            out_dir: None,
        }
    }
}

impl RunConfig {
    /// Load from a TOML file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::in_file(path, format!("cannot read config: {e}")))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::in_file(path, format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(CliError::Malformed(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.day_count_factor.is_nan() || self.day_count_factor <= 0.0 {
            return Err(CliError::Malformed(
                "day_count_factor must be positive".into(),
            ));
        }
        if self.frequency == 0 {
            return Err(CliError::Malformed("frequency must be at least 1".into()));
        }
        if self.mc_band_k.is_nan() || self.mc_band_k <= 0.0 {
            return Err(CliError::Malformed("mc_band_k must be positive".into()));
        }
        Ok(())
    }

    /// Monte-Carlo parameters for this run.
    pub fn mc_config(&self) -> McConfig {
        McConfig {
            n_paths: self.n_paths,
            seed: self.seed,
            antithetic: self.antithetic,
            drift_enabled: !self.disable_drift,
        }
    }

    /// Calibration parameters for this run.
    pub fn calibration_config(&self) -> CalibrationConfig {
        CalibrationConfig {
            dt: self.dt,
            frequency: self.frequency,
            day_count_factor: self.day_count_factor,
            target_tenors: self.target_tenors.clone(),
            tenor_fill: self.tenor_fill,
            fit_tolerance: self.fit_tolerance,
        }
    }

    /// Required-path accessor with a diagnostic naming the missing input.
    pub fn require(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        path.clone().ok_or_else(|| {
            CliError::Malformed(format!("no {what} file given (flag or config key)"))
        })
    }
}

/// Parse a `--convention` value.
pub fn parse_convention(s: &str) -> Result<Convention> {
    match s {
        "single" => Ok(Convention::Single),
        "dual" => Ok(Convention::Dual),
        other => Err(CliError::Malformed(format!(
            "unknown convention '{other}' (expected 'single' or 'dual')"
        ))),
    }
}

/// Parse an `--exclude expiry=<years>` argument.
pub fn parse_exclusion(s: &str) -> Result<f64> {
    let value = s
        .strip_prefix("expiry=")
        .ok_or_else(|| CliError::Malformed(format!("--exclude expects expiry=<years>, got '{s}'")))?;
    value
        .parse::<f64>()
        .map_err(|e| CliError::Malformed(format!("--exclude expiry '{value}': {e}")))
}
