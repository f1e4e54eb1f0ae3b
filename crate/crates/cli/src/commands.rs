//! The four workflows behind the subcommands.
//!
//! Commands return the process exit code on success: 0 clean, 1 when the
//! workflow itself found something (arbitrage flags, MC band violations).
//! Hard failures return [`CliError`] and map to exit codes 2/3. Data goes
//! to standard output and the out-dir; diagnostics go to standard error.

use std::io::Write;
use std::path::{Path, PathBuf};

use hjmvol_core::{
    arb_scan, atm_price, bootstrap_surface, grid_index, price_swaption_mc, ArbitrageFlag,
    DiscountCurve, ForwardVolSurface, SpreadCurve, SwaptionQuote, SwaptionSpec, NORMAL_SAMPLER,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{self, FilledQuoteRecord, McValidateRecord, PriceRecord, ResidualRecord, BP};

/// The cartesian (expiry, tenor) request grid, grid-validated.
fn resolve_specs(cfg: &RunConfig) -> Result<Vec<SwaptionSpec>> {
    if cfg.expiries.is_empty() || cfg.tenors.is_empty() {
        return Err(CliError::Malformed(
            "no instruments requested: set 'expiries' and 'tenors' in the config".into(),
        ));
    }
    // Reject off-grid times up front rather than rounding them silently.
    for &expiry in &cfg.expiries {
        grid_index(expiry, cfg.dt, "expiry")?;
    }
    for &tenor in &cfg.tenors {
        grid_index(tenor, cfg.dt, "tenor")?;
    }
    grid_index(1.0 / f64::from(cfg.frequency), cfg.dt, "payment interval")?;

    let mut specs = Vec::with_capacity(cfg.expiries.len() * cfg.tenors.len());
    for &expiry in &cfg.expiries {
        for &tenor in &cfg.tenors {
            specs.push(
                SwaptionSpec::new(expiry, tenor, cfg.frequency)?
                    .with_day_count(cfg.day_count_factor)?,
            );
        }
    }
    Ok(specs)
}

fn load_curve_checked(cfg: &RunConfig, max_maturity: f64) -> Result<DiscountCurve> {
    let path = RunConfig::require(&cfg.curve, "curve")?;
    let curve = io::load_curve(&path)?;
    if curve.last_maturity() + 1e-9 < max_maturity {
        return Err(CliError::in_file(
            &path,
            format!(
                "curve pillars end at {} but maturities up to {max_maturity} are needed",
                curve.last_maturity()
            ),
        ));
    }
    Ok(curve)
}

fn load_spread_opt(cfg: &RunConfig) -> Result<Option<SpreadCurve>> {
    match &cfg.spread {
        Some(path) => Ok(Some(io::load_spread(path)?)),
        None => Ok(None),
    }
}

fn load_surface_checked(cfg: &RunConfig) -> Result<ForwardVolSurface> {
    let path = RunConfig::require(&cfg.surface, "surface")?;
    let surface = io::load_surface(&path)?;
    if (surface.dt() - cfg.dt).abs() > 1e-12 {
        return Err(CliError::Grid(format!(
            "surface grid step {} does not match configured dt {}",
            surface.dt(),
            cfg.dt
        )));
    }
    Ok(surface)
}

fn out_file(dir: &Option<PathBuf>, name: &str) -> Result<Option<PathBuf>> {
    match dir {
        None => Ok(None),
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::in_file(dir, format!("cannot create out dir: {e}")))?;
            Ok(Some(dir.join(name)))
        }
    }
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::in_file(path, format!("write failed: {e}")))
}

fn max_spec_maturity(specs: &[SwaptionSpec]) -> f64 {
    specs.iter().map(|s| s.maturity()).fold(0.0, f64::max)
}

/// `price`: closed-form ATM prices for the request grid, one JSON record
/// per line.
pub fn cmd_price(cfg: &RunConfig) -> Result<u8> {
    let specs = resolve_specs(cfg)?;
    let curve = load_curve_checked(cfg, max_spec_maturity(&specs))?;
    let spread = load_spread_opt(cfg)?;
    let surface = load_surface_checked(cfg)?;

    let mut lines = Vec::with_capacity(specs.len());
    for spec in &specs {
        let result = atm_price(&surface, &curve, spread.as_ref(), spec, cfg.convention)?;
        let record = PriceRecord {
            expiry: spec.expiry(),
            tenor: spec.tenor(),
            price: result.price,
            normal_iv: result.normal_iv,
            sigma_total: result.sigma_total,
            annuity: result.annuity,
        };
        lines.push(serde_json::to_string(&record).expect("price record serializes"));
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in &lines {
        writeln!(out, "{line}").map_err(|e| CliError::Malformed(format!("stdout: {e}")))?;
    }
    if let Some(path) = out_file(&cfg.out_dir, "prices.jsonl")? {
        write_lines(&path, &lines)?;
    }
    Ok(0)
}

fn apply_exclusions(quotes: &mut [SwaptionQuote], exclude: &[f64]) {
    for q in quotes.iter_mut() {
        if exclude.iter().any(|&e| (e - q.expiry).abs() <= 1e-9) {
            q.excluded = true;
        }
    }
}

fn quote_coverage(quotes: &[SwaptionQuote], cfg: &RunConfig) -> f64 {
    let filled_max = if cfg.tenor_fill {
        cfg.target_tenors.iter().copied().fold(0.0, f64::max)
    } else {
        0.0
    };
    quotes
        .iter()
        .filter(|q| !q.excluded)
        .map(|q| q.expiry + q.tenor.max(filled_max))
        .fold(0.0, f64::max)
}

fn load_quotes_for_run(cfg: &RunConfig) -> Result<(Vec<SwaptionQuote>, DiscountCurve)> {
    let path = RunConfig::require(&cfg.quotes, "quotes")?;
    let mut quotes = io::load_quotes(&path)?;
    apply_exclusions(&mut quotes, &cfg.exclude_expiries);
    let curve = load_curve_checked(cfg, quote_coverage(&quotes, cfg))?;
    Ok((quotes, curve))
}

fn flag_lines(flags: &[ArbitrageFlag]) -> Vec<String> {
    flags
        .iter()
        .map(|f| serde_json::to_string(f).expect("flag serializes"))
        .collect()
}

/// `calibrate`: bootstrap the surface from quotes; writes the surface CSV,
/// the JSON report, and the plot-ready fit CSV into the out-dir (the
/// current directory when none is given). Exit 1 when flags are present
/// (outputs are still written).
pub fn cmd_calibrate(cfg: &RunConfig) -> Result<u8> {
    let (quotes, curve) = load_quotes_for_run(cfg)?;
    let spread = load_spread_opt(cfg)?;
    let report = bootstrap_surface(
        &quotes,
        &curve,
        spread.as_ref(),
        cfg.convention,
        &cfg.calibration_config(),
    )?;

    let out_dir = Some(cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")));
    if let Some(path) = out_file(&out_dir, "surface.csv")? {
        io::write_surface(&path, &report.surface)?;
    }

    let residuals: Vec<ResidualRecord> = report
        .residuals
        .iter()
        .map(|r| ResidualRecord {
            expiry: r.expiry,
            tenor: r.tenor,
            market_iv_bp: r.market_iv / BP,
            model_iv_bp: r.model_iv / BP,
            diff_bp: r.diff / BP,
            flagged: r.flagged,
            filled: r.filled,
        })
        .collect();
    let filled: Vec<FilledQuoteRecord> = report
        .filled_quotes
        .iter()
        .map(|q| FilledQuoteRecord {
            expiry: q.expiry,
            tenor: q.tenor,
            normal_iv_bp: q.normal_iv / BP,
        })
        .collect();
    let report_json = serde_json::json!({
        "surface_ref": "surface.csv",
        "max_relative_residual": report.max_relative_residual(),
        "residuals": residuals,
        "flags": report.flags,
        "filled_quotes": filled,
    });
    let report_text = serde_json::to_string_pretty(&report_json).expect("report serializes");
    if let Some(path) = out_file(&out_dir, "report.json")? {
        std::fs::write(&path, format!("{report_text}\n"))
            .map_err(|e| CliError::in_file(&path, format!("write failed: {e}")))?;
    }

    // Plot-ready market-vs-model CSV, basis points.
    if let Some(path) = out_file(&out_dir, "fit.csv")? {
        let mut wtr = csv::Writer::from_path(&path)
            .map_err(|e| CliError::in_file(&path, format!("cannot write: {e}")))?;
        wtr.write_record(["expiry", "tenor", "market_iv", "model_iv"])
            .map_err(|e| CliError::in_file(&path, format!("write failed: {e}")))?;
        for r in &report.residuals {
            wtr.write_record([
                r.expiry.to_string(),
                r.tenor.to_string(),
                (r.market_iv / BP).to_string(),
                (r.model_iv / BP).to_string(),
            ])
            .map_err(|e| CliError::in_file(&path, format!("write failed: {e}")))?;
        }
        wtr.flush()
            .map_err(|e| CliError::in_file(&path, format!("write failed: {e}")))?;
    }

    println!("{report_text}");
    if report.flags.is_empty() {
        eprintln!(
            "calibrated {} quotes, max relative residual {:.3e}",
            report.residuals.len(),
            report.max_relative_residual()
        );
        Ok(0)
    } else {
        for f in &report.flags {
            eprintln!(
                "arbitrage flag: expiry {}y tenor {}y ({:?}, detail {:.6e})",
                f.expiry, f.tenor, f.kind, f.detail
            );
        }
        Ok(1)
    }
}

/// `mc-validate`: Monte-Carlo vs closed form on the request grid, one JSON
/// line per instrument. Exit 1 when any gap exceeds `mc_band_k` standard
/// errors.
pub fn cmd_mc_validate(cfg: &RunConfig) -> Result<u8> {
    let specs = resolve_specs(cfg)?;
    let curve = load_curve_checked(cfg, max_spec_maturity(&specs))?;
    let spread = load_spread_opt(cfg)?;
    let surface = load_surface_checked(cfg)?;
    let mc_cfg = cfg.mc_config();

    eprintln!(
        "mc-validate: {} paths, seed {}, antithetic {}, drift {}, normals {}",
        mc_cfg.n_paths,
        mc_cfg.seed,
        mc_cfg.antithetic,
        if mc_cfg.drift_enabled { "on" } else { "OFF (negative control)" },
        NORMAL_SAMPLER
    );

    let mut lines = Vec::with_capacity(specs.len());
    let mut all_within_band = true;
    for spec in &specs {
        let cf = atm_price(&surface, &curve, spread.as_ref(), spec, cfg.convention)?;
        let mc = price_swaption_mc(
            &surface,
            &curve,
            spread.as_ref(),
            spec,
            cfg.convention,
            &mc_cfg,
        )?;
        let record = McValidateRecord {
            expiry: spec.expiry(),
            tenor: spec.tenor(),
            mc_iv: mc.normal_iv,
            cf_iv: cf.normal_iv,
            std_err: mc.iv_std_error,
            n_paths: mc.n_paths,
            seed: mc_cfg.seed,
        };
        if (mc.normal_iv - cf.normal_iv).abs() > cfg.mc_band_k * mc.iv_std_error {
            all_within_band = false;
            eprintln!(
                "band violation at ({}y, {}y): |{} - {}| > {} * {}",
                spec.expiry(),
                spec.tenor(),
                mc.normal_iv,
                cf.normal_iv,
                cfg.mc_band_k,
                mc.iv_std_error
            );
        }
        lines.push(serde_json::to_string(&record).expect("record serializes"));
    }

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in &lines {
        writeln!(out, "{line}").map_err(|e| CliError::Malformed(format!("stdout: {e}")))?;
    }
    if let Some(path) = out_file(&cfg.out_dir, "mc_validate.jsonl")? {
        write_lines(&path, &lines)?;
    }
    Ok(if all_within_band { 0 } else { 1 })
}

/// `arb-scan`: run the bootstrap, report flags with suggested exclusions.
/// Exit 1 when any flag is present.
pub fn cmd_arb_scan(cfg: &RunConfig) -> Result<u8> {
    let (quotes, curve) = load_quotes_for_run(cfg)?;
    let spread = load_spread_opt(cfg)?;
    let flags = arb_scan(
        &quotes,
        &curve,
        spread.as_ref(),
        cfg.convention,
        &cfg.calibration_config(),
    )?;

    let lines = flag_lines(&flags);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in &lines {
        writeln!(out, "{line}").map_err(|e| CliError::Malformed(format!("stdout: {e}")))?;
    }
    if let Some(path) = out_file(&cfg.out_dir, "flags.json")? {
        let text = serde_json::to_string_pretty(&flags).expect("flags serialize");
        std::fs::write(&path, format!("{text}\n"))
            .map_err(|e| CliError::in_file(&path, format!("write failed: {e}")))?;
    }
    if flags.is_empty() {
        eprintln!("no arbitrage flags");
        Ok(0)
    } else {
        for f in &flags {
            eprintln!(
                "arbitrage flag: expiry {}y tenor {}y ({:?}); exclusions that clear it: {:?}",
                f.expiry, f.tenor, f.kind, f.suggested_exclusions
            );
        }
        Ok(1)
    }
}
