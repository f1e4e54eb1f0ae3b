//! File formats: curve / spread / quote / surface CSVs with sidecar
//! metadata, plus the JSON report records.
//!
//! Every CSV has a header row. A sidecar metadata file lives next to its
//! CSV with `.meta` appended to the file name (`curve.csv` ->
//! `curve.csv.meta`) and holds TOML key-value pairs. Quote IVs are in basis
//! points per sqrt-year in files and converted to absolute rate units on
//! load; JSON outputs carry absolute units.

use std::path::{Path, PathBuf};

use hjmvol_core::{
    CurveInput, DiscountCurve, ForwardVolSurface, SpreadCurve, SwaptionQuote,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Basis points per unit rate.
pub const BP: f64 = 1e-4;

fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::in_file(path, format!("cannot open: {e}")))
}

fn check_headers(path: &Path, reader: &mut csv::Reader<std::fs::File>, expected: &[&str]) -> Result<()> {
    let headers = reader
        .headers()
        .map_err(|e| CliError::in_file(path, format!("cannot read header: {e}")))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(CliError::in_file(
            path,
            format!("expected header '{}', got '{}'", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn parse_field(path: &Path, line: u64, field: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|e| {
        CliError::in_file(path, format!("record {line}: bad {field} '{value}': {e}"))
    })
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CurveMeta {
    mode: String,
    compounding: String,
}

impl Default for CurveMeta {
    fn default() -> Self {
        Self {
            mode: "rate".into(),
            compounding: "continuous".into(),
        }
    }
}

fn load_meta<T: for<'de> Deserialize<'de> + Default>(path: &Path, required: bool) -> Result<T> {
    let meta = meta_path(path);
    match std::fs::read_to_string(&meta) {
        Ok(text) => toml::from_str(&text)
            .map_err(|e| CliError::in_file(&meta, format!("invalid metadata: {e}"))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound && !required => Ok(T::default()),
        Err(e) => Err(CliError::in_file(&meta, format!("cannot read metadata: {e}"))),
    }
}

fn read_pillars(path: &Path, headers: &[&str]) -> Result<Vec<(f64, f64)>> {
    let mut rdr = reader(path)?;
    check_headers(path, &mut rdr, headers)?;
    let mut pillars = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record =
            record.map_err(|e| CliError::in_file(path, format!("record {}: {e}", k + 1)))?;
        if record.len() != 2 {
            return Err(CliError::in_file(path, format!("record {}: expected 2 fields", k + 1)));
        }
        pillars.push((
            parse_field(path, k as u64 + 1, headers[0], &record[0])?,
            parse_field(path, k as u64 + 1, headers[1], &record[1])?,
        ));
    }
    Ok(pillars)
}

/// Load a discount curve from `maturity,value` CSV plus sidecar metadata
/// (`mode = "rate" | "df"`, `compounding = "continuous"`). A missing sidecar
/// defaults to continuously compounded zero rates.
pub fn load_curve(path: &Path) -> Result<DiscountCurve> {
    let meta: CurveMeta = load_meta(path, false)?;
    if meta.compounding != "continuous" {
        return Err(CliError::in_file(
            path,
            format!("unsupported compounding '{}' (only 'continuous')", meta.compounding),
        ));
    }
    let mode = match meta.mode.as_str() {
        "rate" => CurveInput::ZeroRate,
        "df" => CurveInput::DiscountFactor,
        other => {
            return Err(CliError::in_file(
                path,
                format!("unknown curve mode '{other}' (expected 'rate' or 'df')"),
            ))
        }
    };
    let pillars = read_pillars(path, &["maturity", "value"])?;
    Ok(DiscountCurve::build(&pillars, mode)?)
}

/// Load a spread curve from `time,spread_factor` CSV.
pub fn load_spread(path: &Path) -> Result<SpreadCurve> {
    let pillars = read_pillars(path, &["time", "spread_factor"])?;
    Ok(SpreadCurve::new(&pillars)?)
}

/// Load ATM quotes from `expiry,tenor,normal_iv_bp` CSV (IVs in basis
/// points per sqrt-year).
pub fn load_quotes(path: &Path) -> Result<Vec<SwaptionQuote>> {
    let mut rdr = reader(path)?;
    check_headers(path, &mut rdr, &["expiry", "tenor", "normal_iv_bp"])?;
    let mut quotes = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record =
            record.map_err(|e| CliError::in_file(path, format!("record {}: {e}", k + 1)))?;
        if record.len() != 3 {
            return Err(CliError::in_file(path, format!("record {}: expected 3 fields", k + 1)));
        }
        let line = k as u64 + 1;
        quotes.push(SwaptionQuote::new(
            parse_field(path, line, "expiry", &record[0])?,
            parse_field(path, line, "tenor", &record[1])?,
            parse_field(path, line, "normal_iv_bp", &record[2])? * BP,
        ));
    }
    if quotes.is_empty() {
        return Err(CliError::in_file(path, "no quotes"));
    }
    Ok(quotes)
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceMeta {
    dt: f64,
    max_index: usize,
}

/// Load a forward-vol surface from sparse `i,j,sigma` CSV triples; the
/// sidecar metadata (`dt`, `max_index`) is required.
pub fn load_surface(path: &Path) -> Result<ForwardVolSurface> {
    let meta: SurfaceMeta = load_meta(path, true)?;
    let mut surface = ForwardVolSurface::zeros(meta.dt, meta.max_index)?;
    let mut rdr = reader(path)?;
    check_headers(path, &mut rdr, &["i", "j", "sigma"])?;
    for (k, record) in rdr.records().enumerate() {
        let record =
            record.map_err(|e| CliError::in_file(path, format!("record {}: {e}", k + 1)))?;
        if record.len() != 3 {
            return Err(CliError::in_file(path, format!("record {}: expected 3 fields", k + 1)));
        }
        let line = k + 1;
        let parse_index = |field: &str, value: &str| -> Result<usize> {
            value.parse::<usize>().map_err(|e| {
                CliError::in_file(path, format!("record {line}: bad {field} '{value}': {e}"))
            })
        };
        let i = parse_index("i", &record[0])?;
        let j = parse_index("j", &record[1])?;
        let sigma = parse_field(path, line as u64, "sigma", &record[2])?;
        surface.set(i, j, sigma)?;
    }
    Ok(surface)
}

/// Write a surface as sparse nonzero `i,j,sigma` triples plus its sidecar.
pub fn write_surface(path: &Path, surface: &ForwardVolSurface) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)
        .map_err(|e| CliError::in_file(path, format!("cannot write: {e}")))?;
    wtr.write_record(["i", "j", "sigma"])
        .map_err(|e| CliError::in_file(path, format!("write failed: {e}")))?;
    for (i, j, v) in surface.cells() {
        if v != 0.0 {
            wtr.write_record([i.to_string(), j.to_string(), v.to_string()])
                .map_err(|e| CliError::in_file(path, format!("write failed: {e}")))?;
        }
    }
    wtr.flush()
        .map_err(|e| CliError::in_file(path, format!("write failed: {e}")))?;

    let meta = SurfaceMeta {
        dt: surface.dt(),
        max_index: surface.max_index(),
    };
    let meta_file = meta_path(path);
    std::fs::write(
        &meta_file,
        toml::to_string(&meta).expect("surface metadata serializes"),
    )
    .map_err(|e| CliError::in_file(&meta_file, format!("cannot write metadata: {e}")))?;
    Ok(())
}

/// One line of `price` output.
#[derive(Debug, Serialize)]
pub struct PriceRecord {
    pub expiry: f64,
    pub tenor: f64,
    pub price: f64,
    pub normal_iv: f64,
    pub sigma_total: f64,
    pub annuity: f64,
}

/// One line of `mc-validate` output.
#[derive(Debug, Serialize)]
pub struct McValidateRecord {
    pub expiry: f64,
    pub tenor: f64,
    pub mc_iv: f64,
    pub cf_iv: f64,
    pub std_err: f64,
    pub n_paths: usize,
    pub seed: u64,
}

/// Residual entry of the calibration report (IVs in basis points).
#[derive(Debug, Serialize)]
pub struct ResidualRecord {
    pub expiry: f64,
    pub tenor: f64,
    pub market_iv_bp: f64,
    pub model_iv_bp: f64,
    pub diff_bp: f64,
    pub flagged: bool,
    pub filled: bool,
}

/// Filled-quote entry of the calibration report (IV in basis points).
#[derive(Debug, Serialize)]
pub struct FilledQuoteRecord {
    pub expiry: f64,
    pub tenor: f64,
    pub normal_iv_bp: f64,
}
