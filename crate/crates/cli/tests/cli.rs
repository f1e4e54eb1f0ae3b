//! End-to-end tests of the `hjmvol` binary: exit codes, file outputs, and
//! determinism, over fixtures written to a temp directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hjmvol_cli::io;
use hjmvol_core::{
    atm_price, Convention, DiscountCurve, ForwardVolSurface, SwaptionSpec,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hjmvol"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stdout_lines(output: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&output.stdout)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("stdout line is JSON"))
        .collect()
}

fn write_flat_curve(dir: &Path) -> PathBuf {
    let path = dir.join("curve.csv");
    let mut text = String::from("maturity,value\n");
    for k in 1..=130 {
        text.push_str(&format!("{},0.02\n", k as f64 * 0.5));
    }
    fs::write(&path, text).unwrap();
    path
}

fn write_surface(dir: &Path, surface: &ForwardVolSurface) -> PathBuf {
    let path = dir.join("surface.csv");
    io::write_surface(&path, surface).unwrap();
    path
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn spec_a1(expiry: f64, tenor: f64) -> SwaptionSpec {
    SwaptionSpec::new(expiry, tenor, 2)
        .unwrap()
        .with_day_count(1.0)
        .unwrap()
}

/// Quote CSV (bp IVs) priced off a generator surface, with optional
/// per-quote inflation.
fn write_quotes(
    dir: &Path,
    generator: &ForwardVolSurface,
    grid: &[(f64, f64)],
    inflate: impl Fn(f64, f64) -> f64,
) -> PathBuf {
    let curve = DiscountCurve::flat(0.02, 65.0).unwrap();
    let mut text = String::from("expiry,tenor,normal_iv_bp\n");
    for &(expiry, tenor) in grid {
        let spec = spec_a1(expiry, tenor);
        let iv = atm_price(generator, &curve, None, &spec, Convention::Single)
            .unwrap()
            .normal_iv;
        let bp = iv * inflate(expiry, tenor) / 1e-4;
        text.push_str(&format!("{expiry},{tenor},{bp}\n"));
    }
    let path = dir.join("quotes.csv");
    fs::write(&path, text).unwrap();
    path
}

fn arbitrage_grid() -> Vec<(f64, f64)> {
    let mut grid = Vec::new();
    for &e in &[1.0, 5.0, 10.0, 25.0, 30.0] {
        for &t in &[1.0, 5.0, 10.0] {
            grid.push((e, t));
        }
    }
    grid
}

fn arbitrage_inflation(expiry: f64, tenor: f64) -> f64 {
    if (expiry - 25.0).abs() < 1e-9 || ((expiry - 30.0).abs() < 1e-9 && tenor > 1.0) {
        1.35
    } else {
        1.0
    }
}

const BASE_CONFIG: &str = "day_count_factor = 1.0\ntenor_fill = false\n";

#[test]
fn price_zero_surface_gives_zero_prices() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_flat_curve(dir.path());
    let surface = write_surface(
        dir.path(),
        &ForwardVolSurface::zeros(0.5, 40).unwrap(),
    );
    let config = write_config(
        dir.path(),
        &format!("{BASE_CONFIG}expiries = [1.0, 2.0]\ntenors = [1.0, 5.0]\n"),
    );
    let out = run(&[
        "price",
        "--config",
        config.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--surface",
        surface.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let lines = stdout_lines(&out);
    assert_eq!(lines.len(), 4);
    for line in lines {
        assert_eq!(line["price"].as_f64().unwrap(), 0.0);
        assert_eq!(line["normal_iv"].as_f64().unwrap(), 0.0);
        assert!(line["annuity"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn price_missing_curve_exits_2_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let surface = write_surface(dir.path(), &ForwardVolSurface::zeros(0.5, 8).unwrap());
    let config = write_config(
        dir.path(),
        &format!("{BASE_CONFIG}expiries = [1.0]\ntenors = [1.0]\n"),
    );
    let missing = dir.path().join("nope.csv");
    let out = run(&[
        "price",
        "--config",
        config.to_str().unwrap(),
        "--curve",
        missing.to_str().unwrap(),
        "--surface",
        surface.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nope.csv"), "diagnostic must name the path: {stderr}");
}

#[test]
fn price_off_grid_expiry_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_flat_curve(dir.path());
    let surface = write_surface(dir.path(), &ForwardVolSurface::zeros(0.5, 8).unwrap());
    let config = write_config(
        dir.path(),
        &format!("{BASE_CONFIG}expiries = [1.3]\ntenors = [1.0]\n"),
    );
    let out = run(&[
        "price",
        "--config",
        config.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--surface",
        surface.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn calibrate_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_flat_curve(dir.path());
    let generator = ForwardVolSurface::constant(0.5, 40, 0.008).unwrap();
    let grid: Vec<(f64, f64)> = [1.0, 2.0, 5.0]
        .iter()
        .flat_map(|&e| [1.0, 2.0, 5.0].iter().map(move |&t| (e, t)))
        .collect();
    let quotes = write_quotes(dir.path(), &generator, &grid, |_, _| 1.0);
    let config = write_config(
        dir.path(),
        &format!("{BASE_CONFIG}expiries = [1.0, 2.0, 5.0]\ntenors = [1.0, 2.0, 5.0]\n"),
    );
    let out_dir = dir.path().join("out");

    let out = run(&[
        "calibrate",
        "--config",
        config.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--quotes",
        quotes.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert!(report["max_relative_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(report["flags"].as_array().unwrap().len(), 0);

    // The plot CSV is well-formed.
    let fit = fs::read_to_string(out_dir.join("fit.csv")).unwrap();
    assert!(fit.starts_with("expiry,tenor,market_iv,model_iv"));
    assert_eq!(fit.trim_end().lines().count(), grid.len() + 1);

    // Price off the written surface files: the IVs must reproduce the quotes.
    let surface_csv = out_dir.join("surface.csv");
    let priced = run(&[
        "price",
        "--config",
        config.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--surface",
        surface_csv.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&priced), 0, "stderr: {}", String::from_utf8_lossy(&priced.stderr));
    let flat_curve = DiscountCurve::flat(0.02, 65.0).unwrap();
    for line in stdout_lines(&priced) {
        let expiry = line["expiry"].as_f64().unwrap();
        let tenor = line["tenor"].as_f64().unwrap();
        let spec = spec_a1(expiry, tenor);
        let expected = atm_price(&generator, &flat_curve, None, &spec, Convention::Single)
            .unwrap()
            .normal_iv;
        let got = line["normal_iv"].as_f64().unwrap();
        assert!(
            (got - expected).abs() <= 1e-8 * expected,
            "({expiry}, {tenor}): {got} vs {expected}"
        );
    }
}

#[test]
fn calibrate_zero_iv_quotes_gives_zero_surface() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_flat_curve(dir.path());
    let quotes = dir.path().join("quotes.csv");
    fs::write(
        &quotes,
        "expiry,tenor,normal_iv_bp\n1,1,0\n1,5,0\n2,1,0\n2,5,0\n",
    )
    .unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "calibrate",
        "--config",
        config.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--quotes",
        quotes.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    // Sparse surface output: zero cells are omitted, so only the header remains.
    let surface = fs::read_to_string(out_dir.join("surface.csv")).unwrap();
    assert_eq!(surface.trim_end().lines().count(), 1);
    let loaded = io::load_surface(&out_dir.join("surface.csv")).unwrap();
    assert!(loaded.cells().all(|(_, _, v)| v == 0.0));
}

#[test]
fn calibrate_arbitrage_fixture_exits_1_with_flag() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_flat_curve(dir.path());
    let generator = ForwardVolSurface::constant(0.5, 80, 0.006).unwrap();
    let quotes = write_quotes(dir.path(), &generator, &arbitrage_grid(), arbitrage_inflation);
    let config = write_config(dir.path(), BASE_CONFIG);
    let out_dir = dir.path().join("out");

    let out = run(&[
        "calibrate",
        "--config",
        config.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--quotes",
        quotes.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // Outputs are still written, and the flag names (30y, tenor 1).
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    let flags = report["flags"].as_array().unwrap();
    assert_eq!(flags.len(), 1);
    assert_eq!(flags[0]["expiry"].as_f64().unwrap(), 30.0);
    assert_eq!(flags[0]["tenor"].as_f64().unwrap(), 1.0);
    assert!(out_dir.join("surface.csv").exists());
}

#[test]
fn arb_scan_suggests_exclusion_and_clears() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_flat_curve(dir.path());
    let generator = ForwardVolSurface::constant(0.5, 80, 0.006).unwrap();
    let quotes = write_quotes(dir.path(), &generator, &arbitrage_grid(), arbitrage_inflation);
    let config = write_config(dir.path(), BASE_CONFIG);

    let out = run(&[
        "arb-scan",
        "--config",
        config.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--quotes",
        quotes.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let flags = stdout_lines(&out);
    assert_eq!(flags.len(), 1);
    assert_eq!(flags[0]["expiry"].as_f64().unwrap(), 30.0);
    assert_eq!(flags[0]["tenor"].as_f64().unwrap(), 1.0);
    assert_eq!(
        flags[0]["suggested_exclusions"].as_array().unwrap(),
        &vec![serde_json::json!(25.0)]
    );

    // Applying the suggested exclusion clears the scan.
    let cleared = run(&[
        "arb-scan",
        "--config",
        config.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--quotes",
        quotes.to_str().unwrap(),
        "--exclude",
        "expiry=25",
    ]);
    assert_eq!(
        exit_code(&cleared),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&cleared.stderr)
    );
    assert!(stdout_lines(&cleared).is_empty());
}

#[test]
fn arb_scan_empty_quote_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_flat_curve(dir.path());
    let quotes = dir.path().join("quotes.csv");
    fs::write(&quotes, "expiry,tenor,normal_iv_bp\n").unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out = run(&[
        "arb-scan",
        "--config",
        config.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--quotes",
        quotes.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn mc_validate_zero_surface_agrees_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_flat_curve(dir.path());
    let surface = write_surface(dir.path(), &ForwardVolSurface::zeros(0.5, 12).unwrap());
    let config = write_config(
        dir.path(),
        &format!("{BASE_CONFIG}expiries = [1.0]\ntenors = [1.0, 2.0]\nn_paths = 200\n"),
    );
    let out = run(&[
        "mc-validate",
        "--config",
        config.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--surface",
        surface.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for line in stdout_lines(&out) {
        assert_eq!(line["mc_iv"].as_f64().unwrap(), 0.0);
        assert_eq!(line["cf_iv"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn mc_validate_flat_fixture_within_band_and_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_flat_curve(dir.path());
    let surface = write_surface(
        dir.path(),
        &ForwardVolSurface::constant(0.5, 20, 0.01).unwrap(),
    );
    let grid = "expiries = [2.0, 5.0]\ntenors = [2.0, 5.0]\nn_paths = 10000\nseed = 42\n";
    let config = write_config(dir.path(), &format!("{BASE_CONFIG}{grid}"));
    let out = run(&[
        "mc-validate",
        "--config",
        config.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--surface",
        surface.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for line in stdout_lines(&out) {
        let gap = (line["mc_iv"].as_f64().unwrap() - line["cf_iv"].as_f64().unwrap()).abs();
        assert!(gap <= 3.0 * line["std_err"].as_f64().unwrap());
        assert_eq!(line["n_paths"].as_u64().unwrap(), 10_000);
        assert_eq!(line["seed"].as_u64().unwrap(), 42);
    }

    // Negative control: dropping the drift must push the comparison out of
    // band somewhere.
    let broken = write_config(
        dir.path(),
        &format!("{BASE_CONFIG}{grid}disable_drift = true\n"),
    );
    let out = run(&[
        "mc-validate",
        "--config",
        broken.to_str().unwrap(),
        "--curve",
        curve.to_str().unwrap(),
        "--surface",
        surface.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_flat_curve(dir.path());
    let generator = ForwardVolSurface::constant(0.5, 40, 0.008).unwrap();
    let grid: Vec<(f64, f64)> = [1.0, 2.0]
        .iter()
        .flat_map(|&e| [1.0, 5.0].iter().map(move |&t| (e, t)))
        .collect();
    let quotes = write_quotes(dir.path(), &generator, &grid, |_, _| 1.0);
    let config = write_config(
        dir.path(),
        &format!("{BASE_CONFIG}expiries = [1.0, 2.0]\ntenors = [1.0]\nn_paths = 2000\nseed = 7\n"),
    );

    let mut artifacts: Vec<Vec<u8>> = Vec::new();
    for run_dir in ["a", "b"] {
        let out_dir = dir.path().join(run_dir);
        let out = run(&[
            "calibrate",
            "--config",
            config.to_str().unwrap(),
            "--curve",
            curve.to_str().unwrap(),
            "--quotes",
            quotes.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0);
        let surface_csv = out_dir.join("surface.csv");
        let mc = run(&[
            "mc-validate",
            "--config",
            config.to_str().unwrap(),
            "--curve",
            curve.to_str().unwrap(),
            "--surface",
            surface_csv.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&mc), 0, "stderr: {}", String::from_utf8_lossy(&mc.stderr));
        let mut bytes = fs::read(out_dir.join("surface.csv")).unwrap();
        bytes.extend(fs::read(out_dir.join("report.json")).unwrap());
        bytes.extend(fs::read(out_dir.join("fit.csv")).unwrap());
        bytes.extend(fs::read(out_dir.join("mc_validate.jsonl")).unwrap());
        artifacts.push(bytes);
    }
    assert_eq!(artifacts[0], artifacts[1], "outputs differ between identical runs");
}

#[test]
fn config_env_var_supplies_default_path() {
    let dir = tempfile::tempdir().unwrap();
    let curve = write_flat_curve(dir.path());
    let surface = write_surface(dir.path(), &ForwardVolSurface::zeros(0.5, 8).unwrap());
    let config = write_config(
        dir.path(),
        &format!(
            "{BASE_CONFIG}expiries = [1.0]\ntenors = [1.0]\ncurve = '{}'\nsurface = '{}'\n",
            curve.display(),
            surface.display()
        ),
    );
    let out = bin()
        .arg("price")
        .env("HJMVOL_CONFIG", &config)
        .output()
        .expect("binary runs");
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_lines(&out).len(), 1);
}
