//! End-to-end tests of the `cyberbond` binary: command outputs, rerun
//! determinism, and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cyberbond"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn sample_events(dir: &Path) -> PathBuf {
    let path = dir.join("events.csv");
    let mut csv = String::from("date,loss_usd,category\n");
    // Synthetic but realistic: gaps of a few days, sparse disclosed losses.
    let rows = [
        ("2018-01-02", "", "fraud"),
        ("2018-01-05", "1200000.50", "data_breach"),
        ("2018-01-05", "", "fraud"),
        ("2018-01-11", "98000.00", "fraud"),
        ("2018-01-14", "", ""),
        ("2018-01-21", "40000000.00", "data_breach"),
        ("2018-01-25", "", "ransomware"),
        ("2018-02-02", "7300.25", "fraud"),
        ("2018-02-04", "", "fraud"),
        ("2018-02-13", "210000.00", "data_breach"),
        ("2018-02-17", "", ""),
        ("2018-02-26", "3100000.00", "fraud"),
        ("2018-03-01", "", "data_breach"),
        ("2018-03-09", "56000.10", "fraud"),
        ("2018-03-12", "", "ransomware"),
        ("2018-03-25", "880000.00", "fraud"),
        ("2018-03-29", "", "fraud"),
        ("2018-04-09", "12500000.00", "data_breach"),
        ("2018-04-14", "", "fraud"),
        ("2018-04-30", "430.75", "fraud"),
    ];
    for (d, l, c) in rows {
        csv.push_str(&format!("{d},{l},{c}\n"));
    }
    write(&path, &csv);
    path
}

fn sample_config(dir: &Path, n_paths: usize) -> PathBuf {
    let path = dir.join("config.json");
    let config = format!(
        r#"{{
  "out_dir": "{out}",
  "bond": {{
    "notional": 15000000.0,
    "maturity_days": 1095,
    "coupon_days": [182, 365, 547, 730, 912, 1095],
    "coupon_value": 764055.87,
    "funding_rate": 0.0152,
    "coupon_trigger": 2.04e9,
    "notional_trigger": 2.04e9
  }},
  "simulation": {{
    "horizon_days": 1095,
    "n_paths": {n_paths},
    "master_seed": 20190815,
    "frequency": {{ "family": "exponential", "params": {{ "rate": 0.0211 }} }},
    "severity": {{ "family": "log_normal", "params": {{ "location": 14.9179, "scale": 2.3434 }} }}
  }},
  "greeks": {{
    "bump_rel": 0.01,
    "bump_abs_floor": 1e-4,
    "corners": false,
    "confidence_level": 0.99,
    "frequency_ses": [0.0029],
    "severity_ses": [0.2009, 0.1421]
  }}
}}"#,
        out = dir.join("out").display()
    );
    write(&path, &config);
    path
}

#[test]
fn price_writes_reports_and_is_rerun_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_config(dir.path(), 800);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    for out in [&out_a, &out_b] {
        let output = run(&[
            "price",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(
            output.status.success(),
            "{}",
            String::from_utf8_lossy(&output.stderr)
        );
    }

    for file in [
        "pricing.json",
        "quantiles.csv",
        "coupon_survival.csv",
        "notional_survival.csv",
        "probability_of_loss.csv",
    ] {
        let a = read(&out_a.join(file));
        let b = read(&out_b.join(file));
        assert_eq!(a, b, "{file} differs between identical runs");
        assert!(!a.is_empty());
    }

    // The curve files carry the provenance header.
    let text = String::from_utf8(read(&out_a.join("quantiles.csv"))).unwrap();
    assert!(text.starts_with("# config_hash: "));
    assert!(text.contains("# seed: 20190815"));
}

#[test]
fn infinite_trigger_price_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    write(
        &path,
        r#"{
  "bond": {
    "notional": 15000000.0,
    "maturity_days": 1095,
    "coupon_days": [182, 365, 547, 730, 912, 1095],
    "coupon_value": 764055.87,
    "funding_rate": 0.0152
  },
  "simulation": {
    "horizon_days": 1095, "n_paths": 200, "master_seed": 7,
    "frequency": { "family": "exponential", "params": { "rate": 0.0211 } },
    "severity": { "family": "log_normal", "params": { "location": 14.9179, "scale": 2.3434 } }
  }
}"#,
    );
    let out = dir.path().join("out");
    let output = run(&[
        "price",
        "--config",
        path.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&read(&out.join("pricing.json"))).unwrap();
    let price = report["price"].as_f64().unwrap();
    // No triggers: the Monte Carlo price equals the closed form, which sits
    // within 0.02% of 18,797,813.26.
    assert_eq!(price, report["deterministic_price"].as_f64().unwrap());
    assert!(((price - 18_797_813.26) / 18_797_813.26).abs() < 2e-4, "price {price}");
    assert_eq!(report["mc_std_error"].as_f64().unwrap(), 0.0);
}

#[test]
fn fit_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let events = sample_events(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "fit",
            "--events",
            events.to_str().unwrap(),
            "--families",
            "exponential,weibull",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    for file in ["interval_fits.json", "loss_fits.json", "interval_gof.csv", "loss_gof.csv"] {
        assert_eq!(read(&out_a.join(file)), read(&out_b.join(file)), "{file} differs");
    }
}

#[test]
fn different_seed_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_config(dir.path(), 500);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let run_with = |out: &Path, seed: &str| {
        let output = run(&[
            "price",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(output.status.success());
    };
    run_with(&out_a, "1");
    run_with(&out_b, "2");
    assert_ne!(
        read(&out_a.join("quantiles.csv")),
        read(&out_b.join("quantiles.csv"))
    );
}

#[test]
fn fit_writes_reports_for_intervals_and_losses() {
    let dir = tempfile::tempdir().unwrap();
    let events = sample_events(dir.path());
    let out = dir.path().join("out");
    let output = run(&[
        "fit",
        "--events",
        events.to_str().unwrap(),
        "--families",
        "exponential,gamma",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("intervals"));
    assert!(stdout.contains("losses"));
    for file in [
        "interval_fits.json",
        "loss_fits.json",
        "interval_gof.csv",
        "loss_gof.csv",
    ] {
        assert!(out.join(file).exists(), "{file} missing");
    }
    let gof = String::from_utf8(read(&out.join("interval_gof.csv"))).unwrap();
    assert!(gof.contains("chi_square"));
    assert!(gof.contains("kolmogorov_smirnov"));
    assert!(gof.contains("cramer_von_mises"));

    let fits: serde_json::Value =
        serde_json::from_slice(&read(&out.join("interval_fits.json"))).unwrap();
    assert_eq!(fits["fits"].as_array().unwrap().len(), 2);
    assert!(fits["meta"]["config_hash"].is_string());
}

#[test]
fn fit_without_losses_warns_and_still_fits_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.csv");
    write(
        &path,
        "date,loss_usd,category\n2018-01-02,,\n2018-01-05,,\n2018-01-11,,\n2018-01-20,,\n",
    );
    let out = dir.path().join("out");
    let output = run(&[
        "fit",
        "--events",
        path.to_str().unwrap(),
        "--families",
        "exponential",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("no disclosed losses"));
    assert!(out.join("interval_fits.json").exists());
    assert!(!out.join("loss_fits.json").exists());
}

#[test]
fn category_filter_restricts_events() {
    let dir = tempfile::tempdir().unwrap();
    let events = sample_events(dir.path());
    let out = dir.path().join("out");
    let output = run(&[
        "fit",
        "--events",
        events.to_str().unwrap(),
        "--category",
        "fraud",
        "--families",
        "exponential",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("category 'fraud'"));
}

#[test]
fn coupon_methods_produce_quotes() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_config(dir.path(), 600);
    let out = dir.path().join("out");

    let output = run(&[
        "coupon",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "par",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let quote: serde_json::Value =
        serde_json::from_slice(&read(&out.join("coupon_quote.json"))).unwrap();
    assert_eq!(quote["method"], "par_yield");
    assert!(quote["coupon_rate_pct"].as_f64().unwrap() > 0.0);
    assert!(out.join("par_yield_curves.csv").exists());

    let output = run(&[
        "coupon",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "pl",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let quote: serde_json::Value =
        serde_json::from_slice(&read(&out.join("coupon_quote.json"))).unwrap();
    assert_eq!(quote["method"], "probability_of_loss");
}

#[test]
fn greeks_corner_mode_emits_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_config(dir.path(), 400);
    let out = dir.path().join("out");
    let output = run(&[
        "greeks",
        "--config",
        config.to_str().unwrap(),
        "--corners",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_slice(&read(&out.join("greeks.json"))).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["bound"], "lower");
    assert_eq!(rows[1]["bound"], "middle");
    assert_eq!(rows[2]["bound"], "upper");
    assert!(rows[0]["d_rate"].is_null());
    assert!(rows[1]["d_rate"].is_number());
}

#[test]
fn simulate_dumps_paths() {
    let dir = tempfile::tempdir().unwrap();
    let config = sample_config(dir.path(), 50);
    let out = dir.path().join("out");
    let output = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = String::from_utf8(read(&out.join("paths.csv"))).unwrap();
    assert!(text.contains("path_index,day,amount_usd"));
    assert!(text.lines().count() > 50);
}

#[test]
fn exit_code_2_on_config_errors() {
    // Missing config section.
    let output = run(&["price"]);
    assert_eq!(
        output.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );

    // Unreadable config file.
    let output = run(&["price", "--config", "/nonexistent/config.json"]);
    assert_eq!(output.status.code(), Some(2));

    // Config referencing a missing events file.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    write(
        &bad,
        r#"{ "fit": { "events_csv": "/nonexistent/events.csv" } }"#,
    );
    let output = run(&["fit", "--config", bad.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));

    // Missing seed.
    let noseed = dir.path().join("noseed.json");
    write(
        &noseed,
        r#"{
  "bond": { "notional": 1.0, "maturity_days": 10, "coupon_days": [10], "coupon_value": 0.0, "funding_rate": 0.0 },
  "simulation": {
    "horizon_days": 10, "n_paths": 10, "master_seed": null,
    "frequency": { "family": "exponential", "params": { "rate": 1.0 } },
    "severity": { "family": "log_normal", "params": { "location": 0.0, "scale": 1.0 } }
  }
}"#,
    );
    let output = run(&["price", "--config", noseed.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("master_seed"));

    // Unknown coupon method.
    let config = sample_config(dir.path(), 10);
    let output = run(&[
        "coupon",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "bogus",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn exit_code_3_on_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.csv");
    write(&path, "date,loss_usd,category\nnot-a-date,5,\n");
    let output = run(&[
        "fit",
        "--events",
        path.to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(
        output.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(String::from_utf8_lossy(&output.stderr).contains("row 2"));
}
