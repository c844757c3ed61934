//! Command implementations. Every command is a pure function of its
//! effective configuration and input files: outputs are byte-identical
//! across reruns and carry the configuration hash and seed in a header.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use cyberbond::bond::{self, GreekBumps, PricingResult};
use cyberbond::coupon::{self, uniform_trigger_grid, CouponQuote};
use cyberbond::distributions::{DistributionSpec, Family};
use cyberbond::event_data;
use cyberbond::fitting::{self, fit_mle_auto, ConfidenceBox, ParamInterval};
use cyberbond::gof::{self, GofReport};
use cyberbond::lossmodel::{self, PathEnsemble, SimulationConfig};

use crate::config::{FitSection, RunConfig};
use crate::CliError;

/// Provenance stamped into every artifact.
pub struct Meta {
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl Meta {
    fn csv_header(&self) -> String {
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        format!("# config_hash: {}\n# seed: {}\n", self.config_hash, seed)
    }

    fn json_value(&self) -> serde_json::Value {
        json!({
            "config_hash": self.config_hash,
            "seed": self.seed,
        })
    }
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &PathBuf, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &PathBuf, meta: &Meta, payload: &T) -> Result<(), CliError> {
    let mut value = serde_json::to_value(payload)
        .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
    if let serde_json::Value::Object(map) = &mut value {
        map.insert("meta".to_string(), meta.json_value());
    }
    let text = serde_json::to_string_pretty(&value)
        .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
    write_text(path, &(text + "\n"))
}

// ---------------------------------------------------------------- fit ----

#[derive(Serialize)]
struct FamilyReport {
    family: String,
    params: Vec<f64>,
    param_names: Vec<String>,
    standard_errors: Vec<f64>,
    log_likelihood: f64,
    converged: bool,
    n_obs: usize,
    gof: Vec<GofReport>,
}

#[derive(Serialize)]
struct FitReport {
    series: String,
    n_obs: usize,
    fits: Vec<FamilyReport>,
}

fn parse_families(names: &[String]) -> Result<Vec<Family>, CliError> {
    names
        .iter()
        .map(|n| n.parse::<Family>().map_err(CliError::Config))
        .collect()
}

/// Default interval family sets: the whole-database candidates use the
/// central Fisher; category groups use the noncentral Fisher.
fn default_interval_families(category_filtered: bool) -> Vec<Family> {
    if category_filtered {
        vec![
            Family::ChiSquare,
            Family::Exponential,
            Family::NoncentralFisher,
            Family::Gamma,
            Family::Weibull,
        ]
    } else {
        vec![
            Family::Weibull,
            Family::Gamma,
            Family::ChiSquare,
            Family::Fisher,
            Family::Exponential,
        ]
    }
}

fn fit_series(series: &str, data: &[f64], families: &[Family]) -> Result<FitReport, CliError> {
    let mut fits = Vec::new();
    for &family in families {
        let fit = fit_mle_auto(family, data)
            .map_err(|e| CliError::Numerical(format!("{series}/{family}: {e}")))?;
        if !fit.converged {
            return Err(CliError::Numerical(format!(
                "{series}/{family}: fit did not converge"
            )));
        }
        let n_fitted = family.n_params();
        let gof_reports = vec![
            gof::chi_square_test_auto(data, &fit.spec, n_fitted)
                .map_err(|e| CliError::Numerical(format!("{series}/{family}: {e}")))?,
            gof::ks_test(data, &fit.spec)
                .map_err(|e| CliError::Numerical(format!("{series}/{family}: {e}")))?,
            gof::cvm_test(data, &fit.spec)
                .map_err(|e| CliError::Numerical(format!("{series}/{family}: {e}")))?,
        ];
        fits.push(FamilyReport {
            family: family.name().to_string(),
            params: fit.spec.params(),
            param_names: family.param_names().iter().map(|s| s.to_string()).collect(),
            standard_errors: fit.standard_errors.clone(),
            log_likelihood: fit.log_likelihood,
            converged: fit.converged,
            n_obs: fit.n_obs,
            gof: gof_reports,
        });
    }
    Ok(FitReport {
        series: series.to_string(),
        n_obs: data.len(),
        fits,
    })
}

fn gof_csv(report: &FitReport, meta: &Meta) -> String {
    let mut out = meta.csv_header();
    out.push_str("family,test,statistic,p_value,df\n");
    for fit in &report.fits {
        for g in &fit.gof {
            let df = g.df.map_or(String::new(), |d| d.to_string());
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fit.family, g.test, g.statistic, g.p_value, df
            );
        }
    }
    out
}

fn print_fit_table(report: &FitReport) {
    println!("\n{} (n = {})", report.series, report.n_obs);
    println!(
        "{:<18} {:<34} {:<28} {:>12} {:>10}",
        "family", "parameters", "standard errors", "statistic", "p-value"
    );
    for fit in &report.fits {
        let params: Vec<String> = fit
            .param_names
            .iter()
            .zip(&fit.params)
            .map(|(n, v)| format!("{n}={v:.4}"))
            .collect();
        let ses: Vec<String> = fit
            .standard_errors
            .iter()
            .map(|v| format!("{v:.4}"))
            .collect();
        for (i, g) in fit.gof.iter().enumerate() {
            let (family, params, ses) = if i == 0 {
                (fit.family.as_str(), params.join(" "), ses.join(" "))
            } else {
                ("", String::new(), String::new())
            };
            println!(
                "{:<18} {:<34} {:<28} {:>12.4} {:>10.4}  {}",
                family, params, ses, g.statistic, g.p_value, g.test
            );
        }
    }
}

pub fn cmd_fit(
    config: &RunConfig,
    fit: &FitSection,
    families_override: Option<&[String]>,
    category_override: Option<&str>,
) -> Result<(), CliError> {
    ensure_out_dir(&config.out_dir)?;
    let meta = Meta {
        config_hash: config.hash(),
        seed: None,
    };

    let events = event_data::load_events(&fit.events_csv)?;
    let category = category_override.or(fit.category.as_deref());
    let events = match category {
        Some(tag) => {
            let filtered = event_data::filter_category(&events, tag);
            println!(
                "category '{tag}': {} of {} events",
                filtered.len(),
                events.len()
            );
            filtered
        }
        None => events,
    };

    let interval_families = match (families_override, &fit.interval_families) {
        (Some(names), _) => {
            parse_families(&names.iter().map(|s| s.to_string()).collect::<Vec<_>>())?
        }
        (None, Some(names)) => parse_families(names)?,
        (None, None) => default_interval_families(category.is_some()),
    };
    let loss_families = match &fit.loss_families {
        Some(names) => parse_families(names)?,
        None => vec![Family::LogNormal],
    };

    let intervals = event_data::prepare_intervals(&events)?;
    let interval_data = intervals.as_f64();
    let interval_report = fit_series("intervals", &interval_data, &interval_families)?;
    print_fit_table(&interval_report);
    write_json(
        &config.out_dir.join("interval_fits.json"),
        &meta,
        &interval_report,
    )?;
    write_text(
        &config.out_dir.join("interval_gof.csv"),
        &gof_csv(&interval_report, &meta),
    )?;

    let losses = event_data::extract_losses(&events);
    if losses.is_empty() {
        eprintln!("warning: no disclosed losses; fitted intervals only");
        return Ok(());
    }
    let loss_report = fit_series("losses", losses.values(), &loss_families)?;
    print_fit_table(&loss_report);
    write_json(&config.out_dir.join("loss_fits.json"), &meta, &loss_report)?;
    write_text(
        &config.out_dir.join("loss_gof.csv"),
        &gof_csv(&loss_report, &meta),
    )?;
    Ok(())
}

// -------------------------------------------------------------- price ----

#[derive(Serialize)]
struct PricingReport {
    price: f64,
    mc_std_error: f64,
    n_paths: usize,
    deterministic_price: f64,
    yield_pct: f64,
    spread_pct: f64,
    coupon_trigger: Option<f64>,
    notional_trigger: Option<f64>,
}

fn quantile_grid(
    ensemble: &PathEnsemble,
    low: f64,
    high: f64,
    points: usize,
) -> Result<Vec<f64>, CliError> {
    let qs = lossmodel::total_loss_quantiles(&ensemble.paths, &[low, high])
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(uniform_trigger_grid(qs[0], qs[1], points))
}

pub fn cmd_price(config: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(&config.out_dir)?;
    let terms = config.bond()?.to_terms();
    terms
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let sim = config.simulation()?.to_config()?;
    sim.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let meta = Meta {
        config_hash: config.hash(),
        seed: Some(sim.master_seed),
    };

    let ensemble =
        lossmodel::simulate_paths(&sim).map_err(|e| CliError::Numerical(e.to_string()))?;

    // Headline pricing at the configured triggers.
    let result: PricingResult = bond::mc_price_on(&ensemble, &terms);
    let (yield_pct, spread_pct) =
        bond::yield_and_spread(result.price, terms.coupon_value, terms.funding_rate)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
    let report = PricingReport {
        price: result.price,
        mc_std_error: result.mc_std_error,
        n_paths: result.n_paths,
        deterministic_price: bond::deterministic_price(&terms),
        yield_pct,
        spread_pct,
        coupon_trigger: terms
            .coupon_trigger
            .is_finite()
            .then_some(terms.coupon_trigger),
        notional_trigger: terms
            .notional_trigger
            .is_finite()
            .then_some(terms.notional_trigger),
    };
    println!(
        "price {:.2} (mc se {:.2}), yield {:.4}%, spread {:.4}%",
        report.price, report.mc_std_error, report.yield_pct, report.spread_pct
    );
    write_json(&config.out_dir.join("pricing.json"), &meta, &report)?;

    // Loss-quantile table.
    let probs: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
    let quantiles = lossmodel::total_loss_quantiles(&ensemble.paths, &probs)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut csv = meta.csv_header();
    csv.push_str("probability,total_loss_usd\n");
    for (p, q) in probs.iter().zip(&quantiles) {
        let _ = writeln!(csv, "{p},{q}");
    }
    write_text(&config.out_dir.join("quantiles.csv"), &csv)?;

    // Survival curves over the quantile-based trigger grids.
    let grids = &config.trigger_grids;
    let coupon_grid = quantile_grid(
        &ensemble,
        grids.coupon_quantile_low,
        grids.coupon_quantile_high,
        grids.coupon_points,
    )?;
    let notional_grid = quantile_grid(
        &ensemble,
        grids.notional_quantile_low,
        grids.notional_quantile_high,
        grids.notional_points,
    )?;

    let coupon_curve = bond::coupon_survival_curve_on(&ensemble, &terms, &coupon_grid)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut csv = meta.csv_header();
    csv.push_str("coupon_trigger_usd,coupon_index,payment_probability\n");
    for (t, row) in coupon_curve
        .triggers
        .iter()
        .zip(&coupon_curve.probabilities)
    {
        for (i, p) in row.iter().enumerate() {
            let _ = writeln!(csv, "{t},{},{p}", i + 1);
        }
    }
    write_text(&config.out_dir.join("coupon_survival.csv"), &csv)?;

    let notional_curve = bond::notional_survival_curve_on(&ensemble, &terms, &notional_grid)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut csv = meta.csv_header();
    csv.push_str("notional_trigger_usd,payment_probability\n");
    for (t, row) in notional_curve
        .triggers
        .iter()
        .zip(&notional_curve.probabilities)
    {
        let _ = writeln!(csv, "{t},{}", row[0]);
    }
    write_text(&config.out_dir.join("notional_survival.csv"), &csv)?;

    let pl = bond::probability_of_loss_on(&ensemble, &terms, &notional_grid)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut csv = meta.csv_header();
    csv.push_str("notional_trigger_usd,probability_of_loss\n");
    for (t, p) in &pl {
        let _ = writeln!(csv, "{t},{p}");
    }
    write_text(&config.out_dir.join("probability_of_loss.csv"), &csv)?;
    Ok(())
}

// ------------------------------------------------------------- coupon ----

pub fn cmd_coupon(config: &RunConfig, method: &str) -> Result<(), CliError> {
    ensure_out_dir(&config.out_dir)?;
    let terms = config.bond()?.to_terms();
    terms
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let quote_cfg = &config.coupon_quote;

    match method {
        "pl" => {
            let sim = config.simulation()?.to_config()?;
            let meta = Meta {
                config_hash: config.hash(),
                seed: Some(sim.master_seed),
            };
            let pl_pct = match quote_cfg.pl_pct {
                Some(value) => value,
                None => {
                    // Grid-average probability of loss from the simulation.
                    let ensemble = lossmodel::simulate_paths(&sim)
                        .map_err(|e| CliError::Numerical(e.to_string()))?;
                    let grids = &config.trigger_grids;
                    let grid = quantile_grid(
                        &ensemble,
                        grids.notional_quantile_low,
                        grids.notional_quantile_high,
                        grids.notional_points,
                    )?;
                    let pl = bond::probability_of_loss_on(&ensemble, &terms, &grid)
                        .map_err(|e| CliError::Numerical(e.to_string()))?;
                    100.0 * pl.iter().map(|(_, p)| p).sum::<f64>() / pl.len() as f64
                }
            };
            let quote = CouponQuote::from_pl(
                terms.notional,
                quote_cfg.reference_rate_pct,
                pl_pct,
                quote_cfg.pnl_pct,
                quote_cfg.constant_pct,
                quote_cfg.multiplier,
            )
            .map_err(|e| CliError::Numerical(e.to_string()))?;
            println!(
                "coupon rate {:.4}% -> coupon value {:.2}",
                quote.coupon_rate_pct, quote.coupon_value
            );
            write_json(&config.out_dir.join("coupon_quote.json"), &meta, &quote)
        }
        "par" => {
            let sim = config.simulation()?.to_config()?;
            let meta = Meta {
                config_hash: config.hash(),
                seed: Some(sim.master_seed),
            };
            let ensemble =
                lossmodel::simulate_paths(&sim).map_err(|e| CliError::Numerical(e.to_string()))?;
            let grids = &config.trigger_grids;
            let coupon_grid = quantile_grid(
                &ensemble,
                grids.coupon_quantile_low,
                grids.coupon_quantile_high,
                grids.coupon_points,
            )?;
            let notional_grid = quantile_grid(
                &ensemble,
                grids.notional_quantile_low,
                grids.notional_quantile_high,
                grids.notional_points,
            )?;
            let result = coupon::par_yield_mc_on(&ensemble, &terms, &coupon_grid, &notional_grid)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let quote = CouponQuote::from_par_yield(terms.notional, terms.funding_rate, &result);
            println!(
                "average par yield {:.4}% -> coupon value {:.2}",
                quote.coupon_rate_pct, quote.coupon_value
            );
            write_json(&config.out_dir.join("coupon_quote.json"), &meta, &quote)?;

            let mut csv = meta.csv_header();
            csv.push_str("coupon_trigger_usd,notional_trigger_usd,par_yield_pct\n");
            for (ct, row) in result.coupon_triggers.iter().zip(&result.py_pct) {
                for (nt, py) in result.notional_triggers.iter().zip(row) {
                    let value = py.map_or(String::new(), |v| v.to_string());
                    let _ = writeln!(csv, "{ct},{nt},{value}");
                }
            }
            write_text(&config.out_dir.join("par_yield_curves.csv"), &csv)
        }
        other => Err(CliError::Config(format!(
            "unknown coupon method '{other}' (use pl or par)"
        ))),
    }
}

// ------------------------------------------------------------- greeks ----

#[derive(Serialize)]
struct GreeksRow {
    bound: String,
    d_frequency: f64,
    d_sev_location: f64,
    d_sev_scale: f64,
    d_rate: Option<f64>,
}

#[derive(Serialize)]
struct GreeksReport {
    rows: Vec<GreeksRow>,
    bump_rel: f64,
    bump_abs_floor: f64,
}

/// Confidence box over frequency + severity parameters from configured SEs.
fn greeks_box(
    sim: &SimulationConfig,
    freq_ses: &[f64],
    sev_ses: &[f64],
    level: f64,
) -> Result<ConfidenceBox, CliError> {
    let build = |spec: &DistributionSpec, ses: &[f64]| -> Result<Vec<ParamInterval>, CliError> {
        let params = spec.params();
        if params.len() != ses.len() {
            return Err(CliError::Config(format!(
                "{} needs {} standard errors, got {}",
                spec.family().name(),
                params.len(),
                ses.len()
            )));
        }
        params
            .iter()
            .zip(ses)
            .enumerate()
            .map(|(i, (&est, &se))| {
                let (lower, upper) = fitting::confidence_interval(est, se, level)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                Ok(ParamInterval {
                    name: format!(
                        "{}.{}",
                        spec.family().name(),
                        spec.family().param_names()[i]
                    ),
                    estimate: est,
                    lower,
                    upper,
                })
            })
            .collect()
    };
    let mut params = build(&sim.frequency, freq_ses)?;
    params.extend(build(&sim.severity, sev_ses)?);
    Ok(ConfidenceBox { level, params })
}

pub fn cmd_greeks(config: &RunConfig, corners: bool) -> Result<(), CliError> {
    ensure_out_dir(&config.out_dir)?;
    let terms = config.bond()?.to_terms();
    terms
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let sim = config.simulation()?.to_config()?;
    let meta = Meta {
        config_hash: config.hash(),
        seed: Some(sim.master_seed),
    };
    let section = &config.greeks;
    if !(section.bump_rel > 0.0 && section.bump_abs_floor > 0.0) {
        return Err(CliError::Config("greeks bumps must be > 0".into()));
    }
    let bumps = GreekBumps {
        rel: section.bump_rel,
        abs_floor: section.bump_abs_floor,
    };

    let corners = corners || section.corners;
    let mut rows = Vec::new();

    if corners {
        let freq_ses = section.frequency_ses.as_deref().ok_or_else(|| {
            CliError::Config("corner mode needs greeks.frequency_ses in the config".into())
        })?;
        let sev_ses = section.severity_ses.as_deref().ok_or_else(|| {
            CliError::Config("corner mode needs greeks.severity_ses in the config".into())
        })?;
        let bounds = greeks_box(&sim, freq_ses, sev_ses, section.confidence_level)?;
        let n_freq = sim.frequency.params().len();
        for (bound, point) in [
            ("lower", bounds.lower()),
            ("middle", bounds.center()),
            ("upper", bounds.upper()),
        ] {
            let freq = DistributionSpec::from_params(sim.frequency.family(), &point[..n_freq])
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let sev = DistributionSpec::from_params(sim.severity.family(), &point[n_freq..])
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let at = sim.with_frequency(freq).with_severity(sev);
            let g = bond::greeks(&terms, &at, &bumps)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            // Rate sensitivity is reported at the middle point only.
            rows.push(GreeksRow {
                bound: bound.to_string(),
                d_frequency: g.d_frequency,
                d_sev_location: g.d_sev_location,
                d_sev_scale: g.d_sev_scale,
                d_rate: (bound == "middle").then_some(g.d_rate),
            });
        }
    } else {
        let g =
            bond::greeks(&terms, &sim, &bumps).map_err(|e| CliError::Numerical(e.to_string()))?;
        rows.push(GreeksRow {
            bound: "middle".to_string(),
            d_frequency: g.d_frequency,
            d_sev_location: g.d_sev_location,
            d_sev_scale: g.d_sev_scale,
            d_rate: Some(g.d_rate),
        });
    }

    for row in &rows {
        println!(
            "{:>6}: d_frequency {:.4}, d_sev_location {:.4}, d_sev_scale {:.4}, d_rate {}",
            row.bound,
            row.d_frequency,
            row.d_sev_location,
            row.d_sev_scale,
            row.d_rate.map_or("-".to_string(), |v| format!("{v:.4}"))
        );
    }
    let report = GreeksReport {
        rows,
        bump_rel: bumps.rel,
        bump_abs_floor: bumps.abs_floor,
    };
    write_json(&config.out_dir.join("greeks.json"), &meta, &report)
}

// ----------------------------------------------------------- simulate ----

pub fn cmd_simulate(config: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(&config.out_dir)?;
    let sim = config.simulation()?.to_config()?;
    sim.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let meta = Meta {
        config_hash: config.hash(),
        seed: Some(sim.master_seed),
    };
    let ensemble =
        lossmodel::simulate_paths(&sim).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut csv = meta.csv_header();
    csv.push_str("path_index,day,amount_usd\n");
    for (index, path) in ensemble.paths.iter().enumerate() {
        for event in &path.events {
            let _ = writeln!(csv, "{index},{},{}", event.day, event.amount);
        }
    }
    let n_events: usize = ensemble.paths.iter().map(|p| p.events.len()).sum();
    println!("{} paths, {} events", ensemble.paths.len(), n_events);
    write_text(&config.out_dir.join("paths.csv"), &csv)
}
