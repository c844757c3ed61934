//! Coupon-rate calculators.
//!
//! Two quoting routes:
//!
//! - probability of loss: `rate = reference + constant + multiplier * EL`
//!   with `EL = PL * PNL / 100`; the cyber-bond simplification takes
//!   constant 0, multiplier 1, and PNL 100% (the notional is lost whole or
//!   not at all), collapsing to `reference + PL`;
//! - par yield: the coupon percentage that prices the bond at par. The
//!   deterministic form inverts the discounting identity; the Monte Carlo
//!   form re-evaluates it per path with dropped payments' discount factors
//!   zeroed, averages over paths per trigger pair, then averages uniformly
//!   over the trigger grid.

use serde::Serialize;
use thiserror::Error;

use crate::bond::{BondError, BondTerms};
use crate::lossmodel::{self, PathEnsemble, SimulationConfig};

#[derive(Debug, Error)]
pub enum CouponError {
    #[error("inputs must be non-negative and pnl_pct <= 100")]
    BadInputs,
    #[error("trigger grid must be non-empty")]
    EmptyGrid,
    #[error("every trigger pair degenerated (all paths lost all coupons)")]
    AllPairsDegenerate,
    #[error(transparent)]
    Bond(#[from] BondError),
    #[error(transparent)]
    Simulation(#[from] crate::lossmodel::SimulationError),
}

/// Coupon rate in percent from the probability-of-loss route.
pub fn coupon_rate_pl(
    reference_rate_pct: f64,
    pl_pct: f64,
    pnl_pct: f64,
    constant_pct: f64,
    multiplier: f64,
) -> Result<f64, CouponError> {
    let ok = reference_rate_pct >= 0.0
        && pl_pct >= 0.0
        && (0.0..=100.0).contains(&pnl_pct)
        && constant_pct >= 0.0
        && multiplier >= 0.0;
    if !ok {
        return Err(CouponError::BadInputs);
    }
    Ok(reference_rate_pct + constant_pct + multiplier * (pl_pct * pnl_pct / 100.0))
}

/// Par yield of the trigger-free bond: percentage per coupon period and the
/// corresponding coupon value in USD.
pub fn par_yield_deterministic(terms: &BondTerms) -> Result<(f64, f64), CouponError> {
    terms.validate()?;
    let df_notional = (-terms.funding_rate * terms.maturity_days as f64 / 365.0).exp();
    let df_sum: f64 = terms
        .coupon_days
        .iter()
        .map(|&d| (-terms.funding_rate * d as f64 / 365.0).exp())
        .sum();
    let py_pct = (1.0 - df_notional) / df_sum * 100.0;
    Ok((py_pct, terms.notional * py_pct / 100.0))
}

/// Par-yield curves over a coupon-trigger x notional-trigger grid, plus
/// their uniform average.
#[derive(Debug, Clone, Serialize)]
pub struct ParYieldMc {
    /// Uniform average over all non-degenerate trigger pairs, percent.
    pub average_pct: f64,
    pub coupon_triggers: Vec<f64>,
    pub notional_triggers: Vec<f64>,
    /// `py_pct[c][n]`: mean par yield for coupon trigger `c`, notional
    /// trigger `n`; `None` when every path lost all coupons.
    pub py_pct: Vec<Vec<Option<f64>>>,
    /// Paths dropped (zero surviving coupons) over all evaluated pairs.
    pub excluded_paths: usize,
    pub excluded_pairs: usize,
    /// Fraction of (path, pair) evaluations that were excluded.
    pub excluded_fraction: f64,
}

/// Monte Carlo par yield averaged over trigger pairs.
///
/// Per path and pair: `py = 100 * (1 - [notional paid] * df_N) / sum of
/// surviving coupon discount factors`; paths with no surviving coupons are
/// excluded from that pair's mean and counted.
pub fn par_yield_mc(
    terms: &BondTerms,
    config: &SimulationConfig,
    coupon_trigger_grid: &[f64],
    notional_trigger_grid: &[f64],
) -> Result<ParYieldMc, CouponError> {
    let ensemble = lossmodel::simulate_paths(config)?;
    par_yield_mc_on(&ensemble, terms, coupon_trigger_grid, notional_trigger_grid)
}

pub fn par_yield_mc_on(
    ensemble: &PathEnsemble,
    terms: &BondTerms,
    coupon_trigger_grid: &[f64],
    notional_trigger_grid: &[f64],
) -> Result<ParYieldMc, CouponError> {
    if coupon_trigger_grid.is_empty() || notional_trigger_grid.is_empty() {
        return Err(CouponError::EmptyGrid);
    }
    terms.validate()?;

    let dfs: Vec<f64> = terms
        .coupon_days
        .iter()
        .map(|&d| (-terms.funding_rate * d as f64 / 365.0).exp())
        .collect();
    let df_notional = (-terms.funding_rate * terms.maturity_days as f64 / 365.0).exp();

    // Cumulative losses per payment date, computed once per path.
    let cums: Vec<Vec<f64>> = ensemble
        .paths
        .iter()
        .map(|p| p.cumulative_at(&terms.coupon_days))
        .collect();

    let mut py_pct = Vec::with_capacity(coupon_trigger_grid.len());
    let mut excluded_paths = 0usize;
    let mut excluded_pairs = 0usize;
    let mut sum_pairs = 0.0;
    let mut n_pairs = 0usize;
    for &coupon_trigger in coupon_trigger_grid {
        let mut row = Vec::with_capacity(notional_trigger_grid.len());
        for &notional_trigger in notional_trigger_grid {
            let mut total = 0.0;
            let mut included = 0usize;
            for cum in &cums {
                let mut df_sum = 0.0;
                for (c, df) in cum.iter().zip(&dfs) {
                    if *c < coupon_trigger {
                        df_sum += df;
                    }
                }
                if df_sum == 0.0 {
                    excluded_paths += 1;
                    continue;
                }
                let notional_paid = *cum.last().expect("non-empty schedule") < notional_trigger;
                let numerator = 1.0 - if notional_paid { df_notional } else { 0.0 };
                total += 100.0 * numerator / df_sum;
                included += 1;
            }
            if included == 0 {
                excluded_pairs += 1;
                row.push(None);
            } else {
                let pair_mean = total / included as f64;
                sum_pairs += pair_mean;
                n_pairs += 1;
                row.push(Some(pair_mean));
            }
        }
        py_pct.push(row);
    }

    if n_pairs == 0 {
        return Err(CouponError::AllPairsDegenerate);
    }
    let evaluations =
        ensemble.paths.len() * coupon_trigger_grid.len() * notional_trigger_grid.len();
    Ok(ParYieldMc {
        average_pct: sum_pairs / n_pairs as f64,
        coupon_triggers: coupon_trigger_grid.to_vec(),
        notional_triggers: notional_trigger_grid.to_vec(),
        py_pct,
        excluded_paths,
        excluded_pairs,
        excluded_fraction: excluded_paths as f64 / evaluations as f64,
    })
}

/// Trigger grids matching the worked example: points uniform in value
/// between two total-loss quantiles.
pub fn uniform_trigger_grid(q_low: f64, q_high: f64, n_points: usize) -> Vec<f64> {
    assert!(n_points >= 2 && q_high >= q_low);
    (0..n_points)
        .map(|i| q_low + (q_high - q_low) * i as f64 / (n_points - 1) as f64)
        .collect()
}

/// Quote method tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuoteMethod {
    ProbabilityOfLoss,
    ParYield,
}

/// Input echo carried by a quote.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum QuoteInputs {
    ProbabilityOfLoss {
        reference_rate_pct: f64,
        pl_pct: f64,
        pnl_pct: f64,
        constant_pct: f64,
        multiplier: f64,
    },
    ParYield {
        funding_rate: f64,
        n_coupon_triggers: usize,
        n_notional_triggers: usize,
        excluded_pairs: usize,
        excluded_fraction: f64,
    },
}

/// A coupon quote: rate in percent per period and the USD coupon on the
/// given notional.
#[derive(Debug, Clone, Serialize)]
pub struct CouponQuote {
    pub coupon_rate_pct: f64,
    pub coupon_value: f64,
    pub method: QuoteMethod,
    pub inputs: QuoteInputs,
}

impl CouponQuote {
    pub fn from_pl(
        notional: f64,
        reference_rate_pct: f64,
        pl_pct: f64,
        pnl_pct: f64,
        constant_pct: f64,
        multiplier: f64,
    ) -> Result<Self, CouponError> {
        let rate = coupon_rate_pl(
            reference_rate_pct,
            pl_pct,
            pnl_pct,
            constant_pct,
            multiplier,
        )?;
        Ok(CouponQuote {
            coupon_rate_pct: rate,
            coupon_value: notional * rate / 100.0,
            method: QuoteMethod::ProbabilityOfLoss,
            inputs: QuoteInputs::ProbabilityOfLoss {
                reference_rate_pct,
                pl_pct,
                pnl_pct,
                constant_pct,
                multiplier,
            },
        })
    }

    pub fn from_par_yield(notional: f64, funding_rate: f64, result: &ParYieldMc) -> Self {
        CouponQuote {
            coupon_rate_pct: result.average_pct,
            coupon_value: notional * result.average_pct / 100.0,
            method: QuoteMethod::ParYield,
            inputs: QuoteInputs::ParYield {
                funding_rate,
                n_coupon_triggers: result.coupon_triggers.len(),
                n_notional_triggers: result.notional_triggers.len(),
                excluded_pairs: result.excluded_pairs,
                excluded_fraction: result.excluded_fraction,
            },
        }
    }
}
