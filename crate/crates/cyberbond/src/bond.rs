//! Bond cash flows, trigger logic, pricing, survival curves, Greeks, and
//! prudent valuation.
//!
//! A coupon is paid iff cumulative simulated losses up to its payment day are
//! strictly below the coupon trigger; the notional repays iff cumulative
//! losses at maturity are strictly below the notional trigger. Ties drop the
//! payment. Discounting is continuous-compounding ACT/365.
//!
//! The Monte Carlo price aggregates per-payment survival counts and runs the
//! count-weighted amounts through the same discounting loop as the
//! deterministic price, so with both triggers infinite the two prices agree
//! bitwise. All reductions run sequentially over index-ordered path results;
//! output never depends on worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::DistributionSpec;
use crate::fitting::ConfidenceBox;
use crate::lossmodel::{self, LossPath, PathEnsemble, SimulationConfig, SimulationError};

#[derive(Debug, Error)]
pub enum BondError {
    #[error("coupon schedule must be non-empty, strictly increasing, and end at maturity")]
    BadSchedule,
    #[error("notional must be > 0 and coupon value >= 0")]
    BadAmounts,
    #[error("coupon trigger must not exceed notional trigger")]
    TriggerOrder,
    #[error("triggers must be positive")]
    BadTrigger,
    #[error("price must be > 0 to quote a yield")]
    UndefinedYield,
    #[error("bump sizes must be > 0")]
    BadBump,
    #[error("trigger grid must be non-empty")]
    EmptyGrid,
    #[error("frequency needs >= 1 parameter and severity >= 2 for these sensitivities")]
    UnsupportedFamilies,
    #[error("confidence box has {got} parameters, model needs {need}")]
    BoxShapeMismatch { got: usize, need: usize },
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Distribution(#[from] crate::distributions::DistributionError),
}

/// Contractual terms. Triggers are cumulative-loss thresholds in USD;
/// `f64::INFINITY` means the trigger never fires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondTerms {
    pub notional: f64,
    pub maturity_days: u32,
    /// Strictly increasing; the last entry equals `maturity_days`.
    pub coupon_days: Vec<u32>,
    /// USD paid per surviving coupon date.
    pub coupon_value: f64,
    /// Continuous-compounding annual rate, ACT/365.
    pub funding_rate: f64,
    pub coupon_trigger: f64,
    pub notional_trigger: f64,
}

impl BondTerms {
    pub fn validate(&self) -> Result<(), BondError> {
        if self.coupon_days.is_empty()
            || self.coupon_days.windows(2).any(|w| w[1] <= w[0])
            || *self.coupon_days.last().unwrap() != self.maturity_days
        {
            return Err(BondError::BadSchedule);
        }
        let positive = self.notional.is_finite() && self.notional > 0.0;
        let coupon_ok = self.coupon_value.is_finite() && self.coupon_value >= 0.0;
        if !positive || !coupon_ok {
            return Err(BondError::BadAmounts);
        }
        // Zero is allowed: under the strict-inequality rule it drops every
        // payment. NaN is not.
        if self.coupon_trigger.is_nan()
            || self.notional_trigger.is_nan()
            || self.coupon_trigger < 0.0
            || self.notional_trigger < 0.0
        {
            return Err(BondError::BadTrigger);
        }
        if self.coupon_trigger > self.notional_trigger {
            return Err(BondError::TriggerOrder);
        }
        Ok(())
    }

    /// Discount factor for a payment `day`s from valuation.
    pub fn discount(&self, day: u32) -> f64 {
        (-self.funding_rate * day as f64 / 365.0).exp()
    }

    /// Copy with different triggers (used when sweeping trigger grids).
    pub fn with_triggers(&self, coupon_trigger: f64, notional_trigger: f64) -> Self {
        BondTerms {
            coupon_trigger,
            notional_trigger,
            ..self.clone()
        }
    }
}

/// Present value of coupons and notional weighted per payment; weight 1.0
/// everywhere reproduces the no-trigger price bitwise.
fn weighted_present_value(terms: &BondTerms, coupon_weights: &[f64], notional_weight: f64) -> f64 {
    debug_assert_eq!(coupon_weights.len(), terms.coupon_days.len());
    let mut total = 0.0;
    for (&day, &w) in terms.coupon_days.iter().zip(coupon_weights) {
        total += w * terms.coupon_value * self_discount(terms, day);
    }
    total + notional_weight * terms.notional * self_discount(terms, terms.maturity_days)
}

fn self_discount(terms: &BondTerms, day: u32) -> f64 {
    (-terms.funding_rate * day as f64 / 365.0).exp()
}

/// Trigger-free price: sum of discounted coupons plus discounted notional.
pub fn deterministic_price(terms: &BondTerms) -> f64 {
    let weights = vec![1.0; terms.coupon_days.len()];
    weighted_present_value(terms, &weights, 1.0)
}

/// Payment flags for one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerOutcome {
    pub coupons_paid: Vec<bool>,
    pub notional_paid: bool,
}

/// Apply the strict-inequality trigger rule to a path.
pub fn evaluate_triggers(path: &LossPath, terms: &BondTerms) -> TriggerOutcome {
    let cums = path.cumulative_at(&terms.coupon_days);
    let coupons_paid: Vec<bool> = cums.iter().map(|&c| c < terms.coupon_trigger).collect();
    let notional_paid = *cums.last().expect("non-empty schedule") < terms.notional_trigger;
    TriggerOutcome {
        coupons_paid,
        notional_paid,
    }
}

/// Monte Carlo price with its standard error.
#[derive(Debug, Clone, Serialize)]
pub struct PricingResult {
    pub price: f64,
    pub mc_std_error: f64,
    pub n_paths: usize,
}

/// Price the bond over a fresh simulation of `config`.
pub fn mc_price(terms: &BondTerms, config: &SimulationConfig) -> Result<PricingResult, BondError> {
    terms.validate()?;
    let ensemble = lossmodel::simulate_paths(config)?;
    Ok(mc_price_on(&ensemble, terms))
}

/// Price the bond over an existing path ensemble.
pub fn mc_price_on(ensemble: &PathEnsemble, terms: &BondTerms) -> PricingResult {
    let n = ensemble.paths.len();
    let n_coupons = terms.coupon_days.len();

    // Per-payment survival counts drive the price; per-path payoffs drive
    // the standard error (Welford, sequential in path order).
    let mut coupon_counts = vec![0usize; n_coupons];
    let mut notional_count = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (seen, path) in ensemble.paths.iter().enumerate() {
        let outcome = evaluate_triggers(path, terms);
        let mut payoff = 0.0;
        for (i, &paid) in outcome.coupons_paid.iter().enumerate() {
            if paid {
                coupon_counts[i] += 1;
                payoff += terms.coupon_value * self_discount(terms, terms.coupon_days[i]);
            }
        }
        if outcome.notional_paid {
            notional_count += 1;
            payoff += terms.notional * self_discount(terms, terms.maturity_days);
        }
        let delta = payoff - mean;
        mean += delta / (seen + 1) as f64;
        m2 += delta * (payoff - mean);
    }

    let coupon_weights: Vec<f64> = coupon_counts.iter().map(|&c| c as f64 / n as f64).collect();
    let notional_weight = notional_count as f64 / n as f64;
    let price = weighted_present_value(terms, &coupon_weights, notional_weight);

    let mc_std_error = if n > 1 {
        (m2 / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    PricingResult {
        price,
        mc_std_error,
        n_paths: n,
    }
}

/// Payment probabilities across a trigger grid: `probabilities[t][i]` is the
/// survival of payment `i` at trigger `t` (notional curves have one column).
#[derive(Debug, Clone, Serialize)]
pub struct SurvivalCurve {
    pub triggers: Vec<f64>,
    pub probabilities: Vec<Vec<f64>>,
}

impl SurvivalCurve {
    /// Both monotonicity invariants hold by construction (cumulative losses
    /// grow along a path; a higher trigger can only pay more); checked here
    /// on every curve.
    fn assert_invariants(&self) {
        for row in &self.probabilities {
            for pair in row.windows(2) {
                assert!(
                    pair[1] <= pair[0],
                    "payment survival rose along the schedule"
                );
            }
            assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
        for t in 1..self.probabilities.len() {
            assert!(
                self.triggers[t] >= self.triggers[t - 1],
                "trigger grid must be sorted"
            );
            for i in 0..self.probabilities[t].len() {
                assert!(
                    self.probabilities[t][i] >= self.probabilities[t - 1][i],
                    "survival fell as the trigger rose"
                );
            }
        }
    }
}

/// Per-coupon payment probability for each coupon trigger in the grid.
pub fn coupon_survival_curve(
    terms: &BondTerms,
    config: &SimulationConfig,
    trigger_grid: &[f64],
) -> Result<SurvivalCurve, BondError> {
    let ensemble = lossmodel::simulate_paths(config)?;
    coupon_survival_curve_on(&ensemble, terms, trigger_grid)
}

pub fn coupon_survival_curve_on(
    ensemble: &PathEnsemble,
    terms: &BondTerms,
    trigger_grid: &[f64],
) -> Result<SurvivalCurve, BondError> {
    if trigger_grid.is_empty() {
        return Err(BondError::EmptyGrid);
    }
    let cums = payment_cumulatives(ensemble, &terms.coupon_days);
    let n = cums.len() as f64;
    let mut triggers = trigger_grid.to_vec();
    triggers.sort_by(|a, b| a.partial_cmp(b).expect("finite triggers"));
    let probabilities = triggers
        .iter()
        .map(|&trigger| {
            (0..terms.coupon_days.len())
                .map(|i| cums.iter().filter(|c| c[i] < trigger).count() as f64 / n)
                .collect()
        })
        .collect();
    let curve = SurvivalCurve {
        triggers,
        probabilities,
    };
    curve.assert_invariants();
    Ok(curve)
}

/// Notional payment probability for each notional trigger in the grid.
pub fn notional_survival_curve(
    terms: &BondTerms,
    config: &SimulationConfig,
    trigger_grid: &[f64],
) -> Result<SurvivalCurve, BondError> {
    let ensemble = lossmodel::simulate_paths(config)?;
    notional_survival_curve_on(&ensemble, terms, trigger_grid)
}

pub fn notional_survival_curve_on(
    ensemble: &PathEnsemble,
    terms: &BondTerms,
    trigger_grid: &[f64],
) -> Result<SurvivalCurve, BondError> {
    if trigger_grid.is_empty() {
        return Err(BondError::EmptyGrid);
    }
    let maturity_cums: Vec<f64> = ensemble
        .paths
        .iter()
        .map(|p| p.cumulative_at(&[terms.maturity_days])[0])
        .collect();
    let n = maturity_cums.len() as f64;
    let mut triggers = trigger_grid.to_vec();
    triggers.sort_by(|a, b| a.partial_cmp(b).expect("finite triggers"));
    let probabilities = triggers
        .iter()
        .map(|&trigger| vec![maturity_cums.iter().filter(|&&c| c < trigger).count() as f64 / n])
        .collect();
    let curve = SurvivalCurve {
        triggers,
        probabilities,
    };
    curve.assert_invariants();
    Ok(curve)
}

/// Probability the notional is lost, per trigger: `1 - notional survival`.
pub fn probability_of_loss(
    terms: &BondTerms,
    config: &SimulationConfig,
    trigger_grid: &[f64],
) -> Result<Vec<(f64, f64)>, BondError> {
    let curve = notional_survival_curve(terms, config, trigger_grid)?;
    Ok(curve
        .triggers
        .iter()
        .zip(&curve.probabilities)
        .map(|(&t, row)| (t, 1.0 - row[0]))
        .collect())
}

pub fn probability_of_loss_on(
    ensemble: &PathEnsemble,
    terms: &BondTerms,
    trigger_grid: &[f64],
) -> Result<Vec<(f64, f64)>, BondError> {
    let curve = notional_survival_curve_on(ensemble, terms, trigger_grid)?;
    Ok(curve
        .triggers
        .iter()
        .zip(&curve.probabilities)
        .map(|(&t, row)| (t, 1.0 - row[0]))
        .collect())
}

/// Running yield `C/P * 100` and its spread over the funding rate, both in
/// percent.
pub fn yield_and_spread(
    price: f64,
    coupon: f64,
    funding_rate: f64,
) -> Result<(f64, f64), BondError> {
    if price.is_nan() || price <= 0.0 {
        return Err(BondError::UndefinedYield);
    }
    let yield_pct = coupon / price * 100.0;
    Ok((yield_pct, yield_pct - funding_rate * 100.0))
}

/// Price sensitivities to the frequency rate, severity location, severity
/// scale, and funding rate.
#[derive(Debug, Clone, Serialize)]
pub struct Greeks {
    pub d_frequency: f64,
    pub d_sev_location: f64,
    pub d_sev_scale: f64,
    pub d_rate: f64,
}

/// Bump sizes for the central differences: `max(rel * |param|, abs_floor)`
/// per parameter.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GreekBumps {
    pub rel: f64,
    pub abs_floor: f64,
}

impl Default for GreekBumps {
    fn default() -> Self {
        GreekBumps {
            rel: 0.01,
            abs_floor: 1e-4,
        }
    }
}

impl GreekBumps {
    fn step(&self, param: f64) -> f64 {
        (self.rel * param.abs()).max(self.abs_floor)
    }
}

/// Central finite differences of the Monte Carlo price under common random
/// numbers: every bumped run reuses the master seed and path indices.
///
/// Defined for a one-or-more-parameter frequency and two-or-more-parameter
/// severity; the first frequency parameter and the first two severity
/// parameters are bumped.
pub fn greeks(
    terms: &BondTerms,
    config: &SimulationConfig,
    bumps: &GreekBumps,
) -> Result<Greeks, BondError> {
    if !(bumps.rel > 0.0 && bumps.abs_floor > 0.0) {
        return Err(BondError::BadBump);
    }
    terms.validate()?;
    config.validate()?;
    let freq_params = config.frequency.params();
    let sev_params = config.severity.params();
    if freq_params.is_empty() || sev_params.len() < 2 {
        return Err(BondError::UnsupportedFamilies);
    }

    let price_with = |config: &SimulationConfig, terms: &BondTerms| -> Result<f64, BondError> {
        Ok(mc_price(terms, config)?.price)
    };

    let bump_spec = |spec: &DistributionSpec, index: usize, delta: f64| {
        let mut params = spec.params();
        params[index] += delta;
        DistributionSpec::from_params(spec.family(), &params)
    };

    // d price / d frequency[0]
    let h = bumps.step(freq_params[0]);
    let up = config.with_frequency(bump_spec(&config.frequency, 0, h)?);
    let dn = config.with_frequency(bump_spec(&config.frequency, 0, -h)?);
    let d_frequency = (price_with(&up, terms)? - price_with(&dn, terms)?) / (2.0 * h);

    // d price / d severity[0]
    let h = bumps.step(sev_params[0]);
    let up = config.with_severity(bump_spec(&config.severity, 0, h)?);
    let dn = config.with_severity(bump_spec(&config.severity, 0, -h)?);
    let d_sev_location = (price_with(&up, terms)? - price_with(&dn, terms)?) / (2.0 * h);

    // d price / d severity[1]
    let h = bumps.step(sev_params[1]);
    let up = config.with_severity(bump_spec(&config.severity, 1, h)?);
    let dn = config.with_severity(bump_spec(&config.severity, 1, -h)?);
    let d_sev_scale = (price_with(&up, terms)? - price_with(&dn, terms)?) / (2.0 * h);

    // d price / d funding rate: paths are unaffected, only discounting moves.
    let h = bumps.step(terms.funding_rate);
    let mut up_terms = terms.clone();
    up_terms.funding_rate += h;
    let mut dn_terms = terms.clone();
    dn_terms.funding_rate -= h;
    let d_rate = (price_with(config, &up_terms)? - price_with(config, &dn_terms)?) / (2.0 * h);

    Ok(Greeks {
        d_frequency,
        d_sev_location,
        d_sev_scale,
        d_rate,
    })
}

/// Analytic rate sensitivity of the trigger-free price; the oracle for the
/// no-trigger finite-difference check.
pub fn deterministic_price_rate_derivative(terms: &BondTerms) -> f64 {
    let mut total = 0.0;
    for &day in &terms.coupon_days {
        let t = day as f64 / 365.0;
        total -= terms.coupon_value * t * self_discount(terms, day);
    }
    let t = terms.maturity_days as f64 / 365.0;
    total - terms.notional * t * self_discount(terms, terms.maturity_days)
}

/// Direction of the prudent-price search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrudentMode {
    Max,
    Min,
}

/// Optimize the Monte Carlo price over a parameter confidence box under
/// common random numbers.
///
/// The box parameters are the frequency parameters followed by the severity
/// parameters. Monotone price in every coordinate puts the optimum at a
/// corner, so the search evaluates the corners and center, then refines each
/// coordinate on a short grid; two sweeps.
pub fn prudent_price(
    terms: &BondTerms,
    config: &SimulationConfig,
    bounds: &ConfidenceBox,
    mode: PrudentMode,
) -> Result<f64, BondError> {
    terms.validate()?;
    config.validate()?;
    let n_freq = config.frequency.params().len();
    let n_sev = config.severity.params().len();
    if bounds.len() != n_freq + n_sev {
        return Err(BondError::BoxShapeMismatch {
            got: bounds.len(),
            need: n_freq + n_sev,
        });
    }

    let lower = bounds.lower();
    let upper = bounds.upper();

    let price_at = |point: &[f64]| -> Result<f64, BondError> {
        let freq = DistributionSpec::from_params(config.frequency.family(), &point[..n_freq])?;
        let sev = DistributionSpec::from_params(config.severity.family(), &point[n_freq..])?;
        let bumped = config.with_frequency(freq).with_severity(sev);
        Ok(mc_price(terms, &bumped)?.price)
    };

    let better = |a: f64, b: f64| match mode {
        PrudentMode::Max => a > b,
        PrudentMode::Min => a < b,
    };

    // Corners and center.
    let dims = lower.len();
    let mut best_point = bounds.center();
    let mut best_price = price_at(&best_point)?;
    for mask in 0..(1usize << dims) {
        let corner: Vec<f64> = (0..dims)
            .map(|i| {
                if mask & (1 << i) != 0 {
                    upper[i]
                } else {
                    lower[i]
                }
            })
            .collect();
        let price = price_at(&corner)?;
        if better(price, best_price) {
            best_price = price;
            best_point = corner;
        }
    }

    // Coordinate refinement on a 5-point grid per dimension, two sweeps.
    for _ in 0..2 {
        for dim in 0..dims {
            for step in 0..5 {
                let candidate_coord = lower[dim] + (upper[dim] - lower[dim]) * step as f64 / 4.0;
                let mut candidate = best_point.clone();
                candidate[dim] = candidate_coord;
                let price = price_at(&candidate)?;
                if better(price, best_price) {
                    best_price = price;
                    best_point = candidate;
                }
            }
        }
    }
    Ok(best_price)
}

/// Cumulative losses at each coupon day for every path, in path order.
fn payment_cumulatives(ensemble: &PathEnsemble, coupon_days: &[u32]) -> Vec<Vec<f64>> {
    #[cfg(feature = "parallel")]
    {
        ensemble
            .paths
            .par_iter()
            .map(|p| p.cumulative_at(coupon_days))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ensemble
            .paths
            .iter()
            .map(|p| p.cumulative_at(coupon_days))
            .collect()
    }
}
