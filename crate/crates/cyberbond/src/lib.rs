//! Pricing toolkit for event-linked (cyber) bonds.
//!
//! The crate covers the full workflow:
//!
//! - [`event_data`]: ingest incident records, derive inter-event day gaps and
//!   disclosed loss amounts.
//! - [`distributions`]: parametric frequency/severity families with density,
//!   CDF, quantile, sampling, and log-likelihood.
//! - [`fitting`]: maximum-likelihood estimation with standard errors and
//!   confidence intervals.
//! - [`gof`]: chi-square, Kolmogorov-Smirnov, and Cramer-von Mises
//!   goodness-of-fit tests.
//! - [`lossmodel`]: seeded Monte Carlo simulation of the compound loss
//!   process, parallel when the `parallel` feature is enabled (default).
//! - [`bond`]: cash-flow schedule, coupon/notional triggers, pricing,
//!   survival curves, Greeks, and prudent valuation.
//! - [`coupon`]: coupon-rate calculators (probability-of-loss and par-yield).
//!
//! Simulation output is a pure function of `(master_seed, path_index)`, so
//! results are byte-identical whether paths are generated sequentially or on
//! any number of worker threads.

pub mod bond;
pub mod coupon;
pub mod distributions;
pub mod event_data;
pub mod fitting;
pub mod gof;
pub mod lossmodel;

mod numeric;

pub use bond::{BondTerms, Greeks, PricingResult, SurvivalCurve};
pub use distributions::{DistributionSpec, Family};
pub use event_data::{CyberEvent, EventSeries, IntervalSeries, LossSeries};
pub use fitting::{ConfidenceBox, FitResult};
pub use gof::GofReport;
pub use lossmodel::{LossPath, PathEnsemble, SimulationConfig};
