//! Monte Carlo simulation of the compound cyber-loss process.
//!
//! Each path draws i.i.d. inter-arrival gaps from the frequency distribution,
//! accumulates them into arrival days truncated at the horizon, and attaches
//! an i.i.d. severity draw to every arrival.
//!
//! Reproducibility contract: the path for `(master_seed, path_index)` is a
//! pure function of those two values. Per-path generators are ChaCha streams
//! keyed on the master seed with the path index as the stream number, so a
//! path never depends on scheduling, worker count, or the other paths.
//! Parameter bumps under the same seed reuse the same underlying uniforms,
//! which is what makes finite-difference Greeks usable at modest path counts.
//!
//! With the `parallel` feature (default) paths are generated on the rayon
//! pool into an index-ordered vector; every floating-point reduction
//! downstream runs sequentially over that ordered vector, so results are
//! byte-identical to the sequential build.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::DistributionSpec;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("n_paths must be >= 1")]
    NoPaths,
    #[error("horizon_days must be >= 1")]
    NoHorizon,
    #[error(transparent)]
    Distribution(#[from] crate::distributions::DistributionError),
    #[error("probability {0} outside (0,1)")]
    ProbabilityOutOfRange(f64),
    #[error("no paths supplied")]
    EmptyEnsemble,
}

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub horizon_days: u32,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Distribution of inter-arrival gaps in days.
    pub frequency: DistributionSpec,
    /// Distribution of per-event loss amounts in USD.
    pub severity: DistributionSpec,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.n_paths == 0 {
            return Err(SimulationError::NoPaths);
        }
        if self.horizon_days == 0 {
            return Err(SimulationError::NoHorizon);
        }
        self.frequency.validate()?;
        self.severity.validate()?;
        Ok(())
    }

    /// Copy with one frequency parameter replaced (for bump studies).
    pub fn with_frequency(&self, frequency: DistributionSpec) -> Self {
        SimulationConfig {
            frequency,
            ..self.clone()
        }
    }

    pub fn with_severity(&self, severity: DistributionSpec) -> Self {
        SimulationConfig {
            severity,
            ..self.clone()
        }
    }
}

/// One loss event on a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossEvent {
    /// Arrival time in days from valuation (0, horizon].
    pub day: f64,
    /// Loss amount in USD, strictly positive.
    pub amount: f64,
}

/// One simulated trajectory: events ordered by strictly increasing day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossPath {
    pub events: Vec<LossEvent>,
}

impl LossPath {
    /// Sum of amounts with event day <= `day`; a non-decreasing step
    /// function of `day`.
    pub fn cumulative_loss(&self, day: f64) -> f64 {
        debug_assert!(day >= 0.0);
        self.events
            .iter()
            .take_while(|e| e.day <= day)
            .map(|e| e.amount)
            .sum()
    }

    /// Cumulative losses evaluated at several payment days in one pass.
    /// `days` must be sorted ascending.
    pub fn cumulative_at(&self, days: &[u32]) -> Vec<f64> {
        let mut out = Vec::with_capacity(days.len());
        let mut cum = 0.0;
        let mut idx = 0;
        for &d in days {
            while idx < self.events.len() && self.events[idx].day <= d as f64 {
                cum += self.events[idx].amount;
                idx += 1;
            }
            out.push(cum);
        }
        out
    }

    /// Total loss over the whole path.
    pub fn total_loss(&self) -> f64 {
        self.events.iter().map(|e| e.amount).sum()
    }
}

/// The RNG stream for one path: ChaCha keyed on the master seed, with the
/// path index as the stream number.
pub fn path_rng(master_seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

/// Simulate a single path; a pure function of `(config, path_index)`.
pub fn simulate_path(config: &SimulationConfig, path_index: u64) -> LossPath {
    let mut rng = path_rng(config.master_seed, path_index);
    let horizon = config.horizon_days as f64;
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        let gap = config.frequency.sample(&mut rng);
        t += gap;
        if t > horizon {
            break;
        }
        let amount = config.severity.sample(&mut rng);
        events.push(LossEvent { day: t, amount });
    }
    LossPath { events }
}

/// A simulated set of paths plus the horizon they were generated for.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub paths: Vec<LossPath>,
    pub horizon_days: u32,
}

impl PathEnsemble {
    /// End-of-horizon totals, in path order.
    pub fn totals(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.total_loss()).collect()
    }
}

/// Simulate all paths; parallel when the `parallel` feature is on.
pub fn simulate_paths(config: &SimulationConfig) -> Result<PathEnsemble, SimulationError> {
    config.validate()?;
    #[cfg(feature = "parallel")]
    {
        Ok(simulate_paths_par(config))
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(simulate_paths_seq(config))
    }
}

/// Sequential path generation; always available as the reference route.
pub fn simulate_paths_seq(config: &SimulationConfig) -> PathEnsemble {
    let paths = (0..config.n_paths as u64)
        .map(|i| simulate_path(config, i))
        .collect();
    PathEnsemble {
        paths,
        horizon_days: config.horizon_days,
    }
}

/// Rayon path generation; collects in index order, so the result is
/// identical to the sequential route.
#[cfg(feature = "parallel")]
pub fn simulate_paths_par(config: &SimulationConfig) -> PathEnsemble {
    let paths = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(config, i))
        .collect();
    PathEnsemble {
        paths,
        horizon_days: config.horizon_days,
    }
}

/// Empirical quantiles (linear interpolation) of end-of-horizon totals.
pub fn total_loss_quantiles(
    paths: &[LossPath],
    probs: &[f64],
) -> Result<Vec<f64>, SimulationError> {
    if paths.is_empty() {
        return Err(SimulationError::EmptyEnsemble);
    }
    for &p in probs {
        if !(p > 0.0 && p < 1.0) {
            return Err(SimulationError::ProbabilityOutOfRange(p));
        }
    }
    let mut totals: Vec<f64> = paths.iter().map(|p| p.total_loss()).collect();
    totals.sort_by(|a, b| a.partial_cmp(b).expect("finite totals"));
    Ok(probs
        .iter()
        .map(|&p| interpolated_quantile(&totals, p))
        .collect())
}

fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}
