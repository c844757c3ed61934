//! Run configuration: one JSON document drives every command; CLI flags
//! override individual fields. The effective configuration is hashed and
//! stamped into every output file together with the seed, so a run can be
//! reproduced from its artifacts.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use cyberbond::bond::BondTerms;
use cyberbond::distributions::DistributionSpec;
use cyberbond::lossmodel::SimulationConfig;

use crate::CliError;

/// Bond terms as configured; absent triggers mean "never fires".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BondConfig {
    pub notional: f64,
    pub maturity_days: u32,
    pub coupon_days: Vec<u32>,
    pub coupon_value: f64,
    pub funding_rate: f64,
    #[serde(default)]
    pub coupon_trigger: Option<f64>,
    #[serde(default)]
    pub notional_trigger: Option<f64>,
}

impl BondConfig {
    pub fn to_terms(&self) -> BondTerms {
        BondTerms {
            notional: self.notional,
            maturity_days: self.maturity_days,
            coupon_days: self.coupon_days.clone(),
            coupon_value: self.coupon_value,
            funding_rate: self.funding_rate,
            coupon_trigger: self.coupon_trigger.unwrap_or(f64::INFINITY),
            notional_trigger: self.notional_trigger.unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSection {
    pub horizon_days: u32,
    pub n_paths: usize,
    /// Mandatory: there is no wall-clock default, every run is seeded.
    pub master_seed: Option<u64>,
    pub frequency: DistributionSpec,
    pub severity: DistributionSpec,
}

impl SimulationSection {
    pub fn to_config(&self) -> Result<SimulationConfig, CliError> {
        let master_seed = self.master_seed.ok_or_else(|| {
            CliError::Config("master_seed is required (set it in the config or pass --seed)".into())
        })?;
        Ok(SimulationConfig {
            horizon_days: self.horizon_days,
            n_paths: self.n_paths,
            master_seed,
            frequency: self.frequency,
            severity: self.severity,
        })
    }
}

/// Trigger grids for curves and par-yield averaging: points uniform in value
/// between two total-loss quantiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriggerGridSection {
    pub coupon_quantile_low: f64,
    pub coupon_quantile_high: f64,
    pub coupon_points: usize,
    pub notional_quantile_low: f64,
    pub notional_quantile_high: f64,
    pub notional_points: usize,
}

impl Default for TriggerGridSection {
    fn default() -> Self {
        TriggerGridSection {
            coupon_quantile_low: 0.10,
            coupon_quantile_high: 0.90,
            coupon_points: 9,
            notional_quantile_low: 0.10,
            notional_quantile_high: 0.99,
            notional_points: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouponQuoteSection {
    pub reference_rate_pct: f64,
    pub constant_pct: f64,
    pub multiplier: f64,
    pub pnl_pct: f64,
    /// Explicit PL override in percent; computed from the simulation when
    /// absent.
    #[serde(default)]
    pub pl_pct: Option<f64>,
}

impl Default for CouponQuoteSection {
    fn default() -> Self {
        CouponQuoteSection {
            reference_rate_pct: 2.05,
            constant_pct: 0.0,
            multiplier: 1.0,
            pnl_pct: 100.0,
            pl_pct: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreeksSection {
    pub bump_rel: f64,
    pub bump_abs_floor: f64,
    /// Also evaluate the lower/upper bound parameter sets of the confidence
    /// box (needs standard errors).
    pub corners: bool,
    pub confidence_level: f64,
    /// Standard errors for the frequency parameters, needed in corner mode.
    #[serde(default)]
    pub frequency_ses: Option<Vec<f64>>,
    #[serde(default)]
    pub severity_ses: Option<Vec<f64>>,
}

impl Default for GreeksSection {
    fn default() -> Self {
        GreeksSection {
            bump_rel: 0.01,
            bump_abs_floor: 1e-4,
            corners: false,
            confidence_level: 0.99,
            frequency_ses: None,
            severity_ses: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSection {
    pub events_csv: PathBuf,
    #[serde(default)]
    pub interval_families: Option<Vec<String>>,
    #[serde(default)]
    pub loss_families: Option<Vec<String>>,
    #[serde(default)]
    pub category: Option<String>,
}

/// The whole run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub bond: Option<BondConfig>,
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub trigger_grids: TriggerGridSection,
    #[serde(default)]
    pub coupon_quote: CouponQuoteSection,
    #[serde(default)]
    pub greeks: GreeksSection,
    pub fit: Option<FitSection>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: default_out_dir(),
            bond: None,
            simulation: None,
            trigger_grids: TriggerGridSection::default(),
            coupon_quote: CouponQuoteSection::default(),
            greeks: GreeksSection::default(),
            fit: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.check_referenced_files()?;
        Ok(config)
    }

    /// Referenced input files must exist at load time.
    fn check_referenced_files(&self) -> Result<(), CliError> {
        if let Some(fit) = &self.fit {
            if !fit.events_csv.exists() {
                return Err(CliError::Config(format!(
                    "events file {} does not exist",
                    fit.events_csv.display()
                )));
            }
        }
        Ok(())
    }

    pub fn bond(&self) -> Result<&BondConfig, CliError> {
        self.bond
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no 'bond' section".into()))
    }

    pub fn simulation(&self) -> Result<&SimulationSection, CliError> {
        self.simulation
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no 'simulation' section".into()))
    }

    pub fn fit(&self) -> Result<&FitSection, CliError> {
        self.fit
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no 'fit' section".into()))
    }

    /// SHA-256 over the effective configuration JSON. The output directory
    /// does not influence results and is excluded, so runs into different
    /// directories hash identically.
    pub fn hash(&self) -> String {
        let mut hashable = self.clone();
        hashable.out_dir = PathBuf::new();
        let canonical = serde_json::to_string(&hashable).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
