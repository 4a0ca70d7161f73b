use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::charges::{ChargeModel, ChargeModelSpec, DurationMode};
use crate::error::{LabError, Result};

/// Experiments the laboratory knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentId {
    /// Incremental engine against direct multiple sums.
    Exactness,
    /// κ by two routes plus the Monte Carlo mean of I_n / n.
    Kappa,
    /// Gaussian limit of H_n in d >= 3.
    E1,
    /// Mixture limit in d = 1 at t = 1.
    E2,
    /// Mixture limit in d = 1 at fractional times.
    E3,
    /// Clock asymptotics and decomposition scaling.
    E4,
    /// Révész coupling error.
    E5,
    /// Small-ball bounds and the a* Laplace fit.
    E6,
    /// LIL trajectories.
    E7,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 9] = [
        ExperimentId::Exactness,
        ExperimentId::Kappa,
        ExperimentId::E1,
        ExperimentId::E2,
        ExperimentId::E3,
        ExperimentId::E4,
        ExperimentId::E5,
        ExperimentId::E6,
        ExperimentId::E7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Exactness => "exactness",
            ExperimentId::Kappa => "kappa",
            ExperimentId::E1 => "E1",
            ExperimentId::E2 => "E2",
            ExperimentId::E3 => "E3",
            ExperimentId::E4 => "E4",
            ExperimentId::E5 => "E5",
            ExperimentId::E6 => "E6",
            ExperimentId::E7 => "E7",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .iter()
            .copied()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| LabError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Size of a run: `Full` uses the acceptance sizes, `Quick` shrinks `n`
/// and the replicate counts for smoke testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    Quick,
    #[default]
    Full,
}

impl FromStr for Profile {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Profile::Quick),
            "full" => Ok(Profile::Full),
            other => Err(LabError::Config(format!("unknown profile `{other}` (expected quick or full)"))),
        }
    }
}

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Experiment description as read from a TOML file. Unset fields fall back
/// to per-experiment defaults that depend on the profile.
#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub dimensions: Option<Vec<usize>>,
    pub n_values: Option<Vec<u64>>,
    pub replicates: Option<u64>,
    pub charge_model: Option<ChargeModelSpec>,
    /// `unit` or `embedded`.
    pub duration_mode: Option<String>,
    /// Grid step for embedded durations and Brownian paths.
    pub grid_dt: Option<f64>,
    pub master_seed: Option<u64>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    /// Fractional times (E3).
    pub t_values: Option<Vec<f64>>,
    /// Small-ball levels (E6).
    pub y_values: Option<Vec<f64>>,
    /// Laplace-transform arguments (E6).
    pub lambdas: Option<Vec<f64>>,
    /// Named overrides of thresholds and numerical tolerances.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Count the starting site as a visit. Deliberately wrong; used to
    /// demonstrate that the intersection-count check catches it.
    #[serde(default)]
    pub count_initial_site: bool,
}

impl ExperimentConfig {
    pub fn for_experiment(id: ExperimentId) -> Self {
        ExperimentConfig { experiment: id.name().to_string(), ..Default::default() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn id(&self) -> Result<ExperimentId> {
        self.experiment.parse()
    }

    pub fn validate(&self) -> Result<()> {
        self.id()?;
        if self.replicates == Some(0) {
            return Err(LabError::Config("replicates must be at least 1".into()));
        }
        if let Some(ns) = &self.n_values {
            if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[1] <= w[0]) {
                return Err(LabError::Config("n_values must be positive and strictly increasing".into()));
            }
        }
        if let Some(ds) = &self.dimensions {
            if ds.is_empty() {
                return Err(LabError::Config("dimensions must not be empty".into()));
            }
        }
        if let Some(m) = &self.charge_model {
            m.build()?;
        }
        self.duration_mode()?;
        if let Some(dt) = self.grid_dt {
            if !(dt > 0.0 && dt <= 0.01) {
                return Err(LabError::Config(format!("grid_dt must lie in (0, 0.01], got {dt}")));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.master_seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn replicates_or(&self, default: u64) -> u64 {
        self.replicates.unwrap_or(default)
    }

    pub fn n_values_or(&self, default: &[u64]) -> Vec<u64> {
        self.n_values.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn dimensions_or(&self, default: &[usize]) -> Vec<usize> {
        self.dimensions.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn grid_dt_or(&self, default: f64) -> f64 {
        self.grid_dt.unwrap_or(default)
    }

    pub fn model_or(&self, default: ChargeModel) -> Result<ChargeModel> {
        self.charge_model.as_ref().map_or(Ok(default), ChargeModelSpec::build)
    }

    /// Parsed duration mode, if given.
    pub fn duration_mode(&self) -> Result<Option<DurationMode>> {
        match self.duration_mode.as_deref() {
            None => Ok(None),
            Some("unit") => Ok(Some(DurationMode::Unit)),
            Some("embedded") => Ok(Some(DurationMode::Embedded { grid_dt: self.grid_dt_or(1e-2) })),
            Some(other) => Err(LabError::Config(format!("unknown duration_mode `{other}` (expected unit or embedded)"))),
        }
    }

    pub fn duration_mode_or(&self, default: DurationMode) -> Result<DurationMode> {
        Ok(self.duration_mode()?.unwrap_or(default))
    }

    pub fn tol(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    /// SHA-256 of the configuration's canonical debug form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(format!("{self:?}").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
