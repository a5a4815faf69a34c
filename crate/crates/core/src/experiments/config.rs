use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::floquet::{CoupledParams, CouplingScale, TopParams, DEFAULT_DIM_CAP};
use crate::spin::SpinQuantum;
use crate::states::{EnsembleKind, EnsembleSpec};
use crate::{Error, Result};

/// Which product ensembles an experiment samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleSelection {
    Su2,
    Sud,
    #[default]
    Both,
}

impl EnsembleSelection {
    pub fn kinds(&self) -> Vec<EnsembleKind> {
        match self {
            EnsembleSelection::Su2 => vec![EnsembleKind::Su2],
            EnsembleSelection::Sud => vec![EnsembleKind::Sud],
            EnsembleSelection::Both => vec![EnsembleKind::Su2, EnsembleKind::Sud],
        }
    }
}

impl std::str::FromStr for EnsembleSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "su2" => Ok(EnsembleSelection::Su2),
            "sud" => Ok(EnsembleSelection::Sud),
            "both" => Ok(EnsembleSelection::Both),
            other => Err(Error::Parameter(format!("unknown ensemble '{other}' (expected su2, sud or both)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default)]
    pub kind: EnsembleSelection,
    pub count: usize,
}

/// How the asymptotic window average is taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AsymptoticMethod {
    /// `asymptotic_samples` kicks spread over the window, each reached in one
    /// step through the eigendecomposition.
    #[default]
    Spectral,
    /// Every kick of the window, by direct propagation.
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    /// Values of `j`; the tops are `j₁ = j`, `j₂ = j + ½`.
    pub j_list: Vec<SpinQuantum>,
    pub k_list: Vec<f64>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        let j_list = [5.0, 7.5, 10.0, 12.5, 15.0, 19.5].iter().map(|&j| SpinQuantum::new(j).unwrap()).collect();
        ScalingConfig { j_list, k_list: vec![0.01, 6.0] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalConfig {
    pub n_points: usize,
    pub n_steps: usize,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        ClassicalConfig { n_points: 200, n_steps: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    pub j_list: Vec<SpinQuantum>,
    pub samples: usize,
}

impl Default for MomentsConfig {
    fn default() -> Self {
        let j_list = [0.5, 1.0, 5.0].iter().map(|&j| SpinQuantum::new(j).unwrap()).collect();
        MomentsConfig { j_list, samples: 100_000 }
    }
}

fn default_samples() -> usize {
    32
}

fn default_dim_cap() -> usize {
    DEFAULT_DIM_CAP
}

/// Everything that determines an experiment's numbers, plus where to put them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub j1: SpinQuantum,
    pub j2: SpinQuantum,
    pub epsilon: f64,
    pub k_list: Vec<f64>,
    pub ensemble: EnsembleConfig,
    pub kicks: u64,
    pub asymptotic_window: (u64, u64),
    pub fit_window: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub coupling_scale: CouplingScale,
    #[serde(default)]
    pub asymptotic_method: AsymptoticMethod,
    #[serde(default = "default_samples")]
    pub asymptotic_samples: usize,
    #[serde(default = "default_dim_cap")]
    pub dim_cap: usize,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub scaling: ScalingConfig,
    #[serde(default)]
    pub classical: ClassicalConfig,
    #[serde(default)]
    pub moments: MomentsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            j1: SpinQuantum::from_twice(39),
            j2: SpinQuantum::from_twice(40),
            epsilon: 0.01,
            k_list: vec![0.01, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0],
            ensemble: EnsembleConfig { kind: EnsembleSelection::Both, count: 100 },
            kicks: 40_000,
            asymptotic_window: (20_000, 40_000),
            fit_window: 15,
            seed: 7,
            output_dir: PathBuf::from("results"),
            coupling_scale: CouplingScale::Geometric,
            asymptotic_method: AsymptoticMethod::Spectral,
            asymptotic_samples: default_samples(),
            dim_cap: DEFAULT_DIM_CAP,
            cache_dir: None,
            scaling: ScalingConfig::default(),
            classical: ClassicalConfig::default(),
            moments: MomentsConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let (start, end) = self.asymptotic_window;
        if start >= end || end > self.kicks {
            return Err(Error::Config(format!(
                "asymptotic_window ({start}, {end}) must satisfy start < end <= kicks = {}",
                self.kicks
            )));
        }
        if self.fit_window < 3 {
            return Err(Error::Config(format!("fit_window = {} is below 3", self.fit_window)));
        }
        if self.fit_window as u64 > self.kicks {
            return Err(Error::Config(format!("fit_window = {} exceeds kicks = {}", self.fit_window, self.kicks)));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::Config("epsilon must be finite".into()));
        }
        if self.k_list.is_empty() {
            return Err(Error::Config("k_list is empty".into()));
        }
        if let Some(k) = self.k_list.iter().chain(&self.scaling.k_list).find(|k| !k.is_finite() || **k < 0.0) {
            return Err(Error::Config(format!("kick strength {k} must be finite and non-negative")));
        }
        if self.ensemble.count == 0 {
            return Err(Error::Config("ensemble.count must be at least 1".into()));
        }
        if self.asymptotic_samples == 0 {
            return Err(Error::Config("asymptotic_samples must be at least 1".into()));
        }
        if self.j1.dim() * self.j2.dim() > self.dim_cap {
            return Err(Error::Resource(format!(
                "product dimension {} exceeds dim_cap {}",
                self.j1.dim() * self.j2.dim(),
                self.dim_cap
            )));
        }
        Ok(())
    }

    /// SHA-256 over every field that influences the numbers (the output and
    /// cache locations are excluded), hex-encoded and cut to 16 characters.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        canonical.cache_dir = None;
        let digest = Sha256::digest(canonical.to_toml_string().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn params(&self, k: f64) -> Result<CoupledParams> {
        self.params_for(self.j1, self.j2, k)
    }

    pub fn params_for(&self, j1: SpinQuantum, j2: SpinQuantum, k: f64) -> Result<CoupledParams> {
        CoupledParams::new(TopParams::new(j1, k)?, TopParams::new(j2, k)?, self.epsilon, self.coupling_scale)
    }

    pub fn ensemble_spec(&self, kind: EnsembleKind) -> Result<EnsembleSpec> {
        EnsembleSpec::new(kind, self.ensemble.count, self.seed)
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join("cache"))
    }
}
