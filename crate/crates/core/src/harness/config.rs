use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::Reference;
use crate::disturbances::RandomizationRanges;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorGains, EstimatorKind};
use crate::metalearn::MetaConfig;
use crate::plant::{CollectConfig, NoiseConfig, PlantConfig};

/// Disturbance tier of a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    MetaLearn,
    Shifted,
}

impl Tier {
    pub const ALL: [Tier; 2] = [Tier::MetaLearn, Tier::Shifted];

    pub fn name(self) -> &'static str {
        match self {
            Tier::MetaLearn => "meta_learn",
            Tier::Shifted => "shifted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TierRanges {
    pub meta_learn: RandomizationRanges,
    pub shifted: RandomizationRanges,
}

impl Default for TierRanges {
    fn default() -> Self {
        Self {
            meta_learn: RandomizationRanges::meta_learn(),
            shifted: RandomizationRanges::shifted(),
        }
    }
}

impl TierRanges {
    pub fn get(&self, tier: Tier) -> &RandomizationRanges {
        match tier {
            Tier::MetaLearn => &self.meta_learn,
            Tier::Shifted => &self.shifted,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub kp: f64,
    pub kv: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self { kp: 4.0, kv: 4.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub gains: EstimatorGains,
    /// Tracking-error gain used when the estimate is fed forward.
    pub gamma_control: f64,
    pub l1_cutoff: f64,
    pub l1_predictor_gain: f64,
    pub ls_window: usize,
    pub ls_lambda: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            gains: EstimatorGains::default(),
            gamma_control: 1.0,
            l1_cutoff: 10.0,
            l1_predictor_gain: 1.0,
            ls_window: 10,
            ls_lambda: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// Paired scenarios per method.
    pub scenarios: usize,
    /// Seconds per rollout.
    pub duration: f64,
    /// Tier the Fourier component is sampled from.
    pub fourier_tier: Tier,
    /// Multiplies the tier's amplitude and offset ranges.
    pub fourier_scale: f64,
    /// Linear drag coefficients (N s/m) per axis.
    pub drag: Vec<f64>,
    /// Relative mass error; adds `ratio * gravity` as a constant disturbance.
    pub mass_ratio: f64,
    pub reference: Reference,
    /// Trailing fraction of each rollout used for RMSE.
    pub rmse_fraction: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            scenarios: 4,
            duration: 10.0,
            fourier_tier: Tier::MetaLearn,
            fourier_scale: 0.25,
            drag: vec![0.6, 0.6, 0.3],
            mass_ratio: 0.12,
            reference: Reference::Lemniscate {
                center: vec![0.0, 0.0, 1.5],
                radius: 3.0,
                period: 8.0,
            },
            rmse_fraction: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub depths: Vec<usize>,
    pub support_lens: Vec<usize>,
    /// Training epochs per grid cell.
    pub epochs: usize,
    /// Fraction of each tier's trajectories held out for evaluation.
    pub holdout_fraction: f64,
    /// Adaptation gain for the online mode.
    pub online_gain: f64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            depths: vec![1, 3],
            support_lens: vec![5, 10, 20],
            epochs: 40,
            holdout_fraction: 0.2,
            online_gain: 20.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Dataset root holding one sub-directory per tier; defaults to `<out>/data`.
    pub data_dir: Option<PathBuf>,
    /// Weight file; defaults to `<out>/weights.json`.
    pub weights: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub plant: PlantConfig<f64>,
    pub noise: NoiseConfig,
    pub disturbances: TierRanges,
    pub collect: CollectConfig,
    pub meta: MetaConfig,
    pub controller: ControllerConfig,
    pub estimator: EstimatorConfig,
    pub benchmark: BenchmarkConfig,
    pub ablation: AblationConfig,
    pub paths: PathsConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.plant.validate().map_err(wrap)?;
        self.noise.validate().map_err(wrap)?;
        self.disturbances.meta_learn.validate().map_err(wrap)?;
        self.disturbances.shifted.validate().map_err(wrap)?;
        self.meta.validate().map_err(wrap)?;
        self.estimator.gains.validate().map_err(wrap)?;
        for kind in self.methods() {
            kind.validate(self.plant.dof).map_err(wrap)?;
        }
        self.benchmark.reference.validate().map_err(wrap)?;
        let b = &self.benchmark;
        if b.scenarios == 0
            || !(b.duration > 0.0)
            || !(b.rmse_fraction > 0.0 && b.rmse_fraction <= 1.0)
            || !(b.fourier_scale >= 0.0)
        {
            return Err(Error::Config(
                "benchmark needs scenarios >= 1, duration > 0, rmse_fraction in (0, 1], fourier_scale >= 0"
                    .into(),
            ));
        }
        if b.drag.len() != self.plant.dof || b.reference.dof() != self.plant.dof {
            return Err(Error::Config(
                "benchmark drag and reference must match plant dof".into(),
            ));
        }
        if !(self.controller.kp > 0.0) || !(self.controller.kv > 0.0) {
            return Err(Error::Config("controller gains must be positive".into()));
        }
        if self.ablation.depths.is_empty() || self.ablation.support_lens.is_empty() {
            return Err(Error::Config("ablation grid is empty".into()));
        }
        if !(0.0..1.0).contains(&self.ablation.holdout_fraction) {
            return Err(Error::Config("holdout_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// The six compared estimators, in report order.
    pub fn methods(&self) -> Vec<EstimatorKind> {
        let e = &self.estimator;
        vec![
            EstimatorKind::FirstOrder,
            EstimatorKind::L1Adapt {
                cutoff: e.l1_cutoff,
                predictor_gain: e.l1_predictor_gain,
            },
            EstimatorKind::VanillaNN {
                drag: self.benchmark.drag.clone(),
                mass: self.plant.mass,
            },
            EstimatorKind::MetaAdapt,
            EstimatorKind::MetaAdaptFC,
            EstimatorKind::MetaLSFC {
                window: e.ls_window,
                lambda: e.ls_lambda,
            },
        ]
    }

    pub fn data_dir(&self, out: &Path) -> PathBuf {
        self.paths
            .data_dir
            .clone()
            .unwrap_or_else(|| out.join("data"))
    }

    pub fn weights_path(&self, out: &Path) -> PathBuf {
        self.paths
            .weights
            .clone()
            .unwrap_or_else(|| out.join("weights.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.seed = 17;
        cfg.meta.depth = 1;
        cfg.benchmark.fourier_tier = Tier::Shifted;
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn unknown_fields_and_bad_values_rejected() {
        assert!(matches!(
            ExperimentConfig::from_toml("[plant]\nmas = 2.0\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_toml("[plant]\ndt = -0.1\n"),
            Err(Error::Config(_))
        ));
    }
}
