//! Experiment configuration: one strict JSON document drives every command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distances::{Heuristic, DEFAULT_EPSILON, DEFAULT_FOLDS};
use crate::error::{Error, Result};
use crate::kflow::{GridSpec, SolverConfig};
use crate::metrics::{Metric, SrmseMode};
use crate::rng::derive_seed;
use crate::samplers::{check_compatible, Framework, SamplerSpec};
use crate::training::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub n_traj: usize,
    pub grid: GridSpec,
    pub solver: SolverConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_traj: 100,
            grid: GridSpec::default(),
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceConfig {
    pub heuristic: Heuristic,
    pub epsilon: f64,
    pub folds: usize,
    pub keep: f64,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self {
            heuristic: Heuristic::SlicedWasserstein,
            epsilon: DEFAULT_EPSILON,
            folds: DEFAULT_FOLDS,
            keep: 0.8,
        }
    }
}

fn default_sampler() -> SamplerSpec {
    SamplerSpec::new(Framework::SiEuler, 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Root of every random stream used by the commands.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub train: TrainConfig,
    pub sampler: SamplerSpec,
    pub metrics: Vec<Metric>,
    pub srmse_mode: SrmseMode,
    pub distances: DistanceConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            dataset: DatasetConfig::default(),
            train: TrainConfig::default(),
            sampler: default_sampler(),
            metrics: Metric::ALL.to_vec(),
            srmse_mode: SrmseMode::Pooled,
            distances: DistanceConfig::default(),
        }
    }
}

/// Seeds actually used by each stage, derived from the root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectiveSeeds {
    pub root: u64,
    pub dataset: u64,
    pub train: u64,
    pub sampler: u64,
    pub distances: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(list) => Error::Config(
                list.into_iter()
                    .map(|m| format!("{}: {m}", path.display()))
                    .collect(),
            ),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn digest(&self) -> String {
        let compact = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&compact))
    }

    /// Every violated constraint, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.dataset.n_traj == 0 {
            p.push("dataset.n_traj must be at least 1".to_string());
        }
        for (section, r) in [
            ("dataset.grid", self.dataset.grid.validate()),
            ("dataset.solver", self.dataset.solver.validate()),
        ] {
            if let Err(Error::Config(list)) = r {
                p.extend(list.into_iter().map(|m| format!("{section}: {m}")));
            }
        }
        if self.dataset.solver.nu <= 0.0 {
            p.push("dataset.solver: nu must be positive".to_string());
        }
        p.extend(self.train.problems());
        match self.sampler.validated() {
            Err(Error::Config(list)) => p.extend(list.into_iter().map(|m| format!("sampler: {m}"))),
            Err(e) => p.push(format!("sampler: {e}")),
            Ok(spec) => {
                if let Err(e) = check_compatible(self.train.head(), spec.framework) {
                    p.push(e.to_string());
                }
                if spec.framework == Framework::Ddim && spec.steps > self.train.diffusion.steps {
                    p.push(format!(
                        "sampler: DDIM steps ({}) exceed train.diffusion.steps ({})",
                        spec.steps, self.train.diffusion.steps
                    ));
                }
            }
        }
        if self.metrics.is_empty() {
            p.push("metrics must list at least one metric".to_string());
        }
        let d = &self.distances;
        if !(d.epsilon > 0.0 && d.epsilon < 1.0) {
            p.push(format!(
                "distances.epsilon must lie in (0, 1), got {}",
                d.epsilon
            ));
        }
        if d.folds == 0 {
            p.push("distances.folds must be at least 1".to_string());
        }
        if !(d.keep > 0.0 && d.keep <= 1.0) {
            p.push(format!("distances.keep must lie in (0, 1], got {}", d.keep));
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }

    /// The training and sampler seeds act as replica indices under the root seed.
    pub fn seeds(&self) -> EffectiveSeeds {
        EffectiveSeeds {
            root: self.seed,
            dataset: derive_seed(self.seed, "dataset", 0),
            train: derive_seed(self.seed, "train", self.train.seed),
            sampler: derive_seed(self.seed, "sampler", self.sampler.seed),
            distances: derive_seed(self.seed, "distances", 0),
        }
    }

    pub fn effective_train(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seeds().train,
            ..self.train
        }
    }

    pub fn effective_sampler(&self) -> SamplerSpec {
        SamplerSpec {
            seed: self.seeds().sampler,
            ..self.sampler
        }
    }
}
