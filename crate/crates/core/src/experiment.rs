//! Command implementations behind the `sipbench` binary.
//!
//! Every command takes a validated [`ExperimentConfig`] and an output
//! directory. It writes its artifacts there together with `config.json` and a
//! `<command>.manifest.json` recording the config digest, effective seeds,
//! crate version and the digests of every input and output file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{EffectiveSeeds, ExperimentConfig};
use crate::container;
use crate::distances::{curves_csv, distance_curves, CurveConfig};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::kflow::{generate_dataset, Dataset};
use crate::metrics::{write_bytes, MetricReport};
use crate::samplers::{Framework, SamplerSpec};
use crate::training::{
    evaluate, load_checkpoint, save_checkpoint, split, train, write_history, TrainConfig,
    TrainedModel,
};

pub const DATASET_FILE: &str = "dataset.sipb";
pub const CHECKPOINT_FILE: &str = "checkpoint.sipb";
pub const HISTORY_FILE: &str = "loss_history.csv";
pub const PREDICTIONS_FILE: &str = "predictions.sipb";
pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const CURVES_FILE: &str = "distance_curves.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const CONFIG_FILE: &str = "config.json";

/// Environment variable capping worker threads; `0` means single-threaded.
pub const THREADS_ENV: &str = "SIPB_THREADS";

/// Configure the global thread pool from `SIPB_THREADS`. Unset leaves the default.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        Error::Config(vec![format!(
            "{THREADS_ENV} must be a nonnegative integer, got {raw:?}"
        )])
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub seeds: EffectiveSeeds,
    pub threads: Option<String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

fn file_digest(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ))
    }
}

/// Write `config.json` and the command manifest.
fn finish(
    cfg: &ExperimentConfig,
    out: &Path,
    command: &str,
    inputs: &[&Path],
    outputs: &[PathBuf],
) -> Result<Manifest> {
    write_bytes(&out.join(CONFIG_FILE), cfg.to_json().as_bytes())?;
    let manifest = Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: cfg.digest(),
        seeds: cfg.seeds(),
        threads: std::env::var(THREADS_ENV).ok(),
        inputs: inputs
            .iter()
            .map(|p| file_digest(p))
            .collect::<Result<_>>()?,
        outputs: outputs
            .iter()
            .map(|p| file_digest(p))
            .collect::<Result<_>>()?,
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    write_bytes(&out.join(format!("{command}.manifest.json")), &json)?;
    Ok(manifest)
}

fn frames_of(ds: &Dataset) -> Vec<Vec<Field>> {
    ds.trajectories.iter().map(|t| t.frames.clone()).collect()
}

pub fn cmd_gen_data(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let d = &cfg.dataset;
    let ds = generate_dataset(d.n_traj, d.grid, d.solver, cfg.seeds().dataset)?;
    if !ds.failed.is_empty() {
        log::warn!("{} trajectories failed: {:?}", ds.failed.len(), ds.failed);
    }
    let path = out.join(DATASET_FILE);
    ds.write(&path)?;
    finish(cfg, out, "gen-data", &[], &[path])
}

pub fn cmd_train(cfg: &ExperimentConfig, data: &Path, out: &Path) -> Result<Manifest> {
    require_file(data)?;
    let ds = Dataset::read(data)?;
    let (model, history) = train(&frames_of(&ds), &cfg.effective_train())?;
    let ckpt = out.join(CHECKPOINT_FILE);
    let hist = out.join(HISTORY_FILE);
    save_checkpoint(&model, &ckpt)?;
    write_history(&history, &hist)?;
    finish(cfg, out, "train", &[data], &[ckpt, hist])
}

pub const PREDICTIONS_KIND: &str = "predictions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionsHeader {
    pub kind: String,
    pub sampler: SamplerSpec,
    /// Dataset seed indices of the trajectories whose first frame started each rollout.
    pub trajectory_seed_indices: Vec<u64>,
    /// `[rollouts, frames, rows, cols]`.
    pub shape: [usize; 4],
    pub dtype: String,
    pub dt_frame: f64,
}

pub fn write_predictions(
    path: &Path,
    header: &PredictionsHeader,
    rollouts: &[Vec<Field>],
) -> Result<()> {
    let payload: Vec<f32> = rollouts
        .iter()
        .flatten()
        .flat_map(|f| f.as_slice().iter().map(|&v| v as f32))
        .collect();
    container::write(path, header, &payload)
}

pub fn read_predictions(path: &Path) -> Result<(PredictionsHeader, Vec<Vec<Field>>)> {
    require_file(path)?;
    let (h, data): (PredictionsHeader, Vec<f32>) = container::read(path)?;
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if h.kind != PREDICTIONS_KIND {
        return Err(bad(format!("expected predictions, found {:?}", h.kind)));
    }
    let [n, nf, r, c] = h.shape;
    if data.len() != n * nf * r * c || h.trajectory_seed_indices.len() != n {
        return Err(bad(
            "payload size or trajectory list disagrees with the header".into(),
        ));
    }
    let rollouts = if r * c == 0 {
        Vec::new()
    } else {
        data.chunks_exact(nf * r * c)
            .map(|chunk| {
                chunk
                    .chunks_exact(r * c)
                    .map(|f| {
                        Field::from_vec(r, c, f.iter().map(|&v| v as f64).collect()).expect("sized")
                    })
                    .collect()
            })
            .collect()
    };
    Ok((h, rollouts))
}

fn validation_trajectories(cfg: &ExperimentConfig, ds: &Dataset) -> (Vec<u64>, Vec<Vec<Field>>) {
    let all = frames_of(ds);
    let (_, val) = split(&all, cfg.train.val_fraction);
    let start = all.len() - val.len();
    let ids = ds.trajectories[start..]
        .iter()
        .map(|t| t.seed_index)
        .collect();
    (ids, val.to_vec())
}

pub fn cmd_rollout(
    cfg: &ExperimentConfig,
    ckpt: &Path,
    data: &Path,
    out: &Path,
) -> Result<Manifest> {
    require_file(ckpt)?;
    require_file(data)?;
    let model = load_checkpoint(ckpt)?;
    let ds = Dataset::read(data)?;
    let (ids, val) = validation_trajectories(cfg, &ds);
    if val.is_empty() {
        return Err(Error::InvalidParameter(
            "dataset has no validation trajectories".into(),
        ));
    }
    let spec = cfg.effective_sampler();
    let ev = evaluate(&model, &val, spec, &cfg.metrics, cfg.srmse_mode)?;
    let (r, c) = ds.frame_shape();
    let header = PredictionsHeader {
        kind: PREDICTIONS_KIND.to_string(),
        sampler: spec,
        trajectory_seed_indices: ids,
        shape: [ev.predictions.len(), val[0].len(), r, c],
        dtype: container::DTYPE_F32LE.to_string(),
        dt_frame: ds.config.dt_frame(),
    };
    let path = out.join(PREDICTIONS_FILE);
    write_predictions(&path, &header, &ev.predictions)?;
    finish(cfg, out, "rollout", &[ckpt, data], &[path])
}

pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    pred: &Path,
    truth: &Path,
    out: &Path,
) -> Result<Manifest> {
    require_file(pred)?;
    require_file(truth)?;
    let (h, preds) = read_predictions(pred)?;
    let ds = Dataset::read(truth)?;
    let mut truths = Vec::with_capacity(preds.len());
    for id in &h.trajectory_seed_indices {
        let t = ds
            .trajectories
            .iter()
            .find(|t| t.seed_index == *id)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "truth dataset has no trajectory with seed index {id}"
                ))
            })?;
        truths.push(t.frames.clone());
    }
    let truth_shape = [truths.len(), ds.n_frames(), ds.grid.n, ds.grid.n];
    if h.shape != truth_shape {
        return Err(Error::InvalidParameter(format!(
            "prediction shape {:?} does not match truth shape {:?}",
            h.shape, truth_shape
        )));
    }
    let report = MetricReport::from_rollouts(&preds, &truths, &cfg.metrics, cfg.srmse_mode, true)?;
    let (csv, json) = (out.join(METRICS_CSV), out.join(METRICS_JSON));
    report.write(&csv, &json)?;
    finish(cfg, out, "evaluate", &[pred, truth], &[csv, json])
}

pub fn cmd_distances(cfg: &ExperimentConfig, data: &Path, out: &Path) -> Result<Manifest> {
    require_file(data)?;
    let ds = Dataset::read(data)?;
    let d = &cfg.distances;
    let curve_cfg = CurveConfig {
        heuristic: d.heuristic,
        epsilon: d.epsilon,
        folds: d.folds,
        keep: d.keep,
        seed: cfg.seeds().distances,
    };
    let points = distance_curves(&frames_of(&ds), &curve_cfg)?;
    let path = out.join(CURVES_FILE);
    write_bytes(&path, curves_csv(&points).as_bytes())?;
    finish(cfg, out, "distances", &[data], &[path])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Steps,
    Sigma,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steps" => Ok(Self::Steps),
            "sigma" => Ok(Self::Sigma),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep axis {other:?} (expected steps or sigma)"
            ))),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Steps => "steps",
            SweepAxis::Sigma => "sigma",
        }
    }
}

/// One sweep row: the axis value and the time-averaged metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub report: MetricReport,
}

/// Evaluate the configured sampler across `values` of one axis.
///
/// `steps` trains once and varies the sampler step count. `sigma` trains one
/// model per noise scale; interpolant SDE sampling uses the same scale.
pub fn sweep(
    cfg: &ExperimentConfig,
    trajectories: &[Vec<Field>],
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep needs at least one value".into(),
        ));
    }
    let (_, val) = split(trajectories, cfg.train.val_fraction);
    if val.is_empty() {
        return Err(Error::InvalidParameter(
            "dataset has no validation trajectories".into(),
        ));
    }
    let base_spec = cfg.effective_sampler();
    let eval = |model: &TrainedModel, spec: SamplerSpec| -> Result<MetricReport> {
        Ok(evaluate(model, val, spec, &cfg.metrics, cfg.srmse_mode)?.report)
    };
    match axis {
        SweepAxis::Steps => {
            let (model, _) = train(trajectories, &cfg.effective_train())?;
            values
                .iter()
                .map(|&v| {
                    if !(v >= 1.0 && v.fract() == 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "step counts must be positive integers, got {v}"
                        )));
                    }
                    let spec = SamplerSpec {
                        steps: v as usize,
                        ..base_spec
                    };
                    Ok(SweepRow {
                        value: v,
                        report: eval(&model, spec)?,
                    })
                })
                .collect()
        }
        SweepAxis::Sigma => values
            .iter()
            .map(|&v| {
                let tc = TrainConfig {
                    sigma: v,
                    ..cfg.effective_train()
                };
                let (model, _) = train(trajectories, &tc)?;
                let spec = if base_spec.framework == Framework::SiEm {
                    SamplerSpec {
                        sigma: v,
                        ..base_spec
                    }
                } else {
                    base_spec
                };
                Ok(SweepRow {
                    value: v,
                    report: eval(&model, spec)?,
                })
            })
            .collect(),
    }
}

/// CSV with header `<axis>,<metric columns>` and one row per value, in input order.
pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut s = String::from(axis.name());
    let columns: Vec<String> = rows
        .first()
        .map(|r| r.report.columns.clone())
        .unwrap_or_default();
    for c in &columns {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{}", r.value);
        for c in &columns {
            let _ = write!(s, ",{:e}", r.report.summary[c]);
        }
        s.push('\n');
    }
    s
}

pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    data: &Path,
    axis: SweepAxis,
    values: &[f64],
    out: &Path,
) -> Result<Manifest> {
    require_file(data)?;
    let ds = Dataset::read(data)?;
    let rows = sweep(cfg, &frames_of(&ds), axis, values)?;
    let path = out.join(SWEEP_FILE);
    write_bytes(&path, sweep_csv(axis, &rows).as_bytes())?;
    finish(cfg, out, "sweep", &[data], &[path])
}
