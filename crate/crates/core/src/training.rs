//! Training loops for every framework and rollout-based evaluation.
//!
//! Data are standardized with statistics from the training split. Networks are
//! trained and sampled in standardized units; evaluation maps predictions back
//! to physical units before scoring.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::container;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::metrics::{write_bytes, Metric, MetricReport, SrmseMode};
use crate::model::{
    adam_update, AdamConfig, DriftNetwork, Example, LossHead, Moments, NetworkLayout,
};
use crate::process::{
    antithetic_pair, build_edm_schedule, build_linear_schedule, edm_forward, fm_forward,
    interpolant_point, interpolant_target, vp_forward, DiffusionSchedule, EdmSchedule,
    InterpolantSchedule,
};
use crate::rng::{derive_seed, gaussian_field, substream, Stream};
use crate::samplers::{rollout, Framework, Sampler, SamplerSpec, Schedules};

/// Loss above which training is considered divergent.
pub const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionParams {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        Self {
            steps: crate::process::DEFAULT_DIFFUSION_STEPS,
            beta_start: crate::process::DEFAULT_BETA_START,
            beta_end: crate::process::DEFAULT_BETA_END,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdmParams {
    pub steps: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub rho: f64,
}

impl Default for EdmParams {
    fn default() -> Self {
        let e = EdmSchedule::default();
        Self {
            steps: e.steps(),
            sigma_min: e.sigma_min,
            sigma_max: e.sigma_max,
            rho: e.rho,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkParams {
    pub time_embed_dim: usize,
    pub hidden_width: usize,
    pub depth: usize,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            time_embed_dim: 16,
            hidden_width: 256,
            depth: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Any framework trained with the wanted head; DDPM, DDIM and TSM share one.
    pub framework: Framework,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Interpolant noise scale.
    pub sigma: f64,
    /// Train the interpolant on `±z` pairs.
    pub antithetic: bool,
    /// Fraction of trajectories (taken from the end) held out for validation.
    pub val_fraction: f64,
    /// Optional cap on the number of training pairs, taken after shuffling.
    pub max_pairs: Option<usize>,
    pub diffusion: DiffusionParams,
    pub edm: EdmParams,
    pub network: NetworkParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            framework: Framework::SiEuler,
            epochs: 20,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            sigma: 1.0,
            antithetic: true,
            val_fraction: 0.1,
            max_pairs: None,
            diffusion: DiffusionParams::default(),
            edm: EdmParams::default(),
            network: NetworkParams::default(),
        }
    }
}

impl TrainConfig {
    /// Small configuration used for quick end-to-end checks.
    pub fn smoke(framework: Framework) -> Self {
        Self {
            framework,
            epochs: 50,
            batch_size: 20,
            max_pairs: Some(200),
            network: NetworkParams {
                time_embed_dim: 16,
                hidden_width: 64,
                depth: 3,
            },
            ..Self::default()
        }
    }

    pub fn head(&self) -> LossHead {
        self.framework.head()
    }

    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.epochs == 0 {
            p.push("train.epochs must be at least 1".to_string());
        }
        if self.batch_size == 0 {
            p.push("train.batch_size must be at least 1".to_string());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            p.push(format!(
                "train.learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            p.push(format!(
                "train.sigma must be finite and nonnegative, got {}",
                self.sigma
            ));
        }
        if self.head() == LossHead::Drift && self.antithetic && self.sigma == 0.0 {
            p.push("train.antithetic requires sigma > 0".to_string());
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            p.push(format!(
                "train.val_fraction must lie in [0, 1), got {}",
                self.val_fraction
            ));
        }
        if self.max_pairs == Some(0) {
            p.push("train.max_pairs must be at least 1 when set".to_string());
        }
        if self.network.depth == 0 || self.network.hidden_width == 0 {
            p.push("train.network depth and hidden_width must be at least 1".to_string());
        }
        if self.network.time_embed_dim == 0 || !self.network.time_embed_dim.is_multiple_of(2) {
            p.push("train.network.time_embed_dim must be even and positive".to_string());
        }
        let d = &self.diffusion;
        if d.steps < 2 || !(0.0 < d.beta_start && d.beta_start < d.beta_end && d.beta_end < 1.0) {
            p.push(
                "train.diffusion needs steps >= 2 and 0 < beta_start < beta_end < 1".to_string(),
            );
        }
        let e = &self.edm;
        if e.steps == 0 || !(0.0 < e.sigma_min && e.sigma_min < e.sigma_max) || !(e.rho > 0.0) {
            p.push("train.edm needs steps >= 1, 0 < sigma_min < sigma_max and rho > 0".to_string());
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

    pub fn schedules(&self) -> Result<Schedules> {
        let d = &self.diffusion;
        let e = &self.edm;
        Ok(Schedules {
            diffusion: build_linear_schedule(d.steps, d.beta_start, d.beta_end)?,
            edm: build_edm_schedule(e.steps, e.sigma_min, e.sigma_max, e.rho)?,
            interpolant: InterpolantSchedule::new(self.sigma)?,
        })
    }

    pub fn layout(&self, shape: (usize, usize)) -> NetworkLayout {
        NetworkLayout {
            state_shape: shape,
            conditioned: true,
            time_embed_dim: self.network.time_embed_dim,
            hidden_width: self.network.hidden_width,
            depth: self.network.depth,
            n_scalars: 0,
        }
    }
}

/// Affine map to zero mean and unit variance, shared by every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub std: f64,
}

impl Standardization {
    pub const IDENTITY: Standardization = Standardization {
        mean: 0.0,
        std: 1.0,
    };

    pub fn fit(trajectories: &[Vec<Field>]) -> Result<Self> {
        let mut n = 0usize;
        let mut sum = 0.0;
        for f in trajectories.iter().flatten() {
            n += f.len();
            sum += f.as_slice().iter().sum::<f64>();
        }
        if n == 0 {
            return Err(Error::InvalidParameter(
                "cannot standardize an empty dataset".into(),
            ));
        }
        let mean = sum / n as f64;
        let ss: f64 = trajectories
            .iter()
            .flatten()
            .map(|f| {
                f.as_slice()
                    .iter()
                    .map(|v| (v - mean) * (v - mean))
                    .sum::<f64>()
            })
            .sum();
        let std = (ss / n as f64).sqrt();
        Ok(Self {
            mean,
            std: if std > 0.0 { std } else { 1.0 },
        })
    }

    pub fn apply(&self, f: &Field) -> Field {
        f.map(|v| (v - self.mean) / self.std)
    }

    pub fn invert(&self, f: &Field) -> Field {
        f.map(|v| v * self.std + self.mean)
    }
}

/// Index of one transition `frame -> frame + 1` inside trajectory `traj`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub traj: usize,
    pub frame: usize,
}

/// Every adjacent pair of every trajectory, in trajectory-major order.
pub fn make_pairs(trajectories: &[Vec<Field>]) -> Result<Vec<Pair>> {
    let pairs: Vec<Pair> = trajectories
        .iter()
        .enumerate()
        .flat_map(|(traj, frames)| {
            (0..frames.len().saturating_sub(1)).map(move |frame| Pair { traj, frame })
        })
        .collect();
    if pairs.is_empty() {
        return Err(Error::InvalidParameter(
            "dataset has no transitions (need a trajectory with at least 2 frames)".into(),
        ));
    }
    Ok(pairs)
}

/// Deterministic permutation of `pairs` for the given seed and epoch.
pub fn shuffle_pairs(pairs: &mut [Pair], seed: u64, epoch: u64) {
    pairs.shuffle(&mut substream(seed, "pair-shuffle", epoch));
}

/// Number of trajectories held out at the end of the list.
pub fn validation_count(n_traj: usize, fraction: f64) -> usize {
    if n_traj < 2 || fraction <= 0.0 {
        return 0;
    }
    ((n_traj as f64 * fraction).round() as usize).clamp(1, n_traj - 1)
}

/// Split into `(train, validation)`, holding out the last trajectories.
pub fn split(trajectories: &[Vec<Field>], fraction: f64) -> (&[Vec<Field>], &[Vec<Field>]) {
    let n_val = validation_count(trajectories.len(), fraction);
    trajectories.split_at(trajectories.len() - n_val)
}

/// Builds the training examples of one framework from a transition `x0 -> x1`.
pub struct ExampleBuilder {
    head: LossHead,
    antithetic: bool,
    schedules: Schedules,
}

impl ExampleBuilder {
    pub fn new(cfg: &TrainConfig) -> Result<Self> {
        Ok(Self {
            head: cfg.head(),
            antithetic: cfg.antithetic,
            schedules: cfg.schedules()?,
        })
    }

    pub fn head(&self) -> LossHead {
        self.head
    }

    /// One example, or two for antithetic interpolant training.
    pub fn push(
        &self,
        x0: &Field,
        x1: &Field,
        rng: &mut Stream,
        out: &mut Vec<Example>,
    ) -> Result<()> {
        let (rows, cols) = x0.shape();
        let s = &self.schedules;
        match self.head {
            LossHead::Drift | LossHead::DriftExpanded => {
                let si = &s.interpolant;
                let t = si.sample_training_time(rng);
                let z = gaussian_field(rng, rows, cols);
                if self.antithetic && si.sigma > 0.0 {
                    let (p, m) = antithetic_pair(si, x0, x1, &z, t)?;
                    for smp in [p, m] {
                        out.push(Example {
                            x_t: smp.x_t,
                            cond: x0.clone(),
                            t,
                            target: smp.target,
                        });
                    }
                } else {
                    out.push(Example {
                        x_t: interpolant_point(si, x0, x1, &z, t)?,
                        cond: x0.clone(),
                        t,
                        target: interpolant_target(si, x0, x1, &z, t)?,
                    });
                }
            }
            LossHead::Epsilon => {
                let d: &DiffusionSchedule = &s.diffusion;
                let step = rng.random_range(0..d.steps());
                let z = gaussian_field(rng, rows, cols);
                let smp = vp_forward(d, x1, &z, step)?;
                out.push(Example {
                    x_t: smp.x_t,
                    cond: x0.clone(),
                    t: d.time_input(step),
                    target: smp.target,
                });
            }
            LossHead::Velocity => {
                let t: f64 = rng.random_range(0.0..1.0);
                let z = gaussian_field(rng, rows, cols);
                let smp = fm_forward(x1, &z, t)?;
                out.push(Example {
                    x_t: smp.x_t,
                    cond: x0.clone(),
                    t,
                    target: smp.target,
                });
            }
            LossHead::Denoiser => {
                let sigma = s.edm.sample_training_sigma(rng);
                let z = gaussian_field(rng, rows, cols);
                let smp = edm_forward(x1, &z, sigma)?;
                out.push(Example {
                    x_t: smp.x_t,
                    cond: x0.clone(),
                    t: s.edm.time_input(sigma),
                    target: smp.target,
                });
            }
            LossHead::Regression => out.push(Example {
                x_t: x0.clone(),
                cond: x0.clone(),
                t: 0.0,
                target: x1.zip_map(x0, |a, b| a - b),
            }),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: f64,
    pub val: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    /// Training-set loss of the initial network, measured with the validation noise stream.
    pub initial_train: f64,
    pub epochs: Vec<EpochLoss>,
}

impl LossHistory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss\n");
        for e in &self.epochs {
            let val = e.val.map(|v| format!("{v:e}")).unwrap_or_default();
            let _ = writeln!(s, "{},{:e},{}", e.epoch, e.train, val);
        }
        s
    }

    pub fn is_finite(&self) -> bool {
        self.initial_train.is_finite()
            && self
                .epochs
                .iter()
                .all(|e| e.train.is_finite() && e.val.is_none_or(f64::is_finite))
    }
}

/// A trained network with everything needed to sample from it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub net: DriftNetwork,
    pub config: TrainConfig,
    pub schedules: Schedules,
    pub standardization: Standardization,
}

impl TrainedModel {
    pub fn head(&self) -> LossHead {
        self.config.head()
    }

    /// Sampler for `spec` over the schedules the network was trained with.
    pub fn sampler(&self, spec: SamplerSpec) -> Result<Sampler<'_>> {
        Sampler::new(&self.net, self.head(), spec, self.schedules.clone())
    }

    /// Autoregressive rollout in physical units. Frame 0 is `initial`.
    pub fn rollout(
        &self,
        spec: SamplerSpec,
        initial: &Field,
        horizon: usize,
        seed: u64,
    ) -> Result<Vec<Field>> {
        let sampler = self.sampler(spec)?;
        let start = self.standardization.apply(initial);
        let frames = rollout(&sampler, &start, horizon, seed)?;
        Ok(frames
            .iter()
            .map(|f| self.standardization.invert(f))
            .collect())
    }
}

/// Mean loss over `pairs` using the fixed evaluation noise stream.
fn pair_loss(
    net: &DriftNetwork,
    builder: &ExampleBuilder,
    data: &[Vec<Field>],
    pairs: &[Pair],
    batch_size: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = substream(seed, "eval-noise", 0);
    let mut total = 0.0;
    let mut count = 0usize;
    for chunk in pairs.chunks(batch_size) {
        let mut batch = Vec::with_capacity(2 * chunk.len());
        for p in chunk {
            builder.push(
                &data[p.traj][p.frame],
                &data[p.traj][p.frame + 1],
                &mut rng,
                &mut batch,
            )?;
        }
        total += net.loss(&batch, builder.head())? * batch.len() as f64;
        count += batch.len();
    }
    Ok(total / count as f64)
}

fn standardize_all(trajectories: &[Vec<Field>], st: &Standardization) -> Vec<Vec<Field>> {
    trajectories
        .iter()
        .map(|t| t.iter().map(|f| st.apply(f)).collect())
        .collect()
}

/// Train a network for `cfg.framework` on the training split of `trajectories`.
///
/// The loop is single-threaded and fully determined by `cfg.seed`.
pub fn train(
    trajectories: &[Vec<Field>],
    cfg: &TrainConfig,
) -> Result<(TrainedModel, LossHistory)> {
    cfg.validate()?;
    let (train_raw, val_raw) = split(trajectories, cfg.val_fraction);
    let shape = train_raw
        .iter()
        .flatten()
        .next()
        .map(Field::shape)
        .ok_or_else(|| Error::InvalidParameter("dataset is empty".into()))?;
    for f in trajectories.iter().flatten() {
        if f.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: f.shape(),
            });
        }
        f.ensure_finite("training data")?;
    }
    let standardization = Standardization::fit(train_raw)?;
    let train_data = standardize_all(train_raw, &standardization);
    let val_data = standardize_all(val_raw, &standardization);

    let mut pairs = make_pairs(&train_data)?;
    if let Some(cap) = cfg.max_pairs {
        shuffle_pairs(&mut pairs, cfg.seed, u64::MAX);
        pairs.truncate(cap);
        pairs.sort_unstable();
    }
    let val_pairs = if val_data.is_empty() {
        Vec::new()
    } else {
        make_pairs(&val_data)?
    };

    let builder = ExampleBuilder::new(cfg)?;
    // A zero output layer starts every framework from a zero prediction, which for
    // the residual heads is persistence; random heads make early rollouts blow up.
    let mut net =
        DriftNetwork::with_zero_head(cfg.layout(shape), derive_seed(cfg.seed, "network", 0))?;
    let adam = AdamConfig {
        lr: cfg.learning_rate,
        ..AdamConfig::default()
    };
    let mut moments = Moments::zeros(net.param_count());
    let mut history = LossHistory {
        initial_train: pair_loss(
            &net,
            &builder,
            &train_data,
            &pairs,
            cfg.batch_size,
            cfg.seed,
        )?,
        epochs: Vec::with_capacity(cfg.epochs),
    };
    let mut step = 0u64;
    let mut order = pairs.clone();
    for epoch in 0..cfg.epochs {
        shuffle_pairs(&mut order, cfg.seed, epoch as u64);
        let mut rng = substream(cfg.seed, "train-noise", epoch as u64);
        let (mut sum, mut count) = (0.0, 0usize);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut batch = Vec::with_capacity(2 * chunk.len());
            for p in chunk {
                builder.push(
                    &train_data[p.traj][p.frame],
                    &train_data[p.traj][p.frame + 1],
                    &mut rng,
                    &mut batch,
                )?;
            }
            let (loss, grads) = net.backward(&batch, builder.head())?;
            if !loss.is_finite()
                || loss > DIVERGENCE_LOSS
                || grads.values.iter().any(|g| !g.is_finite())
            {
                log::error!("training diverged at epoch {epoch}, batch {b}: loss {loss}");
                return Err(Error::TrainingDiverged {
                    epoch,
                    batch: b,
                    loss,
                });
            }
            step += 1;
            adam_update(net.params_mut(), &grads.values, &mut moments, step, &adam)?;
            sum += loss * batch.len() as f64;
            count += batch.len();
        }
        let val = if val_pairs.is_empty() {
            None
        } else {
            Some(pair_loss(
                &net,
                &builder,
                &val_data,
                &val_pairs,
                cfg.batch_size,
                cfg.seed,
            )?)
        };
        let train = sum / count as f64;
        log::info!("epoch {epoch}: train {train:.5e} val {val:?}");
        history.epochs.push(EpochLoss { epoch, train, val });
    }
    let model = TrainedModel {
        net,
        config: *cfg,
        schedules: builder.schedules,
        standardization,
    };
    Ok((model, history))
}

/// Training-set loss of `model` under the fixed evaluation noise stream.
pub fn training_loss(model: &TrainedModel, trajectories: &[Vec<Field>]) -> Result<f64> {
    let (train_raw, _) = split(trajectories, model.config.val_fraction);
    let data = standardize_all(train_raw, &model.standardization);
    let mut pairs = make_pairs(&data)?;
    if let Some(cap) = model.config.max_pairs {
        shuffle_pairs(&mut pairs, model.config.seed, u64::MAX);
        pairs.truncate(cap);
        pairs.sort_unstable();
    }
    let builder = ExampleBuilder::new(&model.config)?;
    pair_loss(
        &model.net,
        &builder,
        &data,
        &pairs,
        model.config.batch_size,
        model.config.seed,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricReport,
    /// Predicted rollouts in physical units, one per validation trajectory.
    pub predictions: Vec<Vec<Field>>,
}

/// Roll out from the first frame of every trajectory in `truths` for the full
/// trajectory length and score the predictions (initial frame excluded).
pub fn evaluate(
    model: &TrainedModel,
    truths: &[Vec<Field>],
    spec: SamplerSpec,
    metrics: &[Metric],
    mode: SrmseMode,
) -> Result<Evaluation> {
    if metrics.is_empty() {
        return Err(Error::InvalidParameter("metric set is empty".into()));
    }
    if truths.is_empty() {
        return Err(Error::InvalidParameter(
            "no trajectories to evaluate".into(),
        ));
    }
    let sampler = model.sampler(spec)?;
    let mut predictions = Vec::with_capacity(truths.len());
    for (i, truth) in truths.iter().enumerate() {
        if truth.len() < 2 {
            return Err(Error::InvalidParameter(
                "evaluation trajectories need at least 2 frames".into(),
            ));
        }
        let start = model.standardization.apply(&truth[0]);
        let frames = rollout(
            &sampler,
            &start,
            truth.len() - 1,
            derive_seed(spec.seed, "eval-trajectory", i as u64),
        )?;
        predictions.push(
            frames
                .iter()
                .map(|f| model.standardization.invert(f))
                .collect(),
        );
    }
    let report = MetricReport::from_rollouts(&predictions, truths, metrics, mode, true)?;
    Ok(Evaluation {
        report,
        predictions,
    })
}

pub const CHECKPOINT_KIND: &str = "checkpoint";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub kind: String,
    pub head: LossHead,
    pub layout: NetworkLayout,
    /// `(fan_in, fan_out)` of each layer; weights are stored `fan_out x fan_in` then biases.
    pub layer_shapes: Vec<(usize, usize)>,
    pub param_count: usize,
    pub dtype: String,
    pub train: TrainConfig,
    pub schedules: Schedules,
    pub standardization: Standardization,
}

/// Write parameters as little-endian f32 together with everything needed to sample.
pub fn save_checkpoint(model: &TrainedModel, path: &Path) -> Result<()> {
    let layout = *model.net.layout();
    let header = CheckpointHeader {
        kind: CHECKPOINT_KIND.to_string(),
        head: model.head(),
        layout,
        layer_shapes: layout.layer_dims(),
        param_count: model.net.param_count(),
        dtype: container::DTYPE_F32LE.to_string(),
        train: model.config,
        schedules: model.schedules.clone(),
        standardization: model.standardization,
    };
    let payload: Vec<f32> = model.net.params().iter().map(|&p| p as f32).collect();
    container::write(path, &header, &payload)
}

pub fn load_checkpoint(path: &Path) -> Result<TrainedModel> {
    let (h, payload): (CheckpointHeader, Vec<f32>) = container::read(path)?;
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if h.kind != CHECKPOINT_KIND {
        return Err(bad(format!("expected a checkpoint, found {:?}", h.kind)));
    }
    if h.dtype != container::DTYPE_F32LE {
        return Err(bad(format!("unsupported dtype {:?}", h.dtype)));
    }
    if h.layer_shapes != h.layout.layer_dims() || h.param_count != payload.len() {
        return Err(bad(
            "layer shapes or parameter count disagree with the payload".into(),
        ));
    }
    if h.head != h.train.head() {
        return Err(bad(
            "stored head disagrees with the training framework".into()
        ));
    }
    let net = DriftNetwork::from_params(h.layout, payload.iter().map(|&v| v as f64).collect())?;
    Ok(TrainedModel {
        net,
        config: h.train,
        schedules: h.schedules,
        standardization: h.standardization,
    })
}

pub fn write_history(history: &LossHistory, path: &Path) -> Result<()> {
    write_bytes(path, history.to_csv().as_bytes())
}
