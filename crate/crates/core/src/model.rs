//! Fully-connected drift / noise / velocity / denoiser network with exact
//! reverse-mode gradients.
//!
//! The input row for one example is `[x_t, cond, emb(t)]`, where `x_t` and `cond`
//! are flattened fields and `emb` is a sinusoidal time embedding. Optional scalar
//! conditions are embedded the same way and added onto the time embedding.
//! Hidden layers use GELU (tanh form); the head is linear.
//!
//! All parameters live in one flat buffer (`W` row-major `out x in`, then `b`,
//! layer by layer) so optimizers and checkpoints treat them uniformly.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::rng::substream;

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;
const MAX_EMBED_FREQ: f64 = 1000.0;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let th = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

/// Sinusoidal embedding with geometrically spaced frequencies in `[1, 1000]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeEmbedding {
    frequencies: Vec<f64>,
}

impl TimeEmbedding {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "time embedding dimension must be even and positive, got {dim}"
            )));
        }
        let half = dim / 2;
        let frequencies = (0..half)
            .map(|i| {
                if half == 1 {
                    1.0
                } else {
                    MAX_EMBED_FREQ.powf(i as f64 / (half - 1) as f64)
                }
            })
            .collect();
        Ok(Self { frequencies })
    }

    pub fn dim(&self) -> usize {
        2 * self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Writes `[sin(f_0 t), cos(f_0 t), sin(f_1 t), ...]` additively into `out`.
    pub fn add_into(&self, t: f64, out: &mut [f64]) {
        for (i, f) in self.frequencies.iter().enumerate() {
            let (s, c) = (f * t).sin_cos();
            out[2 * i] += s;
            out[2 * i + 1] += c;
        }
    }

    pub fn embed(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.add_into(t, &mut out);
        out
    }
}

/// Shape of a [`DriftNetwork`]. Two networks with equal layouts have
/// interchangeable parameter buffers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkLayout {
    /// `(rows, cols)` of the predicted field.
    pub state_shape: (usize, usize),
    /// Whether the current physical state is concatenated to the input.
    pub conditioned: bool,
    pub time_embed_dim: usize,
    pub hidden_width: usize,
    /// Number of linear layers, head included.
    pub depth: usize,
    #[serde(default)]
    pub n_scalars: usize,
}

impl NetworkLayout {
    pub fn new(state_shape: (usize, usize)) -> Self {
        Self {
            state_shape,
            conditioned: true,
            time_embed_dim: 16,
            hidden_width: 256,
            depth: 4,
            n_scalars: 0,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_shape.0 * self.state_shape.1
    }

    pub fn cond_dim(&self) -> usize {
        if self.conditioned {
            self.state_dim()
        } else {
            0
        }
    }

    pub fn input_dim(&self) -> usize {
        self.state_dim() + self.cond_dim() + self.time_embed_dim
    }

    /// `(fan_in, fan_out)` of every linear layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.depth);
        let mut fan_in = self.input_dim();
        for l in 0..self.depth {
            let fan_out = if l + 1 == self.depth {
                self.state_dim()
            } else {
                self.hidden_width
            };
            dims.push((fan_in, fan_out));
            fan_in = fan_out;
        }
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.state_dim() == 0 {
            problems.push("state shape must be non-empty".to_string());
        }
        if self.depth == 0 {
            problems.push("depth must be at least 1".to_string());
        }
        if self.depth > 1 && self.hidden_width == 0 {
            problems.push("hidden width must be positive".to_string());
        }
        if self.time_embed_dim == 0 || !self.time_embed_dim.is_multiple_of(2) {
            problems.push(format!(
                "time embedding dimension must be even and positive, got {}",
                self.time_embed_dim
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Which objective the network output is trained against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossHead {
    /// Interpolant drift in regression form, `½‖b - R‖²`.
    Drift,
    /// Interpolant drift in expanded form, `½‖b‖² - b·R`.
    DriftExpanded,
    /// Noise prediction `‖ε - ε_θ‖²` (DDPM, DDIM, TSM).
    Epsilon,
    /// Denoiser `‖D_θ(x + σz, σ) - x‖²` (EDM).
    Denoiser,
    /// Rectified-flow velocity `‖(x - z) - v_θ‖²`.
    Velocity,
    /// Deterministic next-state regression with MSE.
    Regression,
}

impl LossHead {
    pub const ALL: [LossHead; 6] = [
        LossHead::Drift,
        LossHead::DriftExpanded,
        LossHead::Epsilon,
        LossHead::Denoiser,
        LossHead::Velocity,
        LossHead::Regression,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LossHead::Drift => "drift",
            LossHead::DriftExpanded => "drift_expanded",
            LossHead::Epsilon => "epsilon",
            LossHead::Denoiser => "denoiser",
            LossHead::Velocity => "velocity",
            LossHead::Regression => "regression",
        }
    }

    /// Per-example loss given output and target, both normalized by the field size.
    fn example_loss(&self, out: ArrayView1<f64>, target: &[f64]) -> f64 {
        let d = target.len() as f64;
        match self {
            LossHead::Drift => {
                0.5 * out
                    .iter()
                    .zip(target)
                    .map(|(b, r)| (b - r) * (b - r))
                    .sum::<f64>()
                    / d
            }
            LossHead::DriftExpanded => {
                out.iter()
                    .zip(target)
                    .map(|(b, r)| 0.5 * b * b - b * r)
                    .sum::<f64>()
                    / d
            }
            _ => {
                out.iter()
                    .zip(target)
                    .map(|(o, y)| (o - y) * (o - y))
                    .sum::<f64>()
                    / d
            }
        }
    }

    /// Derivative of the per-example loss with respect to one output entry.
    fn output_grad(&self, out: f64, target: f64, d: f64) -> f64 {
        match self {
            LossHead::Drift | LossHead::DriftExpanded => (out - target) / d,
            _ => 2.0 * (out - target) / d,
        }
    }
}

impl fmt::Display for LossHead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossHead {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossHead::ALL
            .into_iter()
            .find(|h| h.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown loss kind {s:?}")))
    }
}

/// One training example: network inputs and the regression target.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x_t: Field,
    pub cond: Field,
    pub t: f64,
    pub target: Field,
}

/// Parameter-shaped gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftNetwork {
    layout: NetworkLayout,
    embedding: TimeEmbedding,
    params: Vec<f64>,
}

impl DriftNetwork {
    /// Gaussian init with variance `1 / fan_in`, zero biases.
    pub fn new(layout: NetworkLayout, seed: u64) -> Result<Self> {
        layout.validate()?;
        let mut rng = substream(seed, "network-init", 0);
        let mut params = Vec::with_capacity(layout.param_count());
        for (fan_in, fan_out) in layout.layer_dims() {
            let scale = (1.0 / fan_in as f64).sqrt();
            params.extend(
                (0..fan_in * fan_out).map(|_| scale * rng.sample::<f64, _>(StandardNormal)),
            );
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self::from_params(layout, params)
    }

    /// Same as [`DriftNetwork::new`] but with the output layer zeroed, so the
    /// initial prediction is exactly zero.
    pub fn with_zero_head(layout: NetworkLayout, seed: u64) -> Result<Self> {
        let mut net = Self::new(layout, seed)?;
        let (off, len) = net.layer_offsets().last().copied().expect("depth >= 1");
        net.params[off..off + len].fill(0.0);
        Ok(net)
    }

    pub fn from_params(layout: NetworkLayout, params: Vec<f64>) -> Result<Self> {
        layout.validate()?;
        if params.len() != layout.param_count() {
            return Err(Error::InvalidParameter(format!(
                "layout needs {} parameters, got {}",
                layout.param_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameters".into()));
        }
        Ok(Self {
            embedding: TimeEmbedding::new(layout.time_embed_dim)?,
            layout,
            params,
        })
    }

    pub fn layout(&self) -> &NetworkLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// `(offset, length)` of each layer's `[W, b]` block.
    fn layer_offsets(&self) -> Vec<(usize, usize)> {
        let mut off = 0;
        self.layout
            .layer_dims()
            .into_iter()
            .map(|(i, o)| {
                let start = off;
                off += i * o + o;
                (start, i * o + o)
            })
            .collect()
    }

    fn layer<'a>(&self, buf: &'a [f64], l: usize) -> (ArrayView2<'a, f64>, ArrayView1<'a, f64>) {
        let (fan_in, fan_out) = self.layout.layer_dims()[l];
        let (off, _) = self.layer_offsets()[l];
        let w = ArrayView2::from_shape((fan_out, fan_in), &buf[off..off + fan_in * fan_out])
            .expect("layer block matches layout");
        let b = ArrayView1::from(&buf[off + fan_in * fan_out..off + fan_in * fan_out + fan_out]);
        (w, b)
    }

    fn check_inputs(&self, x_t: &Field, cond: &Field, t: f64, scalars: &[f64]) -> Result<()> {
        let expected = self.layout.state_shape;
        if x_t.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: x_t.shape(),
            });
        }
        if self.layout.conditioned && cond.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: cond.shape(),
            });
        }
        if scalars.len() != self.layout.n_scalars {
            return Err(Error::InvalidParameter(format!(
                "network expects {} scalar conditions, got {}",
                self.layout.n_scalars,
                scalars.len()
            )));
        }
        x_t.ensure_finite("network input x_t")?;
        cond.ensure_finite("network condition")?;
        if !t.is_finite() || scalars.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("network time input".into()));
        }
        Ok(())
    }

    fn write_input_row(&self, row: &mut [f64], x_t: &Field, cond: &Field, t: f64, scalars: &[f64]) {
        let sd = self.layout.state_dim();
        let cd = self.layout.cond_dim();
        row[..sd].copy_from_slice(x_t.as_slice());
        if cd > 0 {
            row[sd..sd + cd].copy_from_slice(cond.as_slice());
        }
        let emb = &mut row[sd + cd..];
        emb.fill(0.0);
        self.embedding.add_into(t, emb);
        for &s in scalars {
            self.embedding.add_into(s, emb);
        }
    }

    fn input_matrix(&self, batch: &[Example]) -> Result<Array2<f64>> {
        let mut inputs = Array2::zeros((batch.len(), self.layout.input_dim()));
        for (ex, mut row) in batch.iter().zip(inputs.rows_mut()) {
            self.check_inputs(&ex.x_t, &ex.cond, ex.t, &[])?;
            ex.x_t.ensure_same_shape(&ex.target)?;
            self.write_input_row(
                row.as_slice_mut().expect("contiguous row"),
                &ex.x_t,
                &ex.cond,
                ex.t,
                &[],
            );
        }
        Ok(inputs)
    }

    /// Forward pass over a batch of input rows. Returns the pre-activations of
    /// every layer and the output (the last pre-activation).
    fn forward_rows(&self, inputs: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut pre = Vec::with_capacity(self.layout.depth);
        let mut act = inputs.clone();
        for l in 0..self.layout.depth {
            let (w, b) = self.layer(&self.params, l);
            let z = act.dot(&w.t()) + b;
            if l + 1 < self.layout.depth {
                act = z.mapv(gelu);
            }
            pre.push(z);
        }
        pre
    }

    pub fn forward(&self, x_t: &Field, cond: &Field, t: f64) -> Result<Field> {
        self.forward_with_scalars(x_t, cond, t, &[])
    }

    pub fn forward_with_scalars(
        &self,
        x_t: &Field,
        cond: &Field,
        t: f64,
        scalars: &[f64],
    ) -> Result<Field> {
        self.check_inputs(x_t, cond, t, scalars)?;
        let mut act = Array1::zeros(self.layout.input_dim());
        self.write_input_row(
            act.as_slice_mut().expect("contiguous"),
            x_t,
            cond,
            t,
            scalars,
        );
        // Matrix-vector products; a one-row matrix product is much slower here.
        for l in 0..self.layout.depth {
            let (w, b) = self.layer(&self.params, l);
            let z = w.dot(&act) + b;
            act = if l + 1 < self.layout.depth {
                z.mapv(gelu)
            } else {
                z
            };
        }
        let (rows, cols) = self.layout.state_shape;
        Field::from_vec(rows, cols, act.into_raw_vec_and_offset().0)
    }

    /// Batch-mean loss without gradients.
    pub fn loss(&self, batch: &[Example], head: LossHead) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InvalidParameter("empty batch".into()));
        }
        let inputs = self.input_matrix(batch)?;
        let out = self.forward_rows(&inputs).pop().expect("depth >= 1");
        let total: f64 = batch
            .iter()
            .zip(out.rows())
            .map(|(ex, o)| head.example_loss(o, ex.target.as_slice()))
            .sum();
        Ok(total / batch.len() as f64)
    }

    /// Batch-mean loss and its exact gradient with respect to every parameter.
    pub fn backward(&self, batch: &[Example], head: LossHead) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::InvalidParameter("empty batch".into()));
        }
        let n = batch.len() as f64;
        let d = self.layout.state_dim() as f64;
        let inputs = self.input_matrix(batch)?;
        let pre = self.forward_rows(&inputs);
        let out = pre.last().expect("depth >= 1");

        let loss = batch
            .iter()
            .zip(out.rows())
            .map(|(ex, o)| head.example_loss(o, ex.target.as_slice()))
            .sum::<f64>()
            / n;

        let mut delta = Array2::zeros(out.raw_dim());
        for ((ex, o), mut g) in batch.iter().zip(out.rows()).zip(delta.rows_mut()) {
            for ((gi, &oi), &yi) in g.iter_mut().zip(o.iter()).zip(ex.target.as_slice()) {
                *gi = head.output_grad(oi, yi, d) / n;
            }
        }

        let mut grads = vec![0.0; self.params.len()];
        let offsets = self.layer_offsets();
        let dims = self.layout.layer_dims();
        for l in (0..self.layout.depth).rev() {
            let act_prev = if l == 0 {
                inputs.clone()
            } else {
                pre[l - 1].mapv(gelu)
            };
            let (fan_in, fan_out) = dims[l];
            let (off, _) = offsets[l];
            let dw = delta.t().dot(&act_prev);
            let db = delta.sum_axis(Axis(0));
            grads[off..off + fan_in * fan_out]
                .copy_from_slice(dw.as_slice().expect("standard layout"));
            grads[off + fan_in * fan_out..off + fan_in * fan_out + fan_out]
                .copy_from_slice(db.as_slice().expect("standard layout"));
            if l > 0 {
                let (w, _) = self.layer(&self.params, l);
                let dact = delta.dot(&w);
                delta = dact * pre[l - 1].mapv(gelu_grad);
            }
        }
        Ok((loss, Gradients { values: grads }))
    }
}

/// Hyperparameters of the bias-corrected adaptive-moment optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Moments {
    pub fn zeros(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// One Adam step (`step` counts from 1) applied elementwise.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    moments: &mut Moments,
    step: u64,
    cfg: &AdamConfig,
) -> Result<()> {
    if params.len() != grads.len()
        || params.len() != moments.m.len()
        || params.len() != moments.v.len()
    {
        return Err(Error::InvalidParameter(format!(
            "adam buffers disagree: params {}, grads {}, moments {}/{}",
            params.len(),
            grads.len(),
            moments.m.len(),
            moments.v.len()
        )));
    }
    if step == 0 {
        return Err(Error::InvalidParameter("adam step counts from 1".into()));
    }
    let bc1 = 1.0 - cfg.beta1.powi(step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(step as i32);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(moments.m.iter_mut())
        .zip(moments.v.iter_mut())
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}
