//! Sampling procedures for every framework, plus autoregressive rollout.
//!
//! Each sampler has a `*_from` form that takes its starting state and a random
//! stream explicitly, and a seeded form that draws the starting state from
//! `substream(seed, <framework>, 0)` and then keeps using that stream for any
//! per-step noise.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::model::{DriftNetwork, LossHead};
use crate::process::{build_edm_schedule, DiffusionSchedule, EdmSchedule, InterpolantSchedule};
use crate::rng::{derive_seed, gaussian_field, substream, Stream};

/// Anything that maps `(x_t, condition, time input)` to a field.
pub trait Predictor: Sync {
    fn predict(&self, x_t: &Field, cond: &Field, t: f64) -> Result<Field>;
}

impl Predictor for DriftNetwork {
    fn predict(&self, x_t: &Field, cond: &Field, t: f64) -> Result<Field> {
        self.forward(x_t, cond, t)
    }
}

/// Adapter turning a closure into a [`Predictor`]; handy for analytic oracles.
pub struct FnPredictor<F>(pub F);

impl<F> Predictor for FnPredictor<F>
where
    F: Fn(&Field, &Field, f64) -> Result<Field> + Sync,
{
    fn predict(&self, x_t: &Field, cond: &Field, t: f64) -> Result<Field> {
        (self.0)(x_t, cond, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Framework {
    #[serde(rename = "ddpm")]
    Ddpm,
    #[serde(rename = "ddim")]
    Ddim,
    #[serde(rename = "edm")]
    Edm,
    #[serde(rename = "tsm")]
    Tsm,
    #[serde(rename = "fm")]
    Fm,
    #[serde(rename = "si-e")]
    SiEuler,
    #[serde(rename = "si-em")]
    SiEm,
    /// Deterministic next-state regression baseline.
    #[serde(rename = "regression")]
    Regression,
}

impl Framework {
    pub const ALL: [Framework; 8] = [
        Framework::Ddpm,
        Framework::Ddim,
        Framework::Edm,
        Framework::Tsm,
        Framework::Fm,
        Framework::SiEuler,
        Framework::SiEm,
        Framework::Regression,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Framework::Ddpm => "ddpm",
            Framework::Ddim => "ddim",
            Framework::Edm => "edm",
            Framework::Tsm => "tsm",
            Framework::Fm => "fm",
            Framework::SiEuler => "si-e",
            Framework::SiEm => "si-em",
            Framework::Regression => "regression",
        }
    }

    /// Loss head a network must be trained with to be sampled by this framework.
    pub fn head(&self) -> LossHead {
        match self {
            Framework::Ddpm | Framework::Ddim | Framework::Tsm => LossHead::Epsilon,
            Framework::Edm => LossHead::Denoiser,
            Framework::Fm => LossHead::Velocity,
            Framework::SiEuler | Framework::SiEm => LossHead::Drift,
            Framework::Regression => LossHead::Regression,
        }
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Framework {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Framework::ALL
            .into_iter()
            .find(|fw| fw.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown framework {s:?}")))
    }
}

/// Rejects `(trained head, sampler)` pairs that do not belong together.
pub fn check_compatible(trained: LossHead, sampler: Framework) -> Result<()> {
    let ok = match trained {
        LossHead::Drift | LossHead::DriftExpanded => sampler.head() == LossHead::Drift,
        other => sampler.head() == other,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Incompatible {
            trained: trained.to_string(),
            sampler: sampler.to_string(),
        })
    }
}

/// Everything needed to run one sampling procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub framework: Framework,
    pub steps: usize,
    /// DDIM stochasticity.
    #[serde(default)]
    pub eta: f64,
    /// Interpolant noise scale (SI-EM diffusion).
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// TSM truncation step; defaults to the most-noised step.
    #[serde(default)]
    pub tsm_step: Option<usize>,
    /// Multiplier on the SI-EM diffusion term.
    #[serde(default = "default_diffusion_scale")]
    pub diffusion_scale: f64,
}

fn default_sigma() -> f64 {
    1.0
}

fn default_diffusion_scale() -> f64 {
    1.0
}

impl SamplerSpec {
    pub fn new(framework: Framework, steps: usize) -> Self {
        Self {
            framework,
            steps,
            eta: 0.0,
            sigma: 1.0,
            seed: 0,
            tsm_step: None,
            diffusion_scale: 1.0,
        }
    }

    /// Checks invariants and returns the normalized spec (TSM always runs one step).
    pub fn validated(mut self) -> Result<Self> {
        let mut problems = Vec::new();
        if self.framework == Framework::Tsm {
            self.steps = 1;
        }
        if self.steps == 0 {
            problems.push("sampler steps must be at least 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.eta) {
            problems.push(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            problems.push(format!(
                "sigma must be finite and nonnegative, got {}",
                self.sigma
            ));
        }
        if self.framework == Framework::SiEm {
            if self.sigma <= 0.0 {
                problems.push("si-em requires sigma > 0 (use si-e for sigma = 0)".to_string());
            }
            if self.steps < 2 {
                problems.push("si-em requires at least 2 steps".to_string());
            }
        }
        if !(self.diffusion_scale >= 0.0 && self.diffusion_scale.is_finite()) {
            problems.push("diffusion_scale must be finite and nonnegative".to_string());
        }
        if problems.is_empty() {
            Ok(self)
        } else {
            Err(Error::Config(problems))
        }
    }
}

fn require_steps(steps: usize) -> Result<()> {
    if steps == 0 {
        Err(Error::InvalidParameter(
            "sampler steps must be at least 1".into(),
        ))
    } else {
        Ok(())
    }
}

/// Posterior-mean estimate `(x_t - √(1-ᾱ) ε) / √ᾱ`.
pub fn tweedie_x0(x_t: &Field, eps: &Field, alphabar: f64) -> Field {
    let (a, b) = (alphabar.sqrt(), (1.0 - alphabar).sqrt());
    x_t.zip_map(eps, |x, e| (x - b * e) / a)
}

/// Mean of the DDPM reverse transition out of `step`.
pub fn ddpm_transition_mean(d: &DiffusionSchedule, x_t: &Field, eps: &Field, step: usize) -> Field {
    let alpha = d.alphas[step];
    let coef = (1.0 - alpha) / (1.0 - d.alphabar[step]).sqrt();
    let inv = 1.0 / alpha.sqrt();
    x_t.zip_map(eps, |x, e| inv * (x - coef * e))
}

/// DDIM noise level for a jump `ᾱ -> ᾱ_prev`.
pub fn ddim_sigma(alphabar: f64, alphabar_prev: f64, eta: f64) -> f64 {
    eta * ((1.0 - alphabar_prev) / (1.0 - alphabar)).sqrt()
        * (1.0 - alphabar / alphabar_prev).sqrt()
}

/// Mean of the DDIM transition `ᾱ -> ᾱ_prev` (everything except `σ z`).
pub fn ddim_transition_mean(
    x_t: &Field,
    eps: &Field,
    alphabar: f64,
    alphabar_prev: f64,
    eta: f64,
) -> Field {
    let sigma = ddim_sigma(alphabar, alphabar_prev, eta);
    let x0 = tweedie_x0(x_t, eps, alphabar);
    let dir = (1.0 - alphabar_prev - sigma * sigma).max(0.0).sqrt();
    Field::lincomb(alphabar_prev.sqrt(), &x0, dir, eps)
}

/// Ancestral DDPM chain from `x` at step `T-1` down to step 0.
pub fn sample_ddpm_from(
    net: &dyn Predictor,
    d: &DiffusionSchedule,
    cond: &Field,
    mut x: Field,
    rng: &mut Stream,
) -> Result<Field> {
    for step in (0..d.steps()).rev() {
        let eps = net.predict(&x, cond, d.time_input(step))?;
        x.ensure_same_shape(&eps)?;
        let mean = ddpm_transition_mean(d, &x, &eps, step);
        x = if step > 0 {
            let z = gaussian_field(rng, x.rows(), x.cols());
            let mut next = mean;
            next.axpy(d.posterior_variance(step).sqrt(), &z);
            next
        } else {
            mean
        };
    }
    Ok(x)
}

pub fn sample_ddpm(
    net: &dyn Predictor,
    d: &DiffusionSchedule,
    cond: &Field,
    seed: u64,
) -> Result<Field> {
    let mut rng = substream(seed, "ddpm", 0);
    let x = gaussian_field(&mut rng, cond.rows(), cond.cols());
    sample_ddpm_from(net, d, cond, x, &mut rng)
}

/// Sub-schedule of `steps` indices with uniform stride, both endpoints included.
pub fn ddim_timesteps(total: usize, steps: usize) -> Result<Vec<usize>> {
    require_steps(steps)?;
    if steps > total {
        return Err(Error::InvalidParameter(format!(
            "DDIM steps ({steps}) exceed the schedule length ({total})"
        )));
    }
    if steps == 1 {
        return Ok(vec![total - 1]);
    }
    let span = (total - 1) as f64 / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| (i as f64 * span).round() as usize)
        .collect())
}

pub fn sample_ddim_from(
    net: &dyn Predictor,
    d: &DiffusionSchedule,
    cond: &Field,
    steps: usize,
    eta: f64,
    mut x: Field,
    rng: &mut Stream,
) -> Result<Field> {
    let idx = ddim_timesteps(d.steps(), steps)?;
    for i in (0..idx.len()).rev() {
        let step = idx[i];
        let ab = d.alphabar[step];
        let ab_prev = if i > 0 { d.alphabar[idx[i - 1]] } else { 1.0 };
        let eps = net.predict(&x, cond, d.time_input(step))?;
        x.ensure_same_shape(&eps)?;
        let sigma = ddim_sigma(ab, ab_prev, eta);
        let mut next = ddim_transition_mean(&x, &eps, ab, ab_prev, eta);
        if sigma > 0.0 {
            let z = gaussian_field(rng, x.rows(), x.cols());
            next.axpy(sigma, &z);
        }
        x = next;
    }
    Ok(x)
}

pub fn sample_ddim(
    net: &dyn Predictor,
    d: &DiffusionSchedule,
    cond: &Field,
    steps: usize,
    eta: f64,
    seed: u64,
) -> Result<Field> {
    let mut rng = substream(seed, "ddim", 0);
    let x = gaussian_field(&mut rng, cond.rows(), cond.cols());
    sample_ddim_from(net, d, cond, steps, eta, x, &mut rng)
}

/// Euler integration down the sigma ladder. The final jump to `σ = 0` returns
/// the denoiser output directly.
pub fn sample_edm_from(
    net: &dyn Predictor,
    e: &EdmSchedule,
    cond: &Field,
    mut x: Field,
) -> Result<Field> {
    for w in e.sigma_levels.windows(2) {
        let (sigma, next) = (w[0], w[1]);
        let denoised = net.predict(&x, cond, e.time_input(sigma))?;
        x.ensure_same_shape(&denoised)?;
        if next == 0.0 {
            x = denoised;
        } else {
            let h = (next - sigma) / sigma;
            x = x.zip_map(&denoised, |xi, di| xi + h * (xi - di));
        }
    }
    Ok(x)
}

pub fn sample_edm(net: &dyn Predictor, e: &EdmSchedule, cond: &Field, seed: u64) -> Result<Field> {
    let mut rng = substream(seed, "edm", 0);
    let x = gaussian_field(&mut rng, cond.rows(), cond.cols()).scale(e.sigma_max);
    sample_edm_from(net, e, cond, x)
}

/// One-shot Tweedie estimate from `x` at step `step`.
pub fn sample_tsm_from(
    net: &dyn Predictor,
    d: &DiffusionSchedule,
    cond: &Field,
    step: usize,
    x: &Field,
) -> Result<Field> {
    if step >= d.steps() {
        return Err(Error::OutOfRange {
            what: "TSM truncation step",
            value: step as f64,
            range: "[0, T)",
        });
    }
    let eps = net.predict(x, cond, d.time_input(step))?;
    x.ensure_same_shape(&eps)?;
    Ok(tweedie_x0(x, &eps, d.alphabar[step]))
}

pub fn sample_tsm(
    net: &dyn Predictor,
    d: &DiffusionSchedule,
    cond: &Field,
    step: Option<usize>,
    seed: u64,
) -> Result<Field> {
    let mut rng = substream(seed, "tsm", 0);
    let x = gaussian_field(&mut rng, cond.rows(), cond.cols());
    sample_tsm_from(net, d, cond, step.unwrap_or(d.steps() - 1), &x)
}

/// Euler integration of the rectified-flow ODE from `x` at `t = 0` to `t = 1`.
pub fn sample_fm_from(
    net: &dyn Predictor,
    cond: &Field,
    steps: usize,
    mut x: Field,
) -> Result<Field> {
    require_steps(steps)?;
    let dt = 1.0 / steps as f64;
    for i in 0..steps {
        let v = net.predict(&x, cond, i as f64 * dt)?;
        x.ensure_same_shape(&v)?;
        x.axpy(dt, &v);
    }
    Ok(x)
}

pub fn sample_fm(net: &dyn Predictor, cond: &Field, steps: usize, seed: u64) -> Result<Field> {
    let mut rng = substream(seed, "fm", 0);
    let x = gaussian_field(&mut rng, cond.rows(), cond.cols());
    sample_fm_from(net, cond, steps, x)
}

/// Euler integration of the probability-flow ODE from the current state `x0`,
/// which is also held fixed as the condition.
pub fn sample_si_euler(net: &dyn Predictor, x0: &Field, steps: usize) -> Result<Field> {
    require_steps(steps)?;
    let dt = 1.0 / steps as f64;
    let mut x = x0.clone();
    for i in 0..steps {
        let b = net.predict(&x, x0, i as f64 * dt)?;
        x.ensure_same_shape(&b)?;
        x.axpy(dt, &b);
    }
    Ok(x)
}

/// Diffusion coefficient `γ̇(t) / √t` of the interpolant SDE.
pub fn si_diffusion(s: &InterpolantSchedule, t: f64) -> f64 {
    s.dgamma(t) / t.sqrt()
}

/// Euler–Maruyama for the interpolant SDE. The first step is the analytic
/// update `x0 + Δt b(x0, 0) + √Δt σ z`; the last step into `t = 1` adds no noise.
pub fn sample_si_em_from(
    net: &dyn Predictor,
    s: &InterpolantSchedule,
    x0: &Field,
    steps: usize,
    diffusion_scale: f64,
    rng: &mut Stream,
) -> Result<Field> {
    if s.sigma <= 0.0 {
        return Err(Error::InvalidParameter(
            "si-em requires sigma > 0; use the Euler sampler instead".into(),
        ));
    }
    if steps < 2 {
        return Err(Error::InvalidParameter(
            "si-em requires at least 2 steps".into(),
        ));
    }
    let dt = 1.0 / steps as f64;
    let sqrt_dt = dt.sqrt();
    let (rows, cols) = x0.shape();

    let b = net.predict(x0, x0, 0.0)?;
    x0.ensure_same_shape(&b)?;
    let mut x = x0.clone();
    x.axpy(dt, &b);
    let z = gaussian_field(rng, rows, cols);
    x.axpy(diffusion_scale * sqrt_dt * s.sigma, &z);

    for i in 1..steps {
        let t = i as f64 * dt;
        let b = net.predict(&x, x0, t)?;
        x.ensure_same_shape(&b)?;
        x.axpy(dt, &b);
        if i + 1 < steps {
            let z = gaussian_field(rng, rows, cols);
            x.axpy(diffusion_scale * si_diffusion(s, t) * sqrt_dt, &z);
        }
    }
    Ok(x)
}

pub fn sample_si_em(
    net: &dyn Predictor,
    s: &InterpolantSchedule,
    x0: &Field,
    steps: usize,
    seed: u64,
) -> Result<Field> {
    let mut rng = substream(seed, "si-em", 0);
    sample_si_em_from(net, s, x0, steps, 1.0, &mut rng)
}

/// Residual regression: `u(t+1) = u(t) + f(u(t))`.
pub fn sample_regression(net: &dyn Predictor, current: &Field) -> Result<Field> {
    let delta = net.predict(current, current, 0.0)?;
    current.ensure_same_shape(&delta)?;
    Ok(current.zip_map(&delta, |a, b| a + b))
}

/// Schedules a trained network was fitted with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Schedules {
    pub diffusion: DiffusionSchedule,
    pub edm: EdmSchedule,
    pub interpolant: InterpolantSchedule,
}

/// Produces the next state from the current one.
pub trait StepSampler: Sync {
    fn next_state(&self, current: &Field, seed: u64) -> Result<Field>;
}

/// A predictor bound to a validated sampling procedure.
pub struct Sampler<'a> {
    predictor: &'a dyn Predictor,
    spec: SamplerSpec,
    schedules: Schedules,
}

impl<'a> Sampler<'a> {
    /// Binds `predictor` (trained with `head`) to `spec`, rejecting incompatible pairs.
    pub fn new(
        predictor: &'a dyn Predictor,
        head: LossHead,
        spec: SamplerSpec,
        schedules: Schedules,
    ) -> Result<Self> {
        let spec = spec.validated()?;
        check_compatible(head, spec.framework)?;
        let mut schedules = schedules;
        if spec.framework == Framework::Edm {
            let e = &schedules.edm;
            schedules.edm = build_edm_schedule(spec.steps, e.sigma_min, e.sigma_max, e.rho)?;
        }
        if spec.framework == Framework::Ddim && spec.steps > schedules.diffusion.steps() {
            return Err(Error::InvalidParameter(format!(
                "DDIM steps ({}) exceed the schedule length ({})",
                spec.steps,
                schedules.diffusion.steps()
            )));
        }
        Ok(Self {
            predictor,
            spec,
            schedules,
        })
    }

    pub fn spec(&self) -> &SamplerSpec {
        &self.spec
    }
}

impl StepSampler for Sampler<'_> {
    fn next_state(&self, current: &Field, seed: u64) -> Result<Field> {
        let net = self.predictor;
        let s = &self.schedules;
        match self.spec.framework {
            Framework::Ddpm => sample_ddpm(net, &s.diffusion, current, seed),
            Framework::Ddim => sample_ddim(
                net,
                &s.diffusion,
                current,
                self.spec.steps,
                self.spec.eta,
                seed,
            ),
            Framework::Edm => sample_edm(net, &s.edm, current, seed),
            Framework::Tsm => sample_tsm(net, &s.diffusion, current, self.spec.tsm_step, seed),
            Framework::Fm => sample_fm(net, current, self.spec.steps, seed),
            Framework::SiEuler => sample_si_euler(net, current, self.spec.steps),
            Framework::SiEm => {
                let sched = InterpolantSchedule {
                    sigma: self.spec.sigma,
                };
                let mut rng = substream(seed, "si-em", 0);
                sample_si_em_from(
                    net,
                    &sched,
                    current,
                    self.spec.steps,
                    self.spec.diffusion_scale,
                    &mut rng,
                )
            }
            Framework::Regression => sample_regression(net, current),
        }
    }
}

impl<F> StepSampler for F
where
    F: Fn(&Field, u64) -> Result<Field> + Sync,
{
    fn next_state(&self, current: &Field, seed: u64) -> Result<Field> {
        self(current, seed)
    }
}

/// Autoregressive chain: frame 0 is `initial`, frame `k` is sampled from frame
/// `k - 1` with seed `derive_seed(seed, "rollout-step", k)`. Errors name the
/// 1-based step that first produced a non-finite value.
pub fn rollout(
    sampler: &dyn StepSampler,
    initial: &Field,
    horizon: usize,
    seed: u64,
) -> Result<Vec<Field>> {
    if horizon == 0 {
        return Err(Error::InvalidParameter(
            "rollout horizon must be at least 1".into(),
        ));
    }
    let mut frames = Vec::with_capacity(horizon + 1);
    frames.push(initial.clone());
    for step in 1..=horizon {
        let next = match sampler.next_state(
            &frames[step - 1],
            derive_seed(seed, "rollout-step", step as u64),
        ) {
            Ok(f) if f.is_finite() => f,
            Ok(_) | Err(Error::NonFinite(_)) => return Err(Error::RolloutDiverged { step }),
            Err(e) => return Err(e),
        };
        frames.push(next);
    }
    Ok(frames)
}

/// Independent rollouts for `members` ensemble members, run in parallel.
pub fn ensemble_rollout(
    sampler: &dyn StepSampler,
    initial: &Field,
    horizon: usize,
    members: usize,
    seed: u64,
) -> Result<Vec<Vec<Field>>> {
    (0..members)
        .into_par_iter()
        .map(|m| {
            rollout(
                sampler,
                initial,
                horizon,
                derive_seed(seed, "ensemble-member", m as u64),
            )
        })
        .collect()
}
