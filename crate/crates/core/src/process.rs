//! Forward stochastic processes and their regression targets.
//!
//! Four families live here:
//!
//! * the linear stochastic interpolant `x_t = α(t) x0 + β(t) x1 + γ(t) z`
//!   with `α = 1 - t`, `β = t`, `γ = σ (1 - t) √t`,
//! * the discrete variance-preserving diffusion `x_t = √ᾱ x0 + √(1 - ᾱ) z`,
//! * EDM noising `x + σ z` on a Karras sigma ladder,
//! * rectified flow `x_t = (1 - t) z + t x1` (noise at `t = 0`, data at `t = 1`).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ensure_all_same_shape, Field};

/// Training times are drawn from `[TRAIN_TIME_EPS, 1 - TRAIN_TIME_EPS]` when `σ > 0`.
pub const TRAIN_TIME_EPS: f64 = 1e-3;

/// Coefficients of the linear interpolant with noise scale `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolantSchedule {
    pub sigma: f64,
}

impl Default for InterpolantSchedule {
    fn default() -> Self {
        Self { sigma: 1.0 }
    }
}

impl InterpolantSchedule {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::OutOfRange {
                what: "sigma",
                value: sigma,
                range: "[0, inf)",
            });
        }
        Ok(Self { sigma })
    }

    pub fn alpha(&self, t: f64) -> f64 {
        1.0 - t
    }

    pub fn beta(&self, t: f64) -> f64 {
        t
    }

    pub fn gamma(&self, t: f64) -> f64 {
        self.sigma * (1.0 - t) * t.sqrt()
    }

    pub fn dalpha(&self, _t: f64) -> f64 {
        -1.0
    }

    pub fn dbeta(&self, _t: f64) -> f64 {
        1.0
    }

    /// `dγ/dt = σ (1 - 3t) / (2 √t)`; infinite at `t = 0` when `σ > 0`.
    pub fn dgamma(&self, t: f64) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        self.sigma * (1.0 - 3.0 * t) / (2.0 * t.sqrt())
    }

    /// Draw a training time, avoiding the endpoints when the noise derivative is singular.
    pub fn sample_training_time(&self, rng: &mut impl Rng) -> f64 {
        if self.sigma > 0.0 {
            rng.random_range(TRAIN_TIME_EPS..=1.0 - TRAIN_TIME_EPS)
        } else {
            rng.random_range(0.0..=1.0)
        }
    }
}

/// A noised training example together with the quantity the network regresses.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSample {
    pub x_t: Field,
    /// Continuous time in `[0, 1]`, or the step index for discrete schedules.
    pub t: f64,
    pub z: Field,
    pub target: Field,
}

fn check_closed_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "t",
            value: t,
            range: "[0, 1]",
        })
    }
}

fn check_target_time(s: &InterpolantSchedule, t: f64) -> Result<()> {
    check_closed_unit(t)?;
    if s.sigma > 0.0 && (t == 0.0 || t == 1.0) {
        return Err(Error::Singular("interpolant noise derivative"));
    }
    Ok(())
}

/// `α(t) x0 + β(t) x1 + γ(t) z`. Exact at both endpoints.
pub fn interpolant_point(
    s: &InterpolantSchedule,
    x0: &Field,
    x1: &Field,
    z: &Field,
    t: f64,
) -> Result<Field> {
    ensure_all_same_shape(&[x0, x1, z])?;
    check_closed_unit(t)?;
    // Endpoints are returned verbatim so the boundary conditions hold bit-exactly.
    if t == 0.0 {
        return Ok(x0.clone());
    }
    if t == 1.0 {
        return Ok(x1.clone());
    }
    let (a, b, g) = (s.alpha(t), s.beta(t), s.gamma(t));
    let mut out = Field::lincomb(a, x0, b, x1);
    out.axpy(g, z);
    Ok(out)
}

/// Regression target `∂_t I + γ̇(t) z = x1 - x0 + γ̇(t) z`, defined on the open interval.
pub fn interpolant_target(
    s: &InterpolantSchedule,
    x0: &Field,
    x1: &Field,
    z: &Field,
    t: f64,
) -> Result<Field> {
    ensure_all_same_shape(&[x0, x1, z])?;
    check_target_time(s, t)?;
    let mut out = Field::lincomb(s.dalpha(t), x0, s.dbeta(t), x1);
    let dg = s.dgamma(t);
    if dg != 0.0 {
        out.axpy(dg, z);
    }
    Ok(out)
}

/// The `+z` and `-z` samples used for antithetic training.
pub fn antithetic_pair(
    s: &InterpolantSchedule,
    x0: &Field,
    x1: &Field,
    z: &Field,
    t: f64,
) -> Result<(ProcessSample, ProcessSample)> {
    ensure_all_same_shape(&[x0, x1, z])?;
    check_target_time(s, t)?;
    let neg_z = z.scale(-1.0);
    let plus = ProcessSample {
        x_t: interpolant_point(s, x0, x1, z, t)?,
        t,
        z: z.clone(),
        target: interpolant_target(s, x0, x1, z, t)?,
    };
    let minus = ProcessSample {
        x_t: interpolant_point(s, x0, x1, &neg_z, t)?,
        t,
        target: interpolant_target(s, x0, x1, &neg_z, t)?,
        z: neg_z,
    };
    Ok((plus, minus))
}

/// Discrete variance-preserving schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSchedule {
    pub betas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub alphabar: Vec<f64>,
}

impl DiffusionSchedule {
    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    /// `ᾱ` of the step before `step`, with `ᾱ_{-1} = 1`.
    pub fn alphabar_prev(&self, step: usize) -> f64 {
        if step == 0 {
            1.0
        } else {
            self.alphabar[step - 1]
        }
    }

    /// Posterior variance `β̃_t = (1 - ᾱ_{t-1}) / (1 - ᾱ_t) β_t`.
    pub fn posterior_variance(&self, step: usize) -> f64 {
        (1.0 - self.alphabar_prev(step)) / (1.0 - self.alphabar[step]) * self.betas[step]
    }

    /// Network time input for a discrete step.
    pub fn time_input(&self, step: usize) -> f64 {
        step as f64 / self.steps() as f64
    }

    fn check_step(&self, step: usize) -> Result<()> {
        if step >= self.steps() {
            return Err(Error::OutOfRange {
                what: "diffusion step",
                value: step as f64,
                range: "[0, T)",
            });
        }
        Ok(())
    }
}

/// Default linear betas: the classic `[1e-4, 0.02]` range for 1000 steps,
/// rescaled by `1000 / T` so that `ᾱ_{T-1}` is close to zero at `T = 100`.
pub const DEFAULT_DIFFUSION_STEPS: usize = 100;
pub const DEFAULT_BETA_START: f64 = 1e-3;
pub const DEFAULT_BETA_END: f64 = 0.2;

impl Default for DiffusionSchedule {
    fn default() -> Self {
        build_linear_schedule(
            DEFAULT_DIFFUSION_STEPS,
            DEFAULT_BETA_START,
            DEFAULT_BETA_END,
        )
        .expect("default schedule is valid")
    }
}

pub fn build_linear_schedule(
    steps: usize,
    beta_start: f64,
    beta_end: f64,
) -> Result<DiffusionSchedule> {
    if steps < 2 {
        return Err(Error::InvalidParameter(format!(
            "linear schedule needs at least 2 steps, got {steps}"
        )));
    }
    if !(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < beta_start < beta_end < 1, got ({beta_start}, {beta_end})"
        )));
    }
    let span = (steps - 1) as f64;
    let betas: Vec<f64> = (0..steps)
        .map(|i| beta_start + (beta_end - beta_start) * i as f64 / span)
        .collect();
    let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
    let alphabar = alphas
        .iter()
        .scan(1.0, |acc, a| {
            *acc *= a;
            Some(*acc)
        })
        .collect();
    Ok(DiffusionSchedule {
        betas,
        alphas,
        alphabar,
    })
}

/// `x_t = √ᾱ x0 + √(1 - ᾱ) z`; the target is `z`.
pub fn vp_forward(
    d: &DiffusionSchedule,
    x0: &Field,
    z: &Field,
    step: usize,
) -> Result<ProcessSample> {
    x0.ensure_same_shape(z)?;
    d.check_step(step)?;
    let ab = d.alphabar[step];
    Ok(ProcessSample {
        x_t: Field::lincomb(ab.sqrt(), x0, (1.0 - ab).sqrt(), z),
        t: step as f64,
        z: z.clone(),
        target: z.clone(),
    })
}

/// Rectified flow from noise (`t = 0`) to data (`t = 1`); target is `x1 - z`.
pub fn fm_forward(x1: &Field, z: &Field, t: f64) -> Result<ProcessSample> {
    x1.ensure_same_shape(z)?;
    check_closed_unit(t)?;
    Ok(ProcessSample {
        x_t: Field::lincomb(1.0 - t, z, t, x1),
        t,
        z: z.clone(),
        target: x1.zip_map(z, |a, b| a - b),
    })
}

/// Karras sigma ladder, decreasing, with a terminal zero appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdmSchedule {
    pub sigma_levels: Vec<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub rho: f64,
}

impl EdmSchedule {
    /// Number of Euler steps (levels minus the terminal zero).
    pub fn steps(&self) -> usize {
        self.sigma_levels.len() - 1
    }

    /// Map a noise level to the network time input: `ln σ` rescaled so that
    /// `[sigma_min, sigma_max]` lands on `[0, 1]`.
    pub fn time_input(&self, sigma: f64) -> f64 {
        let (lo, hi) = (self.sigma_min.ln(), self.sigma_max.ln());
        ((sigma.ln() - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    /// Draw a training noise level, log-uniform on `[sigma_min, sigma_max]`.
    pub fn sample_training_sigma(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random_range(0.0..=1.0);
        (self.sigma_min.ln() + u * (self.sigma_max.ln() - self.sigma_min.ln())).exp()
    }
}

impl Default for EdmSchedule {
    fn default() -> Self {
        build_edm_schedule(10, 0.002, 80.0, 7.0).expect("default schedule is valid")
    }
}

pub fn build_edm_schedule(
    steps: usize,
    sigma_min: f64,
    sigma_max: f64,
    rho: f64,
) -> Result<EdmSchedule> {
    if steps < 1 {
        return Err(Error::InvalidParameter(
            "EDM schedule needs at least 1 step".into(),
        ));
    }
    if !(0.0 < sigma_min && sigma_min < sigma_max && sigma_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < sigma_min < sigma_max, got ({sigma_min}, {sigma_max})"
        )));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rho must be positive, got {rho}"
        )));
    }
    let mut sigma_levels = if steps == 1 {
        vec![sigma_max]
    } else {
        let (a, b) = (sigma_max.powf(1.0 / rho), sigma_min.powf(1.0 / rho));
        let span = (steps - 1) as f64;
        (0..steps)
            .map(|i| {
                // Pin the endpoints; powf round-trips are not exact.
                if i == 0 {
                    sigma_max
                } else if i == steps - 1 {
                    sigma_min
                } else {
                    (a + i as f64 / span * (b - a)).powf(rho)
                }
            })
            .collect()
    };
    sigma_levels.push(0.0);
    Ok(EdmSchedule {
        sigma_levels,
        sigma_min,
        sigma_max,
        rho,
    })
}

/// EDM training pair: noised input `x + σ z`, target `x`.
pub fn edm_forward(x: &Field, z: &Field, sigma: f64) -> Result<ProcessSample> {
    x.ensure_same_shape(z)?;
    Ok(ProcessSample {
        x_t: Field::lincomb(1.0, x, sigma, z),
        t: sigma,
        z: z.clone(),
        target: x.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_field, substream};

    fn s(v: f64) -> Field {
        Field::scalar(v)
    }

    #[test]
    fn interpolant_boundaries_are_exact() {
        let sch = InterpolantSchedule::new(1.7).unwrap();
        let mut rng = substream(1, "test", 0);
        let x0 = gaussian_field(&mut rng, 4, 4);
        let x1 = gaussian_field(&mut rng, 4, 4);
        let z = gaussian_field(&mut rng, 4, 4);
        assert_eq!(interpolant_point(&sch, &x0, &x1, &z, 0.0).unwrap(), x0);
        assert_eq!(interpolant_point(&sch, &x0, &x1, &z, 1.0).unwrap(), x1);
    }

    #[test]
    fn interpolant_hand_value() {
        let sch = InterpolantSchedule::new(1.0).unwrap();
        let v = interpolant_point(&sch, &s(0.0), &s(4.0), &s(2.0), 0.25).unwrap();
        assert!((v.as_slice()[0] - 1.75).abs() < 1e-15);
    }

    #[test]
    fn interpolant_rejects_bad_time_and_shape() {
        let sch = InterpolantSchedule::default();
        assert!(interpolant_point(&sch, &s(0.0), &s(1.0), &s(0.0), 1.5).is_err());
        let big = Field::zeros(2, 2);
        assert!(matches!(
            interpolant_point(&sch, &s(0.0), &big, &s(0.0), 0.5),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn target_values() {
        let det = InterpolantSchedule::new(0.0).unwrap();
        for t in [0.0, 0.3, 1.0] {
            let v = interpolant_target(&det, &s(1.0), &s(4.0), &s(9.0), t).unwrap();
            assert_eq!(v.as_slice()[0], 3.0);
        }
        let sch = InterpolantSchedule::new(1.0).unwrap();
        let v = interpolant_target(&sch, &s(0.0), &s(0.0), &s(1.0), 0.25).unwrap();
        assert!((v.as_slice()[0] - 0.25).abs() < 1e-15);
        let v = interpolant_target(&sch, &s(0.0), &s(0.0), &s(123.0), 1.0 / 3.0).unwrap();
        assert!(v.as_slice()[0].abs() < 1e-13);
        assert!(matches!(
            interpolant_target(&sch, &s(0.0), &s(0.0), &s(1.0), 0.0),
            Err(Error::Singular(_))
        ));
        assert!(interpolant_target(&sch, &s(0.0), &s(0.0), &s(1.0), 1.0).is_err());
    }

    #[test]
    fn target_matches_finite_difference_of_point() {
        let sch = InterpolantSchedule::new(1.3).unwrap();
        let mut rng = substream(2, "test", 0);
        let x0 = gaussian_field(&mut rng, 3, 3);
        let x1 = gaussian_field(&mut rng, 3, 3);
        let z = gaussian_field(&mut rng, 3, 3);
        let h = 1e-6;
        for i in 0..=16 {
            let t = 0.1 + 0.05 * i as f64;
            let p = interpolant_point(&sch, &x0, &x1, &z, t + h).unwrap();
            let m = interpolant_point(&sch, &x0, &x1, &z, t - h).unwrap();
            let fd = p.zip_map(&m, |a, b| (a - b) / (2.0 * h));
            let exact = interpolant_target(&sch, &x0, &x1, &z, t).unwrap();
            for (a, b) in fd.as_slice().iter().zip(exact.as_slice()) {
                assert!(
                    (a - b).abs() / b.abs().max(1e-3) < 1e-5,
                    "t={t}: fd {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn antithetic_properties() {
        let mut rng = substream(3, "test", 0);
        let x0 = gaussian_field(&mut rng, 3, 3);
        let x1 = gaussian_field(&mut rng, 3, 3);
        let z = gaussian_field(&mut rng, 3, 3);
        let det = InterpolantSchedule::new(0.0).unwrap();
        let (p, m) = antithetic_pair(&det, &x0, &x1, &z, 0.4).unwrap();
        assert_eq!(p.x_t, m.x_t);
        assert_eq!(p.target, m.target);

        let sch = InterpolantSchedule::new(2.0).unwrap();
        let t = 0.37;
        let (p, m) = antithetic_pair(&sch, &x0, &x1, &z, t).unwrap();
        let mean = p.x_t.zip_map(&m.x_t, |a, b| 0.5 * (a + b));
        let base = interpolant_point(&det, &x0, &x1, &z, t).unwrap();
        for (a, b) in mean.as_slice().iter().zip(base.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }
        let tsum = p.target.zip_map(&m.target, |a, b| a + b);
        let want = x1.zip_map(&x0, |a, b| 2.0 * (a - b));
        for (a, b) in tsum.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_schedule() {
        let d = build_linear_schedule(2, 0.1, 0.2).unwrap();
        assert!((d.alphabar[0] - 0.9).abs() < 1e-15);
        assert!((d.alphabar[1] - 0.72).abs() < 1e-15);
        let d = DiffusionSchedule::default();
        assert!(d.alphabar.windows(2).all(|w| w[1] < w[0]));
        assert!(d.alphas.iter().all(|&a| 0.0 < a && a < 1.0));
        assert!(build_linear_schedule(10, 0.1, 0.1).is_err());
        assert!(build_linear_schedule(1, 0.1, 0.2).is_err());
    }

    #[test]
    fn vp_forward_values() {
        let d = DiffusionSchedule {
            betas: vec![0.75],
            alphas: vec![0.25],
            alphabar: vec![0.25],
        };
        let out = vp_forward(&d, &s(2.0), &s(1.0), 0).unwrap();
        assert!((out.x_t.as_slice()[0] - (1.0 + 0.75f64.sqrt())).abs() < 1e-15);
        assert_eq!(out.target, s(1.0));
        assert!(vp_forward(&d, &s(2.0), &s(1.0), 1).is_err());
        let one = DiffusionSchedule {
            betas: vec![0.0],
            alphas: vec![1.0],
            alphabar: vec![1.0],
        };
        assert_eq!(vp_forward(&one, &s(2.0), &s(5.0), 0).unwrap().x_t, s(2.0));
    }

    #[test]
    fn fm_forward_values() {
        assert_eq!(fm_forward(&s(3.0), &s(-1.0), 0.0).unwrap().x_t, s(-1.0));
        assert_eq!(fm_forward(&s(3.0), &s(-1.0), 1.0).unwrap().x_t, s(3.0));
        let p = fm_forward(&s(3.0), &s(0.0), 0.4).unwrap();
        assert!((p.x_t.as_slice()[0] - 1.2).abs() < 1e-15);
        assert_eq!(p.target, s(3.0));
    }

    #[test]
    fn edm_schedule_values() {
        let e = build_edm_schedule(2, 0.002, 80.0, 7.0).unwrap();
        assert_eq!(e.sigma_levels, vec![80.0, 0.002, 0.0]);
        let e = build_edm_schedule(3, 0.1, 1.0, 1.0).unwrap();
        let want = [1.0, 0.55, 0.1, 0.0];
        for (a, b) in e.sigma_levels.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let e = build_edm_schedule(1, 0.1, 1.0, 7.0).unwrap();
        assert_eq!(e.sigma_levels, vec![1.0, 0.0]);
        let e = EdmSchedule::default();
        assert!(e.sigma_levels.windows(2).all(|w| w[1] < w[0]));
        assert!(build_edm_schedule(3, 1.0, 0.5, 7.0).is_err());
        assert!(build_edm_schedule(0, 0.1, 1.0, 7.0).is_err());
        assert!(build_edm_schedule(3, 0.1, 1.0, 0.0).is_err());
    }
}
