use sipbench::model::{DriftNetwork, LossHead, NetworkLayout};
use sipbench::process::{DiffusionSchedule, EdmSchedule, InterpolantSchedule};
use sipbench::rng::{gaussian_field, substream};
use sipbench::samplers::{
    ddim_transition_mean, ddpm_transition_mean, ensemble_rollout, rollout, sample_ddim,
    sample_ddim_from, sample_ddpm_from, sample_edm, sample_fm, sample_fm_from, sample_si_em,
    sample_si_em_from, sample_si_euler, sample_tsm_from, FnPredictor, Framework, Predictor,
    Sampler, SamplerSpec, Schedules,
};
use sipbench::{Error, Field, Result};

fn max_abs_diff(a: &Field, b: &Field) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn zeros() -> impl Predictor {
    FnPredictor(|x: &Field, _: &Field, _| Ok(Field::zeros(x.rows(), x.cols())))
}

fn random_net(seed: u64) -> DriftNetwork {
    let layout = NetworkLayout {
        time_embed_dim: 8,
        hidden_width: 16,
        depth: 3,
        ..NetworkLayout::new((3, 3))
    };
    DriftNetwork::new(layout, seed).unwrap()
}

#[test]
fn ddpm_with_zero_noise_prediction_follows_the_scaled_recurrence() {
    let d = DiffusionSchedule::default();
    let mut rng = substream(1, "test", 0);
    let x_start = gaussian_field(&mut rng, 4, 4);
    let mut sampler_rng = substream(2, "chain", 0);
    let got = sample_ddpm_from(&zeros(), &d, &x_start, x_start.clone(), &mut sampler_rng).unwrap();

    // Hand recurrence: x <- x / √α_t + √β̃_t z for t > 0, with the same draws.
    let mut replay = substream(2, "chain", 0);
    let mut x = x_start.clone();
    for t in (0..d.steps()).rev() {
        let alpha = 1.0 - d.betas[t];
        x = x.scale(1.0 / alpha.sqrt());
        if t > 0 {
            let ab = d.alphabar[t];
            let ab_prev = d.alphabar[t - 1];
            let var = (1.0 - ab_prev) / (1.0 - ab) * d.betas[t];
            let z = gaussian_field(&mut replay, 4, 4);
            x.axpy(var.sqrt(), &z);
        }
    }
    assert!(max_abs_diff(&got, &x) < 1e-9 * (1.0 + x.rms()));
}

#[test]
fn ddim_recovers_planted_clean_state() {
    let d = DiffusionSchedule::default();
    let mut rng = substream(3, "test", 0);
    let x0 = gaussian_field(&mut rng, 3, 3);
    let eps = gaussian_field(&mut rng, 3, 3);
    let last = d.steps() - 1;
    let ab = d.alphabar[last];
    let x_t = Field::lincomb(ab.sqrt(), &x0, (1.0 - ab).sqrt(), &eps);
    let planted = FnPredictor(move |_: &Field, _: &Field, _| Ok(eps.clone()));
    for steps in [1, 2, 10, 100] {
        let mut r = substream(0, "unused", 0);
        let out = sample_ddim_from(&planted, &d, &x0, steps, 0.0, x_t.clone(), &mut r).unwrap();
        assert!(max_abs_diff(&out, &x0) < 1e-9, "steps {steps}");
    }
}

#[test]
fn ddim_eta_one_full_schedule_matches_ddpm_means() {
    let d = DiffusionSchedule::default();
    let mut rng = substream(4, "test", 0);
    for step in 1..d.steps() {
        let x = gaussian_field(&mut rng, 2, 2);
        let e = gaussian_field(&mut rng, 2, 2);
        let a = ddpm_transition_mean(&d, &x, &e, step);
        let b = ddim_transition_mean(&x, &e, d.alphabar[step], d.alphabar[step - 1], 1.0);
        assert!(max_abs_diff(&a, &b) < 1e-9 * (1.0 + a.rms()), "step {step}");
    }
}

#[test]
fn ddim_single_step_is_tweedie_bit_for_bit() {
    let d = DiffusionSchedule::default();
    let net = random_net(5);
    let mut rng = substream(6, "test", 0);
    for _ in 0..10 {
        let cond = gaussian_field(&mut rng, 3, 3);
        let x = gaussian_field(&mut rng, 3, 3);
        let mut r = substream(0, "unused", 0);
        let ddim = sample_ddim_from(&net, &d, &cond, 1, 0.0, x.clone(), &mut r).unwrap();
        let tsm = sample_tsm_from(&net, &d, &cond, d.steps() - 1, &x).unwrap();
        assert_eq!(ddim, tsm);
    }
}

#[test]
fn edm_with_constant_denoiser_lands_on_it() {
    let e = EdmSchedule::default();
    let c = Field::filled(2, 3, 0.7);
    let target = c.clone();
    let den = FnPredictor(move |_: &Field, _: &Field, _| Ok(target.clone()));
    let out = sample_edm(&den, &e, &c, 9).unwrap();
    assert_eq!(out, c);
    let out = sample_edm(&zeros(), &e, &c, 9).unwrap();
    assert_eq!(out, Field::zeros(2, 3));
}

#[test]
fn fm_linear_decay_oracle() {
    let minus_x = FnPredictor(|x: &Field, _: &Field, _| Ok(x.scale(-1.0)));
    let mut rng = substream(7, "test", 0);
    let z = gaussian_field(&mut rng, 4, 4);
    let out = sample_fm_from(&minus_x, &z, 1000, z.clone()).unwrap();
    let want = z.scale((-1.0f64).exp());
    let rel = out.zip_map(&want, |a, b| a - b).sum_sq().sqrt() / want.sum_sq().sqrt();
    assert!(rel < 2e-3, "{rel}");
}

#[test]
fn euler_error_halves_when_steps_double() {
    let lambda = 0.8;
    let growth = FnPredictor(move |x: &Field, _: &Field, _| Ok(x.scale(lambda)));
    let x0 = Field::filled(1, 2, 1.3);
    let exact = 1.3 * lambda.exp();
    let err = |n: usize| (sample_si_euler(&growth, &x0, n).unwrap().get(0, 0) - exact).abs();
    for n in [8, 16, 32, 64] {
        let ratio = err(n) / err(2 * n);
        assert!((1.7..=2.3).contains(&ratio), "n = {n}: ratio {ratio}");
    }
    let fm_err = |n: usize| {
        let out = sample_fm_from(&growth, &x0, n, x0.clone()).unwrap();
        (out.get(0, 0) - exact).abs()
    };
    let ratio = fm_err(20) / fm_err(40);
    assert!((1.7..=2.3).contains(&ratio), "fm ratio {ratio}");
}

#[test]
fn si_euler_hand_values() {
    let ramp = FnPredictor(|x: &Field, _: &Field, t| Ok(Field::filled(x.rows(), x.cols(), t)));
    let x0 = Field::zeros(1, 1);
    assert_eq!(sample_si_euler(&ramp, &x0, 1).unwrap().get(0, 0), 0.0);
    assert_eq!(sample_si_euler(&ramp, &x0, 2).unwrap().get(0, 0), 0.25);
}

/// `γ̇(t) = σ (-√t + (1 - t) / (2√t))`, written out independently.
fn gamma_dot(sigma: f64, t: f64) -> f64 {
    sigma * (-t.sqrt() + (1.0 - t) / (2.0 * t.sqrt()))
}

#[test]
fn si_em_hand_evaluation() {
    let sigma = 1.7;
    let s = InterpolantSchedule::new(sigma).unwrap();
    let x0 = Field::filled(2, 2, 0.3);

    // Two steps: analytic first step, no noise on the last.
    let out = sample_si_em(&zeros(), &s, &x0, 2, 42).unwrap();
    let mut rng = substream(42, "si-em", 0);
    let z1 = gaussian_field(&mut rng, 2, 2);
    let want = x0.zip_map(&z1, |a, z| a + 0.5f64.sqrt() * sigma * z);
    assert!(max_abs_diff(&out, &want) < 1e-14);

    // Three steps: the middle step carries γ̇(1/3)/√(1/3) · √(1/3) noise.
    let out = sample_si_em(&zeros(), &s, &x0, 3, 42).unwrap();
    let mut rng = substream(42, "si-em", 0);
    let z1 = gaussian_field(&mut rng, 2, 2);
    let z2 = gaussian_field(&mut rng, 2, 2);
    let dt: f64 = 1.0 / 3.0;
    let c1 = dt.sqrt() * sigma;
    let c2 = gamma_dot(sigma, dt) / dt.sqrt() * dt.sqrt();
    let want = Field::from_fn(2, 2, |i, j| 0.3 + c1 * z1.get(i, j) + c2 * z2.get(i, j));
    assert!(max_abs_diff(&out, &want) < 1e-13);
}

#[test]
fn si_em_vanishing_noise_matches_euler() {
    let net = random_net(8);
    let s = InterpolantSchedule::new(1e-12).unwrap();
    let mut rng = substream(9, "test", 0);
    for steps in [2, 5, 20] {
        let x0 = gaussian_field(&mut rng, 3, 3);
        let em = sample_si_em(&net, &s, &x0, steps, 3).unwrap();
        let e = sample_si_euler(&net, &x0, steps).unwrap();
        assert!(max_abs_diff(&em, &e) < 1e-6, "steps {steps}");
    }
}

#[test]
fn si_em_spread_grows_with_sigma() {
    let pull = FnPredictor(|x: &Field, c: &Field, _| Ok(c.zip_map(x, |a, b| 0.5 * (a - b))));
    let x0 = Field::filled(2, 2, 1.0);
    let mut spreads = Vec::new();
    for sigma in [0.1, 0.5, 1.0] {
        let spec = SamplerSpec {
            sigma,
            ..SamplerSpec::new(Framework::SiEm, 10)
        };
        let sampler = Sampler::new(&pull, LossHead::Drift, spec, Schedules::default()).unwrap();
        let members = ensemble_rollout(&sampler, &x0, 1, 256, 17).unwrap();
        let finals: Vec<f64> = members
            .iter()
            .flat_map(|m| m[1].as_slice().to_vec())
            .collect();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        let var =
            finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (finals.len() - 1) as f64;
        spreads.push(var.sqrt());
    }
    assert!(spreads.windows(2).all(|w| w[1] >= w[0]), "{spreads:?}");
}

#[test]
fn every_sampler_is_deterministic_given_its_seed() {
    let net = random_net(10);
    let mut rng = substream(11, "test", 0);
    let x = gaussian_field(&mut rng, 3, 3);
    for fw in Framework::ALL {
        let steps = if fw == Framework::Tsm { 1 } else { 4 };
        let spec = SamplerSpec {
            eta: 0.5,
            ..SamplerSpec::new(fw, steps)
        };
        let s = Sampler::new(&net, fw.head(), spec, Schedules::default()).unwrap();
        let a = rollout(&s, &x, 3, 99).unwrap();
        let b = rollout(&s, &x, 3, 99).unwrap();
        assert_eq!(a, b, "{fw}");
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|f| f.is_finite()));
    }
    let d = DiffusionSchedule::default();
    assert_eq!(
        sample_ddim(&net, &d, &x, 5, 1.0, 1).unwrap(),
        sample_ddim(&net, &d, &x, 5, 1.0, 1).unwrap()
    );
    assert_eq!(
        sample_fm(&net, &x, 5, 2).unwrap(),
        sample_fm(&net, &x, 5, 2).unwrap()
    );
}

#[test]
fn rollout_reports_the_step_that_produced_nan() {
    let calls = std::sync::atomic::AtomicUsize::new(0);
    let poisoned = |cur: &Field, _seed: u64| -> Result<Field> {
        let n = calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst) + 1;
        Ok(if n == 3 {
            cur.map(|_| f64::NAN)
        } else {
            cur.clone()
        })
    };
    let x = Field::filled(2, 2, 1.0);
    match rollout(&poisoned, &x, 5, 0) {
        Err(Error::RolloutDiverged { step }) => assert_eq!(step, 3),
        other => panic!("expected divergence, got {other:?}"),
    }
    let identity = |cur: &Field, _seed: u64| -> Result<Field> { Ok(cur.clone()) };
    let traj = rollout(&identity, &x, 4, 0).unwrap();
    assert!(traj.iter().all(|f| *f == x));
    assert_eq!(rollout(&identity, &x, 1, 0).unwrap().len(), 2);
}

#[test]
fn si_em_rejects_deterministic_schedule() {
    let s = InterpolantSchedule::new(0.0).unwrap();
    let mut r = substream(0, "x", 0);
    let x0 = Field::zeros(1, 1);
    assert!(sample_si_em_from(&zeros(), &s, &x0, 4, 1.0, &mut r).is_err());
}
