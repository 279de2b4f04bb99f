use std::f64::consts::PI;

use proptest::prelude::*;
use sipbench::metrics::{
    climatological_bias, crps, lat_weights, lmae, lrmse, nrmse, radial_power_spectrum, srmse_bands,
    ssr, vrmse, EnsembleForecast, LatGrid, SpectrumBands, SrmseMode,
};
use sipbench::rng::{gaussian, gaussian_field, substream};
use sipbench::Field;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn noise_traj(seed: u64, n: usize, frames: usize) -> Vec<Field> {
    let mut rng = substream(seed, "metrics-test", 0);
    (0..frames)
        .map(|_| gaussian_field(&mut rng, n, n))
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn vrmse_and_nrmse_closed_forms() {
    let truth = noise_traj(1, 8, 5);
    assert_eq!(vrmse(&truth, &truth).unwrap(), 0.0);
    assert_eq!(nrmse(&truth, &truth).unwrap(), 0.0);

    let mean_pred: Vec<Field> = truth
        .iter()
        .map(|f| Field::filled(8, 8, f.mean()))
        .collect();
    assert!(close(vrmse(&mean_pred, &truth).unwrap(), 1.0, 1e-4));

    let doubled: Vec<Field> = truth.iter().map(|f| f.scale(2.0)).collect();
    assert!(close(nrmse(&doubled, &truth).unwrap(), 1.0, 1e-12));
    let zero: Vec<Field> = truth.iter().map(|_| Field::zeros(8, 8)).collect();
    assert!(close(nrmse(&zero, &truth).unwrap(), 1.0, 1e-12));

    let flat = vec![Field::filled(4, 4, 3.0)];
    let shifted = vec![Field::filled(4, 4, 4.0)];
    let v = vrmse(&shifted, &flat).unwrap();
    assert!(v.is_finite() && v > 1e5, "{v}");

    assert!(vrmse(&truth[..2], &truth[..3]).is_err());
    let wrong = vec![Field::zeros(3, 3)];
    assert!(nrmse(&wrong, &truth[..1]).is_err());
}

#[test]
fn pure_tone_lands_in_its_bin() {
    let n = 32;
    let tone = Field::from_fn(n, n, |_, j| (2.0 * PI * 3.0 * j as f64 / n as f64).sin());
    let s = radial_power_spectrum(&tone).unwrap();
    assert!(s.power[3] / s.total() > 0.99);
    let zero = radial_power_spectrum(&Field::zeros(n, n)).unwrap();
    assert_eq!(zero.total(), 0.0);
    assert!(radial_power_spectrum(&Field::zeros(4, 6)).is_err());
}

#[test]
fn white_noise_satisfies_parseval() {
    for (seed, n) in [(2, 16), (3, 32), (4, 33)] {
        let f = noise_traj(seed, n, 1).remove(0);
        let s = radial_power_spectrum(&f).unwrap();
        let energy = f.sum_sq() / f.len() as f64;
        assert!(((s.total() - energy) / energy).abs() < 1e-6, "n = {n}");
    }
}

#[test]
fn bands_partition_the_radial_axis() {
    let bands = SpectrumBands::for_grid(32).unwrap();
    assert!(bands.edges.windows(2).all(|w| w[1] > w[0]));
    let want = [1.0, 16f64.powf(1.0 / 3.0), 16f64.powf(2.0 / 3.0), 16.0];
    for (a, b) in bands.edges.iter().zip(want) {
        assert!(close(*a, b, 1e-12));
    }
    let max_bin = 23;
    let members = bands.members(max_bin);
    let mut seen = vec![0; max_bin + 1];
    for band in &members {
        for &k in band {
            seen[k] += 1;
        }
    }
    assert_eq!(seen[0], 0);
    assert!(seen[1..].iter().all(|&c| c == 1), "{seen:?}");
}

#[test]
fn srmse_of_doubled_prediction_is_three_quarters() {
    let truth = noise_traj(5, 32, 3);
    let doubled: Vec<Field> = truth.iter().map(|f| f.scale(2.0)).collect();
    for mode in [SrmseMode::Pooled, SrmseMode::PerBin] {
        let same = srmse_bands(&truth, &truth, mode).unwrap();
        assert_eq!(same, [0.0; 3]);
        let s = srmse_bands(&doubled, &truth, mode).unwrap();
        for v in s {
            assert!(close(v, 0.75, 1e-12), "{mode:?}: {s:?}");
        }
    }
    let zero: Vec<Field> = truth.iter().map(|_| Field::zeros(32, 32)).collect();
    assert_eq!(
        srmse_bands(&zero, &truth, SrmseMode::Pooled).unwrap(),
        [10.0; 3]
    );
}

fn roll(f: &Field, dr: usize, dc: usize) -> Field {
    let (r, c) = f.shape();
    Field::from_fn(r, c, |i, j| f.get((i + dr) % r, (j + dc) % c))
}

#[test]
fn lat_weight_cases() {
    let hemis = LatGrid::equiangular(2, 5).unwrap();
    assert_eq!(lat_weights(&hemis), vec![1.0, 1.0]);

    let g = LatGrid::equiangular(9, 4).unwrap();
    let w = lat_weights(&g);
    assert!(w[4] > w[0] && w[4] > w[8]);

    let flat = LatGrid::equal_area(6, 6).unwrap();
    let truth = noise_traj(6, 6, 1).remove(0);
    let pred = noise_traj(7, 6, 1).remove(0);
    let diff = pred.zip_map(&truth, |a, b| a - b);
    let rmse = (diff.sum_sq() / 36.0).sqrt();
    let mae = diff.as_slice().iter().map(|d| d.abs()).sum::<f64>() / 36.0;
    assert!(close(lrmse(&pred, &truth, &flat).unwrap(), rmse, 1e-12));
    assert!(close(lmae(&pred, &truth, &flat).unwrap(), mae, 1e-12));

    // A single wrong cell in row 2 of the equiangular grid.
    let truth = Field::zeros(9, 4);
    let mut pred = truth.clone();
    pred.set(2, 1, 0.5);
    let want = (w[2] * 0.25 / 36.0).sqrt();
    assert!(close(lrmse(&pred, &truth, &g).unwrap(), want, 1e-14));
    assert_eq!(lrmse(&truth, &truth, &g).unwrap(), 0.0);
}

#[test]
fn climatological_bias_cases() {
    let grid = LatGrid::equal_area(4, 4).unwrap();
    let truth = noise_traj(8, 4, 6);
    assert_eq!(climatological_bias(&truth, &truth, &grid).unwrap(), 0.0);
    let shifted: Vec<Field> = truth.iter().map(|f| f.map(|v| v + 0.3)).collect();
    assert!(close(
        climatological_bias(&shifted, &truth, &grid).unwrap(),
        0.3,
        1e-12
    ));
    let wobble: Vec<Field> = truth
        .iter()
        .enumerate()
        .map(|(k, f)| f.map(|v| v + if k % 2 == 0 { 1.0 } else { -1.0 }))
        .collect();
    assert!(climatological_bias(&wobble, &truth, &grid).unwrap() < 1e-12);
}

fn ensemble(members: Vec<Field>, obs: Field) -> EnsembleForecast {
    EnsembleForecast::new(members.into_iter().map(|m| vec![m]).collect(), vec![obs]).unwrap()
}

#[test]
fn crps_hand_cases() {
    let grid = LatGrid::equiangular(3, 3).unwrap();
    let obs = noise_traj(9, 3, 1).remove(0);
    let same = ensemble(vec![obs.clone(), obs.clone(), obs.clone()], obs.clone());
    assert!(crps(&same, 0, &grid).unwrap().abs() < 1e-15);

    let a = 0.4;
    let pm = ensemble(vec![obs.map(|v| v + a), obs.map(|v| v - a)], obs.clone());
    assert!(crps(&pm, 0, &grid).unwrap().abs() < 1e-14);

    assert!(EnsembleForecast::new(vec![vec![obs.clone()]], vec![obs]).is_err());
}

/// Closed-form CRPS of `N(mu, s^2)` at observation `y`.
fn gaussian_crps(mu: f64, s: f64, y: f64) -> f64 {
    let z = (y - mu) / s;
    let n = Normal::new(0.0, 1.0).unwrap();
    s * (z * (2.0 * n.cdf(z) - 1.0) + 2.0 * n.pdf(z) - 1.0 / PI.sqrt())
}

#[test]
fn fair_crps_matches_gaussian_closed_form() {
    // Each grid point is an independent scalar replica with the same observation.
    let (mu, s, y) = (0.5, 1.5, 1.7);
    let m = 10_000;
    let mut rng = substream(10, "crps", 0);
    let members: Vec<Field> = (0..m)
        .map(|_| Field::from_fn(4, 4, |_, _| mu + s * gaussian(&mut rng)))
        .collect();
    let ens = ensemble(members, Field::filled(4, 4, y));
    let grid = LatGrid::equal_area(4, 4).unwrap();
    let got = crps(&ens, 0, &grid).unwrap();
    let want = gaussian_crps(mu, s, y);
    assert!(((got - want) / want).abs() < 0.01, "{got} vs {want}");
}

#[test]
fn ssr_cases() {
    let grid = LatGrid::equiangular(8, 8).unwrap();
    let obs = noise_traj(11, 8, 1).remove(0);
    let off = obs.map(|v| v + 1.0);
    let flat = ensemble(vec![off.clone(), off.clone(), off], obs.clone());
    assert!(ssr(&flat, 0, &grid).unwrap() < 1e-12);

    // Exchangeable ensemble: the observation is one more draw from the member distribution.
    let mut rng = substream(12, "ssr", 0);
    let center = gaussian_field(&mut rng, 8, 8);
    let draw = |rng: &mut _| center.zip_map(&gaussian_field(rng, 8, 8), |c, z| c + z);
    let members: Vec<Field> = (0..256).map(|_| draw(&mut rng)).collect();
    let truth = draw(&mut rng);
    let v = ssr(&ensemble(members, truth), 0, &grid).unwrap();
    assert!((0.9..=1.1).contains(&v), "{v}");
}

#[test]
fn ssr_on_uniform_grid_is_std_over_rmse() {
    let grid = LatGrid::equal_area(3, 3).unwrap();
    let obs = noise_traj(13, 3, 1).remove(0);
    let members: Vec<Field> = (0..5).map(|k| noise_traj(20 + k, 3, 1).remove(0)).collect();
    let m = members.len() as f64;
    let mean = Field::from_fn(3, 3, |i, j| {
        members.iter().map(|f| f.get(i, j)).sum::<f64>() / m
    });
    let mut var = 0.0;
    for f in &members {
        var += f
            .zip_map(&mean, |a, b| (a - b).powi(2))
            .as_slice()
            .iter()
            .sum::<f64>();
    }
    let spread = (var / (m - 1.0) / 9.0).sqrt();
    let skill = (mean
        .zip_map(&obs, |a, b| (a - b).powi(2))
        .as_slice()
        .iter()
        .sum::<f64>()
        / 9.0)
        .sqrt();
    let got = ssr(&ensemble(members, obs), 0, &grid).unwrap();
    assert!(close(got, spread / skill, 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn srmse_is_translation_invariant(seed in any::<u64>(), dr in 0usize..16, dc in 0usize..16) {
        let truth = noise_traj(seed, 16, 2);
        let pred = noise_traj(seed ^ 1, 16, 2);
        let base = srmse_bands(&pred, &truth, SrmseMode::Pooled).unwrap();
        let rp: Vec<Field> = pred.iter().map(|f| roll(f, dr, dc)).collect();
        let rt: Vec<Field> = truth.iter().map(|f| roll(f, dr, dc)).collect();
        let moved = srmse_bands(&rp, &rt, SrmseMode::Pooled).unwrap();
        for (a, b) in base.iter().zip(moved) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn lat_weights_average_to_one(n_lat in 1usize..40, n_lon in 1usize..5) {
        for g in [LatGrid::equiangular(n_lat, n_lon).unwrap(), LatGrid::equal_area(n_lat, n_lon).unwrap()] {
            let w = lat_weights(&g);
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            prop_assert!((mean - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ensemble_scores_ignore_member_order_and_common_shifts(seed in any::<u64>(), shift in -3.0f64..3.0, rot in 1usize..6) {
        let grid = LatGrid::equiangular(4, 3).unwrap();
        let mut rng = substream(seed, "perm", 0);
        let members: Vec<Field> = (0..7).map(|_| gaussian_field(&mut rng, 4, 3)).collect();
        let obs = gaussian_field(&mut rng, 4, 3);
        let base = ensemble(members.clone(), obs.clone());
        let mut turned = members.clone();
        turned.rotate_left(rot);
        let turned = ensemble(turned, obs.clone());
        let c = crps(&base, 0, &grid).unwrap();
        prop_assert!((c - crps(&turned, 0, &grid).unwrap()).abs() < 1e-12);
        prop_assert!((ssr(&base, 0, &grid).unwrap() - ssr(&turned, 0, &grid).unwrap()).abs() < 1e-12);
        let moved = ensemble(members.iter().map(|f| f.map(|v| v + shift)).collect(), obs.map(|v| v + shift));
        prop_assert!((c - crps(&moved, 0, &grid).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn errors_are_nonnegative_and_vanish_on_truth(seed in any::<u64>()) {
        let truth = noise_traj(seed, 6, 2);
        let pred = noise_traj(seed.wrapping_add(1), 6, 2);
        prop_assert!(vrmse(&pred, &truth).unwrap() > 0.0);
        prop_assert!(nrmse(&pred, &truth).unwrap() > 0.0);
        prop_assert_eq!(vrmse(&truth, &truth).unwrap(), 0.0);
        let g = LatGrid::equiangular(6, 6).unwrap();
        prop_assert!(lrmse(&pred[0], &truth[0], &g).unwrap() > 0.0);
    }
}
