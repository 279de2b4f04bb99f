//! Pseudo-spectral Kolmogorov flow in vorticity form on a doubly periodic square.
//!
//! ```text
//! ∂ω/∂t = -b u·∇ω + ν Δω + λ ω - k cos(k 2π y / L),   u = (-∂_y ψ, ∂_x ψ),  ψ = Δ⁻¹ ω
//! ```
//!
//! Viscous diffusion is integrated exactly with an integrating factor; convection,
//! drag and forcing form the explicit part of a Lawson RK4 step. Quadratic products
//! are dealiased with the 2/3 rule and the mean vorticity is pinned to zero.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::container;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::rng::substream;
use crate::spectral::{wavenumber, Fft2};

/// Largest |k_x|, |k_y| used by random initial conditions.
pub const IC_MAX_MODE: i64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Points per side.
    pub n: usize,
    /// Side length of the domain `[-L/2, L/2]²`.
    pub length: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: 32,
            length: 20.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n < 16 || !self.n.is_multiple_of(2) {
            problems.push(format!("grid n must be even and >= 16, got {}", self.n));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            problems.push(format!("grid length must be positive, got {}", self.length));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.dx()
    }

    /// Physical wavenumber `2π k / L` of FFT bin `i`.
    pub fn kappa(&self, i: usize) -> f64 {
        2.0 * PI * wavenumber(i, self.n) as f64 / self.length
    }

    /// Largest retained integer wavenumber under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.n - 1) / 3) as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub nu: f64,
    pub b_conv: f64,
    pub lambda_drag: f64,
    /// Forcing wavenumber index; also the forcing amplitude. Zero disables forcing.
    pub k_force: f64,
    pub dt_solver: f64,
    pub save_every: usize,
    pub n_frames: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nu: 1e-2,
            b_conv: 1.0,
            lambda_drag: -0.1,
            k_force: 4.0,
            dt_solver: 0.01,
            save_every: 20,
            n_frames: 100,
        }
    }
}

impl SolverConfig {
    pub fn dt_frame(&self) -> f64 {
        self.dt_solver * self.save_every as f64
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            problems.push(format!(
                "nu must be finite and nonnegative, got {}",
                self.nu
            ));
        }
        if !(self.dt_solver > 0.0 && self.dt_solver.is_finite()) {
            problems.push(format!(
                "dt_solver must be positive, got {}",
                self.dt_solver
            ));
        }
        if self.save_every == 0 {
            problems.push("save_every must be at least 1".to_string());
        }
        if self.n_frames == 0 {
            problems.push("n_frames must be at least 1".to_string());
        }
        for (name, v) in [
            ("b_conv", self.b_conv),
            ("lambda_drag", self.lambda_drag),
            ("k_force", self.k_force),
        ] {
            if !v.is_finite() {
                problems.push(format!("{name} must be finite"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Random truncated Fourier series: one uniform amplitude in `[-1, 1]` and phase
/// in `[0, 2π)` per mode `(k_x, k_y)` with `max(|k_x|, |k_y|) <= 5`, taken over a
/// half plane so every real mode appears once.
pub fn sample_ic(grid: &GridSpec, seed: u64) -> Field {
    let mut rng = substream(seed, "kflow-ic", 0);
    let mut modes = Vec::new();
    for kx in 0..=IC_MAX_MODE {
        for ky in -IC_MAX_MODE..=IC_MAX_MODE {
            if kx == 0 && ky <= 0 {
                continue;
            }
            let a: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            modes.push((kx as f64, ky as f64, a, phi));
        }
    }
    let k0 = 2.0 * PI / grid.length;
    Field::from_fn(grid.n, grid.n, |r, c| {
        let (x, y) = (grid.coord(c), grid.coord(r));
        modes
            .iter()
            .map(|&(kx, ky, a, phi)| a * (k0 * (kx * x + ky * y) + phi).sin())
            .sum()
    })
}

/// Spectral state of the solver (row-major `n x n` complex coefficients).
pub type Spectrum = Vec<Complex64>;

pub struct KolmogorovSolver {
    grid: GridSpec,
    cfg: SolverConfig,
    fft: Fft2,
    kx: Vec<f64>,
    ky: Vec<f64>,
    mask: Vec<bool>,
    forcing: Spectrum,
    decay_half: Vec<f64>,
    decay_full: Vec<f64>,
}

impl KolmogorovSolver {
    pub fn new(grid: GridSpec, cfg: SolverConfig) -> Result<Self> {
        grid.validate()?;
        cfg.validate()?;
        let n = grid.n;
        let fft = Fft2::new(n);
        let cutoff = grid.dealias_cutoff();
        let mut kx = Vec::with_capacity(n * n);
        let mut ky = Vec::with_capacity(n * n);
        let mut mask = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                kx.push(grid.kappa(c));
                ky.push(grid.kappa(r));
                mask.push(wavenumber(c, n).abs() <= cutoff && wavenumber(r, n).abs() <= cutoff);
            }
        }
        let h = cfg.dt_solver;
        let lap: Vec<f64> = kx.iter().zip(&ky).map(|(a, b)| -(a * a + b * b)).collect();
        let decay_half = lap.iter().map(|l| (cfg.nu * l * 0.5 * h).exp()).collect();
        let decay_full = lap.iter().map(|l| (cfg.nu * l * h).exp()).collect();

        let kf = cfg.k_force;
        let forcing_phys: Vec<f64> = (0..n * n)
            .map(|i| -kf * (kf * 2.0 * PI / grid.length * grid.coord(i / n)).cos())
            .collect();
        let mut forcing = fft.forward_real(&forcing_phys);
        for (f, &keep) in forcing.iter_mut().zip(&mask) {
            if !keep {
                *f = Complex64::new(0.0, 0.0);
            }
        }
        forcing[0] = Complex64::new(0.0, 0.0);

        Ok(Self {
            grid,
            cfg,
            fft,
            kx,
            ky,
            mask,
            forcing,
            decay_half,
            decay_full,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    fn dealias(&self, s: &mut [Complex64]) {
        for (v, &keep) in s.iter_mut().zip(&self.mask) {
            if !keep {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Whether bin `i` survives the 2/3 truncation.
    pub fn is_retained(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn to_spectral(&self, field: &Field) -> Result<Spectrum> {
        let n = self.grid.n;
        if field.shape() != (n, n) {
            return Err(Error::ShapeMismatch {
                expected: (n, n),
                found: field.shape(),
            });
        }
        let mut s = self.fft.forward_real(field.as_slice());
        self.dealias(&mut s);
        Ok(s)
    }

    /// Physical field and the largest imaginary residue of the inverse transform.
    pub fn to_physical(&self, s: &[Complex64]) -> (Field, f64) {
        let (values, imag) = self.fft.inverse_real(s);
        let n = self.grid.n;
        (Field::from_vec(n, n, values).expect("n x n"), imag)
    }

    /// Explicit right-hand side (convection + drag + forcing) and the CFL number.
    pub fn explicit_rhs(&self, w: &[Complex64]) -> (Spectrum, f64) {
        let n2 = w.len();
        let i = Complex64::new(0.0, 1.0);
        let mut u = vec![Complex64::new(0.0, 0.0); n2];
        let mut v = u.clone();
        let mut wx = u.clone();
        let mut wy = u.clone();
        for j in 1..n2 {
            let (kx, ky) = (self.kx[j], self.ky[j]);
            let psi = -w[j] / (kx * kx + ky * ky);
            u[j] = -i * ky * psi;
            v[j] = i * kx * psi;
            wx[j] = i * kx * w[j];
            wy[j] = i * ky * w[j];
        }
        for buf in [&mut u, &mut v, &mut wx, &mut wy] {
            self.fft.inverse(buf);
        }
        let mut umax = 0.0f64;
        let mut conv: Spectrum = (0..n2)
            .map(|j| {
                umax = umax.max(u[j].re.abs()).max(v[j].re.abs());
                Complex64::new(
                    -self.cfg.b_conv * (u[j].re * wx[j].re + v[j].re * wy[j].re),
                    0.0,
                )
            })
            .collect();
        self.fft.forward(&mut conv);
        self.dealias(&mut conv);
        conv[0] = Complex64::new(0.0, 0.0);
        for j in 0..n2 {
            conv[j] += self.cfg.lambda_drag * w[j] + self.forcing[j];
        }
        let cfl = umax * self.cfg.dt_solver / self.grid.dx();
        (conv, cfl)
    }

    /// One integrating-factor RK4 step in place. Returns the CFL number at the
    /// start of the step and logs a warning when it exceeds 1.
    pub fn step(&self, w: &mut Spectrum) -> f64 {
        let h = self.cfg.dt_solver;
        let (eh, e) = (&self.decay_half, &self.decay_full);
        let n2 = w.len();

        let (k1, cfl) = self.explicit_rhs(w);
        let a: Spectrum = (0..n2).map(|j| eh[j] * (w[j] + 0.5 * h * k1[j])).collect();
        let (k2, _) = self.explicit_rhs(&a);
        let b: Spectrum = (0..n2).map(|j| eh[j] * w[j] + 0.5 * h * k2[j]).collect();
        let (k3, _) = self.explicit_rhs(&b);
        let c: Spectrum = (0..n2).map(|j| e[j] * w[j] + h * eh[j] * k3[j]).collect();
        let (k4, _) = self.explicit_rhs(&c);
        for j in 0..n2 {
            w[j] = e[j] * w[j] + h / 6.0 * (e[j] * k1[j] + 2.0 * eh[j] * (k2[j] + k3[j]) + k4[j]);
        }
        self.dealias(w);
        if cfl > 1.0 {
            log::warn!("CFL number {cfl:.3} exceeds 1 (dt = {h})");
        }
        cfl
    }

    /// Integrate from `initial`, storing a frame every `save_every` steps.
    pub fn simulate(&self, initial: &Field) -> Result<Vec<Field>> {
        let mut w = self.to_spectral(initial)?;
        w[0] = Complex64::new(0.0, 0.0);
        let mut frames = Vec::with_capacity(self.cfg.n_frames);
        frames.push(self.to_physical(&w).0);
        while frames.len() < self.cfg.n_frames {
            for _ in 0..self.cfg.save_every {
                self.step(&mut w);
            }
            let (frame, _) = self.to_physical(&w);
            if !frame.is_finite() {
                return Err(Error::NonFinite(format!(
                    "vorticity at frame {}",
                    frames.len()
                )));
            }
            frames.push(frame);
        }
        Ok(frames)
    }
}

/// A time-ordered sequence of fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<Field>,
    pub dt_frame: f64,
    /// Index used to derive this trajectory's seed from the dataset's base seed.
    pub seed_index: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub grid: GridSpec,
    pub config: SolverConfig,
    pub base_seed: u64,
    pub trajectories: Vec<Trajectory>,
    /// Seed indices of trajectories that blew up during generation.
    pub failed: Vec<u64>,
}

/// Header of a dataset container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub kind: String,
    pub grid: GridSpec,
    pub config: SolverConfig,
    pub base_seed: u64,
    pub field_names: Vec<String>,
    /// `[trajectories, frames, rows, cols]`.
    pub shape: [usize; 4],
    pub dtype: String,
    pub dt_frame: f64,
    pub trajectory_seed_indices: Vec<u64>,
    pub failed: Vec<u64>,
}

pub const DATASET_KIND: &str = "dataset";

impl Dataset {
    pub fn frame_shape(&self) -> (usize, usize) {
        (self.grid.n, self.grid.n)
    }

    pub fn n_frames(&self) -> usize {
        self.trajectories.first().map_or(0, |t| t.frames.len())
    }

    pub fn header(&self) -> DatasetHeader {
        DatasetHeader {
            kind: DATASET_KIND.to_string(),
            grid: self.grid,
            config: self.config,
            base_seed: self.base_seed,
            field_names: vec!["vorticity".to_string()],
            shape: [
                self.trajectories.len(),
                self.n_frames(),
                self.grid.n,
                self.grid.n,
            ],
            dtype: container::DTYPE_F32LE.to_string(),
            dt_frame: self.config.dt_frame(),
            trajectory_seed_indices: self.trajectories.iter().map(|t| t.seed_index).collect(),
            failed: self.failed.clone(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        container::encode(&self.header(), &self.payload())
    }

    fn payload(&self) -> Vec<f32> {
        self.trajectories
            .iter()
            .flat_map(|t| t.frames.iter())
            .flat_map(|f| f.as_slice().iter().map(|&v| v as f32))
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        container::write(path, &self.header(), &self.payload())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (h, data): (DatasetHeader, Vec<f32>) = container::read(path)?;
        let bad = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        if h.kind != DATASET_KIND {
            return Err(bad(format!("expected a dataset, found {:?}", h.kind)));
        }
        if h.dtype != container::DTYPE_F32LE {
            return Err(bad(format!("unsupported dtype {:?}", h.dtype)));
        }
        let [nt, nf, rows, cols] = h.shape;
        if data.len() != nt * nf * rows * cols {
            return Err(bad(format!(
                "payload holds {} values, header shape {:?} needs {}",
                data.len(),
                h.shape,
                nt * nf * rows * cols
            )));
        }
        if h.trajectory_seed_indices.len() != nt {
            return Err(bad(
                "seed index count does not match trajectory count".into()
            ));
        }
        let frame_len = rows * cols;
        let trajectories = data
            .chunks_exact(nf * frame_len.max(1))
            .zip(&h.trajectory_seed_indices)
            .map(|(chunk, &seed_index)| Trajectory {
                frames: chunk
                    .chunks_exact(frame_len)
                    .map(|f| {
                        Field::from_vec(rows, cols, f.iter().map(|&v| v as f64).collect())
                            .expect("sized")
                    })
                    .collect(),
                dt_frame: h.dt_frame,
                seed_index,
            })
            .collect();
        Ok(Dataset {
            grid: h.grid,
            config: h.config,
            base_seed: h.base_seed,
            trajectories,
            failed: h.failed,
        })
    }
}

/// Generate `n_traj` independent trajectories in parallel. Trajectory `i` uses
/// initial-condition seed `derive_seed(base_seed, "trajectory", i)`. Blow-ups are
/// logged and recorded in `failed`; generation continues.
pub fn generate_dataset(
    n_traj: usize,
    grid: GridSpec,
    cfg: SolverConfig,
    base_seed: u64,
) -> Result<Dataset> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter("n_traj must be at least 1".into()));
    }
    let solver = KolmogorovSolver::new(grid, cfg)?;
    let results: Vec<(u64, Result<Vec<Field>>)> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let ic = sample_ic(&grid, crate::rng::derive_seed(base_seed, "trajectory", i));
            (i, solver.simulate(&ic))
        })
        .collect();
    let mut trajectories = Vec::with_capacity(n_traj);
    let mut failed = Vec::new();
    for (i, r) in results {
        match r {
            Ok(frames) => trajectories.push(Trajectory {
                frames,
                dt_frame: cfg.dt_frame(),
                seed_index: i,
            }),
            Err(e) => {
                log::warn!("trajectory {i} failed: {e}");
                failed.push(i);
            }
        }
    }
    if !failed.is_empty() {
        log::warn!("{} of {n_traj} trajectories failed", failed.len());
    }
    Ok(Dataset {
        grid,
        config: cfg,
        base_seed,
        trajectories,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> GridSpec {
        GridSpec {
            n: 16,
            length: 20.0,
        }
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec { n: 15, length: 1.0 }.validate().is_err());
        assert!(GridSpec { n: 8, length: 1.0 }.validate().is_err());
        assert!(GridSpec { n: 16, length: 0.0 }.validate().is_err());
        assert!(small_grid().validate().is_ok());
    }

    #[test]
    fn ic_is_reproducible_zero_mean_and_band_limited() {
        let grid = GridSpec::default();
        let a = sample_ic(&grid, 3);
        assert_eq!(a, sample_ic(&grid, 3));
        assert_ne!(a, sample_ic(&grid, 4));
        assert!(a.mean().abs() < 1e-12);
        let fft = Fft2::new(grid.n);
        let s = fft.forward_real(a.as_slice());
        let scale = (grid.n * grid.n) as f64;
        for (j, c) in s.iter().enumerate() {
            let (kr, kc) = (
                wavenumber(j / grid.n, grid.n),
                wavenumber(j % grid.n, grid.n),
            );
            if kr.abs() > IC_MAX_MODE || kc.abs() > IC_MAX_MODE {
                assert!(c.norm() / scale < 1e-12, "mode ({kr},{kc}) = {c}");
            }
        }
    }

    #[test]
    fn zero_state_is_a_fixed_point_without_forcing() {
        let cfg = SolverConfig {
            k_force: 0.0,
            ..SolverConfig::default()
        };
        let solver = KolmogorovSolver::new(small_grid(), cfg).unwrap();
        let mut w = vec![Complex64::new(0.0, 0.0); 256];
        for _ in 0..10 {
            solver.step(&mut w);
        }
        assert!(w.iter().all(|c| c.re == 0.0 && c.im == 0.0));
    }

    #[test]
    fn dataset_round_trips_through_container() {
        let cfg = SolverConfig {
            n_frames: 3,
            save_every: 2,
            ..SolverConfig::default()
        };
        let ds = generate_dataset(2, small_grid(), cfg, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.sipb");
        ds.write(&path).unwrap();
        let back = Dataset::read(&path).unwrap();
        assert_eq!(back.trajectories.len(), 2);
        assert_eq!(back.n_frames(), 3);
        assert_eq!(back.header(), ds.header());
        for (a, b) in ds.trajectories.iter().zip(&back.trajectories) {
            for (fa, fb) in a.frames.iter().zip(&b.frames) {
                for (x, y) in fa.as_slice().iter().zip(fb.as_slice()) {
                    assert_eq!(*x as f32 as f64, *y);
                }
            }
        }
    }

    #[test]
    fn single_frame_dataset_holds_the_initial_condition() {
        let cfg = SolverConfig {
            n_frames: 1,
            ..SolverConfig::default()
        };
        let ds = generate_dataset(1, small_grid(), cfg, 5).unwrap();
        let ic = sample_ic(&small_grid(), crate::rng::derive_seed(5, "trajectory", 0));
        let frame = &ds.trajectories[0].frames[0];
        assert_eq!(ds.trajectories[0].frames.len(), 1);
        for (a, b) in frame.as_slice().iter().zip(ic.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
