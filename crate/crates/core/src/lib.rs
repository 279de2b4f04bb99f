//! Generative emulators for autoregressive PDE forecasting.
//!
//! The crate bundles the pieces needed to compare stochastic interpolants with
//! diffusion (DDPM, DDIM, EDM, truncated Tweedie sampling), rectified flow and a
//! deterministic regression baseline on a desk-scale Kolmogorov-flow benchmark:
//!
//! * [`process`]: forward processes and regression targets,
//! * [`model`]: an MLP predictor with exact gradients and Adam,
//! * [`samplers`]: every sampling procedure and autoregressive rollout,
//! * [`kflow`]: a pseudo-spectral Kolmogorov-flow solver and dataset generator,
//! * [`metrics`]: VRMSE, NRMSE, spectral RMSE, latitude-weighted scores, CRPS, SSR,
//! * [`distances`]: JL projection, sliced Wasserstein, MMD and C2ST distance curves,
//! * [`training`]: training loops and evaluation,
//! * [`experiment`]: config-driven commands behind the `sipbench` binary.

pub mod config;
pub mod container;
pub mod distances;
pub mod error;
pub mod experiment;
pub mod field;
pub mod kflow;
pub mod metrics;
pub mod model;
pub mod process;
pub mod rng;
pub mod samplers;
pub mod spectral;
pub mod training;

pub use error::{Error, Result};
pub use field::Field;
