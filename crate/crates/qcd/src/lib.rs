//! Robust quickest change detection in non-stationary processes.
//!
//! A sequential decision-maker watches a stream that starts i.i.d. with a known
//! pre-change density `f` and, at some unknown change point `nu`, switches to a
//! sequence of post-change densities `g_{n,nu}` that may vary with both the time
//! index and the change point. When the post-change densities are only known to
//! lie in parametric uncertainty classes, detectors designed against the least
//! favorable law (LFL) of those classes are robust: their worst-case delay over
//! the class is attained at the LFL itself.
//!
//! The crate provides:
//!
//! - [`distributions`]: Gaussian/Poisson densities, log-likelihood ratios and
//!   their closed-form laws, KL divergence, and the MLR/stochastic ordering
//!   oracles used to certify least favorable laws.
//! - [`model`]: change-point process descriptions: post-change laws (i.i.d.,
//!   periodic, MLR-ordered, tabulated), uncertainty classes with bound
//!   schedules, LFL construction and verification, trajectory generation.
//! - [`detectors`]: streaming CUSUM and Shiryaev statistics, classical and
//!   generalized (bivariate log-likelihood-ratio) variants, with constant,
//!   periodic, or explicit threshold schedules.
//! - [`montecarlo`]: seeded, parallel Monte Carlo estimation of mean time to
//!   false alarm, detection delays, Bayesian false-alarm probability, threshold
//!   calibration, and operating-curve generation.
//! - [`ingest`]: CSV time-series loading and the pad/noise/detect experiment
//!   pipeline for signal batches, plus synthetic stand-in generators.
//! - [`config`] / [`cli`]: declarative TOML experiment configs and the `qcd`
//!   command-line front end.
//!
//! Every randomized routine takes an explicit seed or generator; per-trial
//! randomness is split from a master seed by stream index, so results are
//! bit-identical regardless of parallelism.
//!
//! See the crate `examples/` directory for one runnable example per major
//! capability.

pub mod cli;
pub mod config;
pub mod detectors;
pub mod distributions;
pub mod error;
pub mod ingest;
pub mod model;
pub mod montecarlo;

pub use error::{Error, Result};
