//! Bayesian inference for the discrete-time stochastic volatility model when
//! observations are missing not at random.
//!
//! Missing values are imputed from the distribution implied by Tukey's
//! representation of the selection model and sampled jointly with the latent
//! log-volatility by an imputed conditional particle filter with ancestor
//! sampling. The surrounding particle Gibbs sampler updates the volatility
//! parameters, the response-indicator model (linear logistic or low-rank
//! cubic smoothing spline, both via Pólya-Gamma augmentation), and the
//! `(missing values, volatility path)` block in turn.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! the parallel study runner live in the `mnarsv` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod gibbs;
pub mod icpf;
pub mod math;
pub mod mechanism;
pub mod pg;
pub mod rng;
pub mod samplers;
pub mod study;
pub mod summary;
pub mod sv;

pub use error::{Error, Result};
pub use gibbs::{gibbs_run, GibbsConfig, InitialState, MechanismKind, PosteriorDraws, SamplerKind};
pub use icpf::{icpfas_init, icpfas_run, icpfas_step, ParticleSystem, ReferenceTrajectory};
pub use mechanism::{LinearMechanism, MissingMechanism, SplineBasis, SplineMechanism};
pub use summary::{posterior_summary, Interval, PosteriorSummary};
pub use sv::{simulate_sv, LatentPath, ObservedSeries, SvParams};
