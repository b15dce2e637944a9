//! Particle Gibbs sampler for the stochastic volatility model with an
//! informative missingness mechanism.
//!
//! One sweep updates, in order: `mu`; `(phi, sigma)`; the response model;
//! and finally `(Y0, h)` by one run of the imputed conditional particle
//! filter, whose output becomes the next reference trajectory.
//!
//! Two random streams are used. Stream 0 drives the volatility parameters
//! and the particle filter, stream 1 the response model. A series without
//! missing values therefore gives the same volatility draws whether or not
//! the response model is updated.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::icpf::{icpfas_run, ReferenceTrajectory};
use crate::mechanism::{design_matrices, LinearMechanism, MissingMechanism, SplineBasis, SplineMechanism};
use crate::pg::{update_beta_linear, update_lambda, update_m0, update_spline_coeffs, PgPrior, SmoothingPrior};
use crate::rng::{stream_rng, ChaCha8Rng};
use crate::samplers::{
    sample_mu, sample_phi_individual, sample_phi_sigma_joint, sample_sigma2_individual, LegacyPriors, PhiSigmaPrior,
    StepAdapter,
};
use crate::sv::{ObservedSeries, SvParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MechanismKind {
    Linear,
    Spline,
}

/// How `(phi, sigma2)` is updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    /// Joint random-walk Metropolis-Hastings on `(phi, sigma)`.
    JointRwmh,
    /// Independence MH for `phi`, then the inverse-gamma block for `sigma2`.
    Individual,
}

/// Starting point of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub params: SvParams,
    /// Starting observation log-odds of the linear model, on the raw scale.
    pub beta: LinearMechanism,
    /// Starting linear part `(d1, d2)` of the spline model on the rescaled
    /// scale; the kernel part starts at zero.
    pub d: [f64; 2],
    /// Starting smoothing parameter of the spline model.
    pub lambda: f64,
    /// Defaults to `h = mu` everywhere and missing values at 0.
    pub reference: Option<ReferenceTrajectory>,
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState {
            // Starting sigma is 0.2; written as a product so that it survives
            // a round trip through sigma exactly.
            params: SvParams { mu: 0.15, phi: 0.9, sigma2: 0.2 * 0.2 },
            beta: LinearMechanism::new(-1.0, 1.0),
            d: [0.0, -1.0],
            lambda: libm::exp(-7.0),
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsConfig {
    /// Total number of sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub n_particles: usize,
    pub seed: u64,
    pub mechanism: MechanismKind,
    pub sampler: SamplerKind,
    /// Keep every `thinning`-th post-burn-in sweep.
    pub thinning: usize,
    pub initial: InitialState,
    pub phi_sigma_prior: PhiSigmaPrior,
    pub legacy_priors: LegacyPriors,
    pub smoothing_prior: SmoothingPrior,
    /// Number of basis functions of the spline model.
    pub spline_k: usize,
    /// When false the response model stays at its initial value.
    pub update_mechanism: bool,
    /// Fresh attempts allowed for a sweep whose particle filter degenerates.
    pub max_retries: usize,
    /// Starting scale of the joint random-walk proposal.
    pub initial_step_scale: f64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            iterations: 32_500,
            burn_in: 2_500,
            n_particles: 20,
            seed: 0,
            mechanism: MechanismKind::Linear,
            sampler: SamplerKind::JointRwmh,
            thinning: 1,
            initial: InitialState::default(),
            phi_sigma_prior: PhiSigmaPrior::default(),
            legacy_priors: LegacyPriors::default(),
            smoothing_prior: SmoothingPrior::default(),
            spline_k: 15,
            update_mechanism: true,
            max_retries: 10,
            initial_step_scale: 1.0,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in > self.iterations {
            return Err(Error::InvalidInput(format!(
                "burn-in {} exceeds {} iterations",
                self.burn_in, self.iterations
            )));
        }
        if self.n_particles < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 particles, got {}", self.n_particles)));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidInput("thinning must be at least 1".into()));
        }
        if self.spline_k < 2 {
            return Err(Error::InvalidInput(format!("spline basis size {} is below 2", self.spline_k)));
        }
        if !(self.initial_step_scale > 0.0 && self.initial_step_scale.is_finite()) {
            return Err(Error::InvalidInput(format!("step scale {} must be positive", self.initial_step_scale)));
        }
        if !(self.initial.lambda > 0.0) {
            return Err(Error::ParameterDomain(format!("initial lambda {} must be > 0", self.initial.lambda)));
        }
        self.initial.params.validate()
    }

    /// Number of sweeps that will be stored.
    pub fn stored_draws(&self) -> usize {
        (self.iterations - self.burn_in) / self.thinning
    }
}

/// Stored post-burn-in states, one column per variable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PosteriorDraws {
    pub mu: Vec<f64>,
    pub phi: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// Names of the response-model columns in `mech`.
    pub mech_names: Vec<String>,
    pub mech: Vec<Vec<f64>>,
    /// `h[t][s]`: volatility at time `t` in stored draw `s`.
    pub h: Vec<Vec<f64>>,
    /// `y0[j][s]`: imputation at `missing_index[j]` in stored draw `s`.
    pub y0: Vec<Vec<f64>>,
    pub missing_index: Vec<usize>,
    /// Sweeps whose particle filter degenerated and was rerun.
    pub rejected_sweeps: usize,
    /// Acceptance rate of the `phi` (or `(phi, sigma)`) Metropolis step
    /// after burn-in.
    pub acceptance_rate: f64,
    /// Final random-walk scale of the joint sampler.
    pub step_scale: f64,
}

impl PosteriorDraws {
    fn empty(n: usize, missing_index: Vec<usize>, mech_names: Vec<String>, capacity: usize) -> Self {
        let col = || Vec::with_capacity(capacity);
        PosteriorDraws {
            mu: col(),
            phi: col(),
            sigma2: col(),
            mech: mech_names.iter().map(|_| col()).collect(),
            mech_names,
            h: (0..n).map(|_| col()).collect(),
            y0: missing_index.iter().map(|_| col()).collect(),
            missing_index,
            rejected_sweeps: 0,
            acceptance_rate: 0.0,
            step_scale: 0.0,
        }
    }

    /// Number of stored draws.
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Every scalar parameter column, named: `mu`, `phi`, `sigma2`, then the
    /// response-model columns.
    pub fn scalar_columns(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> =
            vec![("mu".into(), &self.mu[..]), ("phi".into(), &self.phi[..]), ("sigma2".into(), &self.sigma2[..])];
        for (name, col) in self.mech_names.iter().zip(&self.mech) {
            out.push((name.clone(), &col[..]));
        }
        out
    }

    /// Volatility path of stored draw `s`.
    pub fn h_draw(&self, s: usize) -> Vec<f64> {
        self.h.iter().map(|col| col[s]).collect()
    }

    fn push(&mut self, state: &SweepState) {
        self.mu.push(state.params.mu);
        self.phi.push(state.params.phi);
        self.sigma2.push(state.params.sigma2);
        for (col, v) in self.mech.iter_mut().zip(mech_values(&state.mechanism)) {
            col.push(v);
        }
        for (col, &v) in self.h.iter_mut().zip(&state.reference.h) {
            col.push(v);
        }
        for (col, &v) in self.y0.iter_mut().zip(&state.reference.y0) {
            col.push(v);
        }
    }
}

fn mech_names(kind: MechanismKind, k: usize) -> Vec<String> {
    match kind {
        MechanismKind::Linear => vec!["beta0".into(), "beta1".into()],
        MechanismKind::Spline => {
            let mut names: Vec<String> =
                ["beta0", "beta1", "d1", "d2", "lambda"].iter().map(|s| s.to_string()).collect();
            names.extend((1..=k).map(|j| format!("c{j}")));
            names
        }
    }
}

fn mech_values(m: &MissingMechanism) -> Vec<f64> {
    match m {
        MissingMechanism::Linear(l) => vec![l.beta0, l.beta1],
        MissingMechanism::Spline(s) => {
            let mut v = vec![s.beta0(), s.beta1(), s.d[0], s.d[1], s.lambda];
            v.extend_from_slice(&s.c_tilde);
            v
        }
    }
}

/// Current values of everything the sampler updates.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepState {
    pub params: SvParams,
    pub mechanism: MissingMechanism,
    pub reference: ReferenceTrajectory,
    /// Prior mean of the missingness coefficients (linear model).
    pub m0: [f64; 2],
    /// Half-t mixing scale of the individual `sigma2` sampler.
    pub q_sigma: f64,
}

/// A running chain. [`GibbsSampler::sweep`] performs one full update.
#[derive(Debug, Clone)]
pub struct GibbsSampler<'a> {
    series: &'a ObservedSeries,
    config: GibbsConfig,
    state: SweepState,
    previous_reference: Option<ReferenceTrajectory>,
    /// Observed range, frozen for the whole run.
    bounds: (f64, f64),
    rng: ChaCha8Rng,
    mech_rng: ChaCha8Rng,
    adapter: StepAdapter,
    sweeps: usize,
    retries: usize,
    accepted_after_burn_in: usize,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(series: &'a ObservedSeries, config: GibbsConfig) -> Result<Self> {
        config.validate()?;
        let observed = series.observed_values();
        let lo = observed.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = observed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let init = &config.initial;
        let mechanism = match config.mechanism {
            MechanismKind::Linear => MissingMechanism::Linear(init.beta),
            MechanismKind::Spline => {
                if !(hi > lo) {
                    return Err(Error::RankDeficient("observed values have no spread".into()));
                }
                let basis = Arc::new(SplineBasis::new(config.spline_k)?);
                MissingMechanism::Spline(SplineMechanism::linear_only(init.d, init.lambda, lo, hi, basis)?)
            }
        };
        let reference = match &init.reference {
            Some(r) => ReferenceTrajectory::new(r.h.clone(), r.y0.clone(), series)?,
            None => ReferenceTrajectory::constant(init.params.mu, 0.0, series),
        };
        let bounds = if hi > lo { (lo, hi) } else { (lo, lo + 1.0) };
        let mut adapter = StepAdapter::new(config.initial_step_scale);
        if config.burn_in == 0 {
            adapter.freeze();
        }
        let g = config.legacy_priors.g;
        Ok(GibbsSampler {
            series,
            state: SweepState { params: init.params, mechanism, reference, m0: [0.0, 1.0], q_sigma: g * g },
            previous_reference: None,
            bounds,
            rng: stream_rng(config.seed, 0),
            mech_rng: stream_rng(config.seed, 1),
            adapter,
            sweeps: 0,
            retries: 0,
            accepted_after_burn_in: 0,
            config,
        })
    }

    pub fn state(&self) -> &SweepState {
        &self.state
    }

    /// The reference the particle filter conditioned on in the last sweep.
    pub fn previous_reference(&self) -> Option<&ReferenceTrajectory> {
        self.previous_reference.as_ref()
    }

    /// Completed sweeps.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Particle-filter reruns so far.
    pub fn retries(&self) -> usize {
        self.retries
    }

    pub fn step_scale(&self) -> f64 {
        self.adapter.step_scale
    }

    /// One full update of every block.
    pub fn sweep(&mut self) -> Result<()> {
        let h = &self.state.reference.h;
        let mut params = self.state.params;
        params.mu = sample_mu(h, &params, &mut self.rng);

        let accepted = match self.config.sampler {
            SamplerKind::JointRwmh => {
                let (phi, sigma, acc) = sample_phi_sigma_joint(
                    h,
                    params.mu,
                    &self.config.phi_sigma_prior,
                    (params.phi, params.sigma()),
                    self.adapter.step_scale,
                    &mut self.rng,
                );
                params.phi = phi;
                params.sigma2 = sigma * sigma;
                self.adapter.record(acc);
                acc
            }
            SamplerKind::Individual => {
                let prior = &self.config.legacy_priors;
                let (phi, acc) = sample_phi_individual(h, params.mu, params.sigma2, prior, params.phi, &mut self.rng)?;
                params.phi = phi;
                let (sigma2, q) = sample_sigma2_individual(h, params.mu, phi, prior, self.state.q_sigma, &mut self.rng);
                params.sigma2 = sigma2;
                self.state.q_sigma = q;
                acc
            }
        };
        params.validate()?;
        self.state.params = params;

        if self.config.update_mechanism {
            self.update_mechanism()?;
        }

        let new_ref = self.run_filter()?;
        self.previous_reference = Some(core::mem::replace(&mut self.state.reference, new_ref));

        self.sweeps += 1;
        if self.sweeps > self.config.burn_in {
            self.accepted_after_burn_in += accepted as usize;
        }
        if self.sweeps == self.config.burn_in {
            self.adapter.freeze();
        }
        Ok(())
    }

    fn update_mechanism(&mut self) -> Result<()> {
        let series = self.series;
        let y_full = series.complete(&self.state.reference.y0);
        let r = series.response();
        let (lo, hi) = self.bounds;
        let y_star: Vec<f64> = y_full.iter().map(|y| (y - lo) / (hi - lo)).collect();
        let next = match &self.state.mechanism {
            MissingMechanism::Linear(current) => {
                self.state.m0 = update_m0(&r, &y_star, self.state.m0);
                let prior = PgPrior::linear(self.state.m0);
                MissingMechanism::Linear(update_beta_linear(&y_full, &r, &prior, current, &mut self.mech_rng)?)
            }
            MissingMechanism::Spline(current) => {
                let prior = &self.config.smoothing_prior;
                let (s, r_tilde) = design_matrices(&y_star, current.basis())?;
                let (d, c) =
                    update_spline_coeffs(&s, &r_tilde, &r, prior, current.lambda, current.d, &current.c_tilde, &mut self.mech_rng)?;
                let (lambda, _) = update_lambda(&c, prior, current.lambda, &mut self.mech_rng);
                MissingMechanism::Spline(current.with_coefficients(d, c, lambda)?)
            }
        };
        self.state.mechanism = next;
        Ok(())
    }

    fn run_filter(&mut self) -> Result<ReferenceTrajectory> {
        let mut attempts = 0;
        loop {
            match icpfas_run(
                &self.state.reference,
                self.series,
                &self.state.params,
                &self.state.mechanism,
                self.config.n_particles,
                &mut self.rng,
            ) {
                Ok(r) => return Ok(r),
                Err(Error::DegenerateWeights { .. }) if attempts < self.config.max_retries => {
                    attempts += 1;
                    self.retries += 1;
                }
                Err(Error::DegenerateWeights { .. }) => {
                    return Err(Error::PersistentDegeneracy { sweep: self.sweeps, retries: attempts })
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Runs the sampler for `config.iterations` sweeps and stores every
/// `thinning`-th state after burn-in.
pub fn gibbs_run(series: &ObservedSeries, config: &GibbsConfig) -> Result<PosteriorDraws> {
    let mut sampler = GibbsSampler::new(series, config.clone())?;
    let names = mech_names(config.mechanism, config.spline_k);
    let mut draws = PosteriorDraws::empty(series.len(), series.missing_indices(), names, config.stored_draws());
    for s in 0..config.iterations {
        sampler.sweep()?;
        if s >= config.burn_in && (s - config.burn_in + 1) % config.thinning == 0 {
            draws.push(&sampler.state);
        }
    }
    let kept = config.iterations - config.burn_in;
    draws.rejected_sweeps = sampler.retries;
    draws.acceptance_rate = if kept > 0 { sampler.accepted_after_burn_in as f64 / kept as f64 } else { 0.0 };
    draws.step_scale = sampler.step_scale();
    Ok(draws)
}
