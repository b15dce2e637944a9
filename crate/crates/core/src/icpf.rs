//! Imputed conditional particle filter with ancestor sampling (ICPF-AS).
//!
//! Samples `(Y0, h_{1:n})` given the observed values, the parameters and a
//! reference trajectory. The last particle (index `N - 1`) is pinned to the
//! reference at every time step; ancestor sampling relinks its history.
//!
//! At an observed time the particles move with the state equation and are
//! weighted by `N(y_t; 0, exp(h_t + mu))`. At a missing time each fresh
//! particle also draws `y_t` from the implied missing-value distribution;
//! the weight is 1 (linear model) or `exp(-u(y_t))` (spline model).
//!
//! Random draws are consumed in a fixed order, which the tests rely on:
//!
//! * initialization: one standard normal per fresh particle;
//! * each later step: `N - 1` uniforms for multinomial resampling, one uniform
//!   for the reference ancestor, then per fresh particle one standard normal
//!   for `h_t` followed (at missing times) by one for `y_t`;
//! * final selection: one uniform.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math;
use crate::mechanism::{implied_missing_draw, MissingMechanism};
use crate::sv::{obs_logdensity, transition_logdensity, ObservedSeries, SvParams};

/// The retained trajectory: a full volatility path plus the imputed values
/// at the series' missing indices, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub h: Vec<f64>,
    pub y0: Vec<f64>,
}

impl ReferenceTrajectory {
    pub fn new(h: Vec<f64>, y0: Vec<f64>, series: &ObservedSeries) -> Result<Self> {
        let r = ReferenceTrajectory { h, y0 };
        r.check(series)?;
        Ok(r)
    }

    /// Constant path `h = level` with every missing value set to `fill`.
    pub fn constant(level: f64, fill: f64, series: &ObservedSeries) -> Self {
        ReferenceTrajectory { h: vec![level; series.len()], y0: vec![fill; series.n_missing()] }
    }

    fn check(&self, series: &ObservedSeries) -> Result<()> {
        if self.h.len() != series.len() || self.y0.len() != series.n_missing() {
            return Err(Error::InvalidInput(alloc::format!(
                "reference has {} states and {} imputations; series needs {} and {}",
                self.h.len(),
                self.y0.len(),
                series.len(),
                series.n_missing()
            )));
        }
        if self.h.iter().chain(&self.y0).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("reference trajectory has non-finite entries".into()));
        }
        Ok(())
    }
}

/// `N` weighted trajectories, stored as full paths in row-major buffers.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    n_particles: usize,
    n_times: usize,
    n_missing: usize,
    /// Number of time steps processed so far.
    len: usize,
    /// Number of missing indices among the processed steps.
    missing_len: usize,
    /// Slot of each time index among the missing ones.
    missing_slot: Vec<Option<usize>>,
    h: Vec<f64>,
    y0: Vec<f64>,
    scratch_h: Vec<f64>,
    scratch_y0: Vec<f64>,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    ancestors: Vec<usize>,
}

impl ParticleSystem {
    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    /// Number of time steps processed.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Ancestor indices chosen at the last step (the reference's is last).
    pub fn ancestors(&self) -> &[usize] {
        &self.ancestors
    }

    /// Volatility path of particle `i` up to the current time.
    pub fn h_path(&self, i: usize) -> &[f64] {
        &self.h[i * self.n_times..i * self.n_times + self.len]
    }

    /// Imputations of particle `i` at the missing indices seen so far.
    pub fn y0_path(&self, i: usize) -> &[f64] {
        &self.y0[i * self.n_missing..i * self.n_missing + self.missing_len]
    }

    fn set_weights(&mut self, t: usize) -> Result<()> {
        self.weights = math::normalize_log_weights(&self.log_weights).ok_or(Error::DegenerateWeights { t })?;
        Ok(())
    }
}

fn check_inputs(series: &ObservedSeries, reference: &ReferenceTrajectory, params: &SvParams, n_particles: usize) -> Result<()> {
    if n_particles < 2 {
        return Err(Error::InvalidInput(alloc::format!(
            "conditional particle filter needs at least 2 particles, got {n_particles}"
        )));
    }
    params.validate()?;
    reference.check(series)
}

/// Index drawn from normalized `weights` by inverse CDF at `u`.
#[inline]
fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // Rounding left the total slightly below u; fall back to the last
    // particle with positive weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Time `t = 1`: fresh particles from the stationary law, the last one set
/// to the reference, weights from the observation density.
pub fn icpfas_init<R: Rng + ?Sized>(
    reference: &ReferenceTrajectory,
    series: &ObservedSeries,
    params: &SvParams,
    n_particles: usize,
    rng: &mut R,
) -> Result<ParticleSystem> {
    check_inputs(series, reference, params, n_particles)?;
    let n = series.len();
    let n_missing = series.n_missing();
    let mut missing_slot = vec![None; n];
    for (slot, t) in series.missing_indices().into_iter().enumerate() {
        missing_slot[t] = Some(slot);
    }
    let y1 = series.value(0).expect("first value is observed");
    let mut h = vec![0.0; n_particles * n];
    let sd = math::sqrt(params.stationary_var());
    let mut log_weights = vec![0.0; n_particles];
    for i in 0..n_particles {
        let h1 = if i + 1 < n_particles {
            let z: f64 = StandardNormal.sample(rng);
            params.mu + sd * z
        } else {
            reference.h[0]
        };
        h[i * n] = h1;
        log_weights[i] = obs_logdensity(y1, h1, params);
    }
    let mut sys = ParticleSystem {
        n_particles,
        n_times: n,
        n_missing,
        len: 1,
        missing_len: 0,
        missing_slot,
        scratch_h: vec![0.0; n_particles * n],
        scratch_y0: vec![0.0; n_particles * n_missing],
        y0: vec![0.0; n_particles * n_missing],
        h,
        log_weights,
        weights: Vec::new(),
        ancestors: vec![0; n_particles],
    };
    sys.set_weights(0)?;
    Ok(sys)
}

/// Reference-ancestor probabilities `W_{t-1}^i f(h'_t | h_{t-1}^i)`, normalized.
pub fn ancestor_probabilities(sys: &ParticleSystem, h_ref_t: f64, params: &SvParams) -> Option<Vec<f64>> {
    let t = sys.len;
    let logp: Vec<f64> = (0..sys.n_particles)
        .map(|i| {
            let prev = sys.h[i * sys.n_times + t - 1];
            math::ln(sys.weights[i]) + transition_logdensity(h_ref_t, prev, params)
        })
        .collect();
    math::normalize_log_weights(&logp)
}

/// Advances the system from time `t - 1` to time `t` (0-based `t >= 1`,
/// which must equal the number of processed steps).
pub fn icpfas_step<R: Rng + ?Sized>(
    sys: &mut ParticleSystem,
    t: usize,
    series: &ObservedSeries,
    params: &SvParams,
    mech: &MissingMechanism,
    reference: &ReferenceTrajectory,
    rng: &mut R,
) -> Result<()> {
    if t == 0 || t != sys.len || t >= sys.n_times {
        return Err(Error::InvalidInput(alloc::format!("step {t} does not follow {} processed steps", sys.len)));
    }
    let np = sys.n_particles;
    let n = sys.n_times;
    let nm = sys.n_missing;
    let last = np - 1;

    for i in 0..last {
        let u: f64 = rng.random();
        sys.ancestors[i] = pick(&sys.weights, u);
    }
    let ref_h = reference.h[t];
    let anc_probs = ancestor_probabilities(sys, ref_h, params).ok_or(Error::DegenerateWeights { t })?;
    let u: f64 = rng.random();
    sys.ancestors[last] = pick(&anc_probs, u);

    let prefix_missing = sys.missing_len;
    for i in 0..np {
        let a = sys.ancestors[i];
        sys.scratch_h[i * n..i * n + t].copy_from_slice(&sys.h[a * n..a * n + t]);
        sys.scratch_y0[i * nm..i * nm + prefix_missing].copy_from_slice(&sys.y0[a * nm..a * nm + prefix_missing]);
    }

    let sd = params.sigma();
    match (series.value(t), sys.missing_slot[t]) {
        (Some(y), _) => {
            for i in 0..np {
                let ht = if i < last {
                    let prev = sys.scratch_h[i * n + t - 1];
                    let z: f64 = StandardNormal.sample(rng);
                    params.transition_mean(prev) + sd * z
                } else {
                    ref_h
                };
                sys.scratch_h[i * n + t] = ht;
                sys.log_weights[i] = obs_logdensity(y, ht, params);
            }
        }
        (None, Some(slot)) => {
            for i in 0..np {
                let (ht, yt, lw) = if i < last {
                    let prev = sys.scratch_h[i * n + t - 1];
                    let z: f64 = StandardNormal.sample(rng);
                    let ht = params.transition_mean(prev) + sd * z;
                    let (yt, lw) = implied_missing_draw(mech, params, ht, rng);
                    (ht, yt, lw)
                } else {
                    let yt = reference.y0[slot];
                    (ref_h, yt, mech.missing_log_weight(yt))
                };
                sys.scratch_h[i * n + t] = ht;
                sys.scratch_y0[i * nm + slot] = yt;
                sys.log_weights[i] = lw;
            }
            sys.missing_len += 1;
        }
        (None, None) => unreachable!("missing index without a slot"),
    }
    core::mem::swap(&mut sys.h, &mut sys.scratch_h);
    core::mem::swap(&mut sys.y0, &mut sys.scratch_y0);
    sys.len += 1;
    sys.set_weights(t)
}

/// Runs the filter over the whole series and draws one trajectory from the
/// final weights; this is the next reference for the outer sampler.
pub fn icpfas_run<R: Rng + ?Sized>(
    reference: &ReferenceTrajectory,
    series: &ObservedSeries,
    params: &SvParams,
    mech: &MissingMechanism,
    n_particles: usize,
    rng: &mut R,
) -> Result<ReferenceTrajectory> {
    let mut sys = icpfas_init(reference, series, params, n_particles, rng)?;
    for t in 1..series.len() {
        icpfas_step(&mut sys, t, series, params, mech, reference, rng)?;
    }
    let u: f64 = rng.random();
    let k = pick(&sys.weights, u);
    Ok(ReferenceTrajectory { h: sys.h_path(k).to_vec(), y0: sys.y0_path(k).to_vec() })
}
