//! Response-indicator models and the missing-value distribution they imply.
//!
//! The log-odds of observing `y_t` is `g(y_t)`. Tukey's representation turns
//! the observed-data density `N(0, s2)` (with `s2 = exp(h_t + mu)`) into the
//! density of a missing value:
//!
//! ```text
//! f(y | r = 0) = p / (1 - p) * exp(-g(y)) * N(y; 0, s2)
//! ```
//!
//! For `g(y) = b0 + b1 y` this is exactly `N(-b1 s2, s2)` with
//! `p / (1 - p) = exp(b0 - b1^2 s2 / 2)`. For the spline model
//! `g = b0 + b1 y + u(y)` the density is `exp(-u(y)) N(-b1 s2, s2)` up to a
//! constant, so draws from the Gaussian part carry weight `exp(-u(y))`.

mod spline;

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math;
use crate::sv::SvParams;

pub use spline::{build_spline_basis, design_matrices, kernel_eval, SplineBasis, EIGEN_TRUNCATION};

/// Anything that yields the log-odds of observing a value.
pub trait ResponseLogit {
    fn logit(&self, y: f64) -> f64;
}

/// `g(y) = beta0 + beta1 * y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMechanism {
    pub beta0: f64,
    pub beta1: f64,
}

impl LinearMechanism {
    pub fn new(beta0: f64, beta1: f64) -> Self {
        LinearMechanism { beta0, beta1 }
    }
}

impl ResponseLogit for LinearMechanism {
    fn logit(&self, y: f64) -> f64 {
        self.beta0 + self.beta1 * y
    }
}

/// `g(y) = beta0 + beta1 * y + beta2 * y^2`, used as a data-generating truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticLogit {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl ResponseLogit for QuadraticLogit {
    fn logit(&self, y: f64) -> f64 {
        self.beta0 + self.beta1 * y + self.beta2 * y * y
    }
}

/// Low-rank cubic smoothing spline on the rescaled value `y* in [0, 1]`:
/// `g(y) = d1 + d2 y* + u(y*)`, `u(y*) = basis_row(y*) . c_tilde`.
///
/// The rescaling bounds are fixed for the lifetime of the value. The linear
/// part extrapolates outside them; the kernel part is clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineMechanism {
    pub d: [f64; 2],
    pub c_tilde: Vec<f64>,
    pub lambda: f64,
    y_min: f64,
    y_max: f64,
    basis: Arc<SplineBasis>,
}

impl SplineMechanism {
    pub fn new(d: [f64; 2], c_tilde: Vec<f64>, lambda: f64, y_min: f64, y_max: f64, basis: Arc<SplineBasis>) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::ParameterDomain(format!("lambda = {lambda} must be > 0")));
        }
        if !(y_max > y_min) {
            return Err(Error::InvalidInput(format!("rescaling bounds [{y_min}, {y_max}] are empty")));
        }
        if c_tilde.len() != basis.k() {
            return Err(Error::InvalidInput(format!(
                "{} spline coefficients for a basis of size {}",
                c_tilde.len(),
                basis.k()
            )));
        }
        Ok(SplineMechanism { d, c_tilde, lambda, y_min, y_max, basis })
    }

    /// Zero nonlinear part with the given linear coefficients.
    pub fn linear_only(d: [f64; 2], lambda: f64, y_min: f64, y_max: f64, basis: Arc<SplineBasis>) -> Result<Self> {
        let k = basis.k();
        Self::new(d, alloc::vec![0.0; k], lambda, y_min, y_max, basis)
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.y_min, self.y_max)
    }

    pub fn basis(&self) -> &Arc<SplineBasis> {
        &self.basis
    }

    pub fn k(&self) -> usize {
        self.basis.k()
    }

    #[inline]
    pub fn rescale(&self, y: f64) -> f64 {
        (y - self.y_min) / (self.y_max - self.y_min)
    }

    /// Slope on the original scale: `d2 / (y_max - y_min)`.
    pub fn beta1(&self) -> f64 {
        self.d[1] / (self.y_max - self.y_min)
    }

    /// Intercept on the original scale: `d1 - beta1 * y_min`.
    pub fn beta0(&self) -> f64 {
        self.d[0] - self.beta1() * self.y_min
    }

    /// Nonlinear part `u` at an original-scale value.
    pub fn u(&self, y: f64) -> f64 {
        self.basis.eval(self.rescale(y), &self.c_tilde)
    }

    /// New coefficients on the same bounds and basis.
    pub fn with_coefficients(&self, d: [f64; 2], c_tilde: Vec<f64>, lambda: f64) -> Result<Self> {
        Self::new(d, c_tilde, lambda, self.y_min, self.y_max, self.basis.clone())
    }
}

impl ResponseLogit for SplineMechanism {
    fn logit(&self, y: f64) -> f64 {
        self.d[0] + self.d[1] * self.rescale(y) + self.u(y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MissingMechanism {
    Linear(LinearMechanism),
    Spline(SplineMechanism),
}

impl MissingMechanism {
    /// Linear coefficient on the original scale (drives the implied mean).
    pub fn beta1(&self) -> f64 {
        match self {
            MissingMechanism::Linear(m) => m.beta1,
            MissingMechanism::Spline(m) => m.beta1(),
        }
    }

    /// Log importance weight of a missing-value draw: `-u(y)`, or 0 when linear.
    #[inline]
    pub fn missing_log_weight(&self, y: f64) -> f64 {
        match self {
            MissingMechanism::Linear(_) => 0.0,
            MissingMechanism::Spline(m) => -m.u(y),
        }
    }
}

impl ResponseLogit for MissingMechanism {
    fn logit(&self, y: f64) -> f64 {
        match self {
            MissingMechanism::Linear(m) => m.logit(y),
            MissingMechanism::Spline(m) => m.logit(y),
        }
    }
}

/// Log-odds that `y_t` is observed.
pub fn eval_logit(mech: &MissingMechanism, y: f64) -> f64 {
    mech.logit(y)
}

/// `p / (1 - p) = exp(beta0 - beta1^2 s2 / 2)`, the odds of observing a value
/// at log-volatility `h`.
pub fn observed_odds(params: &SvParams, h: f64, mech: &LinearMechanism) -> f64 {
    let s2 = params.obs_var(h);
    math::exp(mech.beta0 - 0.5 * mech.beta1 * mech.beta1 * s2)
}

/// Log-density of a missing value at `y`.
///
/// Exact for the linear model; for the spline model it is
/// `-u(y) + log N(y; -beta1 s2, s2)` and not normalized.
pub fn implied_missing_logdensity(mech: &MissingMechanism, params: &SvParams, h: f64, y: f64) -> f64 {
    let s2 = params.obs_var(h);
    let gauss = math::normal_logpdf(y, -mech.beta1() * s2, s2);
    gauss + mech.missing_log_weight(y)
}

/// Draws a missing value from `N(-beta1 s2, s2)` and returns it with its log
/// importance weight (0 for the linear model, `-u(y)` for the spline).
pub fn implied_missing_draw<R: Rng + ?Sized>(mech: &MissingMechanism, params: &SvParams, h: f64, rng: &mut R) -> (f64, f64) {
    let s2 = params.obs_var(h);
    let z: f64 = StandardNormal.sample(rng);
    let y = -mech.beta1() * s2 + math::sqrt(s2) * z;
    (y, mech.missing_log_weight(y))
}

/// Draws response indicators `r_t ~ Bernoulli(logistic(g(y_t)))`; `r_1` is
/// always `true`.
pub fn apply_missingness<M: ResponseLogit + ?Sized, R: Rng + ?Sized>(y: &[f64], mech: &M, rng: &mut R) -> Vec<bool> {
    y.iter()
        .enumerate()
        .map(|(t, &yt)| {
            let u: f64 = rng.random();
            t == 0 || u < math::logistic(mech.logit(yt))
        })
        .collect()
}
