//! The stochastic volatility state-space model.
//!
//! ```text
//! y_t     = exp((h_t + mu) / 2) * eps_t,          eps_t ~ N(0, 1)
//! h_{t+1} = mu + phi * (h_t - mu) + eta_t,        eta_t ~ N(0, sigma2)
//! h_1     ~ N(mu, sigma2 / (1 - phi^2))
//! ```

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math;

/// Static parameters `(mu, phi, sigma2)` of the volatility process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvParams {
    pub mu: f64,
    pub phi: f64,
    pub sigma2: f64,
}

impl SvParams {
    pub fn new(mu: f64, phi: f64, sigma2: f64) -> Result<Self> {
        let p = SvParams { mu, phi, sigma2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::ParameterDomain(format!("mu = {} is not finite", self.mu)));
        }
        if !(self.phi.abs() < 1.0) {
            return Err(Error::ParameterDomain(format!("|phi| = {} must be < 1", self.phi.abs())));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::ParameterDomain(format!("sigma2 = {} must be > 0", self.sigma2)));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        math::sqrt(self.sigma2)
    }

    /// Variance of the stationary distribution of `h`.
    pub fn stationary_var(&self) -> f64 {
        self.sigma2 / (1.0 - self.phi * self.phi)
    }

    /// Observation variance `exp(h + mu)` at log-volatility `h`.
    #[inline]
    pub fn obs_var(&self, h: f64) -> f64 {
        math::exp(h + self.mu)
    }

    #[inline]
    pub fn transition_mean(&self, h_prev: f64) -> f64 {
        self.mu + self.phi * (h_prev - self.mu)
    }
}

/// Latent log-volatility path `h_{1:n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPath(pub Vec<f64>);

impl LatentPath {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// A series with explicit presence flags; `r_t = 1` iff `y_t` is present.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSeries {
    values: Vec<Option<f64>>,
}

impl ObservedSeries {
    /// Builds a series, checking `n >= 2`, that the first value is observed
    /// and that every observed value is finite.
    pub fn new(values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "series needs at least 2 time points, got {}",
                values.len()
            )));
        }
        if values[0].is_none() {
            return Err(Error::InvalidInput("the first value must be observed".into()));
        }
        if let Some(t) = values.iter().position(|v| v.is_some_and(|x| !x.is_finite())) {
            return Err(Error::InvalidInput(format!("non-finite observation at index {t}")));
        }
        Ok(ObservedSeries { values })
    }

    /// A series with every value observed.
    pub fn fully_observed(y: &[f64]) -> Result<Self> {
        Self::new(y.iter().copied().map(Some).collect())
    }

    /// Masks `y` with response indicators `r` (true = observed).
    pub fn from_mask(y: &[f64], r: &[bool]) -> Result<Self> {
        if y.len() != r.len() {
            return Err(Error::InvalidInput(format!(
                "value length {} != indicator length {}",
                y.len(),
                r.len()
            )));
        }
        Self::new(y.iter().zip(r).map(|(&v, &o)| o.then_some(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, t: usize) -> Option<f64> {
        self.values[t]
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn is_observed(&self, t: usize) -> bool {
        self.values[t].is_some()
    }

    /// Response indicators `r_{1:n}`.
    pub fn response(&self) -> Vec<bool> {
        self.values.iter().map(Option::is_some).collect()
    }

    pub fn missing_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&t| !self.is_observed(t)).collect()
    }

    pub fn n_missing(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn observed_values(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// Fills the missing slots, in time order, from `imputed`.
    ///
    /// Panics if `imputed` does not have one value per missing index.
    pub fn complete(&self, imputed: &[f64]) -> Vec<f64> {
        assert_eq!(imputed.len(), self.n_missing(), "one imputation per missing index");
        let mut it = imputed.iter();
        self.values
            .iter()
            .map(|v| match v {
                Some(x) => *x,
                None => *it.next().unwrap(),
            })
            .collect()
    }

    /// Subtracts the mean of the observed values from every observed value.
    pub fn centered(&self) -> (Self, f64) {
        let obs = self.observed_values();
        let m = math::mean(&obs);
        let values = self.values.iter().map(|v| v.map(|x| x - m)).collect();
        (ObservedSeries { values }, m)
    }
}

/// Draws `(h_{1:n}, y_{1:n})` from the model.
pub fn simulate_sv<R: Rng + ?Sized>(params: &SvParams, n: usize, rng: &mut R) -> Result<(LatentPath, Vec<f64>)> {
    params.validate()?;
    if n < 2 {
        return Err(Error::InvalidInput(format!("n = {n} must be at least 2")));
    }
    let sd = params.sigma();
    let mut h = Vec::with_capacity(n);
    let z: f64 = StandardNormal.sample(rng);
    h.push(params.mu + math::sqrt(params.stationary_var()) * z);
    for t in 1..n {
        let z: f64 = StandardNormal.sample(rng);
        h.push(params.transition_mean(h[t - 1]) + sd * z);
    }
    let y = h
        .iter()
        .map(|&ht| {
            let e: f64 = StandardNormal.sample(rng);
            math::exp(0.5 * (ht + params.mu)) * e
        })
        .collect();
    Ok((LatentPath(h), y))
}

/// `log N(y_t; 0, exp(h_t + mu))`.
#[inline]
pub fn obs_logdensity(y: f64, h: f64, params: &SvParams) -> f64 {
    // Written out to avoid exp/ln round trip of the variance.
    let log_var = h + params.mu;
    -0.5 * (math::LN_2PI + log_var + y * y * math::exp(-log_var))
}

/// `log N(h_t; mu + phi (h_prev - mu), sigma2)`.
#[inline]
pub fn transition_logdensity(h: f64, h_prev: f64, params: &SvParams) -> f64 {
    math::normal_logpdf(h, params.transition_mean(h_prev), params.sigma2)
}

/// Stationary log-density of `h_1`.
#[inline]
pub fn initial_logdensity(h: f64, params: &SvParams) -> f64 {
    math::normal_logpdf(h, params.mu, params.stationary_var())
}
