//! Conditional updates for the volatility parameters `(mu, phi, sigma2)`
//! given a latent path.

use alloc::format;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math;
use crate::pg::inv_gamma;
use crate::sv::SvParams;

/// Draws `mu` from its full conditional under a flat prior, using only the
/// state equation.
pub fn sample_mu<R: Rng + ?Sized>(h: &[f64], params: &SvParams, rng: &mut R) -> f64 {
    let (mean, var) = mu_conditional(h, params.phi, params.sigma2);
    let z: f64 = StandardNormal.sample(rng);
    mean + math::sqrt(var) * z
}

/// Mean and variance of the conjugate `mu` update.
pub fn mu_conditional(h: &[f64], phi: f64, sigma2: f64) -> (f64, f64) {
    let n = h.len() as f64;
    let var = sigma2 / ((n - 1.0) * (1.0 - phi) * (1.0 - phi) + (1.0 - phi * phi));
    let innov: f64 = h.windows(2).map(|w| w[1] - phi * w[0]).sum();
    let mean = var * ((1.0 - phi * phi) / sigma2 * h[0] + (1.0 - phi) / sigma2 * innov);
    (mean, var)
}

/// `(1 - phi^2)(h_1 - mu)^2 + sum_{t>=2} [(h_t - mu) - phi (h_{t-1} - mu)]^2`.
pub fn state_sum_of_squares(h: &[f64], mu: f64, phi: f64) -> f64 {
    let d0 = h[0] - mu;
    let rest: f64 = h
        .windows(2)
        .map(|w| {
            let e = (w[1] - mu) - phi * (w[0] - mu);
            e * e
        })
        .sum();
    (1.0 - phi * phi) * d0 * d0 + rest
}

/// Bivariate normal prior on `(phi, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSigmaPrior {
    pub mu_phi: f64,
    pub mu_sigma: f64,
    pub sigma_phi: f64,
    pub sigma_q: f64,
    pub rho: f64,
}

impl PhiSigmaPrior {
    pub fn new(mu_phi: f64, mu_sigma: f64, sigma_phi: f64, sigma_q: f64, rho: f64) -> Result<Self> {
        if !(sigma_phi > 0.0 && sigma_q > 0.0 && rho.abs() < 1.0) {
            return Err(Error::ParameterDomain(format!(
                "(sigma_phi, sigma_q, rho) = ({sigma_phi}, {sigma_q}, {rho})"
            )));
        }
        Ok(PhiSigmaPrior { mu_phi, mu_sigma, sigma_phi, sigma_q, rho })
    }

    /// Lower Cholesky factor of the prior covariance.
    fn chol(&self) -> [[f64; 2]; 2] {
        [
            [self.sigma_phi, 0.0],
            [self.rho * self.sigma_q, self.sigma_q * math::sqrt(1.0 - self.rho * self.rho)],
        ]
    }

    pub fn log_density(&self, phi: f64, sigma: f64) -> f64 {
        let a = (phi - self.mu_phi) / self.sigma_phi;
        let b = (sigma - self.mu_sigma) / self.sigma_q;
        -(a * a + b * b - 2.0 * self.rho * a * b) / (2.0 * (1.0 - self.rho * self.rho))
    }
}

impl Default for PhiSigmaPrior {
    fn default() -> Self {
        PhiSigmaPrior { mu_phi: 0.875, mu_sigma: 0.45, sigma_phi: 0.075, sigma_q: 0.1, rho: -0.25 }
    }
}

/// Unnormalized log posterior of `(phi, sigma)` given `h` and `mu`;
/// `-inf` outside `|phi| < 1, sigma > 0`.
pub fn phi_sigma_log_target(h: &[f64], mu: f64, phi: f64, sigma: f64, prior: &PhiSigmaPrior) -> f64 {
    if !(phi.abs() < 1.0 && sigma > 0.0) {
        return f64::NEG_INFINITY;
    }
    let n = h.len() as f64;
    let ss = state_sum_of_squares(h, mu, phi);
    prior.log_density(phi, sigma) + 0.5 * math::ln(1.0 - phi * phi) - n * math::ln(sigma) - ss / (2.0 * sigma * sigma)
}

/// Gaussian random-walk Metropolis-Hastings step for `(phi, sigma)` with
/// proposal covariance `step_scale^2` times the prior covariance.
///
/// Returns the new `(phi, sigma)` and whether the proposal was accepted.
pub fn sample_phi_sigma_joint<R: Rng + ?Sized>(
    h: &[f64],
    mu: f64,
    prior: &PhiSigmaPrior,
    current: (f64, f64),
    step_scale: f64,
    rng: &mut R,
) -> (f64, f64, bool) {
    let l = prior.chol();
    let e0: f64 = StandardNormal.sample(rng);
    let e1: f64 = StandardNormal.sample(rng);
    let phi = current.0 + step_scale * l[0][0] * e0;
    let sigma = current.1 + step_scale * (l[1][0] * e0 + l[1][1] * e1);
    let log_u = math::ln(rng.random::<f64>());
    if !(phi.abs() < 1.0 && sigma > 0.0) {
        return (current.0, current.1, false);
    }
    let log_ratio =
        phi_sigma_log_target(h, mu, phi, sigma, prior) - phi_sigma_log_target(h, mu, current.0, current.1, prior);
    if log_u < log_ratio {
        (phi, sigma, true)
    } else {
        (current.0, current.1, false)
    }
}

/// Burn-in tuning of the random-walk scale toward a target acceptance rate.
///
/// Adjusts `log(step_scale)` after every batch; [`StepAdapter::freeze`]
/// stops adaptation so the kernel is a fixed MH kernel afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct StepAdapter {
    pub step_scale: f64,
    pub target: f64,
    batch: usize,
    accepted: usize,
    seen: usize,
    batches: usize,
    frozen: bool,
}

impl StepAdapter {
    pub fn new(step_scale: f64) -> Self {
        StepAdapter { step_scale, target: 0.3, batch: 50, accepted: 0, seen: 0, batches: 0, frozen: false }
    }

    pub fn record(&mut self, accepted: bool) {
        if self.frozen {
            return;
        }
        self.seen += 1;
        self.accepted += accepted as usize;
        if self.seen == self.batch {
            self.batches += 1;
            let rate = self.accepted as f64 / self.batch as f64;
            let gain = 1.0 / math::sqrt(self.batches as f64);
            self.step_scale *= math::exp(gain * (rate - self.target));
            self.step_scale = self.step_scale.clamp(1e-3, 1e3);
            self.seen = 0;
            self.accepted = 0;
        }
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }
}

/// Priors for the one-at-a-time samplers: `(1 + phi) / 2 ~ Beta(a, b)` and
/// `sigma ~ Half-t(v, g)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegacyPriors {
    pub a: f64,
    pub b: f64,
    pub v: f64,
    pub g: f64,
}

impl LegacyPriors {
    pub fn new(a: f64, b: f64, v: f64, g: f64) -> Result<Self> {
        if !(a > 0.5 && b > 0.5 && v > 0.0 && g > 0.0) {
            return Err(Error::ParameterDomain(format!("legacy priors ({a}, {b}, {v}, {g})")));
        }
        Ok(LegacyPriors { a, b, v, g })
    }

    pub fn phi_log_prior(&self, phi: f64) -> f64 {
        (self.a - 1.0) * math::ln(0.5 * (1.0 + phi)) + (self.b - 1.0) * math::ln(0.5 * (1.0 - phi))
    }
}

impl Default for LegacyPriors {
    fn default() -> Self {
        LegacyPriors { a: 20.0, b: 1.5, v: 3.0, g: 1.0 }
    }
}

/// `g(phi)`: log target over the Gaussian proposal for the `phi` sampler.
pub fn phi_log_excess(h: &[f64], mu: f64, sigma2: f64, prior: &LegacyPriors, phi: f64) -> f64 {
    let d0 = h[0] - mu;
    prior.phi_log_prior(phi) - d0 * d0 * (1.0 - phi * phi) / (2.0 * sigma2) + 0.5 * math::ln(1.0 - phi * phi)
}

/// Independence Metropolis-Hastings step for `phi` with proposal
/// `N(phi_hat, V_phi)` from the AR(1) regression of `h_{t+1} - mu` on `h_t - mu`.
pub fn sample_phi_individual<R: Rng + ?Sized>(
    h: &[f64],
    mu: f64,
    sigma2: f64,
    prior: &LegacyPriors,
    current_phi: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let n = h.len();
    let den: f64 = h[..n - 1].iter().map(|x| (x - mu) * (x - mu)).sum();
    if !(den > 0.0) {
        return Err(Error::InvalidInput("sum of squared state deviations is zero".into()));
    }
    let num: f64 = h.windows(2).map(|w| (w[1] - mu) * (w[0] - mu)).sum();
    let phi_hat = num / den;
    let v_phi = sigma2 / den;
    let z: f64 = StandardNormal.sample(rng);
    let proposal = phi_hat + math::sqrt(v_phi) * z;
    let log_u = math::ln(rng.random::<f64>());
    if !(proposal.abs() < 1.0) {
        return Ok((current_phi, false));
    }
    let log_ratio = phi_log_excess(h, mu, sigma2, prior, proposal) - phi_log_excess(h, mu, sigma2, prior, current_phi);
    Ok(if log_u < log_ratio { (proposal, true) } else { (current_phi, false) })
}

/// Two-block inverse-gamma update of `sigma2` and its half-t mixing scale.
/// Returns `(sigma2, q_sigma)`.
pub fn sample_sigma2_individual<R: Rng + ?Sized>(
    h: &[f64],
    mu: f64,
    phi: f64,
    prior: &LegacyPriors,
    q_sigma: f64,
    rng: &mut R,
) -> (f64, f64) {
    let n = h.len() as f64;
    let a = prior.v / q_sigma + 0.5 * state_sum_of_squares(h, mu, phi);
    let sigma2 = inv_gamma(0.5 * (prior.v + n), a, rng);
    let q = inv_gamma(0.5 * (prior.v + 1.0), 1.0 / (prior.g * prior.g) + prior.v / sigma2, rng);
    (sigma2, q)
}
