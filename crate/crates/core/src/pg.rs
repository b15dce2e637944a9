//! Pólya-Gamma augmentation for the response-indicator model.
//!
//! Given latent `z_i ~ PG(1, x_i' beta)`, a Gaussian prior `beta ~ N(m, B)`
//! makes the logistic full conditional Gaussian:
//! `beta | z ~ N(V (X' kappa + B^-1 m), V)`, `V = (X' Z X + B^-1)^-1`,
//! with `kappa_i = outcome_i - 1/2`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::math::{self, PI};
use crate::mechanism::LinearMechanism;

/// Truncation point of the alternating-series sampler.
const TRUNC: f64 = 0.64;

#[inline]
fn series_coef(n: usize, x: f64) -> f64 {
    let k = (n as f64 + 0.5) * PI;
    if x > TRUNC {
        k * math::exp(-0.5 * k * k * x)
    } else if x > 0.0 {
        let half = n as f64 + 0.5;
        math::exp(-1.5 * (math::ln(0.5 * PI) + math::ln(x)) + math::ln(k) - 2.0 * half * half / x)
    } else {
        0.0
    }
}

/// Probability of proposing from the exponential tail piece.
fn exp_tail_mass(z: f64) -> f64 {
    let fz = 0.125 * PI * PI + 0.5 * z * z;
    let rt = math::sqrt(1.0 / TRUNC);
    let b = rt * (TRUNC * z - 1.0);
    let a = -rt * (TRUNC * z + 1.0);
    let x0 = math::ln(fz) + fz * TRUNC;
    let xb = x0 - z + math::normal_ln_cdf(b);
    let xa = x0 + z + math::normal_ln_cdf(a);
    let qdivp = 4.0 / PI * (math::exp(xb) + math::exp(xa));
    1.0 / (1.0 + qdivp)
}

/// Inverse Gaussian `IG(1/z, 1)` truncated to `(0, TRUNC)`.
fn truncated_inv_gauss<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    let mut x = TRUNC + 1.0;
    if 1.0 / TRUNC > z {
        let mut alpha = 0.0;
        while rng.random::<f64>() > alpha {
            let mut e1: f64 = Exp1.sample(rng);
            let mut e2: f64 = Exp1.sample(rng);
            while e1 * e1 > 2.0 * e2 / TRUNC {
                e1 = Exp1.sample(rng);
                e2 = Exp1.sample(rng);
            }
            let d = 1.0 + e1 * TRUNC;
            x = TRUNC / (d * d);
            alpha = math::exp(-0.5 * z * z * x);
        }
    } else {
        let mu = 1.0 / z;
        while x > TRUNC {
            let n: f64 = StandardNormal.sample(rng);
            let mu_y = mu * n * n;
            x = mu + 0.5 * mu * mu_y - 0.5 * mu * math::sqrt(4.0 * mu_y + mu_y * mu_y);
            if rng.random::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
        }
    }
    x
}

/// Exact draw from `PG(1, z)` by Devroye's alternating-series rejection method.
pub fn pg_draw<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    let z = 0.5 * z.abs();
    let fz = 0.125 * PI * PI + 0.5 * z * z;
    let tail_mass = exp_tail_mass(z);
    loop {
        let x = if rng.random::<f64>() < tail_mass {
            let e: f64 = Exp1.sample(rng);
            TRUNC + e / fz
        } else {
            truncated_inv_gauss(z, rng)
        };
        let mut s = series_coef(0, x);
        let y = rng.random::<f64>() * s;
        let mut n = 0;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_coef(n, x);
                if y <= s {
                    return 0.25 * x;
                }
            } else {
                s += series_coef(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
}

/// `E[PG(1, z)] = tanh(z / 2) / (2 z)`, `1/4` at zero.
pub fn pg_mean(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        0.25
    } else {
        math::tanh(0.5 * z) / (2.0 * z)
    }
}

/// Cholesky factor of a symmetric positive-definite matrix, retrying with
/// diagonal jitter `1e-10` and then `1e-8`.
pub(crate) fn spd_cholesky(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    for jitter in [1e-10, 1e-8] {
        let mut j = m.clone();
        for i in 0..j.nrows() {
            j[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(j) {
            return Ok(c);
        }
    }
    Err(Error::Conditioning(format!("{}x{} precision matrix is not positive definite", m.nrows(), m.ncols())))
}

/// One sweep of the two-block PG Gibbs sampler: `z | beta`, then `beta | z`.
pub fn pg_logistic_step<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    kappa: &[f64],
    prior_mean: &DVector<f64>,
    prior_precision: &DMatrix<f64>,
    beta: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    let eta = x * beta;
    let z: Vec<f64> = eta.iter().map(|&e| pg_draw(e, rng)).collect();
    let mut precision = prior_precision.clone();
    let mut rhs = prior_precision * prior_mean;
    for i in 0..n {
        let row = x.row(i);
        for a in 0..p {
            rhs[a] += row[a] * kappa[i];
            let za = z[i] * row[a];
            for b in 0..p {
                precision[(a, b)] += za * row[b];
            }
        }
    }
    let chol = spd_cholesky(precision)?;
    let mean = chol.solve(&rhs);
    let eps = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
    let noise = chol
        .l()
        .transpose()
        .solve_upper_triangular(&eps)
        .ok_or_else(|| Error::Conditioning("singular Cholesky factor".into()))?;
    Ok(mean + noise)
}

/// Gaussian prior `N(mean, cov)` on logistic coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PgPrior {
    pub mean: DVector<f64>,
    cov: DMatrix<f64>,
    precision: DMatrix<f64>,
}

impl PgPrior {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::InvalidInput("prior mean and covariance dimensions differ".into()));
        }
        if (&cov - cov.transpose()).abs().max() > 1e-12 * cov.abs().max().max(1.0) {
            return Err(Error::InvalidInput("prior covariance is not symmetric".into()));
        }
        let precision = Cholesky::new(cov.clone())
            .ok_or_else(|| Error::InvalidInput("prior covariance is not positive definite".into()))?
            .inverse();
        Ok(PgPrior { mean, cov, precision })
    }

    /// `N(m0, I)` on the two coefficients of the linear model.
    pub fn linear(m0: [f64; 2]) -> Self {
        Self::new(DVector::from_row_slice(&m0), DMatrix::identity(2, 2)).expect("identity covariance")
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn with_mean(&self, mean: DVector<f64>) -> Self {
        PgPrior { mean, cov: self.cov.clone(), precision: self.precision.clone() }
    }
}

/// Affine change of scale between the observation log-odds on raw `y`
/// (`beta0 + beta1 y`) and the missingness log-odds on standardized
/// `x = (y - center) / scale`, which is what the sampler fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardization {
    pub center: f64,
    pub scale: f64,
}

impl Standardization {
    /// Sample mean and standard deviation of `y`; a zero spread uses scale 1.
    pub fn of(y: &[f64]) -> Self {
        let center = math::mean(y);
        let sd = math::sample_sd(y);
        Standardization { center, scale: if sd > 0.0 && sd.is_finite() { sd } else { 1.0 } }
    }

    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        (y - self.center) / self.scale
    }

    /// Observation coefficients to missingness coefficients on `x`.
    pub fn to_fit(&self, m: &LinearMechanism) -> [f64; 2] {
        [-m.beta0 - m.beta1 * self.center, -m.beta1 * self.scale]
    }

    /// Inverse of [`Standardization::to_fit`].
    pub fn from_fit(&self, fit: [f64; 2]) -> LinearMechanism {
        let beta1 = -fit[1] / self.scale;
        LinearMechanism::new(-fit[0] - beta1 * self.center, beta1)
    }
}

/// One PG-augmented update of the linear response model.
///
/// The outcome is the missingness indicator `m_t = 1 - r_t`, regressed on
/// standardized `y_full` under `prior` (which lives on that scale). The draw
/// is returned as observation log-odds on the raw scale.
pub fn update_beta_linear<R: Rng + ?Sized>(
    y_full: &[f64],
    r: &[bool],
    prior: &PgPrior,
    current: &LinearMechanism,
    rng: &mut R,
) -> Result<LinearMechanism> {
    if y_full.len() != r.len() {
        return Err(Error::InvalidInput(format!("{} values but {} indicators", y_full.len(), r.len())));
    }
    if prior.mean.len() != 2 {
        return Err(Error::InvalidInput("linear model prior must be 2-dimensional".into()));
    }
    let st = Standardization::of(y_full);
    let x = DMatrix::from_fn(y_full.len(), 2, |i, j| if j == 0 { 1.0 } else { st.apply(y_full[i]) });
    let kappa: Vec<f64> = r.iter().map(|&obs| if obs { -0.5 } else { 0.5 }).collect();
    let beta = DVector::from_row_slice(&st.to_fit(current));
    let draw = pg_logistic_step(&x, &kappa, &prior.mean, prior.precision(), &beta, rng)?;
    Ok(st.from_fit([draw[0], draw[1]]))
}

/// Data-driven prior mean for the missingness coefficients.
///
/// The intercept is the logit of the missingness rate; the slope is the log
/// ratio of missingness odds above and below `y* = 0.5`, each odds using
/// half pseudo-counts. If either side of the split is empty, `current` is
/// returned unchanged. A missingness rate of exactly 0 or 1 also falls back
/// to half pseudo-counts so the intercept stays finite.
pub fn update_m0(r: &[bool], y_star: &[f64], current: [f64; 2]) -> [f64; 2] {
    let n = r.len();
    let n_miss = r.iter().filter(|&&o| !o).count();
    let (mut miss_u, mut obs_u, mut miss_l, mut obs_l) = (0usize, 0usize, 0usize, 0usize);
    for (&obs, &y) in r.iter().zip(y_star) {
        match (y > 0.5, obs) {
            (true, false) => miss_u += 1,
            (true, true) => obs_u += 1,
            (false, false) => miss_l += 1,
            (false, true) => obs_l += 1,
        }
    }
    if n == 0 || miss_u + obs_u == 0 || miss_l + obs_l == 0 {
        return current;
    }
    let first = if n_miss == 0 || n_miss == n {
        math::ln((n_miss as f64 + 0.5) / ((n - n_miss) as f64 + 0.5))
    } else {
        math::logit(n_miss as f64 / n as f64)
    };
    let odds_u = (miss_u as f64 + 0.5) / (obs_u as f64 + 0.5);
    let odds_l = (miss_l as f64 + 0.5) / (obs_l as f64 + 0.5);
    [first, math::ln(odds_u / odds_l)]
}

/// Hyperparameters of the spline response model: `d ~ N(0, sigma2_d I)` and
/// `lambda^{-1/2} ~ Half-t(nu_lambda, g_lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingPrior {
    pub sigma2_d: f64,
    pub nu_lambda: f64,
    pub g_lambda: f64,
}

impl SmoothingPrior {
    pub fn new(sigma2_d: f64, nu_lambda: f64, g_lambda: f64) -> Result<Self> {
        if !(sigma2_d > 0.0 && nu_lambda > 0.0 && g_lambda > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "smoothing prior ({sigma2_d}, {nu_lambda}, {g_lambda}) must be positive"
            )));
        }
        Ok(SmoothingPrior { sigma2_d, nu_lambda, g_lambda })
    }
}

impl Default for SmoothingPrior {
    fn default() -> Self {
        SmoothingPrior { sigma2_d: 100.0, nu_lambda: 3.0, g_lambda: 30.0 }
    }
}

/// Joint PG-augmented draw of `(d, c_tilde)` for the spline model.
///
/// The design is `[S | R_tilde]` and the outcome is `r_t` itself, so the
/// coefficients are observation log-odds. Prior: zero mean, covariance
/// `diag(sigma2_d, sigma2_d, 1/lambda, ..., 1/lambda)`.
#[allow(clippy::too_many_arguments)]
pub fn update_spline_coeffs<R: Rng + ?Sized>(
    s: &DMatrix<f64>,
    r_tilde: &DMatrix<f64>,
    r: &[bool],
    prior: &SmoothingPrior,
    lambda: f64,
    current_d: [f64; 2],
    current_c: &[f64],
    rng: &mut R,
) -> Result<([f64; 2], Vec<f64>)> {
    let n = r.len();
    let k = r_tilde.ncols();
    if s.nrows() != n || r_tilde.nrows() != n || s.ncols() != 2 || current_c.len() != k {
        return Err(Error::InvalidInput("spline design dimensions are inconsistent".into()));
    }
    if !(lambda > 0.0) {
        return Err(Error::ParameterDomain(format!("lambda = {lambda} must be > 0")));
    }
    let x = DMatrix::from_fn(n, k + 2, |i, j| if j < 2 { s[(i, j)] } else { r_tilde[(i, j - 2)] });
    let kappa: Vec<f64> = r.iter().map(|&obs| if obs { 0.5 } else { -0.5 }).collect();
    let prec_diag = DVector::from_fn(k + 2, |j, _| if j < 2 { 1.0 / prior.sigma2_d } else { lambda });
    let precision = DMatrix::from_diagonal(&prec_diag);
    let mut beta = DVector::zeros(k + 2);
    beta[0] = current_d[0];
    beta[1] = current_d[1];
    for j in 0..k {
        beta[j + 2] = current_c[j];
    }
    let draw = pg_logistic_step(&x, &kappa, &DVector::zeros(k + 2), &precision, &beta, rng)?;
    Ok(([draw[0], draw[1]], draw.iter().skip(2).copied().collect()))
}

/// `Inv-Gamma(shape, scale)` draw, as `scale / Gamma(shape, 1)`.
pub(crate) fn inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(shape, 1.0).expect("positive gamma shape");
    scale / g.sample(rng)
}

/// Two-block draw for the smoothing parameter through its half-t mixture:
/// `Omega ~ IG((nu+1)/2, 1/G^2 + nu lambda)`, then
/// `1/lambda ~ IG((nu+k)/2, nu/Omega + c'c/2)`. Returns `(lambda, Omega)`.
pub fn update_lambda<R: Rng + ?Sized>(c_tilde: &[f64], prior: &SmoothingPrior, lambda: f64, rng: &mut R) -> (f64, f64) {
    let nu = prior.nu_lambda;
    let k = c_tilde.len() as f64;
    let omega = inv_gamma(0.5 * (nu + 1.0), 1.0 / (prior.g_lambda * prior.g_lambda) + nu * lambda, rng);
    let cc: f64 = c_tilde.iter().map(|c| c * c).sum();
    let inv_lambda = inv_gamma(0.5 * (nu + k), nu / omega + 0.5 * cc, rng);
    (1.0 / inv_lambda, omega)
}
