//! Independent reference computations for the samplers.
//!
//! Each check runs a sampler, computes the same law by dense-grid
//! quadrature (or by an independently coded algorithm), and reports a
//! statistic against a threshold. The checks are shared by this crate's
//! integration tests and by the workspace acceptance suite.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::fmt;

use mnarsv_core::icpf::{icpfas_init, icpfas_run, icpfas_step, ReferenceTrajectory};
use mnarsv_core::mechanism::{observed_odds, implied_missing_logdensity, LinearMechanism, MissingMechanism};
use mnarsv_core::pg::{pg_draw, update_beta_linear, update_lambda, PgPrior, SmoothingPrior, Standardization};
use mnarsv_core::rng::stream_rng;
use mnarsv_core::samplers::{
    sample_mu, sample_phi_individual, sample_phi_sigma_joint, sample_sigma2_individual, LegacyPriors, PhiSigmaPrior,
    StepAdapter,
};
use mnarsv_core::sv::{simulate_sv, ObservedSeries, SvParams};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Outcome of one oracle comparison: pass iff `value` is on the right side
/// of `threshold`.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value < threshold, detail: String::new() }
    }

    pub fn above(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value > threshold, detail: String::new() }
    }

    pub fn with_detail(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: value {:.4e} threshold {:.4e}{}{}",
            if self.pass { "ok  " } else { "FAIL" },
            self.name,
            self.value,
            self.threshold,
            if self.detail.is_empty() { "" } else { " | " },
            self.detail
        )
    }
}

// ---------------------------------------------------------------- helpers

/// Tabulated CDF from density values on an increasing grid (trapezoid rule).
pub struct GridCdf {
    x: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridCdf {
    pub fn from_density(x: Vec<f64>, dens: &[f64]) -> Self {
        let mut cdf = vec![0.0; x.len()];
        for i in 1..x.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * (x[i] - x[i - 1]);
        }
        let total = *cdf.last().unwrap();
        cdf.iter_mut().for_each(|c| *c /= total);
        GridCdf { x, cdf }
    }

    /// From log-density values, shifted by their maximum before exponentiating.
    pub fn from_log_density(x: Vec<f64>, logd: &[f64]) -> Self {
        let m = logd.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let d: Vec<f64> = logd.iter().map(|l| (l - m).exp()).collect();
        Self::from_density(x, &d)
    }

    pub fn eval(&self, v: f64) -> f64 {
        if v <= self.x[0] {
            return 0.0;
        }
        if v >= *self.x.last().unwrap() {
            return 1.0;
        }
        let j = self.x.partition_point(|&g| g <= v);
        let (x0, x1) = (self.x[j - 1], self.x[j]);
        let w = (v - x0) / (x1 - x0);
        self.cdf[j - 1] + w * (self.cdf[j] - self.cdf[j - 1])
    }

    pub fn mean(&self) -> f64 {
        (1..self.x.len()).map(|i| 0.5 * (self.x[i] + self.x[i - 1]) * (self.cdf[i] - self.cdf[i - 1])).sum()
    }
}

pub fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
}

/// Kolmogorov-Smirnov distance between a sample and a CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic two-sided p-value of a one-sample KS distance `d` at size `n`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let p: f64 = (1..=200)
        .map(|k| {
            let k = k as f64;
            2.0 * if k as i64 % 2 == 1 { 1.0 } else { -1.0 } * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    p.clamp(0.0, 1.0)
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (x - mean) * (x - mean) / var)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// State-equation log-likelihood of `h` written out directly.
fn state_loglik(h: &[f64], mu: f64, phi: f64, sigma2: f64) -> f64 {
    let mut l = log_normal(h[0], mu, sigma2 / (1.0 - phi * phi));
    for t in 1..h.len() {
        l += log_normal(h[t], mu + phi * (h[t - 1] - mu), sigma2);
    }
    l
}

/// A fixed volatility path of length 50 from the simulation truth.
pub fn fixed_path() -> Vec<f64> {
    let p = SvParams::new(0.1, 0.8, 0.25).unwrap();
    simulate_sv(&p, 50, &mut stream_rng(20_240, 9)).unwrap().0 .0
}

// ------------------------------------------------------- Tukey closed form

/// Quadrature normalization of `exp(-g(y)) N(y; 0, s2)` against the closed
/// form `N(-beta1 s2, s2)`, and of its constant against `observed_odds`,
/// over `configs` random parameter draws. Returns (max pointwise error,
/// max relative odds error).
pub fn tukey_closed_form(configs: usize, seed: u64) -> (Check, Check) {
    let mut rng = stream_rng(seed, 0);
    let (mut worst_point, mut worst_odds) = (0.0f64, 0.0f64);
    for _ in 0..configs {
        let beta0 = rng.random_range(-4.0..4.0);
        let beta1 = rng.random_range(-2.0..2.0);
        let h = rng.random_range(-2.0..2.0);
        let mu = rng.random_range(-1.0..1.0);
        let p = SvParams::new(mu, 0.5, 0.3).unwrap();
        let s2 = (h + mu).exp();
        let sd = s2.sqrt();
        let centre = -beta1 * s2;
        // Composite Simpson over +-14 sd of the tilted Gaussian.
        let m = 40_000;
        let (lo, hi) = (centre - 14.0 * sd, centre + 14.0 * sd);
        let step = (hi - lo) / m as f64;
        let f = |y: f64| (-(beta0 + beta1 * y) + log_normal(y, 0.0, s2)).exp();
        let mut z = f(lo) + f(hi);
        for i in 1..m {
            z += f(lo + i as f64 * step) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        z *= step / 3.0;
        let odds = observed_odds(&p, h, &LinearMechanism::new(beta0, beta1));
        worst_odds = worst_odds.max((odds * z - 1.0).abs());
        let mech = MissingMechanism::Linear(LinearMechanism::new(beta0, beta1));
        for i in 0..=400 {
            let y = centre + sd * (-8.0 + 16.0 * i as f64 / 400.0);
            let quad = f(y) / z;
            let closed = implied_missing_logdensity(&mech, &p, h, y).exp();
            worst_point = worst_point.max((quad - closed).abs());
        }
    }
    (
        Check::below("tukey pointwise |quadrature - closed form|", worst_point, 1e-8),
        Check::below("tukey odds relative error", worst_odds, 1e-8),
    )
}

// ------------------------------------------------------ parameter samplers

/// `mu` draws against the quadrature of the state likelihood in `mu`.
pub fn mu_oracle(draws: usize) -> Check {
    let h = fixed_path();
    let p = SvParams::new(0.0, 0.8, 0.25).unwrap();
    let mut rng = stream_rng(31, 0);
    let xs: Vec<f64> = (0..draws).map(|_| sample_mu(&h, &p, &mut rng)).collect();
    let grid = linspace(-3.0, 3.0, 60_001);
    let logd: Vec<f64> = grid.iter().map(|&m| state_loglik(&h, m, p.phi, p.sigma2)).collect();
    let cdf = GridCdf::from_log_density(grid, &logd);
    Check::below("mu sampler KS distance", ks_distance(&xs, |v| cdf.eval(v)), 0.02)
}

/// Individual `phi` chain against its 1-D full conditional.
pub fn phi_individual_oracle(sweeps: usize) -> Check {
    let h = fixed_path();
    let (mu, sigma2) = (0.1, 0.25);
    let prior = LegacyPriors::default();
    let mut rng = stream_rng(32, 0);
    let mut phi = 0.5;
    let mut xs = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        phi = sample_phi_individual(&h, mu, sigma2, &prior, phi, &mut rng).unwrap().0;
        xs.push(phi);
    }
    let grid = linspace(-0.99999, 0.99999, 200_001);
    let logd: Vec<f64> = grid
        .iter()
        .map(|&f| {
            let beta = (prior.a - 1.0) * ((1.0 + f) / 2.0).ln() + (prior.b - 1.0) * ((1.0 - f) / 2.0).ln();
            beta + state_loglik(&h, mu, f, sigma2)
        })
        .collect();
    let cdf = GridCdf::from_log_density(grid, &logd);
    Check::below("individual phi KS distance", ks_distance(&xs, |v| cdf.eval(v)), 0.02)
}

/// Individual `sigma2` chain: marginal of `sigma` against half-t prior times
/// state likelihood.
pub fn sigma_individual_oracle(sweeps: usize) -> Check {
    let h = fixed_path();
    let (mu, phi) = (0.1, 0.8);
    let prior = LegacyPriors::default();
    let mut rng = stream_rng(33, 0);
    let mut q = 1.0;
    let mut xs = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        let (s2, nq) = sample_sigma2_individual(&h, mu, phi, &prior, q, &mut rng);
        q = nq;
        xs.push(s2.sqrt());
    }
    let (v, g) = (prior.v, prior.g);
    let grid = linspace(1e-3, 3.0, 100_001);
    let logd: Vec<f64> = grid
        .iter()
        .map(|&s| -0.5 * (v + 1.0) * (s * s / (v * g * g)).ln_1p() + state_loglik(&h, mu, phi, s * s))
        .collect();
    let cdf = GridCdf::from_log_density(grid, &logd);
    Check::below("individual sigma KS distance", ks_distance(&xs, |v| cdf.eval(v)), 0.02)
}

/// Total variation between a 2-D histogram of draws and grid masses over
/// a box split into `bins x bins` cells. Mass outside the box counts fully.
fn tv_2d(
    draws: &[(f64, f64)],
    box_: ((f64, f64), (f64, f64)),
    bins: usize,
    sub: usize,
    logd: impl Fn(f64, f64) -> f64,
) -> f64 {
    let ((x0, x1), (y0, y1)) = box_;
    let m = bins * sub;
    let (dx, dy) = ((x1 - x0) / m as f64, (y1 - y0) / m as f64);
    let mut cells = vec![f64::NEG_INFINITY; m * m];
    for i in 0..m {
        for j in 0..m {
            cells[i * m + j] = logd(x0 + (i as f64 + 0.5) * dx, y0 + (j as f64 + 0.5) * dy);
        }
    }
    let top = cells.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut mass = vec![0.0; bins * bins];
    for i in 0..m {
        for j in 0..m {
            mass[(i / sub) * bins + j / sub] += (cells[i * m + j] - top).exp();
        }
    }
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|v| *v /= total);
    let mut hist = vec![0.0; bins * bins];
    let mut outside = 0.0;
    let w = 1.0 / draws.len() as f64;
    for &(x, y) in draws {
        let bi = ((x - x0) / (x1 - x0) * bins as f64).floor();
        let bj = ((y - y0) / (y1 - y0) * bins as f64).floor();
        if bi < 0.0 || bj < 0.0 || bi >= bins as f64 || bj >= bins as f64 {
            outside += w;
        } else {
            hist[bi as usize * bins + bj as usize] += w;
        }
    }
    0.5 * (hist.iter().zip(&mass).map(|(a, b)| (a - b).abs()).sum::<f64>() + outside)
}

/// Moments of a 2-D log-density on a coarse grid, used to place the box.
fn box_from_moments(logd: &impl Fn(f64, f64) -> f64, xr: (f64, f64), yr: (f64, f64), width: f64) -> ((f64, f64), (f64, f64)) {
    let m = 400;
    let xs = linspace(xr.0, xr.1, m);
    let ys = linspace(yr.0, yr.1, m);
    let mut vals = Vec::with_capacity(m * m);
    for &x in &xs {
        for &y in &ys {
            vals.push((x, y, logd(x, y)));
        }
    }
    let top = vals.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, l) in &vals {
        let w = (l - top).exp();
        z += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        syy += w * y * y;
    }
    let (mx, my) = (sx / z, sy / z);
    let (sdx, sdy) = ((sxx / z - mx * mx).sqrt(), (syy / z - my * my).sqrt());
    (
        ((mx - width * sdx).max(xr.0), (mx + width * sdx).min(xr.1)),
        ((my - width * sdy).max(yr.0), (my + width * sdy).min(yr.1)),
    )
}

/// Joint `(phi, sigma)` random-walk chain against the bivariate-normal prior
/// times the state likelihood on a 40 x 40 grid.
pub fn phi_sigma_joint_oracle(sweeps: usize) -> Check {
    let h = fixed_path();
    let mu = 0.1;
    let prior = PhiSigmaPrior::default();
    let logd = |phi: f64, sigma: f64| {
        if !(phi.abs() < 1.0 && sigma > 0.0) {
            return f64::NEG_INFINITY;
        }
        let (a, b) = ((phi - prior.mu_phi) / prior.sigma_phi, (sigma - prior.mu_sigma) / prior.sigma_q);
        let r = prior.rho;
        -0.5 * (a * a - 2.0 * r * a * b + b * b) / (1.0 - r * r) + state_loglik(&h, mu, phi, sigma * sigma)
    };
    let box_ = box_from_moments(&logd, (-0.999, 0.999), (1e-3, 2.0), 5.0);
    let mut rng = stream_rng(34, 0);
    let mut adapter = StepAdapter::new(1.0);
    let mut cur = (0.8, 0.4);
    for _ in 0..5_000 {
        let (p, s, acc) = sample_phi_sigma_joint(&h, mu, &prior, cur, adapter.step_scale, &mut rng);
        adapter.record(acc);
        cur = (p, s);
    }
    adapter.freeze();
    let mut draws = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        let (p, s, _) = sample_phi_sigma_joint(&h, mu, &prior, cur, adapter.step_scale, &mut rng);
        cur = (p, s);
        draws.push(cur);
    }
    let tv = tv_2d(&draws, box_, 40, 10, logd);
    Check::below("joint (phi, sigma) total variation", tv, 0.05)
        .with_detail(format!("step scale {:.3}", adapter.step_scale))
}

/// Linear response-model chain on a 3-point dataset against the grid
/// posterior of the fitted (missingness, standardized) coefficients.
pub fn pg_beta_oracle(draws: usize) -> Check {
    let y = [-1.0, 0.5, 2.0];
    let r = [true, false, true];
    let m0 = [0.0, 1.0];
    let prior = PgPrior::linear(m0);
    let st = Standardization::of(&y);
    let x: Vec<f64> = y.iter().map(|&v| st.apply(v)).collect();
    let logd = |a: f64, b: f64| {
        let mut l = log_normal(a, m0[0], 1.0) + log_normal(b, m0[1], 1.0);
        for (xi, &ri) in x.iter().zip(&r) {
            let p_missing = logistic(a + b * xi);
            l += if ri { (1.0 - p_missing).ln() } else { p_missing.ln() };
        }
        l
    };
    let box_ = box_from_moments(&logd, (-10.0, 10.0), (-10.0, 10.0), 4.5);
    let mut rng = stream_rng(35, 0);
    let mut cur = LinearMechanism::new(0.0, 0.0);
    let mut xs = Vec::with_capacity(draws);
    for _ in 0..draws {
        cur = update_beta_linear(&y, &r, &prior, &cur, &mut rng).unwrap();
        let f = st.to_fit(&cur);
        xs.push((f[0], f[1]));
    }
    let tv = tv_2d(&xs, box_, 40, 10, logd);
    Check::below("PG logistic total variation (3 points)", tv, 0.05)
}

/// Smoothing-parameter chain at `k = 3`: marginal of `1/lambda` against its
/// quadrature, as a KS p-value on a thinned chain.
pub fn lambda_oracle(sweeps: usize, thin: usize) -> Check {
    let prior = SmoothingPrior::new(1.0, 3.0, 2.0).unwrap();
    let c = [0.5, -0.3, 0.8];
    let cc: f64 = c.iter().map(|v| v * v).sum();
    let (nu, g) = (prior.nu_lambda, prior.g_lambda);
    let mut rng = stream_rng(36, 0);
    let mut lambda = 1.0;
    let mut xs = Vec::new();
    for i in 0..sweeps {
        lambda = update_lambda(&c, &prior, lambda, &mut rng).0;
        if (i + 1) % thin == 0 {
            xs.push(1.0 / lambda);
        }
    }
    // v = 1/lambda: c | v ~ N(0, v I), sqrt(v) ~ Half-t(nu, G).
    let grid = linspace(1e-4, 400.0, 2_000_001);
    let logd: Vec<f64> = grid
        .iter()
        .map(|&v| -1.5 * v.ln() - cc / (2.0 * v) - 0.5 * (nu + 1.0) * (v / (nu * g * g)).ln_1p() - 0.5 * v.ln())
        .collect();
    let cdf = GridCdf::from_log_density(grid, &logd);
    let d = ks_distance(&xs, |v| cdf.eval(v));
    Check::above("lambda^-1 KS p-value", ks_pvalue(d, xs.len()), 0.01)
        .with_detail(format!("KS distance {d:.4} over {} thinned draws", xs.len()))
}

// ------------------------------------------------------------- PG moments

/// Sample means of `PG(1, z)` against `tanh(z/2) / (2z)`, in standard errors.
pub fn pg_moment_checks(draws: usize) -> Vec<Check> {
    let mut rng = stream_rng(37, 0);
    [0.0, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&z: &f64| {
            let xs: Vec<f64> = (0..draws).map(|_| pg_draw(z, &mut rng)).collect();
            let n = xs.len() as f64;
            let m = xs.iter().sum::<f64>() / n;
            let sd = (xs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt();
            let truth = if z == 0.0 { 0.25 } else { (z / 2.0).tanh() / (2.0 * z) };
            Check::below(&format!("PG(1, {z}) mean |error| in SE"), (m - truth).abs() / (sd / n.sqrt()), 3.0)
        })
        .collect()
}

// ------------------------------------------------------ particle filter

/// Independent conditional particle filter with ancestor sampling for a
/// fully observed series, consuming random numbers in the documented order.
/// Returns the per-step normalized weights, ancestor vectors and the final
/// trajectory.
pub struct CpfTrace {
    pub weights: Vec<Vec<f64>>,
    pub ancestors: Vec<Vec<usize>>,
    pub particles: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

fn normalize(logw: &[f64]) -> Vec<f64> {
    let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

fn categorical(w: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &wi) in w.iter().enumerate() {
        acc += wi;
        if u < acc {
            return i;
        }
    }
    w.len() - 1
}

pub fn reference_cpfas(y: &[f64], p: &SvParams, reference: &[f64], n_part: usize, seed: u64) -> CpfTrace {
    let mut rng = stream_rng(seed, 0);
    let n = y.len();
    let last = n_part - 1;
    let obs = |yt: f64, ht: f64| -0.5 * ((2.0 * PI).ln() + ht + p.mu + yt * yt * (-(ht + p.mu)).exp());
    let sd0 = (p.sigma2 / (1.0 - p.phi * p.phi)).sqrt();
    let mut paths: Vec<Vec<f64>> = (0..n_part)
        .map(|i| {
            if i < last {
                let z: f64 = StandardNormal.sample(&mut rng);
                vec![p.mu + sd0 * z]
            } else {
                vec![reference[0]]
            }
        })
        .collect();
    let mut w = normalize(&paths.iter().map(|x| obs(y[0], x[0])).collect::<Vec<_>>());
    let mut trace = CpfTrace { weights: vec![w.clone()], ancestors: vec![], particles: vec![paths.iter().map(|x| x[0]).collect()], output: vec![] };
    for t in 1..n {
        let mut anc: Vec<usize> = (0..last).map(|_| categorical(&w, rng.random::<f64>())).collect();
        let ref_logp: Vec<f64> = (0..n_part)
            .map(|i| w[i].ln() + log_normal(reference[t], p.mu + p.phi * (paths[i][t - 1] - p.mu), p.sigma2))
            .collect();
        anc.push(categorical(&normalize(&ref_logp), rng.random::<f64>()));
        let mut next: Vec<Vec<f64>> = anc.iter().map(|&a| paths[a].clone()).collect();
        for (i, path) in next.iter_mut().enumerate() {
            let ht = if i < last {
                let z: f64 = StandardNormal.sample(&mut rng);
                p.mu + p.phi * (path[t - 1] - p.mu) + p.sigma2.sqrt() * z
            } else {
                reference[t]
            };
            path.push(ht);
        }
        paths = next;
        w = normalize(&paths.iter().map(|x| obs(y[t], x[t])).collect::<Vec<_>>());
        trace.weights.push(w.clone());
        trace.ancestors.push(anc);
        trace.particles.push(paths.iter().map(|x| x[t]).collect());
    }
    let k = categorical(&w, rng.random::<f64>());
    trace.output = paths[k].clone();
    trace
}

/// Field-by-field comparison of the library filter on a fully observed
/// series with the independent implementation. Returns the largest
/// absolute difference over weights, particle values and the output path,
/// and whether every ancestor index agrees.
pub fn cpfas_reduction(n: usize, n_part: usize, seed: u64) -> (Check, Check) {
    let p = SvParams::new(0.1, 0.8, 0.25).unwrap();
    let (_, y) = simulate_sv(&p, n, &mut stream_rng(seed, 5)).unwrap();
    let series = ObservedSeries::fully_observed(&y).unwrap();
    let reference: Vec<f64> = (0..n).map(|t| 0.3 * (t as f64 * 0.7).sin()).collect();
    let r = ReferenceTrajectory::new(reference.clone(), vec![], &series).unwrap();
    let mech = MissingMechanism::Linear(LinearMechanism::new(-3.0, 1.1));
    let oracle = reference_cpfas(&y, &p, &reference, n_part, seed);

    let mut rng = stream_rng(seed, 0);
    let mut sys = icpfas_init(&r, &series, &p, n_part, &mut rng).unwrap();
    let mut diff = 0.0f64;
    let mut ancestors_agree = true;
    let cmp = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    diff = diff.max(cmp(sys.weights(), &oracle.weights[0]));
    for t in 1..n {
        icpfas_step(&mut sys, t, &series, &p, &mech, &r, &mut rng).unwrap();
        diff = diff.max(cmp(sys.weights(), &oracle.weights[t]));
        let now: Vec<f64> = (0..n_part).map(|i| sys.h_path(i)[t]).collect();
        diff = diff.max(cmp(&now, &oracle.particles[t]));
        ancestors_agree &= sys.ancestors() == &oracle.ancestors[t - 1][..];
    }
    let out = icpfas_run(&r, &series, &p, &mech, n_part, &mut stream_rng(seed, 0)).unwrap();
    diff = diff.max(cmp(&out.h, &oracle.output));
    let same_len = out.h.len() == oracle.output.len();
    (
        Check::below("CPF-AS reduction max field difference", diff, 1e-12),
        Check::above("CPF-AS reduction ancestor agreement", (ancestors_agree && same_len) as u8 as f64, 0.5),
    )
}

/// Posterior of `h_{1:3}` on a dense grid; missing times contribute no
/// likelihood term (the implied missing-value density integrates to one).
struct Grid3 {
    x: Vec<f64>,
    /// Marginal densities per coordinate on `x`.
    marg: [Vec<f64>; 3],
}

fn grid3(y: &[Option<f64>; 3], p: &SvParams, m: usize) -> Grid3 {
    let sd = (p.sigma2 / (1.0 - p.phi * p.phi)).sqrt();
    let x = linspace(p.mu - 7.0 * sd, p.mu + 7.0 * sd + 3.0, m);
    let dx = x[1] - x[0];
    let lik = |t: usize, h: f64| match y[t] {
        Some(v) => log_normal(v, 0.0, (h + p.mu).exp()).exp(),
        None => 1.0,
    };
    let trans = |i: usize, j: usize| log_normal(x[j], p.mu + p.phi * (x[i] - p.mu), p.sigma2).exp() * dx;
    let scale = |v: &mut Vec<f64>| {
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|e| *e /= s);
    };
    // Forward filter and backward messages over the three-step chain.
    let mut f1: Vec<f64> = x.iter().map(|&h| log_normal(h, p.mu, sd * sd).exp() * lik(0, h)).collect();
    scale(&mut f1);
    let mut f2: Vec<f64> = (0..m).map(|j| (0..m).map(|i| f1[i] * trans(i, j)).sum::<f64>() * lik(1, x[j])).collect();
    scale(&mut f2);
    let mut f3: Vec<f64> = (0..m).map(|k| (0..m).map(|j| f2[j] * trans(j, k)).sum::<f64>() * lik(2, x[k])).collect();
    scale(&mut f3);
    let mut b2: Vec<f64> = (0..m).map(|j| (0..m).map(|k| trans(j, k) * lik(2, x[k])).sum()).collect();
    scale(&mut b2);
    let mut b1: Vec<f64> = (0..m).map(|i| (0..m).map(|j| trans(i, j) * lik(1, x[j]) * b2[j]).sum()).collect();
    scale(&mut b1);
    let m1: Vec<f64> = f1.iter().zip(&b1).map(|(a, b)| a * b).collect();
    let m2: Vec<f64> = f2.iter().zip(&b2).map(|(a, b)| a * b).collect();
    Grid3 { x, marg: [m1, m2, f3] }
}

/// Iterates the filter `sweeps` times at `n = 3` with fixed parameters and
/// compares each coordinate's marginal with the grid posterior. With a
/// missing middle value the imputed draws are compared with the grid
/// mixture of `N(-beta1 s2, s2)` over `h_2`.
pub fn icpf_toy_marginals(y: [Option<f64>; 3], beta1: f64, sweeps: usize, n_part: usize, seed: u64) -> Vec<Check> {
    let p = SvParams::new(0.1, 0.8, 0.25).unwrap();
    let series = ObservedSeries::new(y.to_vec()).unwrap();
    let mech = MissingMechanism::Linear(LinearMechanism::new(-3.0, beta1));
    let mut rng = stream_rng(seed, 0);
    let mut r = ReferenceTrajectory::constant(2.0, 0.0, &series);
    let mut hs: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut y0: Vec<f64> = Vec::new();
    for _ in 0..sweeps {
        r = icpfas_run(&r, &series, &p, &mech, n_part, &mut rng).unwrap();
        for t in 0..3 {
            hs[t].push(r.h[t]);
        }
        if let Some(&v) = r.y0.first() {
            y0.push(v);
        }
    }
    let g = grid3(&y, &p, 1500);
    let label = if series.n_missing() > 0 { format!("missing, beta1 {beta1:.3}") } else { "observed".into() };
    let mut out: Vec<Check> = (0..3)
        .map(|t| {
            let cdf = GridCdf::from_density(g.x.clone(), &g.marg[t]);
            Check::below(&format!("ICPF-AS h_{} KS ({label})", t + 1), ks_distance(&hs[t], |v| cdf.eval(v)), 0.02)
        })
        .collect();
    if let Some(slot) = series.missing_indices().first() {
        let t = *slot;
        let ygrid = linspace(-25.0, 25.0, 20_001);
        let w: Vec<f64> = g.marg[t].clone();
        let total: f64 = w.iter().sum();
        let dens: Vec<f64> = ygrid
            .iter()
            .map(|&v| {
                g.x.iter()
                    .zip(&w)
                    .map(|(&h, &wi)| {
                        let s2 = (h + p.mu).exp();
                        wi * log_normal(v, -beta1 * s2, s2).exp()
                    })
                    .sum::<f64>()
                    / total
            })
            .collect();
        let cdf = GridCdf::from_density(ygrid, &dens);
        out.push(Check::below(&format!("ICPF-AS imputed y_{} KS ({label})", t + 1), ks_distance(&y0, |v| cdf.eval(v)), 0.02));
    }
    out
}
