//! Simulation study: generate data under a known truth, fit it with the
//! proposed sampler and with two imputation baselines, and score the
//! volatility estimates.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gibbs::{gibbs_run, GibbsConfig, MechanismKind};
use crate::math;
use crate::mechanism::{apply_missingness, LinearMechanism, QuadraticLogit, ResponseLogit};
use crate::rng::stream_rng;
use crate::summary::{posterior_summary, Interval};
use crate::sv::{simulate_sv, LatentPath, ObservedSeries, SvParams};

/// Data-generating response model (observation log-odds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truth {
    /// `beta0 + beta1 y`; fitted with the linear model.
    Linear { beta0: f64, beta1: f64 },
    /// `beta0 + beta1 y + beta2 y^2`; fitted with the spline model.
    Quadratic { beta0: f64, beta1: f64, beta2: f64 },
}

impl Truth {
    pub fn linear(beta1: f64) -> Self {
        Truth::Linear { beta0: -3.0, beta1 }
    }

    pub fn quadratic(beta1: f64) -> Self {
        Truth::Quadratic { beta0: -2.0, beta1, beta2: 1.0 }
    }

    pub fn beta1(&self) -> f64 {
        match *self {
            Truth::Linear { beta1, .. } | Truth::Quadratic { beta1, .. } => beta1,
        }
    }

    /// Mechanism kind used by the proposed method for this truth.
    pub fn fitted_kind(&self) -> MechanismKind {
        match self {
            Truth::Linear { .. } => MechanismKind::Linear,
            Truth::Quadratic { .. } => MechanismKind::Spline,
        }
    }

    /// Draws response indicators for `y`.
    pub fn mask<R: rand::Rng + ?Sized>(&self, y: &[f64], rng: &mut R) -> Vec<bool> {
        match *self {
            Truth::Linear { beta0, beta1 } => apply_missingness(y, &LinearMechanism::new(beta0, beta1), rng),
            Truth::Quadratic { beta0, beta1, beta2 } => {
                apply_missingness(y, &QuadraticLogit { beta0, beta1, beta2 }, rng)
            }
        }
    }

    pub fn logit(&self, y: f64) -> f64 {
        match *self {
            Truth::Linear { beta0, beta1 } => LinearMechanism::new(beta0, beta1).logit(y),
            Truth::Quadratic { beta0, beta1, beta2 } => QuadraticLogit { beta0, beta1, beta2 }.logit(y),
        }
    }
}

/// `ln 2.5, ln 3, ln 3.5`.
pub const LINEAR_BETA1_GRID: [f64; 3] = [0.916_290_731_874_155, 1.098_612_288_668_109_8, 1.252_762_968_495_368];
/// `ln 2.5, ln 3.5, ln 4.5`.
pub const WIDE_BETA1_GRID: [f64; 3] = [0.916_290_731_874_155, 1.252_762_968_495_368, 1.504_077_396_776_274];

/// Fitting method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Joint imputation and estimation with the informative-missingness model.
    Proposed,
    /// Fill missing values with the mean of the observed ones, then fit.
    MeanImputation,
    /// Carry the last observed value forward, then fit.
    Locf,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Proposed => "P",
            Method::MeanImputation => "A",
            Method::Locf => "B",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "P" | "p" | "proposed" => Some(Method::Proposed),
            "A" | "a" | "mean" => Some(Method::MeanImputation),
            "B" | "b" | "locf" => Some(Method::Locf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub n: usize,
    pub truth: Truth,
    pub true_params: SvParams,
    pub replicates: usize,
    pub gibbs: GibbsConfig,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    pub level: f64,
}

impl StudyConfig {
    /// Defaults for everything except the truth, size and fit settings.
    pub fn new(n: usize, truth: Truth, replicates: usize, gibbs: GibbsConfig) -> Self {
        StudyConfig {
            n,
            truth,
            true_params: SvParams { mu: 0.1, phi: 0.8, sigma2: 0.25 },
            replicates,
            gibbs,
            methods: alloc::vec![Method::Proposed, Method::MeanImputation, Method::Locf],
            base_seed: 2024,
            level: 0.95,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidInput("a study needs at least one replicate".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidInput(format!("series length {} is below 2", self.n)));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidInput("no fitting methods selected".into()));
        }
        if self.gibbs.mechanism != self.truth.fitted_kind() {
            return Err(Error::InvalidInput(format!(
                "truth {:?} is fitted with the {:?} model, not {:?}",
                self.truth,
                self.truth.fitted_kind(),
                self.gibbs.mechanism
            )));
        }
        self.true_params.validate()?;
        self.gibbs.validate()
    }

    fn replicate_seed(&self, replicate: usize) -> u64 {
        self.base_seed.wrapping_mul(1_000_003).wrapping_add(replicate as u64)
    }
}

/// Simulates the truth and masks it. The seed depends only on the base seed
/// and the replicate index.
pub fn generate_dataset(cfg: &StudyConfig, replicate: usize) -> Result<(LatentPath, Vec<f64>, ObservedSeries)> {
    let mut rng = stream_rng(cfg.replicate_seed(replicate), 2);
    let (h, y) = simulate_sv(&cfg.true_params, cfg.n, &mut rng)?;
    let r = cfg.truth.mask(&y, &mut rng);
    let series = ObservedSeries::from_mask(&y, &r)?;
    Ok((h, y, series))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Mean,
    Locf,
}

/// Completes a series by mean imputation or by carrying the last observed
/// value forward.
pub fn impute_baseline(series: &ObservedSeries, method: Baseline) -> Vec<f64> {
    let fill = math::mean(&series.observed_values());
    let mut last = f64::NAN;
    series
        .values()
        .iter()
        .map(|v| match (v, method) {
            (Some(x), _) => {
                last = *x;
                *x
            }
            (None, Baseline::Mean) => fill,
            (None, Baseline::Locf) => last,
        })
        .collect()
}

/// Accuracy of a volatility estimate against the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Mean over time of the squared error of the posterior median.
    pub amse: f64,
    /// Fraction of time points whose interval covers the truth.
    pub coverage: f64,
    pub width: f64,
    pub covered: Vec<bool>,
    pub widths: Vec<f64>,
}

pub fn compute_metrics(true_h: &[f64], summaries: &[Interval]) -> Result<Metrics> {
    if true_h.len() != summaries.len() || true_h.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} true values but {} summaries",
            true_h.len(),
            summaries.len()
        )));
    }
    let n = true_h.len() as f64;
    let covered: Vec<bool> = true_h.iter().zip(summaries).map(|(&h, s)| s.covers(h)).collect();
    let widths: Vec<f64> = summaries.iter().map(Interval::width).collect();
    let amse = true_h.iter().zip(summaries).map(|(&h, s)| (s.median - h) * (s.median - h)).sum::<f64>() / n;
    Ok(Metrics {
        amse,
        coverage: covered.iter().filter(|&&c| c).count() as f64 / n,
        width: widths.iter().sum::<f64>() / n,
        covered,
        widths,
    })
}

/// Outcome of one method on one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub method: Method,
    pub n_missing: usize,
    pub outcome: core::result::Result<ReplicateFit, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFit {
    pub metrics: Metrics,
    /// Whether the interval for `beta1` covers the truth (proposed method
    /// with the linear model only).
    pub beta1_covered: Option<bool>,
    pub rejected_sweeps: usize,
}

fn fit_one(cfg: &StudyConfig, replicate: usize, method: Method, true_h: &[f64], y: &ObservedSeries) -> Result<ReplicateFit> {
    let mut gibbs = cfg.gibbs.clone();
    gibbs.seed = cfg.replicate_seed(replicate);
    let series = match method {
        Method::Proposed => y.clone(),
        Method::MeanImputation | Method::Locf => {
            let b = if method == Method::Locf { Baseline::Locf } else { Baseline::Mean };
            gibbs.update_mechanism = false;
            ObservedSeries::fully_observed(&impute_baseline(y, b))?
        }
    };
    let draws = gibbs_run(&series, &gibbs)?;
    let summary = posterior_summary(&draws, cfg.level)?;
    let metrics = compute_metrics(true_h, &summary.h)?;
    let beta1_covered = match (method, cfg.truth) {
        (Method::Proposed, Truth::Linear { beta1, .. }) => summary.param("beta1").map(|i| i.covers(beta1)),
        _ => None,
    };
    Ok(ReplicateFit { metrics, beta1_covered, rejected_sweeps: draws.rejected_sweeps })
}

/// Generates replicate `replicate` and fits it with every configured method.
pub fn run_replicate(cfg: &StudyConfig, replicate: usize) -> Result<Vec<ReplicateResult>> {
    let (h, _, series) = generate_dataset(cfg, replicate)?;
    Ok(cfg
        .methods
        .iter()
        .map(|&method| ReplicateResult {
            replicate,
            method,
            n_missing: series.n_missing(),
            outcome: fit_one(cfg, replicate, method, h.as_slice(), &series).map_err(|e| e.to_string()),
        })
        .collect())
}

/// Means over successful replicates of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub completed: usize,
    pub failed: usize,
    pub amse: f64,
    pub coverage: f64,
    pub width: f64,
    /// Fraction of replicates whose `beta1` interval covers the truth.
    pub beta1_coverage: Option<f64>,
    pub missing_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub replicates: Vec<ReplicateResult>,
    pub summaries: Vec<MethodSummary>,
}

impl StudyResult {
    /// Sorts replicate results and aggregates them per method. The result
    /// does not depend on the order the replicates were run in.
    pub fn aggregate(mut replicates: Vec<ReplicateResult>, methods: &[Method], n: usize) -> Self {
        replicates.sort_by_key(|r| (r.replicate, r.method));
        let summaries = methods
            .iter()
            .map(|&method| {
                let rows: Vec<&ReplicateResult> = replicates.iter().filter(|r| r.method == method).collect();
                let fits: Vec<&ReplicateFit> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
                let k = fits.len() as f64;
                let avg = |f: &dyn Fn(&ReplicateFit) -> f64| if fits.is_empty() { f64::NAN } else { fits.iter().map(|x| f(x)).sum::<f64>() / k };
                let b1: Vec<bool> = fits.iter().filter_map(|f| f.beta1_covered).collect();
                let missing_rate = if rows.is_empty() {
                    f64::NAN
                } else {
                    rows.iter().map(|r| r.n_missing as f64 / n as f64).sum::<f64>() / rows.len() as f64
                };
                MethodSummary {
                    method,
                    completed: fits.len(),
                    failed: rows.len() - fits.len(),
                    amse: avg(&|f| f.metrics.amse),
                    coverage: avg(&|f| f.metrics.coverage),
                    width: avg(&|f| f.metrics.width),
                    beta1_coverage: if b1.is_empty() {
                        None
                    } else {
                        Some(b1.iter().filter(|&&c| c).count() as f64 / b1.len() as f64)
                    },
                    missing_rate,
                }
            })
            .collect();
        StudyResult { replicates, summaries }
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// Per-replicate AMSE of `method`, `None` where the fit failed.
    pub fn amse(&self, method: Method) -> Vec<Option<f64>> {
        self.replicates
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.outcome.as_ref().ok().map(|f| f.metrics.amse))
            .collect()
    }
}

/// Runs every replicate in sequence. See the `mnarsv` crate for a parallel
/// runner with identical results.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let mut all = Vec::new();
    for rep in 0..cfg.replicates {
        all.extend(run_replicate(cfg, rep)?);
    }
    Ok(StudyResult::aggregate(all, &cfg.methods, cfg.n))
}
