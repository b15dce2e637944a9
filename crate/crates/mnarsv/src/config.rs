//! TOML configuration mirroring the core sampler and study settings.
//!
//! Every field is optional in the file; missing fields take the core
//! defaults. CLI flags are applied on top of a loaded file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use mnarsv_core::gibbs::{GibbsConfig, InitialState, MechanismKind, SamplerKind};
use mnarsv_core::pg::SmoothingPrior;
use mnarsv_core::samplers::{LegacyPriors, PhiSigmaPrior};
use mnarsv_core::study::{Method, StudyConfig, Truth};
use mnarsv_core::{LinearMechanism, SvParams};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismName {
    Linear,
    Spline,
}

impl From<MechanismName> for MechanismKind {
    fn from(m: MechanismName) -> Self {
        match m {
            MechanismName::Linear => MechanismKind::Linear,
            MechanismName::Spline => MechanismKind::Spline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerName {
    JointRwmh,
    Individual,
}

impl From<SamplerName> for SamplerKind {
    fn from(s: SamplerName) -> Self {
        match s {
            SamplerName::JointRwmh => SamplerKind::JointRwmh,
            SamplerName::Individual => SamplerKind::Individual,
        }
    }
}

/// Starting values. `sigma` is the state noise standard deviation; `beta*`
/// start the linear model and `d*`, `lambda` the spline model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub mu: f64,
    pub phi: f64,
    pub sigma: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub d1: f64,
    pub d2: f64,
    pub lambda: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        let d = InitialState::default();
        InitialSection {
            mu: d.params.mu,
            phi: d.params.phi,
            sigma: d.params.sigma(),
            beta0: d.beta.beta0,
            beta1: d.beta.beta1,
            d1: d.d[0],
            d2: d.d[1],
            lambda: d.lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    pub mu_phi: f64,
    pub mu_sigma: f64,
    pub sigma_phi: f64,
    pub sigma_q: f64,
    pub rho: f64,
    pub beta_a: f64,
    pub beta_b: f64,
    pub half_t_v: f64,
    pub half_t_g: f64,
    pub sigma2_d: f64,
    pub nu_lambda: f64,
    pub g_lambda: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        let j = PhiSigmaPrior::default();
        let l = LegacyPriors::default();
        let s = SmoothingPrior::default();
        PriorSection {
            mu_phi: j.mu_phi,
            mu_sigma: j.mu_sigma,
            sigma_phi: j.sigma_phi,
            sigma_q: j.sigma_q,
            rho: j.rho,
            beta_a: l.a,
            beta_b: l.b,
            half_t_v: l.v,
            half_t_g: l.g,
            sigma2_d: s.sigma2_d,
            nu_lambda: s.nu_lambda,
            g_lambda: s.g_lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsSection {
    pub iterations: usize,
    pub burn_in: usize,
    pub n_particles: usize,
    pub seed: u64,
    pub mechanism: MechanismName,
    pub sampler: SamplerName,
    pub thinning: usize,
    pub spline_k: usize,
    pub update_mechanism: bool,
    pub max_retries: usize,
    pub initial_step_scale: f64,
    pub initial: InitialSection,
    pub priors: PriorSection,
}

impl Default for GibbsSection {
    fn default() -> Self {
        let d = GibbsConfig::default();
        GibbsSection {
            iterations: d.iterations,
            burn_in: d.burn_in,
            n_particles: d.n_particles,
            seed: d.seed,
            mechanism: MechanismName::Linear,
            sampler: SamplerName::JointRwmh,
            thinning: d.thinning,
            spline_k: d.spline_k,
            update_mechanism: d.update_mechanism,
            max_retries: d.max_retries,
            initial_step_scale: d.initial_step_scale,
            initial: InitialSection::default(),
            priors: PriorSection::default(),
        }
    }
}

impl GibbsSection {
    pub fn to_core(&self) -> Result<GibbsConfig, CliError> {
        let i = &self.initial;
        let p = &self.priors;
        if !(i.sigma > 0.0) {
            return Err(CliError::validation(format!("initial sigma {} must be > 0", i.sigma)));
        }
        let params = SvParams::new(i.mu, i.phi, i.sigma * i.sigma)?;
        let cfg = GibbsConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            n_particles: self.n_particles,
            seed: self.seed,
            mechanism: self.mechanism.into(),
            sampler: self.sampler.into(),
            thinning: self.thinning,
            initial: InitialState {
                params,
                beta: LinearMechanism::new(i.beta0, i.beta1),
                d: [i.d1, i.d2],
                lambda: i.lambda,
                reference: None,
            },
            phi_sigma_prior: PhiSigmaPrior::new(p.mu_phi, p.mu_sigma, p.sigma_phi, p.sigma_q, p.rho)?,
            legacy_priors: LegacyPriors::new(p.beta_a, p.beta_b, p.half_t_v, p.half_t_g)?,
            smoothing_prior: SmoothingPrior::new(p.sigma2_d, p.nu_lambda, p.g_lambda)?,
            spline_k: self.spline_k,
            update_mechanism: self.update_mechanism,
            max_retries: self.max_retries,
            initial_step_scale: self.initial_step_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthName {
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub n: usize,
    pub truth: TruthName,
    pub beta0: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub mu: f64,
    pub phi: f64,
    pub sigma2: f64,
    pub replicates: usize,
    pub methods: Vec<String>,
    pub base_seed: u64,
    pub level: f64,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            n: 100,
            truth: TruthName::Linear,
            beta0: None,
            beta1: 3f64.ln(),
            beta2: 1.0,
            mu: 0.1,
            phi: 0.8,
            sigma2: 0.25,
            replicates: 50,
            methods: vec!["P".into(), "A".into(), "B".into()],
            base_seed: 2024,
            level: 0.95,
        }
    }
}

impl StudySection {
    pub fn truth(&self) -> Truth {
        match self.truth {
            TruthName::Linear => Truth::Linear { beta0: self.beta0.unwrap_or(-3.0), beta1: self.beta1 },
            TruthName::Quadratic => {
                Truth::Quadratic { beta0: self.beta0.unwrap_or(-2.0), beta1: self.beta1, beta2: self.beta2 }
            }
        }
    }

    pub fn to_core(&self, gibbs: GibbsConfig) -> Result<StudyConfig, CliError> {
        let methods = self
            .methods
            .iter()
            .map(|m| Method::from_label(m).ok_or_else(|| CliError::validation(format!("unknown method {m:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut cfg = StudyConfig::new(self.n, self.truth(), self.replicates, gibbs);
        cfg.true_params = SvParams::new(self.mu, self.phi, self.sigma2)?;
        cfg.methods = methods;
        cfg.base_seed = self.base_seed;
        cfg.level = self.level;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A whole configuration file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub gibbs: GibbsSection,
    pub study: StudySection,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    }
}
