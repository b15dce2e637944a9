//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use mnarsv_core::gibbs::gibbs_run;
use mnarsv_core::rng::stream_rng;
use mnarsv_core::summary::posterior_summary;
use mnarsv_core::{simulate_sv, ObservedSeries};

use crate::analysis::{kde_intensity, pearson_correlation};
use crate::config::{ConfigFile, GibbsSection, MechanismName, SamplerName, TruthName};
use crate::error::CliError;
use crate::io::{
    ingest_series, read_column, read_draws, read_events, read_summary, run_dir, write_draws, write_parameters,
    write_records, write_series, write_summary, write_truth, Manifest, SeriesFile,
};
use crate::study::{run_study_parallel, write_method_summaries, write_replicates};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "mnarsv", version, about = "Stochastic volatility with informative missingness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a series and mask it with a response model.
    Simulate(SimulateArgs),
    /// Run the particle Gibbs sampler on a series file.
    Fit(FitArgs),
    /// Summarize the draws of a fit run.
    Summarize(SummarizeArgs),
    /// Run a simulation study.
    Simstudy(SimstudyArgs),
    /// Event intensity and correlations against a volatility summary.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML file whose [study] section gives the defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub truth: Option<TruthArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Masked series, `time_index,value`.
    #[arg(long)]
    pub out: PathBuf,
    /// Complete truth, `time_index,h,y,observed`.
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum TruthArg {
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum MechanismArg {
    Linear,
    Spline,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SamplerArg {
    JointRwmh,
    Individual,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Series file, `time_index,value` with empty values for missing points.
    #[arg(long, required_unless_present = "manifest")]
    pub input: Option<PathBuf>,
    /// Rerun the fit recorded in a manifest; other flags override it.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub run_id: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mechanism: Option<MechanismArg>,
    /// Total sweeps, burn-in included.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub thinning: Option<usize>,
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerArg>,
    /// Subtract the observed mean before fitting.
    #[arg(long)]
    pub center: bool,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Run directory written by `fit`.
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Debug, Args)]
pub struct SimstudyArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// `summary.csv` written by `summarize`.
    #[arg(long)]
    pub summary: PathBuf,
    /// Event times under a `time_index` header.
    #[arg(long)]
    pub events: PathBuf,
    /// Extra series with a `time_index` column matching the summary.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long, default_value = "value")]
    pub compare_column: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs a parsed command; returns the lines to print on success.
pub fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Summarize(a) => summarize(a),
        Command::Simstudy(a) => simstudy(a),
        Command::Analyze(a) => analyze(a),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<ConfigFile, CliError> {
    path.as_deref().map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
}

fn simulate(a: SimulateArgs) -> Result<Vec<String>, CliError> {
    let mut s = load_config(&a.config)?.study;
    if let Some(v) = a.n {
        s.n = v;
    }
    if let Some(t) = a.truth {
        s.truth = match t {
            TruthArg::Linear => TruthName::Linear,
            TruthArg::Quadratic => TruthName::Quadratic,
        };
    }
    s.beta0 = a.beta0.or(s.beta0);
    s.beta1 = a.beta1.unwrap_or(s.beta1);
    s.beta2 = a.beta2.unwrap_or(s.beta2);
    s.mu = a.mu.unwrap_or(s.mu);
    s.phi = a.phi.unwrap_or(s.phi);
    s.sigma2 = a.sigma2.unwrap_or(s.sigma2);
    let params = mnarsv_core::SvParams::new(s.mu, s.phi, s.sigma2)?;
    if s.n < 2 {
        return Err(CliError::validation(format!("series length {} is below 2", s.n)));
    }
    let truth = s.truth();
    let mut rng = stream_rng(a.seed, 2);
    let (h, y) = simulate_sv(&params, s.n, &mut rng)?;
    let r = truth.mask(&y, &mut rng);
    let series = ObservedSeries::from_mask(&y, &r)?;
    let file = SeriesFile { time_index: (1..=s.n as i64).collect(), series };
    write_series(&a.out, &file)?;
    if let Some(p) = &a.truth_out {
        write_truth(p, h.as_slice(), &y, &r)?;
    }
    Ok(vec![format!("wrote {} ({} of {} missing)", a.out.display(), file.series.n_missing(), s.n)])
}

fn apply_fit_flags(g: &mut GibbsSection, a: &FitArgs) {
    if let Some(m) = a.mechanism {
        g.mechanism = match m {
            MechanismArg::Linear => MechanismName::Linear,
            MechanismArg::Spline => MechanismName::Spline,
        };
    }
    if let Some(s) = a.sampler {
        g.sampler = match s {
            SamplerArg::JointRwmh => SamplerName::JointRwmh,
            SamplerArg::Individual => SamplerName::Individual,
        };
    }
    g.iterations = a.iters.unwrap_or(g.iterations);
    g.burn_in = a.burnin.unwrap_or(g.burn_in);
    g.n_particles = a.particles.unwrap_or(g.n_particles);
    g.seed = a.seed.unwrap_or(g.seed);
    g.thinning = a.thinning.unwrap_or(g.thinning);
}

fn fit(a: FitArgs) -> Result<Vec<String>, CliError> {
    let previous = a.manifest.as_deref().map(|p| Manifest::load(p.parent().unwrap_or(Path::new(".")))).transpose()?;
    let mut gibbs = match (&previous, &a.config) {
        (_, Some(_)) => load_config(&a.config)?.gibbs,
        (Some(m), None) => m.gibbs.clone(),
        (None, None) => GibbsSection::default(),
    };
    apply_fit_flags(&mut gibbs, &a);
    let input = match (&a.input, &previous) {
        (Some(p), _) => p.clone(),
        (None, Some(m)) => PathBuf::from(&m.input),
        (None, None) => return Err(CliError::validation("fit needs --input or --manifest")),
    };
    let center = a.center || previous.as_ref().is_some_and(|m| m.centered);
    let run_id = a
        .run_id
        .clone()
        .or_else(|| previous.as_ref().map(|m| m.run_id.clone()))
        .unwrap_or_else(|| default_run_id(&gibbs));
    validate_run_id(&run_id)?;
    let config = gibbs.to_core()?;
    let (file, offset) = ingest_series(&input, center)?;
    let draws = gibbs_run(&file.series, &config)?;
    let manifest = Manifest {
        run_id: run_id.clone(),
        version: VERSION.to_string(),
        input: input.display().to_string(),
        centered: center,
        center_offset: offset,
        n: file.series.len(),
        draws: draws.len(),
        missing: file.series.missing_indices().iter().map(|&t| file.time_index[t]).collect(),
        time_index: file.time_index,
        rejected_sweeps: draws.rejected_sweeps,
        acceptance_rate: draws.acceptance_rate,
        step_scale: draws.step_scale,
        gibbs,
    };
    let dir = run_dir(&a.out_dir, &run_id);
    write_draws(&dir, &draws, &manifest)?;
    Ok(vec![dir.display().to_string()])
}

fn default_run_id(g: &GibbsSection) -> String {
    let m = match g.mechanism {
        MechanismName::Linear => "linear",
        MechanismName::Spline => "spline",
    };
    format!("{m}-seed{}", g.seed)
}

fn validate_run_id(id: &str) -> Result<(), CliError> {
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) || id.starts_with('.') {
        return Err(CliError::validation(format!("run id {id:?} must be letters, digits, '-', '_' or '.'")));
    }
    Ok(())
}

fn summarize(a: SummarizeArgs) -> Result<Vec<String>, CliError> {
    let (draws, manifest) = read_draws(&a.run)?;
    let summary = posterior_summary(&draws, a.level)?;
    let path = a.run.join("summary.csv");
    write_summary(&path, &manifest.time_index, &summary)?;
    write_parameters(&a.run.join("parameters.csv"), &summary)?;
    Ok(vec![path.display().to_string()])
}

fn simstudy(a: SimstudyArgs) -> Result<Vec<String>, CliError> {
    let mut file = load_config(&a.config)?;
    let g = &mut file.gibbs;
    g.iterations = a.iters.unwrap_or(g.iterations);
    g.burn_in = a.burnin.unwrap_or(g.burn_in);
    g.n_particles = a.particles.unwrap_or(g.n_particles);
    let s = &mut file.study;
    s.replicates = a.replicates.unwrap_or(s.replicates);
    s.base_seed = a.seed.unwrap_or(s.base_seed);
    let cfg = file.study.to_core(file.gibbs.to_core()?)?;
    let threads = a.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let result = run_study_parallel(&cfg, threads)?;
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let resolved = a.out.join("study.toml");
    let text = toml::to_string(&file).map_err(|e| CliError::validation(e.to_string()))?;
    std::fs::write(&resolved, text).map_err(|e| CliError::io(&resolved, e))?;
    write_replicates(&a.out.join("replicates.csv"), &result)?;
    write_method_summaries(&a.out.join("methods.csv"), &result)?;
    Ok(result
        .summaries
        .iter()
        .map(|s| {
            format!(
                "{}: amse {:.4} coverage {:.4} width {:.4} ({} ok, {} failed)",
                s.method.label(),
                s.amse,
                s.coverage,
                s.width,
                s.completed,
                s.failed
            )
        })
        .collect())
}

fn analyze(a: AnalyzeArgs) -> Result<Vec<String>, CliError> {
    let table = read_summary(&a.summary)?;
    let events = read_events(&a.events)?;
    let (lo, hi) = (table.time_index[0], *table.time_index.last().expect("summary is not empty"));
    if let Some(e) = events.iter().find(|&&e| e < lo || e > hi) {
        return Err(CliError::validation(format!("event at {e} lies outside the series range [{lo}, {hi}]")));
    }
    let intensity = kde_intensity(&events, &table.time_index)?;
    let mut names = vec!["time_index", "median", "lower", "upper", "intensity"];
    let mut cols: Vec<&[f64]> = vec![&table.time_index, &table.median, &table.lower, &table.upper, &intensity];
    let mut pairs = vec![("intensity", "median", pearson_correlation(&intensity, &table.median)?)];
    let compare = match &a.compare {
        Some(p) => {
            if read_column(p, "time_index")? != table.time_index {
                return Err(CliError::validation(format!("{}: time_index does not match the summary", p.display())));
            }
            Some(read_column(p, &a.compare_column)?)
        }
        None => None,
    };
    if let Some(c) = &compare {
        names.push("compare");
        cols.push(c);
        pairs.push(("compare", "median", pearson_correlation(c, &table.median)?));
        pairs.push(("compare", "intensity", pearson_correlation(c, &intensity)?));
    }
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    crate::io::write_table(&a.out.join("intensity.csv"), &names, &cols)?;
    let rows: Vec<Vec<String>> = pairs
        .iter()
        .map(|(x, y, (r, p))| vec![x.to_string(), y.to_string(), r.to_string(), p.to_string(), table.median.len().to_string()])
        .collect();
    write_records(&a.out.join("correlations.csv"), &["a", "b", "r", "p_value", "n"], &rows)?;
    Ok(pairs.iter().map(|(x, y, (r, p))| format!("{x} vs {y}: r = {r:.4}, p = {p:.3e}")).collect())
}
