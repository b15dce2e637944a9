//! Parallel study runner and study result tables.

use std::path::Path;

use rayon::prelude::*;

use mnarsv_core::study::{run_replicate, StudyConfig, StudyResult};

use crate::error::CliError;
use crate::io::write_records;

/// Runs the replicates of `cfg` on a pool of `threads` workers. Each
/// replicate has its own seed, so the result equals the sequential run.
pub fn run_study_parallel(cfg: &StudyConfig, threads: usize) -> Result<StudyResult, CliError> {
    cfg.validate()?;
    if threads == 0 {
        return Err(CliError::validation("thread count must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::validation(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| run_replicate(cfg, rep))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(StudyResult::aggregate(rows.into_iter().flatten().collect(), &cfg.methods, cfg.n))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `replicate,method,n_missing,amse,coverage,width,beta1_covered,rejected_sweeps,error`.
pub fn write_replicates(path: &Path, result: &StudyResult) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = result
        .replicates
        .iter()
        .map(|r| {
            let mut row = vec![r.replicate.to_string(), r.method.label().to_string(), r.n_missing.to_string()];
            match &r.outcome {
                Ok(f) => row.extend([
                    f.metrics.amse.to_string(),
                    f.metrics.coverage.to_string(),
                    f.metrics.width.to_string(),
                    f.beta1_covered.map(|c| (c as u8).to_string()).unwrap_or_default(),
                    f.rejected_sweeps.to_string(),
                    String::new(),
                ]),
                Err(e) => row.extend([String::new(), String::new(), String::new(), String::new(), String::new(), e.clone()]),
            }
            row
        })
        .collect();
    write_records(
        path,
        &["replicate", "method", "n_missing", "amse", "coverage", "width", "beta1_covered", "rejected_sweeps", "error"],
        &rows,
    )
}

/// `method,completed,failed,amse,coverage,width,beta1_coverage,missing_rate`.
pub fn write_method_summaries(path: &Path, result: &StudyResult) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = result
        .summaries
        .iter()
        .map(|s| {
            vec![
                s.method.label().to_string(),
                s.completed.to_string(),
                s.failed.to_string(),
                s.amse.to_string(),
                s.coverage.to_string(),
                s.width.to_string(),
                opt(s.beta1_coverage),
                s.missing_rate.to_string(),
            ]
        })
        .collect();
    write_records(
        path,
        &["method", "completed", "failed", "amse", "coverage", "width", "beta1_coverage", "missing_rate"],
        &rows,
    )
}
