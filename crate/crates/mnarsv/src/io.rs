//! Delimited-text file formats.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! reader recovers the written value exactly.
//!
//! A fit run directory `{out}/{run_id}/` holds:
//!
//! * `manifest.toml`: sampler configuration, seed, code version, input;
//! * `theta.csv`: `draw,mu,phi,sigma2`;
//! * `mechanism.csv`: `draw` followed by the response-model columns;
//! * `h.csv`: `draw,h_{t}...` with the series' own time labels;
//! * `y0.csv`: `draw,y_{t}...` for the missing time points;
//! * `summary.csv` and `parameters.csv` once summarized.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mnarsv_core::gibbs::PosteriorDraws;
use mnarsv_core::summary::PosteriorSummary;
use mnarsv_core::ObservedSeries;

use crate::config::GibbsSection;
use crate::error::CliError;

/// A series with its time labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFile {
    pub time_index: Vec<i64>,
    pub series: ObservedSeries,
}

fn reader(path: &Path) -> Result<csv::Reader<File>, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(f))
}

fn writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new().from_writer(f))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::validation(format!("{}: {e}", path.display()))
}

fn parse_f64(path: &Path, line: u64, field: &str) -> Result<f64, CliError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| CliError::validation(format!("{}:{line}: cannot parse {field:?} as a number", path.display())))?;
    if !v.is_finite() {
        return Err(CliError::validation(format!("{}:{line}: non-finite value {field:?}", path.display())));
    }
    Ok(v)
}

/// Reads `time_index,value` rows; an empty value marks a missing point.
/// With `center`, observed values are shifted by their mean, which is
/// returned.
pub fn ingest_series(path: &Path, center: bool) -> Result<(SeriesFile, f64), CliError> {
    let mut rdr = reader(path)?;
    let mut time_index = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(CliError::validation(format!("{}:{line}: expected 2 fields", path.display())));
        }
        let t: i64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| CliError::validation(format!("{}:{line}: bad time index {:?}", path.display(), &rec[0])))?;
        if let Some(&prev) = time_index.last() {
            if t <= prev {
                return Err(CliError::validation(format!(
                    "{}:{line}: time index {t} does not increase",
                    path.display()
                )));
            }
        }
        time_index.push(t);
        values.push(if rec[1].trim().is_empty() { None } else { Some(parse_f64(path, line, &rec[1])?) });
    }
    if values.is_empty() {
        return Err(CliError::validation(format!("{}: series is empty", path.display())));
    }
    let series = ObservedSeries::new(values)?;
    let (series, offset) = if center { series.centered() } else { (series, 0.0) };
    Ok((SeriesFile { time_index, series }, offset))
}

pub fn write_series(path: &Path, file: &SeriesFile) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["time_index", "value"]).map_err(|e| csv_err(path, e))?;
    for (t, v) in file.time_index.iter().zip(file.series.values()) {
        let value = v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([t.to_string(), value]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Simulation truth: `time_index,h,y,observed`.
pub fn write_truth(path: &Path, h: &[f64], y: &[f64], observed: &[bool]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["time_index", "h", "y", "observed"]).map_err(|e| csv_err(path, e))?;
    for t in 0..h.len() {
        w.write_record([(t + 1).to_string(), h[t].to_string(), y[t].to_string(), (observed[t] as u8).to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a numeric column by header name.
pub fn read_column(path: &Path, name: &str) -> Result<Vec<f64>, CliError> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let j = headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::validation(format!("{}: no column {name:?}", path.display())))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push(parse_f64(path, line, &rec[j])?);
    }
    Ok(out)
}

/// Event times, one per row under a `time_index` header.
pub fn read_events(path: &Path) -> Result<Vec<f64>, CliError> {
    read_column(path, "time_index")
}

/// Record of a fit, enough to rerun it and to label its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub run_id: String,
    pub version: String,
    pub input: String,
    pub centered: bool,
    pub center_offset: f64,
    pub n: usize,
    pub draws: usize,
    pub time_index: Vec<i64>,
    /// Time labels of the missing points.
    pub missing: Vec<i64>,
    pub rejected_sweeps: usize,
    pub acceptance_rate: f64,
    pub step_scale: f64,
    pub gibbs: GibbsSection,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join("manifest.toml");
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        toml::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join("manifest.toml");
        let text = toml::to_string(self).map_err(|e| CliError::validation(e.to_string()))?;
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

fn write_columns(path: &Path, names: &[String], cols: &[&[f64]], rows: usize) -> Result<(), CliError> {
    let mut w = writer(path)?;
    let mut header = vec!["draw".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for s in 0..rows {
        let mut rec = vec![(s + 1).to_string()];
        rec.extend(cols.iter().map(|c| c[s].to_string()));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a `draw,...` file back into named columns.
fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut rdr = reader(path)?;
    let headers: Vec<String> = rdr.headers().map_err(|e| csv_err(path, e))?.iter().map(String::from).collect();
    if headers.first().map(String::as_str) != Some("draw") {
        return Err(CliError::validation(format!("{}: first column must be 'draw'", path.display())));
    }
    let mut cols = vec![Vec::new(); headers.len() - 1];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        for (j, col) in cols.iter_mut().enumerate() {
            col.push(parse_f64(path, line, &rec[j + 1])?);
        }
    }
    Ok((headers[1..].to_vec(), cols))
}

/// Writes the draw files and the manifest into `dir`.
pub fn write_draws(dir: &Path, draws: &PosteriorDraws, manifest: &Manifest) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let rows = draws.len();
    let theta: Vec<String> = ["mu", "phi", "sigma2"].iter().map(|s| s.to_string()).collect();
    write_columns(&dir.join("theta.csv"), &theta, &[&draws.mu, &draws.phi, &draws.sigma2], rows)?;
    let mech: Vec<&[f64]> = draws.mech.iter().map(Vec::as_slice).collect();
    write_columns(&dir.join("mechanism.csv"), &draws.mech_names, &mech, rows)?;
    let h_names: Vec<String> = manifest.time_index.iter().map(|t| format!("h_{t}")).collect();
    let h: Vec<&[f64]> = draws.h.iter().map(Vec::as_slice).collect();
    write_columns(&dir.join("h.csv"), &h_names, &h, rows)?;
    let y_names: Vec<String> = manifest.missing.iter().map(|t| format!("y_{t}")).collect();
    let y0: Vec<&[f64]> = draws.y0.iter().map(Vec::as_slice).collect();
    write_columns(&dir.join("y0.csv"), &y_names, &y0, rows)?;
    manifest.save(dir)
}

/// Rebuilds the draw store of a run directory.
pub fn read_draws(dir: &Path) -> Result<(PosteriorDraws, Manifest), CliError> {
    let manifest = Manifest::load(dir)?;
    let (_, theta) = read_columns(&dir.join("theta.csv"))?;
    let (mech_names, mech) = read_columns(&dir.join("mechanism.csv"))?;
    let (h_names, h) = read_columns(&dir.join("h.csv"))?;
    let (_, y0) = read_columns(&dir.join("y0.csv"))?;
    if theta.len() != 3 || h.len() != manifest.n || h_names.len() != manifest.time_index.len() {
        return Err(CliError::validation(format!("{}: draw files do not match the manifest", dir.display())));
    }
    let pos = |t: &i64| manifest.time_index.iter().position(|x| x == t).unwrap_or(usize::MAX);
    let mut it = theta.into_iter();
    let draws = PosteriorDraws {
        mu: it.next().unwrap(),
        phi: it.next().unwrap(),
        sigma2: it.next().unwrap(),
        mech_names,
        mech,
        h,
        y0,
        missing_index: manifest.missing.iter().map(pos).collect(),
        rejected_sweeps: manifest.rejected_sweeps,
        acceptance_rate: manifest.acceptance_rate,
        step_scale: manifest.step_scale,
    };
    Ok((draws, manifest))
}

/// `time_index,median,lower,upper` for the volatility path.
pub fn write_summary(path: &Path, time_index: &[i64], summary: &PosteriorSummary) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["time_index", "median", "lower", "upper"]).map_err(|e| csv_err(path, e))?;
    for (t, s) in time_index.iter().zip(&summary.h) {
        w.write_record([t.to_string(), s.median.to_string(), s.lower.to_string(), s.upper.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `parameter,median,lower,upper`.
pub fn write_parameters(path: &Path, summary: &PosteriorSummary) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["parameter", "median", "lower", "upper"]).map_err(|e| csv_err(path, e))?;
    for (name, s) in &summary.params {
        w.write_record([name.clone(), s.median.to_string(), s.lower.to_string(), s.upper.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Volatility summary table as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub time_index: Vec<f64>,
    pub median: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub fn read_summary(path: &Path) -> Result<SummaryTable, CliError> {
    Ok(SummaryTable {
        time_index: read_column(path, "time_index")?,
        median: read_column(path, "median")?,
        lower: read_column(path, "lower")?,
        upper: read_column(path, "upper")?,
    })
}

/// Writes rows of equally long named columns.
pub fn write_table(path: &Path, names: &[&str], cols: &[&[f64]]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(names).map_err(|e| csv_err(path, e))?;
    let rows = cols.first().map_or(0, |c| c.len());
    for i in 0..rows {
        w.write_record(cols.iter().map(|c| c[i].to_string())).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes string records under a header.
pub fn write_records(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn run_dir(out: &Path, run_id: &str) -> PathBuf {
    out.join(run_id)
}
