//! Event-intensity estimation and correlation tools.

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::statistics::{Data, OrderStatistics, Statistics};

use crate::error::CliError;

/// Rule-of-thumb Gaussian-kernel bandwidth
/// `0.9 min(sd, IQR / 1.34) m^{-1/5}`. When that scale is zero, falls back
/// to the sd, then to `|x_1|`, then to 1.
pub fn silverman_bandwidth(x: &[f64]) -> Result<f64, CliError> {
    if x.len() < 2 {
        return Err(CliError::validation(format!("bandwidth needs at least 2 events, got {}", x.len())));
    }
    let sd = x.std_dev();
    let mut data = Data::new(x.to_vec());
    // Linear interpolation between order statistics, as for the summaries.
    let iqr = quantile7(&mut data, 0.75) - quantile7(&mut data, 0.25);
    let mut scale = sd.min(iqr / 1.34);
    if !(scale > 0.0) {
        scale = if sd > 0.0 {
            sd
        } else if x[0] != 0.0 {
            x[0].abs()
        } else {
            1.0
        };
    }
    Ok(0.9 * scale * (x.len() as f64).powf(-0.2))
}

fn quantile7(data: &mut Data<Vec<f64>>, p: f64) -> f64 {
    let n = data.len();
    let pos = (n - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let a = data.order_statistic(lo + 1);
    let b = data.order_statistic((lo + 2).min(n));
    a + frac * (b - a)
}

/// Gaussian kernel density of the event times on `grid`.
pub fn kde_intensity(events: &[f64], grid: &[f64]) -> Result<Vec<f64>, CliError> {
    let bw = silverman_bandwidth(events)?;
    let norm = 1.0 / (events.len() as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .iter()
        .map(|&g| {
            events
                .iter()
                .map(|&e| {
                    let z = (g - e) / bw;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect())
}

/// Sample correlation and two-sided p-value from Student's t with
/// `n - 2` degrees of freedom.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<(f64, f64), CliError> {
    if a.len() != b.len() || a.len() < 3 {
        return Err(CliError::validation(format!(
            "correlation needs equal lengths of at least 3, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, mb) = (a.mean(), b.mean());
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(CliError::validation("correlation is undefined for a constant input"));
    }
    let r = (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0);
    let df = (a.len() - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        2.0 * dist.cdf(-t.abs())
    };
    Ok((r, p))
}

/// One-sided paired t-test of `mean(x - y) > 0`; returns `(mean difference,
/// t statistic, p-value)`.
pub fn paired_t_greater(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64), CliError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(CliError::validation("paired test needs two equal samples of size >= 2"));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let m = d.iter().mean();
    let sd = d.iter().std_dev();
    if !(sd > 0.0) {
        let p = if m > 0.0 { 0.0 } else { 1.0 };
        return Ok((m, f64::INFINITY * m.signum(), p));
    }
    let t = m / (sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("positive degrees of freedom");
    Ok((m, t, dist.cdf(-t)))
}
