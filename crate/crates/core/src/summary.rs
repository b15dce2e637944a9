//! Pointwise posterior summaries.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gibbs::PosteriorDraws;

/// Median and equal-tailed credible interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    /// Closed-interval membership.
    pub fn covers(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Quantile of sorted data by linear interpolation between order statistics
/// (`h = (n - 1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Median and `level` equal-tailed interval of `draws`.
pub fn summarize(draws: &[f64], level: f64) -> Result<Interval> {
    if draws.is_empty() {
        return Err(Error::EmptyDraws);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(alloc::format!("credible level {level} must be in (0, 1)")));
    }
    let mut s = draws.to_vec();
    s.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    Ok(Interval {
        median: quantile_sorted(&s, 0.5),
        lower: quantile_sorted(&s, tail),
        upper: quantile_sorted(&s, 1.0 - tail),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub level: f64,
    /// One interval per time point of the volatility path.
    pub h: Vec<Interval>,
    /// Named scalar parameters in storage order.
    pub params: Vec<(String, Interval)>,
}

impl PosteriorSummary {
    pub fn param(&self, name: &str) -> Option<&Interval> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, i)| i)
    }
}

/// Pointwise summaries of the volatility path and every stored parameter.
pub fn posterior_summary(draws: &PosteriorDraws, level: f64) -> Result<PosteriorSummary> {
    if draws.len() == 0 {
        return Err(Error::EmptyDraws);
    }
    let h = draws.h.iter().map(|col| summarize(col, level)).collect::<Result<Vec<_>>>()?;
    let params = draws
        .scalar_columns()
        .into_iter()
        .map(|(name, col)| Ok((name, summarize(col, level)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorSummary { level, h, params })
}
