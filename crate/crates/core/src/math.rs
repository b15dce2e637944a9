//! Scalar helpers on top of `libm`, plus a few log-space utilities.

use alloc::vec::Vec;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;
pub const PI: f64 = core::f64::consts::PI;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Log-density of `Normal(mean, var)` at `x`.
#[inline]
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + ln(var) + d * d / var)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Log of the standard normal CDF, accurate in the lower tail.
pub fn normal_ln_cdf(x: f64) -> f64 {
    if x > -30.0 {
        ln(normal_cdf(x))
    } else {
        // Mills-ratio asymptote; erfc underflows here.
        let x2 = x * x;
        -0.5 * x2 - ln(-x) - 0.5 * LN_2PI + ln(1.0 - 1.0 / x2 + 3.0 / (x2 * x2))
    }
}

/// `1 / (1 + exp(-x))` without overflow.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    ln(p / (1.0 - p))
}

/// `log(sum(exp(xs)))`; `-inf` for an empty slice or all `-inf` entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + ln(xs.iter().map(|&x| exp(x - m)).sum::<f64>())
}

/// Normalizes log-weights into probabilities by max-subtraction.
///
/// Returns `None` when no weight is positive and finite.
pub fn normalize_log_weights(logw: &[f64]) -> Option<Vec<f64>> {
    let m = logw
        .iter()
        .copied()
        .filter(|w| !w.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return None;
    }
    let mut w: Vec<f64> = logw
        .iter()
        .map(|&x| if x.is_nan() { 0.0 } else { exp(x - m) })
        .collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    for wi in &mut w {
        *wi /= total;
    }
    Some(w)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with the `n - 1` divisor.
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    sqrt(ss / (xs.len() as f64 - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_ln_cdf_is_continuous_at_switch() {
        let a = normal_ln_cdf(-30.0 + 1e-9);
        let b = normal_ln_cdf(-30.0 - 1e-9);
        assert_relative_eq!(a, b, max_relative = 1e-6);
        assert_relative_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn log_sum_exp_handles_large_offsets() {
        let v = [1000.0, 1000.0];
        assert_relative_eq!(log_sum_exp(&v), 1000.0 + ln(2.0), epsilon = 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn normalization_rejects_all_neg_inf() {
        assert!(normalize_log_weights(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).is_none());
        let w = normalize_log_weights(&[-800.0, -800.0 + ln(3.0)]).unwrap();
        assert_relative_eq!(w[0], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn logistic_saturates_without_nan() {
        assert_eq!(logistic(1e6), 1.0);
        assert_eq!(logistic(-1e6), 0.0);
        assert_relative_eq!(logistic(logit(0.3)), 0.3, epsilon = 1e-14);
    }
}
