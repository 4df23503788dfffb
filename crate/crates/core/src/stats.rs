//! Sample summaries used by the inference module and the experiment runner.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

fn central_moment(xs: &[f64], k: i32) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(k)).sum::<f64>() / xs.len() as f64
}

/// Moment skewness `m3 / m2^{3/2}`.
pub fn skewness(xs: &[f64]) -> f64 {
    central_moment(xs, 3) / central_moment(xs, 2).powf(1.5)
}

/// Excess kurtosis `m4 / m2² − 3`.
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    central_moment(xs, 4) / central_moment(xs, 2).powi(2) - 3.0
}

pub fn rmse(xs: &[f64], target: f64) -> f64 {
    (xs.iter().map(|x| (x - target) * (x - target)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("quantile level must be in (0, 1), got {p}")));
    }
    Ok(standard_normal().inverse_cdf(p))
}

pub fn normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

/// Kolmogorov–Smirnov statistic and asymptotic p-value of `xs` against the
/// normal law with the sample mean and standard deviation.
pub fn ks_normal(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(invalid("KS test needs at least two values"));
    }
    let (m, s) = (mean(xs), std_dev(xs));
    if !(s > 0.0) {
        return Err(invalid("KS test against a degenerate sample"));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let c = normal_cdf((x - m) / s);
            (c - i as f64 / n).max((i as f64 + 1.0) / n - c)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    Ok((d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)))
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Delete-one jackknife standard error of `stat` over `n` units.
pub fn jackknife_se<F>(n: usize, stat: F) -> f64
where
    F: Fn(usize) -> f64,
{
    if n < 2 {
        return 0.0;
    }
    let loo: Vec<f64> = (0..n).map(stat).collect();
    let m = mean(&loo);
    let nf = n as f64;
    ((nf - 1.0) / nf * loo.iter().map(|v| (v - m) * (v - m)).sum::<f64>()).sqrt()
}
