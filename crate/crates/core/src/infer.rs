//! Normal-approximation inference for the conditional mean mark of
//! one-dimensional m-dependent random field models, and convergence curves
//! over nested windows.
//!
//! For a first-only `f` and threshold `u ≥ 0` let `f_u = (f − u)_+` and
//! `f_{cond,u} = 1{f > u}`. The centred sum
//!
//! ```text
//! α̂*(I, Φ, T) = Σ≠ (f_u(y1) − μ_c) · f_{cond,u}(y1) · 1{(t1, t2) ∈ C(T, I)}
//! ```
//!
//! normalised by `√α̂_{f_{cond,u}}(I, Φ, T)` is asymptotically `N(0, s)`, where
//! `s = lim Var[α̂*] / (λ_u T)` and `λ_u` is the expected exceedance pair count
//! per unit length. Intervals for `μ_c` follow as
//! `μ̂ ± z √(s / (λ_u T))`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::est::{mu_hat, EstimateResult};
use crate::markfn::{threshold, MarkFunction, ThresholdFamily};
use crate::pattern::{for_each_pair, Band, PointPattern, Window};
use crate::stats;

/// Inputs shared by the CLT operations.
#[derive(Debug, Clone)]
pub struct CltConfig {
    pub band: Band,
    pub base_f: MarkFunction,
    pub u: f64,
    pub window: Window,
}

impl CltConfig {
    pub fn new(band: Band, base_f: MarkFunction, u: f64, window: Window) -> Result<Self> {
        threshold(&base_f, u)?;
        if window.dim() != 1 || !band.is_signed() {
            return Err(invalid("the CLT is implemented for one-dimensional patterns only"));
        }
        Ok(Self {
            band,
            base_f,
            u,
            window,
        })
    }

    fn family(&self) -> ThresholdFamily {
        threshold(&self.base_f, self.u).expect("validated in new")
    }
}

/// Centering constant `μ_{f_u, f_cond,u}(I)` for the CLT statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Known true value, e.g. from an oracle in simulation studies.
    Oracle(f64),
    /// The realization's own conditional mean mark. This makes the centred
    /// sum vanish identically; only the interval is informative.
    PlugIn,
}

/// Condition-1 diagnostics of a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionDiagnostics {
    /// Smallest distance between consecutive points (`d0` lower bound).
    pub min_distance: Option<f64>,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltResult {
    /// `α̂* / √α̂_{f_cond,u}`; `None` without exceedance pairs.
    pub centered_stat: Option<f64>,
    pub alpha_star: f64,
    pub alpha_cond: f64,
    pub center: f64,
    /// Point estimate of the conditional mean mark.
    pub mu_hat: Option<f64>,
    pub lambda_u_hat: f64,
    /// Batch-means estimate of `s` from this realization alone.
    pub s_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub level: f64,
    pub diagnostics: ConditionDiagnostics,
}

/// Per-pair contributions summed by first point: returns, for every window
/// point with exceedance pairs, `(t1, Σ (f_u(y1) − center), count)`.
fn exceedance_terms(
    pattern: &PointPattern,
    cfg: &CltConfig,
    center: f64,
) -> Result<Vec<(f64, f64, f64)>> {
    if pattern.dim() != 1 {
        return Err(invalid("the CLT is implemented for one-dimensional patterns only"));
    }
    let fam = cfg.family();
    let pts = pattern.points();
    let mut per_point = vec![(0.0f64, 0.0f64); pts.len()];
    for_each_pair(pattern, &cfg.window, &cfg.band, |i, _| {
        let y = pts[i].y;
        let ind = fam.indicator(y);
        if ind > 0.0 {
            per_point[i].0 += (fam.excess(y) - center) * ind;
            per_point[i].1 += ind;
        }
    })?;
    Ok(per_point
        .into_iter()
        .enumerate()
        .filter(|(_, (_, c))| *c > 0.0)
        .map(|(i, (s, c))| (pts[i].location[0], s, c))
        .collect())
}

/// Centred exceedance sum `α̂*`.
pub fn alpha_star(
    pattern: &PointPattern,
    win: &Window,
    band: &Band,
    base_f: &MarkFunction,
    u: f64,
    mu_cond_ref: f64,
) -> Result<f64> {
    let cfg = CltConfig::new(*band, base_f.clone(), u, win.clone())?;
    Ok(exceedance_terms(pattern, &cfg, mu_cond_ref)?
        .iter()
        .map(|t| t.1)
        .sum())
}

/// Exceedance pair count `α̂_{f_cond,u}`.
pub fn alpha_cond(pattern: &PointPattern, win: &Window, band: &Band, base_f: &MarkFunction, u: f64) -> Result<f64> {
    let cfg = CltConfig::new(*band, base_f.clone(), u, win.clone())?;
    Ok(exceedance_terms(pattern, &cfg, 0.0)?.iter().map(|t| t.2).sum())
}

/// Conditional mean mark `α̂_{f_u·f_cond,u} / α̂_{f_cond,u}`.
pub fn mu_hat_exceedance(pattern: &PointPattern, cfg: &CltConfig) -> Result<Option<f64>> {
    let terms = exceedance_terms(pattern, cfg, 0.0)?;
    let (num, den) = terms.iter().fold((0.0, 0.0), |(a, b), t| (a + t.1, b + t.2));
    Ok((den > 0.0).then(|| num / den))
}

pub fn condition_diagnostics(pattern: &PointPattern) -> ConditionDiagnostics {
    let mut xs: Vec<f64> = pattern.points().iter().map(|p| p.location[0]).collect();
    xs.sort_by(f64::total_cmp);
    let min_distance = xs.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
    ConditionDiagnostics {
        min_distance,
        n_points: xs.len(),
    }
}

/// Statistic, point estimate and a single-realization interval.
///
/// `s_hat` is a batch-means estimate: the window is cut into `B ≈ √n`
/// blocks, the centred sum is accumulated per block, and
/// `s_hat = B · Var(block sums) / α̂_{f_cond,u}`.
pub fn clt_statistic(
    pattern: &PointPattern,
    cfg: &CltConfig,
    centering: Centering,
    level: f64,
) -> Result<CltResult> {
    let raw = exceedance_terms(pattern, cfg, 0.0)?;
    let (num, alpha_cond) = raw.iter().fold((0.0, 0.0), |(a, b), t| (a + t.1, b + t.2));
    let mu = (alpha_cond > 0.0).then(|| num / alpha_cond);
    let center = match centering {
        Centering::Oracle(c) => c,
        Centering::PlugIn => mu.unwrap_or(0.0),
    };
    let terms = exceedance_terms(pattern, cfg, center)?;
    let alpha_star: f64 = terms.iter().map(|t| t.1).sum();
    let t_len = cfg.window.volume();
    let lambda_u_hat = alpha_cond / t_len;

    let s_hat = batch_means_s(&terms, &cfg.window, alpha_cond);
    let (ci_lo, ci_hi) = match mu {
        Some(m) if lambda_u_hat > 0.0 => confidence_interval(m, s_hat, lambda_u_hat, t_len, level)?,
        _ => (f64::NAN, f64::NAN),
    };
    Ok(CltResult {
        centered_stat: (alpha_cond > 0.0).then(|| alpha_star / alpha_cond.sqrt()),
        alpha_star,
        alpha_cond,
        center,
        mu_hat: mu,
        lambda_u_hat,
        s_hat,
        ci_lo,
        ci_hi,
        level,
        diagnostics: condition_diagnostics(pattern),
    })
}

fn batch_means_s(terms: &[(f64, f64, f64)], win: &Window, alpha_cond: f64) -> f64 {
    if alpha_cond <= 0.0 || terms.len() < 4 {
        return 0.0;
    }
    let blocks = (terms.len() as f64).sqrt().floor().max(2.0) as usize;
    let (lo, len) = (win.origin()[0], win.extent()[0]);
    let mut sums = vec![0.0; blocks];
    for &(t, s, _) in terms {
        let b = (((t - lo) / len) * blocks as f64).floor() as usize;
        sums[b.min(blocks - 1)] += s;
    }
    blocks as f64 * stats::variance(&sums) / alpha_cond
}

/// Estimate of `s` across independent realizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SEstimate {
    pub s_hat: f64,
    pub lambda_u_hat: f64,
    pub center: f64,
    pub n: usize,
}

/// `s_hat = Var(α̂*_i) / (λ̂_u T)` over `n ≥ 30` realizations, centred at the
/// pooled conditional mean mark.
pub fn estimate_s(
    patterns: &[PointPattern],
    win: &Window,
    band: &Band,
    base_f: &MarkFunction,
    u: f64,
) -> Result<SEstimate> {
    estimate_s_with(patterns, win, band, base_f, u, None)
}

/// [`estimate_s`] with an explicit centering constant.
pub fn estimate_s_with(
    patterns: &[PointPattern],
    win: &Window,
    band: &Band,
    base_f: &MarkFunction,
    u: f64,
    center: Option<f64>,
) -> Result<SEstimate> {
    use rayon::prelude::*;
    if patterns.len() < 30 {
        return Err(invalid(format!(
            "estimate_s needs at least 30 realizations, got {}",
            patterns.len()
        )));
    }
    let cfg = CltConfig::new(*band, base_f.clone(), u, win.clone())?;
    let sums: Vec<(f64, f64)> = patterns
        .par_iter()
        .map(|p| {
            let terms = exceedance_terms(p, &cfg, 0.0)?;
            Ok(terms.iter().fold((0.0, 0.0), |(a, b), t| (a + t.1, b + t.2)))
        })
        .collect::<Result<_>>()?;
    let total_cond: f64 = sums.iter().map(|s| s.1).sum();
    let center = match center {
        Some(c) => c,
        None if total_cond > 0.0 => sums.iter().map(|s| s.0).sum::<f64>() / total_cond,
        None => 0.0,
    };
    // α̂*_i = α̂_{f_u} − center · α̂_{f_cond,u}
    let stars: Vec<f64> = sums.iter().map(|(a, c)| a - center * c).collect();
    let t_len = win.volume();
    let lambda_u_hat = total_cond / (patterns.len() as f64 * t_len);
    let s_hat = if lambda_u_hat > 0.0 {
        stats::variance(&stars) / (lambda_u_hat * t_len)
    } else {
        0.0
    };
    Ok(SEstimate {
        s_hat,
        lambda_u_hat,
        center,
        n: patterns.len(),
    })
}

/// `mu_point ± z_{(1+level)/2} · √(s_hat / (λ̂_u T))`.
pub fn confidence_interval(mu_point: f64, s_hat: f64, lambda_u_hat: f64, t: f64, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("level must be in (0, 1), got {level}")));
    }
    if !(s_hat >= 0.0) {
        return Err(invalid(format!("s_hat must be >= 0, got {s_hat}")));
    }
    if !(lambda_u_hat > 0.0) || !(t > 0.0) {
        return Err(invalid("lambda_u_hat and T must be > 0"));
    }
    let z = stats::normal_quantile(0.5 * (1.0 + level))?;
    let half = z * (s_hat / (lambda_u_hat * t)).sqrt();
    Ok((mu_point - half, mu_point + half))
}

/// Threshold schedule `u_T = F⁻¹(1 − 1/ln T)` for normal marks with `f(y) = y`,
/// floored at zero.
pub fn normal_quantile_threshold(mean: f64, sd: f64, t: f64) -> Result<f64> {
    if !(t > std::f64::consts::E) {
        return Err(invalid("quantile schedule needs T > e"));
    }
    let q = stats::normal_quantile(1.0 - 1.0 / t.ln())?;
    Ok((mean + sd * q).max(0.0))
}

/// One point of a convergence curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub estimate: EstimateResult,
}

/// `mu_hat` on the nested windows `[0, T_k]^d`. The pattern should be
/// simulated on the buffered largest window.
pub fn convergence_diagnostic(
    pattern: &PointPattern,
    band: &Band,
    f: &MarkFunction,
    window_sizes: &[f64],
) -> Result<Vec<CurvePoint>> {
    if window_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("window sizes must be strictly increasing"));
    }
    window_sizes
        .iter()
        .map(|&t| {
            let win = Window::cube(pattern.dim(), t)?;
            Ok(CurvePoint {
                t,
                estimate: mu_hat(pattern, &win, band, f)?,
            })
        })
        .collect()
}
