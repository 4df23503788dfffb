//! Ratio estimators of the weighted second-order mean mark.
//!
//! The single-realization estimator is
//!
//! ```text
//! μ̂_f(I, Φ, T) = Σ≠ z1 f(y1, y2) 1{(t1, t2) ∈ C(T, I)} / Σ≠ z1 1{(t1, t2) ∈ C(T, I)}
//! ```
//!
//! and the multi-realization estimators combine per-realization values with
//! weights: equal weights target the class-averaged mean mark `μ̃_f`, weights
//! proportional to the per-realization pair count target `μ_f`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::markfn::MarkFunction;
use crate::pattern::{
    displacement, for_each_pair, pair_count, Band, Bounds, MarkedPoint, PointPattern, Window,
};

/// Pair counts behind an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairCount {
    Single(u64),
    PerRealization(Vec<u64>),
}

impl PairCount {
    pub fn total(&self) -> u64 {
        match self {
            PairCount::Single(n) => *n,
            PairCount::PerRealization(v) => v.iter().sum(),
        }
    }
}

/// Outcome of an estimator. `value` is `None` when the estimate is undefined
/// (zero denominator, or every realization excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub estimator: String,
    pub value: Option<f64>,
    pub numerator: f64,
    pub denominator: f64,
    pub pair_count: PairCount,
    pub band: Band,
    /// Realizations left out of a multi-realization average because their
    /// own estimate was undefined.
    pub exclusions: usize,
    pub meta: BTreeMap<String, f64>,
}

impl EstimateResult {
    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }

    fn ratio(estimator: &str, band: Band, numerator: f64, denominator: f64, pairs: u64) -> Self {
        let value = (denominator != 0.0).then(|| numerator / denominator);
        Self {
            estimator: estimator.to_string(),
            value,
            numerator,
            denominator,
            pair_count: PairCount::Single(pairs),
            band,
            exclusions: 0,
            meta: BTreeMap::new(),
        }
    }
}

/// Accumulates `Σ num_term` and `Σ den_term` over qualifying pairs.
fn ratio_sums<F>(pattern: &PointPattern, win: &Window, band: &Band, term: F) -> Result<(f64, f64, u64)>
where
    F: Fn(&MarkedPoint, &MarkedPoint) -> Result<(f64, f64)>,
{
    let pts = pattern.points();
    let (mut num, mut den, mut n) = (0.0, 0.0, 0u64);
    let mut failure: Option<Error> = None;
    for_each_pair(pattern, win, band, |i, j| {
        if failure.is_some() {
            return;
        }
        match term(&pts[i], &pts[j]) {
            Ok((a, b)) if a.is_finite() && b.is_finite() => {
                num += a;
                den += b;
                n += 1;
            }
            Ok((a, b)) => {
                failure = Some(Error::NonFinite {
                    first: i,
                    second: j,
                    value: if a.is_finite() { b } else { a },
                })
            }
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok((num, den, n)),
    }
}

/// `μ̂_f(I, Φ, T) = α̂_f / α̂_1`, both sums weighted by the first point's `z`.
pub fn mu_hat(pattern: &PointPattern, win: &Window, band: &Band, f: &MarkFunction) -> Result<EstimateResult> {
    let (num, den, n) = ratio_sums(pattern, win, band, |p, q| Ok((p.z * f.eval(p.y, q.y), p.z)))?;
    Ok(EstimateResult::ratio("mu_hat", *band, num, den, n))
}

/// Conditional mean mark `α̂_{f·f_cond} / α̂_{f_cond}`.
pub fn mu_hat_cond(
    pattern: &PointPattern,
    win: &Window,
    band: &Band,
    f: &MarkFunction,
    f_cond: &MarkFunction,
) -> Result<EstimateResult> {
    let (num, den, n) = ratio_sums(pattern, win, band, |p, q| {
        let c = f_cond.eval(p.y, q.y);
        if c < 0.0 {
            return Err(invalid(format!(
                "conditioning function '{}' returned {c} < 0",
                f_cond.name()
            )));
        }
        Ok((p.z * f.eval(p.y, q.y) * c, p.z * c))
    })?;
    Ok(EstimateResult::ratio("mu_hat_cond", *band, num, den, n))
}

/// Smoothing kernels for [`mu_hat_kernel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Rectangular,
    Epanechnikov,
    Gaussian,
}

impl Kernel {
    /// Unnormalised kernel profile at `u = (r - dis) / h`; normalising
    /// constants cancel in the ratio.
    fn profile(self, u: f64) -> f64 {
        match self {
            Kernel::Rectangular => 1.0,
            Kernel::Epanechnikov => (1.0 - u * u).max(0.0),
            Kernel::Gaussian => (-0.5 * u * u).exp(),
        }
    }
}

/// Nadaraya–Watson estimate of the mean mark at displacement `r`.
///
/// The rectangular kernel with bandwidth `h` reproduces [`mu_hat`] on the
/// band `[r - h, r + h]` exactly. The gaussian kernel uses every pair with
/// the first point in the window; its denominator can only vanish through
/// underflow when all pairs are many bandwidths away from `r`.
pub fn mu_hat_kernel(
    pattern: &PointPattern,
    win: &Window,
    r: f64,
    f: &MarkFunction,
    kernel: Kernel,
    h: f64,
) -> Result<EstimateResult> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid(format!("bandwidth must be > 0, got {h}")));
    }
    if !r.is_finite() {
        return Err(invalid("kernel location r must be finite"));
    }
    let support = match kernel {
        Kernel::Gaussian => Band::for_dim(pattern.dim(), if pattern.dim() == 1 { f64::NEG_INFINITY } else { 0.0 }, f64::INFINITY)?,
        _ if pattern.dim() == 1 => Band::signed(r - h, r + h)?,
        _ => Band::absolute((r - h).max(0.0), (r + h).max(0.0))?,
    };
    let (num, den, n) = ratio_sums(pattern, win, &support, |p, q| {
        let k = match kernel {
            Kernel::Rectangular => 1.0,
            _ => kernel.profile((r - displacement(&p.location, &q.location)) / h),
        };
        Ok((p.z * f.eval(p.y, q.y) * k, p.z * k))
    })?;
    let mut out = EstimateResult::ratio("mu_hat_kernel", support, num, den, n);
    out.meta.insert("r".into(), r);
    out.meta.insert("bandwidth".into(), h);
    Ok(out)
}

/// Per-realization `mu_hat`, evaluated in parallel, returned in input order.
pub fn mu_hat_each(
    patterns: &[PointPattern],
    win: &Window,
    band: &Band,
    f: &MarkFunction,
) -> Result<Vec<EstimateResult>> {
    patterns
        .par_iter()
        .map(|p| mu_hat(p, win, band, f))
        .collect()
}

/// `Σ w_i μ̂_i / Σ w_i` over per-realization estimates. Undefined estimates
/// must carry weight zero.
pub fn weighted_average(estimates: &[EstimateResult], weights: &[f64]) -> Result<EstimateResult> {
    if estimates.is_empty() {
        return Err(invalid("need at least one realization"));
    }
    if estimates.len() != weights.len() {
        return Err(invalid(format!(
            "{} weights for {} realizations",
            weights.len(),
            estimates.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(invalid(format!("weights must be finite and >= 0, got {w}")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(invalid("weights sum to zero"));
    }
    let mut num = 0.0;
    for (i, (e, &w)) in estimates.iter().zip(weights).enumerate() {
        match e.value {
            Some(v) => num += w * v,
            None if w == 0.0 => {}
            None => {
                return Err(invalid(format!(
                    "realization {i} has an undefined estimate but weight {w}"
                )))
            }
        }
    }
    let counts = estimates.iter().map(|e| e.pair_count.total()).collect();
    Ok(EstimateResult {
        estimator: "mu_hat_weighted".into(),
        value: Some(num / total),
        numerator: num,
        denominator: total,
        pair_count: PairCount::PerRealization(counts),
        band: estimates[0].band,
        exclusions: 0,
        meta: BTreeMap::new(),
    })
}

/// Equally weighted mean of the defined per-realization estimates
/// (`μ̂_f^n`). Undefined realizations are excluded and counted.
pub fn mu_hat_n(patterns: &[PointPattern], win: &Window, band: &Band, f: &MarkFunction) -> Result<EstimateResult> {
    if patterns.is_empty() {
        return Err(invalid("need at least one realization"));
    }
    let each = mu_hat_each(patterns, win, band, f)?;
    let weights: Vec<f64> = each.iter().map(|e| if e.is_defined() { 1.0 } else { 0.0 }).collect();
    let excluded = weights.iter().filter(|w| **w == 0.0).count();
    let mut out = if excluded == each.len() {
        undefined_over(&each, *band)
    } else {
        weighted_average(&each, &weights)?
    };
    out.estimator = "mu_hat_n".into();
    out.exclusions = excluded;
    Ok(out)
}

fn undefined_over(each: &[EstimateResult], band: Band) -> EstimateResult {
    EstimateResult {
        estimator: String::new(),
        value: None,
        numerator: 0.0,
        denominator: 0.0,
        pair_count: PairCount::PerRealization(each.iter().map(|e| e.pair_count.total()).collect()),
        band,
        exclusions: each.len(),
        meta: BTreeMap::new(),
    }
}

/// Weighted combination `μ̂_f^{n,weighted}` with caller-supplied weights.
pub fn mu_hat_weighted(
    patterns: &[PointPattern],
    win: &Window,
    band: &Band,
    f: &MarkFunction,
    weights: &[f64],
) -> Result<EstimateResult> {
    if patterns.len() != weights.len() {
        return Err(invalid(format!(
            "{} weights for {} realizations",
            weights.len(),
            patterns.len()
        )));
    }
    let each = mu_hat_each(patterns, win, band, f)?;
    weighted_average(&each, weights)
}

/// `μ̂_f^α`: realizations weighted by their unweighted ordered-pair count in
/// the band. The `1 / v_T` normaliser cancels.
pub fn mu_hat_alpha(patterns: &[PointPattern], win: &Window, band: &Band, f: &MarkFunction) -> Result<EstimateResult> {
    if patterns.is_empty() {
        return Err(invalid("need at least one realization"));
    }
    let each = mu_hat_each(patterns, win, band, f)?;
    // For z ≢ 1 a realization can have pairs but zero z-weighted mass; such
    // realizations are excluded like in `mu_hat_n`.
    let weights: Vec<f64> = each
        .iter()
        .map(|e| if e.is_defined() { e.pair_count.total() as f64 } else { 0.0 })
        .collect();
    let excluded = each
        .iter()
        .filter(|e| !e.is_defined() && e.pair_count.total() > 0)
        .count();
    let mut out = if weights.iter().all(|w| *w == 0.0) {
        undefined_over(&each, *band)
    } else {
        weighted_average(&each, &weights)?
    };
    out.estimator = "mu_hat_alpha".into();
    out.exclusions = excluded;
    Ok(out)
}

/// A concatenated pattern together with the window it must be evaluated on.
#[derive(Debug, Clone)]
pub struct Concatenation {
    pub pattern: PointPattern,
    pub window: Window,
}

/// Lays one-dimensional realizations end to end so that `mu_hat` of the
/// result equals `mu_hat_weighted` of the parts.
///
/// Consecutive simulation bounds are separated by a gap larger than the band
/// reach, so no pair straddles two realizations. Points of realization `i`
/// keep their location relative to their own bounds; their weight marks are
/// multiplied by `w_i^rel / α̂_1(I, Φ_i, T)` (zero if `w_i = 0`), and points
/// outside their own estimation window get `z = 0` so they only act as
/// second points of a pair. Equality holds up to the rounding of the shifted
/// coordinates.
pub fn concat_patterns(
    patterns: &[PointPattern],
    win: &Window,
    band: &Band,
    weights: &[f64],
) -> Result<Concatenation> {
    if patterns.is_empty() {
        return Err(invalid("need at least one realization"));
    }
    if patterns.len() != weights.len() {
        return Err(invalid("one weight per realization required"));
    }
    if win.dim() != 1 || patterns.iter().any(|p| p.dim() != 1) {
        return Err(invalid("concatenation is only defined for one-dimensional patterns"));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(invalid("weights must be finite and >= 0"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(invalid("weights sum to zero"));
    }
    let gap = 2.0 * band.reach() + 1.0;
    if !(gap > band.reach()) || !gap.is_finite() {
        return Err(Error::InvalidInput(format!(
            "cannot separate realizations for band reach {}",
            band.reach()
        )));
    }
    let const_one = MarkFunction::const_one();
    let denominators: Vec<f64> = patterns
        .par_iter()
        .map(|p| mu_hat(p, win, band, &const_one).map(|e| e.denominator))
        .collect::<Result<_>>()?;

    let (w_lo, w_hi) = (win.origin()[0], win.origin()[0] + win.extent()[0]);
    let mut points = Vec::new();
    let mut cursor = 0.0;
    let mut first_window_start = None;
    let mut last_window_end = 0.0;
    for (i, p) in patterns.iter().enumerate() {
        let scale = if weights[i] == 0.0 {
            0.0
        } else if denominators[i] == 0.0 {
            return Err(invalid(format!(
                "realization {i} has no pairs in the band but weight {}",
                weights[i]
            )));
        } else {
            (weights[i] / total) / denominators[i]
        };
        let lo = p.bounds().lo()[0];
        let shift = cursor - lo;
        for q in p.points() {
            let inside = win.contains(&q.location);
            points.push(MarkedPoint {
                location: vec![q.location[0] + shift],
                y: q.y,
                z: if inside { q.z * scale } else { 0.0 },
            });
        }
        first_window_start.get_or_insert(w_lo + shift);
        last_window_end = w_hi + shift;
        cursor += p.bounds().hi()[0] - lo + gap;
    }
    let end = cursor - gap;
    let start = first_window_start.unwrap_or(0.0);
    // Ψ is evaluated on one window covering every realization's own window;
    // points outside their own window carry zero weight.
    let bounds = Bounds::interval(0.0, end.max(last_window_end))?;
    let pattern = PointPattern::new(1, points, bounds)?;
    let window = Window::interval(last_window_end - start)?.translated(&[-start])?;
    Ok(Concatenation { pattern, window })
}

/// Convenience: unweighted pair counts per realization.
pub fn pair_counts(patterns: &[PointPattern], win: &Window, band: &Band) -> Result<Vec<u64>> {
    patterns.par_iter().map(|p| pair_count(p, win, band)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markfn::indicator_pair;

    fn fixture() -> PointPattern {
        PointPattern::new(
            1,
            vec![
                MarkedPoint::at(0.0, 2.0),
                MarkedPoint::at(0.5, 4.0),
                MarkedPoint::at(2.0, 6.0),
            ],
            Bounds::interval(0.0, 3.0).unwrap(),
        )
        .unwrap()
    }

    fn win() -> Window {
        Window::interval(3.0).unwrap()
    }

    fn band() -> Band {
        Band::signed(0.4, 0.6).unwrap()
    }

    #[test]
    fn mu_hat_examples() {
        let e = mu_hat(&fixture(), &win(), &band(), &MarkFunction::first()).unwrap();
        assert_eq!(e.value, Some(2.0));
        assert_eq!(e.pair_count, PairCount::Single(1));
        let empty = mu_hat(&fixture(), &win(), &Band::signed(10.0, 11.0).unwrap(), &MarkFunction::first()).unwrap();
        assert_eq!(empty.value, None);
        let c = fixture().with_marks(&[7.5, 7.5, 7.5]).unwrap();
        let all = Band::signed(-3.0, 3.0).unwrap();
        assert_eq!(mu_hat(&c, &win(), &all, &MarkFunction::first()).unwrap().value, Some(7.5));
    }

    #[test]
    fn mu_hat_cond_examples() {
        let p = fixture();
        let f = MarkFunction::first();
        let plain = mu_hat(&p, &win(), &band(), &f).unwrap();
        let vac = mu_hat_cond(&p, &win(), &band(), &f, &MarkFunction::const_one()).unwrap();
        assert_eq!(plain.value, vac.value);
        let none = indicator_pair(100.0, 200.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_eq!(mu_hat_cond(&p, &win(), &band(), &f, &none).unwrap().value, None);

        // Two qualifying pairs with first marks 2 and 4; condition y1 > 3.
        let two = PointPattern::new(
            1,
            vec![
                MarkedPoint::at(0.0, 2.0),
                MarkedPoint::at(0.5, 9.0),
                MarkedPoint::at(2.0, 4.0),
                MarkedPoint::at(2.5, 9.0),
            ],
            Bounds::interval(0.0, 3.0).unwrap(),
        )
        .unwrap();
        let above3 = MarkFunction::of_first("y1>3", |y| if y > 3.0 { 1.0 } else { 0.0 });
        let w = Window::interval(2.2).unwrap();
        assert_eq!(pair_count(&two, &w, &band()).unwrap(), 2);
        assert_eq!(mu_hat_cond(&two, &w, &band(), &f, &above3).unwrap().value, Some(4.0));
        let neg = MarkFunction::const_one().times(&MarkFunction::of_first("neg", |_| -1.0));
        assert!(mu_hat_cond(&two, &w, &band(), &f, &neg).is_err());
    }

    #[test]
    fn kernel_examples() {
        let p = fixture();
        let f = MarkFunction::first();
        let rect = mu_hat_kernel(&p, &win(), 0.5, &f, Kernel::Rectangular, 0.1).unwrap();
        let plain = mu_hat(&p, &win(), &Band::signed(0.5 - 0.1, 0.5 + 0.1).unwrap(), &f).unwrap();
        assert_eq!(rect.value, plain.value);
        assert_eq!(rect.value, Some(2.0));

        // Only one qualifying pair in the window: gaussian ratio is f(y1, y2).
        let single = PointPattern::new(
            1,
            vec![MarkedPoint::at(0.0, 3.0), MarkedPoint::at(0.9, 8.0)],
            Bounds::interval(0.0, 1.0).unwrap(),
        )
        .unwrap();
        let w = Window::interval(0.5).unwrap();
        let g = mu_hat_kernel(&single, &w, -0.4, &MarkFunction::product(), Kernel::Gaussian, 0.3).unwrap();
        assert!((g.value.unwrap() - 24.0).abs() < 1e-12);

        let wide = mu_hat_kernel(&p, &win(), 0.0, &f, Kernel::Rectangular, 10.0).unwrap();
        let full = mu_hat(&p, &win(), &Band::signed(-10.0, 10.0).unwrap(), &f).unwrap();
        assert_eq!(wide.value, full.value);
        assert!(mu_hat_kernel(&p, &win(), 0.5, &f, Kernel::Gaussian, 0.0).is_err());
        let ep = mu_hat_kernel(&p, &win(), 0.5, &f, Kernel::Epanechnikov, 0.1).unwrap();
        assert!((ep.value.unwrap() - 2.0).abs() < 1e-12);
    }

    fn with_values(values: &[Option<f64>]) -> Vec<EstimateResult> {
        values
            .iter()
            .map(|v| EstimateResult::ratio("mu_hat", band(), v.unwrap_or(0.0), if v.is_some() { 1.0 } else { 0.0 }, 1))
            .collect()
    }

    #[test]
    fn weighted_average_rules() {
        let e = with_values(&[Some(2.0), Some(4.0)]);
        assert_eq!(weighted_average(&e, &[1.0, 1.0]).unwrap().value, Some(3.0));
        assert_eq!(weighted_average(&e, &[1.0, 0.0]).unwrap().value, Some(2.0));
        assert_eq!(weighted_average(&e, &[1.0, 3.0]).unwrap().value, Some(3.5));
        assert!(weighted_average(&e, &[0.0, 0.0]).is_err());
        assert!(weighted_average(&e, &[1.0]).is_err());
        let u = with_values(&[Some(2.0), None]);
        assert!(weighted_average(&u, &[1.0, 1.0]).is_err());
        assert_eq!(weighted_average(&u, &[1.0, 0.0]).unwrap().value, Some(2.0));
    }

    #[test]
    fn mu_hat_n_excludes_undefined() {
        let a = fixture();
        let b = fixture().with_marks(&[4.0, 4.0, 4.0]).unwrap();
        let c = PointPattern::new(1, vec![MarkedPoint::at(1.0, 1.0)], Bounds::interval(0.0, 3.0).unwrap()).unwrap();
        let f = MarkFunction::first();
        let r = mu_hat_n(&[a.clone(), b.clone(), c.clone()], &win(), &band(), &f).unwrap();
        assert_eq!(r.value, Some(3.0));
        assert_eq!(r.exclusions, 1);
        let one = mu_hat_n(std::slice::from_ref(&a), &win(), &band(), &f).unwrap();
        assert_eq!(one.value, mu_hat(&a, &win(), &band(), &f).unwrap().value);
        let none = mu_hat_n(&[c.clone(), c], &win(), &band(), &f).unwrap();
        assert_eq!((none.value, none.exclusions), (None, 2));
    }

    #[test]
    fn mu_hat_alpha_weights_by_pairs() {
        // Realization 1: one pair with first mark 2. Realization 2: three
        // pairs, all first marks 4.
        let r1 = fixture();
        let r2 = PointPattern::new(
            1,
            vec![
                MarkedPoint::at(0.0, 4.0),
                MarkedPoint::at(0.5, 4.0),
                MarkedPoint::at(1.0, 4.0),
                MarkedPoint::at(1.5, 4.0),
            ],
            Bounds::interval(0.0, 3.0).unwrap(),
        )
        .unwrap();
        let f = MarkFunction::first();
        assert_eq!(pair_count(&r2, &win(), &band()).unwrap(), 3);
        let a = mu_hat_alpha(&[r1.clone(), r2], &win(), &band(), &f).unwrap();
        assert_eq!(a.value, Some(3.5));
        let single = mu_hat_alpha(std::slice::from_ref(&r1), &win(), &band(), &f).unwrap();
        assert_eq!(single.value, Some(2.0));
        let same = mu_hat_alpha(&[r1.clone(), r1.clone(), r1], &win(), &band(), &f).unwrap();
        assert_eq!(same.value, Some(2.0));
    }

    #[test]
    fn concatenation_matches_weighted_estimator() {
        let r1 = fixture();
        let r2 = fixture().with_marks(&[1.0, 3.0, 5.0]).unwrap();
        let f = MarkFunction::first();
        let weights = [0.25, 1.75];
        let c = concat_patterns(&[r1.clone(), r2.clone()], &win(), &band(), &weights).unwrap();
        let lhs = mu_hat(&c.pattern, &c.window, &band(), &f).unwrap().value.unwrap();
        let rhs = mu_hat_weighted(&[r1.clone(), r2], &win(), &band(), &f, &weights)
            .unwrap()
            .value
            .unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        let one = concat_patterns(std::slice::from_ref(&r1), &win(), &band(), &[1.0]).unwrap();
        assert_eq!(
            mu_hat(&one.pattern, &one.window, &band(), &f).unwrap().value,
            mu_hat(&r1, &win(), &band(), &f).unwrap().value
        );
        let twin = concat_patterns(&[r1.clone(), r1.clone()], &win(), &band(), &[1.0, 1.0]).unwrap();
        assert_eq!(mu_hat(&twin.pattern, &twin.window, &band(), &f).unwrap().value, Some(2.0));
        let two_d = PointPattern::empty(Bounds::cube(2, 0.0, 1.0).unwrap());
        assert!(concat_patterns(&[two_d], &Window::cube(2, 1.0).unwrap(), &Band::absolute(0.0, 1.0).unwrap(), &[1.0]).is_err());
    }
}
