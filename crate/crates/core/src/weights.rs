//! Weight strategies for combining per-realization estimates.
//!
//! Weights only enter through their relative sizes `w_i / Σ w_k`, so every
//! strategy is free to drop common positive factors.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::linalg::{cholesky, cholesky_solve, is_symmetric};
use crate::pattern::{displacement, neighbour_counts, pair_count, Band, PointPattern, Window};
use crate::sim::FiniteRangeCovariance;

type CustomFn = Arc<dyn Fn(&PointPattern, &Window, &Band) -> f64 + Send + Sync>;

/// How realizations are weighted.
#[derive(Clone)]
pub enum WeightStrategy {
    /// `w_i = 1`.
    Equal,
    /// `w_i = α̂^{(2)}(C(T, I), Φ_i) / v_T`, the ordered-pair count per unit
    /// volume.
    AlphaPairs,
    /// `w_i = N_i / v_T` with `N_i` the number of points in the window. The
    /// mark variance of the iid-on-a-grid setting is a common factor and is
    /// dropped.
    CountBased,
    /// `w_i = 1 / Var[μ̂_f(I, Φ_i, T) | ground process]` for marks
    /// `f(Y(t))` with covariance `cov` and variance `var_f`.
    RfConditionalVariance {
        cov: FiniteRangeCovariance,
        var_f: f64,
    },
    Custom { name: String, weight: CustomFn },
}

impl fmt::Debug for WeightStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightStrategy::RfConditionalVariance { cov, var_f } => f
                .debug_struct("RfConditionalVariance")
                .field("cov", cov)
                .field("var_f", var_f)
                .finish(),
            WeightStrategy::Custom { name, .. } => write!(f, "Custom({name})"),
            other => f.write_str(other.name()),
        }
    }
}

impl WeightStrategy {
    pub fn name(&self) -> &str {
        match self {
            WeightStrategy::Equal => "equal",
            WeightStrategy::AlphaPairs => "alpha",
            WeightStrategy::CountBased => "count",
            WeightStrategy::RfConditionalVariance { .. } => "rfvar",
            WeightStrategy::Custom { name, .. } => name,
        }
    }

    pub fn custom<F>(name: impl Into<String>, weight: F) -> Self
    where
        F: Fn(&PointPattern, &Window, &Band) -> f64 + Send + Sync + 'static,
    {
        WeightStrategy::Custom {
            name: name.into(),
            weight: Arc::new(weight),
        }
    }

    /// Parses the CLI flag values `equal`, `alpha`, `count`, `rfvar`. `rfvar`
    /// needs the mark covariance.
    pub fn from_flag(flag: &str, cov: Option<FiniteRangeCovariance>) -> Result<Self> {
        match flag {
            "equal" => Ok(WeightStrategy::Equal),
            "alpha" => Ok(WeightStrategy::AlphaPairs),
            "count" => Ok(WeightStrategy::CountBased),
            "rfvar" => {
                let cov = cov.ok_or_else(|| invalid("rfvar weights need a covariance model"))?;
                Ok(WeightStrategy::RfConditionalVariance {
                    cov,
                    var_f: cov.variance,
                })
            }
            other => Err(invalid(format!("unknown weight strategy '{other}'"))),
        }
    }
}

/// One weight per realization, in input order.
pub fn compute_weights(
    strategy: &WeightStrategy,
    patterns: &[PointPattern],
    win: &Window,
    band: &Band,
) -> Result<Vec<f64>> {
    if patterns.is_empty() {
        return Err(invalid("need at least one realization"));
    }
    let v_t = win.volume();
    let weights: Vec<f64> = match strategy {
        WeightStrategy::Equal => vec![1.0; patterns.len()],
        WeightStrategy::AlphaPairs => patterns
            .par_iter()
            .map(|p| pair_count(p, win, band).map(|n| n as f64 / v_t))
            .collect::<Result<_>>()?,
        WeightStrategy::CountBased => patterns
            .iter()
            .map(|p| p.count_in(win) as f64 / v_t)
            .collect(),
        WeightStrategy::RfConditionalVariance { cov, var_f } => patterns
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let v = rf_conditional_variance(p, win, band, |h| cov.eval(h), *var_f)?;
                Ok(match v {
                    Some(v) if v > 0.0 => 1.0 / v,
                    _ => {
                        log::debug!("realization {i}: no qualifying pairs, rfvar weight set to 0");
                        0.0
                    }
                })
            })
            .collect::<Result<_>>()?,
        WeightStrategy::Custom { weight, .. } => {
            patterns.iter().map(|p| weight(p, win, band)).collect()
        }
    };
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(invalid(format!(
            "strategy '{}' produced an invalid weight {w}",
            strategy.name()
        )));
    }
    Ok(weights)
}

/// Conditional variance of `μ̂_f(I, Φ, T)` given the point locations, for
/// marks `f(Y(t))` of a stationary field independent of the locations:
///
/// ```text
/// Σ_{t1} Σ_{s1} Cov[f(Y(t1)), f(Y(s1))] n(t1) n(s1) / (Σ_{t1} n(t1))²
/// ```
///
/// with `t1, s1` ranging over window points and `n(t)` the number of band
/// neighbours of `t`. `cov` maps distance to covariance; `var_f` is used on
/// the diagonal and must equal `cov(0)`. Returns `None` without qualifying
/// pairs.
pub fn rf_conditional_variance<C>(
    pattern: &PointPattern,
    win: &Window,
    band: &Band,
    cov: C,
    var_f: f64,
) -> Result<Option<f64>>
where
    C: Fn(f64) -> f64,
{
    let c0 = cov(0.0);
    if (c0 - var_f).abs() > 1e-12 * var_f.abs().max(1.0) {
        return Err(invalid(format!("cov(0) = {c0} differs from var_f = {var_f}")));
    }
    let counts: Vec<(usize, f64)> = neighbour_counts(pattern, win, band)?
        .into_iter()
        .filter(|(_, n)| *n > 0)
        .map(|(i, n)| (i, n as f64))
        .collect();
    let total: f64 = counts.iter().map(|(_, n)| n).sum();
    if total == 0.0 {
        return Ok(None);
    }
    let pts = pattern.points();
    let mut num = 0.0;
    for (a, &(i, ni)) in counts.iter().enumerate() {
        num += var_f * ni * ni;
        for &(j, nj) in &counts[..a] {
            let h = displacement(&pts[i].location, &pts[j].location).abs();
            num += 2.0 * cov(h) * ni * nj;
        }
    }
    Ok(Some(num / (total * total)))
}

/// Best linear unbiased combination weights `Σ⁻¹1 / (1ᵀΣ⁻¹1)` for
/// observations with covariance `Σ`. Fails with the order of the first
/// non-positive leading minor if `Σ` is not positive definite.
pub fn blue_weights(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = cov.nrows();
    if n == 0 || cov.ncols() != n {
        return Err(invalid("covariance matrix must be square and non-empty"));
    }
    if !is_symmetric(cov, 1e-12) {
        return Err(invalid("covariance matrix is not symmetric"));
    }
    let l = cholesky(cov)?;
    let x = cholesky_solve(&l, &DVector::from_element(n, 1.0));
    let s: f64 = x.iter().sum();
    if !(s.is_finite()) || s == 0.0 {
        return Err(invalid("degenerate BLUE normalisation"));
    }
    Ok(x.iter().map(|v| v / s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{Bounds, MarkedPoint};

    fn pattern(ts: &[f64], hi: f64) -> PointPattern {
        PointPattern::new(
            1,
            ts.iter().map(|&t| MarkedPoint::at(t, 0.0)).collect(),
            Bounds::interval(0.0, hi).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn simple_strategies() {
        let win = Window::interval(2.0).unwrap();
        let band = Band::signed(0.5, 1.5).unwrap();
        let p1 = pattern(&[0.0, 1.0], 2.0);
        let p2 = pattern(&[0.0, 1.0, 2.0, 3.0], 3.0);
        let ps = [p1.clone(), p2.clone(), p1.clone()];
        assert_eq!(compute_weights(&WeightStrategy::Equal, &ps, &win, &band).unwrap(), vec![1.0; 3]);
        // Pair counts 1 and 3.
        assert_eq!(
            compute_weights(&WeightStrategy::AlphaPairs, &ps[..2], &win, &band).unwrap(),
            vec![0.5, 1.5]
        );
        let c = compute_weights(&WeightStrategy::CountBased, &ps[..2], &win, &band).unwrap();
        assert_eq!(c, vec![1.0, 1.5]);
        let custom = WeightStrategy::custom("len", |p, _, _| p.len() as f64);
        assert_eq!(compute_weights(&custom, &ps[..2], &win, &band).unwrap(), vec![2.0, 4.0]);
        let neg = WeightStrategy::custom("neg", |_, _, _| -1.0);
        assert!(compute_weights(&neg, &ps, &win, &band).is_err());
        assert!(WeightStrategy::from_flag("rfvar", None).is_err());
        assert_eq!(WeightStrategy::from_flag("count", None).unwrap().name(), "count");
    }

    #[test]
    fn count_based_weights_follow_point_counts() {
        // Ten and twenty points on a window of volume 2.
        let win = Window::interval(2.0).unwrap();
        let band = Band::signed(0.0, 1.0).unwrap();
        let a = pattern(&(0..10).map(|i| i as f64 * 0.2).collect::<Vec<_>>(), 2.0);
        let b = pattern(&(0..20).map(|i| i as f64 * 0.1).collect::<Vec<_>>(), 2.0);
        let w = compute_weights(&WeightStrategy::CountBased, &[a, b], &win, &band).unwrap();
        assert_eq!(w, vec![5.0, 10.0]);
    }

    #[test]
    fn rf_conditional_variance_examples() {
        let win = Window::interval(10.0).unwrap();
        let band = Band::signed(0.5, 1.5).unwrap();
        // One window point with three neighbours beyond the window edge.
        let single = PointPattern::new(
            1,
            [10.0, 11.0, 11.2, 11.4].iter().map(|&t| MarkedPoint::at(t, 0.0)).collect(),
            Bounds::interval(0.0, 12.0).unwrap(),
        )
        .unwrap();
        let v = rf_conditional_variance(&single, &Window::interval(10.0).unwrap(), &band, |h| if h == 0.0 { 2.0 } else { 0.0 }, 2.0)
            .unwrap()
            .unwrap();
        assert_eq!(v, 2.0);

        // Two window points with one neighbour each.
        let two = pattern(&[0.0, 1.0, 5.0, 6.0], 10.0);
        let w = Window::interval(5.5).unwrap();
        let indep = rf_conditional_variance(&two, &w, &band, |h| if h == 0.0 { 3.0 } else { 0.0 }, 3.0).unwrap();
        assert_eq!(indep, Some(1.5));
        let full = rf_conditional_variance(&two, &w, &band, |_| 3.0, 3.0).unwrap();
        assert_eq!(full, Some(3.0));
        let none = rf_conditional_variance(&two, &w, &Band::signed(20.0, 30.0).unwrap(), |_| 3.0, 3.0).unwrap();
        assert_eq!(none, None);
        assert!(rf_conditional_variance(&two, &win, &band, |_| 1.0, 3.0).is_err());
    }

    #[test]
    fn blue_examples() {
        let w = blue_weights(&DMatrix::identity(3, 3)).unwrap();
        for v in &w {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let d = blue_weights(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))).unwrap();
        assert!((d[0] - 0.8).abs() < 1e-15 && (d[1] - 0.2).abs() < 1e-15);
        for rho in [-0.2, 0.0, 0.5, 0.95] {
            let n = 5;
            let m = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho });
            let w = blue_weights(&m).unwrap();
            for v in &w {
                assert!((v - 0.2).abs() < 1e-12, "rho {rho}: {w:?}");
            }
        }
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            blue_weights(&bad),
            Err(crate::error::Error::NotPositiveDefinite { order: 2 })
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(blue_weights(&asym).is_err());
    }
}
