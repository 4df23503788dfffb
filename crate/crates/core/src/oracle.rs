//! Ground-truth mean marks of finite-mixture specifications.
//!
//! A [`MixtureSpec`] describes its ergodic decomposition extensionally: class
//! `k` is drawn with probability `p_k`. With `α_k` the class intensity
//! (order 1) or expected ordered-pair count per unit volume over the band
//! (order 2), `μ_k` the class mean mark and `E z_k` the mean weight,
//!
//! ```text
//! μ_f = Σ p_k E z_k μ_k α_k / Σ p_k E z_k α_k        μ̃_f = Σ p_k μ_k
//! ```
//!
//! Closed forms are available for Poisson grounds and unit-cell grids.
//! Hardcore grounds only have a closed first-order intensity; second-order
//! questions about them go to [`brute_force_mu`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::markfn::{Arity, MarkFunction};
use crate::pattern::{for_each_pair, Band, Bounds, PointPattern, Window};
use crate::sim::{
    derive_seed, sample_realization, unit_ball_volume, GroundSpec, MarkDistribution, MarkSpec, MixtureClass,
    MixtureSpec,
};
use crate::stats;

/// First- or second-order mean mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn from_int(order: u8) -> Result<Self> {
        match order {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(invalid(format!("order must be 1 or 2, got {order}"))),
        }
    }
}

/// Analytic moments of one ergodic class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMoments {
    pub p: f64,
    pub intensity: f64,
    /// Expected ordered pairs per unit volume with displacement in the band;
    /// `None` for first-order moments.
    pub pair_intensity: Option<f64>,
    pub mark_mean_f: f64,
    pub z_mean: f64,
}

impl ClassMoments {
    fn alpha(&self) -> f64 {
        self.pair_intensity.unwrap_or(self.intensity)
    }
}

/// Per-class moments for `order`; `band` is required for order 2.
pub fn class_moments(spec: &MixtureSpec, f: &MarkFunction, order: Order, band: Option<&Band>) -> Result<Vec<ClassMoments>> {
    spec.validate()?;
    let band = match (order, band) {
        (Order::First, _) => None,
        (Order::Second, Some(b)) => Some(b),
        (Order::Second, None) => return Err(invalid("second-order oracles need a band")),
    };
    if order == Order::First && f.arity() != Arity::FirstOnly {
        return Err(invalid(format!("first-order mean marks need a first-only function, got {}", f.name())));
    }
    spec.classes
        .iter()
        .map(|c| {
            let pair_intensity = band.map(|b| pair_intensity(&c.ground, spec.dim, b)).transpose()?;
            let mark_mean_f = match band {
                None => mark_mean_first(&c.marks, f),
                Some(b) => class_pair_mark_mean(c, spec.dim, f, b)?,
            };
            Ok(ClassMoments {
                p: c.p,
                intensity: c.ground.intensity(spec.dim),
                pair_intensity,
                mark_mean_f,
                z_mean: c.z_rule.mean(),
            })
        })
        .collect()
}

/// Intensity-weighted mean mark `μ_f`.
pub fn closed_form_mu(spec: &MixtureSpec, f: &MarkFunction, order: Order, band: Option<&Band>) -> Result<f64> {
    let ms = class_moments(spec, f, order, band)?;
    mu_from_moments(&ms)
}

/// Equally weighted mean mark `μ̃_f`.
pub fn closed_form_mu_tilde(spec: &MixtureSpec, f: &MarkFunction, order: Order, band: Option<&Band>) -> Result<f64> {
    let ms = class_moments(spec, f, order, band)?;
    Ok(ms.iter().map(|m| m.p * m.mark_mean_f).sum())
}

pub fn mu_from_moments(ms: &[ClassMoments]) -> Result<f64> {
    let den: f64 = ms.iter().map(|m| m.p * m.z_mean * m.alpha()).sum();
    if !(den > 0.0) {
        return Err(invalid("mixture has no expected pairs in the band"));
    }
    Ok(ms.iter().map(|m| m.p * m.z_mean * m.alpha() * m.mark_mean_f).sum::<f64>() / den)
}

/// Expected ordered pairs per unit volume whose displacement lies in `band`.
pub fn pair_intensity(ground: &GroundSpec, dim: usize, band: &Band) -> Result<f64> {
    ground.validate()?;
    if !band.lo().is_finite() || !band.hi().is_finite() {
        return Err(Error::Unsupported("closed-form pair intensity over an unbounded band".into()));
    }
    match *ground {
        GroundSpec::Poisson { intensity } => {
            let measure = if dim == 1 {
                band.width()
            } else {
                let lo = band.lo().max(0.0);
                unit_ball_volume(dim) * (band.hi().powi(dim as i32) - lo.powi(dim as i32)).max(0.0)
            };
            Ok(intensity * intensity * measure)
        }
        GroundSpec::Grid { spacing, jitter } if dim == 1 => Ok(grid_pair_intensity_1d(spacing, jitter, band)),
        GroundSpec::Grid { spacing, jitter: 0.0 } => Ok(lattice_shell_count(dim, spacing, band) as f64
            * spacing.powi(-(dim as i32))),
        GroundSpec::Grid { .. } => Err(Error::Unsupported(
            "pair intensity of a jittered grid in d > 1; use brute_force_mu".into(),
        )),
        GroundSpec::Hardcore { .. } => Err(Error::Unsupported(
            "second-order moments of a hardcore ground; use brute_force_mu".into(),
        )),
    }
}

fn band_lo_inclusive(band: &Band) -> f64 {
    if band.is_signed() {
        band.lo()
    } else {
        band.lo().max(0.0)
    }
}

/// Ordered pairs `(i, i+k)` of a jittered line grid; the jitter difference
/// is triangular on `[-2j, 2j]`.
fn grid_pair_intensity_1d(s: f64, j: f64, band: &Band) -> f64 {
    let (lo, hi) = (band_lo_inclusive(band), band.hi());
    let a = 2.0 * j;
    let mut total = 0.0;
    let k_lo = ((lo - a) / s).floor() as i64 - 1;
    let k_hi = ((hi + a) / s).ceil() as i64 + 1;
    for k in k_lo..=k_hi {
        if k == 0 {
            continue;
        }
        let ks = k as f64 * s;
        let prob = if a == 0.0 {
            let hit = |x: f64| x >= lo && x <= hi;
            if band.is_signed() {
                f64::from(u8::from(hit(ks)))
            } else {
                f64::from(u8::from(hit(ks.abs())))
            }
        } else if band.is_signed() {
            triangular_cdf(hi - ks, a) - triangular_cdf(lo - ks, a)
        } else {
            // |ks + D| ∈ [lo, hi]
            let pos = triangular_cdf(hi - ks, a) - triangular_cdf(lo - ks, a);
            let neg = triangular_cdf(-lo - ks, a) - triangular_cdf(-hi - ks, a);
            pos + neg
        };
        total += prob;
    }
    total / s
}

fn triangular_cdf(x: f64, a: f64) -> f64 {
    if x <= -a {
        0.0
    } else if x <= 0.0 {
        (x + a) * (x + a) / (2.0 * a * a)
    } else if x < a {
        1.0 - (a - x) * (a - x) / (2.0 * a * a)
    } else {
        1.0
    }
}

/// Number of nonzero lattice vectors `v ∈ ℤ^d` with `s|v| ∈ [lo, hi]`.
fn lattice_shell_count(dim: usize, s: f64, band: &Band) -> u64 {
    let (lo, hi) = (band.lo().max(0.0), band.hi());
    let m = (hi / s).floor() as i64;
    let mut v = vec![-m; dim];
    let mut count = 0u64;
    loop {
        let r2: i64 = v.iter().map(|x| x * x).sum();
        if r2 > 0 {
            let r = s * (r2 as f64).sqrt();
            if r >= lo && r <= hi {
                count += 1;
            }
        }
        let mut i = 0;
        loop {
            if i == dim {
                return count;
            }
            v[i] += 1;
            if v[i] <= m {
                break;
            }
            v[i] = -m;
            i += 1;
        }
    }
}

const QUAD_1D: usize = 20_000;
const QUAD_2D: usize = 800;
const NORMAL_SPAN: f64 = 8.5;

/// Quadrature nodes and weights for a mark law (composite Simpson, `n` even).
fn rule(law: &MarkDistribution, n: usize) -> Vec<(f64, f64)> {
    match *law {
        MarkDistribution::Constant { value } => vec![(value, 1.0)],
        MarkDistribution::Uniform { lo, hi } => simpson(lo, hi, n)
            .into_iter()
            .map(|(x, w)| (x, w / (hi - lo)))
            .collect(),
        MarkDistribution::Normal { mean, sd } => standard_normal_rule(n)
            .into_iter()
            .map(|(z, w)| (mean + sd * z, w))
            .collect(),
    }
}

fn standard_normal_rule(n: usize) -> Vec<(f64, f64)> {
    simpson(-NORMAL_SPAN, NORMAL_SPAN, n)
        .into_iter()
        .map(|(z, w)| (z, w * stats::normal_pdf(z)))
        .collect()
}

fn simpson(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|i| {
            let c = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (a + i as f64 * h, c * h / 3.0)
        })
        .collect()
}

fn marginal_law(marks: &MarkSpec) -> MarkDistribution {
    match *marks {
        MarkSpec::Iid { distribution } => distribution,
        MarkSpec::GaussianField { mean, variance, .. } => MarkDistribution::Normal {
            mean,
            sd: variance.sqrt(),
        },
    }
}

/// `E f(Y)` for a first-only `f`.
fn mark_mean_first(marks: &MarkSpec, f: &MarkFunction) -> f64 {
    rule(&marginal_law(marks), QUAD_1D)
        .iter()
        .map(|&(y, w)| w * f.eval(y, y))
        .sum()
}

/// `E f(Y(0), Y(r))` for marks at distance `r`.
pub fn pair_mark_mean(marks: &MarkSpec, f: &MarkFunction, r: f64) -> f64 {
    if f.arity() == Arity::FirstOnly {
        return mark_mean_first(marks, f);
    }
    let law = marginal_law(marks);
    let rho = match marks.covariance() {
        Some(c) if c.variance > 0.0 => c.eval(r.abs()) / c.variance,
        _ => 0.0,
    };
    if rho == 0.0 {
        let nodes = rule(&law, QUAD_2D);
        return nodes
            .iter()
            .map(|&(y1, w1)| w1 * nodes.iter().map(|&(y2, w2)| w2 * f.eval(y1, y2)).sum::<f64>())
            .sum();
    }
    let MarkDistribution::Normal { mean, sd } = law else {
        unreachable!("correlated marks are Gaussian")
    };
    let nodes = standard_normal_rule(QUAD_2D);
    let c = (1.0 - rho * rho).max(0.0).sqrt();
    nodes
        .iter()
        .map(|&(z1, w1)| {
            w1 * nodes
                .iter()
                .map(|&(z2, w2)| w2 * f.eval(mean + sd * z1, mean + sd * (rho * z1 + c * z2)))
                .sum::<f64>()
        })
        .sum()
}

/// Band-averaged second-order mark mean of one class.
fn class_pair_mark_mean(class: &MixtureClass, dim: usize, f: &MarkFunction, band: &Band) -> Result<f64> {
    let range = match class.marks.covariance() {
        Some(c) if f.arity() == Arity::Both => c.range,
        _ => return Ok(pair_mark_mean(&class.marks, f, f64::INFINITY)),
    };
    if band_lo_inclusive(band).abs() >= range && (!band.is_signed() || band.lo() >= 0.0 || band.hi() <= -range) {
        return Ok(pair_mark_mean(&class.marks, f, f64::INFINITY));
    }
    match class.ground {
        GroundSpec::Poisson { .. } => band_average(band, dim, 400, |r| pair_mark_mean(&class.marks, f, r)),
        _ => Err(Error::Unsupported(
            "correlated pair marks on a non-Poisson ground; use brute_force_mu".into(),
        )),
    }
}

/// Average of `g(r)` over displacements in the band under the Poisson pair
/// measure (`dr` for d = 1, `r^{d-1} dr` otherwise), by Simpson's rule.
pub fn band_average<G: Fn(f64) -> f64>(band: &Band, dim: usize, n: usize, g: G) -> Result<f64> {
    if !band.lo().is_finite() || !band.hi().is_finite() {
        return Err(Error::Unsupported("band average over an unbounded band".into()));
    }
    let lo = band_lo_inclusive(band);
    let hi = band.hi();
    if hi <= lo {
        return Err(invalid("band average over a degenerate band"));
    }
    let density = |r: f64| if dim == 1 { 1.0 } else { r.abs().powi(dim as i32 - 1) };
    let (num, den) = simpson(lo, hi, n)
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (r, w)| (a + w * density(r) * g(r), b + w * density(r)));
    Ok(num / den)
}

/// Pointwise `μ̃_f(r) = Σ p_k E_k f(Y(0), Y(r))`.
pub fn pointwise_mu_tilde(spec: &MixtureSpec, f: &MarkFunction, r: f64) -> Result<f64> {
    spec.validate()?;
    Ok(spec.classes.iter().map(|c| c.p * pair_mark_mean(&c.marks, f, r)).sum())
}

/// `μ̃_f(I)` via the smoothing form: pointwise values averaged over the band
/// against each class's pair measure. Poisson grounds only.
pub fn band_integrated_mu_tilde(spec: &MixtureSpec, f: &MarkFunction, band: &Band) -> Result<f64> {
    spec.validate()?;
    let mut total = 0.0;
    for c in &spec.classes {
        if !matches!(c.ground, GroundSpec::Poisson { .. }) {
            return Err(Error::Unsupported("band integration needs Poisson grounds".into()));
        }
        total += c.p
            * match c.marks.covariance() {
                Some(_) if f.arity() == Arity::Both => {
                    band_average(band, spec.dim, 400, |r| pair_mark_mean(&c.marks, f, r))?
                }
                _ => pair_mark_mean(&c.marks, f, f64::INFINITY),
            };
    }
    Ok(total)
}

/// `E[Y - u | Y > u]` for `Y ~ N(mean, sd²)`.
pub fn threshold_excess_mean(mean: f64, sd: f64, u: f64) -> Result<f64> {
    if !(sd > 0.0) {
        return Err(invalid("sd must be > 0"));
    }
    let a = (u - mean) / sd;
    let tail = 1.0 - stats::normal_cdf(a);
    if !(tail > 0.0) {
        return Err(invalid("threshold is beyond the representable tail"));
    }
    Ok(mean - u + sd * stats::normal_pdf(a) / tail)
}

/// Which target a brute-force run estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BruteForceMode {
    /// Pooled numerator and denominator sums: `μ_f`.
    Pooled,
    /// Average of per-realization ratios: `μ̃_f`.
    RatioAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub value: f64,
    pub standard_error: f64,
    pub n_used: usize,
}

/// Monte Carlo mean mark from `n_mc ≥ 1000` realizations on the window
/// `[0, extent]^d`, simulated with a buffer of the band's reach.
/// The standard error is a delete-one jackknife over realizations.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_mu(
    spec: &MixtureSpec,
    f: &MarkFunction,
    order: Order,
    band: Option<&Band>,
    n_mc: usize,
    seed: u64,
    mode: BruteForceMode,
    extent: f64,
) -> Result<BruteForceResult> {
    spec.validate()?;
    if n_mc < 1000 {
        return Err(invalid(format!("brute_force_mu needs n_mc >= 1000, got {n_mc}")));
    }
    let win = Window::cube(spec.dim, extent)?;
    let band = match (order, band) {
        (Order::First, _) => None,
        (Order::Second, Some(b)) => Some(*b),
        (Order::Second, None) => return Err(invalid("second-order oracles need a band")),
    };
    if order == Order::First && f.arity() != Arity::FirstOnly {
        return Err(invalid("first-order mean marks need a first-only function"));
    }
    let reach = band.map_or(0.0, |b| b.reach());
    let bounds: Bounds = win.buffered(reach)?;
    let sums: Vec<(f64, f64)> = (0..n_mc as u64)
        .into_par_iter()
        .map(|i| {
            let r = sample_realization(spec, &bounds, derive_seed(seed, i))?;
            match band {
                Some(b) => pair_sums(&r.pattern, &win, &b, f),
                None => Ok(point_sums(&r.pattern, &win, f)),
            }
        })
        .collect::<Result<_>>()?;
    match mode {
        BruteForceMode::Pooled => {
            let (num, den) = sums.iter().fold((0.0, 0.0), |(a, b), s| (a + s.0, b + s.1));
            if !(den > 0.0) {
                return Err(invalid("no pairs in any realization"));
            }
            let se = stats::jackknife_se(sums.len(), |k| (num - sums[k].0) / (den - sums[k].1));
            Ok(BruteForceResult {
                value: num / den,
                standard_error: se,
                n_used: sums.len(),
            })
        }
        BruteForceMode::RatioAverage => {
            let ratios: Vec<f64> = sums.iter().filter(|s| s.1 > 0.0).map(|s| s.0 / s.1).collect();
            if ratios.len() < 2 {
                return Err(invalid("fewer than two realizations with defined ratios"));
            }
            let total: f64 = ratios.iter().sum();
            let n = ratios.len() as f64;
            let se = stats::jackknife_se(ratios.len(), |k| (total - ratios[k]) / (n - 1.0));
            Ok(BruteForceResult {
                value: total / n,
                standard_error: se,
                n_used: ratios.len(),
            })
        }
    }
}

fn point_sums(p: &PointPattern, win: &Window, f: &MarkFunction) -> (f64, f64) {
    p.points()
        .iter()
        .filter(|q| win.contains(&q.location))
        .fold((0.0, 0.0), |(a, b), q| (a + q.z * f.eval(q.y, q.y), b + q.z))
}

fn pair_sums(p: &PointPattern, win: &Window, band: &Band, f: &MarkFunction) -> Result<(f64, f64)> {
    let pts = p.points();
    let (mut num, mut den) = (0.0, 0.0);
    for_each_pair(p, win, band, |i, j| {
        let z = pts[i].z;
        num += z * f.eval(pts[i].y, pts[j].y);
        den += z;
    })?;
    Ok((num, den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{MarkSpec, ZRule};

    fn class(p: f64, ground: GroundSpec, mean: f64) -> MixtureClass {
        MixtureClass {
            p,
            ground,
            marks: MarkSpec::normal(mean, 1.0),
            z_rule: ZRule::ConstOne,
        }
    }

    fn two_class(l1: f64, l2: f64) -> MixtureSpec {
        MixtureSpec {
            dim: 1,
            classes: vec![
                class(0.5, GroundSpec::Poisson { intensity: l1 }, 0.0),
                class(0.5, GroundSpec::Poisson { intensity: l2 }, 10.0),
            ],
            window: None,
        }
    }

    fn band() -> Band {
        Band::signed(0.5, 1.5).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let f = MarkFunction::first();
        let mu1 = closed_form_mu(&two_class(1.0, 4.0), &f, Order::First, None).unwrap();
        assert!((mu1 - 8.0).abs() < 1e-9);
        let eq = closed_form_mu(&two_class(2.0, 2.0), &f, Order::First, None).unwrap();
        assert!((eq - 5.0).abs() < 1e-9);
        let mu2 = closed_form_mu(&two_class(1.0, 4.0), &f, Order::Second, Some(&band())).unwrap();
        assert!((mu2 - 160.0 / 17.0).abs() < 1e-9);
        let tilde = closed_form_mu_tilde(&two_class(1.0, 4.0), &f, Order::Second, Some(&band())).unwrap();
        assert!((tilde - 5.0).abs() < 1e-9);
        let single = MixtureSpec::ergodic(1, GroundSpec::Poisson { intensity: 3.0 }, MarkSpec::normal(2.5, 1.0));
        assert!((closed_form_mu(&single, &f, Order::First, None).unwrap() - 2.5).abs() < 1e-9);
        assert!((closed_form_mu_tilde(&single, &f, Order::First, None).unwrap() - 2.5).abs() < 1e-9);
    }

    #[test]
    fn quadrature_reproduces_moments() {
        let marks = MarkSpec::normal(2.0, 3.0);
        assert!((pair_mark_mean(&marks, &MarkFunction::first_squared(), 1.0) - 13.0).abs() < 1e-9);
        assert!((pair_mark_mean(&marks, &MarkFunction::product(), 1.0) - 4.0).abs() < 1e-9);
        let field = MarkSpec::GaussianField {
            mean: 1.0,
            variance: 2.0,
            range: 1.0,
            shape: Default::default(),
        };
        let c = field.covariance().unwrap();
        let got = pair_mark_mean(&field, &MarkFunction::product(), 0.3);
        assert!((got - (1.0 + c.eval(0.3))).abs() < 1e-8);
    }

    #[test]
    fn unsupported_grounds() {
        let hc = MixtureSpec::ergodic(
            1,
            GroundSpec::Hardcore {
                intensity: 1.0,
                min_dist: 0.2,
            },
            MarkSpec::normal(0.0, 1.0),
        );
        let f = MarkFunction::first();
        assert!(matches!(
            closed_form_mu(&hc, &f, Order::Second, Some(&band())),
            Err(Error::Unsupported(_))
        ));
        assert!(closed_form_mu(&hc, &f, Order::First, None).is_ok());
    }

    #[test]
    fn grid_pair_intensity() {
        let g = GroundSpec::Grid {
            spacing: 1.0,
            jitter: 0.0,
        };
        assert_eq!(pair_intensity(&g, 1, &Band::signed(0.5, 1.5).unwrap()).unwrap(), 1.0);
        assert_eq!(pair_intensity(&g, 1, &Band::signed(-1.0, 2.0).unwrap()).unwrap(), 3.0);
        // Jitter only redistributes mass around each lattice offset.
        let j = GroundSpec::Grid {
            spacing: 1.0,
            jitter: 0.2,
        };
        assert!((pair_intensity(&j, 1, &Band::signed(0.5, 1.5).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        let partial = pair_intensity(&j, 1, &Band::signed(1.0, 2.0).unwrap()).unwrap();
        assert!((partial - 1.0).abs() < 1e-12);
        let half = pair_intensity(&j, 1, &Band::signed(1.0, 1.5).unwrap()).unwrap();
        assert!((half - 0.5).abs() < 1e-12);
        assert_eq!(pair_intensity(&g, 2, &Band::absolute(0.5, 1.0).unwrap()).unwrap(), 4.0);
        assert_eq!(pair_intensity(&g, 2, &Band::absolute(0.5, 1.5).unwrap()).unwrap(), 8.0);
    }

    #[test]
    fn band_integrated_matches_closed_form_for_iid() {
        let spec = two_class(1.0, 4.0);
        let f = MarkFunction::product();
        let closed = closed_form_mu_tilde(&spec, &f, Order::Second, Some(&band())).unwrap();
        let integrated = band_integrated_mu_tilde(&spec, &f, &band()).unwrap();
        assert!((closed - integrated).abs() < 1e-9);
        let point = pointwise_mu_tilde(&spec, &f, 1.0).unwrap();
        assert!((closed - point).abs() < 1e-9);
    }

    #[test]
    fn excess_mean_matches_quadrature() {
        let u = 0.7;
        let marks = MarkSpec::normal(0.2, 1.3);
        let ex = pair_mark_mean(&marks, &MarkFunction::of_first("ex", move |y| (y - u).max(0.0)), 0.0);
        let pr = pair_mark_mean(&marks, &MarkFunction::of_first("ind", move |y| f64::from(u8::from(y > u))), 0.0);
        assert!((threshold_excess_mean(0.2, 1.3, u).unwrap() - ex / pr).abs() < 1e-3);
    }

    #[test]
    fn deterministic_grid_is_exact() {
        let spec = MixtureSpec::ergodic(
            1,
            GroundSpec::Grid {
                spacing: 1.0,
                jitter: 0.0,
            },
            MarkSpec::constant(3.5),
        );
        let r = brute_force_mu(&spec, &MarkFunction::first(), Order::Second, Some(&band()), 1000, 1, BruteForceMode::Pooled, 20.0)
            .unwrap();
        assert_eq!((r.value, r.standard_error), (3.5, 0.0));
        assert!(brute_force_mu(&spec, &MarkFunction::first(), Order::Second, Some(&band()), 10, 1, BruteForceMode::Pooled, 20.0).is_err());
    }
}
