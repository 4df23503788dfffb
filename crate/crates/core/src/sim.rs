//! Generators for ergodic and non-ergodic marked point processes.
//!
//! A [`MixtureSpec`] is a finite ergodic mixture: each realization first
//! draws a class `k` with probability `p_k`, then samples a ground process
//! (Poisson, Matérn-II hardcore or jittered grid) and marks (iid or a
//! finite-range Gaussian field evaluated at the points) from that class.
//!
//! All generators are deterministic functions of their seed. Realization `i`
//! of a mixture uses the seed [`derive_seed`]`(seed, i)`, so realizations can
//! be produced in parallel without sharing generator state.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::linalg::cholesky;
use crate::pattern::{displacement, Bounds, MarkedPoint, PointPattern};

/// Ground (location) process of one mixture class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroundSpec {
    Poisson { intensity: f64 },
    /// Matérn-II thinning of a Poisson proposal with intensity `intensity`.
    Hardcore { intensity: f64, min_dist: f64 },
    /// Lattice `s·ℤ^d`, each node jittered uniformly in `[-jitter, jitter]^d`.
    Grid {
        spacing: f64,
        #[serde(default)]
        jitter: f64,
    },
}

impl GroundSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GroundSpec::Poisson { intensity } => positive("intensity", intensity),
            GroundSpec::Hardcore {
                intensity,
                min_dist,
            } => {
                positive("intensity", intensity)?;
                positive("min_dist", min_dist)
            }
            GroundSpec::Grid { spacing, jitter } => {
                positive("spacing", spacing)?;
                if !(jitter >= 0.0) || !jitter.is_finite() {
                    return Err(invalid(format!("jitter must be >= 0, got {jitter}")));
                }
                Ok(())
            }
        }
    }

    /// Mean number of points per unit volume.
    pub fn intensity(&self, dim: usize) -> f64 {
        match *self {
            GroundSpec::Poisson { intensity } => intensity,
            GroundSpec::Hardcore {
                intensity,
                min_dist,
            } => matern2_retained_intensity(intensity, min_dist, dim),
            GroundSpec::Grid { spacing, .. } => spacing.powi(-(dim as i32)),
        }
    }

    /// Guaranteed minimum distance between points, if any.
    pub fn min_distance(&self) -> Option<f64> {
        match *self {
            GroundSpec::Poisson { .. } => None,
            GroundSpec::Hardcore { min_dist, .. } => Some(min_dist),
            GroundSpec::Grid { spacing, jitter } => {
                let d = spacing - 2.0 * jitter;
                (d > 0.0).then_some(d)
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
    }
    Ok(())
}

/// Volume of the unit ball in ℝ^d.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let d = dim as f64;
    std::f64::consts::PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0)
}

/// Intensity of a Matérn-II hardcore process,
/// `(1 - exp(-λ_p V_d d0^d)) / (V_d d0^d)`.
pub fn matern2_retained_intensity(proposal: f64, min_dist: f64, dim: usize) -> f64 {
    let v = unit_ball_volume(dim) * min_dist.powi(dim as i32);
    -(-proposal * v).exp_m1() / v
}

/// Marginal law of iid marks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum MarkDistribution {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    Constant { value: f64 },
}

impl MarkDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            MarkDistribution::Normal { mean, .. } => mean,
            MarkDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            MarkDistribution::Constant { value } => value,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            MarkDistribution::Normal { sd, .. } => sd * sd,
            MarkDistribution::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            MarkDistribution::Constant { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            MarkDistribution::Normal { mean, sd } => {
                if !mean.is_finite() || !(sd >= 0.0) || !sd.is_finite() {
                    return Err(invalid(format!("invalid normal law N({mean}, {sd})")));
                }
            }
            MarkDistribution::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo > hi {
                    return Err(invalid(format!("invalid uniform law U({lo}, {hi})")));
                }
            }
            MarkDistribution::Constant { value } => {
                if !value.is_finite() {
                    return Err(invalid("constant mark must be finite"));
                }
            }
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            MarkDistribution::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            MarkDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            MarkDistribution::Constant { value } => value,
        }
    }
}

/// Finite-range covariance shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovShape {
    /// `σ²(1 - 1.5 h/h0 + 0.5 (h/h0)³)` for `h ≤ h0`; positive definite for `d ≤ 3`.
    #[default]
    Spherical,
    /// `σ² exp(-3h/h0) 1{h ≤ h0}`. Discontinuous at `h0` and not guaranteed
    /// positive definite; meant for stress tests.
    TruncatedExponential,
}

/// Isotropic covariance `C(h)` with `C(h) = 0` for `h > range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteRangeCovariance {
    pub shape: CovShape,
    pub variance: f64,
    pub range: f64,
}

impl FiniteRangeCovariance {
    pub fn new(shape: CovShape, variance: f64, range: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(invalid(format!("variance must be >= 0, got {variance}")));
        }
        positive("range", range)?;
        Ok(Self {
            shape,
            variance,
            range,
        })
    }

    pub fn spherical(variance: f64, range: f64) -> Result<Self> {
        Self::new(CovShape::Spherical, variance, range)
    }

    pub fn eval(&self, h: f64) -> f64 {
        let h = h.abs();
        if h > self.range {
            return 0.0;
        }
        let r = h / self.range;
        match self.shape {
            CovShape::Spherical => self.variance * (1.0 - 1.5 * r + 0.5 * r * r * r),
            CovShape::TruncatedExponential => self.variance * (-3.0 * r).exp(),
        }
    }
}

/// Law of the primary marks `y` given the locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkSpec {
    Iid {
        #[serde(flatten)]
        distribution: MarkDistribution,
    },
    /// Stationary Gaussian field with finite-range covariance, evaluated at
    /// the point locations.
    GaussianField {
        mean: f64,
        variance: f64,
        range: f64,
        #[serde(default)]
        shape: CovShape,
    },
}

impl MarkSpec {
    pub fn iid(distribution: MarkDistribution) -> Self {
        MarkSpec::Iid { distribution }
    }

    pub fn normal(mean: f64, sd: f64) -> Self {
        Self::iid(MarkDistribution::Normal { mean, sd })
    }

    pub fn constant(value: f64) -> Self {
        Self::iid(MarkDistribution::Constant { value })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MarkSpec::Iid { distribution } => distribution.validate(),
            MarkSpec::GaussianField {
                mean,
                variance,
                range,
                shape,
            } => {
                if !mean.is_finite() {
                    return Err(invalid("field mean must be finite"));
                }
                FiniteRangeCovariance::new(*shape, *variance, *range).map(|_| ())
            }
        }
    }

    /// Marginal mean and variance of a single mark.
    pub fn marginal(&self) -> (f64, f64) {
        match self {
            MarkSpec::Iid { distribution } => (distribution.mean(), distribution.variance()),
            MarkSpec::GaussianField { mean, variance, .. } => (*mean, *variance),
        }
    }

    /// Mark covariance `Cov[y(t1), y(t2)]` as a function of distance. For iid
    /// marks this is the variance at distance 0 and zero elsewhere.
    pub fn covariance(&self) -> Option<FiniteRangeCovariance> {
        match self {
            MarkSpec::Iid { .. } => None,
            MarkSpec::GaussianField {
                variance,
                range,
                shape,
                ..
            } => Some(FiniteRangeCovariance {
                shape: *shape,
                variance: *variance,
                range: *range,
            }),
        }
    }
}

/// Rule for the weight marks `z`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZRule {
    #[default]
    ConstOne,
    Constant { value: f64 },
    /// iid uniform weights on `[lo, hi]`, independent of everything else.
    Uniform { lo: f64, hi: f64 },
}

impl ZRule {
    pub fn mean(&self) -> f64 {
        match *self {
            ZRule::ConstOne => 1.0,
            ZRule::Constant { value } => value,
            ZRule::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ZRule::ConstOne => Ok(()),
            ZRule::Constant { value } if value >= 0.0 && value.is_finite() => Ok(()),
            ZRule::Uniform { lo, hi } if lo >= 0.0 && lo <= hi && hi.is_finite() => Ok(()),
            other => Err(invalid(format!("weight marks must be >= 0: {other:?}"))),
        }
    }
}

/// One ergodic class of a mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureClass {
    pub p: f64,
    pub ground: GroundSpec,
    pub marks: MarkSpec,
    #[serde(default)]
    pub z_rule: ZRule,
}

/// Finite ergodic mixture. `window`, when present, is the estimation extent
/// `T` the spec was written for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub dim: usize,
    pub classes: Vec<MixtureClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Vec<f64>>,
}

impl MixtureSpec {
    /// A single ergodic class with probability one.
    pub fn ergodic(dim: usize, ground: GroundSpec, marks: MarkSpec) -> Self {
        Self {
            dim,
            classes: vec![MixtureClass {
                p: 1.0,
                ground,
                marks,
                z_rule: ZRule::ConstOne,
            }],
            window: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dimension must be >= 1"));
        }
        if self.classes.is_empty() {
            return Err(invalid("mixture needs at least one class"));
        }
        let mut total = 0.0;
        for (k, c) in self.classes.iter().enumerate() {
            if !(c.p > 0.0) {
                return Err(invalid(format!("class {k} has probability {} <= 0", c.p)));
            }
            total += c.p;
            c.ground.validate()?;
            c.marks.validate()?;
            c.z_rule.validate()?;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("class probabilities sum to {total}, not 1")));
        }
        if let Some(w) = &self.window {
            if w.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: w.len(),
                });
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// A simulated pattern with the index of the class it was drawn from. The
/// class index is for validation only; estimators never see it.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub pattern: PointPattern,
    pub class_index: usize,
    pub seed: u64,
}

/// Seed of realization `i`: `seed ⊕ splitmix64(i)`.
pub fn derive_seed(seed: u64, i: u64) -> u64 {
    seed ^ splitmix64(i)
}

/// Seed of replicate experiment `r`. Differs from [`derive_seed`] so that
/// realization `i` of replicate `r` never coincides with realization `r` of
/// replicate `i` when the two derivations are nested.
pub fn replicate_seed(seed: u64, r: u64) -> u64 {
    splitmix64(derive_seed(seed, r))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_in<R: Rng>(rng: &mut R, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(a, b)| a + (b - a) * rng.random::<f64>())
        .collect()
}

fn poisson_count<R: Rng>(rng: &mut R, mean: f64) -> Result<usize> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let law = Poisson::new(mean).map_err(|e| invalid(format!("poisson mean {mean}: {e}")))?;
    Ok(law.sample(rng) as usize)
}

/// Samples point locations on `bounds`.
pub fn sample_ground(spec: &GroundSpec, bounds: &Bounds, seed: u64) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if bounds.is_degenerate() {
        return Err(invalid("simulation bounds are degenerate"));
    }
    let mut rng = rng(seed);
    let dim = bounds.dim();
    match *spec {
        GroundSpec::Poisson { intensity } => {
            let n = poisson_count(&mut rng, intensity * bounds.volume())?;
            Ok((0..n)
                .map(|_| uniform_in(&mut rng, bounds.lo(), bounds.hi()))
                .collect())
        }
        GroundSpec::Hardcore {
            intensity,
            min_dist,
        } => {
            let retained = matern2_retained_intensity(intensity, min_dist, dim);
            if retained * bounds.volume() < 1e-3 {
                log::warn!(
                    "hardcore distance {min_dist} leaves expected {:.2e} points on the window",
                    retained * bounds.volume()
                );
            }
            // Proposals outside `bounds` (within min_dist) still thin points
            // inside it, which keeps the retained process stationary.
            let lo: Vec<f64> = bounds.lo().iter().map(|a| a - min_dist).collect();
            let hi: Vec<f64> = bounds.hi().iter().map(|b| b + min_dist).collect();
            let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
            let n = poisson_count(&mut rng, intensity * vol)?;
            let proposals: Vec<(Vec<f64>, f64)> = (0..n)
                .map(|_| {
                    let loc = uniform_in(&mut rng, &lo, &hi);
                    (loc, rng.random::<f64>())
                })
                .collect();
            let locs: Vec<Vec<f64>> = proposals.iter().map(|(l, _)| l.clone()).collect();
            let mut keep = vec![true; n];
            for_each_close_pair(&locs, min_dist, |i, j| {
                // Strictly closer than min_dist: the later-born point dies.
                if proposals[i].1 > proposals[j].1 {
                    keep[i] = false;
                } else {
                    keep[j] = false;
                }
            });
            Ok(proposals
                .into_iter()
                .zip(keep)
                .filter(|((loc, _), k)| *k && bounds.contains(loc))
                .map(|((loc, _), _)| loc)
                .collect())
        }
        GroundSpec::Grid { spacing, jitter } => {
            let ranges: Vec<(i64, i64)> = bounds
                .lo()
                .iter()
                .zip(bounds.hi())
                .map(|(a, b)| ((a / spacing).ceil() as i64, (b / spacing).floor() as i64))
                .collect();
            let mut out = Vec::new();
            let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            if ranges.iter().any(|(a, b)| a > b) {
                return Ok(out);
            }
            loop {
                let mut loc: Vec<f64> = idx.iter().map(|&k| k as f64 * spacing).collect();
                if jitter > 0.0 {
                    for x in &mut loc {
                        *x += jitter * (2.0 * rng.random::<f64>() - 1.0);
                    }
                }
                if bounds.contains(&loc) {
                    out.push(loc);
                }
                // Odometer increment over the lattice box.
                let mut k = dim;
                loop {
                    if k == 0 {
                        return Ok(out);
                    }
                    k -= 1;
                    if idx[k] < ranges[k].1 {
                        idx[k] += 1;
                        break;
                    }
                    idx[k] = ranges[k].0;
                }
            }
        }
    }
}

/// Calls `visit(i, j)`, `i < j`, for every pair strictly closer than `radius`.
fn for_each_close_pair<F: FnMut(usize, usize)>(locs: &[Vec<f64>], radius: f64, mut visit: F) {
    let n = locs.len();
    if n < 2 {
        return;
    }
    if locs[0].len() == 1 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| locs[a][0].total_cmp(&locs[b][0]));
        for a in 0..n {
            for b in (a + 1)..n {
                let (i, j) = (order[a], order[b]);
                if locs[j][0] - locs[i][0] >= radius {
                    break;
                }
                visit(i.min(j), i.max(j));
            }
        }
        return;
    }
    let cell = radius;
    let key = |l: &[f64]| -> Vec<i64> { l.iter().map(|x| (x / cell).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, l) in locs.iter().enumerate() {
        grid.entry(key(l)).or_default().push(i);
    }
    let dim = locs[0].len();
    for (i, l) in locs.iter().enumerate() {
        let home = key(l);
        let mut offset = vec![-1i64; dim];
        loop {
            let probe: Vec<i64> = home.iter().zip(&offset).map(|(h, o)| h + o).collect();
            if let Some(bucket) = grid.get(&probe) {
                for &j in bucket {
                    if j > i && displacement(l, &locs[j]) < radius {
                        visit(i, j);
                    }
                }
            }
            let mut k = 0;
            loop {
                if k == dim {
                    break;
                }
                if offset[k] < 1 {
                    offset[k] += 1;
                    break;
                }
                offset[k] = -1;
                k += 1;
            }
            if k == dim {
                break;
            }
        }
    }
}

/// Covariance matrix `Σ_ij = C(‖t_i − t_j‖)` of the field at `locs`.
pub fn covariance_matrix(locs: &[Vec<f64>], cov: &FiniteRangeCovariance) -> DMatrix<f64> {
    let n = locs.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            cov.variance
        } else {
            cov.eval(distance(&locs[i], &locs[j]))
        }
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    displacement(a, b).abs()
}

/// Groups of points linked by chains of distances `<= range`. Marks in
/// different groups are independent, so each group is factored separately.
fn correlated_components(locs: &[Vec<f64>], range: f64) -> Vec<Vec<usize>> {
    let n = locs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut union = |a: usize, b: usize| {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    // Strict `<` in the helper; widen slightly so distance == range links.
    for_each_close_pair(locs, range * (1.0 + 1e-12) + f64::MIN_POSITIVE, |i, j| {
        union(i, j)
    });
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let g = *slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

/// Samples the field at `locs`: one joint normal draw per correlated group,
/// with diagonal jitter escalating from `1e-10 σ²` to `1e-6 σ²` if a group's
/// covariance matrix is numerically indefinite.
pub fn sample_field(
    locs: &[Vec<f64>],
    mean: f64,
    cov: &FiniteRangeCovariance,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = rng(seed);
    let mut y = vec![mean; locs.len()];
    if cov.variance == 0.0 {
        return Ok(y);
    }
    for group in correlated_components(locs, cov.range) {
        let sub: Vec<Vec<f64>> = group.iter().map(|&i| locs[i].clone()).collect();
        let sigma = covariance_matrix(&sub, cov);
        let l = factor_with_jitter(&sigma, cov.variance)?;
        let z = DVector::from_fn(group.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let draw = l * z;
        for (k, &i) in group.iter().enumerate() {
            y[i] = mean + draw[k];
        }
    }
    Ok(y)
}

fn factor_with_jitter(sigma: &DMatrix<f64>, variance: f64) -> Result<DMatrix<f64>> {
    match cholesky(sigma) {
        Ok(l) => return Ok(l),
        Err(Error::NotPositiveDefinite { .. }) => {}
        Err(e) => return Err(e),
    }
    let mut last = None;
    for exp in [-10, -9, -8, -7, -6] {
        let eps = 10f64.powi(exp) * variance;
        let mut jittered = sigma.clone();
        for i in 0..jittered.nrows() {
            jittered[(i, i)] += eps;
        }
        match cholesky(&jittered) {
            Ok(l) => {
                log::debug!("field covariance needed diagonal jitter {eps:e}");
                return Ok(l);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or(Error::NotPositiveDefinite { order: 1 }))
}

/// Samples `(y, z)` marks for the given locations.
pub fn sample_marks(
    locs: &[Vec<f64>],
    marks: &MarkSpec,
    z_rule: &ZRule,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    marks.validate()?;
    z_rule.validate()?;
    if locs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(invalid("locations must be finite"));
    }
    let mut master = rng(seed);
    let y_seed = master.next_u64();
    let z_seed = master.next_u64();
    let ys = match marks {
        MarkSpec::Iid { distribution } => {
            let mut r = rng(y_seed);
            locs.iter().map(|_| distribution.sample(&mut r)).collect()
        }
        MarkSpec::GaussianField { mean, .. } => {
            let cov = marks.covariance().expect("field has a covariance");
            sample_field(locs, *mean, &cov, y_seed)?
        }
    };
    let zs = match *z_rule {
        ZRule::ConstOne => vec![1.0; locs.len()],
        ZRule::Constant { value } => vec![value; locs.len()],
        ZRule::Uniform { lo, hi } => {
            let mut r = rng(z_seed);
            let law = Uniform::new_inclusive(lo, hi).map_err(|e| invalid(e.to_string()))?;
            locs.iter().map(|_| law.sample(&mut r)).collect()
        }
    };
    Ok((ys, zs))
}

/// Samples one pattern from a single class.
pub fn sample_class(class: &MixtureClass, bounds: &Bounds, seed: u64) -> Result<PointPattern> {
    let mut master = rng(seed);
    let ground_seed = master.next_u64();
    let mark_seed = master.next_u64();
    let locs = sample_ground(&class.ground, bounds, ground_seed)?;
    let (ys, zs) = sample_marks(&locs, &class.marks, &class.z_rule, mark_seed)?;
    let points = locs
        .into_iter()
        .zip(ys.into_iter().zip(zs))
        .map(|(location, (y, z))| MarkedPoint { location, y, z })
        .collect();
    PointPattern::new(bounds.dim(), points, bounds.clone())
}

/// Index of the class selected by the uniform variate `u ∈ [0, 1)`.
fn pick_class(spec: &MixtureSpec, u: f64) -> usize {
    let mut acc = 0.0;
    for (k, c) in spec.classes.iter().enumerate() {
        acc += c.p;
        if u < acc {
            return k;
        }
    }
    spec.classes.len() - 1
}

/// One realization of the mixture, seeded directly.
pub fn sample_realization(spec: &MixtureSpec, bounds: &Bounds, seed: u64) -> Result<Realization> {
    let mut r = rng(seed);
    let k = pick_class(spec, r.random::<f64>());
    let pattern = sample_class(&spec.classes[k], bounds, r.next_u64())?;
    Ok(Realization {
        pattern,
        class_index: k,
        seed,
    })
}

/// `n` independent realizations; realization `i` uses
/// [`derive_seed`]`(seed, i)`. Output order is the realization index
/// regardless of how the work is scheduled.
pub fn sample_mixture(
    spec: &MixtureSpec,
    bounds: &Bounds,
    n_realizations: usize,
    seed: u64,
) -> Result<Vec<Realization>> {
    spec.validate()?;
    if n_realizations == 0 {
        return Err(invalid("n_realizations must be >= 1"));
    }
    if bounds.dim() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            got: bounds.dim(),
        });
    }
    (0..n_realizations as u64)
        .into_par_iter()
        .map(|i| sample_realization(spec, bounds, derive_seed(seed, i)))
        .collect()
}
