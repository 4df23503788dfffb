//! Point-pattern data model, window geometry, distance bands and pair
//! enumeration.
//!
//! Every estimator in this crate is a ratio of sums over *ordered* pairs
//! `(p1, p2)`, `p1 != p2`, whose first point lies in the estimation window
//! `[0, T]` and whose displacement falls into a [`Band`]. The second point may
//! lie anywhere in the (buffered) simulation bounds, so neighbourhoods of
//! points near the window edge are complete as long as the pattern was
//! simulated on [`Window::buffered`].
//!
//! For `d = 1` the displacement is signed (`t2 - t1`), for `d > 1` it is the
//! Euclidean distance.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::markfn::MarkFunction;

/// A point location together with its primary mark `y` and weight mark `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub location: Vec<f64>,
    pub y: f64,
    pub z: f64,
}

impl MarkedPoint {
    pub fn new(location: Vec<f64>, y: f64, z: f64) -> Self {
        Self { location, y, z }
    }

    /// One-dimensional point with unit weight.
    pub fn at(t: f64, y: f64) -> Self {
        Self::new(vec![t], y, 1.0)
    }
}

/// Axis-aligned box `[lo, hi]` on which a pattern is fully observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(invalid("bounds must have at least one dimension"));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !a.is_finite() || !b.is_finite() || a > b {
                return Err(invalid(format!("degenerate bounds component [{a}, {b}]")));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, loc: &[f64]) -> bool {
        loc.len() == self.dim()
            && loc
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| a >= b)
    }

    fn shifted(&self, x: &[f64]) -> Self {
        Self {
            lo: self.lo.iter().zip(x).map(|(a, s)| a - s).collect(),
            hi: self.hi.iter().zip(x).map(|(b, s)| b - s).collect(),
        }
    }
}

/// Estimation window `[origin, origin + extent]`; `origin` is zero unless the
/// window has been translated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    origin: Vec<f64>,
    extent: Vec<f64>,
}

impl Window {
    /// The window `[0, T]`.
    pub fn new(extent: Vec<f64>) -> Result<Self> {
        if extent.is_empty() {
            return Err(invalid("window must have at least one dimension"));
        }
        if extent.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(invalid(format!(
                "window extents must be finite and positive, got {extent:?}"
            )));
        }
        Ok(Self {
            origin: vec![0.0; extent.len()],
            extent,
        })
    }

    pub fn interval(t: f64) -> Result<Self> {
        Self::new(vec![t])
    }

    pub fn cube(dim: usize, t: f64) -> Result<Self> {
        Self::new(vec![t; dim])
    }

    pub fn dim(&self) -> usize {
        self.extent.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    /// `v_T`, the volume of the window.
    pub fn volume(&self) -> f64 {
        self.extent.iter().product()
    }

    pub fn contains(&self, loc: &[f64]) -> bool {
        loc.iter()
            .zip(self.origin.iter().zip(&self.extent))
            .all(|(x, (o, t))| *o <= *x && *x <= o + t)
    }

    /// Window moved by `-x`, matching [`translate`].
    pub fn translated(&self, x: &[f64]) -> Result<Self> {
        check_dim(self.dim(), x.len())?;
        Ok(Self {
            origin: self.origin.iter().zip(x).map(|(o, s)| o - s).collect(),
            extent: self.extent.clone(),
        })
    }

    /// Simulation bounds enlarged by `width` on every side.
    pub fn buffered(&self, width: f64) -> Result<Bounds> {
        if !(width >= 0.0) || !width.is_finite() {
            return Err(invalid(format!("buffer width must be finite and >= 0, got {width}")));
        }
        Bounds::new(
            self.origin.iter().map(|o| o - width).collect(),
            self.origin
                .iter()
                .zip(&self.extent)
                .map(|(o, t)| o + t + width)
                .collect(),
        )
    }

    /// The nested window `[origin, origin + t]` in every coordinate.
    pub fn with_extent(&self, t: f64) -> Result<Self> {
        let mut w = Self::cube(self.dim(), t)?;
        w.origin = self.origin.clone();
        Ok(w)
    }
}

/// Buffer width that makes every neighbourhood of `[0, T]` complete for all
/// the given bands: the largest absolute band endpoint.
pub fn buffer_width(bands: &[Band]) -> f64 {
    bands.iter().map(Band::reach).fold(0.0, f64::max)
}

/// A closed distance set `[lo, hi]`. Signed bands are used for `d = 1`,
/// absolute (distance) bands for `d > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    lo: f64,
    hi: f64,
    signed: bool,
}

impl Band {
    pub fn signed(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(invalid(format!("band requires lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(Self {
            lo,
            hi,
            signed: true,
        })
    }

    pub fn absolute(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo < 0.0 {
            return Err(invalid(format!(
                "absolute band requires 0 <= lo <= hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            lo,
            hi,
            signed: false,
        })
    }

    /// Signed band for `dim == 1`, absolute band otherwise.
    pub fn for_dim(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        if dim == 1 {
            Self::signed(lo, hi)
        } else {
            Self::absolute(lo, hi)
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Largest displacement magnitude the band can contain.
    pub fn reach(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    #[inline]
    pub fn contains(&self, displacement: f64) -> bool {
        self.lo <= displacement && displacement <= self.hi
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.signed != (dim == 1) {
            return Err(invalid(format!(
                "{} band used with a {dim}-dimensional pattern",
                if self.signed { "signed" } else { "absolute" }
            )));
        }
        Ok(())
    }
}

/// A finite, simple marked point pattern observed on `bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    dim: usize,
    points: Vec<MarkedPoint>,
    bounds: Bounds,
}

impl PointPattern {
    pub fn new(dim: usize, points: Vec<MarkedPoint>, bounds: Bounds) -> Result<Self> {
        check_dim(dim, bounds.dim())?;
        for (i, p) in points.iter().enumerate() {
            check_dim(dim, p.location.len())?;
            if p.location.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("point {i} has a non-finite coordinate")));
            }
            if !p.y.is_finite() {
                return Err(invalid(format!("point {i} has a non-finite mark y")));
            }
            if !(p.z >= 0.0) || !p.z.is_finite() {
                return Err(invalid(format!("point {i} has weight mark z = {} < 0", p.z)));
            }
            if !bounds.contains(&p.location) {
                return Err(invalid(format!(
                    "point {i} at {:?} lies outside the simulation bounds",
                    p.location
                )));
            }
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| cmp_locations(&points[a].location, &points[b].location));
        if let Some(w) = order
            .windows(2)
            .find(|w| points[w[0]].location == points[w[1]].location)
        {
            return Err(invalid(format!(
                "pattern is not simple: points {} and {} coincide",
                w[0], w[1]
            )));
        }
        Ok(Self {
            dim,
            points,
            bounds,
        })
    }

    pub fn empty(bounds: Bounds) -> Self {
        Self {
            dim: bounds.dim(),
            points: Vec::new(),
            bounds,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points inside the estimation window.
    pub fn count_in(&self, win: &Window) -> usize {
        self.points.iter().filter(|p| win.contains(&p.location)).count()
    }

    /// Same locations with every weight mark multiplied by `factor`.
    pub fn scale_weights(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(invalid(format!("weight factor must be finite and >= 0, got {factor}")));
        }
        let mut out = self.clone();
        for p in &mut out.points {
            p.z *= factor;
        }
        Ok(out)
    }

    /// Same locations and weights with primary marks replaced by `ys`.
    pub fn with_marks(&self, ys: &[f64]) -> Result<Self> {
        if ys.len() != self.len() {
            return Err(invalid(format!(
                "expected {} marks, got {}",
                self.len(),
                ys.len()
            )));
        }
        let mut out = self.clone();
        for (p, y) in out.points.iter_mut().zip(ys) {
            p.y = *y;
        }
        Ok(out)
    }
}

fn cmp_locations(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Displacement used for band membership: `t2 - t1` for `d = 1`, the
/// Euclidean distance otherwise.
pub fn dis(t1: &[f64], t2: &[f64]) -> Result<f64> {
    check_dim(t1.len(), t2.len())?;
    if t1.is_empty() {
        return Err(invalid("locations must have at least one coordinate"));
    }
    Ok(displacement(t1, t2))
}

#[inline]
pub(crate) fn displacement(t1: &[f64], t2: &[f64]) -> f64 {
    if t1.len() == 1 {
        t2[0] - t1[0]
    } else {
        t1.iter()
            .zip(t2)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }
}

/// Shift operator: the point at `t` moves to `t - x`, marks are unchanged.
pub fn translate(pattern: &PointPattern, x: &[f64]) -> Result<PointPattern> {
    check_dim(pattern.dim, x.len())?;
    let points = pattern
        .points
        .iter()
        .map(|p| MarkedPoint {
            location: p.location.iter().zip(x).map(|(t, s)| t - s).collect(),
            y: p.y,
            z: p.z,
        })
        .collect();
    Ok(PointPattern {
        dim: pattern.dim,
        points,
        bounds: pattern.bounds.shifted(x),
    })
}

/// Calls `visit(i, j)` for every ordered pair with `points[i]` inside `win`
/// and `dis(points[i], points[j])` inside `band`.
///
/// For `d = 1` candidates are located by binary search on the sorted
/// coordinates; for `d > 1` points are bucketed in a grid with cells slightly
/// wider than `band.hi()`. Both produce exactly the pair set of
/// [`for_each_pair_naive`], although in a different order.
pub fn for_each_pair<F: FnMut(usize, usize)>(
    pattern: &PointPattern,
    win: &Window,
    band: &Band,
    mut visit: F,
) -> Result<()> {
    band.check_dim(pattern.dim)?;
    check_dim(pattern.dim, win.dim())?;
    let pts = &pattern.points;
    if pts.len() < 2 {
        return Ok(());
    }
    if pattern.dim == 1 {
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| pts[a].location[0].total_cmp(&pts[b].location[0]));
        let xs: Vec<f64> = order.iter().map(|&i| pts[i].location[0]).collect();
        for (i, p) in pts.iter().enumerate() {
            if !win.contains(&p.location) {
                continue;
            }
            let t1 = p.location[0];
            // fl(x - t1) is monotone in x, so both predicates split `xs` into
            // a prefix and a suffix.
            let start = xs.partition_point(|&x| x - t1 < band.lo);
            let end = xs.partition_point(|&x| x - t1 <= band.hi);
            for &j in &order[start..end.max(start)] {
                if j != i {
                    visit(i, j);
                }
            }
        }
        return Ok(());
    }

    if !(band.hi > 0.0) || !band.hi.is_finite() {
        for_each_pair_naive(pattern, win, band, visit)?;
        return Ok(());
    }
    let cell = band.hi * (1.0 + 1e-9);
    let key = |loc: &[f64]| -> Vec<i64> { loc.iter().map(|x| (x / cell).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (j, p) in pts.iter().enumerate() {
        grid.entry(key(&p.location)).or_default().push(j);
    }
    let offsets = neighbour_offsets(pattern.dim);
    let mut probe = vec![0i64; pattern.dim];
    for (i, p) in pts.iter().enumerate() {
        if !win.contains(&p.location) {
            continue;
        }
        let home = key(&p.location);
        for off in &offsets {
            for (k, slot) in probe.iter_mut().enumerate() {
                *slot = home[k] + off[k];
            }
            let Some(bucket) = grid.get(&probe) else {
                continue;
            };
            for &j in bucket {
                if j != i && band.contains(displacement(&p.location, &pts[j].location)) {
                    visit(i, j);
                }
            }
        }
    }
    Ok(())
}

fn neighbour_offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-1..=1).map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o);
                    v
                })
            })
            .collect();
    }
    out
}

/// Reference O(n²) enumeration with the same contract as [`for_each_pair`].
pub fn for_each_pair_naive<F: FnMut(usize, usize)>(
    pattern: &PointPattern,
    win: &Window,
    band: &Band,
    mut visit: F,
) -> Result<()> {
    band.check_dim(pattern.dim)?;
    check_dim(pattern.dim, win.dim())?;
    let pts = &pattern.points;
    for (i, p) in pts.iter().enumerate() {
        if !win.contains(&p.location) {
            continue;
        }
        for (j, q) in pts.iter().enumerate() {
            if i != j && band.contains(displacement(&p.location, &q.location)) {
                visit(i, j);
            }
        }
    }
    Ok(())
}

/// Number of qualifying ordered pairs, the unweighted `α̂^{(2)}(C(T, I))`.
pub fn pair_count(pattern: &PointPattern, win: &Window, band: &Band) -> Result<u64> {
    let mut n = 0u64;
    for_each_pair(pattern, win, band, |_, _| n += 1)?;
    Ok(n)
}

/// `Σ z1 · f(y1, y2)` over qualifying ordered pairs.
///
/// Signed mark functions are accepted; the sum then equals the difference of
/// the sums for the positive and negative parts of `f`.
pub fn weighted_pair_sum(
    pattern: &PointPattern,
    win: &Window,
    band: &Band,
    f: &MarkFunction,
) -> Result<f64> {
    pair_sum_by(pattern, win, band, |p, q| p.z * f.eval(p.y, q.y))
}

/// Variant of [`weighted_pair_sum`] weighting each pair by the *second*
/// point's `z` and evaluating `f(y2, y1)`.
pub fn weighted_pair_sum_swapped(
    pattern: &PointPattern,
    win: &Window,
    band: &Band,
    f: &MarkFunction,
) -> Result<f64> {
    pair_sum_by(pattern, win, band, |p, q| q.z * f.eval(q.y, p.y))
}

/// Sum of `term(p1, p2)` over qualifying ordered pairs. Fails on the first
/// non-finite term.
pub fn pair_sum_by<F>(pattern: &PointPattern, win: &Window, band: &Band, term: F) -> Result<f64>
where
    F: Fn(&MarkedPoint, &MarkedPoint) -> f64,
{
    let pts = pattern.points();
    let mut sum = 0.0;
    let mut bad: Option<Error> = None;
    for_each_pair(pattern, win, band, |i, j| {
        if bad.is_some() {
            return;
        }
        let v = term(&pts[i], &pts[j]);
        if v.is_finite() {
            sum += v;
        } else {
            bad = Some(Error::NonFinite {
                first: i,
                second: j,
                value: v,
            });
        }
    })?;
    match bad {
        Some(e) => Err(e),
        None => Ok(sum),
    }
}

/// `n(t, Φ, I)` for every point `t` inside the window, as `(index, count)`
/// in index order.
pub fn neighbour_counts(
    pattern: &PointPattern,
    win: &Window,
    band: &Band,
) -> Result<Vec<(usize, u64)>> {
    let mut counts = vec![0u64; pattern.len()];
    for_each_pair(pattern, win, band, |i, _| counts[i] += 1)?;
    Ok(pattern
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| win.contains(&p.location))
        .map(|(i, _)| (i, counts[i]))
        .collect())
}
