#![allow(dead_code)]

use mppstat::pattern::{Band, Bounds, MarkedPoint, PointPattern, Window};
use mppstat::sim::{GroundSpec, MarkSpec, MixtureClass, MixtureSpec, ZRule};
use rand::Rng;

/// Grid of representable coordinates: multiples of 2^-10.
pub const TICK: f64 = 1.0 / 1024.0;

pub fn dyadic<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let a = (lo / TICK).ceil() as i64;
    let b = (hi / TICK).floor() as i64;
    rng.random_range(a..=b) as f64 * TICK
}

/// Odd multiple of 2^-11, so it never equals a displacement of dyadic points.
pub fn off_grid<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let h = TICK / 2.0;
    let a = (lo / h).ceil() as i64;
    let b = (hi / h).floor() as i64;
    let mut k = rng.random_range(a..=b);
    if k % 2 == 0 {
        k += 1;
    }
    k as f64 * h
}

/// Random simple pattern with dyadic coordinates on `[-buffer, extent + buffer]^dim`.
pub fn random_pattern<R: Rng>(rng: &mut R, dim: usize, n: usize, extent: f64, buffer: f64) -> PointPattern {
    let mut seen = std::collections::HashSet::new();
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let loc: Vec<f64> = (0..dim).map(|_| dyadic(rng, -buffer, extent + buffer)).collect();
        let key: Vec<u64> = loc.iter().map(|x| x.to_bits()).collect();
        if !seen.insert(key) {
            continue;
        }
        let y = dyadic(rng, -4.0, 4.0);
        let z = dyadic(rng, 0.0, 2.0);
        pts.push(MarkedPoint::new(loc, y, z));
    }
    PointPattern::new(dim, pts, Bounds::cube(dim, -buffer, extent + buffer).unwrap()).unwrap()
}

pub fn random_band<R: Rng>(rng: &mut R, dim: usize, max: f64) -> Band {
    if dim == 1 {
        let a = off_grid(rng, -max, max);
        let b = off_grid(rng, a, max + 1.0);
        Band::signed(a, b.max(a)).unwrap()
    } else {
        let a = off_grid(rng, 0.0, max);
        let b = off_grid(rng, a, max + 1.0);
        Band::absolute(a, b.max(a)).unwrap()
    }
}

pub fn window(dim: usize, t: f64) -> Window {
    Window::cube(dim, t).unwrap()
}

pub fn two_class(l1: f64, l2: f64) -> MixtureSpec {
    let class = |intensity, mean| MixtureClass {
        p: 0.5,
        ground: GroundSpec::Poisson { intensity },
        marks: MarkSpec::normal(mean, 1.0),
        z_rule: ZRule::ConstOne,
    };
    MixtureSpec {
        dim: 1,
        classes: vec![class(l1, 0.0), class(l2, 10.0)],
        window: None,
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
