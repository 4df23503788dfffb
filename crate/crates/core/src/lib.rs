//! Simulation and estimation of weighted mean marks for stationary marked
//! point processes that need not be ergodic.
//!
//! The crate is organised around a small pipeline:
//!
//! - [`pattern`]: marked point patterns, estimation windows, displacement
//!   bands and pair enumeration;
//! - [`markfn`]: mark functions `f(y1, y2)` and threshold families;
//! - [`sim`]: Poisson, hardcore and grid ground processes, iid and
//!   finite-range Gaussian-field marks, and finite ergodic mixtures;
//! - [`est`]: the single-realization ratio estimator and its equal-,
//!   pair- and arbitrarily weighted multi-realization combinations;
//! - [`weights`]: weight strategies and variance-minimizing combinations;
//! - [`infer`]: a normal approximation for mean marks above a threshold;
//! - [`oracle`] and [`conformance`]: closed-form and Monte Carlo targets;
//! - [`io`]: CSV persistence of patterns and estimates.
//!
//! ```
//! use mppstat::est::mu_hat_alpha;
//! use mppstat::markfn::MarkFunction;
//! use mppstat::pattern::{Band, Window};
//! use mppstat::sim::{sample_mixture, GroundSpec, MarkSpec, MixtureSpec};
//!
//! let spec = MixtureSpec::ergodic(1, GroundSpec::Poisson { intensity: 2.0 }, MarkSpec::normal(3.0, 1.0));
//! let win = Window::interval(100.0)?;
//! let band = Band::signed(0.5, 1.5)?;
//! let patterns: Vec<_> = sample_mixture(&spec, &win.buffered(band.reach())?, 20, 1)?
//!     .into_iter()
//!     .map(|r| r.pattern)
//!     .collect();
//! let est = mu_hat_alpha(&patterns, &win, &band, &MarkFunction::first())?;
//! assert!((est.value.unwrap() - 3.0).abs() < 0.2);
//! # Ok::<(), mppstat::error::Error>(())
//! ```
//!
//! A longer guide lives in the `book/` directory of the repository.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod pattern;
pub mod markfn;
pub mod sim;
pub mod est;
pub mod weights;
pub mod infer;
pub mod oracle;
pub mod conformance;
pub mod io;
pub mod stats;
pub mod linalg;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/patterns.md")]
    mod patterns {}
    #[doc = include_str!("../../../book/src/mark_functions.md")]
    mod mark_functions {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/inference.md")]
    mod inference {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
