//! Monte Carlo certification of one-sided small-deviation bounds for convex
//! functions of Gaussian (and exponential, chi-squared) vectors.
//!
//! The library is organized around five pieces:
//!
//! * [`rng`] — counter-based, index-addressable sampling for the three source
//!   distributions, plus high-precision normal special functions in
//!   [`special`]. Every variate is a pure function of
//!   `(master_seed, stream_id, index)`, so results never depend on worker
//!   count or chunk scheduling.
//! * [`bodies`] — a catalog of convex test functions and norm gauges
//!   (`lp` norms, polytope gauges, Gaussian-process suprema, ...) with exact
//!   metadata and randomized convexity/unconditionality oracles.
//! * [`mc`] — estimators for the statistical quantities the bounds are stated
//!   in: median, positive-part moment, variance, the right CDF derivative at
//!   the median, weak-L1 norm, small-ball geometry parameters and negative
//!   moments, each with quantified uncertainty.
//! * [`bounds`] — closed-form evaluation of the deviation / small-ball /
//!   negative-moment bounds with pinned constants, and the comparator that
//!   certifies empirical tail curves against them.
//! * [`jl`] — a variance-aware Johnson–Lindenstrauss harness embedding point
//!   sets into arbitrary normed targets, with capacity planning and empirical
//!   failure-rate verification.
//!
//! [`suite`] ties these together into reproducible experiment suites with
//! machine-readable reports; the `gaussdev` binary is a thin CLI over it.

pub mod bodies;
pub mod bounds;
pub mod error;
pub mod jl;
pub mod mc;
pub mod rng;
pub mod special;
pub mod stats;
pub mod suite;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
