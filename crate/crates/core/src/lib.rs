//! Simulation and estimation of fixed-order clusters in random geometric
//! graphs and the Poisson Boolean model.
//!
//! The crate is `no_std` with `alloc`. Everything here is a pure function of
//! its arguments and seed; parallel execution is delegated to an
//! [`exec::Executor`] supplied by the caller, and results never depend on how
//! work is scheduled.
//!
//! Module map:
//!
//! * [`geometry`]: ball volumes, connectivity, union volumes, and the
//!   quasi-gravitational energy `g` with its finite-radius approximant.
//! * [`pointprocess`]: domains, densities, and seeded Poisson/binomial samplers.
//! * [`clusters`]: grid-hashed component census, the brute-force oracle, and
//!   origin-cluster simulation for the Boolean model.
//! * [`constants`]: the limit constants `alpha_k` and the sparse connectivity
//!   integral.
//! * [`mecke`]: Monte Carlo evaluation of exact finite-`n` means and their
//!   asymptotic predictors.
//! * [`stats`]: replicate runner, distributional distances, and limit-law
//!   samplers.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod clusters;
pub mod constants;
mod error;
pub mod estimate;
pub mod exec;
pub mod geometry;
pub mod math;
pub mod mecke;
pub mod pointprocess;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use estimate::Estimate;
pub use geometry::Configuration;
