//! Numerical laboratory for random products of circle diffeomorphisms and
//! SL(2,R) matrices: Monte Carlo Lyapunov exponents, second-order analytic
//! expansions, cohomological-equation solvers and a KAM linearization loop.

pub mod cohomology;
pub mod config;
pub mod diffeo;
pub mod error;
pub mod experiments;
pub mod kam;
pub mod lyapunov;
pub mod matrix;
pub mod periodic;
pub mod report;

pub use error::{Error, Result};

/// Golden mean (sqrt(5)-1)/2, the workhorse diophantine angle in tests.
pub const GOLDEN_MEAN: f64 = 0.618033988749894848;
