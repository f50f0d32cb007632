//! Operator calculus on finite-dimensional model operators: resolvent
//! classes, time-domain operators on uniform grids, contour-integral solvers
//! for Schrodinger and wave Cauchy problems, and a semilinear wave solver.

pub mod cauchy;
pub mod classes;
pub mod error;
pub mod linop;
pub mod semilinear;
mod sum;
pub mod time;

pub use error::{Error, Result};
pub use num_complex::Complex64;
