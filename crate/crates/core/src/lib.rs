//! Numerical free probability: free additive and multiplicative convolution
//! through analytic transforms and subordination, the Khintchine functional,
//! and a random-matrix oracle.

pub mod additive;
pub mod cauchy;
pub mod circle;
pub mod error;
mod fixed_point;
pub mod inversion;
pub mod io;
pub mod khintchine;
pub mod laws;
pub mod measure;
pub mod multiplicative;
pub mod oracle;
pub mod transforms;

pub use error::{Error, Result};
pub use measure::{kolmogorov_distance, levy_distance, Atom, Domain, Interval, Measure};
