//! Inputs shared by the kernel benchmarks.

use freeconv::{laws, Domain, Measure};
use num_complex::Complex64;

pub fn semicircle() -> Measure {
    laws::semicircle(0.0, 1.0, 2001)
}

/// Three atoms, one of them heavy enough to survive addition.
pub fn atomic() -> Measure {
    Measure::atomic(Domain::Real, &[(-1.0, 0.6), (0.25, 0.3), (1.5, 0.1)]).unwrap()
}

/// Points on a horizontal segment at height `y`, where the Cauchy transform is evaluated.
pub fn probe_points(y: f64, n: usize) -> Vec<Complex64> {
    (0..n).map(|k| Complex64::new(-3.0 + 6.0 * k as f64 / (n - 1) as f64, y)).collect()
}
