//! Closed-form reference laws, discretized onto Chebyshev-clustered grids.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::measure::{Domain, Measure, GL8};

pub fn bernoulli() -> Measure {
    Measure::atomic(Domain::Real, &[(-1.0, 0.5), (1.0, 0.5)]).unwrap()
}

/// Grid on [lo, hi] clustered towards both ends.
pub fn chebyshev_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && hi > lo);
    let mut g: Vec<f64> = (0..n)
        .map(|i| {
            let th = PI * i as f64 / (n - 1) as f64;
            lo + (hi - lo) * 0.5 * (1.0 - th.cos())
        })
        .collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

// Mass of f on [a, a+h] (or [a-h, a] when h < 0), allowing an inverse
// square-root singularity at a.
fn edge_mass(f: &impl Fn(f64) -> f64, a: f64, h: f64) -> f64 {
    let mut acc = 0.0;
    for (node, w) in GL8 {
        let s = 0.5 * (node + 1.0);
        acc += 0.5 * w * f(a + h * s * s) * 2.0 * s;
    }
    acc * h.abs()
}

/// Samples a density on [lo, hi]; singular endpoint values are replaced so the
/// end cells carry their exact mass.
pub fn from_density(domain: Domain, lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Measure {
    let grid = chebyshev_grid(lo, hi, n);
    let mut values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    for (end, nb) in [(0, 1), (n - 1, n - 2)] {
        if !values[end].is_finite() {
            let h = grid[nb] - grid[end];
            let m = edge_mass(&f, grid[end], h);
            values[end] = (2.0 * m / h.abs() - values[nb]).max(0.0);
        }
    }
    Measure::new(domain, vec![], grid, values).unwrap()
}

pub fn semicircle_density(x: f64, center: f64, variance: f64) -> f64 {
    let r2 = 4.0 * variance;
    let d = x - center;
    if d * d >= r2 {
        0.0
    } else {
        2.0 / (PI * r2) * (r2 - d * d).sqrt()
    }
}

pub fn semicircle(center: f64, variance: f64, n: usize) -> Measure {
    let r = 2.0 * variance.sqrt();
    from_density(Domain::Real, center - r, center + r, n, |x| semicircle_density(x, center, variance))
}

/// Cauchy transform of the centered semicircle of the given variance.
pub fn semicircle_cauchy(z: Complex64, variance: f64) -> Complex64 {
    // branch with G ~ 1/z at infinity
    let s = (z * z - 4.0 * variance).sqrt();
    let s = if (s / z).re < 0.0 { -s } else { s };
    (z - s) / (2.0 * variance)
}

pub fn uniform(a: f64, b: f64, n: usize) -> Measure {
    let grid: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let values = vec![1.0 / (b - a); n];
    Measure::new(Domain::Real, vec![], grid, values).unwrap()
}

pub fn arcsine_density(x: f64, a: f64, b: f64) -> f64 {
    if x <= a || x >= b {
        if x == a || x == b {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        1.0 / (PI * ((x - a) * (b - x)).sqrt())
    }
}

pub fn arcsine(a: f64, b: f64, n: usize) -> Measure {
    from_density(Domain::Real, a, b, n, |x| arcsine_density(x, a, b))
}

pub fn arcsine_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= a {
        0.0
    } else if x >= b {
        1.0
    } else {
        2.0 / PI * ((x - a) / (b - a)).sqrt().asin()
    }
}

/// Density of the free Poisson law with the given rate (jump size one).
pub fn marchenko_pastur_density(x: f64, rate: f64) -> f64 {
    let a = (1.0 - rate.sqrt()).powi(2);
    let b = (1.0 + rate.sqrt()).powi(2);
    if x < a || x > b {
        return 0.0;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    ((b - x) * (x - a)).max(0.0).sqrt() / (TAU * x)
}

pub fn marchenko_pastur(rate: f64, n: usize) -> Measure {
    let a = (1.0 - rate.sqrt()).powi(2);
    let b = (1.0 + rate.sqrt()).powi(2);
    let ac = from_density(Domain::Positive, a, b, n, |x| marchenko_pastur_density(x, rate));
    if rate >= 1.0 {
        return ac;
    }
    let w = rate;
    let values = ac.values().iter().map(|v| v * w).collect();
    Measure::new(Domain::Positive, vec![crate::measure::Atom::new(0.0, 1.0 - rate)], ac.grid().to_vec(), values)
        .unwrap()
}

/// Law of the product of two free projections of trace 1/2.
pub fn projection_product(n: usize) -> Measure {
    let ac = from_density(Domain::Positive, 0.0, 1.0, n, |x| arcsine_density(x, 0.0, 1.0));
    let values = ac.values().iter().map(|v| 0.5 * v).collect();
    Measure::new(Domain::Positive, vec![crate::measure::Atom::new(0.0, 0.5)], ac.grid().to_vec(), values).unwrap()
}

pub fn projection() -> Measure {
    Measure::atomic(Domain::Positive, &[(0.0, 0.5), (1.0, 0.5)]).unwrap()
}

pub fn uniform_circle(n: usize) -> Measure {
    let grid: Vec<f64> = (0..n).map(|i| TAU * i as f64 / (n - 1) as f64).collect();
    Measure::new(Domain::Circle, vec![], grid, vec![1.0 / TAU; n]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arcsine_discretization_matches_cdf() {
        let m = arcsine(-2.0, 2.0, 801);
        let mut worst: f64 = 0.0;
        for i in 0..=200 {
            let x = -2.0 + 4.0 * i as f64 / 200.0;
            worst = worst.max((m.cdf(x).unwrap() - arcsine_cdf(x, -2.0, 2.0)).abs());
        }
        // piecewise-linear error near the inverse square-root edges is O(1/n)
        assert!(worst < 3e-4, "{worst}");
    }

    #[test]
    fn marchenko_pastur_moments() {
        // moments of free Poisson(1) are Catalan numbers 1, 2, 5
        let m = marchenko_pastur(1.0, 2001);
        assert!((m.moment(1).unwrap() - 1.0).abs() < 5e-4);
        assert!((m.moment(2).unwrap() - 2.0).abs() < 1e-3);
        assert!((m.moment(3).unwrap() - 5.0).abs() < 5e-3);
        let m = marchenko_pastur(0.5, 1001);
        assert!((m.mass_at_zero() - 0.5).abs() < 1e-12);
        assert!((m.moment(1).unwrap() - 0.5).abs() < 1e-5);
    }

    #[test]
    fn semicircle_cauchy_branch() {
        let g = semicircle_cauchy(Complex64::new(0.0, 2.0), 1.0);
        assert!((g - Complex64::new(0.0, 1.0 - 2f64.sqrt())).norm() < 1e-14);
        let g = semicircle_cauchy(Complex64::new(-3.0, 0.1), 1.0);
        assert!(g.im < 0.0 && g.re < 0.0);
    }
}
