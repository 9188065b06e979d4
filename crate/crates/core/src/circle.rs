//! Measures on the unit circle: first moment, S at the origin, rotations.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::measure::{Atom, Domain, Measure};
use crate::transforms::C64;

/// First moments at or below this modulus count as zero.
pub const MSTAR_THRESHOLD: f64 = 1e-9;

fn require_circle(m: &Measure) -> Result<()> {
    if m.domain() != Domain::Circle {
        return Err(Error::Domain("expected a circle measure".into()));
    }
    Ok(())
}

/// Integral of e^{i theta}.
pub fn circle_mean(m: &Measure) -> Result<C64> {
    require_circle(m)?;
    m.circle_moment(1)
}

/// S at the origin, the reciprocal of the first moment.
pub fn s_zero(m: &Measure) -> Result<C64> {
    let mean = circle_mean(m)?;
    if mean.norm() <= MSTAR_THRESHOLD {
        return Err(Error::NotInMStar);
    }
    Ok(1.0 / mean)
}

pub fn lambda_circle(m: &Measure) -> Result<f64> {
    Ok(s_zero(m)?.norm())
}

/// Push-forward under theta -> theta + shift (mod 2 pi), i.e. box-times a Dirac.
pub fn rotate(m: &Measure, theta: f64) -> Result<Measure> {
    require_circle(m)?;
    let atoms: Vec<Atom> = m.atoms().iter().map(|a| Atom::new(a.x + theta, a.mass)).collect();
    if m.grid().is_empty() {
        return Measure::new(Domain::Circle, atoms, vec![], vec![]);
    }
    // images of the old breakpoints plus the cut at 0 = 2 pi
    let mut grid: Vec<f64> = m.grid().iter().map(|g| (g + theta).rem_euclid(TAU)).collect();
    grid.push(0.0);
    grid.push(TAU);
    // the density may jump at the ends of its grid; keep those jumps sharp
    let (first, last) = (m.grid()[0], m.grid()[m.grid().len() - 1]);
    for x in [(first + theta).rem_euclid(TAU) - 1e-12, (last + theta).rem_euclid(TAU) + 1e-12] {
        if x > 0.0 && x < TAU {
            grid.push(x);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let n = grid.len();
    grid[n - 1] = TAU;
    let values: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let src = (x - theta).rem_euclid(TAU);
            // rem_euclid maps the right end of the circle to 0; keep it on the right
            let src = if i == n - 1 && src == 0.0 { TAU } else { src };
            m.density(src)
        })
        .collect();
    Measure::new(Domain::Circle, atoms, grid, values)
}
