//! Probability measures on the line, the half-line and the circle.
//!
//! A measure is a finite list of atoms plus an absolutely continuous part
//! whose density is piecewise linear on a grid and zero outside it.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atoms closer than this are merged by the constructor.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Real,
    Positive,
    Circle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub mass: f64,
}

impl Atom {
    pub fn new(x: f64, mass: f64) -> Self {
        Atom { x, mass }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lo - slack && x <= self.hi + slack
    }

    pub fn is_within(&self, outer: &Interval, slack: f64) -> bool {
        self.lo >= outer.lo - slack && self.hi <= outer.hi + slack
    }

    /// Minkowski sum.
    pub fn plus(&self, other: &Interval) -> Interval {
        Interval::new(self.lo + other.lo, self.hi + other.hi)
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }
}

#[derive(Clone, Debug)]
pub struct Measure {
    domain: Domain,
    atoms: Vec<Atom>,
    grid: Vec<f64>,
    values: Vec<f64>,
    // AC cdf at the grid nodes
    cum: Vec<f64>,
    // atom mass up to and including atom i
    atom_cum: Vec<f64>,
}

impl PartialEq for Measure {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain
            && self.atoms == other.atoms
            && self.grid == other.grid
            && self.values == other.values
    }
}

impl Measure {
    /// Validates, merges nearby atoms and renormalizes to total mass one.
    pub fn new(domain: Domain, atoms: Vec<Atom>, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let bad = |s: String| Err(Error::InvalidMeasure(s));
        if grid.len() != values.len() {
            return bad(format!("grid has {} points but {} values", grid.len(), values.len()));
        }
        if grid.len() == 1 {
            return bad("density grid needs at least two points".into());
        }
        for w in grid.windows(2) {
            if !(w[1] > w[0]) {
                return bad(format!("grid not strictly increasing at {} -> {}", w[0], w[1]));
            }
        }
        if grid.iter().any(|g| !g.is_finite()) {
            return bad("non-finite grid point".into());
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return bad(format!("density value {v} is negative or non-finite"));
        }
        let mut atoms: Vec<Atom> = atoms.into_iter().filter(|a| a.mass != 0.0).collect();
        if let Some(a) = atoms.iter().find(|a| !(a.x.is_finite() && a.mass.is_finite() && a.mass > 0.0)) {
            return bad(format!("atom at {} has invalid mass {}", a.x, a.mass));
        }
        match domain {
            Domain::Positive => {
                if atoms.iter().any(|a| a.x < 0.0) || grid.first().is_some_and(|g| *g < 0.0) {
                    return bad("positive-halfline measure has negative locations".into());
                }
            }
            Domain::Circle => {
                for a in atoms.iter_mut() {
                    a.x = a.x.rem_euclid(TAU);
                    if a.x >= TAU {
                        a.x = 0.0;
                    }
                }
                if grid.first().is_some_and(|g| *g < 0.0) || grid.last().is_some_and(|g| *g > TAU) {
                    return bad("circle density grid must lie in [0, 2pi]".into());
                }
            }
            Domain::Real => {}
        }

        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if (a.x - last.x).abs() < ATOM_MERGE_TOL => {
                    let m = last.mass + a.mass;
                    last.x = (last.x * last.mass + a.x * a.mass) / m;
                    last.mass = m;
                }
                _ => merged.push(a),
            }
        }

        let (mut grid, mut values) = (grid, values);
        let ac: f64 = trapezoid(&grid, &values);
        if ac == 0.0 {
            grid.clear();
            values.clear();
        }
        let total = ac + merged.iter().map(|a| a.mass).sum::<f64>();
        if !(total > 0.0 && total.is_finite()) {
            return bad(format!("total mass {total} is not positive"));
        }
        let atom_mass: f64 = merged.iter().map(|a| a.mass).sum();
        if ac > 0.0 && (total - 1.0).abs() < 1e-9 && atom_mass < 1.0 {
            // rounding-level defect: keep atom masses bit-exact
            let s = (1.0 - atom_mass) / ac;
            values.iter_mut().for_each(|v| *v *= s);
        } else {
            for a in merged.iter_mut() {
                a.mass /= total;
            }
            for v in values.iter_mut() {
                *v /= total;
            }
        }
        Ok(Self::assemble(domain, merged, grid, values))
    }

    fn assemble(domain: Domain, atoms: Vec<Atom>, grid: Vec<f64>, values: Vec<f64>) -> Self {
        let mut cum = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        for i in 0..grid.len() {
            if i > 0 {
                acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
            }
            cum.push(acc);
        }
        let mut atom_cum = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for a in &atoms {
            acc += a.mass;
            atom_cum.push(acc);
        }
        Measure { domain, atoms, grid, values, cum, atom_cum }
    }

    pub fn dirac(x: f64) -> Self {
        Self::assemble(Domain::Real, vec![Atom::new(x, 1.0)], vec![], vec![])
    }

    pub fn atomic(domain: Domain, atoms: &[(f64, f64)]) -> Result<Self> {
        Measure::new(domain, atoms.iter().map(|&(x, m)| Atom::new(x, m)).collect(), vec![], vec![])
    }

    /// Same measure with a different domain tag (validated).
    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        Measure::new(domain, self.atoms.clone(), self.grid.clone(), self.values.clone())
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ac_mass(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    pub fn atom_mass(&self) -> f64 {
        self.atom_cum.last().copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.ac_mass() + self.atom_mass()
    }

    /// Mass of the atom at `x` (within `tol`), zero if none.
    pub fn mass_at(&self, x: f64, tol: f64) -> f64 {
        self.atoms.iter().filter(|a| (a.x - x).abs() <= tol).map(|a| a.mass).sum()
    }

    pub fn mass_at_zero(&self) -> f64 {
        self.mass_at(0.0, ATOM_MERGE_TOL)
    }

    /// Location of the point mass if the measure is a Dirac.
    pub fn as_dirac(&self) -> Option<f64> {
        if self.grid.is_empty() && self.atoms.len() == 1 {
            Some(self.atoms[0].x)
        } else {
            None
        }
    }

    /// Positive-halfline tag, or real-line tag with support in [0, inf).
    pub fn on_half_line(&self) -> bool {
        match self.domain {
            Domain::Positive => true,
            Domain::Real => self.support().lo >= 0.0,
            Domain::Circle => false,
        }
    }

    pub fn is_dirac(&self) -> bool {
        self.as_dirac().is_some()
    }

    /// Density at `x` (piecewise-linear interpolation, zero outside the grid).
    pub fn density(&self, x: f64) -> f64 {
        match self.cell_of(x) {
            Some(i) => {
                let (a, b) = (self.grid[i], self.grid[i + 1]);
                let s = (self.values[i + 1] - self.values[i]) / (b - a);
                // interpolating between nonnegative values can round below zero
                (self.values[i] + s * (x - a)).max(0.0)
            }
            None => 0.0,
        }
    }

    /// Index of the grid cell [g_i, g_{i+1}] containing x.
    fn cell_of(&self, x: f64) -> Option<usize> {
        let n = self.grid.len();
        if n < 2 || x < self.grid[0] || x > self.grid[n - 1] {
            return None;
        }
        let i = self.grid.partition_point(|g| *g <= x);
        Some(i.clamp(1, n - 1) - 1)
    }

    fn ac_cdf(&self, t: f64) -> f64 {
        let n = self.grid.len();
        if n == 0 || t <= self.grid[0] {
            return 0.0;
        }
        if t >= self.grid[n - 1] {
            return self.cum[n - 1];
        }
        let i = self.cell_of(t).unwrap();
        let h = self.grid[i + 1] - self.grid[i];
        let s = (self.values[i + 1] - self.values[i]) / h;
        let u = t - self.grid[i];
        self.cum[i] + self.values[i] * u + 0.5 * s * u * u
    }

    fn require_linear(&self, op: &str) -> Result<()> {
        if self.domain == Domain::Circle {
            Err(Error::Domain(format!("{op} is undefined for circle measures")))
        } else {
            Ok(())
        }
    }

    /// Right-continuous distribution function.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        self.require_linear("cdf")?;
        Ok(self.cdf_unchecked(t))
    }

    pub(crate) fn cdf_unchecked(&self, t: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.x <= t);
        let a = if k == 0 { 0.0 } else { self.atom_cum[k - 1] };
        (a + self.ac_cdf(t)).min(1.0)
    }

    /// Left limit F(t-).
    pub(crate) fn cdf_left(&self, t: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.x < t);
        let a = if k == 0 { 0.0 } else { self.atom_cum[k - 1] };
        (a + self.ac_cdf(t)).min(1.0)
    }

    /// Sorted, deduplicated atom locations and grid points.
    fn events(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.atoms.iter().map(|a| a.x).chain(self.grid.iter().copied()).collect();
        ev.sort_by(f64::total_cmp);
        ev.dedup();
        ev
    }

    /// inf{t : F(t) >= p}, or inf{t : F(t) > p} when `strict`.
    fn inverse(&self, p: f64, strict: bool) -> f64 {
        let hit = |v: f64| if strict { v > p } else { v >= p };
        let ev = self.events();
        let mut prev = f64::NEG_INFINITY;
        for &e in &ev {
            if hit(self.cdf_unchecked(e)) {
                if !hit(self.cdf_left(e)) || prev == f64::NEG_INFINITY {
                    return e;
                }
                return self.solve_piece(prev, e, p);
            }
            prev = e;
        }
        *ev.last().unwrap_or(&0.0)
    }

    // Continuous crossing of level p inside the open piece (prev, e).
    fn solve_piece(&self, prev: f64, e: f64, p: f64) -> f64 {
        let mid = 0.5 * (prev + e);
        let Some(i) = self.cell_of(mid) else { return prev };
        let k = self.atoms.partition_point(|a| a.x <= prev);
        let a_mass = if k == 0 { 0.0 } else { self.atom_cum[k - 1] };
        let g = self.grid[i];
        let h = self.grid[i + 1] - g;
        let f0 = self.values[i];
        let s = (self.values[i + 1] - f0) / h;
        let c = p - a_mass - self.cum[i];
        if c <= 0.0 {
            return prev.max(g);
        }
        let disc = (f0 * f0 + 2.0 * s * c).max(0.0);
        let u = 2.0 * c / (f0 + disc.sqrt());
        (g + u).clamp(prev, e)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.require_linear("quantile")?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Argument(format!("quantile level {p} not in (0,1)")));
        }
        Ok(self.inverse(p, false))
    }

    /// Translation making the measure t-centered, and the shift applied.
    pub fn t_center(&self, t: f64) -> Result<(Measure, f64)> {
        if self.domain != Domain::Real {
            return Err(Error::Domain("t_center needs a real-line measure".into()));
        }
        let shift = -self.quantile(t)?;
        Ok((self.shift(shift)?, shift))
    }

    /// Translation by c. Half-line measures come back tagged real-line.
    pub fn shift(&self, c: f64) -> Result<Measure> {
        self.require_linear("shift")?;
        if c == 0.0 {
            return Ok(self.clone());
        }
        let atoms = self.atoms.iter().map(|a| Atom::new(a.x + c, a.mass)).collect();
        let grid = self.grid.iter().map(|g| g + c).collect();
        Ok(Self::assemble(Domain::Real, atoms, grid, self.values.clone()))
    }

    /// Push-forward under t -> lambda t.
    pub fn dilate(&self, lambda: f64) -> Result<Measure> {
        self.require_linear("dilate")?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Argument(format!("dilation factor {lambda} must be positive")));
        }
        if lambda == 1.0 {
            return Ok(self.clone());
        }
        let atoms = self.atoms.iter().map(|a| Atom::new(a.x * lambda, a.mass)).collect();
        let grid = self.grid.iter().map(|g| g * lambda).collect();
        let values = self.values.iter().map(|v| v / lambda).collect();
        Ok(Self::assemble(self.domain, atoms, grid, values))
    }

    /// Closed convex hull of the support.
    pub fn support(&self) -> Interval {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if let (Some(f), Some(l)) = (self.atoms.first(), self.atoms.last()) {
            lo = f.x;
            hi = l.x;
        }
        if let Some(ac) = self.ac_support() {
            lo = lo.min(ac.lo);
            hi = hi.max(ac.hi);
        }
        Interval::new(lo, hi)
    }

    /// Hull of the set where the density is positive.
    pub fn ac_support(&self) -> Option<Interval> {
        let n = self.values.len();
        let first = self.values.iter().position(|v| *v > 0.0)?;
        let last = self.values.iter().rposition(|v| *v > 0.0)?;
        let lo = self.grid[first.saturating_sub(1)];
        let hi = self.grid[(last + 1).min(n - 1)];
        Some(Interval::new(lo, hi))
    }

    pub fn support_diameter(&self) -> f64 {
        self.support().width()
    }

    /// log(max support) - log(min support); infinite if the support reaches 0.
    pub fn log_diameter(&self) -> Result<f64> {
        if !self.on_half_line() {
            return Err(Error::Domain("log_diameter needs a positive-halfline measure".into()));
        }
        let s = self.support();
        if s.lo <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(s.hi.ln() - s.lo.ln())
    }

    /// Real moment; exact on the piecewise-linear density up to k = 14.
    pub fn moment(&self, k: u32) -> Result<f64> {
        self.require_linear("moment")?;
        let ki = k as i32;
        let mut m: f64 = self.atoms.iter().map(|a| a.mass * a.x.powi(ki)).sum();
        m += self.integrate_cells(|x| x.powi(ki));
        Ok(m)
    }

    /// Trigonometric moment of a circle measure, integral of e^{ik theta}.
    pub fn circle_moment(&self, k: i32) -> Result<Complex64> {
        if self.domain != Domain::Circle {
            return Err(Error::Domain("circle_moment needs a circle measure".into()));
        }
        let e = |th: f64| Complex64::from_polar(1.0, k as f64 * th);
        let mut m: Complex64 = self.atoms.iter().map(|a| e(a.x) * a.mass).sum();
        let re = self.integrate_cells(|th| (k as f64 * th).cos());
        let im = self.integrate_cells(|th| (k as f64 * th).sin());
        m += Complex64::new(re, im);
        Ok(m)
    }

    /// Integral of g(x) f(x) over the AC part with 8-point Gauss-Legendre per cell.
    pub(crate) fn integrate_cells(&self, g: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.grid.len().saturating_sub(1) {
            let (a, b) = (self.grid[i], self.grid[i + 1]);
            let (fa, fb) = (self.values[i], self.values[i + 1]);
            if fa == 0.0 && fb == 0.0 {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut cell = 0.0;
            for (node, w) in GL8 {
                let x = mid + half * node;
                let f = fa + (fb - fa) * (0.5 + 0.5 * node);
                cell += w * g(x) * f;
            }
            acc += half * cell;
        }
        acc
    }

    /// Restricts to [quantile(tail), quantile(1 - tail)] and renormalizes.
    /// Returns the truncated measure and the mass removed.
    pub fn truncate(&self, tail: f64) -> Result<(Measure, f64)> {
        self.require_linear("truncate")?;
        let lo = self.quantile(tail)?;
        let hi = self.quantile(1.0 - tail)?;
        let atoms: Vec<Atom> = self.atoms.iter().copied().filter(|a| a.x >= lo && a.x <= hi).collect();
        let mut grid = Vec::new();
        let mut values = Vec::new();
        if !self.grid.is_empty() {
            let a = lo.max(self.grid[0]);
            let b = hi.min(*self.grid.last().unwrap());
            if b > a {
                grid.push(a);
                values.push(self.density(a));
                for (g, v) in self.grid.iter().zip(&self.values) {
                    if *g > a && *g < b {
                        grid.push(*g);
                        values.push(*v);
                    }
                }
                grid.push(b);
                values.push(self.density(b));
            }
        }
        let kept = atoms.iter().map(|a| a.mass).sum::<f64>() + trapezoid(&grid, &values);
        let m = Measure::new(self.domain, atoms, grid, values)?;
        Ok((m, (1.0 - kept).max(0.0)))
    }

    /// Closure of {t : eps < F(t) < 1 - eps} as an interval.
    pub fn omega_interval(&self, eps: f64) -> Result<Interval> {
        self.require_linear("omega_interval")?;
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Argument(format!("epsilon {eps} not in (0, 1/2)")));
        }
        let lo = self.inverse(eps, true);
        let hi = self.inverse(1.0 - eps, false);
        Ok(Interval::new(lo.min(hi), hi))
    }
}

pub(crate) const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2).zip(values.windows(2)).map(|(g, v)| 0.5 * (v[0] + v[1]) * (g[1] - g[0])).sum()
}

/// sup_t [F_a(t - da) - F_b(t - db)], exact for atoms plus piecewise-linear densities.
fn sup_diff(a: &Measure, da: f64, b: &Measure, db: f64) -> f64 {
    // each event keeps its unshifted location so (x + d) - d rounding cannot
    // step over an atom
    let mut pts: Vec<(f64, Option<f64>, Option<f64>)> =
        a.events().into_iter().map(|x| (x + da, Some(x), None)).collect();
    pts.extend(b.events().into_iter().map(|y| (y + db, None, Some(y))));
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    let fa = |t: f64| a.cdf_unchecked(t - da);
    let fb = |t: f64| b.cdf_unchecked(t - db);
    let mut best: f64 = 0.0;
    for (j, &(p, xa, xb)) in pts.iter().enumerate() {
        let ua = xa.unwrap_or(p - da);
        let ub = xb.unwrap_or(p - db);
        best = best.max(a.cdf_unchecked(ua) - b.cdf_unchecked(ub));
        best = best.max(a.cdf_left(ua) - b.cdf_left(ub));
        if let Some(&(q, _, _)) = pts.get(j + 1) {
            if q <= p {
                continue;
            }
            // D' is linear on (p, q); check its root
            let slope_at = |t: f64| a.density(t - da) - b.density(t - db);
            let (t0, t1) = (p + 0.25 * (q - p), p + 0.75 * (q - p));
            let (d0, d1) = (slope_at(t0), slope_at(t1));
            if d0 > d1 {
                let t = t0 + d0 * (t1 - t0) / (d0 - d1);
                if t > p && t < q {
                    best = best.max(fa(t) - fb(t));
                }
            }
        }
    }
    best
}

/// d_inf(m1, m2) = sup_t |F1(t) - F2(t)|.
pub fn kolmogorov_distance(m1: &Measure, m2: &Measure) -> Result<f64> {
    m1.require_linear("kolmogorov_distance")?;
    m2.require_linear("kolmogorov_distance")?;
    Ok(sup_diff(m1, 0.0, m2, 0.0).max(sup_diff(m2, 0.0, m1, 0.0)).min(1.0))
}

/// Levy distance by bisection on epsilon to 1e-9.
pub fn levy_distance(m1: &Measure, m2: &Measure) -> Result<f64> {
    m1.require_linear("levy_distance")?;
    m2.require_linear("levy_distance")?;
    let slack = 1e-14;
    let ok = |e: f64| sup_diff(m1, e, m2, 0.0) <= e + slack && sup_diff(m2, 0.0, m1, -e) <= e + slack;
    if ok(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
