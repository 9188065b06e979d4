//! Free additive convolution and the free additive power semigroup.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed_point::{Failed, Problem};
use crate::inversion::{invert, linspace, BoundaryG, ConvolutionReport, InversionOptions, Sample, DEFAULT_EPS};
use crate::measure::{Domain, Interval, Measure};
use crate::transforms::{Transforms, C64};

pub const DEFAULT_POINTS: usize = 2001;

/// Subordination functions at one point z.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Subordination {
    pub omega1: C64,
    pub omega2: C64,
    pub f: C64,
    pub iterations: usize,
    pub residual: f64,
}

/// h(w) = F(w) - w with its derivative.
fn h_dh(t: &Transforms, w: C64) -> (C64, C64) {
    let (f, df) = t.f_df(w);
    (f - w, df - 1.0)
}

fn solver_error(z: C64, e: Failed) -> Error {
    Error::Solver { z, iterations: e.iterations, residual: e.residual, trace: e.trace }
}

/// Subordination solver for a pair of real-line measures.
pub struct AdditiveSolver {
    t1: Transforms,
    t2: Transforms,
}

impl AdditiveSolver {
    pub fn new(m1: &Measure, m2: &Measure) -> Self {
        AdditiveSolver { t1: Transforms::new(m1), t2: Transforms::new(m2) }
    }

    // Phi(w2) = w2 - z - h1(z + h2(w2)); returns (Phi, Phi', w1)
    fn residual(&self, z: C64, w2: C64) -> (C64, C64, C64) {
        let (h2, dh2) = h_dh(&self.t2, w2);
        let w1 = z + h2;
        let (h1, dh1) = h_dh(&self.t1, w1);
        (w2 - z - h1, 1.0 - dh1 * dh2, w1)
    }

    /// Newton iteration on omega2, alternating with the plain fixed-point
    /// map when Newton stalls.
    pub fn solve(&self, z: C64, w2_init: Option<C64>) -> Result<Subordination> {
        if !(z.im > 0.0) {
            return Err(Error::Domain(format!("subordination needs Im z > 0, got {z}")));
        }
        let start = w2_init.filter(|w| w.im > 0.0 && w.is_finite()).unwrap_or(z);
        let problem = Problem {
            eval: |w2: C64| {
                let (p, d, _) = self.residual(z, w2);
                (p, d)
            },
            // omega2 <- z + h1(omega1) maps the half-plane above z into itself
            picard: |w2: C64, p: C64| w2 - p,
            admissible: |w2: C64| w2.is_finite() && w2.im >= 0.5 * z.im,
            tol: 1e-12 * (1.0 + z.norm()),
        };
        let s = problem.solve(start).map_err(|e| solver_error(z, e))?;
        let w2 = s.w;
        let w1 = z + h_dh(&self.t2, w2).0;
        let f = self.t1.f_df(w1).0;
        let residual = (w1 + w2 - z - f).norm();
        Ok(Subordination { omega1: w1, omega2: w2, f, iterations: s.iterations, residual })
    }
}

impl BoundaryG for AdditiveSolver {
    type State = C64;
    fn eval(&self, z: C64, warm: Option<C64>) -> Result<Sample<C64>> {
        let s = self.solve(z, warm)?;
        Ok(Sample { g: 1.0 / s.f, state: s.omega2, residual: s.residual, iterations: s.iterations })
    }
}

/// Subordination functions of m1 and m2 at z in the upper half-plane.
pub fn subordinators(m1: &Measure, m2: &Measure, z: C64) -> Result<Subordination> {
    AdditiveSolver::new(m1, m2).solve(z, None)
}

/// Atoms of m1 box-plus m2: a + b wherever m1({a}) + m2({b}) > 1.
pub fn predict_atoms(m1: &Measure, m2: &Measure) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for a in m1.atoms() {
        for b in m2.atoms() {
            let w = a.mass + b.mass - 1.0;
            if w > 0.0 {
                out.push((a.x + b.x, w));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Options shared by the additive operations.
#[derive(Clone, Debug, Default)]
pub struct AddOptions {
    pub grid: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
}

impl AddOptions {
    fn eps(&self) -> Vec<f64> {
        self.eps.clone().unwrap_or_else(|| DEFAULT_EPS.to_vec())
    }
}

/// Default output grid: the interval padded by 5% of its width on both sides.
pub fn padded_grid(hull: Interval, n: usize) -> Vec<f64> {
    let pad = 0.05 * hull.width().max(1e-3);
    linspace(hull.lo - pad, hull.hi + pad, n)
}

fn check_real(m: &Measure, name: &str) -> Result<()> {
    if m.domain() == Domain::Circle {
        return Err(Error::Domain(format!("{name} must be a real-line measure")));
    }
    Ok(())
}

fn column_top(hull: Interval) -> f64 {
    hull.width().max(1.0)
}

/// m1 box-plus m2 on a grid, with the inversion report.
pub fn free_add(m1: &Measure, m2: &Measure, opts: &AddOptions) -> Result<(Measure, ConvolutionReport)> {
    check_real(m1, "m1")?;
    check_real(m2, "m2")?;
    if let Some(c) = m2.as_dirac() {
        let m = m1.shift(c)?;
        return Ok((m.clone(), ConvolutionReport::exact(&m)));
    }
    if let Some(c) = m1.as_dirac() {
        let m = m2.shift(c)?;
        return Ok((m.clone(), ConvolutionReport::exact(&m)));
    }
    let hull = m1.support().plus(&m2.support());
    let grid = opts.grid.clone().unwrap_or_else(|| padded_grid(hull, DEFAULT_POINTS));
    let solver = AdditiveSolver::new(m1, m2);
    let inv = InversionOptions {
        domain: Domain::Real,
        column_top: column_top(hull),
        predicted_atoms: predict_atoms(m1, m2),
        ..Default::default()
    };
    invert(&solver, &grid, &opts.eps(), &inv)
}

/// Solver for omega in t omega - (t - 1) F(omega) = z, whose F(omega) is F of
/// the t-th free convolution power.
pub struct PowerSolver {
    t: f64,
    tr: Transforms,
    bernoulli: bool,
}

impl PowerSolver {
    pub fn new(m: &Measure, t: f64) -> Self {
        let b = m.grid().is_empty()
            && m.atoms().len() == 2
            && (m.atoms()[0].x + 1.0).abs() < 1e-15
            && (m.atoms()[1].x - 1.0).abs() < 1e-15
            && (m.atoms()[0].mass - 0.5).abs() < 1e-15;
        PowerSolver { t, tr: Transforms::new(m), bernoulli: b }
    }

    pub fn solve(&self, z: C64, warm: Option<C64>) -> Result<Sample<C64>> {
        let t = self.t;
        if self.bernoulli {
            // F(w) = w - 1/w gives omega = (z + sqrt(z^2 - 4(t-1)))/2 on the upper sheet
            let s = (z * z - 4.0 * (t - 1.0)).sqrt();
            let w = if ((z + s) * 0.5).im >= ((z - s) * 0.5).im { (z + s) * 0.5 } else { (z - s) * 0.5 };
            let f = w - 1.0 / w;
            let residual = (t * w - (t - 1.0) * f - z).norm();
            return Ok(Sample { g: 1.0 / f, state: w, residual, iterations: 0 });
        }
        let problem = Problem {
            eval: |w: C64| {
                let (f, df) = self.tr.f_df(w);
                (t * w - (t - 1.0) * f - z, t - (t - 1.0) * df)
            },
            picard: |w: C64, p: C64| w - p / t,
            admissible: |w: C64| w.is_finite() && w.im >= 0.5 * z.im / t,
            tol: 1e-12 * (1.0 + z.norm()),
        };
        let start = warm.filter(|w| w.im > 0.0 && w.is_finite()).unwrap_or(z);
        let s = problem.solve(start).map_err(|e| solver_error(z, e))?;
        let f = self.tr.f_df(s.w).0;
        Ok(Sample { g: 1.0 / f, state: s.w, residual: s.phi.norm(), iterations: s.iterations })
    }
}

impl BoundaryG for PowerSolver {
    type State = C64;
    fn eval(&self, z: C64, warm: Option<C64>) -> Result<Sample<C64>> {
        self.solve(z, warm)
    }
}

/// Atoms of the t-th power: t a with mass t m({a}) - (t - 1) where positive.
pub fn predict_power_atoms(m: &Measure, t: f64) -> Vec<(f64, f64)> {
    m.atoms()
        .iter()
        .filter_map(|a| {
            let w = t * a.mass - (t - 1.0);
            (w > 0.0).then_some((t * a.x, w))
        })
        .collect()
}

/// The free additive power m^{box-plus t} for real t >= 1.
pub fn free_power(m: &Measure, t: f64, opts: &AddOptions) -> Result<(Measure, ConvolutionReport)> {
    check_real(m, "m")?;
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::Argument(format!("free power needs t >= 1, got {t}")));
    }
    if t == 1.0 {
        let r = m.with_domain(Domain::Real)?;
        return Ok((r.clone(), ConvolutionReport::exact(&r)));
    }
    if let Some(c) = m.as_dirac() {
        let r = Measure::dirac(t * c);
        return Ok((r.clone(), ConvolutionReport::exact(&r)));
    }
    // the power is a dilated compression, so t times the hull covers it
    let s = m.support();
    let hull = Interval::new(t * s.lo, t * s.hi);
    let grid = opts.grid.clone().unwrap_or_else(|| padded_grid(hull, DEFAULT_POINTS));
    let solver = PowerSolver::new(m, t);
    let inv = InversionOptions {
        domain: Domain::Real,
        column_top: column_top(hull),
        predicted_atoms: predict_power_atoms(m, t),
        ..Default::default()
    };
    invert(&solver, &grid, &opts.eps(), &inv).map_err(|e| match e {
        Error::Solver { z, residual, .. } => {
            Error::Power { x: z.re, reason: format!("continuation lost the branch (residual {residual:.3e})") }
        }
        other => other,
    })
}
