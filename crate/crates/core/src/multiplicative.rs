//! Free multiplicative convolution of measures on the positive half-line.

use serde::Serialize;

use crate::additive::padded_grid;
use crate::error::{Error, Result};
use crate::fixed_point::Problem;
use crate::inversion::{invert, BoundaryG, ConvolutionReport, InversionOptions, Sample, DEFAULT_EPS};
use crate::measure::{Domain, Interval, Measure};
use crate::transforms::{chi, s_transform, NegativeAxisPsi, Transforms, C64};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MultSubordination {
    pub omega1: C64,
    pub omega2: C64,
    pub psi: C64,
    pub iterations: usize,
    pub residual: f64,
}

// h(w) = eta(w)/w with eta = psi/(1 + psi); (eta, h, h')
fn eta_h(t: &Transforms, w: C64) -> (C64, C64, C64) {
    let (p, dp) = t.psi_dpsi(w);
    let eta = p / (1.0 + p);
    let deta = dp / ((1.0 + p) * (1.0 + p));
    let h = eta / w;
    (eta, h, (deta * w - eta) / (w * w))
}

fn admissible(lambda: C64, w: C64) -> bool {
    w.is_finite() && if lambda.im > 0.0 { w.im > 0.0 } else { w.re < 0.0 }
}

pub struct MultSolver {
    t1: Transforms,
    t2: Transforms,
    mean2: f64,
}

impl MultSolver {
    pub fn new(m1: &Measure, m2: &Measure) -> Result<Self> {
        for m in [m1, m2] {
            if !m.on_half_line() {
                return Err(Error::Domain("free multiplicative convolution needs positive-halfline measures".into()));
            }
            if m.as_dirac() == Some(0.0) {
                return Err(Error::Domain("delta_0 has no subordination; the product is delta_0".into()));
            }
        }
        Ok(MultSolver { t1: Transforms::new(m1), t2: Transforms::new(m2), mean2: m2.moment(1)? })
    }

    // Phi(w1) = w1 - lambda h2(lambda h1(w1)); returns (Phi, Phi', w2)
    fn residual(&self, lambda: C64, w1: C64) -> (C64, C64, C64) {
        let (_, h1, dh1) = eta_h(&self.t1, w1);
        let w2 = lambda * h1;
        let (_, h2, dh2) = eta_h(&self.t2, w2);
        (w1 - lambda * h2, 1.0 - lambda * lambda * dh2 * dh1, w2)
    }

    /// Solves for omega1 at lambda in the upper half-plane or on the negative axis.
    pub fn solve(&self, lambda: C64, warm: Option<C64>) -> Result<MultSubordination> {
        if !(lambda.im > 0.0 || (lambda.im == 0.0 && lambda.re < 0.0)) {
            return Err(Error::Domain(format!("multiplicative subordination at {lambda}")));
        }
        let start = warm.filter(|w| admissible(lambda, *w)).unwrap_or(lambda * self.mean2);
        let problem = Problem {
            eval: |w1: C64| {
                let (p, d, _) = self.residual(lambda, w1);
                (p, d)
            },
            picard: |w1: C64, p: C64| w1 - p,
            admissible: |w1: C64| admissible(lambda, w1),
            tol: 1e-12 * (1.0 + lambda.norm()),
        };
        let s = problem.solve(start).map_err(|e| Error::Solver {
            z: lambda,
            iterations: e.iterations,
            residual: e.residual,
            trace: e.trace,
        })?;
        let w1 = s.w;
        let w2 = lambda * eta_h(&self.t1, w1).1;
        let (p1, _) = self.t1.psi_dpsi(w1);
        let eta = p1 / (1.0 + p1);
        let residual = (w1 * w2 - lambda * eta).norm();
        Ok(MultSubordination { omega1: w1, omega2: w2, psi: p1, iterations: s.iterations, residual })
    }
}

impl BoundaryG for MultSolver {
    type State = C64;
    // G(z) = conj(lambda (1 + psi(lambda))) with lambda = 1/conj(z)
    fn eval(&self, z: C64, warm: Option<C64>) -> Result<Sample<C64>> {
        let lambda = 1.0 / z.conj();
        let s = self.solve(lambda, warm)?;
        let g = (lambda * (1.0 + s.psi)).conj();
        Ok(Sample { g, state: s.omega1, residual: s.residual, iterations: s.iterations })
    }
}

/// Subordination functions of m1 and m2 at lambda.
pub fn mult_subordinators(m1: &Measure, m2: &Measure, lambda: C64) -> Result<MultSubordination> {
    MultSolver::new(m1, m2)?.solve(lambda, None)
}

/// Nonzero product atoms ab with mass m1({a}) + m2({b}) - 1 > 0.
pub fn predict_mult_atoms(m1: &Measure, m2: &Measure) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for a in m1.atoms().iter().filter(|a| a.x != 0.0) {
        for b in m2.atoms().iter().filter(|b| b.x != 0.0) {
            let w = a.mass + b.mass - 1.0;
            if w > 0.0 {
                out.push((a.x * b.x, w));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[derive(Clone, Debug, Default)]
pub struct MultOptions {
    pub grid: Option<Vec<f64>>,
    /// Relative schedule; multiplied by the upper end of the support hull.
    pub eps: Option<Vec<f64>>,
}

/// m1 box-times m2 on a grid in [0, inf).
pub fn free_mult(m1: &Measure, m2: &Measure, opts: &MultOptions) -> Result<(Measure, ConvolutionReport)> {
    let solver = MultSolver::new(m1, m2)?;
    for (m, other) in [(m1, m2), (m2, m1)] {
        if let Some(c) = m.as_dirac() {
            let r = other.dilate(c)?.with_domain(Domain::Positive)?;
            return Ok((r.clone(), ConvolutionReport::exact(&r)));
        }
    }
    let (s1, s2) = (m1.support(), m2.support());
    let hull = Interval::new(s1.lo * s2.lo, s1.hi * s2.hi);
    let grid = opts.grid.clone().unwrap_or_else(|| {
        let g = padded_grid(hull, crate::additive::DEFAULT_POINTS);
        let lo = g[0].max(0.0);
        crate::inversion::linspace(lo, g[g.len() - 1], g.len())
    });
    if grid.first().is_some_and(|g| *g < 0.0) {
        return Err(Error::Argument("multiplicative grid must lie in [0, inf)".into()));
    }
    let scale = hull.hi.max(1e-12);
    let eps: Vec<f64> = opts.eps.clone().unwrap_or_else(|| DEFAULT_EPS.to_vec()).iter().map(|e| e * scale).collect();
    let zero = m1.mass_at_zero().max(m2.mass_at_zero());
    let inv = InversionOptions {
        domain: Domain::Positive,
        column_top: scale.max(1.0),
        exact_atoms: if zero > 0.0 { vec![(0.0, zero)] } else { vec![] },
        predicted_atoms: predict_mult_atoms(m1, m2),
        defect_pad: 0.05 * hull.width().max(scale),
        ..Default::default()
    };
    invert(&solver, &grid, &eps, &inv)
}

/// psi of m1 box-times m2 on the negative axis, straight from subordination.
pub struct FreeProduct {
    solver: MultSolver,
    zero: f64,
}

impl FreeProduct {
    pub fn new(m1: &Measure, m2: &Measure) -> Result<Self> {
        let zero = m1.mass_at_zero().max(m2.mass_at_zero());
        Ok(FreeProduct { solver: MultSolver::new(m1, m2)?, zero })
    }
}

impl NegativeAxisPsi for FreeProduct {
    fn psi_neg(&self, x: f64) -> Result<(f64, f64)> {
        let lambda = C64::new(x, 0.0);
        let s = self.solver.solve(lambda, None)?;
        let (_, h1, dh1) = eta_h(&self.solver.t1, s.omega1);
        let (_, h2, dh2) = eta_h(&self.solver.t2, s.omega2);
        // implicit derivative of omega1 = lambda h2(lambda h1(omega1))
        let dw1 = (h2 + lambda * dh2 * h1) / (1.0 - lambda * lambda * dh2 * dh1);
        let (_, dpsi1) = self.solver.t1.psi_dpsi(s.omega1);
        Ok((s.psi.re, (dpsi1 * dw1).re))
    }

    fn zero_mass(&self) -> f64 {
        self.zero
    }
}

fn psi_source(m: &Measure) -> Result<Transforms> {
    if !m.on_half_line() {
        return Err(Error::Domain("needs a positive-halfline measure".into()));
    }
    Ok(Transforms::new(m))
}

/// 20 points spread over (mu({0}) - 1 + 0.02, -0.02).
pub fn s_scan_points(zero_mass: f64, n: usize) -> Vec<f64> {
    let lo = zero_mass - 1.0 + 0.02;
    let hi = -0.02;
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64).collect()
}

/// Dilation of m with S(-beta) = 1; returns the measure and the factor.
pub fn s_normalize(m: &Measure, beta: f64) -> Result<(Measure, f64)> {
    let t = psi_source(m)?;
    if !(beta > 0.0 && beta < 1.0 - m.mass_at_zero()) {
        return Err(Error::Argument(format!("beta = {beta} outside (0, 1 - mu({{0}}))")));
    }
    let c = s_transform(&t, -beta)?;
    Ok((m.dilate(c)?, c))
}

/// Dilation of m with psi(-1) = -alpha/2; returns the measure and the factor.
pub fn chi_normalize(m: &Measure, alpha: f64) -> Result<(Measure, f64)> {
    let t = psi_source(m)?;
    let u = -0.5 * alpha;
    if !(u < 0.0 && u > m.mass_at_zero() - 1.0) {
        return Err(Error::Argument(format!("alpha = {alpha} outside (0, 2(1 - mu({{0}})))")));
    }
    let lambda = -chi(&t, u)?;
    Ok((m.dilate(lambda)?, lambda))
}
