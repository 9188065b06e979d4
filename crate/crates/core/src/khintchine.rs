//! The Lambda functional, decomposition verification and the endpoint-atom
//! indecomposability certificate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::additive::{free_add, free_power, predict_atoms, AddOptions};
use crate::error::{Error, Result};
use crate::inversion::{ConvolutionReport, ATOM_THRESHOLD};
use crate::measure::{levy_distance, Domain, Interval, Measure};
use crate::multiplicative::{free_mult, predict_mult_atoms, MultOptions};
use crate::transforms::{s_transform, stolz_fit, StolzRegion, Transforms, C64};

pub const STRUCTURAL_SLACK: f64 = 5e-3;
pub const OMEGA_LEVELS: [f64; 3] = [0.05, 0.1, 0.2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaConfig {
    pub region: StolzRegion,
    pub nx: usize,
    pub ny: usize,
    pub tolerance: f64,
}

impl LambdaConfig {
    pub fn new(region: StolzRegion) -> Self {
        LambdaConfig { region, nx: 128, ny: 64, tolerance: 1e-9 }
    }

    /// Shared region fitted to every measure that will be compared.
    pub fn fitted(family: &[Measure]) -> Result<Self> {
        Ok(Self::new(stolz_fit(family, 0.25)?))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 16 || self.ny < 16 || self.nx % 2 != 0 || self.ny % 2 != 0 {
            return Err(Error::Argument(format!(
                "quadrature needs even panel counts of at least 16, got ({}, {})",
                self.nx, self.ny
            )));
        }
        if !self.region.band_area().is_finite() {
            return Err(Error::Argument("band area is not finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LambdaValue {
    pub value: f64,
    /// Step-doubling estimate |Q(h) - Q(2h)| / 3.
    pub error_estimate: f64,
}

// midpoint rule in (s, y) with x = s y / beta over the band
fn band_quadrature(t: &Transforms, r: &StolzRegion, nx: usize, ny: usize) -> Result<f64> {
    let hs = 2.0 / nx as f64;
    let hy = r.band_height / ny as f64;
    let rows: Vec<f64> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let y = r.alpha + (j as f64 + 0.5) * hy;
            let mut acc = 0.0;
            let mut w = None;
            for i in 0..nx {
                let s = -1.0 + (i as f64 + 0.5) * hs;
                let z = C64::new(s * y / r.beta, y);
                let inv = t
                    .invert_f(z, w.unwrap_or(z))
                    .map_err(|e| Error::Node { node: format!("({:.6}, {:.6})", z.re, z.im), source: Box::new(e) })?;
                w = Some(inv);
                acc += -(inv - z).im * y / r.beta;
            }
            Ok(acc * hs * hy)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.iter().sum())
}

/// -integral of Im phi over the band of the configured region.
pub fn lambda_additive(m: &Measure, cfg: &LambdaConfig) -> Result<LambdaValue> {
    cfg.validate()?;
    if m.domain() == Domain::Circle {
        return Err(Error::Domain("lambda_additive needs a real-line measure".into()));
    }
    if m.is_dirac() {
        return Ok(LambdaValue { value: 0.0, error_estimate: 0.0 });
    }
    let t = Transforms::new(m);
    let fine = band_quadrature(&t, &cfg.region, cfg.nx, cfg.ny)?;
    let coarse = band_quadrature(&t, &cfg.region, cfg.nx / 2, cfg.ny / 2)?;
    Ok(LambdaValue { value: fine, error_estimate: (fine - coarse).abs() / 3.0 })
}

/// -log S(-gamma) after normalizing S(-beta) = 1.
pub fn lambda_mult(m: &Measure, beta: f64, gamma: f64) -> Result<f64> {
    if !m.on_half_line() {
        return Err(Error::Domain("lambda_mult needs a positive-halfline measure".into()));
    }
    let top = 1.0 - m.mass_at_zero();
    if !(gamma > 0.0 && gamma < beta && beta < top) {
        return Err(Error::Argument(format!("need 0 < gamma < beta < {top}, got gamma = {gamma}, beta = {beta}")));
    }
    if m.is_dirac() {
        return Ok(0.0);
    }
    let t = Transforms::new(m);
    Ok(-(s_transform(&t, -gamma)? / s_transform(&t, -beta)?).ln())
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when measured <= bound.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check { check: name.into(), measured, bound, pass: measured <= bound }
    }
}

fn excess(inner: Interval, outer: Interval) -> f64 {
    (outer.lo - inner.lo).max(inner.hi - outer.hi).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Additive,
    Multiplicative,
}

/// Diameter, support-hull and Omega_eps bounds for m = m1 box-plus m2, or the
/// logdiam bound for m = m1 box-times m2.
pub fn structural_checks(m1: &Measure, m2: &Measure, m: &Measure, mode: Mode) -> Result<Vec<Check>> {
    let slack = STRUCTURAL_SLACK;
    let mut out = Vec::new();
    match mode {
        Mode::Additive => {
            let d = m.support_diameter();
            for (k, part) in [m1, m2].iter().enumerate() {
                out.push(Check::at_most(format!("diameter of part {}", k + 1), part.support_diameter() - d, slack));
            }
            let sum = m1.support().plus(&m2.support());
            out.push(Check::at_most("support within sum of supports", excess(m.support(), sum), slack));
            for eps in OMEGA_LEVELS {
                let inner = m.omega_interval(eps)?;
                let outer = m1.omega_interval(eps / 2.0)?.plus(&m2.omega_interval(eps / 2.0)?);
                out.push(Check::at_most(format!("omega interval at {eps}"), excess(inner, outer), slack));
            }
        }
        Mode::Multiplicative => {
            let l = m.log_diameter()?;
            for (k, part) in [m1, m2].iter().enumerate() {
                let lp = part.log_diameter()?;
                let gap = if l.is_infinite() { f64::NEG_INFINITY } else { lp - l };
                out.push(Check::at_most(format!("log diameter of part {}", k + 1), gap, slack));
            }
            let (s1, s2) = (m1.support(), m2.support());
            let prod = Interval::new(s1.lo * s2.lo, s1.hi * s2.hi);
            out.push(Check::at_most("support within product of supports", excess(m.support(), prod), slack));
        }
    }
    Ok(out)
}

/// Atom-by-atom comparison: every predicted atom found, nothing unexplained.
pub fn atom_checks(result: &Measure, predicted: &[(f64, f64)], cell: f64) -> Vec<Check> {
    let mut out = Vec::new();
    for &(x, w) in predicted {
        let found = result.mass_at(x, cell);
        out.push(Check::at_most(format!("atom at {x}"), (found - w).abs(), ATOM_THRESHOLD));
    }
    for a in result.atoms() {
        if !predicted.iter().any(|p| (p.0 - a.x).abs() <= cell) {
            out.push(Check::at_most(format!("unpredicted atom at {}", a.x), a.mass, ATOM_THRESHOLD));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionVerdict {
    pub reconstruction_distance: f64,
    pub lambda_total: f64,
    pub lambda_parts_sum: f64,
    pub atom_checks: Vec<Check>,
    pub support_checks: Vec<Check>,
    pub checks: Vec<Check>,
    /// Some part is a Dirac mass.
    pub trivial: bool,
    pub cause: Option<String>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub levy_tolerance: f64,
    /// Relative tolerance on Lambda additivity.
    pub lambda_tolerance: f64,
    pub lambda: Option<LambdaConfig>,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { levy_tolerance: 1e-2, lambda_tolerance: 5e-3, lambda: None, beta: 0.5, gamma: 0.25 }
    }
}

fn rejected(cause: String) -> DecompositionVerdict {
    DecompositionVerdict {
        reconstruction_distance: f64::NAN,
        lambda_total: f64::NAN,
        lambda_parts_sum: f64::NAN,
        atom_checks: vec![],
        support_checks: vec![],
        checks: vec![],
        trivial: false,
        cause: Some(cause),
        verdict: Verdict::Rejected,
    }
}

/// Re-convolves the parts left to right and checks the result against the target.
pub fn verify_decomposition(
    target: &Measure,
    parts: &[Measure],
    mode: Mode,
    cfg: &VerifyConfig,
) -> DecompositionVerdict {
    if parts.len() < 2 {
        return rejected("a decomposition needs at least two parts".into());
    }
    match verify_inner(target, parts, mode, cfg) {
        Ok(v) => v,
        Err(e) => rejected(e.to_string()),
    }
}

fn convolve(a: &Measure, b: &Measure, mode: Mode) -> Result<(Measure, ConvolutionReport)> {
    match mode {
        Mode::Additive => free_add(a, b, &AddOptions::default()),
        Mode::Multiplicative => free_mult(a, b, &MultOptions::default()),
    }
}

fn verify_inner(target: &Measure, parts: &[Measure], mode: Mode, cfg: &VerifyConfig) -> Result<DecompositionVerdict> {
    let mut acc = parts[0].clone();
    let mut atom_checks = Vec::new();
    let mut support_checks = Vec::new();
    for p in &parts[1..] {
        let (next, rep) = convolve(&acc, p, mode)?;
        let cell = rep.grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let predicted = match mode {
            Mode::Additive => predict_atoms(&acc, p),
            Mode::Multiplicative => {
                let mut v = predict_mult_atoms(&acc, p);
                let z = acc.mass_at_zero().max(p.mass_at_zero());
                if z > 0.0 {
                    v.insert(0, (0.0, z));
                }
                v
            }
        };
        atom_checks.extend(atom_checks_for(&next, &predicted, cell));
        let zero_free = mode == Mode::Additive || (acc.support().lo > 0.0 && p.support().lo > 0.0);
        if zero_free {
            support_checks.extend(structural_checks(&acc, p, &next, mode)?);
        }
        acc = next;
    }
    let distance = match mode {
        Mode::Additive => levy_distance(&acc, target)?,
        Mode::Multiplicative => levy_distance(&acc.with_domain(Domain::Real)?, &target.with_domain(Domain::Real)?)?,
    };
    let (total, sum) = match mode {
        Mode::Additive => {
            let lc = match cfg.lambda {
                Some(c) => c,
                None => {
                    let mut family = parts.to_vec();
                    family.push(target.clone());
                    LambdaConfig::fitted(&family)?
                }
            };
            let total = lambda_additive(target, &lc)?.value;
            let mut sum = 0.0;
            for p in parts {
                sum += lambda_additive(p, &lc)?.value;
            }
            (total, sum)
        }
        Mode::Multiplicative => {
            let total = lambda_mult(target, cfg.beta, cfg.gamma)?;
            let mut sum = 0.0;
            for p in parts {
                sum += lambda_mult(p, cfg.beta, cfg.gamma)?;
            }
            (total, sum)
        }
    };
    let checks = vec![
        Check::at_most("reconstruction distance", distance, cfg.levy_tolerance),
        Check::at_most("lambda additivity", (total - sum).abs(), cfg.lambda_tolerance * (1.0 + total.abs())),
    ];
    let all = checks.iter().chain(&atom_checks).chain(&support_checks).all(|c| c.pass);
    Ok(DecompositionVerdict {
        reconstruction_distance: distance,
        lambda_total: total,
        lambda_parts_sum: sum,
        atom_checks,
        support_checks,
        checks,
        trivial: parts.iter().any(|p| p.is_dirac()),
        cause: None,
        verdict: if all { Verdict::Accepted } else { Verdict::Rejected },
    })
}

fn atom_checks_for(result: &Measure, predicted: &[(f64, f64)], cell: f64) -> Vec<Check> {
    atom_checks(result, predicted, cell.max(1e-12))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Certificate {
    Certified,
    Inconclusive,
}

/// Certified when both ends of the support hull carry atoms of at least the
/// detection threshold.
pub fn indecomposable_certificate(m: &Measure) -> Certificate {
    if m.domain() == Domain::Circle || m.is_dirac() {
        return Certificate::Inconclusive;
    }
    let s = m.support();
    let tol = 1e-12 * (1.0 + s.lo.abs().max(s.hi.abs()));
    if m.mass_at(s.lo, tol) >= ATOM_THRESHOLD && m.mass_at(s.hi, tol) >= ATOM_THRESHOLD {
        Certificate::Certified
    } else {
        Certificate::Inconclusive
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupReport {
    pub t: f64,
    pub atoms: Vec<(f64, f64)>,
    pub expected_atoms: Vec<(f64, f64)>,
    pub ac_support: Option<Interval>,
    pub expected_ac_edge: f64,
    pub certificate: Certificate,
    pub convolution: ConvolutionReport,
}

/// The free power of the symmetric Bernoulli law at t in [1, 2.5].
pub fn bernoulli_semigroup(t: f64, grid: Option<Vec<f64>>) -> Result<(Measure, SemigroupReport)> {
    if !(1.0..=2.5).contains(&t) {
        return Err(Error::Argument(format!("t = {t} outside [1, 2.5]")));
    }
    let (m, rep) = free_power(&crate::laws::bernoulli(), t, &AddOptions { grid, eps: None })?;
    let w = 1.0 - t / 2.0;
    let expected_atoms = if w > 0.0 { vec![(-t, w), (t, w)] } else { vec![] };
    let report = SemigroupReport {
        t,
        atoms: m.atoms().iter().map(|a| (a.x, a.mass)).collect(),
        expected_atoms,
        ac_support: m.ac_support(),
        expected_ac_edge: 2.0 * (t - 1.0).sqrt(),
        certificate: indecomposable_certificate(&m),
        convolution: rep,
    };
    Ok((m, report))
}
