//! Random-matrix Monte Carlo for free convolutions.
//!
//! Each trial diagonalizes D1 + Q D2 Q^T (or D2^{1/2} Q D1 Q^T D2^{1/2}) for
//! a Haar orthogonal Q and a pair of diagonal matrices whose entries are
//! quantiles of the inputs. The pooled spectrum becomes a histogram measure.

use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::additive::predict_atoms;
use crate::error::{Error, Result};
use crate::measure::{Atom, Domain, Measure};
use crate::multiplicative::predict_mult_atoms;

pub const MIN_MATRIX_SIZE: usize = 64;
const MAX_ATTEMPTS: u64 = 4;
/// A bin is an atom when its count exceeds this multiple of its neighbours' mean.
const ATOM_RATIO: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub matrix_size: usize,
    pub trials: usize,
    pub seed: u64,
    /// Histogram bins; ceil(sqrt(n * trials)) when absent.
    pub bin_count: Option<usize>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { matrix_size: 2000, trials: 10, seed: 0, bin_count: None }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.matrix_size < MIN_MATRIX_SIZE {
            return Err(Error::Argument(format!("matrix size {} is below {MIN_MATRIX_SIZE}", self.matrix_size)));
        }
        if self.trials == 0 {
            return Err(Error::Argument("at least one trial is required".into()));
        }
        if self.bin_count == Some(0) {
            return Err(Error::Argument("bin count must be positive".into()));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.bin_count.unwrap_or_else(|| ((self.matrix_size * self.trials) as f64).sqrt().ceil() as usize)
    }
}

/// Result of a Monte Carlo run.
#[derive(Clone, Debug)]
pub struct OracleRun {
    pub measure: Measure,
    /// Sorted eigenvalues of each trial.
    pub eigenvalues: Vec<Vec<f64>>,
    /// One line per retried trial.
    pub retries: Vec<String>,
    pub bins: usize,
    /// True when the spectrum was computed without a random rotation.
    pub exact: bool,
}

/// Quantiles of m at the midpoints (k - 1/2)/n.
pub fn sample_spectrum(m: &Measure, n: usize) -> Result<Vec<f64>> {
    if m.domain() == Domain::Circle {
        return Err(Error::Domain("spectra are sampled from measures on the line".into()));
    }
    (1..=n).map(|k| m.quantile((k as f64 - 0.5) / n as f64)).collect()
}

#[derive(Clone, Copy)]
enum Model {
    Additive,
    Multiplicative,
}

pub fn sample_additive(m1: &Measure, m2: &Measure, cfg: &OracleConfig) -> Result<Measure> {
    run_additive(m1, m2, cfg).map(|r| r.measure)
}

pub fn sample_multiplicative(m1: &Measure, m2: &Measure, cfg: &OracleConfig) -> Result<Measure> {
    run_multiplicative(m1, m2, cfg).map(|r| r.measure)
}

pub fn run_additive(m1: &Measure, m2: &Measure, cfg: &OracleConfig) -> Result<OracleRun> {
    for m in [m1, m2] {
        if m.domain() == Domain::Circle {
            return Err(Error::Domain("additive oracle needs measures on the line".into()));
        }
    }
    run(m1, m2, cfg, Model::Additive, predict_atoms(m1, m2))
}

pub fn run_multiplicative(m1: &Measure, m2: &Measure, cfg: &OracleConfig) -> Result<OracleRun> {
    for m in [m1, m2] {
        if !m.on_half_line() {
            return Err(Error::Domain("multiplicative oracle needs measures on [0, inf)".into()));
        }
    }
    let mut predicted = predict_mult_atoms(m1, m2);
    let zero = m1.mass_at_zero().max(m2.mass_at_zero());
    if zero > 0.0 {
        predicted.push((0.0, zero));
    }
    run(m1, m2, cfg, Model::Multiplicative, predicted)
}

fn run(m1: &Measure, m2: &Measure, cfg: &OracleConfig, model: Model, predicted: Vec<(f64, f64)>) -> Result<OracleRun> {
    cfg.validate()?;
    let n = cfg.matrix_size;
    let d1 = sample_spectrum(m1, n)?;
    let d2 = sample_spectrum(m2, n)?;
    let domain = match model {
        Model::Additive => Domain::Real,
        Model::Multiplicative => Domain::Positive,
    };

    if let Some(spec) = exact_spectrum(&d1, &d2, model) {
        let eigenvalues = vec![spec; cfg.trials];
        let measure = histogram(&eigenvalues, cfg.bins(), &predicted, domain)?;
        return Ok(OracleRun { measure, eigenvalues, retries: vec![], bins: cfg.bins(), exact: true });
    }

    let results: Vec<(Vec<f64>, Vec<String>)> =
        (0..cfg.trials).into_par_iter().map(|t| trial(&d1, &d2, model, cfg.seed, t as u64)).collect::<Result<_>>()?;
    let (eigenvalues, logs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let measure = histogram(&eigenvalues, cfg.bins(), &predicted, domain)?;
    Ok(OracleRun { measure, eigenvalues, retries: logs.concat(), bins: cfg.bins(), exact: false })
}

// With a scalar diagonal the rotation drops out.
fn exact_spectrum(d1: &[f64], d2: &[f64], model: Model) -> Option<Vec<f64>> {
    let scalar = |d: &[f64]| d.iter().all(|x| *x == d[0]).then(|| d[0]);
    let (c, other) = match (scalar(d1), scalar(d2)) {
        (_, Some(c)) => (c, d1),
        (Some(c), None) => (c, d2),
        (None, None) => return None,
    };
    let mut out: Vec<f64> = match model {
        Model::Additive => other.iter().map(|x| x + c).collect(),
        Model::Multiplicative => other.iter().map(|x| x * c).collect(),
    };
    out.sort_by(f64::total_cmp);
    Some(out)
}

fn trial(d1: &[f64], d2: &[f64], model: Model, seed: u64, t: u64) -> Result<(Vec<f64>, Vec<String>)> {
    let mut log = Vec::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t + (attempt << 32));
        let q = haar_orthogonal(d1.len(), &mut rng);
        let b = match model {
            Model::Additive => additive_matrix(d1, d2, &q),
            Model::Multiplicative => multiplicative_matrix(d1, d2, &q),
        };
        match eigenvalues(b) {
            Some(mut ev) => {
                if let Model::Multiplicative = model {
                    // the product is positive semidefinite; rounding can dip below zero
                    ev.iter_mut().for_each(|x| *x = x.max(0.0));
                }
                ev.sort_by(f64::total_cmp);
                return Ok((ev, log));
            }
            None => log.push(format!("trial {t}: eigensolver failed on attempt {attempt}, retrying")),
        }
    }
    Err(Error::Argument(format!("trial {t}: eigensolver failed {MAX_ATTEMPTS} times")))
}

fn eigenvalues(b: DMatrix<f64>) -> Option<Vec<f64>> {
    let ev = catch_unwind(AssertUnwindSafe(|| b.symmetric_eigenvalues())).ok()?;
    ev.iter().all(|x| x.is_finite()).then(|| ev.as_slice().to_vec())
}

/// Haar orthogonal matrix: Q of the QR factorization of a Gaussian matrix,
/// normalized so that R has a positive diagonal.
pub fn haar_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    cholesky_qr2(&a).unwrap_or_else(|| householder_q(a))
}

// Two passes of Cholesky QR. The Cholesky factor has a positive diagonal, so
// the result is the sign-normalized Q.
fn cholesky_qr2(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let once = |a: &DMatrix<f64>| -> Option<DMatrix<f64>> {
        let at = a.transpose();
        let l = Cholesky::new(&at * a)?.unpack();
        // Q^T = L^{-1} A^T
        let qt = l.solve_lower_triangular(&at)?;
        Some(qt.transpose())
    };
    let q = once(&once(a)?)?;
    q.iter().all(|x| x.is_finite()).then_some(q)
}

fn householder_q(a: DMatrix<f64>) -> DMatrix<f64> {
    let qr = a.qr();
    let signs: Vec<f64> = qr.r().diagonal().iter().map(|r| if *r < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut q = qr.q();
    for (j, s) in signs.iter().enumerate() {
        if *s < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn additive_matrix(d1: &[f64], d2: &[f64], q: &DMatrix<f64>) -> DMatrix<f64> {
    let scaled = q * DMatrix::from_diagonal(&DVector::from_column_slice(d2));
    let mut b = scaled * q.transpose();
    for (i, d) in d1.iter().enumerate() {
        b[(i, i)] += d;
    }
    b
}

// D2^{1/2} Q D1 Q^T D2^{1/2} = S S^T with S = D2^{1/2} Q D1^{1/2}.
fn multiplicative_matrix(d1: &[f64], d2: &[f64], q: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = q.clone();
    for (j, d) in d1.iter().enumerate() {
        s.column_mut(j).scale_mut(d.max(0.0).sqrt());
    }
    for (i, d) in d2.iter().enumerate() {
        s.row_mut(i).scale_mut(d.max(0.0).sqrt());
    }
    let st = s.transpose();
    s * st
}

/// Histogram measure of the pooled samples. Bins much heavier than their
/// neighbours become atoms, placed at a predicted location within one bin.
pub fn histogram(samples: &[Vec<f64>], bins: usize, predicted: &[(f64, f64)], domain: Domain) -> Result<Measure> {
    let all: Vec<f64> = samples.iter().flatten().copied().collect();
    if all.is_empty() {
        return Err(Error::Argument("no samples".into()));
    }
    let total = all.len() as f64;
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
        let x = all.iter().sum::<f64>() / total;
        return Measure::new(domain, vec![Atom::new(x, 1.0)], vec![], vec![]);
    }
    let bins = bins.max(1);
    let h = (hi - lo) / bins as f64;
    let mut count = vec![0.0; bins];
    let mut sum = vec![0.0; bins];
    for &x in &all {
        let i = (((x - lo) / h) as usize).min(bins - 1);
        count[i] += 1.0;
        sum[i] += x;
    }

    let mut atoms = Vec::new();
    let mut ac = count.clone();
    for i in 0..bins {
        let nb: Vec<f64> =
            [i.checked_sub(1), (i + 1 < bins).then_some(i + 1)].into_iter().flatten().map(|j| count[j]).collect();
        let avg = if nb.is_empty() { 0.0 } else { nb.iter().sum::<f64>() / nb.len() as f64 };
        // a lone sample or two in an empty stretch is not an atom
        let floor = samples.len() as f64;
        if count[i] > ATOM_RATIO * avg && count[i] >= floor {
            let mut x = sum[i] / count[i];
            if let Some(p) = predicted
                .iter()
                .map(|p| p.0)
                .filter(|p| (p - x).abs() <= h)
                .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
            {
                x = p;
            }
            atoms.push(Atom::new(x, (count[i] - avg) / total));
            ac[i] = avg;
        }
    }

    // piecewise-linear through the bin centres, flat out to the range ends
    let mut grid = Vec::with_capacity(bins + 2);
    let mut values = Vec::with_capacity(bins + 2);
    grid.push(lo);
    values.push(ac[0] / (total * h));
    for (i, c) in ac.iter().enumerate() {
        grid.push(lo + (i as f64 + 0.5) * h);
        values.push(c / (total * h));
    }
    grid.push(hi);
    values.push(ac[bins - 1] / (total * h));
    Measure::new(domain, atoms, grid, values)
}
