//! Recovery of a measure from boundary values of its Cauchy transform.
//!
//! Values G(x + i eps) are produced by a [`BoundaryG`] source along a grid,
//! for each eps of a decreasing schedule. Atoms are confirmed by following
//! -eps Im G down to a tiny eps, the density is the Richardson-extrapolated
//! -Im G / pi masked to the points where Im G does not decay with eps.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{trapezoid, Atom, Domain, Measure};
use crate::transforms::C64;

pub const DEFAULT_EPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
pub const ATOM_THRESHOLD: f64 = 1e-3;
pub const MAX_DEFECT: f64 = 1e-3;
const TRIM_LEVELS: usize = 5;
const TRIM_RATIO: f64 = 0.25;
const TRIM_STEPS: usize = 8;
// trim reach in units of eps, for schedules coarse next to the grid
const TRIM_REACH: f64 = 4.0;
const REFINE_STEPS: usize = 12;
const CHUNK: usize = 64;
const ZOOM_FLOOR: f64 = 1e-8;

/// One boundary evaluation: G at z plus the solver state that produced it.
#[derive(Clone, Copy, Debug)]
pub struct Sample<S> {
    pub g: C64,
    pub state: S,
    pub residual: f64,
    pub iterations: usize,
}

/// A source of G(z) on the upper half-plane, warm-startable from a nearby solve.
pub trait BoundaryG: Sync {
    type State: Copy + Send + Sync;
    fn eval(&self, z: C64, warm: Option<Self::State>) -> Result<Sample<Self::State>>;
}

/// Plain closure source with no solver state.
pub struct FnBoundary<F>(pub F);

impl<F: Fn(C64) -> Result<C64> + Sync> BoundaryG for FnBoundary<F> {
    type State = ();
    fn eval(&self, z: C64, _warm: Option<()>) -> Result<Sample<()>> {
        Ok(Sample { g: (self.0)(z)?, state: (), residual: 0.0, iterations: 0 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomSource {
    Exact,
    Predicted,
    Detected,
}

#[derive(Clone, Debug, Serialize)]
pub struct AtomCandidate {
    pub location: f64,
    pub mass: f64,
    pub source: AtomSource,
    pub predicted_mass: Option<f64>,
    pub accepted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvolutionReport {
    pub grid: Vec<f64>,
    pub epsilon_schedule: Vec<f64>,
    pub atom_candidates: Vec<AtomCandidate>,
    pub max_residual: f64,
    pub max_iterations: usize,
    pub mass_defect: f64,
    pub min_density_before_clip: f64,
    pub negative_density_warning: bool,
    pub support_points: usize,
    /// Mass moved into the end cells of support runs to reach the AC target.
    pub edge_correction: f64,
    /// Run-end points dropped because their density vanished at finer eps.
    pub trimmed_points: usize,
    /// Nodes added next to support edges; the output grid is the input grid plus these.
    pub refined_points: usize,
}

impl ConvolutionReport {
    /// Report for results obtained in closed form (Dirac cases).
    pub fn exact(m: &Measure) -> Self {
        ConvolutionReport {
            grid: m.grid().to_vec(),
            epsilon_schedule: vec![],
            atom_candidates: m
                .atoms()
                .iter()
                .map(|a| AtomCandidate {
                    location: a.x,
                    mass: a.mass,
                    source: AtomSource::Exact,
                    predicted_mass: None,
                    accepted: true,
                })
                .collect(),
            max_residual: 0.0,
            max_iterations: 0,
            mass_defect: 0.0,
            min_density_before_clip: 0.0,
            negative_density_warning: false,
            support_points: 0,
            edge_correction: 0.0,
            trimmed_points: 0,
            refined_points: 0,
        }
    }

    pub fn accepted_atoms(&self) -> impl Iterator<Item = &AtomCandidate> {
        self.atom_candidates.iter().filter(|c| c.accepted)
    }
}

#[derive(Clone, Debug)]
pub struct InversionOptions {
    pub domain: Domain,
    pub atom_threshold: f64,
    pub max_defect: f64,
    /// Height from which columns are continued down to the first eps.
    pub column_top: f64,
    /// Atoms known in closed form, never estimated.
    pub exact_atoms: Vec<(f64, f64)>,
    /// Atoms predicted by theory: location and predicted mass.
    pub predicted_atoms: Vec<(f64, f64)>,
    /// Width below the grid that is also integrated when measuring the mass
    /// defect. Needed when the grid starts on a singular support edge.
    pub defect_pad: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            domain: Domain::Real,
            atom_threshold: ATOM_THRESHOLD,
            max_defect: MAX_DEFECT,
            column_top: 1.0,
            exact_atoms: vec![],
            predicted_atoms: vec![],
            defect_pad: 0.0,
        }
    }
}

/// Solve at x + i y by walking down from `top` in factors of four.
fn column<B: BoundaryG>(b: &B, x: f64, y: f64, top: f64) -> Result<Sample<B::State>> {
    let mut h = top.max(y);
    let mut s = b.eval(C64::new(x, h), None)?;
    while h > y {
        h = (h / 4.0).max(y);
        s = b.eval(C64::new(x, h), Some(s.state))?;
    }
    Ok(s)
}

fn warm_or_column<B: BoundaryG>(b: &B, z: C64, warm: Option<B::State>, top: f64) -> Result<Sample<B::State>> {
    match warm {
        Some(w) => b.eval(z, Some(w)).or_else(|_| column(b, z.re, z.im, top)),
        None => column(b, z.re, z.im, top),
    }
}

/// Boundary values on the grid, one row per eps.
pub fn sweep<B: BoundaryG>(b: &B, grid: &[f64], eps: &[f64], top: f64) -> Result<Vec<Vec<Sample<B::State>>>> {
    let first: Vec<Sample<B::State>> = grid
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut out: Vec<Sample<B::State>> = Vec::with_capacity(chunk.len());
            for &x in chunk {
                let warm = out.last().map(|s| s.state);
                out.push(warm_or_column(b, C64::new(x, eps[0]), warm, top)?);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut rows = vec![first];
    for &e in &eps[1..] {
        let prev = rows.last().unwrap();
        let row = grid
            .par_iter()
            .zip(prev.par_iter())
            .map(|(&x, p)| warm_or_column(b, C64::new(x, e), Some(p.state), top))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

struct Zoom {
    x: f64,
    mass: f64,
    ratio: f64,
}

/// Follows A(eps) = -eps Im G(x + i eps) from `start.0` down to the floor,
/// re-centering on the local maximum of A when `relocate` is set.
fn zoom<B: BoundaryG>(b: &B, x0: f64, start: (f64, B::State), relocate: bool, window: f64) -> Result<Zoom> {
    let a_of = |s: &Sample<B::State>, e: f64| -e * s.g.im;
    let (mut e, mut st) = start;
    let mut x = x0;
    let mut w = window;
    let mut prev = f64::NAN;
    let mut last = a_of(&b.eval(C64::new(x, e), Some(st))?, e);
    while e > ZOOM_FLOOR {
        e = (e / 2.0).max(ZOOM_FLOOR);
        let s = b.eval(C64::new(x, e), Some(st))?;
        st = s.state;
        let mut best = a_of(&s, e);
        if relocate {
            // golden-section search for the peak of A on [x - w, x + w]
            let gr = 0.5 * (5f64.sqrt() - 1.0);
            let (mut lo, mut hi) = (x - w, x + w);
            let f = |t: f64| -> Result<(f64, B::State)> {
                let s = b.eval(C64::new(t, e), Some(st))?;
                Ok((a_of(&s, e), s.state))
            };
            let mut c = hi - gr * (hi - lo);
            let mut d = lo + gr * (hi - lo);
            let (mut fc, mut sc) = f(c)?;
            let (mut fd, mut sd) = f(d)?;
            while hi - lo > 0.05 * e {
                if fc > fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    sd = sc;
                    c = hi - gr * (hi - lo);
                    (fc, sc) = f(c)?;
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    sc = sd;
                    d = lo + gr * (hi - lo);
                    (fd, sd) = f(d)?;
                }
            }
            let (xb, fb, sb) = if fc > fd { (c, fc, sc) } else { (d, fd, sd) };
            if fb > best {
                x = xb;
                best = fb;
                st = sb;
            }
            w = 4.0 * e;
        }
        prev = last;
        last = best;
    }
    Ok(Zoom { x, mass: 2.0 * last - prev, ratio: last / prev })
}

/// Full inversion: atoms, masked density, mass defect.
pub fn invert<B: BoundaryG>(
    b: &B,
    grid: &[f64],
    eps: &[f64],
    opts: &InversionOptions,
) -> Result<(Measure, ConvolutionReport)> {
    if grid.len() < 3 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("inversion grid needs three or more increasing points".into()));
    }
    if eps.len() < 2 || eps.windows(2).any(|w| w[1] >= w[0]) || eps.iter().any(|e| *e <= 0.0) {
        return Err(Error::Argument("epsilon schedule must have two or more decreasing positive values".into()));
    }
    let rows = sweep(b, grid, eps, opts.column_top)?;
    let n = grid.len();
    let spacing = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let mut max_residual: f64 = 0.0;
    let mut max_iterations = 0;
    for s in rows.iter().flatten() {
        max_residual = max_residual.max(s.residual);
        max_iterations = max_iterations.max(s.iterations);
    }

    let mut candidates: Vec<AtomCandidate> = Vec::new();
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for &(x, m) in &opts.exact_atoms {
        candidates.push(AtomCandidate {
            location: x,
            mass: m,
            source: AtomSource::Exact,
            predicted_mass: None,
            accepted: true,
        });
        atoms.push((x, m));
    }
    let last_eps = *eps.last().unwrap();
    for &(x, pm) in &opts.predicted_atoms {
        if opts.exact_atoms.iter().any(|a| (a.0 - x).abs() < 1e-12) {
            continue;
        }
        let s = column(b, x, last_eps, opts.column_top)?;
        let z = zoom(b, x, (last_eps, s.state), false, 0.0)?;
        let accepted = z.mass >= 1e-6;
        candidates.push(AtomCandidate {
            location: x,
            mass: z.mass,
            source: AtomSource::Predicted,
            predicted_mass: Some(pm),
            accepted,
        });
        if accepted {
            atoms.push((x, z.mass));
        }
    }

    let corrected = |row: usize, i: usize, known: &[(f64, f64)]| -> C64 {
        let z = C64::new(grid[i], eps[row]);
        let mut g = rows[row][i].g;
        for &(a, m) in known {
            g -= m / (z - a);
        }
        g
    };

    // unpredicted atoms: peaks of A = -eps Im G that do not decay with eps
    let amp = |row: usize, i: usize, known: &[(f64, f64)]| -eps[row] * corrected(row, i, known).im;
    let known = atoms.clone();
    let near_known = |x: f64| known.iter().any(|a| (a.0 - x).abs() <= 2.0 * spacing.max(eps[0]));
    let mut peaks: Vec<(usize, f64)> = Vec::new();
    for i in 0..n {
        let a1 = amp(1, i, &known);
        let left = if i > 0 { amp(1, i - 1, &known) } else { f64::NEG_INFINITY };
        let right = if i + 1 < n { amp(1, i + 1, &known) } else { f64::NEG_INFINITY };
        if a1 >= left && a1 > right && a1 >= 0.5 * opts.atom_threshold {
            let ratio = a1 / amp(0, i, &known);
            if ratio >= 0.6 && !near_known(grid[i]) {
                peaks.push((i, a1));
            }
        }
    }
    let zooms: Vec<(usize, Result<Zoom>)> = peaks
        .par_iter()
        .map(|&(i, _)| (i, zoom(b, grid[i], (eps[1], rows[1][i].state), true, spacing.max(eps[1]))))
        .collect();
    let mut detected: Vec<(f64, f64)> = Vec::new();
    for (_, z) in zooms {
        let z = z?;
        let accepted = z.mass >= opts.atom_threshold && z.ratio >= 0.9;
        candidates.push(AtomCandidate {
            location: z.x,
            mass: z.mass,
            source: AtomSource::Detected,
            predicted_mass: None,
            accepted,
        });
        if accepted {
            detected.push((z.x, z.mass));
        }
    }
    detected.sort_by(|a, b| b.1.total_cmp(&a.1));
    for d in detected {
        if !atoms.iter().any(|a| (a.0 - d.0).abs() <= 2.0 * spacing) {
            atoms.push(d);
        } else if let Some(c) = candidates.iter_mut().find(|c| c.source == AtomSource::Detected && c.location == d.0) {
            c.accepted = false;
        }
    }

    // density from the two finest levels
    let s = eps.len() - 1;
    let q = eps[s - 1] / eps[s];
    let lo_ratio = 0.5 * (1.0 + 1.0 / q);
    let hi_ratio = 0.5 * (1.0 + q);
    let mut fine = Vec::with_capacity(n);
    let mut coarse = Vec::with_capacity(n);
    for i in 0..n {
        fine.push(-corrected(s, i, &atoms).im / std::f64::consts::PI);
        coarse.push(-corrected(s - 1, i, &atoms).im / std::f64::consts::PI);
    }
    let (mut i_fine, mut i_coarse) = (trapezoid(grid, &fine), trapezoid(grid, &coarse));
    if opts.defect_pad > 0.0 {
        let k = ((opts.defect_pad / spacing).ceil() as usize).max(2) + 1;
        let pad = linspace(grid[0] - opts.defect_pad, grid[0], k);
        let pad_eps = [eps[s - 1], eps[s]];
        let rows = sweep(b, &pad, &pad_eps, opts.column_top)?;
        let density = |row: usize| -> Vec<f64> {
            (0..k)
                .map(|i| {
                    let z = C64::new(pad[i], pad_eps[row]);
                    let g = atoms.iter().fold(rows[row][i].g, |g, &(a, m)| g - m / (z - a));
                    -g.im / std::f64::consts::PI
                })
                .collect()
        };
        i_coarse += trapezoid(&pad, &density(0));
        i_fine += trapezoid(&pad, &density(1));
    }
    let integral = (q * i_fine - i_coarse) / (q - 1.0);
    let atom_total: f64 = atoms.iter().map(|a| a.1).sum();
    let mass_defect = (1.0 - atom_total - integral).abs();

    let mut values = vec![0.0; n];
    let mut min_before_clip: f64 = 0.0;
    let mut support_points = 0;
    for i in 0..n {
        let r = fine[i] / coarse[i];
        if fine[i] > 0.0 && coarse[i] > 0.0 && r >= lo_ratio && r <= hi_ratio {
            let f = (q * fine[i] - coarse[i]) / (q - 1.0);
            min_before_clip = min_before_clip.min(f);
            values[i] = f.max(0.0);
            support_points += 1;
        }
    }
    let report = ConvolutionReport {
        grid: grid.to_vec(),
        epsilon_schedule: eps.to_vec(),
        atom_candidates: candidates,
        max_residual,
        max_iterations,
        mass_defect,
        min_density_before_clip: min_before_clip,
        negative_density_warning: min_before_clip < -1e-3,
        support_points,
        edge_correction: 0.0,
        trimmed_points: 0,
        refined_points: 0,
    };
    if mass_defect > opts.max_defect {
        return Err(Error::Resolution { defect: mass_defect, limit: opts.max_defect });
    }
    if atom_total > 1.0 + 1e-9 {
        return Err(Error::Resolution { defect: atom_total - 1.0, limit: 0.0 });
    }
    let target = (1.0 - atom_total).max(0.0);
    let trimmed_points = trim_run_ends(b, grid, eps[s], &rows[s], &atoms, &mut values, opts.column_top)?;
    let (out_grid, mut values, refined_points) = refine_run_ends(b, grid, values, &atoms, eps[s], opts.column_top)?;
    let smoothed: Vec<f64> = fine.iter().zip(&coarse).map(|(f, c)| (q * f - c) / (q - 1.0)).collect();
    let edge_correction = fill_edge_cells(&out_grid, &mut values, grid, &smoothed, target);
    let ac = trapezoid(&out_grid, &values);
    let report = ConvolutionReport { edge_correction, trimmed_points, refined_points, ..report };
    if target <= 1e-12 {
        values.iter_mut().for_each(|v| *v = 0.0);
    } else if ac > 0.0 {
        let scale = target / ac;
        values.iter_mut().for_each(|v| *v *= scale);
    }
    let atom_list = atoms.into_iter().map(|(x, m)| Atom::new(x, m)).collect();
    let m = Measure::new(opts.domain, atom_list, out_grid, values)?;
    Ok((m, report))
}

// Smoothing at the last eps spreads a singular edge about an eps past the
// true support. Outside the support the smoothed density decays like eps, so
// run ends are re-evaluated at eps / 2^TRIM_LEVELS and dropped when they have
// lost most of their value.
fn trim_run_ends<B: BoundaryG>(
    b: &B,
    grid: &[f64],
    eps: f64,
    row: &[Sample<B::State>],
    atoms: &[(f64, f64)],
    values: &mut [f64],
    top: f64,
) -> Result<usize> {
    let n = grid.len();
    let spacing = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let steps = TRIM_STEPS.max((TRIM_REACH * eps / spacing).ceil() as usize);
    let survives = |i: usize, v: f64| -> Result<bool> {
        let mut y = eps;
        let mut state = row[i].state;
        let mut g = row[i].g;
        for _ in 0..TRIM_LEVELS {
            y *= 0.5;
            let smp = warm_or_column(b, C64::new(grid[i], y), Some(state), top)?;
            state = smp.state;
            g = smp.g;
        }
        let z = C64::new(grid[i], y);
        let g = atoms.iter().fold(g, |g, &(a, m)| g - m / (z - a));
        Ok(-g.im / std::f64::consts::PI >= TRIM_RATIO * v)
    };
    let mut trimmed = 0;
    let mut i = 0;
    while i < n {
        if values[i] <= 0.0 {
            i += 1;
            continue;
        }
        let mut end = i;
        while end + 1 < n && values[end + 1] > 0.0 {
            end += 1;
        }
        let (mut lo, mut hi) = (i, end);
        for _ in 0..steps {
            if lo > hi || survives(lo, values[lo])? {
                break;
            }
            values[lo] = 0.0;
            lo += 1;
            trimmed += 1;
        }
        for _ in 0..steps {
            if lo > hi || survives(hi, values[hi])? {
                break;
            }
            values[hi] = 0.0;
            hi = hi.saturating_sub(1);
            trimmed += 1;
            if hi == 0 {
                break;
            }
        }
        i = end + 1;
    }
    Ok(trimmed)
}

/// Density at x from the Richardson pair (2 eps, eps), or None where the
/// pair does not agree or the solver gives up (off the support, or not yet
/// resolved).
fn point_density<B: BoundaryG>(b: &B, x: f64, eps: f64, atoms: &[(f64, f64)], top: f64) -> Result<Option<f64>> {
    let im = |s: &Sample<B::State>, y: f64| {
        let z = C64::new(x, y);
        -atoms.iter().fold(s.g, |g, &(a, m)| g - m / (z - a)).im / std::f64::consts::PI
    };
    let pair = column(b, x, 2.0 * eps, top).and_then(|s1| Ok((s1, b.eval(C64::new(x, eps), Some(s1.state))?)));
    let (s1, s2) = match pair {
        Ok(p) => p,
        Err(Error::Solver { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let (coarse, fine) = (im(&s1, 2.0 * eps), im(&s2, eps));
    let r = fine / coarse;
    Ok((fine > 0.0 && coarse > 0.0 && (0.75..=1.5).contains(&r)).then(|| (2.0 * fine - coarse).max(0.0)))
}

// The support edge inside the cell next to a run end is bracketed by
// bisection at eps proportional to the bracket. Inside points are kept, nodes
// are added at doubling distances from the edge, and grid nodes within reach
// of the edge are re-evaluated at eps proportional to their distance: the
// last eps of the schedule flattens any profile steeper than itself.
fn refine_run_ends<B: BoundaryG>(
    b: &B,
    grid: &[f64],
    mut values: Vec<f64>,
    atoms: &[(f64, f64)],
    eps: f64,
    top: f64,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let n = grid.len();
    let mut ends: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        if values[i] <= 0.0 {
            continue;
        }
        if i > 0 && values[i - 1] <= 0.0 {
            ends.push((i, i - 1));
        }
        if i + 1 < n && values[i + 1] <= 0.0 {
            ends.push((i, i + 1));
        }
    }
    let reach = TRIM_REACH * eps;
    let positive = |v: Option<f64>| v.filter(|v| *v > 0.0);
    let per_end: Vec<(Vec<(f64, f64)>, Vec<(usize, f64)>)> = ends
        .par_iter()
        .map(|&(inside, outside)| {
            let (mut a, mut c) = (grid[outside], grid[inside]);
            let mut nodes = Vec::new();
            for _ in 0..REFINE_STEPS {
                let m = 0.5 * (a + c);
                match positive(point_density(b, m, 0.125 * (c - a).abs(), atoms, top)?) {
                    Some(v) => {
                        nodes.push((m, v));
                        c = m;
                    }
                    None => a = m,
                }
            }
            nodes.push((a, 0.0));
            let dir = (grid[inside] - grid[outside]).signum();
            let mut d = (c - a).abs();
            while 2.0 * d < (grid[inside] - c).abs() {
                d *= 2.0;
                let x = c + dir * d;
                if nodes.iter().any(|p: &(f64, f64)| (p.0 - x).abs() < 1e-6 * d) {
                    continue;
                }
                if let Some(v) = positive(point_density(b, x, 0.125 * d, atoms, top)?) {
                    nodes.push((x, v));
                }
            }
            let mut fixed = Vec::new();
            let mut j = inside;
            while values[j] > 0.0 && (grid[j] - c).abs() <= reach {
                let dist = (grid[j] - c).abs();
                if dist > 0.0 {
                    if let Some(v) = positive(point_density(b, grid[j], 0.125 * dist, atoms, top)?) {
                        fixed.push((j, v));
                    }
                }
                match j.checked_add_signed(dir as isize) {
                    Some(k) if k < n => j = k,
                    _ => break,
                }
            }
            Ok((nodes, fixed))
        })
        .collect::<Result<_>>()?;
    let mut extra = Vec::new();
    for (nodes, fixed) in per_end {
        extra.extend(nodes);
        for (j, v) in fixed {
            values[j] = v;
        }
    }
    let mut pts: Vec<(f64, f64)> = grid.iter().copied().zip(values).chain(extra).collect();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    pts.dedup_by(|p, q| p.0 <= q.0);
    let added = pts.len() - n;
    let (g, v) = pts.into_iter().unzip();
    Ok((g, v, added))
}

// Integral over [a, b] of the piecewise-linear interpolant of (x, y).
fn pl_integral(x: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len().saturating_sub(1) {
        let (l, r) = (x[i].max(a), x[i + 1].min(b));
        if r <= l {
            continue;
        }
        let f = |t: f64| y[i] + (y[i + 1] - y[i]) * (t - x[i]) / (x[i + 1] - x[i]);
        acc += 0.5 * (f(l) + f(r)) * (r - l);
    }
    acc
}

// A piecewise-linear density still under-represents integrable singular
// edges. Each support run owns the window reaching halfway to its neighbours;
// the extrapolated smoothed mass of that window, rescaled so the windows sum
// to the AC target, minus the run's own mass goes to the run's boundary
// points, in proportion to their values.
fn fill_edge_cells(grid: &[f64], values: &mut [f64], coarse_grid: &[f64], smoothed: &[f64], target: f64) -> f64 {
    let n = grid.len();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if values[i] > 0.0 {
            let s = i;
            while i + 1 < n && values[i + 1] > 0.0 {
                i += 1;
            }
            runs.push((s, i));
        }
        i += 1;
    }
    // trapezoid weight of node i
    let weight = |i: usize| {
        let l = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
        let r = if i + 1 < n { grid[i + 1] - grid[i] } else { 0.0 };
        0.5 * (l + r)
    };
    let local: Vec<f64> = (0..runs.len())
        .map(|k| {
            let lo = if k == 0 { f64::NEG_INFINITY } else { 0.5 * (grid[runs[k - 1].1] + grid[runs[k].0]) };
            let hi = if k + 1 == runs.len() { f64::INFINITY } else { 0.5 * (grid[runs[k].1] + grid[runs[k + 1].0]) };
            pl_integral(coarse_grid, smoothed, lo, hi).max(0.0)
        })
        .collect();
    // the window masses are only trusted relative to each other
    let sum: f64 = local.iter().sum();
    let scale = if sum > 0.0 { target / sum } else { 0.0 };
    let mut added = 0.0;
    for (k, &(s, e)) in runs.iter().enumerate() {
        let missing = scale * local[k] - trapezoid(&grid[s..=e], &values[s..=e]);
        if missing <= 0.0 {
            continue;
        }
        let ends = if s == e { vec![s] } else { vec![s, e] };
        let total: f64 = ends.iter().map(|&i| values[i]).sum();
        for &i in &ends {
            values[i] += missing * values[i] / total / weight(i);
        }
        added += missing;
    }
    added
}

/// Inversion of a plain Cauchy transform with no predicted atoms.
pub fn stieltjes_invert<F>(g: F, grid: &[f64], eps: &[f64]) -> Result<(Measure, ConvolutionReport)>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    invert(&FnBoundary(g), grid, eps, &InversionOptions::default())
}

/// Evenly spaced grid with inclusive endpoints.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}
