//! Cauchy integral of an atoms + piecewise-linear density measure.
//!
//! Each grid cell is integrated in closed form. Cells are grouped into panels
//! that carry exact moments, used as a multipole expansion for far points.

use num_complex::Complex64;

use crate::measure::Measure;

const PANEL_CELLS: usize = 32;
const TERMS: usize = 32;
// far-field when |w - c| >= FAR * radius
const FAR: f64 = 3.0;
const SERIES_R: f64 = 0.1;
const SERIES_TERMS: usize = 17;

#[derive(Clone, Debug)]
struct Cell {
    a: f64,
    h: f64,
    f0: f64,
    s: f64,
}

#[derive(Clone, Debug)]
struct Panel {
    c: f64,
    r: f64,
    lo: usize,
    hi: usize,
    // mu_k = int f(t) ((t - c) / r)^k dt
    mom: [f64; TERMS],
}

#[derive(Clone, Debug)]
pub struct CauchyEval {
    atoms: Vec<(f64, f64)>,
    cells: Vec<Cell>,
    panels: Vec<Panel>,
}

impl CauchyEval {
    pub fn new(m: &Measure) -> Self {
        let atoms = m.atoms().iter().map(|a| (a.x, a.mass)).collect();
        let (g, v) = (m.grid(), m.values());
        let mut cells = Vec::new();
        for i in 0..g.len().saturating_sub(1) {
            if v[i] == 0.0 && v[i + 1] == 0.0 {
                continue;
            }
            let h = g[i + 1] - g[i];
            cells.push(Cell { a: g[i], h, f0: v[i], s: (v[i + 1] - v[i]) / h });
        }
        let mut panels = Vec::new();
        let mut lo = 0;
        while lo < cells.len() {
            let hi = (lo + PANEL_CELLS).min(cells.len());
            panels.push(make_panel(&cells, lo, hi));
            lo = hi;
        }
        CauchyEval { atoms, cells, panels }
    }

    /// G(w) = int dmu(t) / (w - t).
    pub fn g(&self, w: Complex64) -> Complex64 {
        self.eval(w, false).0
    }

    /// (G(w), G'(w)).
    pub fn g_dg(&self, w: Complex64) -> (Complex64, Complex64) {
        self.eval(w, true)
    }

    fn eval(&self, w: Complex64, deriv: bool) -> (Complex64, Complex64) {
        let mut g = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for &(x, m) in &self.atoms {
            let inv = 1.0 / (w - x);
            g += m * inv;
            if deriv {
                d -= m * inv * inv;
            }
        }
        for p in &self.panels {
            let dw = w - p.c;
            if dw.norm() >= FAR * p.r {
                let inv = 1.0 / dw;
                let rho = p.r * inv;
                let mut acc = Complex64::new(0.0, 0.0);
                for k in (0..TERMS).rev() {
                    acc = acc * rho + p.mom[k];
                }
                g += acc * inv;
                if deriv {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in (0..TERMS).rev() {
                        acc = acc * rho + p.mom[k] * (k + 1) as f64;
                    }
                    d -= acc * inv * inv;
                }
            } else {
                for c in &self.cells[p.lo..p.hi] {
                    let (gc, dc) = cell_terms(c, w, deriv);
                    g += gc;
                    d -= dc;
                }
            }
        }
        (g, d)
    }

    /// Direct per-cell sum with no far-field expansion.
    pub fn g_exact(&self, w: Complex64) -> (Complex64, Complex64) {
        let mut g = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for &(x, m) in &self.atoms {
            let inv = 1.0 / (w - x);
            g += m * inv;
            d -= m * inv * inv;
        }
        for c in &self.cells {
            let (gc, dc) = cell_terms(c, w, true);
            g += gc;
            d -= dc;
        }
        (g, d)
    }
}

fn make_panel(cells: &[Cell], lo: usize, hi: usize) -> Panel {
    let a = cells[lo].a;
    let b = cells[hi - 1].a + cells[hi - 1].h;
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut mom = [0.0; TERMS];
    for cell in &cells[lo..hi] {
        let alpha = cell.f0 - cell.s * (cell.a - c);
        let sa = (cell.a - c) / r;
        let sb = (cell.a + cell.h - c) / r;
        // sigma^(k+1) at both ends
        let (mut pa, mut pb) = (sa, sb);
        for (k, mk) in mom.iter_mut().enumerate() {
            let (pa2, pb2) = (pa * sa, pb * sb);
            let kf = k as f64;
            *mk += r * (alpha * (pb - pa) / (kf + 1.0) + cell.s * r * (pb2 - pa2) / (kf + 2.0));
            pa = pa2;
            pb = pb2;
        }
    }
    Panel { c, r, lo, hi, mom }
}

// (int f/(w-t), int f/(w-t)^2) over one cell
fn cell_terms(c: &Cell, w: Complex64, deriv: bool) -> (Complex64, Complex64) {
    let ub = w - (c.a + c.h);
    let ua = w - c.a;
    let r = c.h / ub;
    if r.norm() < SERIES_R {
        // log1p(r), (1+r)log1p(r) - r and r - log1p(r) as power series
        let mut l = Complex64::new(0.0, 0.0);
        let mut p = Complex64::new(0.0, 0.0);
        let mut q = Complex64::new(0.0, 0.0);
        let mut rk = r;
        let mut sign = 1.0;
        for k in 1..=SERIES_TERMS {
            let kf = k as f64;
            l += sign * rk / kf;
            if k >= 2 {
                p += -sign * rk / (kf * (kf - 1.0));
                q += -sign * rk / kf;
            }
            rk *= r;
            sign = -sign;
        }
        let g = c.f0 * l + c.s * ub * p;
        let d = if deriv { c.f0 * c.h / (ua * ub) + c.s * q } else { Complex64::new(0.0, 0.0) };
        (g, d)
    } else {
        let l = (ua / ub).ln();
        let g = c.f0 * l + c.s * (ua * l - c.h);
        let d = if deriv { c.f0 * c.h / (ua * ub) + c.s * (c.h / ub - l) } else { Complex64::new(0.0, 0.0) };
        (g, d)
    }
}
