//! Root finding for the subordination equations: damped Newton phases
//! interleaved with plain fixed-point phases.

use crate::transforms::C64;

pub const MAX_ITER: usize = 10_000;
const NEWTON_BUDGET: usize = 60;
const PICARD_BUDGET: usize = 2000;
const TRACE_LEN: usize = 64;

pub(crate) struct Problem<E, P, A>
where
    E: Fn(C64) -> (C64, C64),
    P: Fn(C64, C64) -> C64,
    A: Fn(C64) -> bool,
{
    /// Phi and Phi'.
    pub eval: E,
    /// Fixed-point map, given the point and its Phi.
    pub picard: P,
    pub admissible: A,
    pub tol: f64,
}

pub(crate) struct Solved {
    pub w: C64,
    pub phi: C64,
    pub iterations: usize,
}

pub(crate) struct Failed {
    pub iterations: usize,
    pub residual: f64,
    pub trace: Vec<f64>,
}

impl<E, P, A> Problem<E, P, A>
where
    E: Fn(C64) -> (C64, C64),
    P: Fn(C64, C64) -> C64,
    A: Fn(C64) -> bool,
{
    pub fn solve(&self, start: C64) -> Result<Solved, Failed> {
        let mut w = start;
        let (mut p, mut d) = (self.eval)(w);
        let mut it = 0;
        let mut trace = Vec::new();
        let fail = |it, p: C64, trace| Failed { iterations: it, residual: p.norm(), trace };
        // each return to the fixed-point phase runs it to a tighter step
        let mut handoff = 1e-3;
        while it < MAX_ITER {
            let mut slow = 0;
            for _ in 0..NEWTON_BUDGET {
                it += 1;
                let r = p.norm();
                if trace.len() < TRACE_LEN {
                    trace.push(r);
                }
                let step = p / d;
                if !step.is_finite() {
                    break;
                }
                let mut lam = 1.0;
                let mut next = None;
                for _ in 0..30 {
                    let cand = w - lam * step;
                    if (self.admissible)(cand) {
                        let (pn, dn) = (self.eval)(cand);
                        if pn.norm() < r || (lam * step).norm() <= self.tol {
                            next = Some((cand, pn, dn));
                            break;
                        }
                    }
                    lam *= 0.5;
                }
                let Some((cand, pn, dn)) = next else { break };
                let moved = (cand - w).norm();
                (w, p, d) = (cand, pn, dn);
                if moved <= self.tol {
                    return Ok(Solved { w, phi: p, iterations: it });
                }
                if p.norm() > 0.9 * r {
                    slow += 1;
                    if slow >= 8 {
                        break;
                    }
                }
            }
            for _ in 0..PICARD_BUDGET {
                it += 1;
                let cand = (self.picard)(w, p);
                if !(self.admissible)(cand) {
                    return Err(fail(it, p, trace));
                }
                let moved = (cand - w).norm();
                w = cand;
                (p, d) = (self.eval)(w);
                if trace.len() < TRACE_LEN {
                    trace.push(p.norm());
                }
                if moved <= self.tol {
                    return Ok(Solved { w, phi: p, iterations: it });
                }
                if moved <= handoff * (1.0 + w.norm()) {
                    break;
                }
            }
            handoff = (handoff * 1e-2).max(self.tol);
        }
        Err(fail(it, p, trace))
    }
}
