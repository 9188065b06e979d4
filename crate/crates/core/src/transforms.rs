//! G, F, phi on the upper half-plane and psi, chi, S on the negative axis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cauchy::CauchyEval;
use crate::error::{Error, Result};
use crate::measure::{Domain, Interval, Measure, GL8};

pub type C64 = Complex64;

const PHI_MAX_ITER: usize = 200;
const PHI_RESIDUAL: f64 = 1e-10;

/// Gamma_{alpha,beta} = {Im z > alpha, Im z > beta |Re z|}, and its band of
/// height `band_height` above alpha.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StolzRegion {
    pub alpha: f64,
    pub beta: f64,
    pub band_height: f64,
}

impl StolzRegion {
    pub fn new(alpha: f64, beta: f64, band_height: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && band_height > 0.0) {
            return Err(Error::Argument(format!(
                "stolz region needs positive parameters, got ({alpha}, {beta}, {band_height})"
            )));
        }
        Ok(StolzRegion { alpha, beta, band_height })
    }

    pub fn contains(&self, z: C64) -> bool {
        z.im > self.alpha && z.im > self.beta * z.re.abs()
    }

    pub fn in_band(&self, z: C64) -> bool {
        self.contains(z) && z.im < self.alpha + self.band_height
    }

    pub fn band_area(&self) -> f64 {
        let top = self.alpha + self.band_height;
        (top * top - self.alpha * self.alpha) / self.beta
    }
}

/// G, F and phi of one measure, with the Cauchy evaluator built once.
#[derive(Clone, Debug)]
pub struct Transforms {
    measure: Measure,
    cauchy: CauchyEval,
}

impl Transforms {
    pub fn new(m: &Measure) -> Self {
        Transforms { measure: m.clone(), cauchy: CauchyEval::new(m) }
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn cauchy(&self, z: C64) -> Result<C64> {
        if z.im == 0.0 {
            return Err(Error::Domain(format!("cauchy transform at real point {}", z.re)));
        }
        Ok(self.cauchy.g(z))
    }

    pub fn f(&self, z: C64) -> Result<C64> {
        if !(z.im > 0.0) {
            return Err(Error::Domain(format!("F needs Im z > 0, got {z}")));
        }
        Ok(1.0 / self.cauchy.g(z))
    }

    /// (F(w), F'(w)) for w in the upper half-plane.
    pub fn f_df(&self, w: C64) -> (C64, C64) {
        if let Some(c) = self.measure.as_dirac() {
            return (w - c, C64::new(1.0, 0.0));
        }
        let (g, dg) = self.cauchy.g_dg(w);
        let f = 1.0 / g;
        (f, -dg * f * f)
    }

    /// phi(z) = F^{-1}(z) - z by damped Newton from w = z.
    pub fn phi(&self, z: C64) -> Result<C64> {
        self.invert_f(z, z).map(|w| w - z)
    }

    /// Solves F(w) = z from the initial guess w0.
    pub fn invert_f(&self, z: C64, w0: C64) -> Result<C64> {
        if !(z.im > 0.0) {
            return Err(Error::Domain(format!("phi needs Im z > 0, got {z}")));
        }
        let target = PHI_RESIDUAL * z.norm();
        let mut w = w0;
        let (mut f, mut df) = self.f_df(w);
        let mut r = (f - z).norm();
        let mut polish = 0;
        for it in 0..PHI_MAX_ITER {
            if r <= target {
                // a couple of extra steps take the residual to rounding level
                polish += 1;
                if polish > 2 || r <= 1e-15 * z.norm() {
                    return Ok(w);
                }
            }
            let step = (f - z) / df;
            let mut lam = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let wn = w - lam * step;
                if wn.im > 0.0 {
                    let (fn_, dfn) = self.f_df(wn);
                    let rn = (fn_ - z).norm();
                    if rn < r || (r <= target && rn <= target) {
                        w = wn;
                        f = fn_;
                        df = dfn;
                        r = rn;
                        accepted = true;
                        break;
                    }
                }
                lam *= 0.5;
            }
            if !accepted {
                if r <= target {
                    return Ok(w);
                }
                return Err(Error::Inversion { iterations: it, residual: r });
            }
        }
        if r <= target {
            return Ok(w);
        }
        Err(Error::Inversion { iterations: PHI_MAX_ITER, residual: r })
    }

    /// psi(z) = int zt/(1-zt) dmu(t) for half-line and circle measures.
    pub fn psi(&self, z: C64) -> Result<C64> {
        match self.measure.domain() {
            Domain::Circle => self.psi_circle(z),
            _ if self.measure.on_half_line() => {
                self.check_psi_point(z)?;
                Ok(self.psi_dpsi(z).0)
            }
            _ => Err(Error::Domain("psi needs a positive-halfline or circle measure".into())),
        }
    }

    fn check_psi_point(&self, z: C64) -> Result<()> {
        if z.im == 0.0 && z.re != 0.0 {
            let x = 1.0 / z.re;
            let on_ac = self.measure.ac_support().is_some_and(|s| s.contains(x, 0.0));
            let on_atom = self.measure.atoms().iter().any(|a| a.x == x);
            if on_ac || on_atom {
                return Err(Error::Domain(format!("psi at z = {} has 1/z in the support", z.re)));
            }
        }
        Ok(())
    }

    /// psi and psi' via psi(w) = G(1/w)/w - 1 (half-line measures).
    pub(crate) fn psi_dpsi(&self, w: C64) -> (C64, C64) {
        if w == C64::new(0.0, 0.0) {
            let mean = self.measure.moment(1).unwrap_or(0.0);
            return (w, C64::new(mean, 0.0));
        }
        let zeta = 1.0 / w;
        let (g, dg) = self.cauchy.g_dg(zeta);
        let psi = zeta * g - 1.0;
        let dpsi = -(g + zeta * dg) * zeta * zeta;
        (psi, dpsi)
    }

    fn psi_circle(&self, z: C64) -> Result<C64> {
        if (z.norm() - 1.0).abs() < 1e-15 {
            return Err(Error::Domain("psi of a circle measure on |z| = 1".into()));
        }
        let term = |th: f64| {
            let zt = z * C64::from_polar(1.0, th);
            zt / (1.0 - zt)
        };
        let mut acc: C64 = self.measure.atoms().iter().map(|a| a.mass * term(a.x)).sum();
        let (g, v) = (self.measure.grid(), self.measure.values());
        for i in 0..g.len().saturating_sub(1) {
            let half = 0.5 * (g[i + 1] - g[i]);
            let mid = 0.5 * (g[i + 1] + g[i]);
            for (node, w) in GL8 {
                let f = v[i] + (v[i + 1] - v[i]) * (0.5 + 0.5 * node);
                acc += half * w * f * term(mid + half * node);
            }
        }
        Ok(acc)
    }
}

/// Anything with a real psi on the negative half-line, increasing from
/// mu({0}) - 1 at -infinity to 0 at 0.
pub trait NegativeAxisPsi {
    /// psi(x) and psi'(x) at x < 0.
    fn psi_neg(&self, x: f64) -> Result<(f64, f64)>;
    fn zero_mass(&self) -> f64;
}

impl NegativeAxisPsi for Transforms {
    fn psi_neg(&self, x: f64) -> Result<(f64, f64)> {
        if !self.measure.on_half_line() {
            return Err(Error::Domain("psi needs a positive-halfline measure".into()));
        }
        let (p, d) = self.psi_dpsi(C64::new(x, 0.0));
        Ok((p.re, d.re))
    }

    fn zero_mass(&self) -> f64 {
        self.measure.mass_at_zero()
    }
}

/// Open interval (mu({0}) - 1, 0) on which chi and S are defined.
pub fn chi_interval(src: &impl NegativeAxisPsi) -> Interval {
    Interval::new(src.zero_mass() - 1.0, 0.0)
}

/// The unique x < 0 with psi(x) = u.
pub fn chi(src: &impl NegativeAxisPsi, u: f64) -> Result<f64> {
    let dom = chi_interval(src);
    if !(u > dom.lo && u < dom.hi) {
        return Err(Error::Domain(format!("chi argument {u} outside ({}, 0)", dom.lo)));
    }
    let mut hi = 0.0;
    let mut lo = -1.0;
    loop {
        let (p, _) = src.psi_neg(lo)?;
        if p < u {
            break;
        }
        hi = lo;
        lo *= 2.0;
        if lo < -1e300 {
            return Err(Error::Inversion { iterations: 0, residual: (p - u).abs() });
        }
    }
    // safeguarded Newton inside the bracket [lo, hi]
    let mut x = 0.5 * (lo + hi);
    for it in 0..300 {
        let (p, d) = src.psi_neg(x)?;
        let r = p - u;
        if r.abs() <= 1e-13 {
            return Ok(x);
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - r / d;
        x = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-16 * x.abs() {
            let (p, _) = src.psi_neg(x)?;
            if (p - u).abs() <= 1e-12 {
                return Ok(x);
            }
            return Err(Error::Inversion { iterations: it, residual: (p - u).abs() });
        }
    }
    Err(Error::Inversion { iterations: 300, residual: f64::NAN })
}

/// S(u) = (1 + u) chi(u) / u.
pub fn s_transform(src: &impl NegativeAxisPsi, u: f64) -> Result<f64> {
    Ok((1.0 + u) * chi(src, u)? / u)
}

/// Doubles (alpha, beta) from (1, 1) until |F(z) - z| <= slack |z| on
/// boundary probes of Gamma_{alpha,beta} for every measure in the family.
pub fn stolz_fit(family: &[Measure], slack: f64) -> Result<StolzRegion> {
    if family.is_empty() {
        return Err(Error::Argument("stolz_fit needs at least one measure".into()));
    }
    let ts: Vec<Transforms> = family.iter().map(Transforms::new).collect();
    let mut a = 1.0;
    while a <= 65536.0 {
        let region = StolzRegion::new(a, a, 1.0)?;
        let probes = boundary_probes(&region);
        let ok = ts.iter().all(|t| {
            probes.iter().all(|&z| match t.f(z) {
                Ok(f) => (f - z).norm() <= slack * z.norm(),
                Err(_) => false,
            })
        });
        if ok {
            return Ok(region);
        }
        a *= 2.0;
    }
    Err(Error::Fit { alpha: 65536.0 })
}

fn boundary_probes(r: &StolzRegion) -> Vec<C64> {
    let mut out = Vec::new();
    let half = r.alpha / r.beta;
    for k in 0..=16 {
        let x = -half + 2.0 * half * k as f64 / 16.0;
        out.push(C64::new(x, r.alpha));
    }
    for k in 0..=24 {
        let y = r.alpha * 2f64.powi(k);
        out.push(C64::new(y / r.beta, y));
        out.push(C64::new(-y / r.beta, y));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    G,
    F,
    Phi,
    Psi,
    Chi,
    S,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Validity {
    UpperHalfPlane,
    Stolz(StolzRegion),
    RealInterval(Interval),
}

/// A transform of one measure restricted to a validity domain.
#[derive(Clone, Debug)]
pub struct TransformEvaluator {
    pub kind: TransformKind,
    pub validity: Validity,
    pub tolerance: f64,
    transforms: Transforms,
}

impl TransformEvaluator {
    pub fn new(kind: TransformKind, m: &Measure, validity: Validity) -> Self {
        TransformEvaluator { kind, validity, tolerance: PHI_RESIDUAL, transforms: Transforms::new(m) }
    }

    pub fn transforms(&self) -> &Transforms {
        &self.transforms
    }

    fn check(&self, z: C64) -> Result<()> {
        let inside = match self.validity {
            Validity::UpperHalfPlane => z.im > 0.0,
            Validity::Stolz(r) => r.contains(z),
            Validity::RealInterval(i) => z.im == 0.0 && z.re > i.lo && z.re < i.hi,
        };
        if inside {
            Ok(())
        } else {
            Err(Error::Domain(format!("{z} is outside the evaluator's validity domain")))
        }
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        self.check(z)?;
        let t = &self.transforms;
        match self.kind {
            TransformKind::G => t.cauchy(z),
            TransformKind::F => t.f(z),
            TransformKind::Phi => t.phi(z),
            TransformKind::Psi => t.psi(z),
            TransformKind::Chi => chi(t, z.re).map(|x| C64::new(x, 0.0)),
            TransformKind::S => s_transform(t, z.re).map(|x| C64::new(x, 0.0)),
        }
    }
}

pub fn cauchy(m: &Measure, z: C64) -> Result<C64> {
    Transforms::new(m).cauchy(z)
}

pub fn f_transform(m: &Measure, z: C64) -> Result<C64> {
    Transforms::new(m).f(z)
}

pub fn phi(m: &Measure, z: C64) -> Result<C64> {
    Transforms::new(m).phi(z)
}

pub fn psi(m: &Measure, z: C64) -> Result<C64> {
    Transforms::new(m).psi(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn mixed() -> Measure {
        let sc = laws::semicircle(0.5, 0.3, 201);
        let mut atoms = sc.atoms().to_vec();
        atoms.push(crate::Atom::new(-1.2, 0.4));
        Measure::new(Domain::Real, atoms, sc.grid().to_vec(), sc.values().to_vec()).unwrap()
    }

    #[test]
    fn mixed_measure_round_trip() {
        let t = Transforms::new(&mixed());
        for z in [c(0.3, 1.5), c(-1.2, 2.0), c(4.0, 2.0)] {
            let w = z + t.phi(z).unwrap();
            assert!((t.f(w).unwrap() - z).norm() < 1e-9 * z.norm());
        }
    }

    #[test]
    fn cauchy_examples() {
        assert!((cauchy(&Measure::dirac(0.0), c(0.0, 1.0)).unwrap() - c(0.0, -1.0)).norm() < 1e-15);
        let g = cauchy(&laws::semicircle(0.0, 1.0, 2001), c(0.0, 2.0)).unwrap();
        assert!((g - c(0.0, 1.0 - 2f64.sqrt())).norm() < 1e-6);
        let g = cauchy(&laws::bernoulli(), c(0.0, 1.0)).unwrap();
        assert!((g - c(0.0, -0.5)).norm() < 1e-15);
        assert!(cauchy(&laws::bernoulli(), c(0.3, 0.0)).is_err());
    }

    #[test]
    fn f_examples() {
        let d = Measure::dirac(1.7);
        for z in [c(0.0, 1.0), c(-3.0, 0.2)] {
            assert!((f_transform(&d, z).unwrap() - (z - 1.7)).norm() < 1e-14);
        }
        let f = f_transform(&laws::semicircle(0.0, 1.0, 2001), c(0.0, 2.0)).unwrap();
        assert!((f - c(0.0, 1.0 + 2f64.sqrt())).norm() < 1e-5);
    }

    #[test]
    fn phi_examples() {
        let d = Measure::dirac(-0.4);
        assert!((phi(&d, c(0.3, 2.0)).unwrap() - c(-0.4, 0.0)).norm() < 1e-14);
        let sc = laws::semicircle(0.0, 1.0, 2001);
        let p = phi(&sc, c(0.0, 2.0)).unwrap();
        assert!((p - c(0.0, -0.5)).norm() < 1e-5, "{p}");
        // phi of a shifted measure is shifted by the constant
        let t = Transforms::new(&sc);
        let ts = Transforms::new(&sc.shift(0.7).unwrap());
        for z in [c(0.0, 3.0), c(1.0, 2.5), c(-2.0, 4.0)] {
            let diff = ts.phi(z).unwrap() - t.phi(z).unwrap();
            assert!((diff - 0.7).norm() < 1e-12, "{diff}");
        }
    }

    #[test]
    fn stolz_examples() {
        let r = stolz_fit(&[Measure::dirac(0.0)], 0.25).unwrap();
        assert_eq!((r.alpha, r.beta), (1.0, 1.0));
        let sc = laws::semicircle(0.0, 1.0, 2001);
        let r = stolz_fit(&[sc.clone()], 0.25).unwrap();
        assert!(r.alpha <= 4.0);
        assert_eq!(r.alpha, 2.0);
        let fam: Vec<Measure> = [-1.0, -0.5, 0.0, 0.5, 1.0].iter().map(|&s| sc.shift(s).unwrap()).collect();
        let rf = stolz_fit(&fam, 0.25).unwrap();
        assert!(rf.alpha <= 2.0 * r.alpha);
        assert!((StolzRegion::new(2.0, 1.0, 1.0).unwrap().band_area() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn psi_examples() {
        let d1 = Measure::dirac(1.0);
        assert!((psi(&d1, c(-1.0, 0.0)).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
        assert!(psi(&d1, c(1.0, 0.0)).is_err());
        let p = laws::projection();
        assert!((psi(&p, c(-1.0, 0.0)).unwrap() - c(-0.25, 0.0)).norm() < 1e-15);
        assert!(psi(&laws::bernoulli(), c(-1.0, 0.0)).is_err());
        // psi'(0) of a circle Dirac is the atom itself
        let th = 0.9;
        let cd = Measure::atomic(Domain::Circle, &[(th, 1.0)]).unwrap();
        let t = Transforms::new(&cd);
        let h = 1e-6;
        let d = (t.psi(c(h, 0.0)).unwrap() - t.psi(c(-h, 0.0)).unwrap()) / (2.0 * h);
        assert!((d - C64::from_polar(1.0, th)).norm() < 1e-9);
    }

    #[test]
    fn chi_and_s_examples() {
        let d1 = Transforms::new(&Measure::dirac(1.0));
        assert!((chi(&d1, -0.5).unwrap() + 1.0).abs() < 1e-12);
        assert!((s_transform(&d1, -0.3).unwrap() - 1.0).abs() < 1e-12);
        let d = Transforms::new(&Measure::dirac(2.5));
        for u in [-0.9, -0.5, -0.1] {
            assert!((chi(&d, u).unwrap() - u / (2.5 * (1.0 + u))).abs() < 1e-12);
            assert!((s_transform(&d, u).unwrap() - 0.4).abs() < 1e-12);
        }
        assert!(chi(&d, 0.1).is_err());
        assert!(chi(&d, -1.0).is_err());
        let p = Transforms::new(&laws::projection());
        assert!(chi(&p, -0.6).is_err());
        assert!(chi(&p, -0.4).is_ok());
    }

    #[test]
    fn marchenko_pastur_s_transform() {
        // S(u) = 1/(1+u) for free Poisson(1); S(-1/2) = 2
        let mp = Transforms::new(&laws::marchenko_pastur(1.0, 4001));
        let s = s_transform(&mp, -0.5).unwrap();
        assert!((s - 2.0).abs() < 1e-3, "{s}");
        for u in [-0.8, -0.25, -0.05] {
            let s = s_transform(&mp, u).unwrap();
            assert!((s * (1.0 + u) - 1.0).abs() < 2e-3, "{u} {s}");
        }
    }

    #[test]
    fn evaluator_rejects_points_outside_validity() {
        let r = StolzRegion::new(2.0, 1.0, 1.0).unwrap();
        let e = TransformEvaluator::new(TransformKind::Phi, &laws::semicircle(0.0, 1.0, 201), Validity::Stolz(r));
        assert!(e.eval(c(0.0, 2.5)).is_ok());
        assert!(matches!(e.eval(c(0.0, 1.0)), Err(Error::Domain(_))));
        assert!(matches!(e.eval(c(5.0, 2.5)), Err(Error::Domain(_))));
    }

    fn random_measure() -> impl Strategy<Value = Measure> {
        (
            prop::collection::vec((-3.0f64..3.0, 0.05f64..1.0), 1..4),
            prop::option::of((-2.0f64..2.0, 0.05f64..1.0, 0.1f64..1.0)),
        )
            .prop_map(|(atoms, sc)| {
                let atoms: Vec<crate::Atom> = atoms.into_iter().map(|(x, m)| crate::Atom::new(x, m)).collect();
                match sc {
                    Some((c0, v, w)) => {
                        let s = laws::semicircle(c0, v, 101);
                        let values = s.values().iter().map(|x| x * w).collect();
                        Measure::new(Domain::Real, atoms, s.grid().to_vec(), values).unwrap()
                    }
                    None => Measure::new(Domain::Real, atoms, vec![], vec![]).unwrap(),
                }
            })
    }

    fn positive_measure() -> impl Strategy<Value = Measure> {
        (prop::collection::vec((0.1f64..4.0, 0.05f64..1.0), 1..4), prop::option::of(0.0f64..0.6)).prop_map(
            |(atoms, zero)| {
                let mut a: Vec<crate::Atom> = atoms.into_iter().map(|(x, m)| crate::Atom::new(x, m)).collect();
                if let Some(z) = zero {
                    a.push(crate::Atom::new(0.0, z));
                }
                let u = laws::uniform(0.5, 1.5, 21);
                Measure::new(Domain::Positive, a, u.grid().to_vec(), u.values().iter().map(|v| v * 0.3).collect())
                    .unwrap()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn conjugate_symmetry(m in random_measure(), x in -5.0f64..5.0, y in 1e-3f64..5.0) {
            let t = Transforms::new(&m);
            let z = c(x, y);
            let g = t.cauchy(z).unwrap();
            let gc = t.cauchy(z.conj()).unwrap();
            prop_assert!((gc - g.conj()).norm() <= 1e-12 * (1.0 + g.norm()));
            prop_assert!(g.im < 0.0);
        }

        #[test]
        fn f_increases_imaginary_part(m in random_measure(), x in -5.0f64..5.0, y in 1e-3f64..5.0) {
            let f = f_transform(&m, c(x, y)).unwrap();
            prop_assert!(f.im >= y - 1e-12 * (1.0 + f.norm()));
        }

        #[test]
        fn inversion_consistency(m in random_measure(), s in -1.0f64..1.0, k in 0.0f64..1.0) {
            let t = Transforms::new(&m);
            let r = stolz_fit(std::slice::from_ref(&m), 0.25).unwrap();
            let y = r.alpha * (1.0 + 4.0 * k);
            let z = c(0.99 * s * y / r.beta, y);
            let p = t.phi(z).unwrap();
            let back = t.f(z + p).unwrap();
            prop_assert!((back - z).norm() <= 1e-8 * z.norm());
            prop_assert!(p.im <= 1e-10);
        }

        #[test]
        fn phi_derivative_bound(m in random_measure(), s in -1.0f64..1.0) {
            // |phi'(z)| <= C |z| with C tied to the fit slack
            let t = Transforms::new(&m);
            let r = stolz_fit(std::slice::from_ref(&m), 0.25).unwrap();
            let y = r.alpha + 0.5 * r.band_height;
            let z = c(0.9 * s * y / r.beta, y);
            let h = 1e-4 * z.norm();
            let d = (t.phi(z + h).unwrap() - t.phi(z - h).unwrap()) / (2.0 * h);
            prop_assert!(d.norm() <= 2.0 * 0.25 * z.norm(), "{} vs {}", d.norm(), z.norm());
        }

        #[test]
        fn chi_inverts_psi(m in positive_measure(), v in 0.02f64..0.98) {
            let t = Transforms::new(&m);
            let dom = chi_interval(&t);
            let u = dom.lo + v * (dom.hi - dom.lo);
            let x = chi(&t, u).unwrap();
            let (p, _) = t.psi_neg(x).unwrap();
            prop_assert!((p - u).abs() <= 1e-10);
            let x2 = chi(&t, p).unwrap();
            prop_assert!((x2 - x).abs() <= 1e-10 * (1.0 + x.abs()));
        }

        #[test]
        fn s_positive_nonincreasing(m in positive_measure()) {
            let t = Transforms::new(&m);
            let dom = chi_interval(&t);
            let mut prev = f64::INFINITY;
            for k in 1..100 {
                let u = dom.lo + (dom.hi - dom.lo) * k as f64 / 100.0;
                let s = s_transform(&t, u).unwrap();
                prop_assert!(s > 0.0);
                prop_assert!(s <= prev * (1.0 + 1e-9));
                prev = s;
            }
            prop_assert!(chi(&t, dom.lo + 0.2 * dom.width()).unwrap() < chi(&t, dom.lo + 0.6 * dom.width()).unwrap());
        }
    }
}
