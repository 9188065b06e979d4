//! Acceptance suite: one pass/fail line per criterion.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use freeconv::additive::{free_add, predict_atoms, AddOptions};
use freeconv::circle::{lambda_circle, s_zero};
use freeconv::io::to_json;
use freeconv::khintchine::{bernoulli_semigroup, lambda_additive, structural_checks, Certificate, LambdaConfig, Mode};
use freeconv::laws;
use freeconv::multiplicative::{chi_normalize, free_mult, s_normalize, s_scan_points, FreeProduct, MultOptions};
use freeconv::oracle::{sample_additive, OracleConfig};
use freeconv::transforms::{s_transform, NegativeAxisPsi, StolzRegion, Transforms};
use freeconv::{kolmogorov_distance, Domain, Error, Measure};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn e2s<T>(r: freeconv::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn cell(grid: &[f64]) -> f64 {
    grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// Random 2 to 4 atom measure with one heavy atom, locations at least 0.1 apart.
fn random_atomic(rng: &mut ChaCha8Rng) -> Measure {
    let k = rng.random_range(2..=4);
    let mut xs: Vec<f64> = Vec::new();
    while xs.len() < k {
        let x: f64 = rng.random_range(-2.0..2.0);
        if xs.iter().all(|y| (x - y).abs() >= 0.1) {
            xs.push(x);
        }
    }
    let heavy = rng.random_range(0.4..0.85);
    let rest: Vec<f64> = (1..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = rest.iter().sum();
    let mut atoms = vec![(xs[0], heavy)];
    atoms.extend(rest.iter().zip(&xs[1..]).map(|(w, x)| (*x, (1.0 - heavy) * w / total)));
    Measure::atomic(Domain::Real, &atoms).unwrap()
}

fn random_pairs(n: usize, seed: u64) -> Vec<(Measure, Measure)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (random_atomic(&mut rng), random_atomic(&mut rng))).collect()
}

fn semicircles() -> Outcome {
    let sc = laws::semicircle(0.0, 1.0, 2001);
    let start = Instant::now();
    let (m, rep) = e2s(free_add(&sc, &sc, &AddOptions::default()))?;
    let elapsed = start.elapsed();
    ensure(rep.grid.len() == 2001, format!("grid has {} points", rep.grid.len()))?;
    let d = e2s(kolmogorov_distance(&m, &laws::semicircle(0.0, 2.0, 20001)))?;
    ensure(d <= 1e-3, format!("d_inf = {d:.3e}"))?;
    ensure(elapsed <= Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!("d_inf = {d:.3e} in {:.2}s", elapsed.as_secs_f64()))
}

fn arcsine() -> Outcome {
    let b = laws::bernoulli();
    let (m, _) = e2s(free_add(&b, &b, &AddOptions::default()))?;
    let mut sup: f64 = 0.0;
    for &x in m.grid().iter().filter(|x| x.abs() <= 1.9) {
        sup = sup.max((m.density(x) - laws::arcsine_density(x, -2.0, 2.0)).abs());
    }
    ensure(sup <= 1e-2, format!("density sup error {sup:.3e}"))?;
    ensure(m.atom_mass() <= 1e-3, format!("atom mass {:.3e}", m.atom_mass()))?;
    let cfg = OracleConfig { matrix_size: 2000, trials: 10, seed: 20240611, bin_count: None };
    let o = e2s(sample_additive(&b, &b, &cfg))?;
    let exact = laws::arcsine(-2.0, 2.0, 20001);
    let d_exact = e2s(kolmogorov_distance(&o, &exact))?;
    let d_engine = e2s(kolmogorov_distance(&o, &m))?;
    ensure(d_exact <= 0.05 && d_engine <= 0.05, format!("oracle d_inf {d_exact:.3e} / {d_engine:.3e}"))?;
    Ok(format!(
        "density err {sup:.3e}, atoms {:.1e}, oracle d_inf {d_exact:.3e} (closed form) {d_engine:.3e} (engine)",
        m.atom_mass()
    ))
}

fn atom_predictions() -> Outcome {
    let mut worst_mass: f64 = 0.0;
    let mut found = 0;
    for (i, (m1, m2)) in random_pairs(20, 7).iter().enumerate() {
        let (m, rep) = e2s(free_add(m1, m2, &AddOptions::default()))?;
        let h = cell(&rep.grid);
        let predicted: Vec<(f64, f64)> = predict_atoms(m1, m2).into_iter().filter(|p| p.1 >= 1e-3).collect();
        for &(x, w) in &predicted {
            let got = m.mass_at(x, h);
            worst_mass = worst_mass.max((got - w).abs());
            ensure((got - w).abs() <= 1e-3, format!("pair {i}: atom at {x:.4} has {got:.6}, predicted {w:.6}"))?;
            found += 1;
        }
        for a in m.atoms() {
            ensure(
                predicted.iter().any(|p| (p.0 - a.x).abs() <= h),
                format!("pair {i}: unpredicted atom {:.6} at {:.4}", a.mass, a.x),
            )?;
        }
    }
    Ok(format!("{found} predicted atoms matched, worst mass error {worst_mass:.2e}"))
}

fn structural() -> Outcome {
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut pairs = random_pairs(20, 7);
    pairs.push((laws::semicircle(0.0, 1.0, 2001), laws::semicircle(0.0, 1.0, 2001)));
    pairs.push((laws::bernoulli(), laws::bernoulli()));
    pairs.push((laws::uniform(-1.0, 0.5, 401), laws::bernoulli()));
    for (i, (m1, m2)) in pairs.iter().enumerate() {
        let (m, rep) = e2s(free_add(m1, m2, &AddOptions::default()))?;
        for c in e2s(structural_checks(m1, m2, &m, Mode::Additive))? {
            worst = worst.max(c.measured - c.bound);
            ensure(
                c.pass,
                format!(
                    "pair {i}, {}: {:.3e} > {:.1e}, cell {:.2e}, support {:?}, parts {:?} {:?}, atoms {:?}",
                    c.check,
                    c.measured,
                    c.bound,
                    cell(&rep.grid),
                    m.support(),
                    m1.atoms(),
                    m2.atoms(),
                    m.atoms()
                ),
            )?;
            count += 1;
        }
    }
    let positive = [
        (laws::uniform(1.0, 2.0, 401).with_domain(Domain::Positive).unwrap(), laws::uniform(0.5, 1.5, 401)),
        (
            Measure::atomic(Domain::Positive, &[(0.5, 0.3), (2.0, 0.7)]).unwrap(),
            Measure::atomic(Domain::Positive, &[(1.0, 0.6), (3.0, 0.4)]).unwrap(),
        ),
    ];
    for (m1, m2) in &positive {
        let m2 = e2s(m2.with_domain(Domain::Positive))?;
        let (m, _) = e2s(free_mult(m1, &m2, &MultOptions::default()))?;
        for c in e2s(structural_checks(m1, &m2, &m, Mode::Multiplicative))? {
            worst = worst.max(c.measured - c.bound);
            ensure(c.pass, format!("{}: {:.3e} > {:.1e}", c.check, c.measured, c.bound))?;
            count += 1;
        }
    }
    Ok(format!("{count} bounds hold, largest measured minus bound {worst:.2e}"))
}

fn lambda_suite() -> Outcome {
    let c = LambdaConfig::new(e2s(StolzRegion::new(2.0, 2.0, 1.0))?);
    let d = e2s(lambda_additive(&Measure::dirac(0.4), &c))?.value;
    ensure(d.abs() <= 1e-6, format!("lambda of a Dirac = {d:.3e}"))?;

    let mut shift_err: f64 = 0.0;
    for m in [laws::semicircle(0.0, 1.0, 2001), laws::bernoulli(), laws::uniform(-1.0, 2.0, 401)] {
        let base = e2s(lambda_additive(&m, &c))?.value;
        for s in [-0.7, 0.3, 1.1] {
            let moved = e2s(lambda_additive(&e2s(m.shift(s))?, &c))?.value;
            shift_err = shift_err.max((moved - base).abs());
        }
    }
    ensure(shift_err <= 1e-9, format!("translation changes lambda by {shift_err:.3e}"))?;

    let mut add_err: f64 = 0.0;
    for (m1, m2) in random_pairs(10, 11) {
        let (m, _) = e2s(free_add(&m1, &m2, &AddOptions::default()))?;
        let lc = e2s(LambdaConfig::fitted(&[m1.clone(), m2.clone(), m.clone()]))?;
        let total = e2s(lambda_additive(&m, &lc))?.value;
        let sum = e2s(lambda_additive(&m1, &lc))?.value + e2s(lambda_additive(&m2, &lc))?.value;
        add_err = add_err.max((total - sum).abs());
    }
    ensure(add_err <= 5e-3, format!("additivity error {add_err:.3e}"))?;

    let sc = laws::semicircle(0.0, 1.0, 2001);
    let v = e2s(lambda_additive(&sc, &LambdaConfig::new(e2s(StolzRegion::new(2.0, 1.0, 1.0))?)))?.value;
    let digits = |x: f64| format!("{:.2}", x);
    ensure(digits(v) == digits(PI / 2.0), format!("semicircle lambda {v:.6} vs {:.6}", PI / 2.0))?;
    Ok(format!("dirac {d:.1e}, translation {shift_err:.1e}, additivity {add_err:.2e}, semicircle {v:.5}"))
}

fn semigroup() -> Outcome {
    let mut notes = Vec::new();
    for t in [1.25, 1.5, 1.75] {
        let (m, rep) = e2s(bernoulli_semigroup(t, None))?;
        let h = cell(&rep.convolution.grid);
        let w = 1.0 - t / 2.0;
        for x in [-t, t] {
            let got = m.mass_at(x, h);
            ensure((got - w).abs() <= 1e-3, format!("t={t}: atom at {x} has {got:.6}, want {w:.6}"))?;
        }
        let ac = rep.ac_support.ok_or(format!("t={t}: no density"))?;
        let edge = 2.0 * (t - 1.0).sqrt();
        let e = (ac.lo + edge).abs().max((ac.hi - edge).abs());
        ensure(e <= 0.02, format!("t={t}: density support [{:.4}, {:.4}] vs +-{edge:.4}", ac.lo, ac.hi))?;
        ensure(rep.certificate == Certificate::Certified, format!("t={t}: certificate {:?}", rep.certificate))?;
        notes.push(format!("t={t} edge err {e:.1e}"));
    }
    let (m, _) = e2s(bernoulli_semigroup(2.0, None))?;
    ensure(m.atom_mass() <= 1e-3, format!("t=2: atom mass {:.3e}", m.atom_mass()))?;
    notes.push(format!("t=2 atoms {:.1e}", m.atom_mass()));
    Ok(notes.join(", "))
}

fn multiplicative() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pairs: Vec<(Measure, Measure)> = (0..8)
        .map(|_| {
            let mut draw = || {
                let k = rng.random_range(2..=4);
                let atoms: Vec<(f64, f64)> =
                    (0..k).map(|_| (rng.random_range(0.1..3.0), rng.random_range(0.05..1.0))).collect();
                let t: f64 = atoms.iter().map(|a| a.1).sum();
                let atoms: Vec<(f64, f64)> = atoms.iter().map(|&(x, w)| (x, w / t)).collect();
                Measure::atomic(Domain::Positive, &atoms).unwrap()
            };
            (draw(), draw())
        })
        .collect();
    pairs.push((laws::marchenko_pastur(1.0, 801), laws::uniform(0.5, 2.0, 401).with_domain(Domain::Positive).unwrap()));
    pairs.push((laws::projection(), laws::marchenko_pastur(2.0, 801)));
    let mut s_err: f64 = 0.0;
    for (m1, m2) in &pairs {
        let prod = e2s(FreeProduct::new(m1, m2))?;
        let (t1, t2) = (Transforms::new(m1), Transforms::new(m2));
        let zero = prod.zero_mass();
        for u in s_scan_points(zero, 20) {
            let s = e2s(s_transform(&prod, u))?;
            let want = e2s(s_transform(&t1, u))? * e2s(s_transform(&t2, u))?;
            s_err = s_err.max((s - want).abs() / want.abs());
        }
    }
    ensure(s_err <= 1e-6, format!("S multiplicativity error {s_err:.3e}"))?;

    let p = laws::projection();
    let (m, _) = e2s(free_mult(&p, &p, &MultOptions::default()))?;
    ensure(
        m.mass_at(0.0, 0.0) == 0.5 || (m.mass_at(0.0, 0.0) - 0.5).abs() <= 1e-12,
        format!("atom at 0 = {}", m.mass_at(0.0, 0.0)),
    )?;
    let mut sup: f64 = 0.0;
    for &x in m.grid().iter().filter(|x| **x > 0.05 && **x < 0.95) {
        sup = sup.max((m.density(x) - 0.5 * laws::arcsine_density(x, 0.0, 1.0)).abs());
    }
    ensure(sup <= 1e-2, format!("projection product density error {sup:.3e}"))?;

    let mut norm_err: f64 = 0.0;
    let samples = [
        laws::marchenko_pastur(1.0, 801),
        laws::projection(),
        laws::uniform(0.0, 3.0, 401).with_domain(Domain::Positive).unwrap(),
    ];
    for m in &samples {
        for beta in [0.1, 0.25, 0.4] {
            let (n, _) = e2s(s_normalize(m, beta))?;
            norm_err = norm_err.max((e2s(s_transform(&Transforms::new(&n), -beta))? - 1.0).abs());
        }
        for alpha in [0.2, 0.5, 0.8] {
            let (n, _) = e2s(chi_normalize(m, alpha))?;
            let psi = e2s(Transforms::new(&n).psi_neg(-1.0))?.0;
            norm_err = norm_err.max((psi + alpha / 2.0).abs());
        }
    }
    ensure(norm_err <= 1e-10, format!("normalization error {norm_err:.3e}"))?;
    Ok(format!("S error {s_err:.1e}, projection density {sup:.2e}, normalization {norm_err:.1e}"))
}

fn circle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut min_gap = f64::INFINITY;
    let mut skipped = 0;
    for i in 0..1000 {
        let k = if i % 10 == 0 { 1 } else { rng.random_range(2..=5) };
        let raw: Vec<(f64, f64)> =
            (0..k).map(|_| (rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.05..1.0))).collect();
        let t: f64 = raw.iter().map(|a| a.1).sum();
        let atoms: Vec<(f64, f64)> = raw.iter().map(|&(x, w)| (x, w / t)).collect();
        let m = Measure::atomic(Domain::Circle, &atoms).unwrap();
        match lambda_circle(&m) {
            Ok(l) => {
                ensure(l >= 1.0 - 1e-12, format!("measure {i}: |S(0)| = {l}"))?;
                if m.is_dirac() {
                    ensure((l - 1.0).abs() <= 1e-12, format!("Dirac {i}: |S(0)| = {l}"))?;
                } else {
                    ensure(l > 1.0 + 1e-12, format!("non-Dirac {i}: |S(0)| = {l}"))?;
                    min_gap = min_gap.min(l - 1.0);
                }
            }
            Err(Error::NotInMStar) => skipped += 1,
            Err(e) => return Err(format!("measure {i}: {e}")),
        }
    }
    for m in [
        Measure::atomic(Domain::Circle, &[(0.3, 0.5), (0.3 + PI, 0.5)]).unwrap(),
        laws::uniform_circle(401),
        Measure::atomic(Domain::Circle, &[(0.0, 1.0 / 3.0), (2.0 * PI / 3.0, 1.0 / 3.0), (4.0 * PI / 3.0, 1.0 / 3.0)])
            .unwrap(),
    ] {
        ensure(matches!(s_zero(&m), Err(Error::NotInMStar)), "zero-mean measure accepted".into())?;
    }
    Ok(format!("smallest |S(0)| - 1 off Diracs {min_gap:.2e}, {skipped} draws had zero mean"))
}

fn write(dir: &Path, name: &str, m: &Measure) {
    std::fs::write(dir.join(name), to_json(m).unwrap()).unwrap();
}

fn cli_examples() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_freeconv");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    write(d, "bern.json", &laws::bernoulli());
    write(d, "p1.json", &laws::bernoulli());
    write(d, "p2.json", &laws::bernoulli());
    write(d, "sc1.json", &laws::semicircle(0.0, 1.0, 2001));
    write(d, "target.json", &laws::arcsine(-2.0, 2.0, 2001));
    let runs: [(&[&str], i32, &str); 3] = [
        (&["add", "bern.json", "bern.json", "--grid", "-2.5:2.5:2001", "-o", "out.json", "--csv", "out.csv"], 0, "out"),
        (&["lambda", "sc1.json", "--alpha", "2", "--beta", "1", "--band", "1", "-o", "lam.json"], 0, "lam"),
        (&["verify", "target.json", "p1.json", "p2.json", "--mode", "additive"], 0, "target.verify"),
    ];
    let start = Instant::now();
    for (args, want, out) in runs {
        let st = Command::new(exe).args(args).current_dir(d).output().map_err(|e| e.to_string())?;
        let code = st.status.code().unwrap_or(-1);
        ensure(code == want, format!("{} exited {code}: {}", args[0], String::from_utf8_lossy(&st.stderr)))?;
        for f in [format!("{out}.json"), format!("{out}.report.json")] {
            ensure(d.join(&f).exists(), format!("{} did not write {f}", args[0]))?;
        }
    }
    let elapsed = start.elapsed();
    let csv = std::fs::read_to_string(d.join("out.csv")).map_err(|e| e.to_string())?;
    ensure(csv.starts_with("x,density,cdf\n"), "csv header".into())?;
    let lam: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("lam.json")).unwrap()).unwrap();
    let v = lam["value"].as_f64().unwrap_or(f64::NAN);
    ensure((v - PI / 2.0).abs() < 5e-3, format!("lambda example gave {v}"))?;
    let back = freeconv::io::load_measure(&d.join("out.json")).map_err(|e| e.to_string())?;
    let err = (back.density(0.0) - 1.0 / (2.0 * PI)).abs();
    ensure(err < 1e-2, format!("add example density at 0 off by {err:.3e}"))?;
    ensure(elapsed <= Duration::from_secs(300), format!("took {elapsed:?}"))?;
    Ok(format!("3 commands green in {:.1}s", elapsed.as_secs_f64()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("semicircle pair", semicircles),
        ("arcsine reproduction", arcsine),
        ("atom predictions", atom_predictions),
        ("structural bounds", structural),
        ("lambda suite", lambda_suite),
        ("bernoulli semigroup", semigroup),
        ("multiplicative", multiplicative),
        ("circle S(0)", circle),
        ("cli examples", cli_examples),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {}: PASS {name} ({msg}) [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({msg}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
