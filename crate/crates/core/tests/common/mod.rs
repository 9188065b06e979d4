#![allow(dead_code)]

use freeconv::{laws, Atom, Domain, Measure};
use proptest::prelude::*;

pub fn atomic(domain: Domain, lo: f64, hi: f64, k: std::ops::Range<usize>) -> impl Strategy<Value = Measure> {
    prop::collection::vec((lo..hi, 0.05f64..1.0), k).prop_map(move |v| {
        let t: f64 = v.iter().map(|p| p.1).sum();
        let atoms: Vec<(f64, f64)> = v.iter().map(|&(x, w)| (x, w / t)).collect();
        Measure::atomic(domain, &atoms).unwrap()
    })
}

/// Atoms on the line, optionally mixed with a weighted semicircle.
pub fn mixed() -> impl Strategy<Value = Measure> {
    (
        prop::collection::vec((-3.0f64..3.0, 0.05f64..1.0), 1..4),
        prop::option::of((-2.0f64..2.0, 0.05f64..1.0, 0.1f64..1.0)),
    )
        .prop_map(|(atoms, sc)| {
            let atoms: Vec<Atom> = atoms.into_iter().map(|(x, m)| Atom::new(x, m)).collect();
            match sc {
                Some((c, v, w)) => {
                    let s = laws::semicircle(c, v, 101);
                    let values = s.values().iter().map(|x| x * w).collect();
                    Measure::new(Domain::Real, atoms, s.grid().to_vec(), values).unwrap()
                }
                None => Measure::new(Domain::Real, atoms, vec![], vec![]).unwrap(),
            }
        })
}

/// Atoms at multiples of 1/16, so sums and power-of-two dilations of
/// locations are exact in floating point. Neighbouring atoms are at least
/// `gap` sixteenths apart.
pub fn dyadic(domain: Domain, lo: i32, hi: i32, k: std::ops::Range<usize>, gap: i32) -> impl Strategy<Value = Measure> {
    prop::collection::btree_map(lo..hi, 0.05f64..1.0, k)
        .prop_filter("atoms too close", move |v| v.keys().zip(v.keys().skip(1)).all(|(a, b)| b - a >= gap))
        .prop_map(move |v| {
            let t: f64 = v.values().sum();
            let atoms: Vec<(f64, f64)> = v.iter().map(|(&n, &w)| (n as f64 / 16.0, w / t)).collect();
            Measure::atomic(domain, &atoms).unwrap()
        })
}

pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: prop::test_runner::RngSeed::Fixed(20260101), ..ProptestConfig::default() }
}
