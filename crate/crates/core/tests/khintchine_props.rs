mod common;

use freeconv::khintchine::{
    indecomposable_certificate, lambda_additive, lambda_mult, verify_decomposition, Certificate, LambdaConfig, Mode,
    Verdict, VerifyConfig,
};
use freeconv::{laws, Domain, Measure};
use proptest::prelude::*;

fn lambda(m: &Measure, cfg: &LambdaConfig) -> f64 {
    lambda_additive(m, cfg).unwrap().value
}

fn variance(m: &Measure) -> f64 {
    let mean = m.moment(1).unwrap();
    m.moment(2).unwrap() - mean * mean
}

proptest! {
    #![proptest_config(common::config(12))]

    #[test]
    fn lambda_is_nonnegative(m in common::mixed()) {
        let cfg = LambdaConfig::fitted(std::slice::from_ref(&m)).unwrap();
        let v = lambda(&m, &cfg);
        prop_assert!(v >= -1e-9, "{}", v);
        if variance(&m) >= 0.01 {
            prop_assert!(v > 1e-3, "{} for variance {}", v, variance(&m));
        }
    }

    #[test]
    fn lambda_ignores_translation(m in common::mixed(), c in -1.0f64..1.0) {
        let moved = m.shift(c).unwrap();
        let cfg = LambdaConfig::fitted(&[m.clone(), moved.clone()]).unwrap();
        let (a, b) = (lambda(&m, &cfg), lambda(&moved, &cfg));
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn lambda_mult_ignores_dilation(m in common::dyadic(Domain::Positive, 2, 48, 2..4, 1), c in 0.1f64..10.0) {
        let a = lambda_mult(&m, 0.5, 0.25).unwrap();
        let b = lambda_mult(&m.dilate(c).unwrap(), 0.5, 0.25).unwrap();
        prop_assert!(a >= -1e-10, "{}", a);
        prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn certified_targets_are_never_split(t in common::dyadic(Domain::Real, -32, 32, 2..4, 1),
                                         p in common::dyadic(Domain::Real, -16, 16, 2..3, 1)) {
        prop_assume!(indecomposable_certificate(&t) == Certificate::Certified);
        // the second part makes the variances add up
        let v = (variance(&t) - variance(&p)).max(0.05);
        let q = laws::semicircle(0.0, v, 401);
        let verdict = verify_decomposition(&t, &[p, q], Mode::Additive, &VerifyConfig::default());
        prop_assert_eq!(verdict.verdict, Verdict::Rejected);
    }
}

#[test]
fn diracs_have_no_lambda() {
    let cfg = LambdaConfig::fitted(&[laws::bernoulli()]).unwrap();
    for c in [-1.0, 0.0, 0.5] {
        assert!(lambda(&Measure::dirac(c), &cfg) < 1e-6);
    }
    assert_eq!(lambda_mult(&Measure::dirac(3.0), 0.5, 0.25).unwrap(), 0.0);
}

// Lambda along weakly convergent sequences, against the limit
#[test]
fn lambda_is_weakly_continuous() {
    let bern = |p: f64| Measure::atomic(Domain::Real, &[(-1.0, p), (1.0, 1.0 - p)]).unwrap();
    let family: Vec<Measure> = [0.5, 0.51, 0.501].iter().map(|&p| bern(p)).collect();
    let cfg = LambdaConfig::fitted(&family).unwrap();
    let limit = lambda(&family[0], &cfg);
    let drift = |m: &Measure| (lambda(m, &cfg) - limit).abs() / limit;
    assert!(drift(&family[2]) <= 1e-2, "{}", drift(&family[2]));
    assert!(drift(&family[2]) < drift(&family[1]));

    let family: Vec<Measure> = [1.0, 1.1, 1.001].iter().map(|&v| laws::semicircle(0.0, v, 801)).collect();
    let cfg = LambdaConfig::fitted(&family).unwrap();
    let limit = lambda(&family[0], &cfg);
    let drift = |m: &Measure| (lambda(m, &cfg) - limit).abs() / limit;
    assert!(drift(&family[2]) <= 1e-2, "{}", drift(&family[2]));
    assert!(drift(&family[2]) < drift(&family[1]));
}

#[test]
fn endpoint_atoms_certify() {
    assert_eq!(indecomposable_certificate(&laws::bernoulli()), Certificate::Certified);
    assert_eq!(indecomposable_certificate(&laws::semicircle(0.0, 1.0, 401)), Certificate::Inconclusive);
    let t = Measure::atomic(Domain::Real, &[(-1.0, 0.3), (0.2, 0.4), (1.5, 0.3)]).unwrap();
    assert_eq!(indecomposable_certificate(&t), Certificate::Certified);
}
