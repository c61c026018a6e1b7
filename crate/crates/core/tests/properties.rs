use std::collections::BTreeSet;

use proptest::prelude::*;
use reflectionless::jet::{jet_div, jet_log_d2, jet_mul, log_derivative};
use reflectionless::soliton::potential;
use reflectionless::{CoefficientRule, DoubleDouble, Jet, Real, SolitonConfig};

fn dd(v: f64) -> DoubleDouble {
    DoubleDouble::from_f64(v)
}

fn ascending(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(1u32..4000, n)
        .prop_map(|s| s.into_iter().map(|v| v as f64 / 1000.0).collect())
}

fn config(max_n: usize) -> impl Strategy<Value = SolitonConfig> {
    (1..=max_n).prop_flat_map(|n| {
        (ascending(n), prop::collection::vec(-3.0f64..3.0, n)).prop_map(|(k, lc)| {
            let c = lc.iter().map(|l| 10f64.powf(*l)).collect();
            SolitonConfig::new(k, c).unwrap()
        })
    })
}

fn coeffs(order: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, order + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jet_product_of_exponentials(a in -3.0f64..3.0, b in -3.0f64..3.0, x in -2.0f64..2.0) {
        let order = 6;
        let p = jet_mul(&Jet::exp_shape(a, x, order), &Jet::exp_shape(b, x, order)).unwrap();
        let e = Jet::exp_shape(a + b, x, order);
        for (u, v) in p.coeffs().iter().zip(e.coeffs()) {
            prop_assert!((u - v).abs() <= 1e-13 * v.abs().max(1.0));
        }
    }

    #[test]
    fn jet_division_inverts_multiplication(a in coeffs(5), mut b in coeffs(5)) {
        b[0] = 1.0 + b[0].abs();
        let ja = Jet::new(0.3, a).unwrap();
        let jb = Jet::new(0.3, b).unwrap();
        let back = jet_div(&jet_mul(&ja, &jb).unwrap(), &jb).unwrap();
        for (u, v) in back.coeffs().iter().zip(ja.coeffs()) {
            prop_assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn log_derivative_of_an_exponential_is_its_rate(a in -4.0f64..4.0, s in 0.1f64..10.0) {
        let j = Jet::exp_shape(a, 1.0, 5).scale(s);
        let l = log_derivative(&j).unwrap();
        prop_assert!((l.value() - a).abs() < 1e-13);
        for c in &l.coeffs()[1..] {
            prop_assert!(c.abs() < 1e-12);
        }
        prop_assert!(jet_log_d2(&j).unwrap().abs() < 1e-12);
    }

    #[test]
    fn derivative_undoes_integration(a in coeffs(6), v in -1.0f64..1.0) {
        let j = Jet::new(-0.7, a).unwrap();
        let back = j.integrate(v).derivative();
        prop_assert_eq!(back.order(), j.order());
        for (u, w) in back.coeffs().iter().zip(j.coeffs()) {
            prop_assert!((u - w).abs() < 1e-14);
        }
    }

    #[test]
    fn double_double_round_trips(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        prop_assume!(b.abs() > 1e-3);
        let (x, y) = (dd(a), dd(b));
        prop_assert_eq!((x + y - y).to_f64(), a);
        let q = x * y / y - x;
        prop_assert!(q.to_f64().abs() <= 1e-30 * a.abs().max(1.0));
        // a + b is exact in two words
        let s = x + y;
        prop_assert_eq!(s.hi(), a + b);
    }

    #[test]
    fn double_double_exp_is_a_homomorphism(a in -30.0f64..30.0, b in -30.0f64..30.0) {
        let lhs = (dd(a) + dd(b)).exp();
        let rhs = dd(a).exp() * dd(b).exp();
        let rel = ((lhs - rhs) / rhs).to_f64().abs();
        prop_assert!(rel < 1e-29, "{rel:e}");
        prop_assert!((lhs.to_f64() / (a + b).exp() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rules_compose_commutatively(k in ascending(5), d in prop::collection::btree_set(0usize..5, 1..4), j in 0usize..5) {
        let d: Vec<usize> = d.into_iter().collect();
        let a = CoefficientRule::deletion(&k, &d, 2).unwrap();
        let b = CoefficientRule::eigenfunction(&k, j).unwrap();
        let ab = a.compose(&b).unwrap();
        let ba = b.compose(&a).unwrap();
        prop_assert_eq!(&ab, &ba);
        let c = vec![1.5; 5];
        let twice = b.apply(&a.apply(&c).unwrap()).unwrap();
        let once = ab.apply(&c).unwrap();
        for (u, v) in twice.iter().zip(&once) {
            prop_assert!((u - v).abs() <= 1e-15 * v.abs());
        }
    }

    #[test]
    fn deletion_rules_split_over_disjoint_sets(
        k in ascending(6),
        d1 in prop::collection::btree_set(0usize..6, 0..3),
        d2 in prop::collection::btree_set(0usize..6, 0..3),
        xi in 1u32..3,
    ) {
        let d2: BTreeSet<usize> = d2.difference(&d1).copied().collect();
        let union: Vec<usize> = d1.union(&d2).copied().collect();
        let d1: Vec<usize> = d1.into_iter().collect();
        let d2: Vec<usize> = d2.into_iter().collect();
        let whole = CoefficientRule::deletion(&k, &union, xi).unwrap();
        let split = CoefficientRule::deletion(&k, &d1, xi)
            .unwrap()
            .compose(&CoefficientRule::deletion(&k, &d2, xi).unwrap())
            .unwrap();
        for m in 0..6 {
            let (u, v) = (whole.factors[m], split.factors[m]);
            prop_assert!((u - v).abs() <= 1e-14 * v.abs());
            let (s, ln) = split.ln_factor::<DoubleDouble>(m).unwrap_or((0.0, dd(f64::NEG_INFINITY)));
            prop_assert!((s * ln.to_f64().exp() - v).abs() <= 1e-14 * v.abs());
        }
    }

    #[test]
    fn config_json_round_trip(cfg in config(6), t in -1.0f64..1.0) {
        let cfg = cfg.with_kdv_time(t);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SolitonConfig = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn potential_is_nonpositive(cfg in config(4), x in -20.0f64..20.0) {
        // U = -4 sum k_j psi_j^2 for normalised psi_j
        prop_assert!(potential(&cfg, x).unwrap() <= 0.0);
    }
}
