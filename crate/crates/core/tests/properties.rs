use proptest::prelude::*;
use rpq_core::combinatorics::{multinomial, multinomial_product_form};
use rpq_core::distributions::{pmf_table, sample, trial_probabilities, DistributionSpec, Kind};
use rpq_core::{make_preset_algebra, DeformationAlgebra, MultiIndex, Preset};

fn algebra() -> impl Strategy<Value = DeformationAlgebra> {
    (0..Preset::ALL.len(), 0.55f64..0.95, 0.1f64..0.9).prop_map(|(i, p, frac)| {
        make_preset_algebra(Preset::ALL[i], p, p * frac)
            .expect("q < p < 1 is inside every preset domain")
    })
}

fn finite_kind() -> impl Strategy<Value = Kind> {
    prop_oneof![
        Just(Kind::FirstKind),
        Just(Kind::SecondKind),
        Just(Kind::SecondKindSuccesses)
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn numbers_split(alg in algebra(), x in 0i64..=20, s_frac in 0.0f64..=1.0) {
        let s = (x as f64 * s_frac).floor() as i64;
        let lhs = alg.number(x).unwrap();
        let rhs = alg.tau1().powi(s as i32) * alg.number(x - s).unwrap()
            + alg.tau2().powi((x - s) as i32) * alg.number(s).unwrap();
        prop_assert!(rel(lhs, rhs) <= 1e-12);
    }

    #[test]
    fn numbers_are_positive(alg in algebra(), n in 1i64..=20) {
        prop_assert!(alg.number(n).unwrap() > 0.0);
    }

    #[test]
    fn inversion_is_an_involution(alg in algebra(), n in 0i64..=10) {
        let back = alg.invert_parameters().unwrap().invert_parameters().unwrap();
        prop_assert!(rel(back.number(n).unwrap(), alg.number(n).unwrap()) <= 1e-13);
    }

    #[test]
    fn product_form_equals_coefficient(alg in algebra(), r in prop::collection::vec(0u32..4, 1..=3), extra in 0u32..3) {
        let r = MultiIndex::new(r).unwrap();
        let n = r.total() + extra as i64;
        let direct = multinomial(&alg, n, &r).unwrap();
        prop_assert!(rel(multinomial_product_form(&alg, n, &r).unwrap(), direct) <= 1e-12);
    }

    #[test]
    fn trial_probabilities_are_complementary(alg in algebra(), theta in 0.05f64..0.95, i in 1u32..=20) {
        let (s, f) = trial_probabilities(&alg, &theta, i);
        prop_assert!((s + f - 1.0).abs() <= f64::EPSILON);
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn finite_tables_normalise(
        alg in algebra(),
        kind in finite_kind(),
        n in 0u32..=8,
        theta in prop::collection::vec(0.2f64..0.4, 1..=3),
    ) {
        // some parameter points leave the trial model's domain
        let Ok(spec) = DistributionSpec::new(kind, alg, n, theta) else { return Ok(()) };
        let t = pmf_table(&spec).unwrap();
        prop_assert!(t.normalization_defect() <= 1e-10);
        prop_assert!(t.entries().all(|(i, p)| *p >= 0.0 && i.total() <= n as i64));
    }

    #[test]
    fn draws_stay_in_the_support(alg in algebra(), n in 0u32..=6, theta in prop::collection::vec(0.2f64..0.4, 1..=2), seed: u64) {
        let Ok(spec) = DistributionSpec::new(Kind::FirstKind, alg, n, theta) else { return Ok(()) };
        for d in sample(&spec, seed, 50).unwrap() {
            prop_assert!(d.total() <= n as i64);
        }
    }

    #[test]
    fn multi_index_text_roundtrip(r in prop::collection::vec(0u32..1000, 1..=5)) {
        let idx = MultiIndex::new(r).unwrap();
        prop_assert_eq!(idx.to_string().parse::<MultiIndex>().unwrap(), idx);
    }
}
