use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ratcheb::battery::random_problem;
use ratcheb::cli::parse_args;
use ratcheb::format::fmt_f64;
use ratcheb::geometry::{cyclically_ordered, CompactSet, ExtPoint, Mobius, PoleDivisor};
use ratcheb::rational::DEFAULT_EPS_POLE;
use ratcheb::solver::{solve, structure_check, verify_alternation, SolveOptions};

fn ext_point() -> impl Strategy<Value = ExtPoint> {
    prop_oneof![
        1 => Just(ExtPoint::Infinity),
        6 => (-50.0..50.0f64).prop_map(ExtPoint::Finite),
    ]
}

fn mobius() -> impl Strategy<Value = Mobius> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
        .prop_filter(
            "orientation preserving, well conditioned",
            |(a, b, c, d)| a * d - b * c > 0.1,
        )
        .prop_map(|(a, b, c, d)| Mobius::new(a, b, c, d).unwrap())
}

fn interval_union() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(-100.0..100.0f64, 2..=8)
        .prop_map(|mut v| {
            if v.len() % 2 == 1 {
                v.pop();
            }
            v.sort_by(f64::total_cmp);
            v
        })
        .prop_filter("distinct endpoints", |v| {
            v.windows(2).all(|w| w[1] - w[0] > 1e-3)
        })
        .prop_map(|v| v.chunks(2).map(|c| (c[0], c[1])).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mobius_preserves_cyclic_order(f in mobius(), pts in prop::collection::vec(ext_point(), 3..6)) {
        let distinct: std::collections::BTreeSet<ExtPoint> = pts.iter().copied().collect();
        prop_assume!(distinct.len() == pts.len());
        let image: Vec<ExtPoint> = pts.iter().map(|&x| f.apply(x)).collect();
        prop_assert_eq!(cyclically_ordered(&pts).unwrap(), cyclically_ordered(&image).unwrap());
    }

    #[test]
    fn set_literal_round_trip(iv in interval_union()) {
        let set = CompactSet::new(&iv).unwrap();
        prop_assert_eq!(CompactSet::parse(&set.to_literal()).unwrap(), set);
    }

    #[test]
    fn divisor_literal_round_trip(atoms in prop::collection::btree_map(ext_point(), 1u32..5, 1..5)) {
        let atoms: Vec<(ExtPoint, u32)> = atoms.into_iter().collect();
        let d = PoleDivisor::new(&atoms).unwrap();
        prop_assert_eq!(PoleDivisor::parse(&d.to_literal()).unwrap(), d);
    }

    #[test]
    fn numbers_round_trip_through_text(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn solve_config_round_trip(iv in interval_union(), tol in 1e-14..1e-6f64, max_iter in 1usize..500) {
        let set = CompactSet::new(&iv).unwrap();
        let args = [
            "ratcheb".to_string(), "solve".into(), "--set".into(), set.to_literal(), "--poles".into(),
            "inf:2".into(), "--xstar".into(), "inf".into(), "--tol".into(), tol.to_string(),
            "--max-iter".into(), max_iter.to_string(),
        ];
        let cfg = parse_args(&args).unwrap();
        prop_assert_eq!(parse_args(cfg.to_args()).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_solutions_satisfy_structure(seed in any::<u64>()) {
        let p = random_problem(&mut ChaCha8Rng::seed_from_u64(seed), 8);
        let s = solve(&p, &SolveOptions::default()).unwrap();
        let alt = verify_alternation(&s.f, &p).unwrap();
        prop_assert!(alt.pass, "{:?}", alt);
        let st = structure_check(&s, DEFAULT_EPS_POLE).unwrap();
        prop_assert!(st.pass, "{:?}", st);
        prop_assert!(s.m > 0.0);
    }
}
