mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use xprob_core::{
    core, event_bounds, hausdorff, is_core_member, update_envelope, validate_capacity, CoreCertificate, CoreReport,
    CredalRecord, CredalSet, ElicitedTable, Envelope, Event, CORE_CAP, ELICITED_CAP, EXACT_TOL,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn members_sit_between_bounds(n in 1usize..=10, m in 1usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = credal(&mut rng, n, m);
        for _ in 0..30 {
            let a = event(&mut rng, n);
            let (lo, hi) = (c.lower(&a).unwrap(), c.upper(&a).unwrap());
            prop_assert!(lo <= hi);
            for p in c.members() {
                let v = p.eval(&a).unwrap();
                prop_assert!(lo <= v && v <= hi);
            }
            let (slo, shi) = event_bounds(&c, &a).unwrap();
            prop_assert!(slo <= lo + EXACT_TOL && hi <= shi + EXACT_TOL);
        }
    }

    #[test]
    fn derived_bounds_are_super_and_subadditive(n in 1usize..=8, m in 1usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let report = validate_capacity(&Envelope::Derived(credal(&mut rng, n, m)), ELICITED_CAP).unwrap();
        for name in ["EC1", "EC2", "superadditivity", "subadditivity"] {
            prop_assert!(report.check(name).unwrap().passed, "{}", report.summary());
        }
    }

    #[test]
    fn single_member_is_additive_capacity(n in 1usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let report = validate_capacity(&Envelope::Derived(credal(&mut rng, n, 1)), ELICITED_CAP).unwrap();
        prop_assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn envelope_update_commutes(n in 2usize..=10, m in 1usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = credal(&mut rng, n, m);
        let mut env = c.singleton_envelope();
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            c = c.observe_index(i).unwrap();
            env = update_envelope(&env, i).unwrap();
            prop_assert_eq!(&c.singleton_envelope(), &env);
        }
    }

    #[test]
    fn hausdorff_basics(n in 1usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = space(n);
        let s = split(&mut rng, n);
        let make = |rng: &mut ChaCha8Rng, k: usize| {
            CredalSet::new((0..k).map(|_| measure_on(rng, &sp, &s)).collect(), s.clone()).unwrap()
        };
        let (a, b) = (make(&mut rng, 3), make(&mut rng, 2));
        prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let h = hausdorff(&a, &b).unwrap();
        prop_assert_eq!(h, hausdorff(&b, &a).unwrap());
        let widest = a.members().iter()
            .flat_map(|p| b.members().iter().map(move |q| brute_d_etv(p, q)))
            .fold(0.0, f64::max);
        prop_assert!(h <= widest + EXACT_TOL);
    }

    #[test]
    fn lowest_members_are_in_the_core(n in 1usize..=7, m in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = credal(&mut rng, n, m);
        let env = Envelope::Derived(c.clone());
        let floor = c.lower(&Event::full(n)).unwrap();
        for p in c.members().iter().filter(|p| p.total() == floor) {
            prop_assert!(is_core_member(&env, p, EXACT_TOL).unwrap());
        }
        let report = core(&env, CORE_CAP).unwrap();
        prop_assert!(report.nonempty && report.coherent);
        let w = report.witness.as_ref().unwrap();
        prop_assert!(is_core_member(&env, w, 1e-9).unwrap());
        if let CoreCertificate::CoreWitness { min_slack, slacks } = &report.certificate {
            prop_assert_eq!(slacks.len(), 1 << n);
            prop_assert!(*min_slack >= -1e-9);
        } else {
            prop_assert!(false, "expected a core witness");
        }
    }

    #[test]
    fn files_round_trip(n in 1usize..=8, m in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = credal(&mut rng, n, m);
        let rec = CredalRecord::from(&c);
        let back: CredalRecord = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
        prop_assert_eq!(&back.into_set().unwrap(), &c);

        let env = Envelope::Derived(c);
        let table = ElicitedTable::from_envelope(&env).unwrap();
        prop_assert_eq!(&ElicitedTable::from_json(&table.to_json().unwrap(), None).unwrap(), &table);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        prop_assert_eq!(&ElicitedTable::read_csv(buf.as_slice()).unwrap(), &table);

        let report = core(&env, CORE_CAP).unwrap();
        let (space, back) = CoreReport::from_json(&report.to_json(env.space()).unwrap()).unwrap();
        prop_assert_eq!(space.labels(), env.space().labels());
        prop_assert_eq!(back, report);
    }
}

#[test]
fn tampered_table_has_empty_core_and_a_book() {
    let t = ElicitedTable::from_json(
        r#"{"labels": [1, 2, 3], "events": [
            {"event": [1], "lower": 0.5}, {"event": [2], "lower": 0.6}, {"event": [3], "lower": 0.0},
            {"event": [1, 2], "lower": 0.8}, {"event": [1, 3], "lower": 0.5}, {"event": [2, 3], "lower": 0.6},
            {"event": [1, 2, 3], "lower": 0.8}]}"#,
        None,
    )
    .unwrap();
    let report = core(&Envelope::Elicited(t), CORE_CAP).unwrap();
    assert!(!report.nonempty && !report.coherent);
    let CoreCertificate::DutchBook(book) = &report.certificate else { panic!("expected a Dutch book") };
    assert!(book.stakes.iter().all(|&s| s >= 0.0));
    assert!((book.worst_payoff + 0.05).abs() < 1e-9);
}
