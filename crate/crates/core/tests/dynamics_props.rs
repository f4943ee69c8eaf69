mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use xprob_core::dynamics::read_trajectory_csv;
use xprob_core::{
    critical_events, d_etv, eval_by_partition, init_extended, observe, observe_index, run_discovery, DiscoveryProcess,
    Error, Event, Label, Scenario, Split, Trajectory, EXACT_TOL,
};

fn random_subset_containing(rng: &mut ChaCha8Rng, n: usize, base: &Event) -> Event {
    base.union(&event(rng, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn observation_flips_one_atom(n in 1usize..=16, seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = space(n);
        let s = split(&mut rng, n);
        let p = init_extended(&oracle(&mut rng, &sp), &s).unwrap();
        let i = pick.index(n);
        let (q, s2, flipped) = observe_index(&p, &s, i).unwrap();
        prop_assert_eq!(flipped, !s.is_actual(i));
        prop_assert!(s2.is_actual(i));
        prop_assert_eq!(s2.actual(), &s.actual().with(i));
        for k in 0..n {
            let want = if k == i { p.atom(k).abs() } else { p.atom(k) };
            prop_assert_eq!(q.atom(k), want);
        }
        prop_assert!(q.validate().passed());
        let (again, _, flipped_again) = observe_index(&q, &s2, i).unwrap();
        prop_assert!(!flipped_again);
        prop_assert_eq!(again, q);
    }

    #[test]
    fn partition_evaluation_is_exact(n in 1usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = space(n);
        let s = split(&mut rng, n);
        let p = init_extended(&oracle(&mut rng, &sp), &s).unwrap();
        for _ in 0..30 {
            let a = event(&mut rng, n);
            prop_assert_eq!(eval_by_partition(&p, &s, &a).unwrap(), p.eval(&a).unwrap());
        }
    }

    #[test]
    fn d_etv_is_a_metric(n in 1usize..=10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = space(n);
        let ms: Vec<_> = (0..3).map(|_| { let s = split(&mut rng, n); measure_on(&mut rng, &sp, &s) }).collect();
        let (p, q, r) = (&ms[0], &ms[1], &ms[2]);
        prop_assert_eq!(d_etv(p, p).unwrap(), 0.0);
        prop_assert_eq!(d_etv(p, q).unwrap(), d_etv(q, p).unwrap());
        prop_assert!(d_etv(p, r).unwrap() <= d_etv(p, q).unwrap() + d_etv(q, r).unwrap() + EXACT_TOL);
        prop_assert!((d_etv(p, q).unwrap() - brute_d_etv(p, q)).abs() <= EXACT_TOL);
    }

    #[test]
    fn distance_to_limit_never_grows(n in 2usize..=10, seed in any::<u64>(), replacement in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = space(n);
        let orc = oracle(&mut rng, &sp);
        let s0 = split(&mut rng, n);
        let truth = random_subset_containing(&mut rng, n, s0.actual());
        let process = DiscoveryProcess { true_space: truth.clone(), replacement, seed, schedule: None };
        let traj = run_discovery(&orc, &s0, &process, 500).unwrap();
        for w in traj.d_etv.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        // each new discovery shrinks the distance by twice the flipped atom
        for (k, obs) in traj.observations.iter().enumerate() {
            if obs.flipped {
                let i = sp.index_of(&obs.label).unwrap();
                prop_assert!((traj.d_etv[k] - traj.d_etv[k + 1] - 2.0 * orc.atom(i)).abs() <= EXACT_TOL);
            }
        }
        if traj.discovery_time.is_some() {
            prop_assert_eq!(*traj.d_etv.last().unwrap(), 0.0);
            prop_assert_eq!(traj.last_measure(), &traj.limit);
        }
    }

    #[test]
    fn urn_without_replacement(n in 1usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = space(n);
        let orc = oracle(&mut rng, &sp);
        let s0 = split(&mut rng, n);
        let truth = random_subset_containing(&mut rng, n, s0.actual());
        let process = DiscoveryProcess { true_space: truth.clone(), replacement: false, seed, schedule: None };
        let traj = run_discovery(&orc, &s0, &process, 100).unwrap();
        prop_assert_eq!(traj.steps(), truth.difference(s0.actual()).len());
        prop_assert!(traj.observations.iter().all(|o| o.flipped));
        prop_assert_eq!(traj.last_split().actual(), &truth);
        prop_assert_eq!(*traj.d_etv.last().unwrap(), 0.0);
        let expected = if truth.is_full() { Scenario::FullSpace } else { Scenario::ProperSubset };
        prop_assert_eq!(traj.scenario, expected);
        prop_assert_eq!(traj.agent_scenario, expected);
    }

    #[test]
    fn agent_cannot_tell_with_replacement(n in 2usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = space(n);
        let orc = oracle(&mut rng, &sp);
        let s0 = Split::new(Event::singleton(n, 0)).unwrap();
        let truth = Event::full(n).without(n - 1);
        let process = DiscoveryProcess { true_space: truth, replacement: true, seed, schedule: None };
        let traj = run_discovery(&orc, &s0, &process, 400).unwrap();
        prop_assert_eq!(traj.agent_scenario, Scenario::Undecided);
    }

    #[test]
    fn critical_events_cancel(n in 1usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = credal(&mut rng, n, 2);
        let crit = critical_events(c.members(), c.split(), 16).unwrap();
        prop_assert!(crit.contains(&Event::empty(n)));
        for a in &crit {
            for m in c.members() {
                prop_assert!(m.eval(a).unwrap().abs() <= 2.0 * EXACT_TOL);
            }
        }
    }

    #[test]
    fn trajectory_files_round_trip(n in 1usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = space(n);
        let orc = oracle(&mut rng, &sp);
        let s0 = split(&mut rng, n);
        let process = DiscoveryProcess { true_space: Event::full(n), replacement: rng.gen_bool(0.5), seed, schedule: None };
        let traj = run_discovery(&orc, &s0, &process, 200).unwrap();
        let back = Trajectory::from_json(&traj.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &traj);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        prop_assert_eq!(read_trajectory_csv(buf.as_slice()).unwrap(), traj.rows());
    }
}

#[test]
fn unknown_label_requires_restart() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let sp = space(3);
    let s = Split::new(Event::singleton(3, 0)).unwrap();
    let p = init_extended(&oracle(&mut rng, &sp), &s).unwrap();
    let err = observe(&p, &s, &Label::Int(4)).unwrap_err();
    assert_eq!(err, Error::RestartRequired(Label::Int(4)));
}

#[test]
fn schedule_is_played_to_the_end() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let sp = space(4);
    let orc = oracle(&mut rng, &sp);
    let s0 = Split::new(Event::singleton(4, 0)).unwrap();
    let schedule = [2, 2, 1, 3, 4, 1].map(Label::Int).to_vec();
    let process = DiscoveryProcess { true_space: Event::full(4), replacement: false, seed: 0, schedule: Some(schedule) };
    let traj = run_discovery(&orc, &s0, &process, 100).unwrap();
    assert_eq!(traj.steps(), 6);
    assert_eq!(traj.discovery_time, Some(5));
    let flips: Vec<bool> = traj.observations.iter().map(|o| o.flipped).collect();
    assert_eq!(flips, [true, false, false, true, true, false]);
}
