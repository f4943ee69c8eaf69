mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use xprob_core::apps::{
    influence_step, read_boomerang_csv, run_boomerang, run_species, truncated_geometric, EpsilonSchedule,
    IntervalTable, OpinionConfig, SpeciesConfig,
};
use xprob_core::{Error, ExtendedMeasure, Label, Scenario, StateSpace, EXACT_TOL};

fn species_cfg(priors: &[f64]) -> SpeciesConfig {
    SpeciesConfig {
        n_prior: 5,
        n_max: 50,
        prior_family: priors.to_vec(),
        true_m: 8,
        seed: 0,
        replacement: false,
        schedule: None,
        max_steps: 1000,
        conditioning_events: vec![],
    }
}

#[test]
fn species_default_event_is_the_discovered_set() {
    let run = run_species(&species_cfg(&[0.1, 0.2, 0.3])).unwrap();
    assert_eq!(run.scenario, Scenario::ProperSubset);
    assert_eq!(run.table.rows.len(), 8);
    // each member's posterior over the discovered species sums to one
    for m in 0..3 {
        let total: f64 = run.induced[m].atoms().iter().sum();
        assert!((total - 1.0).abs() <= EXACT_TOL);
    }
    let lower_sum: f64 = run.table.rows.iter().map(|r| r.lower).sum();
    let upper_sum: f64 = run.table.rows.iter().map(|r| r.upper).sum();
    assert!(lower_sum <= 1.0 && upper_sum >= 1.0);
}

#[test]
fn species_with_replacement_and_schedule() {
    let mut cfg = species_cfg(&[0.2, 0.4]);
    cfg.replacement = true;
    let run = run_species(&cfg).unwrap();
    assert_eq!(run.discovered.len(), 8);
    // the agent never learns that it has seen everything when drawing with replacement
    assert_eq!(run.trajectories[0].agent_scenario, Scenario::Undecided);

    let mut cfg = species_cfg(&[0.2, 0.4]);
    cfg.schedule = Some(vec![6, 2, 7]);
    let run = run_species(&cfg).unwrap();
    assert_eq!(run.discovered.len(), 7);
    assert_eq!(run.scenario, Scenario::Undecided);
    let mut buf = Vec::new();
    run.table.write_csv(&mut buf).unwrap();
    assert_eq!(IntervalTable::read_csv(buf.as_slice()).unwrap(), run.table);
}

#[test]
fn geometric_tail_mass() {
    let sp = std::sync::Arc::new(StateSpace::truncated_naturals(50).unwrap());
    for p in [0.1, 0.2, 0.3] {
        let (g, tail) = truncated_geometric(&sp, p).unwrap();
        assert!(g.is_regular());
        assert!((tail - (1.0 - p).powi(50)).abs() < 1e-15);
    }
}

fn opinion(seed: u64) -> OpinionConfig {
    OpinionConfig {
        labels: ["a", "b", "c", "d"].map(Label::from).to_vec(),
        persuader: vec![0.1, 0.2, 0.3, 0.4],
        persuaded_oracle: vec![0.25, 0.25, 0.25, 0.25],
        actual: vec![Label::from("a")],
        horizon: 6,
        epsilon: EpsilonSchedule::default(),
        schedule: None,
        seed,
    }
}

#[test]
fn boomerang_run_discovers_then_settles() {
    let run = run_boomerang(&opinion(4)).unwrap();
    assert_eq!(run.steps.len(), 6);
    assert!(run.steps[0].split.latent().len() == 3);
    assert!(run.steps[3].split.latent().is_empty());
    for st in &run.steps[3..] {
        assert!(st.influenced.is_regular());
        assert!(st.identity_residual <= EXACT_TOL);
    }
    let mut buf = Vec::new();
    run.write_csv(&mut buf).unwrap();
    assert_eq!(read_boomerang_csv(buf.as_slice()).unwrap(), run.rows());
}

#[test]
fn boomerang_is_seed_deterministic() {
    assert_eq!(run_boomerang(&opinion(9)).unwrap(), run_boomerang(&opinion(9)).unwrap());
}

#[test]
fn boomerang_table_schedule() {
    let mut cfg = opinion(0);
    cfg.horizon = 2;
    cfg.epsilon = EpsilonSchedule::Table(vec![vec![1.0; 4], vec![0.0; 4]]);
    let run = run_boomerang(&cfg).unwrap();
    // ε = 1 keeps the opinion, ε = 0 adopts the persuader
    assert_eq!(run.steps[0].influenced.atoms(), run.steps[0].p.atoms());
    assert_eq!(run.steps[1].influenced.atoms(), run.persuader.atoms());

    cfg.horizon = 3;
    assert!(matches!(run_boomerang(&cfg), Err(Error::InvalidConfig(_))));
}

#[test]
fn influence_outside_range_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let sp = space(2);
    let q = oracle(&mut rng, &sp);
    let p = ExtendedMeasure::new(sp, vec![0.1, -0.9]).unwrap();
    match influence_step(&p, &q, &[1.0, 2.0]) {
        Err(Error::Validity { atoms, .. }) => assert_eq!(atoms, vec![1]),
        other => panic!("expected a validity error, got {other:?}"),
    }
}
