#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use xprob_core::{CredalSet, Event, ExtendedMeasure, Split, StateSpace};

pub fn space(n: usize) -> Arc<StateSpace> {
    Arc::new(StateSpace::range(n).unwrap())
}

/// Positive weights in [0.05, 1], normalized to sum to one.
pub fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn oracle(rng: &mut ChaCha8Rng, sp: &Arc<StateSpace>) -> ExtendedMeasure {
    ExtendedMeasure::new(Arc::clone(sp), weights(rng, sp.len())).unwrap()
}

/// Random nonempty actual set.
pub fn split(rng: &mut ChaCha8Rng, n: usize) -> Split {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let k = rng.gen_range(1..=n);
    Split::new(Event::from_indices(n, idx[..k].iter().copied()).unwrap()).unwrap()
}

/// Valid extended measure: weights signed by the split.
pub fn measure_on(rng: &mut ChaCha8Rng, sp: &Arc<StateSpace>, s: &Split) -> ExtendedMeasure {
    let atoms = weights(rng, sp.len()).into_iter().enumerate().map(|(i, w)| if s.is_actual(i) { w } else { -w }).collect();
    ExtendedMeasure::new(Arc::clone(sp), atoms).unwrap()
}

pub fn measure(rng: &mut ChaCha8Rng, n: usize) -> ExtendedMeasure {
    let s = split(rng, n);
    measure_on(rng, &space(n), &s)
}

pub fn event(rng: &mut ChaCha8Rng, n: usize) -> Event {
    Event::from_indices(n, (0..n).filter(|_| rng.gen_bool(0.5))).unwrap()
}

pub fn credal(rng: &mut ChaCha8Rng, n: usize, members: usize) -> CredalSet {
    let sp = space(n);
    let s = split(rng, n);
    let ms = (0..members).map(|_| measure_on(rng, &sp, &s)).collect();
    CredalSet::new(ms, s).unwrap()
}

/// `sup_A |P(A) - Q(A)|` by enumerating every event.
pub fn brute_d_etv(p: &ExtendedMeasure, q: &ExtendedMeasure) -> f64 {
    let n = p.len();
    (0u64..1 << n)
        .map(|m| {
            let a = Event::from_mask(n, m);
            (p.eval(&a).unwrap() - q.eval(&a).unwrap()).abs()
        })
        .fold(0.0, f64::max)
}

/// Atoms that lie in no event of negative value, by enumeration.
pub fn brute_bettable(p: &ExtendedMeasure) -> Vec<usize> {
    let n = p.len();
    (0..n)
        .filter(|&w| (0u64..1 << n).all(|m| m & (1 << w) == 0 || p.eval(&Event::from_mask(n, m)).unwrap() >= 0.0))
        .collect()
}
