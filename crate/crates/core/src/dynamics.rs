//! Discovery dynamics.
//!
//! Ω is split into an actual part (states already observed) and a latent
//! part. An extended measure built from a regular oracle carries the oracle's
//! mass with a negative sign on latent states. Observing a latent state flips
//! its sign and moves it to the actual part; observing an actual state
//! changes nothing. Only the split's time counter advances.

use std::io;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{ExtendedMeasure, EXACT_TOL};
use crate::numeric::exact_sum;
use crate::space::{all_events, Event, Label, StateSpace};

/// Default enumeration guard for [`critical_events`].
pub const CRITICAL_EVENTS_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    time: u64,
    actual: Event,
    latent: Event,
}

impl Split {
    /// Split at time 0 with the given actual part; the latent part is its
    /// complement.
    pub fn new(actual: Event) -> Result<Split> {
        Self::at(0, actual)
    }

    pub fn at(time: u64, actual: Event) -> Result<Split> {
        if actual.is_empty() {
            return Err(Error::InvalidConfig("the actual part of a split must be nonempty".into()));
        }
        let latent = actual.complement();
        Ok(Split { time, actual, latent })
    }

    pub fn from_labels<'a, I>(space: &StateSpace, actual: I) -> Result<Split>
    where
        I: IntoIterator<Item = &'a Label>,
    {
        Self::new(space.event(actual)?)
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn actual(&self) -> &Event {
        &self.actual
    }

    pub fn latent(&self) -> &Event {
        &self.latent
    }

    pub fn universe(&self) -> usize {
        self.actual.universe()
    }

    pub fn is_actual(&self, i: usize) -> bool {
        self.actual.contains(i)
    }

    /// Next split after observing state `i`.
    pub fn advance(&self, i: usize) -> Split {
        Split { time: self.time + 1, actual: self.actual.with(i), latent: self.latent.without(i) }
    }

    fn check_universe(&self, n: usize) -> Result<()> {
        if self.universe() != n {
            return Err(Error::MismatchedSpace(format!("split over {} states, measure over {n}", self.universe())));
        }
        Ok(())
    }
}

fn check_oracle(oracle: &ExtendedMeasure) -> Result<()> {
    if !oracle.is_regular() {
        return Err(Error::InvalidMeasure {
            axiom: "oracle".into(),
            detail: "the oracle must have nonnegative atoms summing to 1".into(),
        });
    }
    Ok(())
}

/// Oracle mass on actual states, negated oracle mass on latent states.
pub fn init_extended(oracle: &ExtendedMeasure, split: &Split) -> Result<ExtendedMeasure> {
    check_oracle(oracle)?;
    split.check_universe(oracle.len())?;
    let atoms = (0..oracle.len())
        .map(|i| if split.is_actual(i) { oracle.atom(i) } else { -oracle.atom(i) })
        .collect();
    Ok(oracle.with_atoms(atoms))
}

/// Observes the state with the given label. A label outside Ω is returned as
/// [`Error::RestartRequired`] for the caller to handle.
pub fn observe(p: &ExtendedMeasure, split: &Split, label: &Label) -> Result<(ExtendedMeasure, Split)> {
    let i = p.space().index_of(label).ok_or_else(|| Error::RestartRequired(label.clone()))?;
    let (q, s, _) = observe_index(p, split, i)?;
    Ok((q, s))
}

/// Observes state `i`; the flag reports whether its sign flipped.
pub fn observe_index(p: &ExtendedMeasure, split: &Split, i: usize) -> Result<(ExtendedMeasure, Split, bool)> {
    split.check_universe(p.len())?;
    if i >= p.len() {
        return Err(Error::InvalidEvent(format!("state index {i} out of range for {} states", p.len())));
    }
    if split.is_actual(i) {
        return Ok((p.clone(), split.advance(i), false));
    }
    let mut atoms = p.atoms().to_vec();
    atoms[i] = atoms[i].abs();
    Ok((p.with_atoms(atoms), split.advance(i), true))
}

/// Value of `a` summed part by part over the nonzero singletons of the actual
/// and latent partitions, each singleton weighted by its conditional
/// `P(a ∩ {ω}) / P({ω})`. Agrees with `eval` bit for bit.
pub fn eval_by_partition(p: &ExtendedMeasure, split: &Split, a: &Event) -> Result<f64> {
    p.check_event(a)?;
    split.check_universe(p.len())?;
    let term = |w: usize| {
        let single = p.atom(w);
        let hit = if a.contains(w) { single } else { 0.0 };
        (hit / single) * single
    };
    let nonzero = |part: &Event| part.iter().filter(|&w| p.atom(w) != 0.0).collect::<Vec<_>>();
    let actual = nonzero(split.actual());
    let latent = nonzero(split.latent());
    Ok(exact_sum(actual.into_iter().chain(latent).map(term)))
}

/// Events on which the actual and latent contributions cancel for every
/// member: `P(A ∩ Ω⁻) = -P(A ∩ Ω⁺)` within tolerance.
pub fn critical_events(members: &[ExtendedMeasure], split: &Split, n_cap: usize) -> Result<Vec<Event>> {
    let n = split.universe();
    if n > n_cap || n >= 64 {
        return Err(Error::SpaceTooLarge { size: n, cap: n_cap });
    }
    for m in members {
        split.check_universe(m.len())?;
    }
    Ok(all_events(n)
        .filter(|a| {
            let pos = a.intersection(split.actual());
            let neg = a.intersection(split.latent());
            members.iter().all(|m| (m.eval_unchecked(&neg) + m.eval_unchecked(&pos)).abs() <= EXACT_TOL)
        })
        .collect())
}

/// Extended total variation distance `sup_A |P(A) - Q(A)|`. The supremum is
/// attained on the set of positive atom differences or on its complement.
pub fn d_etv(p: &ExtendedMeasure, q: &ExtendedMeasure) -> Result<f64> {
    p.check_same_space(q)?;
    let diffs: Vec<f64> = p.atoms().iter().zip(q.atoms()).map(|(a, b)| a - b).collect();
    let up = exact_sum(diffs.iter().map(|d| d.max(0.0)));
    let down = exact_sum(diffs.iter().map(|d| (-d).max(0.0)));
    Ok(up.max(down))
}

/// Limit of the dynamics: the oracle with negative sign only on states that
/// can never be discovered.
pub fn limit_measure(oracle: &ExtendedMeasure, actual0: &Event, true_space: &Event) -> Result<ExtendedMeasure> {
    init_extended(oracle, &Split::new(actual0.union(true_space))?)
}

/// Ratio-preserving regular measure on the discovered states:
/// `c · a_ω` on `discovered`, 0 elsewhere, with `c = 1 / P(discovered)`.
pub fn induced_regular(p: &ExtendedMeasure, discovered: &Event) -> Result<ExtendedMeasure> {
    p.check_event(discovered)?;
    let norm = p.eval_unchecked(discovered);
    if norm <= EXACT_TOL {
        return Err(Error::InvalidConfig(format!("normalizer P(discovered) = {norm:e} is not positive")));
    }
    if let Some(w) = (0..p.len()).find(|&w| discovered.contains(w) != (p.atom(w) >= 0.0) && p.atom(w) != 0.0) {
        return Err(Error::InvalidConfig(format!(
            "state {} has atom {} on the wrong side of the discovered set",
            p.space().label(w),
            p.atom(w)
        )));
    }
    let c = 1.0 / norm;
    let atoms = (0..p.len()).map(|w| if discovered.contains(w) { c * p.atom(w) } else { 0.0 }).collect();
    ExtendedMeasure::new(Arc::clone(p.space()), atoms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryProcess {
    /// Ω′, hidden from the updating logic.
    pub true_space: Event,
    pub replacement: bool,
    pub seed: u64,
    /// Explicit observations, used instead of the urn when present.
    pub schedule: Option<Vec<Label>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    FullSpace,
    ProperSubset,
    Undecided,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::FullSpace => "full_space",
            Scenario::ProperSubset => "proper_subset",
            Scenario::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub label: Label,
    pub flipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub splits: Vec<Split>,
    pub measures: Vec<ExtendedMeasure>,
    /// `observations[k]` produced step `k + 1`.
    pub observations: Vec<Observation>,
    /// Distance of each step's measure to `limit`.
    pub d_etv: Vec<f64>,
    pub limit: ExtendedMeasure,
    pub true_space: Event,
    pub discovery_time: Option<usize>,
    /// Ground truth from the simulator, which knows Ω′.
    pub scenario: Scenario,
    /// What the updating agent can conclude on its own.
    pub agent_scenario: Scenario,
}

impl Trajectory {
    pub fn last_measure(&self) -> &ExtendedMeasure {
        self.measures.last().expect("trajectory has an initial measure")
    }

    pub fn last_split(&self) -> &Split {
        self.splits.last().expect("trajectory has an initial split")
    }

    pub fn steps(&self) -> usize {
        self.observations.len()
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        self.limit.space()
    }

    pub fn rows(&self) -> Vec<TrajectoryRow> {
        (0..self.measures.len())
            .map(|k| {
                let obs = k.checked_sub(1).map(|j| &self.observations[j]);
                TrajectoryRow {
                    step: k,
                    observed_label: obs.map(|o| o.label.to_string()).unwrap_or_default(),
                    flipped: obs.is_some_and(|o| o.flipped),
                    p_omega_total: self.measures[k].total(),
                    d_etv_to_limit: self.d_etv[k],
                }
            })
            .collect()
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for row in self.rows() {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&TrajectoryRecord::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Trajectory> {
        let rec: TrajectoryRecord = serde_json::from_str(s)?;
        rec.into_trajectory()
    }
}

/// One CSV line of a trajectory. Step 0 is the initial state and has no
/// observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub observed_label: String,
    pub flipped: bool,
    pub p_omega_total: f64,
    pub d_etv_to_limit: f64,
}

pub fn read_trajectory_csv<R: io::Read>(r: R) -> Result<Vec<TrajectoryRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StepRecord {
    time: u64,
    actual: Vec<Label>,
    atoms: Vec<f64>,
    d_etv_to_limit: f64,
}

/// JSON form of a trajectory with the full atom history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrajectoryRecord {
    space: StateSpace,
    true_space: Vec<Label>,
    limit: Vec<f64>,
    steps: Vec<StepRecord>,
    observations: Vec<Observation>,
    discovery_time: Option<usize>,
    scenario: Scenario,
    agent_scenario: Scenario,
}

impl From<&Trajectory> for TrajectoryRecord {
    fn from(t: &Trajectory) -> Self {
        let space = t.space();
        TrajectoryRecord {
            space: (**space).clone(),
            true_space: space.event_labels(&t.true_space),
            limit: t.limit.atoms().to_vec(),
            steps: t
                .splits
                .iter()
                .zip(&t.measures)
                .zip(&t.d_etv)
                .map(|((s, m), d)| StepRecord {
                    time: s.time(),
                    actual: space.event_labels(s.actual()),
                    atoms: m.atoms().to_vec(),
                    d_etv_to_limit: *d,
                })
                .collect(),
            observations: t.observations.clone(),
            discovery_time: t.discovery_time,
            scenario: t.scenario,
            agent_scenario: t.agent_scenario,
        }
    }
}

impl TrajectoryRecord {
    fn into_trajectory(self) -> Result<Trajectory> {
        let space = Arc::new(self.space);
        if self.steps.len() != self.observations.len() + 1 {
            return Err(Error::Parse("a trajectory needs one more step than observations".into()));
        }
        let limit = ExtendedMeasure::new(Arc::clone(&space), self.limit)?;
        let mut splits = Vec::with_capacity(self.steps.len());
        let mut measures = Vec::with_capacity(self.steps.len());
        let mut d_etv = Vec::with_capacity(self.steps.len());
        for step in self.steps {
            splits.push(Split::at(step.time, space.event(&step.actual)?)?);
            measures.push(ExtendedMeasure::new(Arc::clone(&space), step.atoms)?);
            d_etv.push(step.d_etv_to_limit);
        }
        Ok(Trajectory {
            splits,
            measures,
            observations: self.observations,
            d_etv,
            limit,
            true_space: space.event(&self.true_space)?,
            discovery_time: self.discovery_time,
            scenario: self.scenario,
            agent_scenario: self.agent_scenario,
        })
    }
}

enum Source<'a> {
    Schedule(std::slice::Iter<'a, Label>),
    Urn { rng: Box<ChaCha8Rng>, replacement: bool, pool: Vec<usize> },
}

/// Simulates discovery from `split0` until Ω′ is fully discovered, the urn
/// or schedule runs out, or `max_steps` draws have been made. An explicit
/// schedule is always played to its end (within `max_steps`).
pub fn run_discovery(
    oracle: &ExtendedMeasure,
    split0: &Split,
    process: &DiscoveryProcess,
    max_steps: usize,
) -> Result<Trajectory> {
    if max_steps == 0 {
        return Err(Error::InvalidConfig("max_steps must be at least 1".into()));
    }
    let n = oracle.len();
    let truth = &process.true_space;
    if truth.universe() != n || truth.is_empty() {
        return Err(Error::InvalidConfig("true space must be a nonempty event over Ω".into()));
    }
    if !split0.actual().is_subset(truth) {
        return Err(Error::InvalidConfig("the initial actual states must belong to the true space".into()));
    }

    let p0 = init_extended(oracle, split0)?;
    let limit = limit_measure(oracle, split0.actual(), truth)?;

    let mut source = match &process.schedule {
        Some(s) => Source::Schedule(s.iter()),
        None => {
            let pool = if process.replacement {
                truth.iter().collect()
            } else {
                truth.difference(split0.actual()).iter().collect()
            };
            Source::Urn { rng: Box::new(ChaCha8Rng::seed_from_u64(process.seed)), replacement: process.replacement, pool }
        }
    };

    let discovered = |s: &Split| truth.is_subset(s.actual());
    let mut discovery_time = discovered(split0).then_some(0);
    let mut traj = Trajectory {
        d_etv: vec![d_etv(&p0, &limit)?],
        splits: vec![split0.clone()],
        measures: vec![p0],
        observations: Vec::new(),
        limit,
        true_space: truth.clone(),
        discovery_time: None,
        scenario: Scenario::Undecided,
        agent_scenario: Scenario::Undecided,
    };

    let mut urn_exhausted = false;
    for step in 1..=max_steps {
        let next = match &mut source {
            Source::Schedule(it) => match it.next() {
                Some(label) => Some(oracle.space().index_of(label).ok_or_else(|| Error::RestartRequired(label.clone()))?),
                None => None,
            },
            Source::Urn { rng, replacement, pool } => {
                if discovery_time.is_some() || pool.is_empty() {
                    None
                } else {
                    let k = rng.gen_range(0..pool.len());
                    Some(if *replacement { pool[k] } else { pool.remove(k) })
                }
            }
        };
        let Some(i) = next else {
            urn_exhausted = true;
            break;
        };
        let (q, s, flipped) = observe_index(traj.last_measure(), traj.last_split(), i)?;
        traj.d_etv.push(d_etv(&q, &traj.limit)?);
        traj.observations.push(Observation { label: oracle.space().label(i).clone(), flipped });
        if discovery_time.is_none() && discovered(&s) {
            discovery_time = Some(step);
        }
        traj.measures.push(q);
        traj.splits.push(s);
    }
    if !urn_exhausted {
        if let Source::Urn { pool, replacement: false, .. } = &source {
            urn_exhausted = pool.is_empty();
        }
    }

    let full = traj.last_split().actual().is_full();
    traj.discovery_time = discovery_time;
    traj.scenario = match discovery_time {
        Some(_) if truth.is_full() => Scenario::FullSpace,
        Some(_) => Scenario::ProperSubset,
        None => Scenario::Undecided,
    };
    // Only an exhausted urn drawn without replacement tells the agent that
    // nothing else is out there.
    let without_replacement_urn = process.schedule.is_none() && !process.replacement;
    traj.agent_scenario = if full {
        Scenario::FullSpace
    } else if without_replacement_urn && urn_exhausted {
        Scenario::ProperSubset
    } else {
        Scenario::Undecided
    };
    Ok(traj)
}
