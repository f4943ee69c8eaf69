//! Species sampling with a family of geometric priors.
//!
//! Each prior `Geom(p)` on `{1, 2, ...}` is cut at `n_max` and renormalized;
//! the discarded tail `(1-p)^n_max` is reported. Discovery runs once per
//! prior with identical draws, the limits are mapped to induced regular
//! measures on the discovered species, and each is conditioned on the
//! configured events. The table holds per-species posterior ranges.

use std::io;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{induced_regular, run_discovery, DiscoveryProcess, Scenario, Split, Trajectory};
use crate::error::{Error, Result};
use crate::measure::ExtendedMeasure;
use crate::space::{Event, Label, StateSpace};

fn default_max_steps() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesConfig {
    /// Species known beforehand: `{1..n_prior}`.
    pub n_prior: usize,
    pub n_max: usize,
    /// Geometric parameters, each in (0, 1).
    pub prior_family: Vec<f64>,
    /// Hidden number of species actually present: `{1..true_m}`.
    pub true_m: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub replacement: bool,
    /// Explicit sightings; replaces the urn when given.
    #[serde(default)]
    pub schedule: Option<Vec<i64>>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Events (lists of species) to condition on. Empty means the whole
    /// discovered set.
    #[serde(default)]
    pub conditioning_events: Vec<Vec<i64>>,
}

impl SpeciesConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.n_prior && self.n_prior <= self.true_m && self.true_m <= self.n_max) {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= n_prior ({}) <= true_m ({}) <= n_max ({})",
                self.n_prior, self.true_m, self.n_max
            )));
        }
        if self.prior_family.is_empty() {
            return Err(Error::InvalidConfig("prior_family is empty".into()));
        }
        if let Some(p) = self.prior_family.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::InvalidConfig(format!("geometric parameter {p} is outside (0, 1)")));
        }
        Ok(())
    }
}

/// `Geom(p)` on `{1..n_max}`, renormalized, and the discarded tail mass.
pub fn truncated_geometric(space: &Arc<StateSpace>, p: f64) -> Result<(ExtendedMeasure, f64)> {
    let n = space.len();
    let q = 1.0 - p;
    let tail = q.powi(n as i32);
    let kept = 1.0 - tail;
    let atoms = (0..n).map(|k| p * q.powi(k as i32) / kept).collect();
    Ok((ExtendedMeasure::new(Arc::clone(space), atoms)?, tail))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    /// `{k}|B` in label notation.
    pub event: String,
    pub lower: f64,
    pub upper: f64,
    pub n_members_used: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalTable {
    pub rows: Vec<IntervalRow>,
}

impl IntervalTable {
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<IntervalTable> {
        let mut rdr = csv::Reader::from_reader(r);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<IntervalRow>, _>>()?;
        Ok(IntervalTable { rows })
    }

    pub fn row(&self, event: &str) -> Option<&IntervalRow> {
        self.rows.iter().find(|r| r.event == event)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesRun {
    pub trajectories: Vec<Trajectory>,
    /// Induced regular measure per prior.
    pub induced: Vec<ExtendedMeasure>,
    pub tail_mass: Vec<f64>,
    /// Discovered species at the end of the run.
    pub discovered: Event,
    pub scenario: Scenario,
    pub table: IntervalTable,
}

/// JSON form of a species run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesSummary {
    pub prior_family: Vec<f64>,
    pub tail_mass: Vec<f64>,
    pub discovered: Vec<Label>,
    pub discovery_time: Option<usize>,
    pub scenario: Scenario,
    /// Induced regular measure per prior, over the discovered species.
    pub induced: Vec<Vec<f64>>,
    pub intervals: Vec<IntervalRow>,
}

impl SpeciesRun {
    pub fn summary(&self, cfg: &SpeciesConfig) -> SpeciesSummary {
        let space = self.trajectories[0].space();
        SpeciesSummary {
            prior_family: cfg.prior_family.clone(),
            tail_mass: self.tail_mass.clone(),
            discovered: space.event_labels(&self.discovered),
            discovery_time: self.trajectories[0].discovery_time,
            scenario: self.scenario,
            induced: self.induced.iter().map(|m| self.discovered.iter().map(|k| m.atom(k)).collect()).collect(),
            intervals: self.table.rows.clone(),
        }
    }
}

pub fn run_species(cfg: &SpeciesConfig) -> Result<SpeciesRun> {
    cfg.validate()?;
    let space = Arc::new(StateSpace::truncated_naturals(cfg.n_max as u64)?);
    let n = space.len();
    let actual0 = Event::from_indices(n, 0..cfg.n_prior)?;
    let split0 = Split::new(actual0)?;
    let process = DiscoveryProcess {
        true_space: Event::from_indices(n, 0..cfg.true_m)?,
        replacement: cfg.replacement,
        seed: cfg.seed,
        schedule: cfg.schedule.as_ref().map(|s| s.iter().map(|&k| Label::Int(k)).collect()),
    };

    let mut trajectories = Vec::with_capacity(cfg.prior_family.len());
    let mut induced = Vec::with_capacity(cfg.prior_family.len());
    let mut tail_mass = Vec::with_capacity(cfg.prior_family.len());
    for &p in &cfg.prior_family {
        let (oracle, tail) = truncated_geometric(&space, p)?;
        let traj = run_discovery(&oracle, &split0, &process, cfg.max_steps)?;
        if traj.scenario == Scenario::Undecided {
            log::warn!("species run for p = {p} stopped before the hidden species set was discovered");
        }
        induced.push(induced_regular(traj.last_measure(), traj.last_split().actual())?);
        tail_mass.push(tail);
        trajectories.push(traj);
    }
    let discovered = trajectories[0].last_split().actual().clone();
    let scenario = trajectories[0].scenario;

    let events: Vec<Event> = if cfg.conditioning_events.is_empty() {
        vec![discovered.clone()]
    } else {
        cfg.conditioning_events
            .iter()
            .map(|e| space.event(&e.iter().map(|&k| Label::Int(k)).collect::<Vec<_>>()))
            .collect::<Result<_>>()?
    };

    let mut table = IntervalTable::default();
    for b in &events {
        let mut posteriors: Vec<Vec<f64>> = Vec::new();
        for (m, p) in induced.iter().enumerate() {
            let row: Result<Vec<f64>> = discovered.iter().map(|k| p.conditional(&Event::singleton(n, k), b)).collect();
            match row {
                Ok(r) => posteriors.push(r),
                Err(Error::NullConditioning { .. }) => {
                    log::warn!(
                        "prior {} gives {} zero probability; dropped from that interval",
                        cfg.prior_family[m],
                        space.format_event(b)
                    );
                }
                Err(e) => return Err(e),
            }
        }
        if posteriors.is_empty() {
            log::warn!("no prior can be conditioned on {}; no rows written", space.format_event(b));
            continue;
        }
        for (j, k) in discovered.iter().enumerate() {
            let vals = posteriors.iter().map(|r| r[j]);
            let lower = vals.clone().fold(f64::INFINITY, f64::min);
            let upper = vals.fold(f64::NEG_INFINITY, f64::max);
            table.rows.push(IntervalRow {
                event: format!("{}|{}", space.format_event(&Event::singleton(n, k)), space.format_event(b)),
                lower,
                upper,
                n_members_used: posteriors.len(),
            });
        }
    }

    Ok(SpeciesRun { trajectories, induced, tail_mass, discovered, scenario, table })
}
