//! Opinion influence with a low-credibility persuader.
//!
//! The persuaded agent holds an extended measure `P_t` that is updated by
//! discovery. At each step the influenced opinion is the per-atom mixture
//! `ε_k P_t(ω_k) + (1 - ε_k) Q(ω_k)` with the persuader's fixed regular `Q`.
//! Weights above 1 push the atom away from `Q` (the boomerang effect).

use std::io;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{init_extended, observe_index, Split};
use crate::error::{Error, Result};
use crate::measure::{ExtendedMeasure, EXACT_TOL};
use crate::numeric::exact_sum;
use crate::space::{Label, StateSpace};

pub const DEFAULT_LATENT_EPSILON: f64 = 1.5;
pub const DEFAULT_DISCOVERED_EPSILON: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSchedule {
    /// One weight for latent atoms, one for discovered atoms.
    BySplit { latent: f64, discovered: f64 },
    /// `table[t][k]`, one row per step.
    Table(Vec<Vec<f64>>),
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule::BySplit { latent: DEFAULT_LATENT_EPSILON, discovered: DEFAULT_DISCOVERED_EPSILON }
    }
}

impl EpsilonSchedule {
    pub fn weights(&self, split: &Split, t: usize) -> Result<Vec<f64>> {
        let n = split.universe();
        let eps = match self {
            EpsilonSchedule::BySplit { latent, discovered } => {
                (0..n).map(|k| if split.is_actual(k) { *discovered } else { *latent }).collect::<Vec<_>>()
            }
            EpsilonSchedule::Table(rows) => {
                let row = rows.get(t).ok_or_else(|| Error::InvalidConfig(format!("epsilon table has no row for step {t}")))?;
                if row.len() != n {
                    return Err(Error::InvalidConfig(format!("epsilon row {t} has {} entries for {n} atoms", row.len())));
                }
                row.clone()
            }
        };
        if let Some(e) = eps.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(Error::InvalidConfig(format!("epsilon weights must be finite and nonnegative, got {e}")));
        }
        Ok(eps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionConfig {
    pub labels: Vec<Label>,
    /// The persuader's regular measure Q.
    pub persuader: Vec<f64>,
    /// Oracle of the persuaded agent.
    pub persuaded_oracle: Vec<f64>,
    /// Initially known states.
    pub actual: Vec<Label>,
    pub horizon: usize,
    #[serde(default)]
    pub epsilon: EpsilonSchedule,
    /// Observation order; by default an urn without replacement over the
    /// latent states.
    #[serde(default)]
    pub schedule: Option<Vec<Label>>,
    #[serde(default)]
    pub seed: u64,
}

/// Influenced opinion for weights `eps`. Only the stated validity is
/// enforced: every atom in [-1, 1] and total at most 1.
pub fn influence_step(p: &ExtendedMeasure, q: &ExtendedMeasure, eps: &[f64]) -> Result<ExtendedMeasure> {
    p.check_same_space(q)?;
    if eps.len() != p.len() {
        return Err(Error::InvalidConfig(format!("{} weights for {} atoms", eps.len(), p.len())));
    }
    let atoms: Vec<f64> = (0..p.len()).map(|k| eps[k] * p.atom(k) + (1.0 - eps[k]) * q.atom(k)).collect();
    let bad: Vec<usize> = (0..atoms.len()).filter(|&k| atoms[k].is_nan() || atoms[k].abs() > 1.0).collect();
    if !bad.is_empty() {
        return Err(Error::Validity { atoms: bad, detail: "influenced atom outside [-1, 1]".into() });
    }
    let total = exact_sum(atoms.iter().copied());
    if total > 1.0 + EXACT_TOL {
        return Err(Error::Validity { atoms: Vec::new(), detail: format!("influenced total {total} exceeds 1") });
    }
    ExtendedMeasure::new_relaxed(Arc::clone(p.space()), atoms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoomerangStep {
    pub t: usize,
    pub split: Split,
    /// Updated opinion `P_t` before influence.
    pub p: ExtendedMeasure,
    pub epsilon: Vec<f64>,
    pub influenced: ExtendedMeasure,
    /// `influenced - p`, per atom.
    pub displacement: Vec<f64>,
    /// Largest `|displacement - (ε - 1)(p - q)|` over atoms.
    pub identity_residual: f64,
    /// `|Σ|influenced| - 1|`, recorded but not enforced.
    pub abs_mass_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoomerangRun {
    pub persuader: ExtendedMeasure,
    pub steps: Vec<BoomerangStep>,
}

/// Runs `horizon` steps. Step `t` first observes one state (from step 1 on)
/// and then applies the influence mixture to the updated opinion.
pub fn run_boomerang(cfg: &OpinionConfig) -> Result<BoomerangRun> {
    let space = Arc::new(StateSpace::explicit(cfg.labels.clone())?);
    let q = ExtendedMeasure::new(Arc::clone(&space), cfg.persuader.clone())?;
    if !q.is_regular() {
        return Err(Error::InvalidConfig("the persuader must hold a regular probability".into()));
    }
    let oracle = ExtendedMeasure::new(Arc::clone(&space), cfg.persuaded_oracle.clone())?;
    let mut split = Split::new(space.event(&cfg.actual)?)?;
    let mut p = init_extended(&oracle, &split)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut urn: Vec<usize> = split.latent().iter().collect();
    let mut scheduled = cfg.schedule.as_ref().map(|s| s.iter());

    let mut steps = Vec::with_capacity(cfg.horizon);
    for t in 0..cfg.horizon {
        if t > 0 {
            let next = match &mut scheduled {
                Some(it) => match it.next() {
                    Some(label) => Some(space.index_of(label).ok_or_else(|| Error::RestartRequired(label.clone()))?),
                    None => None,
                },
                None if urn.is_empty() => None,
                None => Some(urn.remove(rng.gen_range(0..urn.len()))),
            };
            if let Some(i) = next {
                let (np, ns, _) = observe_index(&p, &split, i)?;
                p = np;
                split = ns;
            }
        }
        let eps = cfg.epsilon.weights(&split, t)?;
        let influenced = influence_step(&p, &q, &eps)?;
        let displacement: Vec<f64> = (0..p.len()).map(|k| influenced.atom(k) - p.atom(k)).collect();
        let identity_residual = (0..p.len())
            .map(|k| (displacement[k] - (eps[k] - 1.0) * (p.atom(k) - q.atom(k))).abs())
            .fold(0.0, f64::max);
        if identity_residual > EXACT_TOL {
            return Err(Error::NumericalFailure(format!("boomerang identity off by {identity_residual:e} at step {t}")));
        }
        let abs_mass_residual = influenced.abs_mass_residual();
        steps.push(BoomerangStep {
            t,
            split: split.clone(),
            p: p.clone(),
            epsilon: eps,
            influenced,
            displacement,
            identity_residual,
            abs_mass_residual,
        });
    }
    Ok(BoomerangRun { persuader: q, steps })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoomerangRow {
    pub t: usize,
    pub atom: String,
    pub p: f64,
    pub q: f64,
    pub epsilon: f64,
    pub influenced: f64,
    pub displacement: f64,
}

impl BoomerangRun {
    pub fn rows(&self) -> Vec<BoomerangRow> {
        let space = self.persuader.space();
        self.steps
            .iter()
            .flat_map(|s| {
                (0..s.p.len()).map(move |k| BoomerangRow {
                    t: s.t,
                    atom: space.label(k).to_string(),
                    p: s.p.atom(k),
                    q: self.persuader.atom(k),
                    epsilon: s.epsilon[k],
                    influenced: s.influenced.atom(k),
                    displacement: s.displacement[k],
                })
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
}

pub fn read_boomerang_csv<R: io::Read>(r: R) -> Result<Vec<BoomerangRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on3(atoms: &[f64]) -> ExtendedMeasure {
        ExtendedMeasure::on_range(atoms.to_vec()).unwrap()
    }

    #[test]
    fn influence_examples() {
        let p = on3(&[0.3, 0.3, -0.4]);
        let q = on3(&[0.2, 0.3, 0.5]);
        let h = influence_step(&p, &q, &[0.8, 0.8, 1.5]).unwrap();
        for (a, b) in h.atoms().iter().zip([0.28, 0.30, -0.85]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(influence_step(&p, &q, &[1.0; 3]).unwrap().atoms(), p.atoms());
        assert_eq!(influence_step(&p, &q, &[0.0; 3]).unwrap().atoms(), q.atoms());
    }

    #[test]
    fn invalid_influence() {
        let p = on3(&[0.3, 0.3, -0.4]);
        let q = on3(&[0.2, 0.3, 0.5]);
        match influence_step(&p, &q, &[1.0, 1.0, 3.0]) {
            Err(Error::Validity { atoms, .. }) => assert_eq!(atoms, vec![2]),
            other => panic!("{other:?}"),
        }
    }

    fn config() -> OpinionConfig {
        OpinionConfig {
            labels: (1..=3).map(Label::Int).collect(),
            persuader: vec![0.2, 0.3, 0.5],
            persuaded_oracle: vec![0.3, 0.3, 0.4],
            actual: vec![Label::Int(1), Label::Int(2)],
            horizon: 4,
            epsilon: EpsilonSchedule::default(),
            schedule: None,
            seed: 0,
        }
    }

    #[test]
    fn run_reproduces_hand_example() {
        let run = run_boomerang(&config()).unwrap();
        let s0 = &run.steps[0];
        assert_eq!(s0.p.atoms(), &[0.3, 0.3, -0.4]);
        assert!((s0.influenced.atom(2) + 0.85).abs() < 1e-12);
        assert!((s0.displacement[2] + 0.45).abs() < 1e-12);
        let last = run.steps.last().unwrap();
        assert!(last.p.is_regular());
        assert!(last.influenced.is_regular());
    }

    #[test]
    fn table_schedule_and_csv() {
        let mut c = config();
        c.epsilon = EpsilonSchedule::Table(vec![vec![0.5; 3]; 2]);
        c.horizon = 2;
        let run = run_boomerang(&c).unwrap();
        let mut buf = Vec::new();
        run.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"t,atom,p,q,epsilon,influenced,displacement\n"));
        assert_eq!(read_boomerang_csv(buf.as_slice()).unwrap(), run.rows());
        c.horizon = 3;
        assert!(run_boomerang(&c).is_err());
    }

    #[test]
    fn config_json_defaults() {
        let json = r#"{"labels":[1,2,3],"persuader":[0.2,0.3,0.5],"persuaded_oracle":[0.3,0.3,0.4],"actual":[1,2],"horizon":2}"#;
        let c: OpinionConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.epsilon, EpsilonSchedule::default());
        let json = r#"{"labels":[1,2],"persuader":[0.5,0.5],"persuaded_oracle":[0.5,0.5],"actual":[1],"horizon":1,"epsilon":[[0.9,1.2]]}"#;
        let c: OpinionConfig = serde_json::from_str(json).unwrap();
        assert!(matches!(c.epsilon, EpsilonSchedule::Table(_)));
    }
}
