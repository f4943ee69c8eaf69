//! Credal sets of extended measures and their envelopes.

mod core_search;
mod envelope;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{d_etv, observe_index, Split};
use crate::error::{Error, Result};
use crate::measure::{ExtendedMeasure, EXACT_TOL};
use crate::numeric::exact_sum;
use crate::space::{Event, Label, StateSpace};

pub use core_search::{core, is_core_member, lower_coherence, CoreCertificate, CoreReport, CORE_CAP};
pub use envelope::{conjugacy_residual, validate_capacity, ElicitedEntry, ElicitedTable, Envelope, ELICITED_CAP};

/// Finite set of extended measures sharing one space and one split. Every
/// member is nonnegative on actual states and nonpositive on latent ones.
#[derive(Debug, Clone, PartialEq)]
pub struct CredalSet {
    members: Vec<ExtendedMeasure>,
    split: Split,
}

impl CredalSet {
    pub fn new(members: Vec<ExtendedMeasure>, split: Split) -> Result<CredalSet> {
        let first = members.first().ok_or_else(|| Error::InvalidConfig("a credal set needs at least one member".into()))?;
        if split.universe() != first.len() {
            return Err(Error::MismatchedSpace(format!(
                "split over {} states, members over {}",
                split.universe(),
                first.len()
            )));
        }
        for (k, m) in members.iter().enumerate() {
            first.check_same_space(m)?;
            if let Some(w) = (0..m.len()).find(|&w| {
                let a = m.atom(w);
                if split.is_actual(w) {
                    a < 0.0
                } else {
                    a > 0.0
                }
            }) {
                return Err(Error::InvalidMeasure {
                    axiom: "sign".into(),
                    detail: format!(
                        "member {k} has atom {} at {} state {}",
                        m.atom(w),
                        if split.is_actual(w) { "actual" } else { "latent" },
                        m.space().label(w)
                    ),
                });
            }
        }
        Ok(CredalSet { members, split })
    }

    pub fn members(&self) -> &[ExtendedMeasure] {
        &self.members
    }

    pub fn split(&self) -> &Split {
        &self.split
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        self.members[0].space()
    }

    pub fn len(&self) -> usize {
        self.members[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.members[0].is_empty()
    }

    pub fn lower(&self, a: &Event) -> Result<f64> {
        self.members[0].check_event(a)?;
        Ok(self.lower_unchecked(a))
    }

    pub fn upper(&self, a: &Event) -> Result<f64> {
        self.members[0].check_event(a)?;
        Ok(self.upper_unchecked(a))
    }

    pub(crate) fn lower_unchecked(&self, a: &Event) -> f64 {
        self.members.iter().map(|m| m.eval_unchecked(a)).fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn upper_unchecked(&self, a: &Event) -> f64 {
        self.members.iter().map(|m| m.eval_unchecked(a)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Observes state `i` in every member.
    pub fn observe_index(&self, i: usize) -> Result<CredalSet> {
        let mut members = Vec::with_capacity(self.members.len());
        let mut split = self.split.clone();
        for m in &self.members {
            let (q, s, _) = observe_index(m, &self.split, i)?;
            members.push(q);
            split = s;
        }
        Ok(CredalSet { members, split })
    }

    pub fn observe(&self, label: &Label) -> Result<CredalSet> {
        let i = self.space().index_of(label).ok_or_else(|| Error::RestartRequired(label.clone()))?;
        self.observe_index(i)
    }

    pub fn singleton_envelope(&self) -> SingletonEnvelope {
        let n = self.len();
        SingletonEnvelope {
            lower: (0..n).map(|w| self.lower_unchecked(&Event::singleton(n, w))).collect(),
            upper: (0..n).map(|w| self.upper_unchecked(&Event::singleton(n, w))).collect(),
            split: self.split.clone(),
        }
    }
}

/// Lower and upper values on the singletons, with the split they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct SingletonEnvelope {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub split: Split,
}

/// Envelope update after observing state `i`. A newly discovered state gets
/// `lower' = |upper|` and `upper' = |lower|`; a re-drawn one keeps its
/// bounds.
pub fn update_envelope(env: &SingletonEnvelope, i: usize) -> Result<SingletonEnvelope> {
    if i >= env.lower.len() {
        return Err(Error::InvalidEvent(format!("state index {i} out of range")));
    }
    let mut next = env.clone();
    if !env.split.is_actual(i) {
        next.lower[i] = env.upper[i].abs();
        next.upper[i] = env.lower[i].abs();
    }
    next.split = env.split.advance(i);
    Ok(next)
}

/// Geometric-rule conditional `lower(A ∩ B) / lower(B)`.
pub fn geometric_conditional(c: &CredalSet, a: &Event, b: &Event) -> Result<f64> {
    let lb = c.lower(b)?;
    c.lower(a)?;
    if lb.abs() <= EXACT_TOL {
        return Err(Error::NullConditioning { value: lb });
    }
    Ok(c.lower_unchecked(&a.intersection(b)) / lb)
}

/// Bounds from singleton values: `Σ lower({ω}) <= lower(A)` and
/// `upper(A) <= Σ upper({ω})`.
pub fn event_bounds(c: &CredalSet, a: &Event) -> Result<(f64, f64)> {
    c.lower(a)?;
    let n = c.len();
    let lo = exact_sum(a.iter().map(|w| c.lower_unchecked(&Event::singleton(n, w))));
    let hi = exact_sum(a.iter().map(|w| c.upper_unchecked(&Event::singleton(n, w))));
    debug_assert!(lo <= c.lower_unchecked(a) + EXACT_TOL);
    debug_assert!(c.upper_unchecked(a) <= hi + EXACT_TOL);
    Ok((lo, hi))
}

/// Hausdorff distance between two finite credal sets under `d_etv`.
pub fn hausdorff(c1: &CredalSet, c2: &CredalSet) -> Result<f64> {
    let directed = |x: &CredalSet, y: &CredalSet| -> Result<f64> {
        let mut sup = 0.0f64;
        for p in &x.members {
            let mut inf = f64::INFINITY;
            for q in &y.members {
                inf = inf.min(d_etv(p, q)?);
            }
            sup = sup.max(inf);
        }
        Ok(sup)
    };
    Ok(directed(c1, c2)?.max(directed(c2, c1)?))
}

/// JSON form: `{"labels": [...], "actual": [...], "members": [[atoms], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredalRecord {
    pub labels: Vec<Label>,
    pub actual: Vec<Label>,
    pub members: Vec<Vec<f64>>,
}

impl CredalRecord {
    pub fn into_set(self) -> Result<CredalSet> {
        let space = Arc::new(StateSpace::explicit(self.labels)?);
        let split = Split::new(space.event(&self.actual)?)?;
        let members = self
            .members
            .into_iter()
            .map(|atoms| ExtendedMeasure::new(Arc::clone(&space), atoms))
            .collect::<Result<Vec<_>>>()?;
        CredalSet::new(members, split)
    }
}

impl From<&CredalSet> for CredalRecord {
    fn from(c: &CredalSet) -> Self {
        CredalRecord {
            labels: c.space().labels().to_vec(),
            actual: c.space().event_labels(c.split.actual()),
            members: c.members.iter().map(|m| m.atoms().to_vec()).collect(),
        }
    }
}
