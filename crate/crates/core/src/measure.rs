//! Extended probability measures on a finite state space.
//!
//! A measure is stored by its atoms `a_ω`, one per state. Additivity over
//! disjoint events then holds by construction and every event value is a sum
//! of atoms. Validity means every atom lies in [-1, 1] and the atoms'
//! absolute values sum to one.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::exact_sum;
use crate::report::ValidationReport;
use crate::space::{Event, Label, StateSpace};

/// Tolerance for identities that hold exactly in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;

/// Tolerance for LP optima.
pub const LP_TOL: f64 = 1e-9;

const SPOT_CHECK_PAIRS: usize = 64;
const SPOT_CHECK_SEED: u64 = 0x5eed_0001;

/// Whether loading enforces the axioms or only annotates violations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationMode {
    #[default]
    Strict,
    Relaxed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedMeasure {
    space: Arc<StateSpace>,
    atoms: Vec<f64>,
}

impl ExtendedMeasure {
    /// Builds a measure and rejects it unless every axiom check passes.
    pub fn new(space: Arc<StateSpace>, atoms: Vec<f64>) -> Result<Self> {
        let m = Self::new_relaxed(space, atoms)?;
        let report = m.validate();
        if let Some(bad) = report.failures().next() {
            return Err(Error::InvalidMeasure {
                axiom: bad.name.clone(),
                detail: format!("residual {:e} {}", bad.residual, bad.detail).trim_end().to_owned(),
            });
        }
        Ok(m)
    }

    /// Builds a set function from atoms without enforcing the axioms. Only the
    /// length and finiteness are checked; use [`validate`](Self::validate) to
    /// see what fails.
    pub fn new_relaxed(space: Arc<StateSpace>, atoms: Vec<f64>) -> Result<Self> {
        if atoms.len() != space.len() {
            return Err(Error::InvalidMeasure {
                axiom: "shape".into(),
                detail: format!("{} atoms for {} states", atoms.len(), space.len()),
            });
        }
        if let Some(i) = atoms.iter().position(|a| !a.is_finite()) {
            return Err(Error::InvalidMeasure {
                axiom: "finite".into(),
                detail: format!("atom {} is {}", space.label(i), atoms[i]),
            });
        }
        Ok(ExtendedMeasure { space, atoms })
    }

    /// Convenience constructor over integer labels `1..=atoms.len()`.
    pub fn on_range(atoms: Vec<f64>) -> Result<Self> {
        let space = Arc::new(StateSpace::range(atoms.len())?);
        Self::new(space, atoms)
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> f64 {
        self.atoms[i]
    }

    /// Same space, new atoms; validity is not re-checked.
    pub(crate) fn with_atoms(&self, atoms: Vec<f64>) -> ExtendedMeasure {
        debug_assert_eq!(atoms.len(), self.atoms.len());
        ExtendedMeasure { space: Arc::clone(&self.space), atoms }
    }

    pub(crate) fn check_event(&self, a: &Event) -> Result<()> {
        if a.universe() != self.len() {
            return Err(Error::InvalidEvent(format!(
                "event over {} states used with a measure over {}",
                a.universe(),
                self.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_same_space(&self, other: &ExtendedMeasure) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) || self.space == other.space {
            Ok(())
        } else {
            Err(Error::MismatchedSpace(format!(
                "{} states vs {} states with different labels",
                self.len(),
                other.len()
            )))
        }
    }

    pub(crate) fn eval_unchecked(&self, a: &Event) -> f64 {
        exact_sum(a.iter().map(|i| self.atoms[i]))
    }

    /// Value of event `a`: the sum of its atoms.
    pub fn eval(&self, a: &Event) -> Result<f64> {
        self.check_event(a)?;
        Ok(self.eval_unchecked(a))
    }

    /// Value of Ω, which need not be 1.
    pub fn total(&self) -> f64 {
        exact_sum(self.atoms.iter().copied())
    }

    /// `P(Ω) - P(a)`, summed in one exact pass so it agrees bit for bit with
    /// the value of the complement event.
    pub fn complement(&self, a: &Event) -> Result<f64> {
        self.check_event(a)?;
        Ok(exact_sum(self.atoms.iter().copied().chain(a.iter().map(|i| -self.atoms[i]))))
    }

    /// `P(a ∩ b) / P(b)`. The ratio is not clamped: with mixed-sign atoms it
    /// can leave [-1, 1] (e.g. atoms (.4, -.3, ...) with b = {1,2}, a = {1}).
    pub fn conditional(&self, a: &Event, b: &Event) -> Result<f64> {
        self.check_event(a)?;
        let pb = self.eval(b)?;
        if pb.abs() <= EXACT_TOL {
            return Err(Error::NullConditioning { value: pb });
        }
        Ok(self.eval_unchecked(&a.intersection(b)) / pb)
    }

    /// Independence up to sign: `|P(a ∩ b)| = |P(a) P(b)|` within `tol`.
    pub fn is_independent(&self, a: &Event, b: &Event, tol: f64) -> Result<bool> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("independence tolerance must be positive, got {tol}")));
        }
        let joint = self.eval(&a.intersection(b))?.abs();
        let product = (self.eval(a)? * self.eval(b)?).abs();
        Ok((joint - product).abs() <= tol)
    }

    /// `|Σ|a_ω| - 1|`.
    pub fn abs_mass_residual(&self) -> f64 {
        (exact_sum(self.atoms.iter().map(|a| a.abs())) - 1.0).abs()
    }

    /// A regular probability: nonnegative atoms summing to one.
    pub fn is_regular(&self) -> bool {
        self.atoms.iter().all(|&a| a >= 0.0) && (self.total() - 1.0).abs() <= EXACT_TOL
    }

    /// Per-axiom report. Inclusion–exclusion and additivity are spot-checked on
    /// a fixed pseudo-random sample of event pairs.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = self.len();

        let range_excess = self.atoms.iter().map(|a| (a.abs() - 1.0).max(0.0)).fold(0.0, f64::max);
        report.push("i*", range_excess == 0.0, range_excess, "atoms within [-1, 1]");

        let mut rng = ChaCha8Rng::seed_from_u64(SPOT_CHECK_SEED);
        let random_event = |rng: &mut ChaCha8Rng| {
            Event::from_indices(n, (0..n).filter(|_| rng.gen_bool(0.5))).expect("indices in range")
        };
        let mut additivity = 0.0f64;
        let mut incl_excl = 0.0f64;
        for _ in 0..SPOT_CHECK_PAIRS {
            let a = random_event(&mut rng);
            let b = random_event(&mut rng);
            let (pa, pb) = (self.eval_unchecked(&a), self.eval_unchecked(&b));
            let union = self.eval_unchecked(&a.union(&b));
            let inter = self.eval_unchecked(&a.intersection(&b));
            incl_excl = incl_excl.max((union - (pa + pb - inter)).abs());
            let b_only = b.difference(&a);
            let split = pa + self.eval_unchecked(&b_only);
            additivity = additivity.max((union - split).abs());
        }
        report.push("ii*", additivity <= EXACT_TOL, additivity, "additivity on sampled disjoint pairs");

        let mass = self.abs_mass_residual();
        report.push("iii*", mass <= EXACT_TOL, mass, "sum of |atoms| equals 1");

        report.push("inclusion-exclusion", incl_excl <= EXACT_TOL, incl_excl, "sampled event pairs");
        report
    }
}

/// On-disk form: `{"labels": [...], "atoms": [...]}` with atoms in label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub labels: Vec<Label>,
    pub atoms: Vec<f64>,
}

impl MeasureRecord {
    /// Strict mode rejects a record failing validation; relaxed mode keeps it
    /// and hands back the report.
    pub fn into_measure(self, mode: ValidationMode) -> Result<(ExtendedMeasure, ValidationReport)> {
        let space = Arc::new(StateSpace::explicit(self.labels)?);
        build_checked(space, self.atoms, mode)
    }

    /// Like [`into_measure`](Self::into_measure) but reuses an existing space;
    /// the record's labels must match it.
    pub fn atoms_into(self, space: Arc<StateSpace>, mode: ValidationMode) -> Result<(ExtendedMeasure, ValidationReport)> {
        if self.labels.as_slice() != space.labels() {
            return Err(Error::MismatchedSpace("record labels differ from the target space".into()));
        }
        build_checked(space, self.atoms, mode)
    }
}

fn build_checked(space: Arc<StateSpace>, atoms: Vec<f64>, mode: ValidationMode) -> Result<(ExtendedMeasure, ValidationReport)> {
    let m = ExtendedMeasure::new_relaxed(space, atoms)?;
    let report = m.validate();
    if mode == ValidationMode::Strict {
        if let Some(bad) = report.failures().next() {
            return Err(Error::InvalidMeasure {
                axiom: bad.name.clone(),
                detail: format!("residual {:e}", bad.residual),
            });
        }
    }
    Ok((m, report))
}

impl From<&ExtendedMeasure> for MeasureRecord {
    fn from(m: &ExtendedMeasure) -> Self {
        MeasureRecord { labels: m.space.labels().to_vec(), atoms: m.atoms.clone() }
    }
}

impl Serialize for ExtendedMeasure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureRecord::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExtendedMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = MeasureRecord::deserialize(deserializer)?;
        rec.into_measure(ValidationMode::Strict).map(|(m, _)| m).map_err(serde::de::Error::custom)
    }
}
