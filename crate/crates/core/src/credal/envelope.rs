//! Lower/upper envelopes, either derived from a credal set or elicited as a
//! table, and their capacity checks.

use std::io;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::CredalSet;
use crate::error::{Error, Result};
use crate::measure::EXACT_TOL;
use crate::report::ValidationReport;
use crate::space::{all_events, Event, Label, StateSpace};

/// Largest space an elicited table may cover (the table has 2^N rows).
pub const ELICITED_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    Derived(CredalSet),
    Elicited(ElicitedTable),
}

impl Envelope {
    pub fn space(&self) -> &Arc<StateSpace> {
        match self {
            Envelope::Derived(c) => c.space(),
            Envelope::Elicited(t) => &t.space,
        }
    }

    pub fn len(&self) -> usize {
        self.space().len()
    }

    pub fn is_empty(&self) -> bool {
        self.space().is_empty()
    }

    fn check(&self, a: &Event) -> Result<()> {
        if a.universe() != self.len() {
            return Err(Error::InvalidEvent(format!("event over {} states, envelope over {}", a.universe(), self.len())));
        }
        Ok(())
    }

    pub fn lower(&self, a: &Event) -> Result<f64> {
        self.check(a)?;
        Ok(match self {
            Envelope::Derived(c) => c.lower_unchecked(a),
            Envelope::Elicited(t) => t.lower[t.slot(a)],
        })
    }

    pub fn upper(&self, a: &Event) -> Result<f64> {
        self.check(a)?;
        Ok(match self {
            Envelope::Derived(c) => c.upper_unchecked(a),
            Envelope::Elicited(t) => t.upper[t.slot(a)],
        })
    }

    /// Lower values of all events in bitmask order.
    pub fn lower_table(&self, n_cap: usize) -> Result<Vec<f64>> {
        self.table(n_cap, true)
    }

    pub fn upper_table(&self, n_cap: usize) -> Result<Vec<f64>> {
        self.table(n_cap, false)
    }

    fn table(&self, n_cap: usize, lower: bool) -> Result<Vec<f64>> {
        let n = self.len();
        if n > n_cap || n > ELICITED_CAP {
            return Err(Error::SpaceTooLarge { size: n, cap: n_cap.min(ELICITED_CAP) });
        }
        Ok(match self {
            Envelope::Elicited(t) => if lower { t.lower.clone() } else { t.upper.clone() },
            Envelope::Derived(c) => all_events(n)
                .map(|a| if lower { c.lower_unchecked(&a) } else { c.upper_unchecked(&a) })
                .collect(),
        })
    }
}

/// One row of the elicited-envelope JSON. Missing bounds are vacuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitedEntry {
    pub event: Vec<Label>,
    #[serde(default = "vacuous_lower")]
    pub lower: f64,
    #[serde(default = "vacuous_upper")]
    pub upper: f64,
}

fn vacuous_lower() -> f64 {
    -1.0
}

fn vacuous_upper() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ElicitedInput {
    WithLabels { labels: Vec<Label>, events: Vec<ElicitedEntry> },
    Bare(Vec<ElicitedEntry>),
}

#[derive(Serialize)]
struct ElicitedOutput<'a> {
    labels: &'a [Label],
    events: Vec<ElicitedEntry>,
}

/// Lower and upper values stored for every event, indexed by bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct ElicitedTable {
    space: Arc<StateSpace>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ElicitedTable {
    /// Vacuous table: every nonempty event gets [-1, 1], the empty event 0.
    pub fn vacuous(space: Arc<StateSpace>) -> Result<Self> {
        let n = space.len();
        if n > ELICITED_CAP {
            return Err(Error::SpaceTooLarge { size: n, cap: ELICITED_CAP });
        }
        let size = 1usize << n;
        let mut lower = vec![-1.0; size];
        let mut upper = vec![1.0; size];
        lower[0] = 0.0;
        upper[0] = 0.0;
        Ok(ElicitedTable { space, lower, upper })
    }

    pub fn from_entries(space: Arc<StateSpace>, entries: &[ElicitedEntry]) -> Result<Self> {
        let mut t = Self::vacuous(space)?;
        for e in entries {
            let a = t.space.event(&e.event)?;
            if !e.lower.is_finite() || !e.upper.is_finite() {
                return Err(Error::Parse(format!("non-finite bound for {}", t.space.format_event(&a))));
            }
            t.set(&a, e.lower, e.upper)?;
        }
        Ok(t)
    }

    /// Materializes any envelope as a table.
    pub fn from_envelope(e: &Envelope) -> Result<Self> {
        Ok(ElicitedTable {
            space: Arc::clone(e.space()),
            lower: e.lower_table(ELICITED_CAP)?,
            upper: e.upper_table(ELICITED_CAP)?,
        })
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    fn slot(&self, a: &Event) -> usize {
        a.to_mask().expect("elicited tables cover at most 16 states") as usize
    }

    pub fn set(&mut self, a: &Event, lower: f64, upper: f64) -> Result<()> {
        if a.universe() != self.space.len() {
            return Err(Error::InvalidEvent("event over a different space".into()));
        }
        let k = self.slot(a);
        self.lower[k] = lower;
        self.upper[k] = upper;
        Ok(())
    }

    pub fn entries(&self) -> Vec<ElicitedEntry> {
        all_events(self.space.len())
            .enumerate()
            .map(|(k, a)| ElicitedEntry { event: self.space.event_labels(&a), lower: self.lower[k], upper: self.upper[k] })
            .collect()
    }

    /// Reads either `{"labels": [...], "events": [...]}` or a bare array of
    /// entries. A bare array takes its labels from `space`, or else from the
    /// sorted union of the labels it mentions.
    pub fn from_json(s: &str, space: Option<Arc<StateSpace>>) -> Result<Self> {
        let (space, entries) = match serde_json::from_str::<ElicitedInput>(s)? {
            ElicitedInput::WithLabels { labels, events } => (Arc::new(StateSpace::explicit(labels)?), events),
            ElicitedInput::Bare(events) => {
                let space = match space {
                    Some(sp) => sp,
                    None => {
                        let mut labels: Vec<Label> = events.iter().flat_map(|e| e.event.iter().cloned()).collect();
                        labels.sort();
                        labels.dedup();
                        Arc::new(StateSpace::explicit(labels)?)
                    }
                };
                (space, events)
            }
        };
        Self::from_entries(space, &entries)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ElicitedOutput { labels: self.space.labels(), events: self.entries() })?)
    }

    /// CSV with columns `event, lower, upper`, one row per event in bitmask
    /// order.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for (k, a) in all_events(self.space.len()).enumerate() {
            wtr.serialize(EnvelopeRow { event: self.space.format_event(&a), lower: self.lower[k], upper: self.upper[k] })?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads [`write_csv`](Self::write_csv) output. The state labels are
    /// taken from the singleton rows, in file order.
    pub fn read_csv<R: io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<EnvelopeRow>, _>>()?;
        let mut labels = Vec::new();
        for row in &rows {
            let inner = row.event.trim().trim_start_matches('{').trim_end_matches('}');
            if !inner.is_empty() && !inner.contains(',') {
                labels.push(Label::parse(inner));
            }
        }
        let space = Arc::new(StateSpace::explicit(labels)?);
        let mut t = Self::vacuous(Arc::clone(&space))?;
        for row in rows {
            t.set(&space.parse_event(&row.event)?, row.lower, row.upper)?;
        }
        Ok(t)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EnvelopeRow {
    event: String,
    lower: f64,
    upper: f64,
}

struct Violation {
    amount: f64,
    detail: String,
}

impl Violation {
    fn none() -> Self {
        Violation { amount: 0.0, detail: String::new() }
    }

    fn record(&mut self, amount: f64, detail: impl FnOnce() -> String) {
        if amount > self.amount {
            self.amount = amount;
            self.detail = detail();
        }
    }
}

/// Checks EC1 (empty event is 0), EC2 (range), EC3 (sign-guarded
/// monotonicity on nested pairs) for both bounds, plus superadditivity of
/// the lower and subadditivity of the upper bound on disjoint pairs.
pub fn validate_capacity(e: &Envelope, n_cap: usize) -> Result<ValidationReport> {
    let lo = e.lower_table(n_cap)?;
    let up = e.upper_table(n_cap)?;
    let n = e.len();
    let sp = e.space();
    let fmt = |m: usize| sp.format_event(&Event::from_mask(n, m as u64));
    let mut report = ValidationReport::default();

    let ec1 = lo[0].abs().max(up[0].abs());
    report.push("EC1", ec1 <= EXACT_TOL, ec1, "value of the empty event");

    let mut ec2 = Violation::none();
    for (name, table) in [("lower", &lo), ("upper", &up)] {
        for (m, v) in table.iter().enumerate() {
            ec2.record(v.abs() - 1.0, || format!("{name}{} = {v}", fmt(m)));
        }
    }
    report.push("EC2", ec2.amount <= EXACT_TOL, ec2.amount, ec2.detail);

    let mut ec3 = Violation::none();
    let mut superadd = Violation::none();
    let mut subadd = Violation::none();
    for b in 0..lo.len() {
        // every submask a of b, including 0 and b
        let mut a = b;
        loop {
            let rest = b & !a;
            for (name, f) in [("lower", &lo), ("upper", &up)] {
                let (fa, fb, fr) = (f[a], f[b], f[rest]);
                if fa >= 0.0 && fb >= 0.0 && fr >= 0.0 {
                    ec3.record(fa - fb, || format!("{name}{} = {fa} > {name}{} = {fb}", fmt(a), fmt(b)));
                }
                if fa <= 0.0 && fb <= 0.0 && fr <= 0.0 {
                    ec3.record(fb - fa, || format!("{name}{} = {fa} < {name}{} = {fb}", fmt(a), fmt(b)));
                }
            }
            // b is the disjoint union of a and rest
            let gap = lo[a] + lo[rest] - lo[b];
            superadd.record(gap, || format!("lower{} < lower{} + lower{}", fmt(b), fmt(a), fmt(rest)));
            let gap = up[b] - up[a] - up[rest];
            subadd.record(gap, || format!("upper{} > upper{} + upper{}", fmt(b), fmt(a), fmt(rest)));
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }
    report.push("EC3", ec3.amount <= EXACT_TOL, ec3.amount, ec3.detail);
    report.push("superadditivity", superadd.amount <= EXACT_TOL, superadd.amount, superadd.detail);
    report.push("subadditivity", subadd.amount <= EXACT_TOL, subadd.amount, subadd.detail);
    Ok(report)
}

/// `max_A |upper(A) - (upper(Ω) - lower(Aᶜ))|`. For a derived envelope
/// `upper(Ω)` is the largest member value of Ω.
pub fn conjugacy_residual(e: &Envelope, n_cap: usize) -> Result<f64> {
    let lo = e.lower_table(n_cap)?;
    let up = e.upper_table(n_cap)?;
    let full = lo.len() - 1;
    Ok((0..lo.len()).map(|m| (up[m] - (up[full] - lo[full & !m])).abs()).fold(0.0, f64::max))
}
