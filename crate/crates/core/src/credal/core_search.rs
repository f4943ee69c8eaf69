//! Core of a lower envelope and lower-envelope coherence.
//!
//! The core is the set of extended measures `P` with `P(A) >= lower(A)` for
//! every event and `P(Ω) = lower(Ω)`. The constraint `Σ|a_ω| = 1` is not
//! convex, so the search fixes a sign pattern σ and writes `a_ω = σ_ω b_ω`
//! with `b >= 0`, `Σ b = 1`. Each pattern is then an LP maximizing the
//! smallest domination slack; the pattern is feasible iff that slack is
//! nonnegative (up to `LP_TOL`).

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::envelope::{Envelope, ELICITED_CAP};
use crate::coherence::{dutch_book_search, DutchBookCandidate, DutchBookSearch, StakeSign};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::measure::{ExtendedMeasure, EXACT_TOL, LP_TOL};
use crate::numeric::exact_sum;
use crate::space::{all_events, Event, Label, StateSpace};

/// Default cap on the state count for core search.
pub const CORE_CAP: usize = 12;

const CUTS_PER_ROUND: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum CoreCertificate {
    /// Slack `witness(A) - lower(A)` for every event in bitmask order.
    CoreWitness { min_slack: f64, slacks: Vec<f64> },
    DutchBook(DutchBookCandidate),
    NoDutchBook { lp_optimum: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreReport {
    pub nonempty: bool,
    pub witness: Option<ExtendedMeasure>,
    pub coherent: bool,
    pub certificate: CoreCertificate,
}

/// Direct check of the core definition for a given measure.
pub fn is_core_member(lower: &Envelope, p: &ExtendedMeasure, tol: f64) -> Result<bool> {
    let lo = lower.lower_table(ELICITED_CAP)?;
    if p.len() != lower.len() {
        return Err(Error::MismatchedSpace("measure and envelope differ in size".into()));
    }
    let full = lo.len() - 1;
    if (p.total() - lo[full]).abs() > tol {
        return Ok(false);
    }
    Ok(all_events(p.len()).enumerate().all(|(m, a)| p.eval_unchecked(&a) >= lo[m] - tol))
}

/// Dutch-book search against a lower envelope. The punter buys bets at the
/// lower prices, so stakes are nonnegative; bets range over the nonempty
/// unions of states that lie in no event of negative lower value.
pub fn lower_coherence(lower: &Envelope) -> Result<DutchBookSearch> {
    let lo = lower.lower_table(CORE_CAP)?;
    let n = lower.len();
    let tainted = lo.iter().enumerate().filter(|(_, v)| **v < 0.0).fold(0usize, |acc, (m, _)| acc | m);
    let safe: Vec<usize> = (0..n).filter(|w| tainted & (1 << w) == 0).collect();
    let safe_mask = safe.iter().fold(0usize, |acc, w| acc | (1 << w));
    let mut events = Vec::new();
    let mut prices = Vec::new();
    for (m, &price) in lo.iter().enumerate().skip(1) {
        if m & !safe_mask == 0 {
            events.push(Event::from_mask(n, m as u64));
            prices.push(price);
        }
    }
    dutch_book_search(n, &events, &prices, StakeSign::NonNegative)
}

/// Searches the core by sign-pattern enumeration. When the core is empty the
/// envelope's coherence is settled by [`lower_coherence`].
pub fn core(lower: &Envelope, n_cap: usize) -> Result<CoreReport> {
    let n = lower.len();
    if n > n_cap {
        return Err(Error::SpaceTooLarge { size: n, cap: n_cap });
    }
    let lo = lower.lower_table(n_cap)?;

    for negative in pattern_order(lower, &lo)? {
        if (0..n).any(|w| negative & (1 << w) != 0 && lo[1 << w] > 0.0) {
            continue;
        }
        if let Some(atoms) = solve_pattern(n, negative, &lo)? {
            let witness = ExtendedMeasure::new(Arc::clone(lower.space()), atoms)?;
            let slacks: Vec<f64> = all_events(n).enumerate().map(|(m, a)| witness.eval_unchecked(&a) - lo[m]).collect();
            let min_slack = slacks.iter().copied().fold(f64::INFINITY, f64::min);
            return Ok(CoreReport {
                nonempty: true,
                witness: Some(witness),
                coherent: true,
                certificate: CoreCertificate::CoreWitness { min_slack, slacks },
            });
        }
    }

    let search = lower_coherence(lower)?;
    Ok(match search.candidate {
        Some(book) => CoreReport { nonempty: false, witness: None, coherent: false, certificate: CoreCertificate::DutchBook(book) },
        None => CoreReport {
            nonempty: false,
            witness: None,
            coherent: true,
            certificate: CoreCertificate::NoDutchBook { lp_optimum: search.lp_optimum },
        },
    })
}

/// Sign patterns as masks of negative states. Members' own patterns (for a
/// derived envelope) and the pattern of the singleton lower values go
/// first; the rest follow in mask order.
fn pattern_order(lower: &Envelope, lo: &[f64]) -> Result<Vec<usize>> {
    let n = lower.len();
    let mut hints = Vec::new();
    if let Envelope::Derived(c) = lower {
        for m in c.members() {
            hints.push((0..n).filter(|&w| m.atom(w) < 0.0).fold(0usize, |acc, w| acc | (1 << w)));
        }
    }
    hints.push((0..n).filter(|&w| lo[1 << w] < 0.0).fold(0usize, |acc, w| acc | (1 << w)));
    let mut seen = BTreeSet::new();
    let mut order = Vec::with_capacity(1 << n);
    for p in hints.into_iter().chain(0..1usize << n) {
        if seen.insert(p) {
            order.push(p);
        }
    }
    Ok(order)
}

/// Max-min-slack LP for one sign pattern, solved by adding violated event
/// constraints until none remain. Returns the atoms of a core member, or
/// `None` if the pattern admits none.
fn solve_pattern(n: usize, negative: usize, lo: &[f64]) -> Result<Option<Vec<f64>>> {
    let full = lo.len() - 1;
    let sigma: Vec<f64> = (0..n).map(|w| if negative & (1 << w) != 0 { -1.0 } else { 1.0 }).collect();
    // columns: b_0..b_{n-1}, z+, z-
    let width = n + 2;
    let mut active: BTreeSet<usize> = (0..n).map(|w| 1usize << w).filter(|&m| m != full && lo[m] > -1.0).collect();

    loop {
        let mut objective = vec![0.0; width];
        objective[n] = -1.0;
        objective[n + 1] = 1.0;
        let mut lp = LinearProgram::minimize(objective);
        let mut row = vec![1.0; width];
        row[n] = 0.0;
        row[n + 1] = 0.0;
        lp.add(row, Relation::Eq, 1.0);
        let mut row = sigma.clone();
        row.extend([0.0, 0.0]);
        lp.add(row, Relation::Eq, lo[full]);
        let mut row = vec![0.0; width];
        row[n] = 1.0;
        row[n + 1] = -1.0;
        lp.add(row, Relation::Le, 1.0);
        for &m in &active {
            let mut row: Vec<f64> = (0..n).map(|w| if m & (1 << w) != 0 { sigma[w] } else { 0.0 }).collect();
            row.extend([-1.0, 1.0]);
            lp.add(row, Relation::Ge, lo[m]);
        }

        let sol = match lp.solve()? {
            LpOutcome::Optimal(s) => s,
            LpOutcome::Infeasible => return Ok(None),
            LpOutcome::Unbounded => return Err(Error::NumericalFailure("core LP unbounded despite slack cap".into())),
        };
        let z = sol.x[n] - sol.x[n + 1];
        if z < -LP_TOL {
            return Ok(None);
        }
        let mass: f64 = exact_sum(sol.x[..n].iter().copied());
        let atoms: Vec<f64> = (0..n).map(|w| sigma[w] * sol.x[w] / mass).collect();

        // subset sums by lowest-bit recursion
        let mut value = vec![0.0; lo.len()];
        let mut cuts: Vec<(f64, usize)> = Vec::new();
        let mut min_slack = f64::INFINITY;
        for m in 1..lo.len() {
            value[m] = value[m & (m - 1)] + atoms[m.trailing_zeros() as usize];
            if m == full {
                continue;
            }
            let slack = value[m] - lo[m];
            min_slack = min_slack.min(slack);
            if slack < z - EXACT_TOL && !active.contains(&m) {
                cuts.push((slack, m));
            }
        }
        if cuts.is_empty() {
            if min_slack >= -LP_TOL && (value[full] - lo[full]).abs() <= LP_TOL && lo[0] <= LP_TOL {
                return Ok(Some(atoms));
            }
            return Ok(None);
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        active.extend(cuts.into_iter().take(CUTS_PER_ROUND).map(|(_, m)| m));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SlackRecord {
    event: Vec<Label>,
    slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum CertificateRecord {
    CoreWitness { min_slack: f64, slacks: Vec<SlackRecord> },
    DutchBook { events: Vec<Vec<Label>>, stakes: Vec<f64>, worst_payoff: f64 },
    NoDutchBook { lp_optimum: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CoreReportRecord {
    labels: Vec<Label>,
    nonempty: bool,
    coherent: bool,
    witness: Option<Vec<f64>>,
    certificate: CertificateRecord,
}

impl CoreReport {
    /// JSON with the witness atoms and one slack per event.
    pub fn to_json(&self, space: &StateSpace) -> Result<String> {
        let n = space.len();
        let certificate = match &self.certificate {
            CoreCertificate::CoreWitness { min_slack, slacks } => CertificateRecord::CoreWitness {
                min_slack: *min_slack,
                slacks: slacks
                    .iter()
                    .enumerate()
                    .map(|(m, s)| SlackRecord { event: space.event_labels(&Event::from_mask(n, m as u64)), slack: *s })
                    .collect(),
            },
            CoreCertificate::DutchBook(b) => CertificateRecord::DutchBook {
                events: b.events.iter().map(|e| space.event_labels(e)).collect(),
                stakes: b.stakes.clone(),
                worst_payoff: b.worst_payoff,
            },
            CoreCertificate::NoDutchBook { lp_optimum } => CertificateRecord::NoDutchBook { lp_optimum: *lp_optimum },
        };
        let rec = CoreReportRecord {
            labels: space.labels().to_vec(),
            nonempty: self.nonempty,
            coherent: self.coherent,
            witness: self.witness.as_ref().map(|w| w.atoms().to_vec()),
            certificate,
        };
        Ok(serde_json::to_string_pretty(&rec)?)
    }

    pub fn from_json(s: &str) -> Result<(Arc<StateSpace>, CoreReport)> {
        let rec: CoreReportRecord = serde_json::from_str(s)?;
        let space = Arc::new(StateSpace::explicit(rec.labels)?);
        let n = space.len();
        let witness = rec.witness.map(|a| ExtendedMeasure::new(Arc::clone(&space), a)).transpose()?;
        let certificate = match rec.certificate {
            CertificateRecord::CoreWitness { min_slack, slacks } => {
                if n >= 32 || slacks.len() != 1 << n {
                    return Err(Error::Parse("a core witness needs one slack per event".into()));
                }
                let mut out = vec![f64::NAN; 1 << n];
                for s in slacks {
                    let m = space.event(&s.event)?.to_mask().expect("small space") as usize;
                    out[m] = s.slack;
                }
                if out.iter().any(|v| v.is_nan()) {
                    return Err(Error::Parse("slack list repeats an event".into()));
                }
                CoreCertificate::CoreWitness { min_slack, slacks: out }
            }
            CertificateRecord::DutchBook { events, stakes, worst_payoff } => CoreCertificate::DutchBook(DutchBookCandidate {
                events: events.iter().map(|e| space.event(e)).collect::<Result<_>>()?,
                stakes,
                worst_payoff,
            }),
            CertificateRecord::NoDutchBook { lp_optimum } => CoreCertificate::NoDutchBook { lp_optimum },
        };
        Ok((space, CoreReport { nonempty: rec.nonempty, witness, coherent: rec.coherent, certificate }))
    }
}
