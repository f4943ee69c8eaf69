//! Dutch-book search.
//!
//! A book is a finite list of events `B_j` with stakes `s_j`; its payoff in
//! state ω is `Σ_j s_j (1_{B_j}(ω) - price_j)`. The book is a sure loss when
//! the payoff is negative in every state. The search solves
//!
//! ```text
//! min t  s.t.  Σ_j s_j (1_{B_j}(ω) - price_j) <= t  for all ω,   Σ_j |s_j| <= 1
//! ```
//!
//! and reports a book only when the optimum is below `-LP_TOL`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::measure::{ExtendedMeasure, LP_TOL};
use crate::numeric::exact_sum;
use crate::space::{Event, Label, StateSpace};

/// Hard cap on the number of events handed to one LP.
pub const MAX_BOOK_EVENTS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutchBookCandidate {
    pub events: Vec<Event>,
    pub stakes: Vec<f64>,
    /// Largest payoff over all states; negative for a sure loss.
    pub worst_payoff: f64,
}

impl DutchBookCandidate {
    pub fn payoff(&self, state: usize, prices: &[f64]) -> f64 {
        exact_sum(self.events.iter().zip(&self.stakes).zip(prices).map(|((b, s), p)| {
            let hit = if b.contains(state) { 1.0 } else { 0.0 };
            s * (hit - p)
        }))
    }
}

/// Whether stakes may be negative (selling a bet) or only nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StakeSign {
    Free,
    NonNegative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DutchBookSearch {
    /// Optimal `t` of the LP; never positive since `s = 0` is feasible.
    pub lp_optimum: f64,
    pub candidate: Option<DutchBookCandidate>,
}

/// Atoms that lie in no event of negative value. An atom qualifies iff it is
/// nonnegative and stays so after adding every negative atom.
pub fn bettable_family(p: &ExtendedMeasure) -> Vec<usize> {
    let negatives: Vec<f64> = p.atoms().iter().copied().filter(|&a| a < 0.0).collect();
    (0..p.len())
        .filter(|&w| {
            let a = p.atom(w);
            a >= 0.0 && exact_sum(std::iter::once(a).chain(negatives.iter().copied())) >= 0.0
        })
        .collect()
}

/// All nonempty subsets of `atoms` with at most `max_size` elements, in
/// order of increasing size then lexicographic position.
pub fn bounded_unions(universe: usize, atoms: &[usize], max_size: usize) -> Vec<Event> {
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    for size in 1..=max_size.min(atoms.len()) {
        combinations(atoms, size, 0, &mut chosen, &mut |c| {
            out.push(Event::from_indices(universe, c.iter().copied()).expect("atom indices in range"));
        });
    }
    out
}

fn combinations(atoms: &[usize], size: usize, start: usize, chosen: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
    if chosen.len() == size {
        emit(chosen);
        return;
    }
    for i in start..atoms.len() {
        if atoms.len() - i < size - chosen.len() {
            break;
        }
        chosen.push(atoms[i]);
        combinations(atoms, size, i + 1, chosen, emit);
        chosen.pop();
    }
}

/// Looks for a sure loss against `P` using bets on unions of at most
/// `max_events` bettable atoms, priced at their `P` values.
pub fn find_dutch_book(p: &ExtendedMeasure, max_events: usize) -> Result<Option<DutchBookCandidate>> {
    Ok(measure_book_search(p, max_events)?.candidate)
}

/// [`find_dutch_book`] with the LP optimum kept.
pub fn measure_book_search(p: &ExtendedMeasure, max_events: usize) -> Result<DutchBookSearch> {
    if max_events == 0 {
        return Err(Error::InvalidConfig("max_events must be at least 1".into()));
    }
    let atoms = bettable_family(p);
    let events = bounded_unions(p.len(), &atoms, max_events);
    let prices: Vec<f64> = events.iter().map(|b| p.eval_unchecked(b)).collect();
    dutch_book_search(p.len(), &events, &prices, StakeSign::Free)
}

/// Priced events read from `{"labels": [...], "prices": [{"event": [...], "price": x}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub labels: Vec<Label>,
    pub prices: Vec<PricedEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricedEvent {
    pub event: Vec<Label>,
    pub price: f64,
}

impl PriceTable {
    /// Free-sign search over the listed events at the listed prices.
    pub fn search(&self) -> Result<(Arc<StateSpace>, DutchBookSearch)> {
        let space = Arc::new(StateSpace::explicit(self.labels.clone())?);
        let events = self.prices.iter().map(|e| space.event(&e.event)).collect::<Result<Vec<_>>>()?;
        let prices: Vec<f64> = self.prices.iter().map(|e| e.price).collect();
        if let Some(p) = prices.iter().find(|p| !p.is_finite()) {
            return Err(Error::Parse(format!("non-finite price {p}")));
        }
        let found = dutch_book_search(space.len(), &events, &prices, StakeSign::Free)?;
        Ok((space, found))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SearchRecord {
    labels: Vec<Label>,
    coherent: bool,
    lp_optimum: f64,
    dutch_book: Option<BookRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BookRecord {
    events: Vec<Vec<Label>>,
    stakes: Vec<f64>,
    worst_payoff: f64,
}

impl DutchBookSearch {
    pub fn coherent(&self) -> bool {
        self.candidate.is_none()
    }

    /// JSON with the book's events written as label lists.
    pub fn to_json(&self, space: &StateSpace) -> Result<String> {
        let rec = SearchRecord {
            labels: space.labels().to_vec(),
            coherent: self.coherent(),
            lp_optimum: self.lp_optimum,
            dutch_book: self.candidate.as_ref().map(|b| BookRecord {
                events: b.events.iter().map(|e| space.event_labels(e)).collect(),
                stakes: b.stakes.clone(),
                worst_payoff: b.worst_payoff,
            }),
        };
        Ok(serde_json::to_string_pretty(&rec)?)
    }

    pub fn from_json(s: &str) -> Result<(Arc<StateSpace>, DutchBookSearch)> {
        let rec: SearchRecord = serde_json::from_str(s)?;
        let space = Arc::new(StateSpace::explicit(rec.labels)?);
        let candidate = match rec.dutch_book {
            None => None,
            Some(b) => Some(DutchBookCandidate {
                events: b.events.iter().map(|e| space.event(e)).collect::<Result<_>>()?,
                stakes: b.stakes,
                worst_payoff: b.worst_payoff,
            }),
        };
        Ok((space, DutchBookSearch { lp_optimum: rec.lp_optimum, candidate }))
    }
}

/// Solves the Dutch-book LP for arbitrary priced events. Prices need not come
/// from a valid measure, which makes this the entry point for tampered tables.
pub fn dutch_book_search(n_states: usize, events: &[Event], prices: &[f64], sign: StakeSign) -> Result<DutchBookSearch> {
    if events.len() != prices.len() {
        return Err(Error::InvalidConfig(format!("{} events but {} prices", events.len(), prices.len())));
    }
    if events.len() > MAX_BOOK_EVENTS {
        return Err(Error::SpaceTooLarge { size: events.len(), cap: MAX_BOOK_EVENTS });
    }
    if let Some(b) = events.iter().find(|b| b.universe() != n_states) {
        return Err(Error::InvalidEvent(format!("event over {} states, expected {n_states}", b.universe())));
    }
    if events.is_empty() {
        return Ok(DutchBookSearch { lp_optimum: 0.0, candidate: None });
    }

    // columns: u_j (and v_j when free), then t+ and t-
    let n = events.len();
    let stake_cols = if sign == StakeSign::Free { 2 * n } else { n };
    let width = stake_cols + 2;
    let mut objective = vec![0.0; width];
    objective[stake_cols] = 1.0;
    objective[stake_cols + 1] = -1.0;
    let mut lp = LinearProgram::minimize(objective);

    for w in 0..n_states {
        let mut row = vec![0.0; width];
        for (j, (b, p)) in events.iter().zip(prices).enumerate() {
            let c = if b.contains(w) { 1.0 } else { 0.0 } - p;
            row[j] = c;
            if sign == StakeSign::Free {
                row[n + j] = -c;
            }
        }
        row[stake_cols] = -1.0;
        row[stake_cols + 1] = 1.0;
        lp.add(row, Relation::Le, 0.0);
    }
    let mut budget = vec![1.0; width];
    budget[stake_cols] = 0.0;
    budget[stake_cols + 1] = 0.0;
    lp.add(budget, Relation::Le, 1.0);

    let sol = match lp.solve()? {
        LpOutcome::Optimal(s) => s,
        other => {
            return Err(Error::NumericalFailure(format!("Dutch-book LP ended as {other:?}")));
        }
    };
    let stakes: Vec<f64> = (0..n)
        .map(|j| if sign == StakeSign::Free { sol.x[j] - sol.x[n + j] } else { sol.x[j] })
        .collect();

    let mut book = DutchBookCandidate { events: events.to_vec(), stakes, worst_payoff: 0.0 };
    book.worst_payoff = (0..n_states).map(|w| book.payoff(w, prices)).fold(f64::NEG_INFINITY, f64::max);

    let candidate = if sol.objective < -LP_TOL && book.worst_payoff < -LP_TOL {
        // drop unused bets so the certificate is readable
        let keep: Vec<usize> = (0..n).filter(|&j| book.stakes[j].abs() > 1e-15).collect();
        Some(DutchBookCandidate {
            events: keep.iter().map(|&j| book.events[j].clone()).collect(),
            stakes: keep.iter().map(|&j| book.stakes[j]).collect(),
            worst_payoff: book.worst_payoff,
        })
    } else {
        None
    };
    Ok(DutchBookSearch { lp_optimum: sol.objective, candidate })
}
