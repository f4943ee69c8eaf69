//! State spaces, state labels and events.
//!
//! A [`StateSpace`] is an ordered, finite list of distinct labels. Countable
//! number types (naturals, integers, rationals) are represented by explicit
//! truncation; the [`Origin`] tag records the cut so that callers can report
//! what was discarded. Everything beyond the cut is simply absent from Ω: it
//! carries no mass and an observation of it raises
//! [`Error::RestartRequired`](crate::Error::RestartRequired).
//!
//! An [`Event`] is a subset of state indices stored as a bitset. The finest
//! partition of Ω is implicitly the list of singletons in label order.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a single state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Int(i64),
    Str(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Int(v) => write!(f, "{v}"),
            Label::Str(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Label {
    fn from(v: i64) -> Self {
        Label::Int(v)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::Str(s.to_owned())
    }
}

impl Label {
    /// Parses the textual form used in CSV files: integers become
    /// [`Label::Int`], anything else a string label.
    pub fn parse(s: &str) -> Label {
        s.trim()
            .parse::<i64>()
            .map(Label::Int)
            .unwrap_or_else(|_| Label::Str(s.trim().to_owned()))
    }
}

/// How a space was obtained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    #[default]
    Explicit,
    /// {1, ..., n_max}; the tail {n_max + 1, ...} is discarded.
    TruncatedNaturals { n_max: u64 },
    /// {-n_max, ..., n_max}; integers of larger magnitude are discarded.
    TruncatedIntegers { n_max: u64 },
    /// Reduced fractions p/q with q <= max_denominator and |p/q| <= max_abs.
    TruncatedRationals { max_denominator: u64, max_abs: u64 },
}

#[derive(Debug, Clone)]
pub struct StateSpace {
    labels: Vec<Label>,
    index: HashMap<Label, usize>,
    origin: Origin,
}

impl PartialEq for StateSpace {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl StateSpace {
    pub fn explicit(labels: Vec<Label>) -> Result<Self> {
        Self::with_origin(labels, Origin::Explicit)
    }

    pub fn with_origin(labels: Vec<Label>, origin: Origin) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidSpace("state space must contain at least one state".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidSpace(format!("duplicate label {l}")));
            }
        }
        Ok(StateSpace { labels, index, origin })
    }

    /// Integer labels `1..=n`.
    pub fn range(n: usize) -> Result<Self> {
        Self::explicit((1..=n as i64).map(Label::Int).collect())
    }

    pub fn truncated_naturals(n_max: u64) -> Result<Self> {
        let labels = (1..=n_max as i64).map(Label::Int).collect();
        Self::with_origin(labels, Origin::TruncatedNaturals { n_max })
    }

    pub fn truncated_integers(n_max: u64) -> Result<Self> {
        let n = n_max as i64;
        let labels = (-n..=n).map(Label::Int).collect();
        Self::with_origin(labels, Origin::TruncatedIntegers { n_max })
    }

    pub fn truncated_rationals(max_denominator: u64, max_abs: u64) -> Result<Self> {
        if max_denominator == 0 {
            return Err(Error::InvalidSpace("max_denominator must be at least 1".into()));
        }
        let mut fractions: Vec<(i64, i64)> = Vec::new();
        let q_max = max_denominator as i64;
        let bound = max_abs as i64;
        for q in 1..=q_max {
            for p in -bound * q..=bound * q {
                if gcd(p.unsigned_abs(), q as u64) == 1 {
                    fractions.push((p, q));
                }
            }
        }
        // p1/q1 < p2/q2  <=>  p1*q2 < p2*q1 for positive denominators
        fractions.sort_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)));
        let labels = fractions
            .into_iter()
            .map(|(p, q)| Label::Str(format!("{p}/{q}")))
            .collect();
        Self::with_origin(labels, Origin::TruncatedRationals { max_denominator, max_abs })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &Label {
        &self.labels[i]
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn index_of(&self, label: &Label) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Builds an event from labels; unknown labels are an error.
    pub fn event<'a, I>(&self, labels: I) -> Result<Event>
    where
        I: IntoIterator<Item = &'a Label>,
    {
        let mut ev = Event::empty(self.len());
        for l in labels {
            let i = self
                .index_of(l)
                .ok_or_else(|| Error::InvalidEvent(format!("unknown label {l}")))?;
            ev.insert(i);
        }
        Ok(ev)
    }

    pub fn event_labels(&self, ev: &Event) -> Vec<Label> {
        ev.iter().map(|i| self.labels[i].clone()).collect()
    }

    /// `{a,b,c}` rendering used in CSV output.
    pub fn format_event(&self, ev: &Event) -> String {
        let parts: Vec<String> = ev.iter().map(|i| self.labels[i].to_string()).collect();
        format!("{{{}}}", parts.join(","))
    }

    /// Inverse of [`format_event`](Self::format_event): `{a,b,...}` with
    /// labels separated by commas.
    pub fn parse_event(&self, text: &str) -> Result<Event> {
        let inner = text
            .trim()
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or_else(|| Error::Parse(format!("event {text:?} is not of the form {{a,b,...}}")))?;
        let labels: Vec<Label> = inner.split(',').map(str::trim).filter(|t| !t.is_empty()).map(Label::parse).collect();
        self.event(&labels)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[derive(Serialize, Deserialize)]
struct SpaceRecord {
    labels: Vec<Label>,
    #[serde(default)]
    origin: Origin,
}

impl Serialize for StateSpace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SpaceRecord { labels: self.labels.clone(), origin: self.origin.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StateSpace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = SpaceRecord::deserialize(deserializer)?;
        StateSpace::with_origin(rec.labels, rec.origin).map_err(serde::de::Error::custom)
    }
}

/// Subset of state indices over a universe of fixed size.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Event {
    universe: usize,
    words: Vec<u64>,
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Event {
    pub fn empty(universe: usize) -> Self {
        Event { universe, words: vec![0; universe.div_ceil(64)] }
    }

    pub fn full(universe: usize) -> Self {
        let mut ev = Self::empty(universe);
        for i in 0..universe {
            ev.insert(i);
        }
        ev
    }

    pub fn singleton(universe: usize, i: usize) -> Self {
        assert!(i < universe, "index {i} out of range for universe {universe}");
        let mut ev = Self::empty(universe);
        ev.insert(i);
        ev
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(universe: usize, indices: I) -> Result<Self> {
        let mut ev = Self::empty(universe);
        for i in indices {
            if i >= universe {
                return Err(Error::InvalidEvent(format!("index {i} out of range for {universe} states")));
            }
            ev.insert(i);
        }
        Ok(ev)
    }

    /// Event whose members are the set bits of `mask`. Requires `universe <= 64`.
    pub fn from_mask(universe: usize, mask: u64) -> Self {
        assert!(universe <= 64, "bitmask events need universe <= 64");
        if universe < 64 {
            assert!(mask >> universe == 0, "mask {mask:#x} exceeds universe {universe}");
        }
        let mut ev = Self::empty(universe);
        if universe > 0 {
            ev.words[0] = mask;
        }
        ev
    }

    pub fn to_mask(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub(crate) fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub(crate) fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn with(&self, i: usize) -> Event {
        assert!(i < self.universe);
        let mut ev = self.clone();
        ev.insert(i);
        ev
    }

    pub fn without(&self, i: usize) -> Event {
        assert!(i < self.universe);
        let mut ev = self.clone();
        ev.remove(i);
        ev
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.universe && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.universe
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }

    fn zip_with(&self, other: &Event, f: impl Fn(u64, u64) -> u64) -> Event {
        assert_eq!(self.universe, other.universe, "events over different universes");
        Event {
            universe: self.universe,
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn union(&self, other: &Event) -> Event {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Event) -> Event {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Event) -> Event {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn symmetric_difference(&self, other: &Event) -> Event {
        self.zip_with(other, |a, b| a ^ b)
    }

    pub fn complement(&self) -> Event {
        Event::full(self.universe).difference(self)
    }

    pub fn is_subset(&self, other: &Event) -> bool {
        self.difference(other).is_empty()
    }

    pub fn is_disjoint(&self, other: &Event) -> bool {
        self.intersection(other).is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct EventRecord {
    universe: usize,
    members: Vec<usize>,
}

impl Serialize for Event {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        EventRecord { universe: self.universe, members: self.iter().collect() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Event {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = EventRecord::deserialize(deserializer)?;
        Event::from_indices(rec.universe, rec.members).map_err(serde::de::Error::custom)
    }
}

/// Every event over a universe of `n` states, in bitmask order.
pub fn all_events(n: usize) -> impl Iterator<Item = Event> {
    assert!(n < 64, "enumeration needs fewer than 64 states");
    (0..1u64 << n).map(move |m| Event::from_mask(n, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let a = Event::from_indices(5, [0, 2, 4]).unwrap();
        let b = Event::from_indices(5, [2, 3]).unwrap();
        assert_eq!(a.union(&b).iter().collect::<Vec<_>>(), vec![0, 2, 3, 4]);
        assert_eq!(a.intersection(&b).iter().collect::<Vec<_>>(), vec![2]);
        assert_eq!(a.complement().iter().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(a.symmetric_difference(&b).len(), 3);
        assert!(Event::empty(5).is_subset(&a));
        assert!(!a.is_disjoint(&b));
    }

    #[test]
    fn wide_universe() {
        let a = Event::from_indices(130, [0, 64, 129]).unwrap();
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![0, 64, 129]);
        assert_eq!(a.complement().len(), 127);
        assert!(a.to_mask().is_none());
    }

    #[test]
    fn out_of_range_index_rejected() {
        assert!(matches!(Event::from_indices(3, [3]), Err(Error::InvalidEvent(_))));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let r = StateSpace::explicit(vec![Label::Int(1), Label::Int(1)]);
        assert!(matches!(r, Err(Error::InvalidSpace(_))));
    }

    #[test]
    fn truncations() {
        let n = StateSpace::truncated_naturals(5).unwrap();
        assert_eq!(n.len(), 5);
        assert_eq!(n.label(0), &Label::Int(1));
        let z = StateSpace::truncated_integers(2).unwrap();
        assert_eq!(z.labels().len(), 5);
        assert_eq!(z.label(0), &Label::Int(-2));
        let q = StateSpace::truncated_rationals(2, 1).unwrap();
        let shown: Vec<String> = q.labels().iter().map(|l| l.to_string()).collect();
        assert_eq!(shown, ["-1/1", "-1/2", "0/1", "1/2", "1/1"]);
    }

    #[test]
    fn label_parse_and_events() {
        let s = StateSpace::explicit(vec![Label::Int(1), "b".into(), Label::Int(3)]).unwrap();
        let ev = s.event(&[Label::parse("b"), Label::parse("3")]).unwrap();
        assert_eq!(s.format_event(&ev), "{b,3}");
        assert!(s.event(&[Label::Int(9)]).is_err());
    }
}
