//! Finite probabilistic transition systems.
//!
//! A system has a shared header of atom names, a `[0,1]` valuation of each
//! atom at each state, and per state either a probability distribution over
//! successors (weights summing to exactly 1) or the termination marker.
//! Values of [`TransitionSystem`] are always validated; untrusted input goes
//! through [`RawSystem`] or [`SystemBuilder`].

mod json;
mod random;
mod structure;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, Rational};

pub use json::{system_from_json, system_to_json};
pub use random::random_system;
pub use structure::{
    check_morphism, component_count, disjoint_union, gaifman_distance, neighborhood, restrict,
    unravel, MorphismCandidate, MorphismReport, Restriction, Union, Unravelling,
};

/// Dense 0-based index of a state within its owning system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("state {state}: successor weights sum to {sum}, expected 0 or 1")]
    WeightSum { state: String, sum: Rational },
    #[error("state {state}: {what} = {value} is outside [0,1]")]
    Range {
        state: String,
        what: String,
        value: Rational,
    },
    #[error("state {state}: successor {target} does not exist")]
    DanglingState { state: String, target: String },
    #[error("atom headers differ: {left:?} vs {right:?}")]
    AtomMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },
    #[error("state {state}: unknown atom {atom:?}")]
    UnknownAtom { state: String, atom: String },
    #[error("duplicate atom {0:?} in header")]
    DuplicateAtom(String),
    #[error("duplicate state label {0:?}")]
    DuplicateLabel(String),
    #[error("no state labelled {0:?}")]
    UnknownState(String),
    #[error("state id {0} out of range")]
    InvalidStateId(usize),
    #[error("a system needs at least one state")]
    Empty,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("{at}: {message}")]
    Format { at: String, message: String },
}

/// Successor distribution of a transient state: strictly positive weights
/// summing to exactly 1, sorted by target id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    entries: Vec<(StateId, Rational)>,
}

impl Distribution {
    pub fn entries(&self) -> &[(StateId, Rational)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.entries.iter().map(|(s, _)| *s)
    }

    pub fn weight(&self, target: StateId) -> Rational {
        match self.entries.binary_search_by_key(&target, |(s, _)| *s) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Builds a distribution from `(target, weight)` pairs. Zero weights are
    /// dropped and repeated targets summed; the result must sum to 1.
    pub fn from_weights(
        weights: impl IntoIterator<Item = (StateId, Rational)>,
    ) -> Result<Self, SystemError> {
        let mut merged: BTreeMap<StateId, Rational> = BTreeMap::new();
        for (s, w) in weights {
            if w.is_negative() {
                return Err(SystemError::Range {
                    state: "?".into(),
                    what: format!("weight to {s}"),
                    value: w,
                });
            }
            *merged.entry(s).or_insert_with(Rational::zero) += w;
        }
        let entries: Vec<_> = merged.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        let sum: Rational = entries.iter().map(|(_, w)| w).sum();
        if !sum.is_one() {
            return Err(SystemError::WeightSum {
                state: "?".into(),
                sum,
            });
        }
        Ok(Self { entries })
    }

    /// Unchecked construction for callers that already hold a normalized,
    /// sorted, positive weight list.
    pub(crate) fn from_sorted_unchecked(entries: Vec<(StateId, Rational)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Self { entries }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Successors {
    Terminating,
    Distribution(Distribution),
}

impl Successors {
    pub fn is_terminating(&self) -> bool {
        matches!(self, Successors::Terminating)
    }

    pub fn distribution(&self) -> Option<&Distribution> {
        match self {
            Successors::Terminating => None,
            Successors::Distribution(d) => Some(d),
        }
    }

    pub fn weight(&self, target: StateId) -> Rational {
        self.distribution()
            .map_or_else(Rational::zero, |d| d.weight(target))
    }

    pub fn entries(&self) -> &[(StateId, Rational)] {
        self.distribution().map_or(&[], |d| d.entries())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub label: String,
    /// One entry per atom of the owning system, in header order.
    pub valuation: Vec<Rational>,
    pub successors: Successors,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    atoms: Vec<String>,
    states: Vec<State>,
}

impl TransitionSystem {
    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn atom_index(&self, name: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == name)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + Clone {
        (0..self.states.len()).map(StateId)
    }

    pub fn state(&self, s: StateId) -> &State {
        &self.states[s.0]
    }

    pub fn label(&self, s: StateId) -> &str {
        &self.states[s.0].label
    }

    pub fn find(&self, label: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s.label == label)
            .map(StateId)
    }

    pub fn lookup(&self, label: &str) -> Result<StateId, SystemError> {
        self.find(label)
            .ok_or_else(|| SystemError::UnknownState(label.to_string()))
    }

    pub fn check_id(&self, s: StateId) -> Result<StateId, SystemError> {
        if s.0 < self.states.len() {
            Ok(s)
        } else {
            Err(SystemError::InvalidStateId(s.0))
        }
    }

    pub fn value(&self, atom: usize, s: StateId) -> &Rational {
        &self.states[s.0].valuation[atom]
    }

    pub fn successors(&self, s: StateId) -> &Successors {
        &self.states[s.0].successors
    }

    pub fn is_terminating(&self, s: StateId) -> bool {
        self.states[s.0].successors.is_terminating()
    }

    /// Transition weight `π(a, b)`.
    pub fn weight(&self, a: StateId, b: StateId) -> Rational {
        self.states[a.0].successors.weight(b)
    }

    pub fn same_atoms(&self, other: &TransitionSystem) -> Result<(), SystemError> {
        if self.atoms == other.atoms {
            Ok(())
        } else {
            Err(SystemError::AtomMismatch {
                left: self.atoms.clone(),
                right: other.atoms.clone(),
            })
        }
    }

    /// `max_p |p(a) - p(b)|` over the shared header, with `b` in `other`.
    pub fn atom_gap(&self, a: StateId, other: &TransitionSystem, b: StateId) -> Rational {
        (0..self.atoms.len())
            .map(|p| rational::abs_diff(self.value(p, a), other.value(p, b)))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// The atom realizing [`atom_gap`](Self::atom_gap), if any atom exists.
    pub fn widest_atom(&self, a: StateId, other: &TransitionSystem, b: StateId) -> Option<usize> {
        (0..self.atoms.len()).max_by(|&p, &q| {
            let gp = rational::abs_diff(self.value(p, a), other.value(p, b));
            let gq = rational::abs_diff(self.value(q, a), other.value(q, b));
            // earliest atom wins ties
            gp.cmp(&gq).then(q.cmp(&p))
        })
    }

    pub(crate) fn from_parts_unchecked(atoms: Vec<String>, states: Vec<State>) -> Self {
        Self { atoms, states }
    }

    pub fn into_raw(self) -> RawSystem {
        let atoms = self.atoms.clone();
        RawSystem {
            states: self
                .states
                .into_iter()
                .map(|st| RawState {
                    valuation: atoms.iter().cloned().zip(st.valuation).collect(),
                    successors: match st.successors {
                        Successors::Terminating => None,
                        Successors::Distribution(d) => {
                            Some(d.entries.into_iter().map(|(s, w)| (s.0, w)).collect())
                        }
                    },
                    label: Some(st.label),
                })
                .collect(),
            atoms,
        }
    }
}

/// Unvalidated system description. Successor targets are plain indices
/// which may dangle; valuations are keyed by atom name and default to 0.
#[derive(Debug, Clone, Default)]
pub struct RawSystem {
    pub atoms: Vec<String>,
    pub states: Vec<RawState>,
}

#[derive(Debug, Clone, Default)]
pub struct RawState {
    pub label: Option<String>,
    pub valuation: Vec<(String, Rational)>,
    /// `None` marks a terminating state.
    pub successors: Option<Vec<(usize, Rational)>>,
}

/// Checks every system invariant exactly and returns the validated system.
pub fn validate_system(raw: RawSystem) -> Result<TransitionSystem, SystemError> {
    if raw.states.is_empty() {
        return Err(SystemError::Empty);
    }
    let mut seen_atoms = HashMap::new();
    for a in &raw.atoms {
        if seen_atoms.insert(a.clone(), ()).is_some() {
            return Err(SystemError::DuplicateAtom(a.clone()));
        }
    }
    let n = raw.states.len();
    let labels: Vec<String> = raw
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| s.label.clone().unwrap_or_else(|| format!("s{i}")))
        .collect();
    let mut seen_labels = HashMap::new();
    for l in &labels {
        if seen_labels.insert(l.as_str(), ()).is_some() {
            return Err(SystemError::DuplicateLabel(l.clone()));
        }
    }

    let mut states = Vec::with_capacity(n);
    for (raw_state, label) in raw.states.into_iter().zip(labels) {
        let mut valuation = vec![Rational::zero(); raw.atoms.len()];
        for (atom, value) in raw_state.valuation {
            let idx = raw.atoms.iter().position(|a| *a == atom).ok_or_else(|| {
                SystemError::UnknownAtom {
                    state: label.clone(),
                    atom: atom.clone(),
                }
            })?;
            if !rational::is_unit_interval(&value) {
                return Err(SystemError::Range {
                    state: label,
                    what: format!("valuation of {atom}"),
                    value,
                });
            }
            valuation[idx] = value;
        }
        let successors = match raw_state.successors {
            None => Successors::Terminating,
            Some(edges) => {
                for (target, w) in &edges {
                    if *target >= n {
                        return Err(SystemError::DanglingState {
                            state: label,
                            target: format!("#{target}"),
                        });
                    }
                    if w.is_negative() || *w > Rational::one() {
                        return Err(SystemError::Range {
                            state: label,
                            what: format!("weight to #{target}"),
                            value: w.clone(),
                        });
                    }
                }
                let sum: Rational = edges.iter().map(|(_, w)| w).sum();
                if sum.is_zero() {
                    Successors::Terminating
                } else {
                    let d =
                        Distribution::from_weights(edges.into_iter().map(|(t, w)| (StateId(t), w)))
                            .map_err(|_| SystemError::WeightSum {
                                state: label.clone(),
                                sum,
                            })?;
                    Successors::Distribution(d)
                }
            }
        };
        states.push(State {
            label,
            valuation,
            successors,
        });
    }
    Ok(TransitionSystem {
        atoms: raw.atoms,
        states,
    })
}

/// Incremental construction by label, validated on [`build`](Self::build).
#[derive(Debug, Clone, Default)]
pub struct SystemBuilder {
    raw: RawSystem,
    pending_edges: Vec<(usize, String, Rational)>,
}

impl SystemBuilder {
    pub fn new<S: Into<String>>(atoms: impl IntoIterator<Item = S>) -> Self {
        Self {
            raw: RawSystem {
                atoms: atoms.into_iter().map(Into::into).collect(),
                states: Vec::new(),
            },
            pending_edges: Vec::new(),
        }
    }

    /// Adds a state, terminating until an edge is added.
    pub fn state(&mut self, label: &str) -> StateId {
        self.raw.states.push(RawState {
            label: Some(label.to_string()),
            valuation: Vec::new(),
            successors: None,
        });
        StateId(self.raw.states.len() - 1)
    }

    pub fn value(&mut self, label: &str, atom: &str, v: Rational) -> &mut Self {
        let i = self.index_of(label);
        self.raw.states[i].valuation.push((atom.to_string(), v));
        self
    }

    /// Edge `from -> to` with weight `w`; `to` may be declared later.
    pub fn edge(&mut self, from: &str, to: &str, w: Rational) -> &mut Self {
        let i = self.index_of(from);
        self.pending_edges.push((i, to.to_string(), w));
        self
    }

    fn index_of(&self, label: &str) -> usize {
        self.raw
            .states
            .iter()
            .position(|s| s.label.as_deref() == Some(label))
            .unwrap_or_else(|| panic!("state {label:?} not declared"))
    }

    pub fn build(mut self) -> Result<TransitionSystem, SystemError> {
        for (from, to, w) in std::mem::take(&mut self.pending_edges) {
            let target = self
                .raw
                .states
                .iter()
                .position(|s| s.label.as_deref() == Some(to.as_str()))
                .ok_or_else(|| SystemError::DanglingState {
                    state: self.raw.states[from].label.clone().unwrap_or_default(),
                    target: to.clone(),
                })?;
            self.raw.states[from]
                .successors
                .get_or_insert_with(Vec::new)
                .push((target, w));
        }
        validate_system(self.raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::perturbed_pair;
    use crate::rational::ratio;

    #[test]
    fn perturbed_pair_fixture_validates() {
        let sys = perturbed_pair(&ratio(1, 4));
        assert_eq!(sys.state_count(), 10);
        let x = sys.lookup("x").unwrap();
        assert_eq!(sys.successors(x).entries().len(), 2);
        assert!(sys.is_terminating(sys.lookup("x3").unwrap()));
    }

    #[test]
    fn single_state_without_edges_terminates() {
        let mut b = SystemBuilder::new(Vec::<String>::new());
        b.state("only");
        let sys = b.build().unwrap();
        assert!(sys.is_terminating(StateId(0)));
    }

    #[test]
    fn partial_weight_sum_is_rejected() {
        let mut b = SystemBuilder::new(Vec::<String>::new());
        b.state("a");
        b.state("b");
        b.edge("a", "a", ratio(1, 2)).edge("a", "b", ratio(1, 3));
        match b.build() {
            Err(SystemError::WeightSum { sum, .. }) => assert_eq!(sum, ratio(5, 6)),
            other => panic!("expected WeightSum, got {other:?}"),
        }
    }

    #[test]
    fn valuation_out_of_range_is_rejected() {
        let mut b = SystemBuilder::new(["p"]);
        b.state("a");
        b.value("a", "p", ratio(3, 2));
        assert!(matches!(b.build(), Err(SystemError::Range { .. })));
    }

    #[test]
    fn dangling_target_is_rejected() {
        let raw = RawSystem {
            atoms: vec![],
            states: vec![RawState {
                label: None,
                valuation: vec![],
                successors: Some(vec![(3, ratio(1, 1))]),
            }],
        };
        assert!(matches!(
            validate_system(raw),
            Err(SystemError::DanglingState { .. })
        ));
    }

    #[test]
    fn unknown_atom_and_duplicates() {
        let mut b = SystemBuilder::new(["p"]);
        b.state("a");
        b.value("a", "q", ratio(1, 2));
        assert!(matches!(b.build(), Err(SystemError::UnknownAtom { .. })));

        let mut b = SystemBuilder::new(["p"]);
        b.state("a");
        b.state("a");
        assert!(matches!(b.build(), Err(SystemError::DuplicateLabel(_))));

        let b = SystemBuilder::new(["p", "p"]);
        let mut b = b;
        b.state("a");
        assert!(matches!(b.build(), Err(SystemError::DuplicateAtom(_))));
    }

    #[test]
    fn zero_weights_collapse_to_termination() {
        let mut b = SystemBuilder::new(Vec::<String>::new());
        b.state("a");
        b.edge("a", "a", ratio(0, 1));
        let sys = b.build().unwrap();
        assert!(sys.is_terminating(StateId(0)));
    }

    #[test]
    fn raw_round_trip_preserves_system() {
        let sys = perturbed_pair(&ratio(1, 10));
        let back = validate_system(sys.clone().into_raw()).unwrap();
        assert_eq!(back, sys);
    }
}
