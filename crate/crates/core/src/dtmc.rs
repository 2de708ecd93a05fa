//! Discrete-time Markov chain synthesized from an augmented grid.
//!
//! States are the covered situations, in grid order, followed by one state
//! per failure label in lexicographic order. Failure states are absorbing:
//! their only transition is a probability-one self-loop.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::estimation::{AugmentedGrid, SuccessorKey, ROW_TOLERANCE};

/// Proposition carried by every failure state.
pub const FAIL_PROPOSITION: &str = "fail";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DtmcError {
    #[error("initial situation `{0}` is not covered by the grid")]
    InitialUncovered(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("synthesized model is invalid: {}", join(.0))]
    Invalid(Vec<Diagnostic>),
}

fn join(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    RowSum {
        state: String,
        sum: f64,
    },
    ProbabilityRange {
        state: String,
        target: usize,
        prob: f64,
    },
    TargetOutOfRange {
        state: String,
        target: usize,
    },
    NotAbsorbing {
        state: String,
    },
    MissingIdentity {
        state: String,
    },
    MissingFailProposition {
        state: String,
    },
    DuplicateIdentity {
        label: String,
        states: Vec<String>,
    },
    UnknownInitial {
        initial: String,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::RowSum { state, sum } => {
                write!(f, "state `{state}`: outgoing probabilities sum to {sum}, not 1")
            }
            Diagnostic::ProbabilityRange { state, target, prob } => write!(
                f,
                "state `{state}`: probability {prob} to state #{target} is outside [0,1]"
            ),
            Diagnostic::TargetOutOfRange { state, target } => {
                write!(f, "state `{state}`: transition to nonexistent state #{target}")
            }
            Diagnostic::NotAbsorbing { state } => write!(
                f,
                "failure state `{state}` is not absorbing (needs a single self-loop of probability 1)"
            ),
            Diagnostic::MissingIdentity { state } => {
                write!(f, "state `{state}` does not carry its identity proposition")
            }
            Diagnostic::MissingFailProposition { state } => {
                write!(f, "failure state `{state}` does not carry proposition `fail`")
            }
            Diagnostic::DuplicateIdentity { label, states } => write!(
                f,
                "identity proposition `{label}` labels several states: {}",
                states.join(", ")
            ),
            Diagnostic::UnknownInitial { initial } => {
                write!(f, "initial state `{initial}` is not a state of the model")
            }
        }
    }
}

/// Dense set of state indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSet(Vec<bool>);

impl StateSet {
    pub fn empty(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn full(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut set = Self::empty(n);
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub fn universe(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn insert(&mut self, i: usize) -> bool {
        !std::mem::replace(&mut self.0[i], true)
    }

    pub fn len(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|b| !b).collect())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| *a && *b).collect())
    }

    pub fn union(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| *a || *b).collect())
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a && !*b)
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dtmc {
    states: Vec<String>,
    initial: String,
    /// Sparse rows sorted by target index; only positive entries.
    rows: Vec<Vec<(usize, f64)>>,
    labels: Vec<BTreeSet<String>>,
    index: HashMap<String, usize>,
}

pub fn is_failure_id(id: &str) -> bool {
    id.starts_with("fail:")
}

impl Dtmc {
    /// Assembles a model without checking it; see [`validate`].
    pub fn from_parts(
        states: Vec<String>,
        initial: impl Into<String>,
        rows: Vec<Vec<(usize, f64)>>,
        labels: Vec<BTreeSet<String>>,
    ) -> Self {
        assert_eq!(states.len(), rows.len(), "one row per state");
        assert_eq!(states.len(), labels.len(), "one label set per state");
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Self {
            states,
            initial: initial.into(),
            rows,
            labels,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    pub fn initial_index(&self) -> Option<usize> {
        self.index_of(&self.initial)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn labels(&self, i: usize) -> &BTreeSet<String> {
        &self.labels[i]
    }

    pub fn is_failure(&self, i: usize) -> bool {
        is_failure_id(&self.states[i])
    }

    /// Number of stored (positive) transitions.
    pub fn num_transitions(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Every proposition used anywhere in the label map.
    pub fn propositions(&self) -> BTreeSet<&str> {
        self.labels.iter().flatten().map(String::as_str).collect()
    }

    pub fn has_proposition(&self, prop: &str) -> bool {
        self.labels.iter().any(|l| l.contains(prop))
    }

    pub fn states_labelled(&self, prop: &str) -> StateSet {
        StateSet::from_indices(
            self.len(),
            self.labels
                .iter()
                .enumerate()
                .filter_map(|(i, l)| l.contains(prop).then_some(i)),
        )
    }

    /// Situation (non-failure) state indices, in state order.
    pub fn situation_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.is_failure(i))
    }

    /// Reverse adjacency over positive-probability edges.
    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.len()];
        for (s, row) in self.rows.iter().enumerate() {
            for &(t, p) in row {
                if p > 0.0 && t < self.len() {
                    pred[t].push(s);
                }
            }
        }
        pred
    }
}

/// Builds the chain: one state per covered code, one absorbing state per
/// failure label, grid rows copied with zero entries dropped.
pub fn synthesize(grid: &AugmentedGrid, initial: &str) -> Result<Dtmc, DtmcError> {
    if grid.row(initial).is_none() {
        return Err(DtmcError::InitialUncovered(initial.to_string()));
    }
    let failures: Vec<String> = grid.failure_labels().into_iter().collect();
    let mut states: Vec<String> = grid.covered().to_vec();
    states.extend(failures.iter().map(|l| format!("fail:{l}")));
    let index: HashMap<&str, usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    let mut rows = Vec::with_capacity(states.len());
    let mut labels = Vec::with_capacity(states.len());
    for (code, grid_row) in grid.covered().iter().zip(grid.rows()) {
        let mut row: Vec<(usize, f64)> = grid_row
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(key, p)| {
                let id = match key {
                    SuccessorKey::Situation(c) => c.clone(),
                    SuccessorKey::Failure(_) => key.to_string(),
                };
                (index[id.as_str()], *p)
            })
            .collect();
        row.sort_by_key(|&(t, _)| t);
        rows.push(row);
        labels.push(BTreeSet::from([code.clone()]));
    }
    for (offset, _) in failures.iter().enumerate() {
        let i = grid.covered().len() + offset;
        rows.push(vec![(i, 1.0)]);
        labels.push(BTreeSet::from([
            states[i].clone(),
            FAIL_PROPOSITION.to_string(),
        ]));
    }
    let dtmc = Dtmc::from_parts(states, initial, rows, labels);
    let diags = validate(&dtmc);
    if diags.is_empty() {
        Ok(dtmc)
    } else {
        Err(DtmcError::Invalid(diags))
    }
}

/// Lists every structural problem of a model; empty means valid.
pub fn validate(dtmc: &Dtmc) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = dtmc.len();
    for (i, row) in dtmc.rows.iter().enumerate() {
        let state = &dtmc.states[i];
        let mut sum = 0.0;
        for &(t, p) in row {
            if t >= n {
                out.push(Diagnostic::TargetOutOfRange {
                    state: state.clone(),
                    target: t,
                });
            }
            if !(0.0..=1.0).contains(&p) {
                out.push(Diagnostic::ProbabilityRange {
                    state: state.clone(),
                    target: t,
                    prob: p,
                });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            out.push(Diagnostic::RowSum {
                state: state.clone(),
                sum,
            });
        }
        if dtmc.is_failure(i) {
            let absorbing = row
                .iter()
                .filter(|(_, p)| *p > 0.0)
                .all(|&(t, p)| t == i && (p - 1.0).abs() <= ROW_TOLERANCE)
                && row.iter().any(|&(t, p)| t == i && p > 0.0);
            if !absorbing {
                out.push(Diagnostic::NotAbsorbing {
                    state: state.clone(),
                });
            }
            if !dtmc.labels[i].contains(FAIL_PROPOSITION) {
                out.push(Diagnostic::MissingFailProposition {
                    state: state.clone(),
                });
            }
        }
        if !dtmc.labels[i].contains(state) {
            out.push(Diagnostic::MissingIdentity {
                state: state.clone(),
            });
        }
    }
    for id in &dtmc.states {
        let holders: Vec<String> = (0..n)
            .filter(|&j| dtmc.labels[j].contains(id))
            .map(|j| dtmc.states[j].clone())
            .collect();
        if holders.len() > 1 {
            out.push(Diagnostic::DuplicateIdentity {
                label: id.clone(),
                states: holders,
            });
        }
    }
    if dtmc.initial_index().is_none() {
        out.push(Diagnostic::UnknownInitial {
            initial: dtmc.initial.clone(),
        });
    }
    out
}

/// Forward closure over positive-probability edges, including `from`.
pub fn reachable(dtmc: &Dtmc, from: &str) -> Result<StateSet, DtmcError> {
    let start = dtmc
        .index_of(from)
        .ok_or_else(|| DtmcError::UnknownState(from.to_string()))?;
    let mut seen = StateSet::empty(dtmc.len());
    let mut queue = VecDeque::from([start]);
    seen.insert(start);
    while let Some(s) = queue.pop_front() {
        for &(t, p) in dtmc.row(s) {
            if p > 0.0 && seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    Ok(seen)
}
