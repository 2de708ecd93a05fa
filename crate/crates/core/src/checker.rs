//! Explicit-state PCTL model checking over a [`Dtmc`].
//!
//! Unbounded until is solved in two phases: a graph precomputation finds the
//! states with probability exactly 0 and exactly 1, then Gauss-Seidel
//! iteration solves the linear system on the remaining states. Values on the
//! precomputed sets are therefore exact.

use std::collections::VecDeque;

use thiserror::Error;

use crate::dtmc::{Dtmc, StateSet};
use crate::pctl::{Comparison, PathFormula, ProbBound, Query, StateFormula};

/// Slack applied toward satisfaction when comparing against a threshold.
pub const THRESHOLD_SLACK: f64 = 1e-12;
/// Default convergence bound on the largest per-state update.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: u64 = 1_000_000;
/// Environment variable overriding the iteration cap.
pub const MAX_ITERS_ENV: &str = "SITGRID_MAX_ITERS";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("P=? may only appear at the root of a query")]
    QuantitativeNotAtRoot,
    #[error("filter state `{0}` is not a state of the model")]
    UnknownFilterState(String),
    #[error("initial state `{0}` is not a state of the model")]
    UnknownInitialState(String),
    #[error("Gauss-Seidel did not converge after {iterations} iterations (last max update {residual:e})")]
    NonConvergence { iterations: u64, residual: f64 },
    #[error("{MAX_ITERS_ENV} must be a non-negative integer, got `{0}`")]
    BadMaxIters(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iters: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

impl SolverOptions {
    /// Defaults, with the iteration cap taken from `SITGRID_MAX_ITERS` if set.
    pub fn from_env() -> Result<Self, CheckError> {
        let mut opts = Self::default();
        if let Ok(raw) = std::env::var(MAX_ITERS_ENV) {
            opts.max_iters = raw
                .trim()
                .parse()
                .map_err(|_| CheckError::BadMaxIters(raw.clone()))?;
        }
        Ok(opts)
    }
}

impl Comparison {
    /// `value op bound`, with [`THRESHOLD_SLACK`] in favour of satisfaction.
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Comparison::Lt => value < bound + THRESHOLD_SLACK,
            Comparison::Le => value <= bound + THRESHOLD_SLACK,
            Comparison::Gt => value > bound - THRESHOLD_SLACK,
            Comparison::Ge => value >= bound - THRESHOLD_SLACK,
        }
    }
}

/// Per-state probabilities of a path formula.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    values: Vec<f64>,
    /// Canonical text of the path formula the values belong to.
    pub provenance: String,
}

impl ProbVector {
    fn new(mut values: Vec<f64>, provenance: String) -> Self {
        for v in &mut values {
            *v = v.clamp(0.0, 1.0);
        }
        Self { values, provenance }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn get(&self, dtmc: &Dtmc, id: &str) -> Option<f64> {
        dtmc.index_of(id).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub query: Query,
    /// State the verdict and value refer to.
    pub state: String,
    /// Probability at `state`, for probabilistic root formulas.
    pub value: Option<f64>,
    pub values: Option<ProbVector>,
    /// Satisfying states, for non-quantitative root formulas.
    pub sat_set: Option<StateSet>,
    /// `None` for `P=?`, which has no verdict.
    pub verdict: Option<bool>,
}

impl CheckResult {
    /// Threshold of the root operator, if it has one.
    pub fn threshold(&self) -> Option<(Comparison, f64)> {
        match &self.query.formula {
            StateFormula::Prob(ProbBound::Threshold(op, p), _) => Some((*op, *p)),
            _ => None,
        }
    }

    pub fn violated(&self) -> bool {
        self.verdict == Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RankEntry {
    pub code: String,
    pub probability: f64,
}

/// Situations ordered from most to least critical.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RankReport {
    pub provenance: String,
    pub entries: Vec<RankEntry>,
}

/// Model checker bound to one immutable model.
#[derive(Debug, Clone, Copy)]
pub struct Checker<'a> {
    dtmc: &'a Dtmc,
    options: SolverOptions,
}

impl<'a> Checker<'a> {
    pub fn new(dtmc: &'a Dtmc) -> Self {
        Self {
            dtmc,
            options: SolverOptions::default(),
        }
    }

    pub fn with_options(dtmc: &'a Dtmc, options: SolverOptions) -> Self {
        Self { dtmc, options }
    }

    pub fn dtmc(&self) -> &'a Dtmc {
        self.dtmc
    }

    /// States satisfying a state formula.
    pub fn sat(&self, formula: &StateFormula) -> Result<StateSet, CheckError> {
        let n = self.dtmc.len();
        Ok(match formula {
            StateFormula::True => StateSet::full(n),
            StateFormula::False => StateSet::empty(n),
            StateFormula::Atom(a) => self.dtmc.states_labelled(a),
            StateFormula::Not(x) => self.sat(x)?.complement(),
            StateFormula::And(a, b) => self.sat(a)?.intersection(&self.sat(b)?),
            StateFormula::Prob(ProbBound::Query, _) => {
                return Err(CheckError::QuantitativeNotAtRoot)
            }
            StateFormula::Prob(ProbBound::Threshold(op, p), path) => {
                let values = self.path_probabilities(path)?;
                StateSet::from_indices(n, (0..n).filter(|&s| op.holds(values.at(s), *p)))
            }
        })
    }

    /// Probabilities of a path formula from every state.
    pub fn path_probabilities(&self, path: &PathFormula) -> Result<ProbVector, CheckError> {
        let mut v = match path {
            PathFormula::Next(x) => self.prob_next(&self.sat(x)?),
            PathFormula::Until(a, b) => self.prob_until(&self.sat(a)?, &self.sat(b)?)?,
            PathFormula::BoundedUntil(a, b, k) => {
                self.prob_bounded_until(&self.sat(a)?, &self.sat(b)?, *k)
            }
        };
        v.provenance = path.to_string();
        Ok(v)
    }

    pub fn prob_next(&self, target: &StateSet) -> ProbVector {
        let values = self
            .dtmc
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|(t, _)| target.contains(*t))
                    .map(|(_, p)| p)
                    .sum()
            })
            .collect();
        ProbVector::new(values, "X".into())
    }

    /// `phi1 U<=k phi2` by `k` rounds of backward value propagation.
    pub fn prob_bounded_until(&self, phi1: &StateSet, phi2: &StateSet, k: u64) -> ProbVector {
        let n = self.dtmc.len();
        let mut x: Vec<f64> = (0..n)
            .map(|s| if phi2.contains(s) { 1.0 } else { 0.0 })
            .collect();
        let active: Vec<usize> = phi1.difference(phi2).iter().collect();
        let mut next = x.clone();
        for _ in 0..k {
            for &s in &active {
                next[s] = self.dtmc.row(s).iter().map(|&(t, p)| p * x[t]).sum();
            }
            std::mem::swap(&mut x, &mut next);
        }
        ProbVector::new(x, "U<=k".into())
    }

    /// States where `phi1 U phi2` holds with probability 0 and 1 respectively.
    pub fn prob01(&self, phi1: &StateSet, phi2: &StateSet) -> (StateSet, StateSet) {
        let pred = self.dtmc.predecessors();
        let can_reach = backward_closure(&pred, phi2.clone(), phi1);
        let prob0 = can_reach.complement();
        let via = phi1.difference(phi2);
        let may_fail = backward_closure(&pred, prob0.clone(), &via);
        (prob0, may_fail.complement())
    }

    /// `phi1 U phi2`: exact on Prob0/Prob1, Gauss-Seidel elsewhere.
    pub fn prob_until(&self, phi1: &StateSet, phi2: &StateSet) -> Result<ProbVector, CheckError> {
        let n = self.dtmc.len();
        let (prob0, prob1) = self.prob01(phi1, phi2);
        let mut x: Vec<f64> = (0..n)
            .map(|s| if prob1.contains(s) { 1.0 } else { 0.0 })
            .collect();
        let maybe: Vec<usize> = prob0.union(&prob1).complement().iter().collect();
        if maybe.is_empty() {
            return Ok(ProbVector::new(x, "U".into()));
        }
        let mut residual = f64::INFINITY;
        for _ in 0..self.options.max_iters {
            residual = 0.0;
            for &s in &maybe {
                let mut stay = 0.0;
                let mut flow = 0.0;
                for &(t, p) in self.dtmc.row(s) {
                    if t == s {
                        stay += p;
                    } else {
                        flow += p * x[t];
                    }
                }
                let updated = flow / (1.0 - stay);
                residual = residual.max((updated - x[s]).abs());
                x[s] = updated;
            }
            if residual < self.options.tolerance {
                return Ok(ProbVector::new(x, "U".into()));
            }
        }
        Err(CheckError::NonConvergence {
            iterations: self.options.max_iters,
            residual,
        })
    }

    /// Evaluates a query at its filter state, or at the model's initial state.
    pub fn check(&self, query: &Query) -> Result<CheckResult, CheckError> {
        let (state, index) = match &query.filter_state {
            Some(s) => (
                s.clone(),
                self.dtmc
                    .index_of(s)
                    .ok_or_else(|| CheckError::UnknownFilterState(s.clone()))?,
            ),
            None => (
                self.dtmc.initial().to_string(),
                self.dtmc
                    .initial_index()
                    .ok_or_else(|| CheckError::UnknownInitialState(self.dtmc.initial().into()))?,
            ),
        };
        let mut result = CheckResult {
            query: query.clone(),
            state,
            value: None,
            values: None,
            sat_set: None,
            verdict: None,
        };
        match &query.formula {
            StateFormula::Prob(bound, path) => {
                let values = self.path_probabilities(path)?;
                result.value = Some(values.at(index));
                if let ProbBound::Threshold(op, p) = bound {
                    result.verdict = Some(op.holds(values.at(index), *p));
                    result.sat_set = Some(StateSet::from_indices(
                        self.dtmc.len(),
                        (0..self.dtmc.len()).filter(|&s| op.holds(values.at(s), *p)),
                    ));
                }
                result.values = Some(values);
            }
            formula => {
                let sat = self.sat(formula)?;
                result.verdict = Some(sat.contains(index));
                result.sat_set = Some(sat);
            }
        }
        Ok(result)
    }

    /// Ranks every situation state by the probability of `path`, highest
    /// first, ties broken by code.
    pub fn rank_situations(&self, path: &PathFormula) -> Result<RankReport, CheckError> {
        let values = self.path_probabilities(path)?;
        let mut entries: Vec<RankEntry> = self
            .dtmc
            .situation_indices()
            .map(|i| RankEntry {
                code: self.dtmc.states()[i].clone(),
                probability: values.at(i),
            })
            .collect();
        entries.sort_by(|a, b| {
            b.probability
                .total_cmp(&a.probability)
                .then_with(|| a.code.cmp(&b.code))
        });
        Ok(RankReport {
            provenance: values.provenance,
            entries,
        })
    }
}

fn backward_closure(pred: &[Vec<usize>], seed: StateSet, through: &StateSet) -> StateSet {
    let mut reached = seed;
    let mut queue: VecDeque<usize> = reached.iter().collect();
    while let Some(t) = queue.pop_front() {
        for &s in &pred[t] {
            if through.contains(s) && reached.insert(s) {
                queue.push_back(s);
            }
        }
    }
    reached
}
