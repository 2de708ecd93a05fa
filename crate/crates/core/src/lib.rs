//! Situation coverage analysis for autonomous-system test campaigns.
//!
//! A situation space is the product of a few finite axes. Test logs record
//! which situation a run was in at each step and whether it ended in a
//! safety violation. From the logs we estimate a transition grid over the
//! covered situations, turn it into a discrete-time Markov chain with one
//! absorbing state per failure label, and check PCTL requirements on it.

pub mod checker;
pub mod dtmc;
pub mod estimation;
pub mod export;
pub mod log_ingest;
pub mod pctl;
pub mod sampling;
pub mod situation_space;

pub use checker::{CheckError, CheckResult, Checker, RankReport, SolverOptions};
pub use dtmc::{synthesize, validate, Dtmc, DtmcError};
pub use estimation::{
    count_transitions, estimate_bayes, estimate_mle, AugmentedGrid, GridError, SuccessorKey,
};
pub use log_ingest::{parse_log, validate_log, LogError, ObservationLog, ValidatedLog};
pub use pctl::{parse, Query, StateFormula};
pub use situation_space::{SituationSpace, SpaceError};
