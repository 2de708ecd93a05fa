//! Transition counting and estimation of the augmented coverage grid.
//!
//! Each covered situation gets a categorical distribution over its successor
//! keys: other covered situations, or a failure label written `fail:<label>`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::log_ingest::{Terminal, ValidatedLog};

/// Row-sum tolerance for every distribution held by a grid.
pub const ROW_TOLERANCE: f64 = 1e-9;
/// Largest row-sum deviation a grid file may carry and still be renormalized.
pub const RENORMALIZE_LIMIT: f64 = 1e-6;

const GRID_HEADER: [&str; 3] = ["from", "to", "prob"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error(
        "dead-end situation(s) {}: observed only as the last step of runs that ended normally, so no outgoing transition was seen; collect more test runs from these situations or use the Bayesian estimator with an explicit support",
        .codes.join(", ")
    )]
    DeadEnd { codes: Vec<String> },
    #[error("row `{from}`: support does not contain counted successor `{key}`")]
    MissingSupport { from: String, key: String },
    #[error("Dirichlet concentration must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("situation `{0}` is not covered by the grid")]
    Uncovered(String),
    #[error("row `{from}` sums to {sum}, not 1")]
    RowSum { from: String, sum: f64 },
    #[error("row `{from}`: probability {prob} for `{to}` is outside [0,1]")]
    ProbabilityRange { from: String, to: String, prob: f64 },
    #[error("row `{from}`: successor `{to}` is not a covered situation")]
    UncoveredSuccessor { from: String, to: String },
    #[error("situation `{0}` has more than one row")]
    DuplicateRow(String),
    #[error("row `{from}` lists successor `{to}` twice")]
    DuplicateEntry { from: String, to: String },
    #[error("`{0}` is not a valid successor key")]
    BadKey(String),
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
}

/// Successor of a situation in the grid.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SuccessorKey {
    Situation(String),
    Failure(String),
}

impl SuccessorKey {
    pub fn is_failure(&self) -> bool {
        matches!(self, SuccessorKey::Failure(_))
    }
}

impl fmt::Display for SuccessorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SuccessorKey::Situation(code) => f.write_str(code),
            SuccessorKey::Failure(label) => write!(f, "fail:{label}"),
        }
    }
}

impl FromStr for SuccessorKey {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_prefix("fail:") {
            Some("") => Err(GridError::BadKey(s.to_string())),
            Some(label) => Ok(SuccessorKey::Failure(label.to_string())),
            None if s.is_empty() || s == "fail" => Err(GridError::BadKey(s.to_string())),
            None => Ok(SuccessorKey::Situation(s.to_string())),
        }
    }
}

/// Observed counts for one situation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRow {
    pub code: String,
    pub counts: BTreeMap<SuccessorKey, u64>,
    pub total: u64,
}

/// Sufficient statistic of a log: per observed situation, successor counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionCounts {
    /// Every observed situation, in enumeration order; rows may have zero total.
    pub rows: Vec<CountRow>,
    /// Codes of the space never observed in the log.
    pub unobserved: Vec<String>,
}

impl TransitionCounts {
    pub fn row(&self, code: &str) -> Option<&CountRow> {
        self.rows.iter().find(|r| r.code == code)
    }

    pub fn failure_labels(&self) -> BTreeSet<String> {
        self.rows
            .iter()
            .flat_map(|r| r.counts.keys())
            .filter_map(|k| match k {
                SuccessorKey::Failure(l) => Some(l.clone()),
                SuccessorKey::Situation(_) => None,
            })
            .collect()
    }
}

pub fn count_transitions(log: &ValidatedLog) -> TransitionCounts {
    let space = log.space();
    let mut rows: BTreeMap<usize, BTreeMap<SuccessorKey, u64>> = BTreeMap::new();
    for (run_index, run) in log.log().runs.iter().enumerate() {
        let ids = log.situation_ids(run_index);
        for &id in ids {
            rows.entry(id).or_default();
        }
        for (pair, step) in ids.windows(2).zip(run.steps.iter().skip(1)) {
            *rows
                .get_mut(&pair[0])
                .expect("row inserted above")
                .entry(SuccessorKey::Situation(step.code.clone()))
                .or_insert(0) += 1;
        }
        if let (Terminal::Violation(label), Some(&last)) = (&run.terminal, ids.last()) {
            *rows
                .get_mut(&last)
                .expect("row inserted above")
                .entry(SuccessorKey::Failure(label.clone()))
                .or_insert(0) += 1;
        }
    }
    let unobserved = space
        .enumerate()
        .into_iter()
        .filter(|s| !rows.contains_key(&s.id()))
        .map(|s| s.code().to_string())
        .collect();
    let rows = rows
        .into_iter()
        .map(|(id, counts)| CountRow {
            code: space
                .situation_at(id - 1)
                .expect("valid id")
                .code()
                .to_string(),
            total: counts.values().sum(),
            counts,
        })
        .collect();
    TransitionCounts { rows, unobserved }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    Mle,
    Dirichlet { alpha: f64 },
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Mle => f.write_str("mle"),
            Estimator::Dirichlet { alpha } => write!(f, "dirichlet({alpha})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorMeta {
    pub method: Estimator,
    /// Row totals, parallel to `covered`.
    pub sample_sizes: Vec<u64>,
}

pub type GridRow = Vec<(SuccessorKey, f64)>;

/// Covered situations with a distribution over successors for each.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedGrid {
    covered: Vec<String>,
    rows: Vec<GridRow>,
    unobserved: Vec<String>,
    meta: Option<EstimatorMeta>,
}

impl AugmentedGrid {
    /// Validates rows and puts each one in canonical order: situation
    /// successors in covered order, then failure keys lexicographically.
    pub fn new(covered: Vec<String>, rows: Vec<GridRow>) -> Result<Self, GridError> {
        assert_eq!(covered.len(), rows.len(), "one row per covered situation");
        let position: HashMap<&str, usize> = covered
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        if position.len() != covered.len() {
            let mut seen = HashSet::new();
            let dup = covered.iter().find(|c| !seen.insert(c.as_str())).unwrap();
            return Err(GridError::DuplicateRow(dup.clone()));
        }
        let mut sorted_rows = Vec::with_capacity(rows.len());
        for (from, mut row) in covered.iter().zip(rows) {
            let mut sum = 0.0;
            let mut keys = HashSet::new();
            for (key, prob) in &row {
                if !keys.insert(key.clone()) {
                    return Err(GridError::DuplicateEntry {
                        from: from.clone(),
                        to: key.to_string(),
                    });
                }
                if !(0.0..=1.0).contains(prob) {
                    return Err(GridError::ProbabilityRange {
                        from: from.clone(),
                        to: key.to_string(),
                        prob: *prob,
                    });
                }
                if let SuccessorKey::Situation(code) = key {
                    if !position.contains_key(code.as_str()) {
                        return Err(GridError::UncoveredSuccessor {
                            from: from.clone(),
                            to: code.clone(),
                        });
                    }
                }
                sum += prob;
            }
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(GridError::RowSum {
                    from: from.clone(),
                    sum,
                });
            }
            row.sort_by(|(a, _), (b, _)| match (a, b) {
                (SuccessorKey::Situation(x), SuccessorKey::Situation(y)) => {
                    position[x.as_str()].cmp(&position[y.as_str()])
                }
                _ => a.cmp(b),
            });
            sorted_rows.push(row);
        }
        Ok(Self {
            covered,
            rows: sorted_rows,
            unobserved: Vec::new(),
            meta: None,
        })
    }

    pub fn with_unobserved(mut self, unobserved: Vec<String>) -> Self {
        self.unobserved = unobserved;
        self
    }

    pub fn with_meta(mut self, meta: EstimatorMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn covered(&self) -> &[String] {
        &self.covered
    }

    pub fn rows(&self) -> &[GridRow] {
        &self.rows
    }

    /// Pruned situations, kept for reporting only.
    pub fn unobserved(&self) -> &[String] {
        &self.unobserved
    }

    pub fn meta(&self) -> Option<&EstimatorMeta> {
        self.meta.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.covered.is_empty()
    }

    pub fn row(&self, code: &str) -> Option<&GridRow> {
        self.covered
            .iter()
            .position(|c| c == code)
            .map(|i| &self.rows[i])
    }

    pub fn prob(&self, from: &str, to: &SuccessorKey) -> Option<f64> {
        let row = self.row(from)?;
        Some(row.iter().find(|(k, _)| k == to).map_or(0.0, |(_, p)| *p))
    }

    pub fn failure_labels(&self) -> BTreeSet<String> {
        self.rows
            .iter()
            .flatten()
            .filter_map(|(k, _)| match k {
                SuccessorKey::Failure(l) => Some(l.clone()),
                SuccessorKey::Situation(_) => None,
            })
            .collect()
    }

    /// Same covered list and the same rows, ignoring metadata.
    pub fn same_distributions(&self, other: &AugmentedGrid) -> bool {
        self.covered == other.covered && self.rows == other.rows
    }

    /// Reads a `from,to,prob` grid file. Covered order is the order in which
    /// `from` codes first appear. Rows off by at most [`RENORMALIZE_LIMIT`] are
    /// rescaled to sum to one; larger deviations are rejected.
    pub fn from_csv(text: &str) -> Result<Self, GridError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let csv_err = |e: csv::Error| GridError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        };
        if text.trim().is_empty() {
            return Err(GridError::Csv {
                line: 1,
                message: "missing header `from,to,prob`".into(),
            });
        }
        let header = reader.headers().map_err(csv_err)?.clone();
        if header.iter().collect::<Vec<_>>() != GRID_HEADER {
            return Err(GridError::Csv {
                line: 1,
                message: format!(
                    "expected header `from,to,prob`, found `{}`",
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut covered: Vec<String> = Vec::new();
        let mut rows: Vec<GridRow> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            let from = record[0].to_string();
            match from.parse::<SuccessorKey>() {
                Ok(SuccessorKey::Situation(_)) => {}
                _ => {
                    return Err(GridError::Csv {
                        line,
                        message: format!("`{from}` is not a situation code"),
                    })
                }
            }
            let to: SuccessorKey = record[1].parse().map_err(|e: GridError| GridError::Csv {
                line,
                message: e.to_string(),
            })?;
            let prob: f64 = record[2].trim().parse().map_err(|_| GridError::Csv {
                line,
                message: format!("`{}` is not a decimal probability", &record[2]),
            })?;
            if !prob.is_finite() {
                return Err(GridError::Csv {
                    line,
                    message: format!("`{}` is not a decimal probability", &record[2]),
                });
            }
            let slot = *index.entry(from.clone()).or_insert_with(|| {
                covered.push(from.clone());
                rows.push(Vec::new());
                covered.len() - 1
            });
            rows[slot].push((to, prob));
        }
        for (from, row) in covered.iter().zip(rows.iter_mut()) {
            let sum: f64 = row.iter().map(|(_, p)| p).sum();
            let deviation = (sum - 1.0).abs();
            if deviation > RENORMALIZE_LIMIT {
                return Err(GridError::RowSum {
                    from: from.clone(),
                    sum,
                });
            }
            if deviation > ROW_TOLERANCE {
                for (_, p) in row.iter_mut() {
                    *p /= sum;
                }
            }
        }
        Self::new(covered, rows)
    }
}

/// Maximum-likelihood (frequency ratio) estimate.
pub fn estimate_mle(counts: &TransitionCounts) -> Result<AugmentedGrid, GridError> {
    let dead: Vec<String> = counts
        .rows
        .iter()
        .filter(|r| r.total == 0)
        .map(|r| r.code.clone())
        .collect();
    if !dead.is_empty() {
        return Err(GridError::DeadEnd { codes: dead });
    }
    let covered = counts.rows.iter().map(|r| r.code.clone()).collect();
    let rows = counts
        .rows
        .iter()
        .map(|r| {
            r.counts
                .iter()
                .map(|(k, &n)| (k.clone(), n as f64 / r.total as f64))
                .collect()
        })
        .collect();
    let sample_sizes = counts.rows.iter().map(|r| r.total).collect();
    Ok(AugmentedGrid::new(covered, rows)?
        .with_unobserved(counts.unobserved.clone())
        .with_meta(EstimatorMeta {
            method: Estimator::Mle,
            sample_sizes,
        }))
}

pub type Support = BTreeMap<String, BTreeSet<SuccessorKey>>;

/// Posterior mean under a symmetric Dirichlet(`alpha`) prior over each row's
/// support: `(n_k + alpha) / (n + alpha * |support|)`.
pub fn estimate_bayes(
    counts: &TransitionCounts,
    alpha: f64,
    support: &Support,
) -> Result<AugmentedGrid, GridError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(GridError::InvalidAlpha(alpha));
    }
    let empty = BTreeSet::new();
    let mut dead = Vec::new();
    let mut rows = Vec::with_capacity(counts.rows.len());
    for r in &counts.rows {
        let keys = support.get(&r.code).unwrap_or(&empty);
        if let Some(missing) = r.counts.keys().find(|k| !keys.contains(k)) {
            return Err(GridError::MissingSupport {
                from: r.code.clone(),
                key: missing.to_string(),
            });
        }
        if keys.is_empty() {
            dead.push(r.code.clone());
            continue;
        }
        let denom = r.total as f64 + alpha * keys.len() as f64;
        rows.push(
            keys.iter()
                .map(|k| {
                    let n = r.counts.get(k).copied().unwrap_or(0) as f64;
                    (k.clone(), (n + alpha) / denom)
                })
                .collect(),
        );
    }
    if !dead.is_empty() {
        return Err(GridError::DeadEnd { codes: dead });
    }
    let covered = counts.rows.iter().map(|r| r.code.clone()).collect();
    let sample_sizes = counts.rows.iter().map(|r| r.total).collect();
    Ok(AugmentedGrid::new(covered, rows)?
        .with_unobserved(counts.unobserved.clone())
        .with_meta(EstimatorMeta {
            method: Estimator::Dirichlet { alpha },
            sample_sizes,
        }))
}

/// Support used when none is given: every counted successor, the self-loop,
/// and every failure label seen anywhere in the log.
pub fn default_support(counts: &TransitionCounts) -> Support {
    let failures: Vec<SuccessorKey> = counts
        .failure_labels()
        .into_iter()
        .map(SuccessorKey::Failure)
        .collect();
    counts
        .rows
        .iter()
        .map(|r| {
            let mut keys: BTreeSet<SuccessorKey> = r.counts.keys().cloned().collect();
            keys.insert(SuccessorKey::Situation(r.code.clone()));
            keys.extend(failures.iter().cloned());
            (r.code.clone(), keys)
        })
        .collect()
}

/// Total mass a row puts on failure keys.
pub fn failure_probability(grid: &AugmentedGrid, code: &str) -> Result<f64, GridError> {
    let row = grid
        .row(code)
        .ok_or_else(|| GridError::Uncovered(code.to_string()))?;
    Ok(row
        .iter()
        .filter(|(k, _)| k.is_failure())
        .map(|(_, p)| p)
        .sum())
}
