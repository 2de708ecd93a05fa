//! Situation-labelled test logs.
//!
//! A log is a CSV file with header `run_id,step,code,event`. Each row is one
//! observation step of one run; `event` is empty on intermediate steps, `end`
//! when the run finished normally and `fail:<label>` when it finished with a
//! safety violation. Rows of different runs may interleave.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::situation_space::{SituationSpace, SpaceError};

const HEADER: [&str; 4] = ["run_id", "step", "code", "event"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: expected header `run_id,step,code,event`, found `{found}`")]
    BadHeader { line: u64, found: String },
    #[error(
        "line {line}: run `{run_id}` step {step} does not increase (previous step {previous})"
    )]
    NonMonotoneStep {
        line: u64,
        run_id: String,
        step: u64,
        previous: u64,
    },
    #[error("line {line}: run `{run_id}` repeats step {step}")]
    DuplicateStep {
        line: u64,
        run_id: String,
        step: u64,
    },
    #[error("line {line}: unknown terminal keyword `{keyword}` (expected empty, `end` or `fail:<label>`)")]
    UnknownEvent { line: u64, keyword: String },
    #[error("line {line}: run `{run_id}` continues after its terminal event")]
    StepAfterTerminal { line: u64, run_id: String },
    #[error("run `{run_id}` has no terminal event (`end` or `fail:<label>`)")]
    MissingTerminal { run_id: String },
    #[error("run id `{run_id}` appears in more than one log")]
    DuplicateRun { run_id: String },
    #[error("run `{run_id}` step {step}: {source}")]
    UnknownCode {
        run_id: String,
        step: u64,
        source: SpaceError,
    },
    #[error("log was recorded against space {log_hash}, not {space_hash}")]
    SpaceMismatch {
        log_hash: String,
        space_hash: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Terminal {
    Completed,
    Violation(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub index: u64,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub run_id: String,
    pub steps: Vec<Step>,
    pub terminal: Terminal,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObservationLog {
    pub runs: Vec<RunRecord>,
    /// Digest of the space the log was validated against, once known.
    pub space_hash: Option<String>,
}

fn is_label(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn parse_event(line: u64, event: &str) -> Result<Option<Terminal>, LogError> {
    match event {
        "" => Ok(None),
        "end" => Ok(Some(Terminal::Completed)),
        other => match other.strip_prefix("fail:") {
            Some(label) if is_label(label) => Ok(Some(Terminal::Violation(label.to_string()))),
            _ => Err(LogError::UnknownEvent {
                line,
                keyword: other.to_string(),
            }),
        },
    }
}

struct PartialRun {
    run_id: String,
    steps: Vec<Step>,
    terminal: Option<Terminal>,
}

/// Parses a log, grouping rows by run id in order of first appearance.
pub fn parse_log(text: &str) -> Result<ObservationLog, LogError> {
    if text.trim().is_empty() {
        return Ok(ObservationLog::default());
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(LogError::BadHeader {
            line: 1,
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut runs: Vec<PartialRun> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line());
        let run_id = &record[0];
        if run_id.is_empty() {
            return Err(LogError::Malformed {
                line,
                message: "empty run_id".into(),
            });
        }
        let step: u64 = record[1].trim().parse().map_err(|_| LogError::Malformed {
            line,
            message: format!("step `{}` is not a non-negative integer", &record[1]),
        })?;
        let code = &record[2];
        if code.is_empty() {
            return Err(LogError::Malformed {
                line,
                message: "empty situation code".into(),
            });
        }
        let terminal = parse_event(line, &record[3])?;

        let slot = *by_id.entry(run_id.to_string()).or_insert_with(|| {
            runs.push(PartialRun {
                run_id: run_id.to_string(),
                steps: Vec::new(),
                terminal: None,
            });
            runs.len() - 1
        });
        let run = &mut runs[slot];
        if run.terminal.is_some() {
            return Err(LogError::StepAfterTerminal {
                line,
                run_id: run.run_id.clone(),
            });
        }
        if let Some(prev) = run.steps.last() {
            if step == prev.index {
                return Err(LogError::DuplicateStep {
                    line,
                    run_id: run.run_id.clone(),
                    step,
                });
            }
            if step < prev.index {
                return Err(LogError::NonMonotoneStep {
                    line,
                    run_id: run.run_id.clone(),
                    step,
                    previous: prev.index,
                });
            }
        }
        run.steps.push(Step {
            index: step,
            code: code.to_string(),
        });
        run.terminal = terminal;
    }

    let runs = runs
        .into_iter()
        .map(|r| match r.terminal {
            Some(terminal) => Ok(RunRecord {
                run_id: r.run_id,
                steps: r.steps,
                terminal,
            }),
            None => Err(LogError::MissingTerminal { run_id: r.run_id }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ObservationLog {
        runs,
        space_hash: None,
    })
}

fn csv_error(e: csv::Error, fallback_line: u64) -> LogError {
    let line = e.position().map_or(fallback_line, |p| p.line());
    LogError::Malformed {
        line,
        message: e.to_string(),
    }
}

/// Serializes a log back into the CSV format, runs in order.
pub fn write_log(log: &ObservationLog) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(HEADER).expect("write to vec");
    for run in &log.runs {
        let last = run.steps.len().saturating_sub(1);
        for (i, step) in run.steps.iter().enumerate() {
            let event = if i == last {
                match &run.terminal {
                    Terminal::Completed => "end".to_string(),
                    Terminal::Violation(label) => format!("fail:{label}"),
                }
            } else {
                String::new()
            };
            writer
                .write_record([
                    run.run_id.as_str(),
                    &step.index.to_string(),
                    step.code.as_str(),
                    event.as_str(),
                ])
                .expect("write to vec");
        }
    }
    String::from_utf8(writer.into_inner().expect("flush vec")).expect("utf-8 input")
}

/// Concatenates logs whose run ids are disjoint.
pub fn merge(logs: impl IntoIterator<Item = ObservationLog>) -> Result<ObservationLog, LogError> {
    let mut seen = BTreeSet::new();
    let mut out = ObservationLog::default();
    for log in logs {
        match (&out.space_hash, &log.space_hash) {
            (Some(a), Some(b)) if a != b => {
                return Err(LogError::SpaceMismatch {
                    log_hash: b.clone(),
                    space_hash: a.clone(),
                })
            }
            (None, Some(b)) => out.space_hash = Some(b.clone()),
            _ => {}
        }
        for run in log.runs {
            if !seen.insert(run.run_id.clone()) {
                return Err(LogError::DuplicateRun { run_id: run.run_id });
            }
            out.runs.push(run);
        }
    }
    Ok(out)
}

/// A log whose every code decodes against a space.
#[derive(Debug, Clone)]
pub struct ValidatedLog {
    log: ObservationLog,
    space: SituationSpace,
    /// Per run, per step: 1-based situation id.
    ids: Vec<Vec<usize>>,
}

impl ValidatedLog {
    pub fn log(&self) -> &ObservationLog {
        &self.log
    }

    pub fn space(&self) -> &SituationSpace {
        &self.space
    }

    /// Situation ids of run `run`, one per step.
    pub fn situation_ids(&self, run: usize) -> &[usize] {
        &self.ids[run]
    }
}

pub fn validate_log(log: ObservationLog, space: &SituationSpace) -> Result<ValidatedLog, LogError> {
    let digest = space.digest();
    if let Some(hash) = &log.space_hash {
        if *hash != digest {
            return Err(LogError::SpaceMismatch {
                log_hash: hash.clone(),
                space_hash: digest,
            });
        }
    }
    let ids = log
        .runs
        .iter()
        .map(|run| {
            run.steps
                .iter()
                .map(|step| {
                    space.decode(&step.code).map(|s| s.id()).map_err(|source| {
                        LogError::UnknownCode {
                            run_id: run.run_id.clone(),
                            step: step.index,
                            source,
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut log = log;
    log.space_hash = Some(digest);
    Ok(ValidatedLog {
        log,
        space: space.clone(),
        ids,
    })
}

/// Which situations a log touched. Both lists are in enumeration order.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CoverageReport {
    pub observed: Vec<String>,
    pub unobserved: Vec<String>,
    pub total: usize,
    pub ratio: f64,
}

pub fn coverage_summary(log: &ValidatedLog) -> CoverageReport {
    let seen: BTreeSet<usize> = log.ids.iter().flatten().copied().collect();
    let (observed, unobserved): (Vec<_>, Vec<_>) = log
        .space
        .enumerate()
        .into_iter()
        .partition(|s| seen.contains(&s.id()));
    let total = log.space.cardinality();
    CoverageReport {
        ratio: observed.len() as f64 / total as f64,
        observed: observed.iter().map(|s| s.code().to_string()).collect(),
        unobserved: unobserved.iter().map(|s| s.code().to_string()).collect(),
        total,
    }
}
