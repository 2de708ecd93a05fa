//! Synthetic logs drawn from a grid, for demos and estimator checks.

use rand::Rng;

use crate::estimation::{AugmentedGrid, SuccessorKey};
use crate::log_ingest::{ObservationLog, RunRecord, Step, Terminal};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SampleError {
    #[error("grid has no covered situations")]
    EmptyGrid,
    #[error("start situation `{0}` is not covered by the grid")]
    UnknownStart(String),
    #[error("successor `{0}` has no row in the grid")]
    DeadEnd(String),
}

/// Draws `runs` runs starting at `start` (default: first covered code).
/// A run ends with a violation when a failure successor is drawn and is
/// marked completed after `max_steps` steps.
pub fn sample_log<R: Rng + ?Sized>(
    grid: &AugmentedGrid,
    start: Option<&str>,
    runs: usize,
    max_steps: usize,
    rng: &mut R,
) -> Result<ObservationLog, SampleError> {
    let start = match start {
        Some(s) => s.to_string(),
        None => grid
            .covered()
            .first()
            .cloned()
            .ok_or(SampleError::EmptyGrid)?,
    };
    if grid.row(&start).is_none() {
        return Err(SampleError::UnknownStart(start));
    }
    let max_steps = max_steps.max(1);
    let width = runs.to_string().len().max(5);
    let mut out = Vec::with_capacity(runs);
    for r in 0..runs {
        let mut code = start.clone();
        let mut steps = Vec::new();
        let terminal = loop {
            steps.push(Step {
                index: steps.len() as u64,
                code: code.clone(),
            });
            if steps.len() >= max_steps {
                break Terminal::Completed;
            }
            let row = grid
                .row(&code)
                .ok_or_else(|| SampleError::DeadEnd(code.clone()))?;
            match draw(row, rng) {
                SuccessorKey::Failure(label) => break Terminal::Violation(label.clone()),
                SuccessorKey::Situation(next) => code = next.clone(),
            }
        };
        out.push(RunRecord {
            run_id: format!("sim-{r:0width$}"),
            steps,
            terminal,
        });
    }
    Ok(ObservationLog {
        runs: out,
        space_hash: None,
    })
}

fn draw<'r, R: Rng + ?Sized>(row: &'r [(SuccessorKey, f64)], rng: &mut R) -> &'r SuccessorKey {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (key, p) in row {
        acc += p;
        if u < acc {
            return key;
        }
    }
    &row.last().expect("rows are non-empty").0
}
