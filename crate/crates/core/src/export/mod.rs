//! Serialization of grids and models, and report rendering.

mod prism;
mod report;

pub use prism::{export_prism, format_sig17, import_prism, PrismError};
pub use report::{
    render_report, ModelStats, ReportDocument, ReportError, ReportFormat, VerdictRow,
};

use crate::estimation::AugmentedGrid;

/// `from,to,prob` rows in covered order; within a row, situation successors
/// first, then failure keys. Probabilities use the shortest text that reads
/// back to the same value.
pub fn export_grid_csv(grid: &AugmentedGrid) -> String {
    let mut out = String::from("from,to,prob\n");
    for (from, row) in grid.covered().iter().zip(grid.rows()) {
        for (key, p) in row {
            out.push_str(&format!("{from},{key},{p}\n"));
        }
    }
    out
}
