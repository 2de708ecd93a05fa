use std::fmt::Write;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::checker::{CheckResult, RankReport};
use crate::dtmc::Dtmc;
use crate::log_ingest::CoverageReport;
use crate::pctl::SafetyRequirement;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("unknown report format `{0}` (expected text, csv or json)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// `P=?` queries report a value only.
    Reported,
}

impl Verdict {
    fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Reported => "reported",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictRow {
    pub id: String,
    pub description: String,
    pub query: String,
    pub state: String,
    pub value: Option<f64>,
    pub threshold: Option<String>,
    pub verdict: Verdict,
}

impl VerdictRow {
    pub fn new(requirement: &SafetyRequirement, result: &CheckResult) -> Self {
        Self {
            id: requirement.id.clone(),
            description: requirement.description.clone(),
            query: result.query.to_string(),
            state: result.state.clone(),
            value: result.value,
            threshold: result
                .threshold()
                .map(|(op, p)| format!("{}{}", op.symbol(), p)),
            verdict: match result.verdict {
                Some(true) => Verdict::Pass,
                Some(false) => Verdict::Fail,
                None => Verdict::Reported,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelStats {
    pub states: usize,
    pub situations: usize,
    pub failure_states: usize,
    pub transitions: usize,
    pub initial: String,
}

impl ModelStats {
    pub fn of(dtmc: &Dtmc) -> Self {
        let situations = dtmc.situation_indices().count();
        Self {
            states: dtmc.len(),
            situations,
            failure_states: dtmc.len() - situations,
            transitions: dtmc.num_transitions(),
            initial: dtmc.initial().to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requirements: Option<Vec<VerdictRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranking: Option<RankReport>,
}

impl ReportDocument {
    pub fn any_violation(&self) -> bool {
        self.requirements
            .iter()
            .flatten()
            .any(|r| r.verdict == Verdict::Fail)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_text(doc: &ReportDocument) -> String {
    let mut out = String::new();
    if let Some(c) = &doc.coverage {
        writeln!(
            out,
            "Coverage: {}/{} situations observed ({:.2}%)",
            c.observed.len(),
            c.total,
            c.ratio * 100.0
        )
        .unwrap();
        writeln!(out, "  observed:   {}", c.observed.join(" ")).unwrap();
        writeln!(out, "  unobserved: {}", c.unobserved.join(" ")).unwrap();
    }
    if let Some(m) = &doc.model {
        writeln!(
            out,
            "Model: {} states ({} situations, {} failure), {} transitions, initial {}",
            m.states, m.situations, m.failure_states, m.transitions, m.initial
        )
        .unwrap();
    }
    if let Some(reqs) = &doc.requirements {
        writeln!(out, "Requirements: {}", reqs.len()).unwrap();
        for r in reqs {
            writeln!(
                out,
                "  {:<8} {:<8} value={:<22} threshold={:<10} at {}  {}",
                r.id,
                r.verdict.as_str(),
                opt(r.value),
                r.threshold.as_deref().unwrap_or("-"),
                r.state,
                r.query
            )
            .unwrap();
        }
        if reqs.iter().any(|r| r.threshold.is_some()) {
            out.push_str("  (threshold comparisons allow 1e-12 slack toward satisfaction)\n");
        }
    }
    if let Some(rank) = &doc.ranking {
        writeln!(out, "Ranking by P[{}]:", rank.provenance).unwrap();
        for (i, e) in rank.entries.iter().enumerate() {
            writeln!(out, "  {:>3}  {}  {}", i + 1, e.code, e.probability).unwrap();
        }
    }
    out
}

fn render_csv(doc: &ReportDocument) -> String {
    let mut sections = Vec::new();
    if let Some(c) = &doc.coverage {
        let mut s = String::from("code,observed\n");
        let mut all: Vec<(&String, bool)> = c
            .observed
            .iter()
            .map(|x| (x, true))
            .chain(c.unobserved.iter().map(|x| (x, false)))
            .collect();
        all.sort();
        for (code, seen) in all {
            writeln!(s, "{code},{seen}").unwrap();
        }
        sections.push(s);
    }
    if let Some(m) = &doc.model {
        sections.push(format!(
            "states,situations,failure_states,transitions,initial\n{},{},{},{},{}\n",
            m.states,
            m.situations,
            m.failure_states,
            m.transitions,
            csv_field(&m.initial)
        ));
    }
    if let Some(reqs) = &doc.requirements {
        let mut s = String::from("id,query,state,value,threshold,verdict\n");
        for r in reqs {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                csv_field(&r.id),
                csv_field(&r.query),
                csv_field(&r.state),
                opt(r.value),
                r.threshold.as_deref().unwrap_or(""),
                r.verdict.as_str()
            )
            .unwrap();
        }
        sections.push(s);
    }
    if let Some(rank) = &doc.ranking {
        let mut s = String::from("rank,code,probability\n");
        for (i, e) in rank.entries.iter().enumerate() {
            writeln!(s, "{},{},{}", i + 1, e.code, e.probability).unwrap();
        }
        sections.push(s);
    }
    sections.join("\n")
}

pub fn render_report(doc: &ReportDocument, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(doc),
        ReportFormat::Csv => render_csv(doc),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(doc).expect("report serializes");
            s.push('\n');
            s
        }
    }
}
