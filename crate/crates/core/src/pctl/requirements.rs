use std::collections::HashSet;

use serde::Deserialize;
use thiserror::Error;

use super::{parse, ParseError, Query};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RequirementsError {
    #[error("requirements file is not valid JSON: {0}")]
    Json(String),
    #[error("requirement `{0}` is defined more than once")]
    DuplicateId(String),
    #[error("requirement with an empty id")]
    EmptyId,
    #[error("requirement `{id}`: {source}")]
    Query { id: String, source: ParseError },
}

/// A safety requirement with its formalized query.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyRequirement {
    pub id: String,
    pub description: String,
    pub query: Query,
    /// Source text of the query as written in the file.
    pub source: String,
}

#[derive(Deserialize)]
struct RawRequirement {
    id: String,
    #[serde(default)]
    description: String,
    query: String,
}

/// Reads `[{"id": ..., "description": ..., "query": ...}, ...]`.
pub fn parse_requirements(text: &str) -> Result<Vec<SafetyRequirement>, RequirementsError> {
    let raw: Vec<RawRequirement> =
        serde_json::from_str(text).map_err(|e| RequirementsError::Json(e.to_string()))?;
    let mut seen = HashSet::new();
    raw.into_iter()
        .map(|r| {
            if r.id.is_empty() {
                return Err(RequirementsError::EmptyId);
            }
            if !seen.insert(r.id.clone()) {
                return Err(RequirementsError::DuplicateId(r.id));
            }
            let query = parse(&r.query).map_err(|source| RequirementsError::Query {
                id: r.id.clone(),
                source,
            })?;
            Ok(SafetyRequirement {
                id: r.id,
                description: r.description,
                query,
                source: r.query,
            })
        })
        .collect()
}
