//! Axis space of the operational domain and exhaustive situation enumeration.
//!
//! A situation assigns one value to every axis. Situations are enumerated in
//! lexicographic order of their value indices with the last axis varying
//! fastest, and numbered `s1..sn` in that order. Each situation also carries a
//! short code made of the first character of every chosen value label, so a
//! space with binary `N`/`Y` axes yields codes such as `NNNN` or `YNYN`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("axis config is not valid JSON: {0}")]
    Json(String),
    #[error("situation space needs at least one axis")]
    NoAxes,
    #[error("axis #{position} has an empty name")]
    EmptyAxisName { position: usize },
    #[error("duplicate axis name `{name}` at position {position}")]
    DuplicateAxis { name: String, position: usize },
    #[error("axis `{axis}` (position {position}) has an empty value set")]
    EmptyValues { axis: String, position: usize },
    #[error("axis `{axis}` (position {position}) needs at least 2 values, found {found}")]
    TooFewValues {
        axis: String,
        position: usize,
        found: usize,
    },
    #[error("axis `{axis}` (position {position}) has an empty value label at index {index}")]
    EmptyValue {
        axis: String,
        position: usize,
        index: usize,
    },
    #[error("axis `{axis}` (position {position}) repeats value label `{value}`")]
    DuplicateValue {
        axis: String,
        position: usize,
        value: String,
    },
    #[error(
        "axis `{axis}` (position {position}): values `{first}` and `{second}` share the code character `{ch}`"
    )]
    AmbiguousCode {
        axis: String,
        position: usize,
        first: String,
        second: String,
        ch: char,
    },
    #[error("situation space is too large to enumerate")]
    TooLarge,
    #[error("code `{code}` has length {found}, expected {expected}")]
    CodeLength {
        code: String,
        expected: usize,
        found: usize,
    },
    #[error(
        "code `{code}`: character `{ch}` at position {position} matches no value of axis `{axis}`"
    )]
    UnknownCodeChar {
        code: String,
        position: usize,
        axis: String,
        ch: char,
    },
}

/// Serialized form of an axis as it appears in the axis config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisConfig {
    pub name: String,
    pub values: Vec<String>,
}

/// Top-level axis config: `{"axes":[{"name":"door","values":["N","Y"]}, ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxesConfig {
    pub axes: Vec<AxisConfig>,
}

impl AxesConfig {
    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        serde_json::from_str(text).map_err(|e| SpaceError::Json(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    name: String,
    values: Vec<String>,
    code_chars: Vec<char>,
}

impl Axis {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    /// Index of the value whose label starts with `ch`.
    pub fn value_for_char(&self, ch: char) -> Option<usize> {
        self.code_chars.iter().position(|&c| c == ch)
    }

    fn code_char(&self, index: usize) -> char {
        self.code_chars[index]
    }
}

/// Validated, immutable situation hyperspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SituationSpace {
    axes: Vec<Axis>,
    cardinality: usize,
}

/// One cell of the coverage grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Situation {
    id: usize,
    assignments: Vec<usize>,
    code: String,
}

impl Situation {
    /// 1-based position in the enumeration.
    pub fn id(&self) -> usize {
        self.id
    }

    /// `s<id>` label, as used in reports.
    pub fn name(&self) -> String {
        format!("s{}", self.id)
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn code(&self) -> &str {
        &self.code
    }
}

impl fmt::Display for Situation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{} ({})", self.id, self.code)
    }
}

/// Validates an axis list and builds the space, preserving axis order.
pub fn build_space(config: &AxesConfig) -> Result<SituationSpace, SpaceError> {
    if config.axes.is_empty() {
        return Err(SpaceError::NoAxes);
    }
    let mut names = HashSet::new();
    let mut axes = Vec::with_capacity(config.axes.len());
    let mut cardinality: usize = 1;
    for (position, ax) in config.axes.iter().enumerate() {
        if ax.name.is_empty() {
            return Err(SpaceError::EmptyAxisName { position });
        }
        if !names.insert(ax.name.as_str()) {
            return Err(SpaceError::DuplicateAxis {
                name: ax.name.clone(),
                position,
            });
        }
        if ax.values.is_empty() {
            return Err(SpaceError::EmptyValues {
                axis: ax.name.clone(),
                position,
            });
        }
        let mut code_chars: Vec<char> = Vec::with_capacity(ax.values.len());
        for (index, value) in ax.values.iter().enumerate() {
            let Some(ch) = value.chars().next() else {
                return Err(SpaceError::EmptyValue {
                    axis: ax.name.clone(),
                    position,
                    index,
                });
            };
            if ax.values[..index].contains(value) {
                return Err(SpaceError::DuplicateValue {
                    axis: ax.name.clone(),
                    position,
                    value: value.clone(),
                });
            }
            if let Some(prev) = code_chars.iter().position(|&c| c == ch) {
                return Err(SpaceError::AmbiguousCode {
                    axis: ax.name.clone(),
                    position,
                    first: ax.values[prev].clone(),
                    second: value.clone(),
                    ch,
                });
            }
            code_chars.push(ch);
        }
        if ax.values.len() < 2 {
            return Err(SpaceError::TooFewValues {
                axis: ax.name.clone(),
                position,
                found: ax.values.len(),
            });
        }
        cardinality = cardinality
            .checked_mul(ax.values.len())
            .ok_or(SpaceError::TooLarge)?;
        axes.push(Axis {
            name: ax.name.clone(),
            values: ax.values.clone(),
            code_chars,
        });
    }
    Ok(SituationSpace { axes, cardinality })
}

impl SituationSpace {
    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        build_space(&AxesConfig::from_json(text)?)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Number of situations, the product of all axis value counts.
    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn to_config(&self) -> AxesConfig {
        AxesConfig {
            axes: self
                .axes
                .iter()
                .map(|a| AxisConfig {
                    name: a.name.clone(),
                    values: a.values.clone(),
                })
                .collect(),
        }
    }

    /// SHA-256 over the canonical JSON of the axis list, hex encoded.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(&self.to_config()).expect("axis config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Situation at 0-based enumeration index `index`.
    pub fn situation_at(&self, index: usize) -> Option<Situation> {
        if index >= self.cardinality {
            return None;
        }
        let mut assignments = vec![0; self.axes.len()];
        let mut rest = index;
        for (slot, axis) in assignments.iter_mut().zip(&self.axes).rev() {
            let radix = axis.values.len();
            *slot = rest % radix;
            rest /= radix;
        }
        Some(self.situation_from_assignments(assignments))
    }

    fn situation_from_assignments(&self, assignments: Vec<usize>) -> Situation {
        let mut index = 0;
        for (&a, axis) in assignments.iter().zip(&self.axes) {
            index = index * axis.values.len() + a;
        }
        let code = assignments
            .iter()
            .zip(&self.axes)
            .map(|(&a, axis)| axis.code_char(a))
            .collect();
        Situation {
            id: index + 1,
            assignments,
            code,
        }
    }

    /// All situations, last axis varying fastest, ids `1..=cardinality`.
    pub fn enumerate(&self) -> Vec<Situation> {
        (0..self.cardinality)
            .map(|i| self.situation_at(i).expect("index in range"))
            .collect()
    }

    pub fn encode(&self, situation: &Situation) -> String {
        situation.code.clone()
    }

    /// Parses a code back into its situation.
    pub fn decode(&self, code: &str) -> Result<Situation, SpaceError> {
        let found = code.chars().count();
        if found != self.axes.len() {
            return Err(SpaceError::CodeLength {
                code: code.to_string(),
                expected: self.axes.len(),
                found,
            });
        }
        let assignments = code
            .chars()
            .zip(&self.axes)
            .enumerate()
            .map(|(position, (ch, axis))| {
                axis.value_for_char(ch)
                    .ok_or_else(|| SpaceError::UnknownCodeChar {
                        code: code.to_string(),
                        position,
                        axis: axis.name.clone(),
                        ch,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.situation_from_assignments(assignments))
    }

    /// Human-readable `axis=value` description of a situation.
    pub fn describe(&self, situation: &Situation) -> String {
        situation
            .assignments
            .iter()
            .zip(&self.axes)
            .map(|(&a, axis)| format!("{}={}", axis.name, axis.values[a]))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Convenience wrapper matching the free-function style of the other modules.
pub fn enumerate_situations(space: &SituationSpace) -> Vec<Situation> {
    space.enumerate()
}
