//! PRISM-language model export and the matching reader.
//!
//! The model file holds one module with an integer state variable `s` over
//! dense indices and one guarded command per state. Proposition names are
//! sanitized into PRISM identifiers there; the companion labels file uses
//! PRISM's explicit `.lab` layout and keeps the original names, so the pair
//! reads back into the same [`Dtmc`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use thiserror::Error;

use crate::dtmc::Dtmc;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrismError {
    #[error("model line {line}: {message}")]
    Model { line: usize, message: String },
    #[error("labels line {line}: {message}")]
    Labels { line: usize, message: String },
}

const INIT_LABEL: &str = "init";

/// Decimal text with 17 significant digits, trailing zeros trimmed to at
/// least one fractional digit (`1.0`, `0.84999999999999998`).
pub fn format_sig17(value: f64) -> String {
    let sci = format!("{:.16e}", value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let point = 1 + exp; // digits before the decimal point
    let (int_part, frac_part) = if point <= 0 {
        (
            "0".to_string(),
            format!("{}{}", "0".repeat((-point) as usize), digits),
        )
    } else if point as usize >= digits.len() {
        (
            format!("{}{}", digits, "0".repeat(point as usize - digits.len())),
            String::new(),
        )
    } else {
        let (a, b) = digits.split_at(point as usize);
        (a.to_string(), b.to_string())
    };
    let frac = frac_part.trim_end_matches('0');
    let frac = if frac.is_empty() { "0" } else { frac };
    format!("{}{}.{}", if negative { "-" } else { "" }, int_part, frac)
}

fn prism_identifier(prop: &str) -> String {
    let mut id: String = prop
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if !id.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
        id.insert(0, '_');
    }
    id
}

/// Model text and labels text for a validated model.
pub fn export_prism(dtmc: &Dtmc) -> (String, String) {
    let n = dtmc.len();
    let initial = dtmc
        .initial_index()
        .expect("validated model has an initial state");
    let mut model = String::new();
    writeln!(
        model,
        "// {} states, {} transitions",
        n,
        dtmc.num_transitions()
    )
    .unwrap();
    model.push_str("dtmc\n\nmodule situations\n");
    writeln!(
        model,
        "  s : [0..{}] init {};",
        n.saturating_sub(1),
        initial
    )
    .unwrap();
    model.push('\n');
    for (i, row) in dtmc.rows().iter().enumerate() {
        let updates: Vec<String> = row
            .iter()
            .map(|&(t, p)| format!("{}:(s'={})", format_sig17(p), t))
            .collect();
        writeln!(
            model,
            "  [] s={} -> {}; // {}",
            i,
            updates.join(" + "),
            dtmc.states()[i]
        )
        .unwrap();
    }
    model.push_str("endmodule\n\n");

    let mut holders: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        for prop in dtmc.labels(i) {
            holders.entry(prop).or_default().push(i);
        }
    }
    for (prop, states) in &holders {
        let guard: Vec<String> = states.iter().map(|i| format!("s={i}")).collect();
        writeln!(
            model,
            "label \"{}\" = {};",
            prism_identifier(prop),
            guard.join(" | ")
        )
        .unwrap();
    }

    let names: Vec<&str> = std::iter::once(INIT_LABEL)
        .chain(holders.keys().copied())
        .collect();
    let mut labels = String::new();
    let header: Vec<String> = names
        .iter()
        .enumerate()
        .map(|(k, name)| format!("{k}=\"{name}\""))
        .collect();
    labels.push_str(&header.join(" "));
    labels.push('\n');
    for i in 0..n {
        let mut ids: Vec<usize> = Vec::new();
        if i == initial {
            ids.push(0);
        }
        for (k, name) in names.iter().enumerate().skip(1) {
            if dtmc.labels(i).contains(*name) {
                ids.push(k);
            }
        }
        let ids: Vec<String> = ids.iter().map(|k| k.to_string()).collect();
        writeln!(labels, "{}: {}", i, ids.join(" ")).unwrap();
    }
    (model, labels)
}

fn model_err(line: usize, message: impl Into<String>) -> PrismError {
    PrismError::Model {
        line,
        message: message.into(),
    }
}

fn labels_err(line: usize, message: impl Into<String>) -> PrismError {
    PrismError::Labels {
        line,
        message: message.into(),
    }
}

fn parse_update(line: usize, text: &str) -> Result<(usize, f64), PrismError> {
    let (prob, target) = text
        .split_once(':')
        .ok_or_else(|| model_err(line, format!("malformed update `{text}`")))?;
    let prob: f64 = prob
        .trim()
        .parse()
        .map_err(|_| model_err(line, format!("bad probability `{}`", prob.trim())))?;
    let target = target
        .trim()
        .strip_prefix("(s'=")
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| model_err(line, format!("malformed update target `{}`", target.trim())))?;
    let target: usize = target
        .trim()
        .parse()
        .map_err(|_| model_err(line, format!("bad state index `{target}`")))?;
    Ok((target, prob))
}

/// Reads back a model/labels pair written by [`export_prism`].
pub fn import_prism(model: &str, labels: &str) -> Result<Dtmc, PrismError> {
    let mut size: Option<(usize, usize)> = None;
    let mut rows: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for (k, raw) in model.lines().enumerate() {
        let line = k + 1;
        let text = raw.split("//").next().unwrap_or("").trim();
        if text.is_empty()
            || text == "dtmc"
            || text.starts_with("module ")
            || text == "endmodule"
            || text.starts_with("label ")
        {
            continue;
        }
        if let Some(decl) = text.strip_prefix("s : [0..") {
            let (hi, rest) = decl
                .split_once(']')
                .ok_or_else(|| model_err(line, "malformed state variable"))?;
            let init = rest
                .trim()
                .strip_prefix("init")
                .and_then(|r| r.trim().strip_suffix(';'))
                .ok_or_else(|| model_err(line, "state variable needs an init value"))?;
            let hi: usize = hi.parse().map_err(|_| model_err(line, "bad state range"))?;
            let init: usize = init
                .trim()
                .parse()
                .map_err(|_| model_err(line, "bad init value"))?;
            size = Some((hi + 1, init));
            continue;
        }
        if let Some(cmd) = text.strip_prefix("[] s=") {
            let (state, body) = cmd
                .split_once("->")
                .ok_or_else(|| model_err(line, "command needs `->`"))?;
            let state: usize = state
                .trim()
                .parse()
                .map_err(|_| model_err(line, format!("bad guard `s={}`", state.trim())))?;
            let body = body
                .trim()
                .strip_suffix(';')
                .ok_or_else(|| model_err(line, "command must end with `;`"))?;
            let row = body
                .split(" + ")
                .map(|u| parse_update(line, u))
                .collect::<Result<Vec<_>, _>>()?;
            if rows.insert(state, row).is_some() {
                return Err(model_err(line, format!("second command for s={state}")));
            }
            continue;
        }
        return Err(model_err(line, format!("unrecognized line `{text}`")));
    }
    let (n, init) = size.ok_or_else(|| model_err(0, "missing state variable declaration"))?;
    if rows.len() != n || rows.keys().copied().ne(0..n) {
        return Err(model_err(
            0,
            format!("expected one command for each of {n} states"),
        ));
    }

    let mut lines = labels.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| labels_err(1, "missing header"))?;
    let mut names: BTreeMap<usize, String> = BTreeMap::new();
    for item in header.split_whitespace() {
        let (k, name) = item
            .split_once('=')
            .ok_or_else(|| labels_err(1, format!("malformed entry `{item}`")))?;
        let k: usize = k
            .parse()
            .map_err(|_| labels_err(1, format!("bad label index `{k}`")))?;
        let name = name
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .ok_or_else(|| labels_err(1, format!("label name must be quoted: `{name}`")))?;
        names.insert(k, name.to_string());
    }
    let mut label_sets = vec![BTreeSet::new(); n];
    for (k, raw) in lines {
        let line = k + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (state, ids) = raw
            .split_once(':')
            .ok_or_else(|| labels_err(line, "expected `state: labels`"))?;
        let state: usize = state
            .trim()
            .parse()
            .ok()
            .filter(|&s| s < n)
            .ok_or_else(|| labels_err(line, format!("bad state `{}`", state.trim())))?;
        for id in ids.split_whitespace() {
            let name = id
                .parse::<usize>()
                .ok()
                .and_then(|i| names.get(&i))
                .ok_or_else(|| labels_err(line, format!("unknown label index `{id}`")))?;
            if name != INIT_LABEL {
                label_sets[state].insert(name.clone());
            }
        }
    }
    let states = label_sets
        .iter()
        .enumerate()
        .map(|(i, set)| {
            let ids: Vec<&String> = set
                .iter()
                .filter(|l| l.as_str() != crate::dtmc::FAIL_PROPOSITION)
                .collect();
            match ids.as_slice() {
                [one] => Ok((*one).clone()),
                _ => Err(labels_err(
                    0,
                    format!("state {i} has no unique identity label"),
                )),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    if init >= n {
        return Err(model_err(0, format!("init value {init} out of range")));
    }
    let initial = states[init].clone();
    Ok(Dtmc::from_parts(
        states,
        initial,
        rows.into_values().collect(),
        label_sets,
    ))
}
