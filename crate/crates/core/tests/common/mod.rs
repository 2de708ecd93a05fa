//! Oracles shared by the integration tests. Nothing here calls the checker.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use sitgrid::dtmc::{synthesize, Dtmc, StateSet};
use sitgrid::estimation::{AugmentedGrid, SuccessorKey};

pub fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

pub fn read_data(name: &str) -> String {
    std::fs::read_to_string(data_file(name)).unwrap()
}

/// Transition counts read straight off the log text: consecutive rows of a
/// run give a situation edge, a `fail:<label>` row adds an edge to the
/// failure key. Assumes rows of a run are contiguous and in step order.
pub fn hand_counts(log: &str) -> BTreeMap<(String, String), u64> {
    let mut counts = BTreeMap::new();
    let mut prev: Option<(String, String)> = None;
    for line in log.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (run, code, event) = (f[0], f[2], f[3]);
        if let Some((prun, pcode)) = &prev {
            if prun == run {
                *counts.entry((pcode.clone(), code.to_string())).or_insert(0) += 1;
            }
        }
        if event.starts_with("fail:") {
            *counts
                .entry((code.to_string(), event.to_string()))
                .or_insert(0) += 1;
        }
        prev = if event.is_empty() {
            Some((run.to_string(), code.to_string()))
        } else {
            None
        };
    }
    counts
}

pub struct RandomCase {
    pub dtmc: Dtmc,
    pub phi1: StateSet,
    pub phi2: StateSet,
}

/// A random chain with at most six states. Every state that is not
/// absorbing sends at least 0.2 of its mass to absorbing states, so
/// simulated paths are short.
pub fn random_case<R: Rng>(rng: &mut R) -> RandomCase {
    let n_sit = rng.gen_range(1..=4);
    let n_fail = rng.gen_range(1..=2);
    let codes: Vec<String> = (0..n_sit).map(|i| format!("c{i}")).collect();
    let absorbing: Vec<bool> = (0..n_sit).map(|i| i > 0 && rng.gen_bool(0.25)).collect();
    let mut rows = Vec::new();
    for i in 0..n_sit {
        if absorbing[i] {
            rows.push(vec![(SuccessorKey::Situation(codes[i].clone()), 1.0)]);
            continue;
        }
        let exit = 0.2 + 0.6 * rng.gen::<f64>();
        let mut sinks: Vec<(SuccessorKey, f64)> = Vec::new();
        for l in 0..n_fail {
            sinks.push((SuccessorKey::Failure(format!("f{l}")), rng.gen::<f64>()));
        }
        for j in (0..n_sit).filter(|&j| absorbing[j]) {
            sinks.push((SuccessorKey::Situation(codes[j].clone()), rng.gen::<f64>()));
        }
        let mut moves: Vec<(SuccessorKey, f64)> = Vec::new();
        for j in (0..n_sit).filter(|&j| !absorbing[j]) {
            if rng.gen_bool(0.7) {
                moves.push((
                    SuccessorKey::Situation(codes[j].clone()),
                    0.05 + rng.gen::<f64>(),
                ));
            }
        }
        if moves.is_empty() {
            moves.push((SuccessorKey::Situation(codes[i].clone()), 1.0));
        }
        let st: f64 = sinks.iter().map(|x| x.1).sum();
        let mt: f64 = moves.iter().map(|x| x.1).sum();
        sinks.iter_mut().for_each(|x| x.1 *= exit / st);
        moves.iter_mut().for_each(|x| x.1 *= (1.0 - exit) / mt);
        let mut row: Vec<(SuccessorKey, f64)> = Vec::new();
        for (k, p) in sinks.into_iter().chain(moves) {
            match row.iter_mut().find(|(q, _)| *q == k) {
                Some(e) => e.1 += p,
                None => row.push((k, p)),
            }
        }
        rows.push(row);
    }
    let grid = AugmentedGrid::new(codes.clone(), rows).unwrap();
    let dtmc = synthesize(&grid, &codes[0]).unwrap();
    let n = dtmc.len();
    let phi2 = match rng.gen_range(0..3) {
        0 => dtmc.states_labelled("fail"),
        1 => dtmc.states_labelled("fail:f0"),
        _ => StateSet::from_indices(n, (0..n).filter(|_| rng.gen_bool(0.35))),
    };
    let phi1 = StateSet::from_indices(n, (0..n).filter(|_| rng.gen_bool(0.75)));
    RandomCase { dtmc, phi1, phi2 }
}

fn dense(dtmc: &Dtmc) -> Vec<Vec<f64>> {
    let n = dtmc.len();
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in dtmc.rows().iter().enumerate() {
        for &(j, p) in row {
            m[i][j] += p;
        }
    }
    m
}

/// P(phi1 U phi2) by direct elimination.
///
/// States that cannot reach phi2 through phi1 get 0. On the rest the system
/// x = P x + b is nonsingular and is solved with partial pivoting.
pub fn gauss_until(dtmc: &Dtmc, phi1: &StateSet, phi2: &StateSet) -> Vec<f64> {
    let n = dtmc.len();
    let p = dense(dtmc);
    let mut can: Vec<bool> = (0..n).map(|s| phi2.contains(s)).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !can[s] && phi1.contains(s) && (0..n).any(|t| p[s][t] > 0.0 && can[t]) {
                can[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|&s| can[s] && !phi2.contains(s)).collect();
    let m = unknown.len();
    let mut a = vec![vec![0.0; m + 1]; m];
    for (r, &s) in unknown.iter().enumerate() {
        for (c, &t) in unknown.iter().enumerate() {
            a[r][c] = if s == t { 1.0 } else { 0.0 } - p[s][t];
        }
        a[r][m] = (0..n).filter(|&t| phi2.contains(t)).map(|t| p[s][t]).sum();
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (x, y) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                        *x -= f * y;
                    }
                }
            }
        }
    }
    let mut x: Vec<f64> = (0..n)
        .map(|s| if phi2.contains(s) { 1.0 } else { 0.0 })
        .collect();
    for (r, &s) in unknown.iter().enumerate() {
        x[s] = a[r][m] / a[r][r];
    }
    x
}

/// Fraction of `paths` simulated paths from `start` that satisfy
/// phi1 U phi2. A path stops in phi2 (success), outside phi1, or in a state
/// whose only move is a self-loop (failure).
pub fn monte_carlo_until<R: Rng>(
    dtmc: &Dtmc,
    phi1: &StateSet,
    phi2: &StateSet,
    start: usize,
    paths: u64,
    rng: &mut R,
) -> f64 {
    let rows = dtmc.rows();
    let stuck: Vec<bool> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| r.len() == 1 && r[0].0 == i)
        .collect();
    let mut hits = 0u64;
    for _ in 0..paths {
        let mut s = start;
        loop {
            if phi2.contains(s) {
                hits += 1;
                break;
            }
            if !phi1.contains(s) || stuck[s] {
                break;
            }
            let u: f64 = rng.gen();
            let row = &rows[s];
            let mut acc = 0.0;
            let mut next = row[row.len() - 1].0;
            for &(t, p) in row {
                acc += p;
                if u < acc {
                    next = t;
                    break;
                }
            }
            s = next;
        }
    }
    hits as f64 / paths as f64
}
