//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances and time limits are fixed here.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sitgrid::checker::Checker;
use sitgrid::dtmc::{synthesize, validate, Dtmc, StateSet};
use sitgrid::estimation::{count_transitions, estimate_mle, AugmentedGrid, SuccessorKey};
use sitgrid::export::{export_grid_csv, export_prism, import_prism};
use sitgrid::log_ingest::{coverage_summary, parse_log, validate_log};
use sitgrid::pctl::{format, parse, Comparison, PathFormula, ProbBound, Query, StateFormula};
use sitgrid::situation_space::SituationSpace;

use common::{gauss_until, monte_carlo_until, random_case, read_data};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn space() -> SituationSpace {
    SituationSpace::from_json(&read_data("axes.json")).unwrap()
}

fn demo_grid() -> AugmentedGrid {
    let log = parse_log(&read_data("warehouse.csv")).unwrap();
    let v = validate_log(log, &space()).unwrap();
    estimate_mle(&count_transitions(&v)).unwrap()
}

fn demo_model() -> Dtmc {
    synthesize(&demo_grid(), "NNNN").unwrap()
}

fn t1() -> Dtmc {
    let g =
        AugmentedGrid::from_csv("from,to,prob\na,a,0.5\na,b,0.3\na,fail:x,0.2\nb,b,1\n").unwrap();
    synthesize(&g, "a").unwrap()
}

fn enumeration() -> Outcome {
    let all = space().enumerate();
    ensure(all.len() == 16, || format!("{} situations", all.len()))?;
    ensure(all[0].code() == "NNNN" && all[0].name() == "s1", || {
        format!("s1 = {}", all[0].code())
    })?;
    for code in ["YYNN", "YYNY", "YYYN", "YYYY"] {
        ensure(all.iter().any(|s| s.code() == code), || {
            format!("{code} missing")
        })?;
    }
    Ok("16 situations, s1 = NNNN".into())
}

fn coverage() -> Outcome {
    let log = parse_log(&read_data("warehouse.csv")).unwrap();
    let c = coverage_summary(&validate_log(log, &space()).unwrap());
    ensure(c.observed.len() == 12, || {
        format!("{} observed", c.observed.len())
    })?;
    ensure(c.unobserved == ["YYNN", "YYNY", "YYYN", "YYYY"], || {
        format!("unobserved {:?}", c.unobserved)
    })?;
    Ok(format!(
        "12 observed, unobserved {}",
        c.unobserved.join(" ")
    ))
}

fn case_study_row() -> Outcome {
    let g = demo_grid();
    let expected = [
        ("NNNN", 0.85),
        ("NNNY", 0.05),
        ("YNNN", 0.06),
        ("NNYN", 0.03),
    ];
    for (to, want) in expected {
        let got = g
            .prob("NNNN", &SuccessorKey::Situation(to.into()))
            .unwrap_or(f64::NAN);
        ensure((got - want).abs() <= 1e-12, || {
            format!("NNNN->{to} = {got}")
        })?;
    }
    let residual = 1.0 - (0.85 + 0.05 + 0.06 + 0.03);
    let fail = g
        .prob("NNNN", &SuccessorKey::Failure("collision".into()))
        .unwrap_or(f64::NAN);
    ensure((fail - residual).abs() <= 1e-12, || {
        format!("fail = {fail}")
    })?;
    Ok("0.85 / 0.05 / 0.06 / 0.03, fail 0.01".into())
}

fn synthesis() -> Outcome {
    let m = demo_model();
    ensure(m.len() == 13, || format!("{} states", m.len()))?;
    let problems = validate(&m);
    ensure(problems.is_empty(), || format!("{problems:?}"))?;
    let fails: Vec<usize> = m.states_labelled("fail").iter().collect();
    ensure(fails.len() == 1, || format!("{} fail states", fails.len()))?;
    ensure(m.row(fails[0]) == [(fails[0], 1.0)], || {
        "fail not absorbing".into()
    })?;
    Ok("13 states, valid, fail absorbing".into())
}

fn oracle_equivalence() -> Outcome {
    const MODELS: usize = 200;
    const PATHS: u64 = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
    let cases: Vec<_> = (0..MODELS).map(|_| random_case(&mut rng)).collect();
    let mut worst_gauss = 0.0f64;
    let mut values = Vec::with_capacity(MODELS);
    for (i, c) in cases.iter().enumerate() {
        ensure(c.dtmc.len() <= 6, || {
            format!("model {i} has {} states", c.dtmc.len())
        })?;
        let got = Checker::new(&c.dtmc)
            .prob_until(&c.phi1, &c.phi2)
            .map_err(|e| format!("model {i}: {e}"))?;
        let want = gauss_until(&c.dtmc, &c.phi1, &c.phi2);
        for (s, w) in want.iter().enumerate() {
            worst_gauss = worst_gauss.max((got.at(s) - w).abs());
        }
        values.push(got.at(0));
    }
    ensure(worst_gauss <= 1e-9, || {
        format!("elimination gap {worst_gauss:e}")
    })?;

    let threads = std::thread::available_parallelism().map_or(4, |n| n.get());
    let z: Vec<f64> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let cases = &cases;
                let values = &values;
                scope.spawn(move || {
                    (t..MODELS)
                        .step_by(threads)
                        .map(|i| {
                            let c = &cases[i];
                            let mut rng = ChaCha8Rng::seed_from_u64(7_000 + i as u64);
                            let est =
                                monte_carlo_until(&c.dtmc, &c.phi1, &c.phi2, 0, PATHS, &mut rng);
                            let p = values[i];
                            let se = (p * (1.0 - p) / PATHS as f64).sqrt();
                            let gap = (est - p).abs();
                            if gap <= 1e-12 {
                                (i, 0.0)
                            } else if se == 0.0 {
                                (i, f64::INFINITY)
                            } else {
                                (i, gap / se)
                            }
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut all: Vec<(usize, f64)> = handles
            .into_iter()
            .flat_map(|h| h.join().unwrap())
            .collect();
        all.sort_by_key(|x| x.0);
        all.into_iter().map(|x| x.1).collect()
    });
    let worst = z.iter().cloned().fold(0.0, f64::max);
    let outside: Vec<usize> = (0..MODELS).filter(|&i| z[i] > 3.0).collect();
    let summary = format!(
        "{MODELS} models, elimination gap {worst_gauss:.1e}, simulation worst {worst:.2} SE"
    );
    ensure(outside.is_empty(), || {
        format!("{summary}; models outside 3 SE: {outside:?}")
    })?;
    Ok(summary)
}

fn hand_values() -> Outcome {
    let m = t1();
    let c = Checker::new(&m);
    let value = |q: &str| c.check(&parse(q).unwrap()).unwrap().value.unwrap();
    let f = value(r#"P=?[F "fail"]"#);
    ensure((f - 0.4).abs() <= 1e-10, || format!("F fail = {f}"))?;
    let x = value(r#"P=?[X "fail"]"#);
    ensure(x == 0.2, || format!("X fail = {x}"))?;
    let b = value(r#"P=?[true U<=2 "fail"]"#);
    ensure((b - 0.30).abs() <= 1e-12, || format!("U<=2 = {b}"))?;
    Ok(format!("F {f}, X {x}, U<=2 {b}"))
}

fn bounded_convergence() -> Outcome {
    let m = demo_model();
    let c = Checker::new(&m);
    let all = StateSet::full(m.len());
    let fail = m.states_labelled("fail");
    let full = c.prob_until(&all, &fail).map_err(|e| e.to_string())?;
    let mut prev = c.prob_bounded_until(&all, &fail, 0);
    for k in [1, 2, 5, 10, 50, 100, 1000] {
        let cur = c.prob_bounded_until(&all, &fail, k);
        for s in 0..m.len() {
            ensure(cur.at(s) >= prev.at(s), || {
                format!("decrease at k={k}, state {s}")
            })?;
        }
        prev = cur;
    }
    let gap = (0..m.len())
        .map(|s| (prev.at(s) - full.at(s)).abs())
        .fold(0.0, f64::max);
    ensure(gap <= 1e-6, || format!("k=1000 gap {gap:e}"))?;
    Ok(format!("monotone, k=1000 gap {gap:.1e}"))
}

fn ranking_shape() -> Outcome {
    let m = demo_model();
    let r = Checker::new(&m)
        .rank_situations(&PathFormula::eventually(StateFormula::atom("fail")))
        .map_err(|e| e.to_string())?;
    ensure(
        r.entries
            .windows(2)
            .all(|w| w[0].probability >= w[1].probability),
        || "not descending".into(),
    )?;
    let mut codes: Vec<String> = r.entries.iter().map(|e| e.code.clone()).collect();
    codes.sort();
    ensure(codes == demo_grid().covered(), || {
        format!("codes {codes:?}")
    })?;
    Ok(format!("{} entries, descending", r.entries.len()))
}

fn random_state<R: Rng>(rng: &mut R, depth: u32) -> StateFormula {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..4) {
            0 => StateFormula::True,
            1 => StateFormula::False,
            _ => {
                let len = rng.gen_range(1..=6);
                let s: String = (0..len)
                    .map(|_| b"abcdefxyzNY019_:"[rng.gen_range(0..16)] as char)
                    .collect();
                StateFormula::atom(s)
            }
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..4) {
        0 => StateFormula::not(random_state(rng, d)),
        1 => StateFormula::and(random_state(rng, d), random_state(rng, d)),
        2 => StateFormula::or(random_state(rng, d), random_state(rng, d)),
        _ => {
            let bound = if rng.gen_bool(0.3) {
                ProbBound::Query
            } else {
                let op = [
                    Comparison::Lt,
                    Comparison::Le,
                    Comparison::Gt,
                    Comparison::Ge,
                ][rng.gen_range(0..4)];
                let p = if rng.gen_bool(0.5) {
                    rng.gen_range(0..=100) as f64 / 100.0
                } else {
                    rng.gen::<f64>()
                };
                ProbBound::Threshold(op, p)
            };
            let path = match rng.gen_range(0..5) {
                0 => PathFormula::next(random_state(rng, d)),
                1 => PathFormula::until(random_state(rng, d), random_state(rng, d)),
                2 => PathFormula::eventually(random_state(rng, d)),
                3 => PathFormula::bounded_eventually(random_state(rng, d), rng.gen_range(0..100)),
                _ => PathFormula::bounded_until(
                    random_state(rng, d),
                    random_state(rng, d),
                    rng.gen_range(0..100),
                ),
            };
            StateFormula::prob(bound, path)
        }
    }
}

fn parser_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..1000 {
        let formula = random_state(&mut rng, 4);
        let q = if rng.gen_bool(0.3) {
            Query::filtered(formula, format!("s{}", rng.gen_range(1..17)))
        } else {
            Query::new(formula)
        };
        let text = format(&q);
        let back = parse(&text).map_err(|e| format!("query {i} `{text}`: {e}"))?;
        ensure(back == q, || {
            format!("query {i} `{text}` parsed differently")
        })?;
    }
    let static_q = parse(r#"P=?[F "collision_static"]"#).map_err(|e| e.to_string())?;
    let want = Query::new(StateFormula::prob(
        ProbBound::Query,
        PathFormula::until(StateFormula::True, StateFormula::atom("collision_static")),
    ));
    ensure(static_q == want, || format!("{static_q:?}"))?;
    let filtered = parse(r#"filter(state, P=?[F "fail"], "s3")"#).map_err(|e| e.to_string())?;
    let want = Query::filtered(
        StateFormula::prob(
            ProbBound::Query,
            PathFormula::until(StateFormula::True, StateFormula::atom("fail")),
        ),
        "s3",
    );
    ensure(filtered == want, || format!("{filtered:?}"))?;
    Ok("1000 generated queries, both case-study queries".into())
}

fn export_round_trips() -> Outcome {
    let grid = demo_grid();
    let csv = export_grid_csv(&grid);
    let back = AugmentedGrid::from_csv(&csv).map_err(|e| e.to_string())?;
    ensure(back.same_distributions(&grid), || {
        "grid differs after re-read".into()
    })?;
    ensure(export_grid_csv(&back) == csv, || {
        "grid csv not stable".into()
    })?;
    ensure(export_grid_csv(&demo_grid()) == csv, || {
        "grid csv differs across runs".into()
    })?;

    let m = demo_model();
    let (model, labels) = export_prism(&m);
    let re = import_prism(&model, &labels).map_err(|e| e.to_string())?;
    ensure(re == m, || "model differs after re-read".into())?;
    ensure(
        export_prism(&demo_model()) == (model.clone(), labels.clone()),
        || "prism output differs across runs".into(),
    )?;
    Ok(format!(
        "grid {} bytes, model {} bytes",
        csv.len(),
        model.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "enumeration", Duration::from_secs(1), enumeration),
        (2, "coverage pruning", Duration::from_secs(1), coverage),
        (3, "case-study row", Duration::from_secs(1), case_study_row),
        (4, "DTMC synthesis", Duration::from_secs(1), synthesis),
        (
            5,
            "checker oracle equivalence",
            Duration::from_secs(60),
            oracle_equivalence,
        ),
        (
            6,
            "hand-solvable values",
            Duration::from_secs(1),
            hand_values,
        ),
        (
            7,
            "bounded-until convergence",
            Duration::from_secs(5),
            bounded_convergence,
        ),
        (8, "ranking shape", Duration::from_secs(1), ranking_shape),
        (
            9,
            "parser round trip",
            Duration::from_secs(5),
            parser_round_trip,
        ),
        (
            10,
            "export round trips",
            Duration::from_secs(1),
            export_round_trips,
        ),
    ];
    let mut failed = 0;
    for (n, name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; over the {limit:?} limit")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {n:>2} {name}: {detail} ({elapsed:.2?})"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {n:>2} {name}: {why} ({elapsed:.2?})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
