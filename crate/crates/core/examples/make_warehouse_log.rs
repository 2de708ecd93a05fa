//! Regenerates `data/warehouse.csv` from a fixed table of transition counts.
//!
//! Each row below totals 100 observed steps, so MLE probabilities are the
//! counts divided by 100. Runs are cut from the counts by walking the
//! largest remaining edge first; a run ends with `fail:collision` when it
//! uses up a failure count, or with `end` when nothing else leaves the
//! current situation or it reaches `MAX_RUN`.
//!
//! ```text
//! cargo run -p sitgrid --example make_warehouse_log > crates/core/data/warehouse.csv
//! ```

use std::collections::BTreeMap;

const FAIL: &str = "fail";
const MAX_RUN: usize = 40;

const COUNTS: &[(&str, &[(&str, u32)])] = &[
    (
        "NNNN",
        &[
            ("NNNN", 85),
            ("NNNY", 5),
            ("YNNN", 6),
            ("NNYN", 3),
            (FAIL, 1),
        ],
    ),
    (
        "NNNY",
        &[
            ("NNNY", 80),
            ("NNNN", 8),
            ("NNYY", 4),
            ("NYNY", 3),
            ("YNNY", 3),
            (FAIL, 2),
        ],
    ),
    (
        "NNYN",
        &[
            ("NNYN", 78),
            ("NNNN", 9),
            ("NNYY", 3),
            ("NYYN", 4),
            ("YNYN", 3),
            (FAIL, 3),
        ],
    ),
    (
        "NNYY",
        &[
            ("NNYY", 75),
            ("NNNY", 6),
            ("NNYN", 7),
            ("NYYY", 4),
            ("YNYY", 2),
            (FAIL, 6),
        ],
    ),
    (
        "NYNN",
        &[
            ("NYNN", 82),
            ("NNNN", 7),
            ("NYNY", 4),
            ("NYYN", 3),
            (FAIL, 4),
        ],
    ),
    (
        "NYNY",
        &[
            ("NYNY", 79),
            ("NYNN", 6),
            ("NNNY", 5),
            ("NYYY", 3),
            (FAIL, 7),
        ],
    ),
    (
        "NYYN",
        &[
            ("NYYN", 77),
            ("NYNN", 6),
            ("NNYN", 5),
            ("NYYY", 4),
            (FAIL, 8),
        ],
    ),
    (
        "NYYY",
        &[
            ("NYYY", 72),
            ("NYNY", 5),
            ("NYYN", 6),
            ("NNYY", 5),
            (FAIL, 12),
        ],
    ),
    (
        "YNNN",
        &[
            ("YNNN", 80),
            ("NNNN", 10),
            ("YNNY", 4),
            ("YNYN", 4),
            (FAIL, 2),
        ],
    ),
    (
        "YNNY",
        &[
            ("YNNY", 76),
            ("YNNN", 7),
            ("NNNY", 6),
            ("YNYY", 4),
            (FAIL, 7),
        ],
    ),
    (
        "YNYN",
        &[
            ("YNYN", 75),
            ("YNNN", 8),
            ("NNYN", 6),
            ("YNYY", 2),
            (FAIL, 9),
        ],
    ),
    (
        "YNYY",
        &[
            ("YNYY", 70),
            ("YNNY", 6),
            ("YNYN", 7),
            ("NNYY", 5),
            (FAIL, 12),
        ],
    ),
];

fn main() {
    let mut left: BTreeMap<&str, BTreeMap<&str, u32>> = COUNTS
        .iter()
        .map(|(from, row)| (*from, row.iter().copied().collect()))
        .collect();
    for (from, row) in &left {
        assert_eq!(row.values().sum::<u32>(), 100, "row {from}");
    }

    println!("run_id,step,code,event");
    let mut run = 0;
    while let Some(start) = left
        .iter()
        .find(|(_, row)| row.values().any(|&c| c > 0))
        .map(|(k, _)| *k)
    {
        run += 1;
        let mut code = start;
        let mut steps = vec![code];
        let event = loop {
            let row = left.get_mut(code).expect("covered code");
            let next = row
                .iter()
                .filter(|(k, &c)| **k != FAIL && c > 0)
                .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
                .map(|(k, _)| *k);
            match next {
                Some(next) if steps.len() < MAX_RUN => {
                    *row.get_mut(next).unwrap() -= 1;
                    code = next;
                    steps.push(code);
                }
                _ if row[FAIL] > 0 => {
                    *row.get_mut(FAIL).unwrap() -= 1;
                    break "fail:collision";
                }
                _ => break "end",
            }
        };
        let last = steps.len() - 1;
        for (i, code) in steps.iter().enumerate() {
            let ev = if i == last { event } else { "" };
            println!("run-{run:03},{i},{code},{ev}");
        }
    }
}
