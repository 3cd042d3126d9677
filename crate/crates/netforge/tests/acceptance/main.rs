//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the
//! process fails if any criterion fails. Pass criterion numbers as
//! arguments to run a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

mod learning;
mod oracle;
mod structure;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn check(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

type Criterion = (usize, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "verifier oracle equivalence", structure::oracle_equivalence),
    (2, "combinatorial counts", structure::counts),
    (3, "codec bijectivity", structure::codec),
    (4, "gradient correctness", learning::gradients),
    (5, "classifier quality", learning::classifier),
    (6, "compressed-space optimality", learning::compressed_optimality),
    (7, "large-profile ordering", learning::ordering),
    (8, "reward source switching", learning::switching),
    (9, "determinism", learning::determinism),
    (10, "penalty floor", structure::penalty_floor),
];

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::check(false, format!("panicked: {msg}"))
        });
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {name}: {verdict} ({}; {:.1} s)", out.detail, t.elapsed().as_secs_f64());
        if !out.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
