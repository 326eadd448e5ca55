//! Acceptance suite: all eleven criteria at full size.
//!
//! `cargo test -p starwalk --test acceptance` runs everything; trailing arguments
//! select criteria by number, e.g. `-- 3 8`.

use std::process::ExitCode;

use starwalk::verify::{render_table, run_criterion, Suite, SuiteConfig, CRITERIA};

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let cfg = SuiteConfig { suite: Suite::Primary, seed: 42 };
    let mut failed = 0;
    let mut ran = 0;
    for (id, _, _) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let report = run_criterion(id, &cfg).expect("criterion ids come from the table");
        print!("{}", render_table(std::slice::from_ref(&report)));
        ran += 1;
        if !report.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
