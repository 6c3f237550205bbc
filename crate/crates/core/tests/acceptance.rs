//! Acceptance run: one pass/fail line per criterion, non-zero exit on any
//! gating failure.

use std::process::ExitCode;
use std::time::Instant;

use enthier::suites::{self, SuiteOptions, SuiteReport};

struct Criterion {
    id: usize,
    title: &'static str,
    run: fn(&SuiteOptions) -> SuiteReport,
}

fn main() -> ExitCode {
    let dump = tempfile::tempdir().expect("temporary directory");
    let opts = SuiteOptions {
        dump_dir: Some(dump.path().to_path_buf()),
        ..SuiteOptions::default()
    };
    let criteria = [
        Criterion { id: 1, title: "table reproduction of the essential subsets", run: suites::table },
        Criterion { id: 2, title: "psi_r replay: reduction holds, Bell block", run: suites::psi_r },
        Criterion { id: 3, title: "psi_a replay: mixed marginals, NPT block, DMM", run: suites::psi_a },
        Criterion { id: 4, title: "six-condition equivalence on 200 random states", run: suites::six_conditions },
        Criterion { id: 5, title: "converse counterexample", run: suites::converse },
        Criterion { id: 6, title: "two non-distillable pairs force S and MC", run: suites::two_nondistillable },
        Criterion { id: 7, title: "Petz recovery and extraction", run: suites::petz },
        Criterion { id: 8, title: "N-party GHZ equivalence", run: suites::ghz_equivalence },
        Criterion { id: 9, title: "monoid identities and random products", run: suites::monoid },
        Criterion { id: 10, title: "PPT equals reduction on 2xN", run: suites::qubit_qudit },
        Criterion { id: 11, title: "conjecture scan (non-gating)", run: suites::conjecture },
    ];
    let start = Instant::now();
    let mut failed = 0;
    for c in &criteria {
        let t = Instant::now();
        let rep = (c.run)(&opts);
        let mark = if rep.pass() { "PASS" } else { "FAIL" };
        println!(
            "[{mark}] {:>2}. {} ({}, {:.1}s)",
            c.id,
            c.title,
            rep.summary,
            t.elapsed().as_secs_f64()
        );
        if !rep.pass() {
            failed += 1;
            for f in rep.failures().take(5) {
                println!("         {}: {}", f.name, f.detail);
            }
        }
    }
    println!(
        "{} of {} criteria pass in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
