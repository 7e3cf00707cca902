//! Acceptance run: every criterion once, sequentially (timing criteria must
//! not share the CPU with other tests), one PASS/FAIL line each.

mod common;

use std::process::ExitCode;

use common::criteria::{self, Verdict};

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, v: Verdict| {
        println!(
            "criterion {n:>2} {name:<38} {}  {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.pass {
            failed += 1;
        }
    };
    report(1, "algebra oracle", criteria::algebra_oracle());
    report(2, "frictionless fabric", criteria::frictionless());
    report(3, "homogeneity", criteria::homogeneity());
    report(4, "kinematics oracle", criteria::kinematics_oracle());
    report(5, "single-robot convergence", criteria::convergence());
    let bench = criteria::desk_benchmark();
    report(
        6,
        "deadlock reproduction and resolution",
        criteria::deadlock_resolution(&bench),
    );
    report(7, "RF-CV parity", criteria::cv_parity(&bench));
    report(8, "rollout consistency", criteria::rollout_consistency());
    report(9, "horizon scaling", criteria::horizon_scaling());
    report(10, "deadlock detector truth table", criteria::detector_truth_table());
    println!("{}", bench.report.table());
    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria fail");
        ExitCode::FAILURE
    }
}
