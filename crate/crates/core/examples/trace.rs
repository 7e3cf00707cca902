//! Prints a step-by-step trace of one run: end-effector positions, joint
//! speeds, active goals and resolution state.
//!
//! cargo run --release --example trace -- scenarios/head_on.toml rf [every] [seed]

use std::process::ExitCode;

use rollout_fabrics::harness::{randomize, Mode, RunOptions, Scenario, Simulation};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (Some(path), Some(mode)) = (args.first(), args.get(1)) else {
        eprintln!("usage: trace <scenario.toml> <mrdf|rf|rf-cv> [every=50] [seed]");
        return ExitCode::from(2);
    };
    let setup = || -> rollout_fabrics::Result<(Scenario, Mode, usize)> {
        let mut scenario = Scenario::load(path)?;
        if let Some(seed) = args.get(3) {
            let seed = seed
                .parse()
                .map_err(|_| rollout_fabrics::FabricError::Config(format!("bad seed '{seed}'")))?;
            scenario = randomize(&scenario, seed)?;
        }
        let every = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(50).max(1);
        Ok((scenario, mode.parse()?, every))
    };
    let (scenario, mode, every) = match setup() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let mut sim = match Simulation::new(&scenario, &RunOptions::new(mode)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let mut k = 0;
    while !sim.is_done() {
        let result = sim.step();
        if k % every == 0 || result.is_err() {
            print!("t={:6.2}", sim.time());
            for (i, (s, p)) in sim.states().iter().zip(sim.params()).enumerate() {
                let ee = sim.end_effectors()[i];
                print!(
                    "  [{i}] ee=({:+.3},{:+.3}) |qd|={:.3} goal=({:+.2},{:+.2})",
                    ee.x,
                    ee.y,
                    s.qd.norm(),
                    p.goal.x,
                    p.goal.y
                );
            }
            println!(
                "  clearance={:.4} resolving={}",
                sim.min_clearance(),
                sim.resolution().active
            );
        }
        if let Err(e) = result {
            println!("failed: {e}");
        }
        k += 1;
    }
    println!("{:?}", sim.metrics());
    ExitCode::SUCCESS
}
