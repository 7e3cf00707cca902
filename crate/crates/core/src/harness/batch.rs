//! Seeded batches over randomized goals and the horizon sweep.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FabricError, Result};
use crate::harness::metrics::{RunMetrics, Summary};
use crate::harness::scenario::Scenario;
use crate::harness::sim::{run_with, Mode, RunOptions, Simulation};
use crate::kinematics::Point;

/// Sampled goals must lie in this fraction band of the robot's reach.
pub const REACH_BAND: (f64, f64) = (0.25, 0.95);
const MAX_REJECTIONS: usize = 10_000;

/// Copy of `scenario` for one batch seed: goals with a region are resampled
/// uniformly inside it (rejecting unreachable points).
pub fn randomize(scenario: &Scenario, seed: u64) -> Result<Scenario> {
    let mut out = scenario.clone();
    out.seed = seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for robot in &mut out.robots {
        let Some(regions) = robot.goal_regions.clone() else {
            continue;
        };
        let base = robot.model.base().position();
        let reach = robot.model.max_reach();
        for (goal, region) in robot.goals.iter_mut().zip(&regions) {
            let mut tries = 0;
            *goal = loop {
                let g = Point::new(
                    rng.random_range(region.min[0]..=region.max[0]),
                    rng.random_range(region.min[1]..=region.max[1]),
                );
                let r = (g - base).norm();
                if r >= REACH_BAND.0 * reach && r <= REACH_BAND.1 * reach {
                    break g;
                }
                tries += 1;
                if tries > MAX_REJECTIONS {
                    return Err(FabricError::Config(format!(
                        "goal region of {} has no reachable points",
                        robot.name
                    )));
                }
            };
        }
        robot.params.goal = robot.goals[0];
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchReport {
    pub scenario: String,
    pub seeds: Vec<u64>,
    /// Per mode, one entry per seed in `seeds` order.
    pub runs: BTreeMap<Mode, Vec<RunMetrics>>,
    pub summary: BTreeMap<Mode, Summary>,
}

impl PartialOrd for Mode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Mode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

/// Run `runs` seeds (`first_seed..`) of every mode.
pub fn batch(
    scenario: &Scenario,
    runs: usize,
    first_seed: u64,
    modes: &[Mode],
    horizon: Option<usize>,
) -> Result<BatchReport> {
    let seeds: Vec<u64> = (0..runs as u64).map(|i| first_seed + i).collect();
    let scenarios = seeds
        .iter()
        .map(|&s| randomize(scenario, s))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for &mode in modes {
        for (i, _) in seeds.iter().enumerate() {
            jobs.push((mode, i));
        }
    }
    let one = |&(mode, i): &(Mode, usize)| -> Result<(Mode, usize, RunMetrics)> {
        let options = RunOptions {
            horizon,
            ..RunOptions::new(mode)
        };
        Ok((mode, i, run_with(&scenarios[i], &options)?.metrics))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        jobs.par_iter().map(one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = jobs.iter().map(one).collect::<Result<_>>()?;

    let mut by_mode: BTreeMap<Mode, Vec<Option<RunMetrics>>> = BTreeMap::new();
    for (mode, i, m) in results {
        by_mode.entry(mode).or_insert_with(|| vec![None; seeds.len()])[i] = Some(m);
    }
    let runs: BTreeMap<Mode, Vec<RunMetrics>> = by_mode
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().map(|m| m.expect("every job ran")).collect()))
        .collect();
    let summary = runs.iter().map(|(k, v)| (*k, Summary::of(v))).collect();
    Ok(BatchReport {
        scenario: scenario.name.clone(),
        seeds,
        runs,
        summary,
    })
}

fn pm(v: Option<(f64, f64)>, scale: f64, digits: usize) -> String {
    match v {
        Some((m, s)) => format!("{:.*} ± {:.*}", digits, m * scale, digits, s * scale),
        None => "n/a".into(),
    }
}

impl BatchReport {
    /// Plain-text comparison table, one row per mode.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<7} {:>8} {:>10} {:>10} {:>16} {:>18} {:>16}\n",
            "mode", "success", "collision", "deadlock", "time [s]", "min clear [cm]", "compute [ms]"
        );
        for (mode, s) in &self.summary {
            out.push_str(&format!(
                "{:<7} {:>8.2} {:>10.2} {:>10.2} {:>16} {:>18} {:>16}\n",
                mode.as_str(),
                s.success_rate,
                s.collision_rate,
                s.deadlock_rate,
                pm(s.time_to_success, 1.0, 2),
                pm(s.min_clearance, 100.0, 2),
                pm(s.compute_median_ms, 1.0, 3),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorizonTiming {
    pub horizon: usize,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub steps: usize,
}

/// Per-step compute time of RF for each horizon over the first `max_steps`
/// steps of the scenario.
pub fn bench_horizon(scenario: &Scenario, horizons: &[usize], max_steps: usize) -> Result<Vec<HorizonTiming>> {
    horizons
        .iter()
        .map(|&k| {
            let options = RunOptions {
                horizon: Some(k),
                max_steps: Some(max_steps),
                ..RunOptions::new(Mode::Rf)
            };
            let m = Simulation::new(scenario, &options)?.run_to_end().metrics;
            Ok(HorizonTiming {
                horizon: k,
                median_ms: m.compute_median_ms,
                p95_ms: m.compute_p95_ms,
                steps: m.steps,
            })
        })
        .collect()
}
