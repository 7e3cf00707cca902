//! Simulation harness: scenario files, the stepping loop, metrics, logs and
//! batch evaluation.

pub mod batch;
pub mod log;
pub mod metrics;
pub mod scenario;
pub mod sim;

pub use batch::{batch, bench_horizon, randomize, BatchReport, HorizonTiming};
pub use log::{TrajectoryLog, TrajectoryRow};
pub use metrics::{DeadlockEvent, RunMetrics, Summary};
pub use scenario::{Scenario, ScenarioFile};
pub use sim::{run, run_with, Mode, RunOptions, RunOutcome, Simulation, StepReport};
