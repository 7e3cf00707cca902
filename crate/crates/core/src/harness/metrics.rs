//! Per-run metrics and their aggregation over seeds.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeadlockEvent {
    pub detected_at: f64,
    pub pairs: Vec<(usize, usize)>,
    /// Involved robots, highest priority first.
    pub priority: Vec<usize>,
    pub released_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub success: bool,
    /// Time at which every goal was done; only set on success.
    pub time_to_success: Option<f64>,
    pub collision: bool,
    /// Smallest sphere clearance over the run; only set on success.
    pub min_clearance: Option<f64>,
    pub compute_median_ms: f64,
    pub compute_p95_ms: f64,
    pub deadlocks: Vec<DeadlockEvent>,
    pub failure: Option<String>,
    pub steps: usize,
}

impl RunMetrics {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_run(
        success: bool,
        success_time: Option<f64>,
        collision: bool,
        min_clearance: f64,
        compute_ms: &[f64],
        deadlocks: Vec<DeadlockEvent>,
        failure: Option<String>,
        steps: usize,
    ) -> Self {
        Self {
            success,
            time_to_success: success_time.filter(|_| success),
            collision,
            // Infinite when there was nothing to collide with.
            min_clearance: (success && min_clearance.is_finite()).then_some(min_clearance),
            compute_median_ms: percentile(compute_ms, 0.5),
            compute_p95_ms: percentile(compute_ms, 0.95),
            deadlocks,
            failure,
            steps,
        }
    }

    pub fn deadlock_count(&self) -> usize {
        self.deadlocks.len()
    }
}

/// Nearest-rank percentile; 0 for an empty sample.
pub fn percentile(samples: &[f64], p: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Mean and sample standard deviation; `None` for an empty sample.
pub fn mean_std(samples: &[f64]) -> Option<(f64, f64)> {
    if samples.is_empty() {
        return None;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean, var.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub success_rate: f64,
    pub collision_rate: f64,
    pub deadlock_rate: f64,
    /// Over successful runs only.
    pub time_to_success: Option<(f64, f64)>,
    pub min_clearance: Option<(f64, f64)>,
    pub compute_median_ms: Option<(f64, f64)>,
}

impl Summary {
    pub fn of(runs: &[RunMetrics]) -> Self {
        let n = runs.len().max(1) as f64;
        let rate = |f: &dyn Fn(&RunMetrics) -> bool| runs.iter().filter(|r| f(r)).count() as f64 / n;
        let times: Vec<f64> = runs.iter().filter_map(|r| r.time_to_success).collect();
        let clearances: Vec<f64> = runs.iter().filter_map(|r| r.min_clearance).collect();
        let compute: Vec<f64> = runs.iter().map(|r| r.compute_median_ms).collect();
        Self {
            runs: runs.len(),
            success_rate: rate(&|r| r.success),
            collision_rate: rate(&|r| r.collision),
            deadlock_rate: rate(&|r| !r.deadlocks.is_empty()),
            time_to_success: mean_std(&times),
            min_clearance: mean_std(&clearances),
            compute_median_ms: mean_std(&compute),
        }
    }
}
