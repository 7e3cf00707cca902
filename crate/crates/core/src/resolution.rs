//! Heuristic deadlock resolution.
//!
//! On a detected deadlock the involved robots are ranked by how close their
//! end effectors are to their goals. The top robot gets a stronger attractor;
//! every other involved robot retreats along the line away from the top
//! robot's goal. Once the robots move again and a minimum time has passed,
//! or one of them reaches its original goal, the saved parameters are restored.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FabricError, Result};
use crate::fabric::PlannerParams;
use crate::kinematics::Point;
use crate::rollout::RolloutConfig;

/// Distances closer than this are ties.
pub const PRIORITY_TIE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolutionConfig {
    pub gamma_high: f64,
    /// Retreat distance of lower-priority robots (m).
    pub retreat: f64,
    /// Taken from the scenario seed, not from the resolution table.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for ResolutionConfig {
    fn default() -> Self {
        Self {
            gamma_high: 3.0,
            retreat: 0.3,
            seed: 0,
        }
    }
}

impl ResolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_high >= 0.0 && self.retreat > 0.0) {
            return Err(FabricError::Config(
                "resolution needs gamma_high >= 0 and retreat > 0".into(),
            ));
        }
        Ok(())
    }

    /// Tie-breaking RNG for the `event`-th deadlock of a run. Any robot that
    /// counts deadlock events reproduces it without communication.
    pub fn rng_for_event(&self, event: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(event))
    }
}

/// Order `robots` by ascending end-effector distance to their goals; runs of
/// ties are shuffled with `rng`.
pub fn assign_priority(robots: &[usize], ee_positions: &[Point], goals: &[Point], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let dist = |i: usize| (ee_positions[i] - goals[i]).norm();
    let mut order: Vec<usize> = robots.to_vec();
    order.sort_by(|a, b| dist(*a).total_cmp(&dist(*b)).then(a.cmp(b)));
    let mut start = 0;
    while start < order.len() {
        let anchor = dist(order[start]);
        let mut end = start + 1;
        while end < order.len() && dist(order[end]) - anchor <= PRIORITY_TIE_TOLERANCE {
            end += 1;
        }
        order[start..end].shuffle(rng);
        start = end;
    }
    order
}

/// Retreat goal of a lower-priority robot: `ρ` beyond its end effector, on
/// the ray from the high-priority goal through that end effector.
pub fn retreat_goal(low_ee: &Point, high_goal: &Point, high_ee: &Point, retreat: f64) -> Point {
    let mut away = low_ee - high_goal;
    if away.norm() < 1e-9 {
        away = low_ee - high_ee;
    }
    if away.norm() < 1e-9 {
        away = Point::new(0.0, 1.0);
    }
    low_ee + away.normalize() * retreat
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResolutionState {
    pub active: bool,
    pub priority_order: Vec<usize>,
    /// Original θ of each involved robot, present only while active.
    pub saved_params: Vec<(usize, PlannerParams)>,
    pub activation_time: f64,
    pub rng_seed: u64,
}

impl ResolutionState {
    pub fn new(rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..Default::default()
        }
    }

    pub fn involved(&self) -> impl Iterator<Item = usize> + '_ {
        self.priority_order.iter().copied()
    }

    pub fn original_goal(&self, robot: usize) -> Option<Point> {
        self.saved_params.iter().find(|(i, _)| *i == robot).map(|(_, p)| p.goal)
    }

    /// Restore the saved parameters into `params` and deactivate.
    pub fn release(&mut self, params: &mut [PlannerParams]) -> Result<()> {
        if !self.active {
            return Err(FabricError::InvalidState("no active deadlock resolution".into()));
        }
        for (i, saved) in self.saved_params.drain(..) {
            params[i] = saved;
        }
        self.active = false;
        self.priority_order.clear();
        Ok(())
    }
}

/// Switch the involved robots to resolution parameters: the first robot in
/// `order` gets `γ_high`, the rest retreat. The original parameters are
/// saved in `state`.
#[allow(clippy::too_many_arguments)]
pub fn apply_resolution(
    state: &mut ResolutionState,
    deadlock_detected: bool,
    order: &[usize],
    params: &mut [PlannerParams],
    ee_positions: &[Point],
    now: f64,
    config: &ResolutionConfig,
) -> Result<()> {
    if !deadlock_detected {
        return Err(FabricError::InvalidState(
            "resolution applied without a detected deadlock".into(),
        ));
    }
    if state.active {
        return Err(FabricError::InvalidState("resolution already active".into()));
    }
    let (&high, lows) = order
        .split_first()
        .ok_or_else(|| FabricError::InvalidState("empty priority order".into()))?;
    state.saved_params = order.iter().map(|&i| (i, params[i].clone())).collect();
    let high_goal = params[high].goal;
    params[high].attractor_weight = config.gamma_high;
    for &low in lows {
        params[low].goal = retreat_goal(&ee_positions[low], &high_goal, &ee_positions[high], config.retreat);
    }
    state.active = true;
    state.priority_order = order.to_vec();
    state.activation_time = now;
    Ok(())
}

/// Release condition: every involved robot predicted faster than `v_d_min`
/// after at least `t_d_min`, or any involved robot within tolerance of its
/// original goal.
pub fn check_release(
    state: &ResolutionState,
    mean_speed: &[f64],
    ee_positions: &[Point],
    now: f64,
    config: &RolloutConfig,
) -> bool {
    if !state.active {
        return false;
    }
    let moving = state.involved().all(|i| mean_speed[i] > config.v_d_min);
    let waited = now - state.activation_time >= config.t_d_min - 1e-9;
    let reached = state
        .saved_params
        .iter()
        .any(|(i, p)| (ee_positions[*i] - p.goal).norm() <= p.goal_tolerance);
    (moving && waited) || reached
}
