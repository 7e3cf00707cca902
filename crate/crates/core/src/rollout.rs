//! Rollout fabrics: forward propagation of every robot's policy over a short
//! horizon, deadlock detection on the predicted speeds, and constant-velocity
//! goal estimation for peers whose goals are not communicated.

use serde::{Deserialize, Serialize};

use crate::error::{FabricError, Result};
use crate::kinematics::{Point, RobotState};
use crate::linalg::Vector;
use crate::multi_robot::{Fleet, FleetSnapshot};

/// Where peer goals come from during a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GoalSource {
    /// Goals are communicated (RF).
    #[default]
    Communicated,
    /// Goals are extrapolated from end-effector velocity (RF-CV).
    ConstantVelocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutConfig {
    /// Prediction steps K.
    pub horizon: usize,
    pub dt: f64,
    /// Deadlock speed threshold (rad/s).
    pub v_d_min: f64,
    /// Deadlock end-effector distance threshold (m).
    pub d_ee_c: f64,
    /// Minimum time a resolution stays active (s).
    pub t_d_min: f64,
    /// Goal-estimation lookahead H in steps; `None` uses the horizon.
    pub lookahead: Option<usize>,
    pub goal_source: GoalSource,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            dt: 0.01,
            v_d_min: 0.03,
            d_ee_c: 0.35,
            t_d_min: 3.0,
            lookahead: None,
            goal_source: GoalSource::Communicated,
        }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(FabricError::Config("rollout horizon must be >= 1".into()));
        }
        if !(self.dt > 0.0 && self.v_d_min > 0.0 && self.d_ee_c > 0.0 && self.t_d_min > 0.0) {
            return Err(FabricError::Config("rollout thresholds must be positive".into()));
        }
        if self.lookahead == Some(0) {
            return Err(FabricError::Config("goal lookahead must be >= 1".into()));
        }
        Ok(())
    }

    pub fn lookahead_steps(&self) -> usize {
        self.lookahead.unwrap_or(self.horizon)
    }
}

/// Second-order integrator step: `q' = q + Δt q̇`, `q̇' = q̇ + Δt q̈`.
pub fn integrate(q: &Vector, qd: &Vector, qdd: &Vector, dt: f64) -> (Vector, Vector) {
    (q + qd * dt, qd + qdd * dt)
}

/// Predicted trajectories of the whole fleet plus the deadlock verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    /// `q[i][k]`, k = 0..=K
    pub q: Vec<Vec<Vector>>,
    /// `qd[i][k]`, k = 0..=K
    pub qd: Vec<Vec<Vector>>,
    /// `qdd[i][k]`, k = 0..K
    pub qdd: Vec<Vec<Vector>>,
    /// Mean joint speed over the horizon per robot.
    pub mean_speed: Vec<f64>,
    /// End-effector positions at k = 0.
    pub ee_positions: Vec<Point>,
    pub deadlock: bool,
    pub deadlock_pairs: Vec<(usize, usize)>,
}

impl RolloutResult {
    pub fn horizon(&self) -> usize {
        self.qdd.first().map_or(0, |v| v.len())
    }

    /// First predicted action of every robot.
    pub fn first_actions(&self) -> Vec<Vector> {
        self.qdd.iter().map(|a| a[0].clone()).collect()
    }

    pub fn first_prediction(&self, robot: usize) -> RobotState {
        RobotState::new(self.q[robot][1].clone(), self.qd[robot][1].clone())
    }
}

/// `v̄ = (1/K) Σ_{k=0}^{K} ‖q̇_k‖`: K+1 terms over a divisor of K.
pub fn mean_speed(qd: &[Vector]) -> f64 {
    let k = qd.len().saturating_sub(1).max(1);
    qd.iter().map(|v| v.norm()).sum::<f64>() / k as f64
}

/// Pairs `(i, p)`, `i < p`, where both predicted mean speeds are below
/// `v_d_min` and the end effectors are closer than `d_ee_c`.
pub fn detect_deadlock(
    mean_speed: &[f64],
    ee_positions: &[Point],
    config: &RolloutConfig,
) -> (bool, Vec<(usize, usize)>) {
    let mut pairs = Vec::new();
    for i in 0..mean_speed.len() {
        for p in (i + 1)..mean_speed.len() {
            if mean_speed[i] < config.v_d_min
                && mean_speed[p] < config.v_d_min
                && (ee_positions[i] - ee_positions[p]).norm() < config.d_ee_c
            {
                pairs.push((i, p));
            }
        }
    }
    (!pairs.is_empty(), pairs)
}

/// Constant-velocity goal estimate `x_ee + H Δt v_ee`.
pub fn estimate_goal(x_ee: &Point, v_ee: &Point, lookahead: usize, dt: f64) -> Point {
    x_ee + v_ee * (lookahead as f64 * dt)
}

/// Snapshot as seen by `ego` in RF-CV mode: every peer goal replaced by its
/// constant-velocity estimate.
pub fn with_estimated_goals(
    fleet: &Fleet,
    snapshot: &FleetSnapshot,
    ego: usize,
    config: &RolloutConfig,
) -> FleetSnapshot {
    let mut seen = snapshot.clone();
    for (p, planner) in fleet.planners().iter().enumerate() {
        if p == ego {
            continue;
        }
        let s = &snapshot.states[p];
        let ee = planner.model().end_effector_kinematics(&s.q, &s.qd);
        seen.params[p].goal = estimate_goal(&ee.position, &ee.velocity(&s.qd), config.lookahead_steps(), config.dt);
    }
    seen
}

/// Propagate all policies K steps from `snapshot` and evaluate the deadlock
/// condition.
pub fn rollout(fleet: &Fleet, snapshot: &FleetSnapshot, config: &RolloutConfig) -> Result<RolloutResult> {
    let n = fleet.len();
    if snapshot.len() != n {
        return Err(FabricError::DimensionMismatch {
            expected: n,
            found: snapshot.len(),
        });
    }
    let k_max = config.horizon;
    let mut q: Vec<Vec<Vector>> = snapshot.states.iter().map(|s| vec![s.q.clone()]).collect();
    let mut qd: Vec<Vec<Vector>> = snapshot.states.iter().map(|s| vec![s.qd.clone()]).collect();
    let mut qdd: Vec<Vec<Vector>> = vec![Vec::with_capacity(k_max); n];
    let mut current = snapshot.clone();
    for k in 0..k_max {
        let accels = fleet.plan_all(&current).map_err(|e| e.at_step(k))?;
        for (i, a) in accels.into_iter().enumerate() {
            let s = &mut current.states[i];
            let (nq, nqd) = integrate(&s.q, &s.qd, &a, config.dt);
            q[i].push(nq.clone());
            qd[i].push(nqd.clone());
            qdd[i].push(a);
            s.q = nq;
            s.qd = nqd;
        }
        current.time += config.dt;
    }
    let mean_speed: Vec<f64> = qd.iter().map(|v| mean_speed(v)).collect();
    let ee_positions: Vec<Point> = fleet
        .planners()
        .iter()
        .zip(&snapshot.states)
        .map(|(p, s)| p.model().end_effector(&s.q))
        .collect();
    let (deadlock, deadlock_pairs) = detect_deadlock(&mean_speed, &ee_positions, config);
    Ok(RolloutResult {
        q,
        qd,
        qdd,
        mean_speed,
        ee_positions,
        deadlock,
        deadlock_pairs,
    })
}

/// Rollout from the point of view of `ego`, applying the configured goal source.
pub fn rollout_for(
    fleet: &Fleet,
    snapshot: &FleetSnapshot,
    ego: usize,
    config: &RolloutConfig,
) -> Result<RolloutResult> {
    match config.goal_source {
        GoalSource::Communicated => rollout(fleet, snapshot, config),
        GoalSource::ConstantVelocity => rollout(fleet, &with_estimated_goals(fleet, snapshot, ego, config), config),
    }
}

/// Bring a stale snapshot forward by `steps` integrator steps using the
/// communicated policies.
pub fn extrapolate_stale(fleet: &Fleet, stale: &FleetSnapshot, steps: usize, dt: f64) -> Result<FleetSnapshot> {
    let mut current = stale.clone();
    for k in 0..steps {
        let accels = fleet.plan_all(&current).map_err(|e| e.at_step(k))?;
        for (s, a) in current.states.iter_mut().zip(&accels) {
            let (nq, nqd) = integrate(&s.q, &s.qd, a, dt);
            s.q = nq;
            s.qd = nqd;
        }
        current.time += dt;
    }
    Ok(current)
}
