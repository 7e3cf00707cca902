//! The stepping loop: snapshot, optional rollout and resolution, plan,
//! integrate, record.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FabricError, Result};
use crate::fabric::PlannerParams;
use crate::harness::log::{TrajectoryLog, TrajectoryRow};
use crate::harness::metrics::{DeadlockEvent, RunMetrics};
use crate::harness::scenario::Scenario;
use crate::kinematics::{clearance, Point, RobotState};
use crate::linalg::Vector;
use crate::multi_robot::{Fleet, FleetSnapshot};
use crate::resolution::{apply_resolution, assign_priority, check_release, ResolutionConfig, ResolutionState};
use crate::rollout::{extrapolate_stale, integrate, rollout, rollout_for, GoalSource, RolloutConfig, RolloutResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Plain multi-robot dynamic fabrics.
    Mrdf,
    /// Rollout fabrics with deadlock resolution, communicated goals.
    Rf,
    /// Rollout fabrics with constant-velocity goal estimation.
    RfCv,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Mrdf, Mode::Rf, Mode::RfCv];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Mrdf => "mrdf",
            Mode::Rf => "rf",
            Mode::RfCv => "rf-cv",
        }
    }

    pub fn uses_rollout(&self) -> bool {
        !matches!(self, Mode::Mrdf)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = FabricError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mrdf" => Ok(Mode::Mrdf),
            "rf" => Ok(Mode::Rf),
            "rf-cv" | "rf_cv" | "rfcv" => Ok(Mode::RfCv),
            other => Err(FabricError::Config(format!(
                "unknown mode '{other}' (expected mrdf, rf or rf-cv)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub mode: Mode,
    pub horizon: Option<usize>,
    pub record_log: bool,
    /// Stop after this many steps regardless of `t_max`.
    pub max_steps: Option<usize>,
}

impl RunOptions {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            horizon: None,
            record_log: false,
            max_steps: None,
        }
    }
}

/// Wall-clock stopwatch; reads zero where no monotonic clock exists.
struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed_ms(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64() * 1e3
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// Each ego's first action, the union of detected deadlock pairs, each
/// robot's own predicted mean speed, and the rollout kept for inspection.
struct StepRollout {
    actions: Vec<Vector>,
    pairs: Vec<(usize, usize)>,
    speeds: Vec<f64>,
    result: RolloutResult,
}

/// What happened during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub time: f64,
    pub actions: Vec<Vector>,
    pub deadlock_detected: bool,
    pub resolution_active: bool,
    pub compute_ms: f64,
}

pub struct Simulation {
    scenario: Scenario,
    mode: Mode,
    rollout_config: RolloutConfig,
    resolution_config: ResolutionConfig,
    fleet: Fleet,
    states: Vec<RobotState>,
    params: Vec<PlannerParams>,
    goal_index: Vec<usize>,
    dwell: Vec<f64>,
    finished: Vec<bool>,
    resolution: ResolutionState,
    events: Vec<DeadlockEvent>,
    predicted_peers: Option<FleetSnapshot>,
    step_index: usize,
    max_steps: usize,
    time: f64,
    min_clearance: f64,
    collision: bool,
    compute_ms: Vec<f64>,
    log: Option<TrajectoryLog>,
    last_rollout: Option<RolloutResult>,
    failure: Option<FabricError>,
    success_time: Option<f64>,
}

impl Simulation {
    pub fn new(scenario: &Scenario, options: &RunOptions) -> Result<Self> {
        let mut rollout_config = scenario.rollout.clone();
        if let Some(k) = options.horizon {
            rollout_config.horizon = k;
        }
        rollout_config.goal_source = match options.mode {
            Mode::RfCv => GoalSource::ConstantVelocity,
            _ => GoalSource::Communicated,
        };
        rollout_config.validate()?;
        let fleet = Fleet::new(&scenario.models(), &scenario.fabric, &scenario.obstacles)?;
        let n = scenario.robots.len();
        let max_steps = options
            .max_steps
            .unwrap_or(usize::MAX)
            .min((scenario.t_max / rollout_config.dt).round() as usize);
        let mut sim = Self {
            mode: options.mode,
            fleet,
            states: scenario.robots.iter().map(|r| r.initial.clone()).collect(),
            params: scenario.robots.iter().map(|r| r.params.clone()).collect(),
            goal_index: vec![0; n],
            dwell: vec![0.0; n],
            finished: vec![false; n],
            resolution: ResolutionState::new(scenario.seed),
            events: Vec::new(),
            predicted_peers: None,
            step_index: 0,
            max_steps,
            time: 0.0,
            min_clearance: f64::INFINITY,
            collision: false,
            compute_ms: Vec::new(),
            log: options.record_log.then(|| TrajectoryLog::new(rollout_config.dt)),
            last_rollout: None,
            failure: None,
            success_time: None,
            rollout_config,
            resolution_config: ResolutionConfig {
                seed: scenario.seed,
                ..scenario.resolution.clone()
            },
            scenario: scenario.clone(),
        };
        sim.update_clearance();
        Ok(sim)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn fleet(&self) -> &Fleet {
        &self.fleet
    }

    pub fn rollout_config(&self) -> &RolloutConfig {
        &self.rollout_config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn states(&self) -> &[RobotState] {
        &self.states
    }

    pub fn params(&self) -> &[PlannerParams] {
        &self.params
    }

    pub fn resolution(&self) -> &ResolutionState {
        &self.resolution
    }

    pub fn events(&self) -> &[DeadlockEvent] {
        &self.events
    }

    pub fn last_rollout(&self) -> Option<&RolloutResult> {
        self.last_rollout.as_ref()
    }

    pub fn min_clearance(&self) -> f64 {
        self.min_clearance
    }

    pub fn goals_reached(&self) -> Vec<usize> {
        self.goal_index.clone()
    }

    pub fn mission_goal(&self, robot: usize) -> Point {
        let goals = &self.scenario.robots[robot].goals;
        goals[self.goal_index[robot].min(goals.len() - 1)]
    }

    pub fn is_success(&self) -> bool {
        self.finished.iter().all(|f| *f) && !self.collision && self.failure.is_none()
    }

    pub fn is_done(&self) -> bool {
        self.failure.is_some() || self.finished.iter().all(|f| *f) || self.step_index >= self.max_steps
    }

    pub fn snapshot(&self) -> FleetSnapshot {
        FleetSnapshot {
            time: self.time,
            states: self.states.clone(),
            params: self.params.clone(),
        }
    }

    pub fn end_effectors(&self) -> Vec<Point> {
        self.fleet
            .planners()
            .iter()
            .zip(&self.states)
            .map(|(p, s)| p.model().end_effector(&s.q))
            .collect()
    }

    /// Snapshot as seen by each robot: its own true state, peers either
    /// current or forward-propagated from the last communication.
    fn views(&mut self, snapshot: &FleetSnapshot) -> Result<Option<Vec<FleetSnapshot>>> {
        let period = self.scenario.comm_period;
        if period <= 1 {
            return Ok(None);
        }
        let predicted = if self.step_index.is_multiple_of(period) {
            snapshot.clone()
        } else {
            let prev = self.predicted_peers.as_ref().expect("communicated at step 0");
            extrapolate_stale(&self.fleet, prev, 1, self.rollout_config.dt)?
        };
        let views = (0..snapshot.len())
            .map(|i| {
                let mut v = predicted.clone();
                v.states[i] = snapshot.states[i].clone();
                v.params = snapshot.params.clone();
                v.time = snapshot.time;
                v
            })
            .collect();
        self.predicted_peers = Some(predicted);
        Ok(Some(views))
    }

    fn plan(&self, snapshot: &FleetSnapshot, views: &Option<Vec<FleetSnapshot>>) -> Result<Vec<Vector>> {
        match views {
            None => self.fleet.plan_all(snapshot),
            Some(v) => self
                .fleet
                .planners()
                .iter()
                .zip(v)
                .map(|(p, view)| {
                    let mut own = view.clone();
                    own.params = snapshot.params.clone();
                    p.plan_step(&own)
                })
                .collect(),
        }
    }

    /// Rollout(s) for this step.
    fn rollouts(&self, snapshot: &FleetSnapshot, views: &Option<Vec<FleetSnapshot>>) -> Result<StepRollout> {
        let shared = views.is_none() && self.rollout_config.goal_source == GoalSource::Communicated;
        if shared {
            let r = rollout(&self.fleet, snapshot, &self.rollout_config)?;
            return Ok(StepRollout {
                actions: r.first_actions(),
                pairs: r.deadlock_pairs.clone(),
                speeds: r.mean_speed.clone(),
                result: r,
            });
        }
        let n = snapshot.len();
        let per_ego = |i: usize| -> Result<RolloutResult> {
            let view = views.as_ref().map_or(snapshot, |v| &v[i]);
            rollout_for(&self.fleet, view, i, &self.rollout_config)
        };
        #[cfg(feature = "parallel")]
        let results: Vec<RolloutResult> = {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(per_ego).collect::<Result<_>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let results: Vec<RolloutResult> = (0..n).map(per_ego).collect::<Result<_>>()?;
        let actions = (0..n).map(|i| results[i].qdd[i][0].clone()).collect();
        let speeds = (0..n).map(|i| results[i].mean_speed[i]).collect();
        let mut pairs: Vec<(usize, usize)> = results.iter().flat_map(|r| r.deadlock_pairs.clone()).collect();
        pairs.sort_unstable();
        pairs.dedup();
        let result = results.into_iter().next().expect("at least one robot");
        Ok(StepRollout {
            actions,
            pairs,
            speeds,
            result,
        })
    }

    /// Advance one step. Planner failures end the run and are returned.
    pub fn step(&mut self) -> Result<StepReport> {
        if self.is_done() {
            return Err(FabricError::InvalidState("simulation already finished".into()));
        }
        match self.step_inner() {
            Ok(r) => Ok(r),
            Err(e) => {
                if matches!(e.root(), FabricError::NonpositiveDistance(_)) {
                    self.collision = true;
                }
                self.failure = Some(e.clone());
                Err(e)
            }
        }
    }

    fn step_inner(&mut self) -> Result<StepReport> {
        let watch = Stopwatch::start();
        let snapshot = self.snapshot();
        let views = self.views(&snapshot)?;
        let mut deadlock_detected = false;
        let actions = if self.mode.uses_rollout() {
            let StepRollout {
                actions,
                pairs,
                speeds,
                result,
            } = self.rollouts(&snapshot, &views)?;
            deadlock_detected = !pairs.is_empty();
            let ee = self.end_effectors();
            let mut changed = false;
            if !self.resolution.active && deadlock_detected {
                let mut involved: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
                involved.sort_unstable();
                involved.dedup();
                let goals: Vec<Point> = (0..self.states.len()).map(|i| self.mission_goal(i)).collect();
                let mut rng = self.resolution_config.rng_for_event(self.events.len() as u64);
                let order = assign_priority(&involved, &ee, &goals, &mut rng);
                apply_resolution(
                    &mut self.resolution,
                    true,
                    &order,
                    &mut self.params,
                    &ee,
                    self.time,
                    &self.resolution_config,
                )?;
                log::debug!("t={:.2}: deadlock {:?}, priority {:?}", self.time, pairs, order);
                self.events.push(DeadlockEvent {
                    detected_at: self.time,
                    pairs: pairs.clone(),
                    priority: order,
                    released_at: None,
                });
                changed = true;
            } else if check_release(&self.resolution, &speeds, &ee, self.time, &self.rollout_config) {
                self.resolution.release(&mut self.params)?;
                for i in 0..self.params.len() {
                    self.params[i].goal = self.mission_goal(i);
                }
                log::debug!("t={:.2}: deadlock released", self.time);
                if let Some(ev) = self.events.last_mut() {
                    ev.released_at = Some(self.time);
                }
                changed = true;
            }
            self.last_rollout = Some(result);
            if changed {
                let updated = self.snapshot();
                let views = views.map(|vs| {
                    vs.into_iter()
                        .map(|mut v| {
                            v.params = updated.params.clone();
                            v
                        })
                        .collect()
                });
                self.plan(&updated, &views)?
            } else {
                actions
            }
        } else {
            self.plan(&snapshot, &views)?
        };
        let compute_ms = watch.elapsed_ms();
        self.compute_ms.push(compute_ms);

        if let Some(log) = self.log.as_mut() {
            for (i, (s, a)) in self.states.iter().zip(&actions).enumerate() {
                log.push(TrajectoryRow {
                    t: self.time,
                    robot: i,
                    q: s.q.iter().copied().collect(),
                    qd: s.qd.iter().copied().collect(),
                    qdd: a.iter().copied().collect(),
                });
            }
        }

        let dt = self.rollout_config.dt;
        for (s, a) in self.states.iter_mut().zip(&actions) {
            let (q, qd) = integrate(&s.q, &s.qd, a, dt);
            s.q = q;
            s.qd = qd;
        }
        self.step_index += 1;
        self.time = self.step_index as f64 * dt;
        self.update_clearance();
        self.update_goals();
        Ok(StepReport {
            time: self.time,
            actions,
            deadlock_detected,
            resolution_active: self.resolution.active,
            compute_ms,
        })
    }

    fn update_clearance(&mut self) {
        let spheres: Vec<_> = self
            .fleet
            .planners()
            .iter()
            .zip(&self.states)
            .map(|(p, s)| p.model().collision_spheres(s))
            .collect();
        let mut min = f64::INFINITY;
        for i in 0..spheres.len() {
            for a in &spheres[i] {
                for o in &self.scenario.obstacles {
                    min = min.min(clearance(a, &o.center(), o.radius));
                }
                for other in &spheres[i + 1..] {
                    for b in other {
                        min = min.min(clearance(a, &b.center, b.radius));
                    }
                }
            }
        }
        self.min_clearance = self.min_clearance.min(min);
        if min < 0.0 {
            self.collision = true;
        }
    }

    #[allow(clippy::needless_range_loop)] // indexes several per-robot arrays
    fn update_goals(&mut self) {
        let dt = self.rollout_config.dt;
        let ee = self.end_effectors();
        for i in 0..self.states.len() {
            if self.finished[i] {
                continue;
            }
            let goal = self.mission_goal(i);
            if (ee[i] - goal).norm() <= self.scenario.robots[i].params.goal_tolerance {
                self.dwell[i] += dt;
            } else {
                self.dwell[i] = 0.0;
            }
            if self.dwell[i] + 1e-9 >= self.scenario.dwell {
                self.dwell[i] = 0.0;
                self.goal_index[i] += 1;
                if self.goal_index[i] >= self.scenario.robots[i].goals.len() {
                    self.finished[i] = true;
                } else {
                    let next = self.mission_goal(i);
                    self.set_goal(i, next);
                }
            }
        }
        if self.success_time.is_none() && self.finished.iter().all(|f| *f) {
            self.success_time = Some(self.time);
        }
    }

    fn set_goal(&mut self, robot: usize, goal: Point) {
        let retreating = self.resolution.active && self.resolution.priority_order.iter().skip(1).any(|&i| i == robot);
        if !retreating {
            self.params[robot].goal = goal;
        }
        if let Some((_, saved)) = self.resolution.saved_params.iter_mut().find(|(i, _)| *i == robot) {
            saved.goal = goal;
        }
    }

    pub fn metrics(&self) -> RunMetrics {
        RunMetrics::from_run(
            self.is_success(),
            self.success_time,
            self.collision,
            self.min_clearance,
            &self.compute_ms,
            self.events.clone(),
            self.failure.as_ref().map(|e| e.to_string()),
            self.step_index,
        )
    }

    pub fn take_log(&mut self) -> Option<TrajectoryLog> {
        self.log.take()
    }

    pub fn run_to_end(mut self) -> RunOutcome {
        while !self.is_done() {
            if self.step().is_err() {
                break;
            }
        }
        let metrics = self.metrics();
        RunOutcome {
            metrics,
            log: self.take_log(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub log: Option<TrajectoryLog>,
}

/// Run a scenario to completion or `t_max`.
pub fn run(scenario: &Scenario, mode: Mode) -> Result<RunOutcome> {
    run_with(scenario, &RunOptions::new(mode))
}

pub fn run_with(scenario: &Scenario, options: &RunOptions) -> Result<RunOutcome> {
    Ok(Simulation::new(scenario, options)?.run_to_end())
}
