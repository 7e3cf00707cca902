//! Multi-robot dynamic fabrics: each robot plans with its own fabric, treating
//! every collision sphere of every other robot as a moving obstacle.

use serde::{Deserialize, Serialize};

use crate::error::{FabricError, Result};
use crate::fabric::{build_policy, Component, FabricConfig, FabricPolicy, ObstacleState, PlannerParams};
use crate::kinematics::{Point, RobotModel, RobotState};
use crate::linalg::Vector;

/// State and parameters of the whole fleet at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetSnapshot {
    pub time: f64,
    pub states: Vec<RobotState>,
    pub params: Vec<PlannerParams>,
}

impl FleetSnapshot {
    pub fn new(time: f64, states: Vec<RobotState>, params: Vec<PlannerParams>) -> Result<Self> {
        if states.len() != params.len() {
            return Err(FabricError::DimensionMismatch {
                expected: states.len(),
                found: params.len(),
            });
        }
        Ok(Self { time, states, params })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// A fixed sphere in the shared workspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticObstacle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl StaticObstacle {
    pub fn center(&self) -> Point {
        Point::new(self.center[0], self.center[1])
    }
}

/// The decentralized planner of one robot.
#[derive(Debug, Clone)]
pub struct MrdfPlanner {
    robot_id: usize,
    policy: FabricPolicy,
    /// `(robot id, model)` of every peer, in fleet order.
    peers: Vec<(usize, RobotModel)>,
}

impl MrdfPlanner {
    /// Planner for `robot_id` in a fleet described by `models`.
    pub fn new(
        robot_id: usize,
        models: &[RobotModel],
        config: &FabricConfig,
        static_obstacles: &[StaticObstacle],
    ) -> Result<Self> {
        let own = models.get(robot_id).ok_or(FabricError::IndexOutOfRange {
            index: robot_id,
            len: models.len(),
        })?;
        let peers: Vec<(usize, RobotModel)> = models
            .iter()
            .enumerate()
            .filter(|(p, _)| *p != robot_id)
            .map(|(p, m)| (p, m.clone()))
            .collect();
        let slots = peers.iter().map(|(_, m)| m.sphere_count()).sum();
        let mut components = config.components();
        components.extend(static_obstacles.iter().map(|o| Component::StaticObstacle {
            center: o.center(),
            radius: o.radius,
        }));
        let policy = build_policy(own, components, slots)?;
        Ok(Self {
            robot_id,
            policy,
            peers,
        })
    }

    pub fn robot_id(&self) -> usize {
        self.robot_id
    }

    pub fn policy(&self) -> &FabricPolicy {
        &self.policy
    }

    pub fn model(&self) -> &RobotModel {
        self.policy.model()
    }

    /// Number of moving obstacles this robot avoids, `Σ_{p≠i} L^p`.
    pub fn obstacle_count(&self) -> usize {
        self.policy.obstacle_slots()
    }

    /// Peer collision spheres bound as moving obstacles (acceleration neglected).
    pub fn peer_obstacles(&self, snapshot: &FleetSnapshot) -> Result<Vec<ObstacleState>> {
        let mut out = Vec::with_capacity(self.obstacle_count());
        for (p, model) in &self.peers {
            let state = snapshot.states.get(*p).ok_or(FabricError::IndexOutOfRange {
                index: *p,
                len: snapshot.len(),
            })?;
            out.extend(
                model
                    .collision_spheres(state)
                    .into_iter()
                    .map(|s| ObstacleState::moving(s.center, s.velocity, s.radius)),
            );
        }
        Ok(out)
    }

    /// Joint acceleration of this robot given the fleet snapshot.
    pub fn plan_step(&self, snapshot: &FleetSnapshot) -> Result<Vector> {
        let wrap = |e: FabricError| e.for_robot(self.robot_id, None);
        let own = snapshot.states.get(self.robot_id).ok_or(FabricError::IndexOutOfRange {
            index: self.robot_id,
            len: snapshot.len(),
        })?;
        let params = &snapshot.params[self.robot_id];
        let obstacles = self.peer_obstacles(snapshot).map_err(wrap)?;
        self.policy.evaluate(own, &obstacles, params).map_err(wrap)
    }
}

/// One planner per robot.
#[derive(Debug, Clone)]
pub struct Fleet {
    planners: Vec<MrdfPlanner>,
}

impl Fleet {
    pub fn new(models: &[RobotModel], config: &FabricConfig, static_obstacles: &[StaticObstacle]) -> Result<Self> {
        let planners = (0..models.len())
            .map(|i| MrdfPlanner::new(i, models, config, static_obstacles))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { planners })
    }

    pub fn from_planners(planners: Vec<MrdfPlanner>) -> Self {
        Self { planners }
    }

    pub fn planners(&self) -> &[MrdfPlanner] {
        &self.planners
    }

    pub fn len(&self) -> usize {
        self.planners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planners.is_empty()
    }

    pub fn models(&self) -> Vec<RobotModel> {
        self.planners.iter().map(|p| p.model().clone()).collect()
    }

    /// Every robot plans from the same snapshot.
    pub fn plan_all(&self, snapshot: &FleetSnapshot) -> Result<Vec<Vector>> {
        if snapshot.len() != self.len() {
            return Err(FabricError::DimensionMismatch {
                expected: self.len(),
                found: snapshot.len(),
            });
        }
        self.planners.iter().map(|p| p.plan_step(snapshot)).collect()
    }
}

/// Synchronized decentralized step: all planners read one snapshot, then all
/// states advance together with the same integrator.
pub fn head_on_scenario_step(fleet: &Fleet, snapshot: &FleetSnapshot, dt: f64) -> Result<(Vec<Vector>, FleetSnapshot)> {
    let accels = fleet.plan_all(snapshot)?;
    let states = snapshot
        .states
        .iter()
        .zip(&accels)
        .map(|(s, a)| {
            let (q, qd) = crate::rollout::integrate(&s.q, &s.qd, a, dt);
            RobotState::new(q, qd)
        })
        .collect();
    let next = FleetSnapshot {
        time: snapshot.time + dt,
        states,
        params: snapshot.params.clone(),
    };
    Ok((accels, next))
}
