//! Rollout fabrics for decentralized multi-arm motion planning.
//!
//! Each robot runs a geometric fabric policy that treats the other robots'
//! collision spheres as moving obstacles. A short forward rollout of all
//! policies predicts deadlocks, which a priority heuristic then resolves.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fabric;
pub mod harness;
pub mod kinematics;
pub mod linalg;
pub mod multi_robot;
pub mod resolution;
pub mod rollout;
pub mod spec;

pub use error::{FabricError, Result};
pub use fabric::{build_policy, Component, FabricConfig, FabricPolicy, ObstacleState, PlannerParams};
pub use kinematics::{BasePose, Point, RobotModel, RobotState};
pub use multi_robot::{Fleet, FleetSnapshot, MrdfPlanner, StaticObstacle};
pub use rollout::{rollout, RolloutConfig, RolloutResult};
pub use spec::{Spec, SpecValue};
