//! Scenario files (TOML) and their validated in-memory form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FabricError, Result};
use crate::fabric::{FabricConfig, PlannerParams};
use crate::kinematics::{BasePose, Point, RobotModel, RobotState, SphereSpec, DESK_JOINT_LIMIT, DESK_LINKS};
use crate::linalg::{Matrix, Vector};
use crate::multi_robot::StaticObstacle;
use crate::resolution::ResolutionConfig;
use crate::rollout::RolloutConfig;

/// Planner parameter overrides; unset fields fall back to the enclosing block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsBlock {
    pub attractor_weight: Option<f64>,
    /// Scalar (times identity) or per-joint diagonal.
    pub damping: Option<Damping>,
    pub collision_gain: Option<f64>,
    pub limit_gain: Option<f64>,
    pub barrier_damping: Option<f64>,
    pub goal_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Damping {
    Scalar(f64),
    Diagonal(Vec<f64>),
}

impl ParamsBlock {
    fn merged_over(&self, base: &ParamsBlock) -> ParamsBlock {
        ParamsBlock {
            attractor_weight: self.attractor_weight.or(base.attractor_weight),
            damping: self.damping.clone().or_else(|| base.damping.clone()),
            collision_gain: self.collision_gain.or(base.collision_gain),
            limit_gain: self.limit_gain.or(base.limit_gain),
            barrier_damping: self.barrier_damping.or(base.barrier_damping),
            goal_tolerance: self.goal_tolerance.or(base.goal_tolerance),
        }
    }

    fn resolve(&self, goal: Point, dof: usize) -> Result<PlannerParams> {
        let mut p = PlannerParams::desk(goal, dof);
        if let Some(v) = self.attractor_weight {
            p.attractor_weight = v;
        }
        match &self.damping {
            Some(Damping::Scalar(b)) => p.damping = Matrix::identity(dof, dof) * *b,
            Some(Damping::Diagonal(d)) => {
                if d.len() != dof {
                    return Err(FabricError::Config(format!(
                        "damping diagonal has {} entries for a {dof}-DOF robot",
                        d.len()
                    )));
                }
                p.damping = Matrix::from_diagonal(&Vector::from_column_slice(d));
            }
            None => {}
        }
        if let Some(v) = self.collision_gain {
            p.collision_gain = v;
        }
        if let Some(v) = self.limit_gain {
            p.limit_gain = v;
        }
        if let Some(v) = self.barrier_damping {
            p.barrier_damping = v;
        }
        if let Some(v) = self.goal_tolerance {
            p.goal_tolerance = v;
        }
        p.validate(dof)?;
        Ok(p)
    }
}

/// Axis-aligned rectangle used to randomize goals in batch runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotBlock {
    #[serde(default)]
    pub name: Option<String>,
    /// `[x, y, heading]`
    pub base: [f64; 3],
    #[serde(default)]
    pub links: Option<Vec<f64>>,
    #[serde(default)]
    pub limits: Option<Vec<[f64; 2]>>,
    /// `[link, offset, radius]`; defaults to two spheres per link.
    #[serde(default)]
    pub spheres: Option<Vec<(usize, f64, f64)>>,
    pub q0: Vec<f64>,
    #[serde(default)]
    pub qd0: Option<Vec<f64>>,
    pub goals: Vec<[f64; 2]>,
    /// Regions the batch runner samples this robot's goals from, one per goal.
    #[serde(default)]
    pub goal_regions: Option<Vec<Region>>,
    #[serde(default)]
    pub params: ParamsBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default)]
    pub seed: u64,
    /// Time a goal must be held before it counts as reached (s).
    #[serde(default = "default_dwell")]
    pub dwell: f64,
    /// Peer states are communicated every this many steps.
    #[serde(default = "default_comm_period")]
    pub comm_period: usize,
    #[serde(default)]
    pub fabric: FabricConfig,
    #[serde(default)]
    pub params: ParamsBlock,
    #[serde(default)]
    pub rollout: RolloutConfig,
    #[serde(default)]
    pub resolution: ResolutionConfig,
    pub robots: Vec<RobotBlock>,
    #[serde(default)]
    pub obstacles: Vec<StaticObstacle>,
}

fn default_t_max() -> f64 {
    70.0
}

fn default_dwell() -> f64 {
    0.2
}

fn default_comm_period() -> usize {
    1
}

/// One robot of a validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotSetup {
    pub name: String,
    pub model: RobotModel,
    pub initial: RobotState,
    pub goals: Vec<Point>,
    pub goal_regions: Option<Vec<Region>>,
    pub params: PlannerParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub robots: Vec<RobotSetup>,
    pub obstacles: Vec<StaticObstacle>,
    pub fabric: FabricConfig,
    pub rollout: RolloutConfig,
    pub resolution: ResolutionConfig,
    pub t_max: f64,
    pub dwell: f64,
    pub comm_period: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| FabricError::Config(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| FabricError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        if file.robots.is_empty() {
            return Err(FabricError::Config("scenario needs at least one robot".into()));
        }
        if !(file.t_max > 0.0) {
            return Err(FabricError::Config("t_max must be positive".into()));
        }
        if !(file.dwell >= 0.0) || file.comm_period == 0 {
            return Err(FabricError::Config("dwell must be >= 0 and comm_period >= 1".into()));
        }
        file.rollout.validate()?;
        file.resolution.validate()?;
        for o in &file.obstacles {
            if !(o.radius > 0.0) {
                return Err(FabricError::Config("obstacle radius must be positive".into()));
            }
        }
        let robots = file
            .robots
            .iter()
            .enumerate()
            .map(|(i, r)| robot_setup(i, r, &file.params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario {
            name: file.name.clone().unwrap_or_else(|| "scenario".into()),
            robots,
            obstacles: file.obstacles.clone(),
            fabric: file.fabric.clone(),
            rollout: file.rollout.clone(),
            resolution: file.resolution.clone(),
            t_max: file.t_max,
            dwell: file.dwell,
            comm_period: file.comm_period,
            seed: file.seed,
        })
    }

    pub fn models(&self) -> Vec<RobotModel> {
        self.robots.iter().map(|r| r.model.clone()).collect()
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.rollout.dt).round() as usize
    }
}

fn robot_setup(index: usize, block: &RobotBlock, defaults: &ParamsBlock) -> Result<RobotSetup> {
    let ctx = |e: FabricError| FabricError::Config(format!("robot {index}: {e}"));
    let links = block.links.clone().unwrap_or_else(|| DESK_LINKS.to_vec());
    let dof = links.len();
    let limits = match &block.limits {
        Some(l) => l.iter().map(|[lo, hi]| (*lo, *hi)).collect(),
        None => vec![(-DESK_JOINT_LIMIT, DESK_JOINT_LIMIT); dof],
    };
    let base = BasePose::new(block.base[0], block.base[1], block.base[2]);
    let spheres = match &block.spheres {
        Some(s) => s
            .iter()
            .map(|&(link, offset, radius)| SphereSpec { link, offset, radius })
            .collect(),
        None => RobotModel::desk_arm(base)
            .spheres()
            .iter()
            .copied()
            .filter(|s| s.link < dof)
            .collect(),
    };
    let model = RobotModel::new(links, base, limits, spheres).map_err(ctx)?;
    if block.q0.len() != dof {
        return Err(ctx(FabricError::DimensionMismatch {
            expected: dof,
            found: block.q0.len(),
        }));
    }
    let q0 = Vector::from_column_slice(&block.q0);
    if !model.within_limits(&q0) {
        return Err(ctx(FabricError::Config("q0 outside joint limits".into())));
    }
    let qd0 = match &block.qd0 {
        Some(v) if v.len() != dof => {
            return Err(ctx(FabricError::DimensionMismatch {
                expected: dof,
                found: v.len(),
            }))
        }
        Some(v) => Vector::from_column_slice(v),
        None => Vector::zeros(dof),
    };
    if block.goals.is_empty() {
        return Err(ctx(FabricError::Config("at least one goal required".into())));
    }
    let goals: Vec<Point> = block.goals.iter().map(|g| Point::new(g[0], g[1])).collect();
    if let Some(regions) = &block.goal_regions {
        if regions.len() != goals.len() {
            return Err(ctx(FabricError::Config(
                "goal_regions must have one region per goal".into(),
            )));
        }
        if regions.iter().any(|r| !(r.min[0] <= r.max[0] && r.min[1] <= r.max[1])) {
            return Err(ctx(FabricError::Config("goal region min exceeds max".into())));
        }
    }
    let params = block.params.merged_over(defaults).resolve(goals[0], dof).map_err(ctx)?;
    Ok(RobotSetup {
        name: block.name.clone().unwrap_or_else(|| format!("robot{index}")),
        model,
        initial: RobotState::new(q0, qd0),
        goals,
        goal_regions: block.goal_regions.clone(),
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [[robots]]
        base = [0.0, 0.0, 0.0]
        q0 = [0.1, 0.2, 0.3]
        goals = [[0.5, 0.5]]
    "#;

    #[test]
    fn minimal_scenario_uses_desk_defaults() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.robots.len(), 1);
        assert_eq!(s.robots[0].model.sphere_count(), 6);
        assert_eq!(s.t_max, 70.0);
        assert_eq!(s.rollout.horizon, 10);
        assert_eq!(s.resolution.gamma_high, 3.0);
        assert_eq!(s.robots[0].params.attractor_weight, 2.0);
        assert_eq!(s.steps(), 7000);
    }

    #[test]
    fn params_override_chain() {
        let text = r#"
            [params]
            damping = 1.5
            attractor_weight = 1.0
            [[robots]]
            base = [0.0, 0.0, 0.0]
            q0 = [0.1, 0.2, 0.3]
            goals = [[0.5, 0.5]]
            params = { attractor_weight = 4.0, damping = [1.0, 2.0, 3.0] }
            [[robots]]
            base = [1.0, 0.0, 3.14159]
            q0 = [0.1, 0.2, 0.3]
            goals = [[0.5, 0.5]]
        "#;
        let s = Scenario::from_toml_str(text).unwrap();
        assert_eq!(s.robots[0].params.attractor_weight, 4.0);
        assert_eq!(s.robots[0].params.damping[(2, 2)], 3.0);
        assert_eq!(s.robots[1].params.attractor_weight, 1.0);
        assert_eq!(s.robots[1].params.damping[(1, 1)], 1.5);
    }

    #[test]
    fn malformed_scenarios_are_config_errors() {
        for text in [
            "robots = []",
            "t_max = -1\n[[robots]]\nbase=[0,0,0]\nq0=[0,0,0]\ngoals=[[1,0]]",
            "[[robots]]\nbase=[0,0,0]\nq0=[0,0]\ngoals=[[1,0]]",
            "[[robots]]\nbase=[0,0,0]\nq0=[9,0,0]\ngoals=[[1,0]]",
            "[[robots]]\nbase=[0,0,0]\nq0=[0,0,0]\ngoals=[]",
            "[[robots]]\nbase=[0,0,0]\nq0=[0,0,0]\ngoals=[[1,0]]\nbogus=1",
            "[rollout]\nhorizon=0\n[[robots]]\nbase=[0,0,0]\nq0=[0,0,0]\ngoals=[[1,0]]",
        ] {
            assert!(
                matches!(Scenario::from_toml_str(text), Err(FabricError::Config(_))),
                "{text}"
            );
        }
    }
}
