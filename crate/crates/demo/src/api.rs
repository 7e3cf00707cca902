use serde::Serialize;

use rollout_fabrics::fabric::{barrier_h, damped_barrier_leaf, Attractor};
use rollout_fabrics::harness::{randomize, Mode, RunOptions, Scenario, Simulation};
use rollout_fabrics::kinematics::Point;
use rollout_fabrics::rollout::{rollout, RolloutConfig};

const SCENARIOS: [(&str, &str); 3] = [
    ("head_on", include_str!("../../../scenarios/head_on.toml")),
    ("desk_benchmark", include_str!("../../../scenarios/desk_benchmark.toml")),
    ("free_space", include_str!("../../../scenarios/free_space.toml")),
];

pub fn scenario_names() -> String {
    serde_json::to_string(&SCENARIOS.map(|(n, _)| n)).expect("serializable")
}

fn xy(p: Point) -> [f64; 2] {
    [p.x, p.y]
}

#[derive(Serialize)]
struct RobotFrame {
    joints: Vec<[f64; 2]>,
    spheres: Vec<[f64; 3]>,
    goal: [f64; 2],
    mission_goal: [f64; 2],
}

#[derive(Serialize)]
struct Frame {
    t: f64,
    robots: Vec<RobotFrame>,
    obstacles: Vec<[f64; 3]>,
    done: bool,
    success: bool,
    collision: bool,
    resolving: bool,
    deadlocks: usize,
    failure: Option<String>,
}

#[derive(Serialize)]
struct Preview {
    horizon: usize,
    paths: Vec<Vec<[f64; 2]>>,
    mean_speed: Vec<f64>,
    speed_threshold: f64,
    deadlock: bool,
}

pub struct Session {
    scenario: Scenario,
    sim: Simulation,
}

impl Session {
    pub fn new(name: &str, mode: &str, seed: u64) -> Result<Self, String> {
        let text = SCENARIOS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| format!("unknown scenario '{name}'"))?;
        let mode: Mode = mode.parse().map_err(|e: rollout_fabrics::FabricError| e.to_string())?;
        let base = Scenario::from_toml_str(text).map_err(|e| e.to_string())?;
        let scenario = randomize(&base, seed).map_err(|e| e.to_string())?;
        let sim = Simulation::new(&scenario, &RunOptions::new(mode)).map_err(|e| e.to_string())?;
        Ok(Self { scenario, sim })
    }

    pub fn step(&mut self, steps: usize) -> Result<String, String> {
        for _ in 0..steps {
            if self.sim.is_done() {
                break;
            }
            // a failed step ends the run; the frame reports it
            if self.sim.step().is_err() {
                break;
            }
        }
        Ok(self.frame())
    }

    pub fn frame(&self) -> String {
        let robots = self
            .scenario
            .robots
            .iter()
            .zip(self.sim.states())
            .zip(self.sim.params())
            .enumerate()
            .map(|(i, ((r, s), p))| RobotFrame {
                joints: r.model.joint_positions(&s.q).into_iter().map(xy).collect(),
                spheres: r
                    .model
                    .collision_spheres(s)
                    .iter()
                    .map(|c| [c.center.x, c.center.y, c.radius])
                    .collect(),
                goal: xy(p.goal),
                mission_goal: xy(self.sim.mission_goal(i)),
            })
            .collect();
        let m = self.sim.metrics();
        let frame = Frame {
            t: self.sim.time(),
            robots,
            obstacles: self
                .scenario
                .obstacles
                .iter()
                .map(|o| [o.center[0], o.center[1], o.radius])
                .collect(),
            done: self.sim.is_done(),
            success: m.success,
            collision: m.collision,
            resolving: self.sim.resolution().active,
            deadlocks: m.deadlock_count(),
            failure: m.failure,
        };
        serde_json::to_string(&frame).expect("serializable")
    }

    pub fn preview(&self, horizon: usize) -> Result<String, String> {
        let config = RolloutConfig {
            horizon,
            ..self.sim.rollout_config().clone()
        };
        config.validate().map_err(|e| e.to_string())?;
        let result = rollout(self.sim.fleet(), &self.sim.snapshot(), &config).map_err(|e| e.to_string())?;
        let paths = self
            .scenario
            .robots
            .iter()
            .zip(&result.q)
            .map(|(r, qs)| qs.iter().map(|q| xy(r.model.end_effector(q))).collect())
            .collect();
        let preview = Preview {
            horizon,
            paths,
            mean_speed: result.mean_speed,
            speed_threshold: config.v_d_min,
            deadlock: result.deadlock,
        };
        Ok(serde_json::to_string(&preview).expect("serializable"))
    }
}

#[derive(Serialize)]
struct BarrierProfile {
    distance: Vec<f64>,
    /// Acceleration the geometry alone asks for, `-h`.
    geometry: Vec<f64>,
    metric: Vec<f64>,
    /// Acceleration of the damped, energized leaf, `-f/m` (0 where `m = 0`).
    leaf: Vec<f64>,
}

/// Samples the clearance barrier for distances in (0, 0.5] at a fixed rate of
/// change of clearance.
pub fn barrier_profile(gain: f64, rate: f64, damping: f64) -> Result<String, String> {
    if !(gain > 0.0 && damping >= 0.0 && rate.is_finite()) {
        return Err("gain must be positive and damping non-negative".into());
    }
    let distance: Vec<f64> = (1..=100).map(|i| 0.005 * i as f64).collect();
    let mut p = BarrierProfile {
        geometry: Vec::with_capacity(distance.len()),
        metric: Vec::with_capacity(distance.len()),
        leaf: Vec::with_capacity(distance.len()),
        distance,
    };
    for &d in &p.distance {
        let (m, f) = damped_barrier_leaf(gain, damping, d, rate).map_err(|e| e.to_string())?;
        p.geometry.push(-barrier_h(gain, d, rate));
        p.metric.push(m);
        p.leaf.push(if m > 0.0 { -f / m } else { 0.0 });
    }
    Ok(serde_json::to_string(&p).expect("serializable"))
}

#[derive(Serialize)]
struct AttractorProfile {
    distance: Vec<f64>,
    potential: Vec<f64>,
    pull: Vec<f64>,
}

/// Potential and pull magnitude of the goal attractor against distance to goal.
pub fn attractor_profile(gain: f64, smoothing: f64) -> String {
    let a = Attractor {
        gain,
        smoothing: smoothing.max(1e-6),
    };
    let distance: Vec<f64> = (0..=100).map(|i| 0.006 * i as f64).collect();
    let at = |r: f64| Point::new(r, 0.0);
    let p = AttractorProfile {
        potential: distance.iter().map(|&r| a.potential(&at(r), &Point::zeros())).collect(),
        pull: distance
            .iter()
            .map(|&r| a.gradient(&at(r), &Point::zeros()).norm())
            .collect(),
        distance,
    };
    serde_json::to_string(&p).expect("serializable")
}
