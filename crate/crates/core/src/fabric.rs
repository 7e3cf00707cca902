//! Single-robot fabric: barrier leaves for collision and joint-limit
//! avoidance, an attractor toward the end-effector goal, and the forced,
//! damped solve for the joint acceleration.
//!
//! Every leaf lives on a scalar clearance coordinate `d`. Its geometry is
//! energized there, pulled into the sphere's relative frame, shifted to the
//! absolute frame through the moving-obstacle frame, and pulled into joint
//! space. The pulled leaves are summed with the base and attractor metrics
//! into `(M̃, f̃)`, and the policy solves
//!
//! ```text
//! M̃ q̈ + f̃ + γ Jₑₑᵀ ∂ψ + B q̇ = 0
//! ```

use nalgebra::{dmatrix, dvector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{FabricError, Result};
use crate::kinematics::{Point, RobotModel, RobotState};
use crate::linalg::{check_dim, condition_number, Matrix, Vector, MAX_CONDITION};
use crate::spec::{
    pullback_value, DifferentialMap, EnergyLagrangian, Geometry, Spec, SpecValue, ENERGIZE_VELOCITY_TOL,
};

/// Added to `M̃` when it is too ill-conditioned to invert.
pub const METRIC_REGULARIZATION: f64 = 1e-9;

/// Barrier geometry on a clearance coordinate: `h = -λ ḋ²/d²` while
/// approaching (`ḋ < 0`), zero otherwise.
pub fn barrier_h(gain: f64, d: f64, dd: f64) -> f64 {
    if dd < 0.0 {
        -gain * dd * dd / (d * d)
    } else {
        0.0
    }
}

/// Metric and force of the barrier energy `L = ½ (λ/d²) ḋ²`, switched off
/// while the clearance is not shrinking. Without the switch the energy
/// stored on approach is handed back on separation and two robots pushing
/// apart accelerate each other without bound.
pub fn barrier_lagrangian(gain: f64, d: f64, dd: f64) -> (f64, f64) {
    if dd >= 0.0 {
        return (0.0, 0.0);
    }
    let m = gain / (d * d);
    let f = -gain * dd * dd / (d * d * d);
    (m, f)
}

pub fn barrier_energy(gain: f64, d: f64, dd: f64) -> f64 {
    if dd >= 0.0 {
        return 0.0;
    }
    0.5 * gain * dd * dd / (d * d)
}

/// Energized barrier leaf on its clearance coordinate as scalars `(M, f)`.
/// Same arithmetic as the general energization, specialized to one dimension.
pub fn barrier_leaf_scalar(gain: f64, d: f64, dd: f64) -> Result<(f64, f64)> {
    if !(d > 0.0) {
        return Err(FabricError::NonpositiveDistance(d));
    }
    let (m, f_le) = barrier_lagrangian(gain, d, dd);
    let h = barrier_h(gain, d, dd);
    let m_xd = m * dd;
    let denom = dd * m_xd;
    if !(denom > ENERGIZE_VELOCITY_TOL) {
        return Ok((m, m * h));
    }
    let v = m * h - f_le;
    Ok((m, f_le + (v - m_xd * (dd * v / denom))))
}

/// Energized barrier leaf evaluated on its clearance coordinate.
pub fn barrier_leaf(gain: f64, d: f64, dd: f64) -> Result<SpecValue> {
    let (m, f) = barrier_leaf_scalar(gain, d, dd)?;
    Ok(SpecValue::new(dmatrix![m], dvector![f]))
}

/// Barrier leaf plus the metric-scaled damping force `β M ḋ`, applied only
/// while approaching so that separating bodies are not held back.
pub fn damped_barrier_leaf(gain: f64, damping: f64, d: f64, dd: f64) -> Result<(f64, f64)> {
    let (m, mut f) = barrier_leaf_scalar(gain, d, dd)?;
    if dd < 0.0 {
        f += damping * m * dd;
    }
    Ok((m, f))
}

fn barrier_pair(gain: f64) -> Result<(Geometry, EnergyLagrangian)> {
    if !(gain > 0.0) {
        return Err(FabricError::Config(format!("barrier gain {gain} must be positive")));
    }
    let geometry = Geometry::new(1, move |x, xd| dvector![barrier_h(gain, x[0], xd[0])]);
    let lagrangian = EnergyLagrangian::new(
        1,
        move |x, xd| dmatrix![barrier_lagrangian(gain, x[0], xd[0]).0],
        move |x, xd| dvector![barrier_lagrangian(gain, x[0], xd[0]).1],
        move |x, xd| barrier_energy(gain, x[0], xd[0]),
    );
    Ok((geometry, lagrangian))
}

/// Collision-avoidance geometry and energy on the sphere clearance coordinate.
pub fn avoidance_geometry(gain: f64) -> Result<(Geometry, EnergyLagrangian)> {
    barrier_pair(gain)
}

/// Joint-limit geometry and energy on a limit margin, `q - lower` or `upper - q`.
pub fn limit_geometry(gain: f64) -> Result<(Geometry, EnergyLagrangian)> {
    barrier_pair(gain)
}

/// Every geometry the planner ships, for homogeneity checks.
pub fn shipped_geometries() -> Vec<(&'static str, Geometry)> {
    let defaults = PlannerParams::desk(Point::zeros(), 3);
    vec![
        (
            "collision avoidance",
            avoidance_geometry(defaults.collision_gain).unwrap().0,
        ),
        ("joint limit", limit_geometry(defaults.limit_gain).unwrap().0),
        (
            "attractor metric (zero geometry)",
            Geometry::new(2, |_, _| Vector::zeros(2)),
        ),
        (
            "base inertia (zero geometry)",
            Geometry::new(3, |_, _| Vector::zeros(3)),
        ),
    ]
}

/// Smooth attractor potential `ψ(x) = k (‖e‖ + s ln(1 + e^{-2‖e‖/s}))`,
/// `e = x - goal`. Its gradient is `k tanh(‖e‖/s) e/‖e‖`: zero at the goal,
/// bounded by `k`, and close to `k` beyond a few smoothing lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Attractor {
    pub gain: f64,
    pub smoothing: f64,
}

impl Default for Attractor {
    fn default() -> Self {
        Self {
            gain: 1.0,
            smoothing: 0.1,
        }
    }
}

impl Attractor {
    pub fn potential(&self, x: &Point, goal: &Point) -> f64 {
        let r = (x - goal).norm();
        let s = self.smoothing;
        // ln(1 + e^{-2r/s}) written with ln_1p for accuracy at large r
        self.gain * (r + s * (-2.0 * r / s).exp().ln_1p())
    }

    pub fn gradient(&self, x: &Point, goal: &Point) -> Point {
        let e = x - goal;
        let r = e.norm();
        if r == 0.0 {
            return Point::zeros();
        }
        e * (self.gain * (r / self.smoothing).tanh() / r)
    }
}

/// Per-robot planner parameters θ.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    pub goal: Point,
    pub attractor_weight: f64,
    pub damping: Matrix,
    pub collision_gain: f64,
    pub limit_gain: f64,
    /// Damping of each barrier leaf in proportion to its own metric, so the
    /// energy stored in a stiff barrier can drain. Zero keeps leaves frictionless.
    pub barrier_damping: f64,
    pub goal_tolerance: f64,
}

pub const GAMMA_LOW: f64 = 2.0;
pub const DEFAULT_DAMPING: f64 = 0.8;
pub const DEFAULT_COLLISION_GAIN: f64 = 0.05;
pub const DEFAULT_LIMIT_GAIN: f64 = 0.05;
pub const DEFAULT_GOAL_TOLERANCE: f64 = 0.02;
pub const DEFAULT_BARRIER_DAMPING: f64 = 5.0;

impl PlannerParams {
    pub fn desk(goal: Point, dof: usize) -> Self {
        Self {
            goal,
            attractor_weight: GAMMA_LOW,
            damping: Matrix::identity(dof, dof) * DEFAULT_DAMPING,
            collision_gain: DEFAULT_COLLISION_GAIN,
            limit_gain: DEFAULT_LIMIT_GAIN,
            barrier_damping: DEFAULT_BARRIER_DAMPING,
            goal_tolerance: DEFAULT_GOAL_TOLERANCE,
        }
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        check_dim(dof, self.damping.nrows())?;
        check_dim(dof, self.damping.ncols())?;
        if !(self.attractor_weight >= 0.0) {
            return Err(FabricError::Config("attractor weight must be >= 0".into()));
        }
        if !(self.collision_gain > 0.0 && self.limit_gain > 0.0) {
            return Err(FabricError::Config("barrier gains must be positive".into()));
        }
        if !(self.barrier_damping >= 0.0) {
            return Err(FabricError::Config("barrier damping must be >= 0".into()));
        }
        if !(self.goal_tolerance > 0.0) {
            return Err(FabricError::Config("goal tolerance must be positive".into()));
        }
        if crate::linalg::asymmetry(&self.damping) > 1e-12 || self.damping.clone().cholesky().is_none() {
            return Err(FabricError::Config(
                "damping must be symmetric positive definite".into(),
            ));
        }
        Ok(())
    }
}

/// A sphere-shaped obstacle at the evaluation instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleState {
    pub center: Point,
    pub velocity: Point,
    pub acceleration: Point,
    pub radius: f64,
}

impl ObstacleState {
    pub fn fixed(center: Point, radius: f64) -> Self {
        Self {
            center,
            velocity: Point::zeros(),
            acceleration: Point::zeros(),
            radius,
        }
    }

    pub fn moving(center: Point, velocity: Point, radius: f64) -> Self {
        Self {
            center,
            velocity,
            acceleration: Point::zeros(),
            radius,
        }
    }
}

/// Clearance coordinate between a robot point and an obstacle, with the
/// derivatives the pullback needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Clearance {
    pub d: f64,
    pub d_dot: f64,
    /// Unit normal from obstacle to point; the 1 x 2 Jacobian of `d` w.r.t. `x_rel`.
    pub normal: Point,
    /// `J̇ ẋ_rel` of the norm map.
    pub curvature: f64,
}

/// `d = ‖x_rel‖ - (r_a + r_b)` and its rate along `ẋ_rel`.
pub fn clearance_coordinate(x_rel: &Point, xd_rel: &Point, combined_radius: f64) -> Result<Clearance> {
    let dist = x_rel.norm();
    if !(dist > 0.0) {
        return Err(FabricError::GradientSingularity);
    }
    let normal = x_rel / dist;
    let d_dot = normal.dot(xd_rel);
    let curvature = (xd_rel.norm_squared() - d_dot * d_dot) / dist;
    Ok(Clearance {
        d: dist - combined_radius,
        d_dot,
        normal,
        curvature,
    })
}

/// Clearance between a point on a robot and a fixed obstacle, as a map from
/// joint space to ℝ.
#[derive(Debug, Clone)]
pub struct DistanceMap {
    point: DifferentialMap,
    obstacle: Point,
    combined_radius: f64,
}

pub fn distance_map(point: &DifferentialMap, obstacle: Point, r_a: f64, r_b: f64) -> Result<DistanceMap> {
    check_dim(2, point.out_dim())?;
    if !(r_a > 0.0 && r_b > 0.0) {
        return Err(FabricError::Config("radii must be positive".into()));
    }
    Ok(DistanceMap {
        point: point.clone(),
        obstacle,
        combined_radius: r_a + r_b,
    })
}

impl DistanceMap {
    pub fn evaluate(&self, q: &Vector, qd: &Vector) -> Result<(Clearance, Matrix, f64)> {
        let x = self.point.phi(q);
        let j = self.point.jacobian(q);
        let xd = &j * qd;
        let c = clearance_coordinate(
            &(Point::new(x[0], x[1]) - self.obstacle),
            &Point::new(xd[0], xd[1]),
            self.combined_radius,
        )?;
        let n = Matrix::from_row_slice(1, 2, &[c.normal.x, c.normal.y]);
        let jdot = self.point.jdot_qdot(q, qd);
        let jdot_qdot = c.normal.x * jdot[0] + c.normal.y * jdot[1] + c.curvature;
        Ok((c, n * j, jdot_qdot))
    }

    pub fn distance(&self, q: &Vector) -> Result<f64> {
        Ok(self.evaluate(q, &Vector::zeros(q.len()))?.0.d)
    }

    /// The plain map; its Jacobian is undefined where the centers coincide.
    pub fn to_differential_map(&self) -> DifferentialMap {
        let (a, b, c) = (self.clone(), self.clone(), self.clone());
        DifferentialMap::new(
            self.point.in_dim(),
            1,
            move |q| dvector![a.distance(q).unwrap_or(f64::NAN)],
            move |q| match b.evaluate(q, &Vector::zeros(q.len())) {
                Ok((_, j, _)) => j,
                Err(_) => Matrix::from_element(1, q.len(), f64::NAN),
            },
            move |q, qd| dvector![c.evaluate(q, qd).map(|e| e.2).unwrap_or(f64::NAN)],
        )
    }
}

/// One building block of a robot fabric.
#[derive(Debug, Clone)]
pub enum Component {
    /// Configuration-space inertia `(m I, 0)`.
    BaseInertia { mass: f64 },
    /// Barrier leaves on both margins of every joint.
    JointLimits,
    /// End-effector attractor metric `(m I, 0)` plus the forcing potential.
    Attractor { metric: f64, potential: Attractor },
    /// Fixed sphere obstacle, seen by every collision sphere of the robot.
    StaticObstacle { center: Point, radius: f64 },
    /// Any other configuration-space spec.
    Custom(Spec),
}

/// Robot-independent constants of a fabric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FabricConfig {
    pub base_inertia: f64,
    pub attractor_metric: f64,
    pub attractor: Attractor,
}

impl Default for FabricConfig {
    fn default() -> Self {
        Self {
            base_inertia: 0.2,
            attractor_metric: 1.0,
            attractor: Attractor::default(),
        }
    }
}

impl FabricConfig {
    pub fn components(&self) -> Vec<Component> {
        vec![
            Component::BaseInertia {
                mass: self.base_inertia,
            },
            Component::JointLimits,
            Component::Attractor {
                metric: self.attractor_metric,
                potential: self.attractor,
            },
        ]
    }
}

/// Result of one policy evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub qdd: Vector,
    /// Combined metric `M̃`.
    pub metric: Matrix,
    /// Combined force `f̃` (unforced, undamped).
    pub force: Vector,
    /// `γ Jₑₑᵀ ∂ψ`.
    pub forcing: Vector,
    /// `M̃` needed regularization before the solve.
    pub regularized: bool,
}

/// A compiled robot fabric: the acceleration policy `q̈ = π̃(q, q̇; obstacles, θ)`.
#[derive(Debug, Clone)]
pub struct FabricPolicy {
    model: RobotModel,
    components: Vec<Component>,
    obstacle_slots: usize,
    static_obstacles: Vec<ObstacleState>,
}

/// Build the fabric for `model`. `obstacle_slots` is the number of moving
/// sphere obstacles every evaluation must supply.
pub fn build_policy(model: &RobotModel, components: Vec<Component>, obstacle_slots: usize) -> Result<FabricPolicy> {
    for c in &components {
        match c {
            Component::BaseInertia { mass } if !(*mass >= 0.0) => {
                return Err(FabricError::Config("base inertia must be >= 0".into()))
            }
            Component::Attractor { metric, potential } => {
                if !(*metric >= 0.0 && potential.smoothing > 0.0 && potential.gain >= 0.0) {
                    return Err(FabricError::Config("invalid attractor".into()));
                }
            }
            Component::StaticObstacle { radius, .. } if !(*radius > 0.0) => {
                return Err(FabricError::Config("obstacle radius must be positive".into()))
            }
            Component::Custom(spec) => check_dim(model.dof(), spec.dim())?,
            _ => {}
        }
    }
    let static_obstacles = components
        .iter()
        .filter_map(|c| match c {
            Component::StaticObstacle { center, radius } => Some(ObstacleState::fixed(*center, *radius)),
            _ => None,
        })
        .collect();
    Ok(FabricPolicy {
        model: model.clone(),
        components,
        obstacle_slots,
        static_obstacles,
    })
}

impl FabricPolicy {
    pub fn model(&self) -> &RobotModel {
        &self.model
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn obstacle_slots(&self) -> usize {
        self.obstacle_slots
    }

    /// Add a component after construction.
    pub fn with_component(&self, component: Component) -> Result<FabricPolicy> {
        let mut components = self.components.clone();
        components.push(component);
        build_policy(&self.model, components, self.obstacle_slots)
    }

    pub fn evaluate(&self, state: &RobotState, obstacles: &[ObstacleState], params: &PlannerParams) -> Result<Vector> {
        Ok(self.evaluate_detailed(state, obstacles, params)?.qdd)
    }

    pub fn evaluate_detailed(
        &self,
        state: &RobotState,
        obstacles: &[ObstacleState],
        params: &PlannerParams,
    ) -> Result<PolicyOutput> {
        let n = self.model.dof();
        check_dim(n, state.q.len())?;
        check_dim(n, state.qd.len())?;
        check_dim(n, params.damping.nrows())?;
        if obstacles.len() != self.obstacle_slots {
            return Err(FabricError::DimensionMismatch {
                expected: self.obstacle_slots,
                found: obstacles.len(),
            });
        }
        let (q, qd) = (&state.q, &state.qd);
        let mut total = SpecValue::zeros(n);
        let mut forcing = Vector::zeros(n);

        for component in &self.components {
            match component {
                Component::BaseInertia { mass } => {
                    for i in 0..n {
                        total.m[(i, i)] += mass;
                    }
                }
                Component::JointLimits => self.add_joint_limits(q, qd, params, &mut total)?,
                Component::Attractor { metric, potential } => {
                    let ee = self.model.end_effector_kinematics(q, qd);
                    let task = SpecValue::new(Matrix::identity(2, 2) * *metric, Vector::zeros(2));
                    let jdot = Vector::from_column_slice(ee.jdot_qdot.as_slice());
                    total.add_assign(&pullback_value(&ee.jacobian, &jdot, &task));
                    let grad = potential.gradient(&ee.position, &params.goal);
                    forcing +=
                        ee.jacobian.transpose() * Vector::from_column_slice(grad.as_slice()) * params.attractor_weight;
                }
                Component::StaticObstacle { .. } => {}
                Component::Custom(spec) => total.add_assign(&spec.eval(q, qd)?),
            }
        }
        let mut all = self.static_obstacles.clone();
        all.extend_from_slice(obstacles);
        self.add_obstacles(q, qd, &all, params, &mut total)?;

        let rhs = -(&total.f + &forcing + &params.damping * qd);
        let cond = condition_number(&total.m);
        let regularized = !(cond <= MAX_CONDITION);
        let metric = if regularized {
            log::debug!("regularizing fabric metric (condition {cond:e})");
            &total.m + Matrix::identity(n, n) * METRIC_REGULARIZATION
        } else {
            total.m.clone()
        };
        let qdd = crate::linalg::solve_guarded(&metric, &rhs)?;
        Ok(PolicyOutput {
            qdd,
            metric: total.m,
            force: total.f,
            forcing,
            regularized,
        })
    }

    fn add_joint_limits(&self, q: &Vector, qd: &Vector, params: &PlannerParams, total: &mut SpecValue) -> Result<()> {
        for (j, (lo, hi)) in self.model.joint_limits().iter().enumerate() {
            // lower margin: d = q_j - lo, J = e_jᵀ; upper margin: d = hi - q_j, J = -e_jᵀ
            for (d, dd, sign) in [(q[j] - lo, qd[j], 1.0), (hi - q[j], -qd[j], -1.0)] {
                let (m, f) = damped_barrier_leaf(params.limit_gain, params.barrier_damping, d, dd)?;
                // the map is affine, so J̇q̇ = 0 and JᵀMJ touches only (j, j)
                total.m[(j, j)] += m;
                total.f[j] += sign * f;
            }
        }
        Ok(())
    }

    /// All obstacle leaves of every sphere, summed in the sphere's position
    /// space before a single pullback per sphere.
    fn add_obstacles(
        &self,
        q: &Vector,
        qd: &Vector,
        obstacles: &[ObstacleState],
        params: &PlannerParams,
        total: &mut SpecValue,
    ) -> Result<()> {
        if obstacles.is_empty() {
            return Ok(());
        }
        for (index, sphere) in self.model.spheres().iter().enumerate() {
            let point = self.model.point_kinematics(q, qd, sphere.link, sphere.offset)?;
            let velocity = point.velocity(qd);
            let mut metric = Matrix2::zeros();
            let mut force = Point::zeros();
            for obstacle in obstacles {
                let (m, f) = obstacle_leaf_planar(
                    &point.position,
                    &velocity,
                    obstacle,
                    sphere.radius,
                    params.collision_gain,
                    params.barrier_damping,
                )
                .map_err(|e| e.for_robot(0, Some(index)))?;
                metric += m;
                force += f;
            }
            let j = &point.jacobian;
            let m = Matrix::from_column_slice(2, 2, metric.as_slice());
            let f = Vector::from_column_slice((force + metric * point.jdot_qdot).as_slice());
            total.m += j.transpose() * m * j;
            total.f += j.transpose() * f;
        }
        Ok(())
    }

    /// Total energy of the fabric's Lagrangians (base, attractor metric, and all
    /// barrier leaves) at a state.
    pub fn energy(&self, state: &RobotState, obstacles: &[ObstacleState], params: &PlannerParams) -> Result<f64> {
        let (q, qd) = (&state.q, &state.qd);
        let leaf_energy = |obstacle: &ObstacleState| -> Result<f64> {
            let mut e = 0.0;
            for sphere in self.model.spheres() {
                let p = self.model.point_kinematics(q, qd, sphere.link, sphere.offset)?;
                let c = clearance_coordinate(
                    &(p.position - obstacle.center),
                    &(p.velocity(qd) - obstacle.velocity),
                    sphere.radius + obstacle.radius,
                )?;
                e += barrier_energy(params.collision_gain, c.d, c.d_dot);
            }
            Ok(e)
        };
        let mut e = 0.0;
        for o in obstacles {
            e += leaf_energy(o)?;
        }
        for component in &self.components {
            match component {
                Component::StaticObstacle { center, radius } => {
                    e += leaf_energy(&ObstacleState::fixed(*center, *radius))?
                }
                Component::BaseInertia { mass } => e += 0.5 * mass * qd.norm_squared(),
                Component::Attractor { metric, .. } => {
                    let ee = self.model.end_effector_kinematics(q, qd);
                    e += 0.5 * metric * ee.velocity(qd).norm_squared();
                }
                Component::JointLimits => {
                    for (j, (lo, hi)) in self.model.joint_limits().iter().enumerate() {
                        e += barrier_energy(params.limit_gain, q[j] - lo, qd[j]);
                        e += barrier_energy(params.limit_gain, hi - q[j], -qd[j]);
                    }
                }
                Component::Custom(_) => {}
            }
        }
        Ok(e)
    }
}

/// One sphere-vs-obstacle leaf, returned as a spec on the sphere's absolute
/// 2-D position: energized on the clearance, pulled through the norm map into
/// relative coordinates, then moved to absolute coordinates by the obstacle's
/// motion frame.
pub fn obstacle_leaf(
    center: &Point,
    velocity: &Point,
    obstacle: &ObstacleState,
    radius: f64,
    gain: f64,
    damping: f64,
) -> Result<SpecValue> {
    let (m, f) = obstacle_leaf_planar(center, velocity, obstacle, radius, gain, damping)?;
    Ok(SpecValue::new(
        Matrix::from_column_slice(2, 2, m.as_slice()),
        Vector::from_column_slice(f.as_slice()),
    ))
}

/// [`obstacle_leaf`] with fixed-size results, for the hot path.
pub fn obstacle_leaf_planar(
    center: &Point,
    velocity: &Point,
    obstacle: &ObstacleState,
    radius: f64,
    gain: f64,
    damping: f64,
) -> Result<(Matrix2<f64>, Point)> {
    let x_rel = center - obstacle.center;
    let xd_rel = velocity - obstacle.velocity;
    let c = clearance_coordinate(&x_rel, &xd_rel, radius + obstacle.radius)?;
    let (m, f) = damped_barrier_leaf(gain, damping, c.d, c.d_dot)?;
    // norm map: J = nᵀ, J̇ẋ = curvature
    let metric = c.normal * c.normal.transpose() * m;
    let force = c.normal * (f + m * c.curvature) - metric * obstacle.acceleration;
    Ok((metric, force))
}
