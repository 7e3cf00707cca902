//! Planar revolute serial chains: forward kinematics, Jacobians and the
//! collision spheres attached to the links.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{FabricError, Result};
use crate::linalg::{Matrix, Vector};
use crate::spec::DifferentialMap;

pub type Point = Vector2<f64>;

/// Pose of the first joint in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasePose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl BasePose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// A collision sphere attached at `offset` (fraction of link length) along a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSpec {
    pub link: usize,
    pub offset: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    link_lengths: Vec<f64>,
    base: BasePose,
    joint_limits: Vec<(f64, f64)>,
    spheres: Vec<SphereSpec>,
}

/// Default desk arm: three links, two spheres per link.
pub const DESK_LINKS: [f64; 3] = [0.4, 0.35, 0.25];
pub const DESK_SPHERE_OFFSETS: [f64; 2] = [0.33, 0.83];
pub const DESK_SPHERE_RADIUS: f64 = 0.08;
pub const DESK_JOINT_LIMIT: f64 = 2.6;

impl RobotModel {
    pub fn new(
        link_lengths: Vec<f64>,
        base: BasePose,
        joint_limits: Vec<(f64, f64)>,
        spheres: Vec<SphereSpec>,
    ) -> Result<Self> {
        let n = link_lengths.len();
        if n == 0 {
            return Err(FabricError::Config("robot needs at least one link".into()));
        }
        if joint_limits.len() != n {
            return Err(FabricError::DimensionMismatch {
                expected: n,
                found: joint_limits.len(),
            });
        }
        if let Some(l) = link_lengths.iter().find(|l| !(**l > 0.0)) {
            return Err(FabricError::Config(format!("link length {l} must be positive")));
        }
        for (j, (lo, hi)) in joint_limits.iter().enumerate() {
            if !(lo < hi) {
                return Err(FabricError::Config(format!(
                    "joint {j}: lower limit {lo} must be below upper limit {hi}"
                )));
            }
        }
        for s in &spheres {
            if s.link >= n {
                return Err(FabricError::IndexOutOfRange { index: s.link, len: n });
            }
            if !(0.0..=1.0).contains(&s.offset) {
                return Err(FabricError::Config(format!(
                    "sphere offset {} outside [0, 1]",
                    s.offset
                )));
            }
            if !(s.radius > 0.0) {
                return Err(FabricError::Config(format!(
                    "sphere radius {} must be positive",
                    s.radius
                )));
            }
        }
        Ok(Self {
            link_lengths,
            base,
            joint_limits,
            spheres,
        })
    }

    /// The 3-DOF desk arm with two 8 cm spheres per link.
    pub fn desk_arm(base: BasePose) -> Self {
        let spheres = (0..DESK_LINKS.len())
            .flat_map(|link| {
                DESK_SPHERE_OFFSETS.iter().map(move |&offset| SphereSpec {
                    link,
                    offset,
                    radius: DESK_SPHERE_RADIUS,
                })
            })
            .collect();
        Self::new(
            DESK_LINKS.to_vec(),
            base,
            vec![(-DESK_JOINT_LIMIT, DESK_JOINT_LIMIT); DESK_LINKS.len()],
            spheres,
        )
        .expect("desk arm is valid")
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    pub fn base(&self) -> BasePose {
        self.base
    }

    pub fn joint_limits(&self) -> &[(f64, f64)] {
        &self.joint_limits
    }

    pub fn spheres(&self) -> &[SphereSpec] {
        &self.spheres
    }

    pub fn sphere_count(&self) -> usize {
        self.spheres.len()
    }

    pub fn max_reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    pub fn with_base(&self, base: BasePose) -> Self {
        Self { base, ..self.clone() }
    }

    pub fn within_limits(&self, q: &Vector) -> bool {
        q.iter()
            .zip(&self.joint_limits)
            .all(|(v, (lo, hi))| *v > *lo && *v < *hi)
    }

    fn check_point(&self, q: &Vector, link: usize, offset: f64) -> Result<()> {
        if q.len() != self.dof() {
            return Err(FabricError::DimensionMismatch {
                expected: self.dof(),
                found: q.len(),
            });
        }
        if link >= self.dof() {
            return Err(FabricError::IndexOutOfRange {
                index: link,
                len: self.dof(),
            });
        }
        if !(0.0..=1.0).contains(&offset) {
            return Err(FabricError::Config(format!("offset {offset} outside [0, 1]")));
        }
        Ok(())
    }

    /// Absolute link angles and angular rates.
    fn link_angles(&self, q: &Vector, qd: Option<&Vector>) -> (Vec<f64>, Vec<f64>) {
        let mut theta = self.base.heading;
        let mut omega = 0.0;
        let mut angles = Vec::with_capacity(self.dof());
        let mut rates = Vec::with_capacity(self.dof());
        for j in 0..self.dof() {
            theta += q[j];
            omega += qd.map_or(0.0, |v| v[j]);
            angles.push(theta);
            rates.push(omega);
        }
        (angles, rates)
    }

    /// Position, Jacobian and `J̇ q̇` of a point on the chain in one pass.
    pub fn point_kinematics(&self, q: &Vector, qd: &Vector, link: usize, offset: f64) -> Result<PointKinematics> {
        self.check_point(q, link, offset)?;
        if qd.len() != self.dof() {
            return Err(FabricError::DimensionMismatch {
                expected: self.dof(),
                found: qd.len(),
            });
        }
        Ok(self.point_kinematics_unchecked(q, qd, link, offset))
    }

    fn point_kinematics_unchecked(&self, q: &Vector, qd: &Vector, link: usize, offset: f64) -> PointKinematics {
        let n = self.dof();
        let (angles, rates) = self.link_angles(q, Some(qd));
        // Segment k contributes l_k u(θ_k); the last one only up to `offset`.
        let seg = |k: usize| {
            if k == link {
                offset * self.link_lengths[k]
            } else {
                self.link_lengths[k]
            }
        };
        let mut position = self.base.position();
        let mut jdot_qdot = Point::zeros();
        for k in 0..=link {
            let (s, c) = angles[k].sin_cos();
            let l = seg(k);
            position += Point::new(c, s) * l;
            jdot_qdot -= Point::new(c, s) * (l * rates[k] * rates[k]);
        }
        let mut jacobian = Matrix::zeros(2, n);
        // Column j sums the perpendiculars of segments j..=link.
        let mut acc = Point::zeros();
        for k in (0..=link).rev() {
            let (s, c) = angles[k].sin_cos();
            acc += Point::new(-s, c) * seg(k);
            jacobian[(0, k)] = acc.x;
            jacobian[(1, k)] = acc.y;
        }
        PointKinematics {
            position,
            jacobian,
            jdot_qdot,
        }
    }

    pub fn fk_point(&self, q: &Vector, link: usize, offset: f64) -> Result<Point> {
        self.check_point(q, link, offset)?;
        let (angles, _) = self.link_angles(q, None);
        let mut p = self.base.position();
        for (k, (a, len)) in angles.iter().zip(&self.link_lengths).take(link + 1).enumerate() {
            let l = if k == link { offset * len } else { *len };
            p += Point::new(a.cos(), a.sin()) * l;
        }
        Ok(p)
    }

    pub fn point_jacobian(&self, q: &Vector, link: usize, offset: f64) -> Result<Matrix> {
        let zeros = Vector::zeros(self.dof());
        Ok(self.point_kinematics(q, &zeros, link, offset)?.jacobian)
    }

    pub fn end_effector(&self, q: &Vector) -> Point {
        self.fk_point(q, self.dof() - 1, 1.0)
            .expect("end effector index is valid")
    }

    pub fn end_effector_kinematics(&self, q: &Vector, qd: &Vector) -> PointKinematics {
        self.point_kinematics_unchecked(q, qd, self.dof() - 1, 1.0)
    }

    /// The map `q ↦ fk(q)` of a point on the chain as a [`DifferentialMap`].
    pub fn point_map(&self, link: usize, offset: f64) -> Result<DifferentialMap> {
        self.check_point(&Vector::zeros(self.dof()), link, offset)?;
        let n = self.dof();
        let (a, b, c) = (self.clone(), self.clone(), self.clone());
        Ok(DifferentialMap::new(
            n,
            2,
            move |q| {
                let p = a.point_kinematics_unchecked(q, &Vector::zeros(q.len()), link, offset);
                Vector::from_column_slice(p.position.as_slice())
            },
            move |q| {
                b.point_kinematics_unchecked(q, &Vector::zeros(q.len()), link, offset)
                    .jacobian
            },
            move |q, qd| {
                let p = c.point_kinematics_unchecked(q, qd, link, offset);
                Vector::from_column_slice(p.jdot_qdot.as_slice())
            },
        ))
    }

    pub fn end_effector_map(&self) -> DifferentialMap {
        self.point_map(self.dof() - 1, 1.0)
            .expect("end effector index is valid")
    }

    /// World-frame centers, velocities and radii of all collision spheres.
    pub fn collision_spheres(&self, state: &RobotState) -> Vec<SphereState> {
        self.spheres
            .iter()
            .map(|s| {
                let k = self.point_kinematics_unchecked(&state.q, &state.qd, s.link, s.offset);
                SphereState {
                    center: k.position,
                    velocity: k.velocity(&state.qd),
                    radius: s.radius,
                }
            })
            .collect()
    }

    /// Joint positions of the chain (base, elbow, ..., end effector), for plotting.
    pub fn joint_positions(&self, q: &Vector) -> Vec<Point> {
        let mut out = vec![self.base.position()];
        for link in 0..self.dof() {
            out.push(self.fk_point(q, link, 1.0).expect("valid link"));
        }
        out
    }

    /// Base pose packed as `(x, y, heading)`.
    pub fn base_vector(&self) -> Vector3<f64> {
        Vector3::new(self.base.x, self.base.y, self.base.heading)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointKinematics {
    pub position: Point,
    /// 2 x n
    pub jacobian: Matrix,
    pub jdot_qdot: Point,
}

impl PointKinematics {
    pub fn velocity(&self, qd: &Vector) -> Point {
        let v = &self.jacobian * qd;
        Point::new(v[0], v[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub q: Vector,
    pub qd: Vector,
}

impl RobotState {
    pub fn new(q: Vector, qd: Vector) -> Self {
        Self { q, qd }
    }

    pub fn at_rest(q: Vector) -> Self {
        let n = q.len();
        Self::new(q, Vector::zeros(n))
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereState {
    pub center: Point,
    pub velocity: Point,
    pub radius: f64,
}

/// Surface distance between two spheres; negative when they overlap.
pub fn clearance(a: &SphereState, b_center: &Point, b_radius: f64) -> f64 {
    (a.center - b_center).norm() - (a.radius + b_radius)
}
