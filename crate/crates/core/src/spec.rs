//! Spectral semi-sprays and their algebra.
//!
//! A [`Spec`] is a pair `(M, f)` describing the second-order system
//! `M(x, ẋ) ẍ + f(x, ẋ) = 0`. Specs are closures over pure evaluators, and
//! every operation here (energization, pullback, dynamic pullback, summation)
//! returns another spec, so arbitrary trees of components can be composed once
//! and evaluated many times.
//!
//! The `*_value` functions apply the same operations to already-evaluated
//! matrices. The planner hot path uses those directly; the lazy combinators are
//! thin wrappers around them.

use std::fmt;
use std::sync::Arc;

use crate::error::{FabricError, Result};
use crate::linalg::{check_dim, condition_number, Matrix, Vector, MAX_CONDITION};

/// Below this value of `ẋᵀ M ẋ` the energization projector is undefined.
pub const ENERGIZE_VELOCITY_TOL: f64 = 1e-12;

/// An evaluated spec: the metric `M` and force `f` at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecValue {
    pub m: Matrix,
    pub f: Vector,
}

impl SpecValue {
    pub fn new(m: Matrix, f: Vector) -> Self {
        debug_assert_eq!(m.nrows(), f.len());
        Self { m, f }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: Matrix::zeros(dim, dim),
            f: Vector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    /// Solve the system for its acceleration, `ẍ = -M⁻¹ f`.
    pub fn acceleration(&self) -> Result<Vector> {
        crate::linalg::solve_guarded(&self.m, &(-&self.f))
    }

    pub fn add_assign(&mut self, other: &SpecValue) {
        self.m += &other.m;
        self.f += &other.f;
    }
}

type SpecFn = dyn Fn(&Vector, &Vector) -> Result<SpecValue> + Send + Sync;
type VecFn = dyn Fn(&Vector, &Vector) -> Vector + Send + Sync;
type MatFn = dyn Fn(&Vector, &Vector) -> Matrix + Send + Sync;
type ScalarFn = dyn Fn(&Vector, &Vector) -> f64 + Send + Sync;

/// A second-order system `M ẍ + f = 0` on an `m`-dimensional manifold.
#[derive(Clone)]
pub struct Spec {
    dim: usize,
    eval: Arc<SpecFn>,
}

impl fmt::Debug for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spec").field("dim", &self.dim).finish()
    }
}

impl Spec {
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&Vector, &Vector) -> Result<SpecValue> + Send + Sync + 'static,
    {
        Self {
            dim,
            eval: Arc::new(eval),
        }
    }

    /// The additive identity `(0, 0)`.
    pub fn zero(dim: usize) -> Self {
        Self::new(dim, move |_, _| Ok(SpecValue::zeros(dim)))
    }

    /// A state-independent spec.
    pub fn constant(m: Matrix, f: Vector) -> Self {
        let dim = f.len();
        let value = SpecValue::new(m, f);
        Self::new(dim, move |_, _| Ok(value.clone()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &Vector, xd: &Vector) -> Result<SpecValue> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, xd.len())?;
        let value = (self.eval)(x, xd)?;
        check_dim(self.dim, value.dim())?;
        debug_assert!(crate::linalg::asymmetry(&value.m) <= 1e-12 * (1.0 + value.m.amax()));
        Ok(value)
    }

    /// Acceleration of the unforced system at `(x, ẋ)`.
    pub fn acceleration(&self, x: &Vector, xd: &Vector) -> Result<Vector> {
        self.eval(x, xd)?.acceleration()
    }
}

/// The geometry-defining term `h` of a spec `ẍ + h(x, ẋ) = 0`.
///
/// `h` must be homogeneous of degree 2 in `ẋ`.
#[derive(Clone)]
pub struct Geometry {
    dim: usize,
    h: Arc<VecFn>,
}

impl fmt::Debug for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Geometry").field("dim", &self.dim).finish()
    }
}

impl Geometry {
    pub fn new<F>(dim: usize, h: F) -> Self
    where
        F: Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    {
        Self { dim, h: Arc::new(h) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self, x: &Vector, xd: &Vector) -> Vector {
        (self.h)(x, xd)
    }

    /// The geometry as a spec `(I, h)`.
    pub fn to_spec(&self) -> Spec {
        let geom = self.clone();
        Spec::new(self.dim, move |x, xd| {
            Ok(SpecValue::new(Matrix::identity(geom.dim, geom.dim), geom.h(x, xd)))
        })
    }

    /// Relative violation of `h(x, αẋ) = α² h(x, ẋ)`, scaled by `1 + ‖h‖`.
    pub fn homogeneity_error(&self, x: &Vector, xd: &Vector, alpha: f64) -> f64 {
        let base = self.h(x, xd);
        let scaled = self.h(x, &(xd * alpha));
        (scaled - &base * (alpha * alpha)).norm() / (1.0 + base.norm())
    }
}

/// An energy Lagrangian `L_e(x, ẋ)` with its equations of motion
/// `M_Le ẍ + f_Le = 0`.
#[derive(Clone)]
pub struct EnergyLagrangian {
    dim: usize,
    metric: Arc<MatFn>,
    force: Arc<VecFn>,
    energy: Arc<ScalarFn>,
}

impl fmt::Debug for EnergyLagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnergyLagrangian").field("dim", &self.dim).finish()
    }
}

impl EnergyLagrangian {
    pub fn new<M, F, E>(dim: usize, metric: M, force: F, energy: E) -> Self
    where
        M: Fn(&Vector, &Vector) -> Matrix + Send + Sync + 'static,
        F: Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
        E: Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            metric: Arc::new(metric),
            force: Arc::new(force),
            energy: Arc::new(energy),
        }
    }

    /// `L_e = ½ m ‖ẋ‖²`: metric `m I`, no force.
    pub fn euclidean(dim: usize, mass: f64) -> Self {
        Self::new(
            dim,
            move |_, _| Matrix::identity(dim, dim) * mass,
            move |_, _| Vector::zeros(dim),
            move |_, xd| 0.5 * mass * xd.norm_squared(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self, x: &Vector, xd: &Vector) -> Matrix {
        (self.metric)(x, xd)
    }

    pub fn force(&self, x: &Vector, xd: &Vector) -> Vector {
        (self.force)(x, xd)
    }

    pub fn energy(&self, x: &Vector, xd: &Vector) -> f64 {
        (self.energy)(x, xd)
    }

    /// The Lagrangian's own equations of motion as a spec `(M_Le, f_Le)`.
    pub fn to_spec(&self) -> Spec {
        let lag = self.clone();
        Spec::new(self.dim, move |x, xd| {
            Ok(SpecValue::new(lag.metric(x, xd), lag.force(x, xd)))
        })
    }
}

type PhiFn = dyn Fn(&Vector) -> Vector + Send + Sync;
type JacFn = dyn Fn(&Vector) -> Matrix + Send + Sync;

/// A smooth map `x = φ(q)` from an `n`-dimensional configuration space into an
/// `m`-dimensional task space, with `ẋ = J q̇` and `ẍ = J q̈ + J̇ q̇`.
#[derive(Clone)]
pub struct DifferentialMap {
    in_dim: usize,
    out_dim: usize,
    phi: Arc<PhiFn>,
    jacobian: Arc<JacFn>,
    jdot_qdot: Arc<VecFn>,
}

impl fmt::Debug for DifferentialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DifferentialMap")
            .field("in_dim", &self.in_dim)
            .field("out_dim", &self.out_dim)
            .finish()
    }
}

impl DifferentialMap {
    pub fn new<P, J, D>(in_dim: usize, out_dim: usize, phi: P, jacobian: J, jdot_qdot: D) -> Self
    where
        P: Fn(&Vector) -> Vector + Send + Sync + 'static,
        J: Fn(&Vector) -> Matrix + Send + Sync + 'static,
        D: Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    {
        Self {
            in_dim,
            out_dim,
            phi: Arc::new(phi),
            jacobian: Arc::new(jacobian),
            jdot_qdot: Arc::new(jdot_qdot),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(
            n,
            n,
            |q| q.clone(),
            move |_| Matrix::identity(n, n),
            move |_, _| Vector::zeros(n),
        )
    }

    /// `x = A q + b`.
    pub fn affine(a: Matrix, b: Vector) -> Self {
        let (m, n) = a.shape();
        let a_phi = a.clone();
        Self::new(
            n,
            m,
            move |q| &a_phi * q + &b,
            move |_| a.clone(),
            move |_, _| Vector::zeros(m),
        )
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn phi(&self, q: &Vector) -> Vector {
        (self.phi)(q)
    }

    pub fn jacobian(&self, q: &Vector) -> Matrix {
        (self.jacobian)(q)
    }

    pub fn jdot_qdot(&self, q: &Vector, qd: &Vector) -> Vector {
        (self.jdot_qdot)(q, qd)
    }

    /// Composition `outer ∘ self`.
    pub fn then(&self, outer: &DifferentialMap) -> Result<DifferentialMap> {
        check_dim(outer.in_dim, self.out_dim)?;
        let (a, b, c) = (self.clone(), outer.clone(), self.clone());
        let (d, e) = (self.clone(), outer.clone());
        let g = outer.clone();
        Ok(DifferentialMap::new(
            self.in_dim,
            outer.out_dim,
            move |q| b.phi(&a.phi(q)),
            move |q| {
                let x = c.phi(q);
                g.jacobian(&x) * c.jacobian(q)
            },
            move |q, qd| {
                let x = d.phi(q);
                let j_in = d.jacobian(q);
                let xd = &j_in * qd;
                e.jacobian(&x) * d.jdot_qdot(q, qd) + e.jdot_qdot(&x, &xd)
            },
        ))
    }
}

/// Position, velocity and acceleration of a moving reference (an obstacle)
/// at the evaluation instant.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeMotionFrame {
    pub position: Vector,
    pub velocity: Vector,
    pub acceleration: Vector,
}

impl RelativeMotionFrame {
    pub fn new(position: Vector, velocity: Vector, acceleration: Vector) -> Self {
        Self {
            position,
            velocity,
            acceleration,
        }
    }

    /// Moving reference whose acceleration is neglected.
    pub fn moving(position: Vector, velocity: Vector) -> Self {
        let dim = position.len();
        Self::new(position, velocity, Vector::zeros(dim))
    }

    pub fn fixed(position: Vector) -> Self {
        let dim = position.len();
        Self::new(position, Vector::zeros(dim), Vector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }
}

/// Energize an evaluated geometry `h` with the equations of motion
/// `(M_Le, f_Le)` of an energy Lagrangian:
/// `f = f_Le + P_Le (M_Le h - f_Le)`, `P_Le = I - M_Le ẋ ẋᵀ / (ẋᵀ M_Le ẋ)`.
pub fn energize_value(h: &Vector, m_le: &Matrix, f_le: &Vector, xd: &Vector) -> Result<SpecValue> {
    let dim = xd.len();
    check_dim(dim, h.len())?;
    check_dim(dim, f_le.len())?;
    check_dim(dim, m_le.nrows())?;
    let m_xd = m_le * xd;
    let denom = xd.dot(&m_xd);
    if !(denom > ENERGIZE_VELOCITY_TOL) {
        return Err(FabricError::DegenerateVelocity(denom));
    }
    let cond = condition_number(m_le);
    if !(cond <= MAX_CONDITION) {
        return Err(FabricError::SingularMetric(cond));
    }
    let v = m_le * h - f_le;
    // P v without forming P: v - M ẋ (ẋᵀ v) / (ẋᵀ M ẋ)
    let projected = &v - &m_xd * (xd.dot(&v) / denom);
    Ok(SpecValue::new(m_le.clone(), f_le + projected))
}

/// As [`energize_value`], but a degenerate velocity yields the geometry itself
/// under the Lagrangian metric, `(M_Le, M_Le h)`, whose acceleration is `-h`.
pub fn energize_value_or_passthrough(h: &Vector, m_le: &Matrix, f_le: &Vector, xd: &Vector) -> Result<SpecValue> {
    match energize_value(h, m_le, f_le, xd) {
        Err(FabricError::DegenerateVelocity(_)) => Ok(SpecValue::new(m_le.clone(), m_le * h)),
        other => other,
    }
}

/// Pull an evaluated task-space spec back through `J`:
/// `(Jᵀ M J, Jᵀ (f + M J̇q̇))`.
pub fn pullback_value(j: &Matrix, jdot_qdot: &Vector, task: &SpecValue) -> SpecValue {
    let jt = j.transpose();
    let m = &jt * &task.m * j;
    let f = &jt * (&task.f + &task.m * jdot_qdot);
    SpecValue::new(m, f)
}

/// Transfer a spec evaluated in relative coordinates to absolute coordinates:
/// `(M_d, f_d - M_d ẍ_ref)`.
pub fn dynamic_pullback_value(relative: SpecValue, reference_accel: &Vector) -> SpecValue {
    let f = &relative.f - &relative.m * reference_accel;
    SpecValue::new(relative.m, f)
}

pub fn sum_value(a: &SpecValue, b: &SpecValue) -> Result<SpecValue> {
    check_dim(a.dim(), b.dim())?;
    Ok(SpecValue::new(&a.m + &b.m, &a.f + &b.f))
}

/// Energization of a geometry by an energy Lagrangian. At rest states
/// (`ẋᵀ M_Le ẋ` below tolerance) the geometry passes through unchanged.
pub fn energize(geom: &Geometry, lag: &EnergyLagrangian) -> Result<Spec> {
    check_dim(geom.dim(), lag.dim())?;
    let (geom, lag) = (geom.clone(), lag.clone());
    Ok(Spec::new(geom.dim(), move |x, xd| {
        let h = geom.h(x, xd);
        let m_le = lag.metric(x, xd);
        let f_le = lag.force(x, xd);
        energize_value_or_passthrough(&h, &m_le, &f_le, xd)
    }))
}

/// Pull a task-space spec back into the configuration space of `map`.
pub fn pullback(map: &DifferentialMap, spec: &Spec) -> Result<Spec> {
    check_dim(map.out_dim(), spec.dim())?;
    let (map, spec) = (map.clone(), spec.clone());
    Ok(Spec::new(map.in_dim(), move |q, qd| {
        let x = map.phi(q);
        let j = map.jacobian(q);
        let xd = &j * qd;
        let task = spec.eval(&x, &xd)?;
        Ok(pullback_value(&j, &map.jdot_qdot(q, qd), &task))
    }))
}

/// Pull a spec defined on coordinates relative to a moving frame onto the
/// absolute task manifold.
pub fn dynamic_pullback(frame: &RelativeMotionFrame, spec_rel: &Spec) -> Result<Spec> {
    check_dim(spec_rel.dim(), frame.dim())?;
    check_dim(frame.dim(), frame.velocity.len())?;
    check_dim(frame.dim(), frame.acceleration.len())?;
    let (frame, spec) = (frame.clone(), spec_rel.clone());
    Ok(Spec::new(frame.dim(), move |x, xd| {
        let x_rel = x - &frame.position;
        let xd_rel = xd - &frame.velocity;
        let rel = spec.eval(&x_rel, &xd_rel)?;
        Ok(dynamic_pullback_value(rel, &frame.acceleration))
    }))
}

pub fn sum(a: &Spec, b: &Spec) -> Result<Spec> {
    check_dim(a.dim(), b.dim())?;
    let (a, b) = (a.clone(), b.clone());
    Ok(Spec::new(a.dim(), move |x, xd| {
        let va = a.eval(x, xd)?;
        let vb = b.eval(x, xd)?;
        sum_value(&va, &vb)
    }))
}

/// Sum of any number of specs on the same manifold.
pub fn sum_all<'a, I>(dim: usize, specs: I) -> Result<Spec>
where
    I: IntoIterator<Item = &'a Spec>,
{
    let mut acc = Spec::zero(dim);
    for s in specs {
        acc = sum(&acc, s)?;
    }
    Ok(acc)
}
