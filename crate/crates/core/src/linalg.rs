//! Small dense helpers shared by the algebra and the policy solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{FabricError, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Condition numbers above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// 2-norm condition number from the singular values.
pub fn condition_number(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    if m.nrows() == 1 {
        let v = m[(0, 0)].abs();
        return if v > 0.0 { 1.0 } else { f64::INFINITY };
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve `m x = b`, failing when `m` is singular beyond [`MAX_CONDITION`].
pub fn solve_guarded(m: &Matrix, b: &Vector) -> Result<Vector> {
    let cond = condition_number(m);
    if !(cond <= MAX_CONDITION) {
        return Err(FabricError::SingularMetric(cond));
    }
    m.clone().lu().solve(b).ok_or(FabricError::SingularMetric(cond))
}

/// Largest element-wise asymmetry `max |M - M^T|`.
pub fn asymmetry(m: &Matrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(FabricError::DimensionMismatch { expected, found })
    }
}
