//! Shared helpers for the integration tests: a dense brute-force oracle for
//! the spec operations and a few fixtures.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rollout_fabrics::harness::Scenario;
use rollout_fabrics::linalg::{Matrix, Vector};

pub type Dense = Vec<Vec<f64>>;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

pub fn scenario(name: &str) -> Scenario {
    Scenario::load(scenario_path(name)).expect("shipped scenario loads")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

pub fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-scale..scale))
}

/// Symmetric positive definite, condition number kept moderate.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let a = random_mat(rng, n, n, 1.0);
    &a * a.transpose() + Matrix::identity(n, n) * 0.5
}

pub fn dense(m: &Matrix) -> Dense {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn col(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn transpose(a: &Dense) -> Dense {
    let (r, c) = (a.len(), a[0].len());
    (0..c).map(|j| (0..r).map(|i| a[i][j]).collect()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; c]; r];
    for i in 0..r {
        for j in 0..c {
            for m in 0..k {
                out[i][j] += a[i][m] * b[m][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p + q).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &Dense) -> Dense {
    let n = a.len();
    let mut m: Dense = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        let pivot = m[c][c];
        for v in m[c].iter_mut() {
            *v /= pivot;
        }
        for r in 0..n {
            if r != c {
                let factor = m[r][c];
                let pivot_row = m[c].clone();
                for (v, pv) in m[r].iter_mut().zip(pivot_row) {
                    *v -= factor * pv;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `(M, f + P (M h - f))` with the projector formed explicitly as
/// `M (M⁻¹ - ẋẋᵀ / ẋᵀMẋ)`.
pub fn energize_oracle(h: &[f64], m: &Dense, f: &[f64], xd: &[f64]) -> (Dense, Vec<f64>) {
    let n = xd.len();
    let minv = inverse(m);
    let denom = dot(xd, &matvec(m, xd));
    let inner: Dense = (0..n)
        .map(|i| (0..n).map(|j| minv[i][j] - xd[i] * xd[j] / denom).collect())
        .collect();
    let p = matmul(m, &inner);
    let v = sub(&matvec(m, h), f);
    (m.clone(), add(f, &matvec(&p, &v)))
}

/// `(JᵀMJ, Jᵀ(f + M J̇q̇))`.
pub fn pullback_oracle(j: &Dense, jdot_qdot: &[f64], m: &Dense, f: &[f64]) -> (Dense, Vec<f64>) {
    let jt = transpose(j);
    let mm = matmul(&jt, &matmul(m, j));
    let ff = matvec(&jt, &add(f, &matvec(m, jdot_qdot)));
    (mm, ff)
}

/// `(M, f - M a)`.
pub fn dynamic_pullback_oracle(m: &Dense, f: &[f64], a: &[f64]) -> (Dense, Vec<f64>) {
    (m.clone(), sub(f, &matvec(m, a)))
}

pub fn sum_oracle(a: (&Dense, &[f64]), b: (&Dense, &[f64])) -> (Dense, Vec<f64>) {
    let m = a.0.iter().zip(b.0).map(|(r, s)| add(r, s)).collect();
    (m, add(a.1, b.1))
}

pub fn max_err(m: &Matrix, f: &Vector, oracle: &(Dense, Vec<f64>)) -> f64 {
    let mut e: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            e = e.max((m[(i, j)] - oracle.0[i][j]).abs());
        }
    }
    for (i, v) in f.iter().enumerate() {
        e = e.max((v - oracle.1[i]).abs());
    }
    e
}

pub mod criteria;
