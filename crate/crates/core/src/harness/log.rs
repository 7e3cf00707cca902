//! Trajectory logs: one CSV row per robot per step, written with full
//! precision so a run can be replayed exactly.

use std::io::{Read, Write};

use crate::error::{FabricError, Result};
use crate::linalg::Vector;
use crate::rollout::integrate;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub robot: usize,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    /// Commanded acceleration applied from this state.
    pub qdd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub rows: Vec<TrajectoryRow>,
}

fn io_err(e: impl std::fmt::Display) -> FabricError {
    FabricError::Config(format!("trajectory log: {e}"))
}

impl TrajectoryLog {
    pub fn new(dt: f64) -> Self {
        Self { dt, rows: Vec::new() }
    }

    pub fn push(&mut self, row: TrajectoryRow) {
        self.rows.push(row);
    }

    pub fn robots(&self) -> usize {
        self.rows.iter().map(|r| r.robot + 1).max().unwrap_or(0)
    }

    /// Rows of one robot in time order.
    pub fn robot_rows(&self, robot: usize) -> impl Iterator<Item = &TrajectoryRow> {
        self.rows.iter().filter(move |r| r.robot == robot)
    }

    /// Columns `t, robot, q0.., qd0.., qdd0..`; rows of different DOF are
    /// padded to the widest robot with empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let dof = self.rows.iter().map(|r| r.q.len()).max().unwrap_or(0);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "robot".to_string()];
        for prefix in ["q", "qd", "qdd"] {
            header.extend((0..dof).map(|j| format!("{prefix}{j}")));
        }
        w.write_record(&header).map_err(io_err)?;
        for r in &self.rows {
            let mut rec = vec![r.t.to_string(), r.robot.to_string()];
            for v in [&r.q, &r.qd, &r.qdd] {
                rec.extend((0..dof).map(|j| v.get(j).map_or(String::new(), |x| x.to_string())));
            }
            w.write_record(&rec).map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, dt: f64) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let width = rd.headers().map_err(io_err)?.len();
        if width < 2 || (width - 2) % 3 != 0 {
            return Err(io_err("unexpected header width"));
        }
        let dof = (width - 2) / 3;
        let mut log = TrajectoryLog::new(dt);
        for rec in rd.records() {
            let rec = rec.map_err(io_err)?;
            let num = |i: usize| -> Result<Option<f64>> {
                let s = rec.get(i).unwrap_or("");
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(io_err)
                }
            };
            let block = |start: usize| -> Result<Vec<f64>> {
                Ok((0..dof)
                    .map(|j| num(start + j))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .flatten()
                    .collect())
            };
            log.push(TrajectoryRow {
                t: num(0)?.ok_or_else(|| io_err("missing time"))?,
                robot: rec.get(1).unwrap_or("").parse().map_err(io_err)?,
                q: block(2)?,
                qd: block(2 + dof)?,
                qdd: block(2 + 2 * dof)?,
            });
        }
        Ok(log)
    }

    /// Re-integrate each robot from its first logged state with the logged
    /// accelerations; returns the largest deviation from the logged states.
    pub fn replay_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for robot in 0..self.robots() {
            let rows: Vec<&TrajectoryRow> = self.robot_rows(robot).collect();
            let Some(first) = rows.first() else { continue };
            let mut q = Vector::from_vec(first.q.clone());
            let mut qd = Vector::from_vec(first.qd.clone());
            for pair in rows.windows(2) {
                let (nq, nqd) = integrate(&q, &qd, &Vector::from_vec(pair[0].qdd.clone()), self.dt);
                q = nq;
                qd = nqd;
                let lq = Vector::from_vec(pair[1].q.clone());
                let lqd = Vector::from_vec(pair[1].qd.clone());
                worst = worst.max((&q - lq).amax()).max((&qd - lqd).amax());
            }
        }
        worst
    }
}
