//! Tables of |r_{m,k}(x) − log x| against the a priori bound.

use crate::error::{Error, Result};
use crate::scalar_approx::{error_bound_log, RationalApproximant};
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct ApproxErrorRow {
    pub m: usize,
    pub k: u32,
    pub x: f64,
    pub error: f64,
    pub bound: f64,
}

/// `points` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || points == 0 {
        return Err(Error::DegenerateParameter(format!("bad grid [{lo}, {hi}] with {points} points")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[points - 1] = hi;
    Ok(grid)
}

/// One row per (m, k, x), ordered by m, then k, then grid position.
pub fn approx_error(m_list: &[usize], k_list: &[u32], grid: &[f64]) -> Result<Vec<ApproxErrorRow>> {
    let mut rows = Vec::with_capacity(m_list.len() * k_list.len() * grid.len());
    for &m in m_list {
        for &k in k_list {
            let r = RationalApproximant::log(m, k)?;
            for &x in grid {
                let error = (r.eval_rmk(x)? - x.ln()).abs();
                rows.push(ApproxErrorRow { m, k, x, error, bound: error_bound_log(x, m, k) });
            }
        }
    }
    Ok(rows)
}
