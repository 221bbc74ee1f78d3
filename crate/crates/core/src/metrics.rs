//! OSPA distance between finite point sets.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OspaConfig {
    pub order: f64,
    pub cutoff: f64,
}

impl Default for OspaConfig {
    fn default() -> Self {
        Self {
            order: 2.0,
            cutoff: 100.0,
        }
    }
}

impl OspaConfig {
    pub fn new(order: f64, cutoff: f64) -> Result<Self> {
        if !(order >= 1.0) || !(cutoff > 0.0) {
            return Err(Error::Domain(format!(
                "OSPA needs p >= 1 and c > 0 (got p = {order}, c = {cutoff})"
            )));
        }
        Ok(Self { order, cutoff })
    }
}

/// OSPA distance; two empty sets are at distance 0.
pub fn ospa(truth: &[Vector2<f64>], estimate: &[Vector2<f64>], cfg: &OspaConfig) -> f64 {
    let (small, large) = if truth.len() <= estimate.len() {
        (truth, estimate)
    } else {
        (estimate, truth)
    };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return 0.0;
    }
    let c_p = cfg.cutoff.powf(cfg.order);
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|a| {
            large
                .iter()
                .map(|b| (a - b).norm().min(cfg.cutoff).powf(cfg.order))
                .collect()
        })
        .collect();
    let assigned = if m == 0 { 0.0 } else { assignment_cost(&cost) };
    ((assigned + c_p * (n - m) as f64) / n as f64).powf(1.0 / cfg.order)
}

/// Total cost of [`optimal_assignment`], summed in row order.
pub fn assignment_cost(cost: &[Vec<f64>]) -> f64 {
    optimal_assignment(cost)
        .iter()
        .enumerate()
        .fold(0.0, |acc, (i, &j)| acc + cost[i][j])
}

/// Column assigned to each row of a rows <= cols cost matrix, minimizing the
/// total cost (shortest augmenting paths with potentials).
pub fn optimal_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let rows = cost.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = cost[0].len();
    assert!(rows <= cols, "assignment needs rows <= cols");
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    // p[j]: row matched to column j (1-based, 0 = free).
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; rows];
    for j in 1..=cols {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}
