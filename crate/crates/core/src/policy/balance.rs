//! Load balancers: given the selected basis and its counters, pick the arm
//! to pull this round.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::estimator::ActionArm;
use crate::lp::{lu_solve_in_place, FEASIBILITY_TOL, SINGULAR_TOL};
use crate::{Error, Result};

/// Deterministic round-robin toward fixed ratios.
///
/// Returns the position of the lowest basis arm with
/// `n^x_k <= n_x * xi_k / sum(xi)`, counts taken before the round.
pub fn alg2(xi: &[f64], n_x: u64, n_xk: &[u64]) -> usize {
    debug_assert_eq!(xi.len(), n_xk.len());
    let total: f64 = xi.iter().sum();
    if xi.is_empty() || !(total > 0.0) {
        return 0;
    }
    let n = n_x as f64;
    let mut fallback = 0;
    let mut worst = f64::INFINITY;
    for (j, (&x, &c)) in xi.iter().zip(n_xk).enumerate() {
        let target = n * x / total;
        let slack = c as f64 - target;
        if slack <= 0.0 {
            return j;
        }
        if slack < worst {
            worst = slack;
            fallback = j;
        }
    }
    // unreachable in exact arithmetic: the deficits sum to zero
    fallback
}

/// The two members of a Case 3 basis, high-cost first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alg3Roles {
    pub high: ActionArm,
    pub low: ActionArm,
    /// Deflated costs `c - eps` of `high` and `low`.
    pub high_cost: f64,
    pub low_cost: f64,
}

/// Orders two deflated costs; on a tie the first entry takes the high role.
pub fn alg3_order(a: (ActionArm, f64), b: (ActionArm, f64)) -> Alg3Roles {
    let (high, low) = if b.1 > a.1 { (b, a) } else { (a, b) };
    Alg3Roles {
        high: high.0,
        low: low.0,
        high_cost: high.1,
        low_cost: low.1,
    }
}

/// Pulls the high-cost member while the basis is at or under its pace.
pub fn alg3(roles: &Alg3Roles, consumed: f64, n_x: u64, b: f64) -> ActionArm {
    if consumed <= n_x as f64 * b {
        roles.high
    } else {
        roles.low
    }
}

/// Result of the Case 4 pacing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pacing {
    /// Perturbation direction `A^-1 e`, aligned with the basis columns.
    pub direction: Vec<f64>,
    pub delta: f64,
    /// Distribution `p(delta)`, aligned with the basis columns.
    pub p: Vec<f64>,
    /// Largest violation of `p >= 0` or of an off-basis constraint.
    pub violation: f64,
}

/// Case 4 pacing.
///
/// `a` is the `d x d` basis matrix (row-major), `rhs` its right-hand side,
/// `e` the correction signs. Rows outside the basis come as `off_rows`
/// (each of length `d`) with limits `off_rhs`. The step is the largest
/// `delta <= delta_max` keeping `p(delta) = A^-1 (rhs + delta e)` nonnegative
/// and the other rows within their limits.
pub fn alg4(
    a: &[f64],
    rhs: &[f64],
    e: &[f64],
    off_rows: &[f64],
    off_rhs: &[f64],
    delta_max: f64,
) -> Result<Pacing> {
    let d = rhs.len();
    if a.len() != d * d || e.len() != d || off_rows.len() != off_rhs.len() * d {
        return Err(Error::Dimension(alloc::format!(
            "pacing: matrix {} for d={d}, e {}, off rows {}",
            a.len(),
            e.len(),
            off_rows.len()
        )));
    }
    let mut p0 = rhs.to_vec();
    let mut dir = e.to_vec();
    let mut scratch = a.to_vec();
    let det = lu_solve_in_place(&mut scratch, &mut p0, d);
    if det.abs() <= SINGULAR_TOL {
        return Err(Error::SingularBasis);
    }
    scratch.copy_from_slice(a);
    lu_solve_in_place(&mut scratch, &mut dir, d);

    let mut delta = delta_max;
    for (&v, &w) in p0.iter().zip(&dir) {
        if w < 0.0 {
            delta = delta.min(v.max(0.0) / -w);
        }
    }
    for (row, &lim) in off_rows.chunks_exact(d).zip(off_rhs) {
        let g0: f64 = row.iter().zip(&p0).map(|(r, p)| r * p).sum();
        let g1: f64 = row.iter().zip(&dir).map(|(r, p)| r * p).sum();
        if g1 > 0.0 {
            delta = delta.min((lim - g0).max(0.0) / g1);
        }
    }
    let delta = delta.max(0.0);
    let p: Vec<f64> = p0.iter().zip(&dir).map(|(v, w)| v + delta * w).collect();

    let mut violation = p.iter().fold(0.0f64, |m, &x| m.max(-x));
    for (row, &lim) in off_rows.chunks_exact(d).zip(off_rhs) {
        let g: f64 = row.iter().zip(&p).map(|(r, x)| r * x).sum();
        violation = violation.max(g - lim);
    }
    Ok(Pacing {
        direction: dir,
        delta,
        p,
        violation,
    })
}

/// Whether a pacing result honours its constraints.
pub fn pacing_feasible(p: &Pacing) -> bool {
    p.violation <= FEASIBILITY_TOL
}

/// Argmax of `xi_k / n_k` over the basis arms; ties go to the lowest position.
pub fn ratio_argmax(xi: &[f64], pulls: &[u64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (j, (&x, &n)) in xi.iter().zip(pulls).enumerate() {
        let v = if n == 0 {
            if x > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            x / n as f64
        };
        if v > best_val {
            best_val = v;
            best = j;
        }
    }
    best
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = j;
        }
    }
    best
}
