//! Self-check suite: enumeration optimum against an independent
//! square-subsystem solver, strong duality, and the adjugate identity.

use bwk_core::lp::{det_and_adjugate, optimal_basis, solve_dual, DenseMatrix, LpProblem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub instances: usize,
    pub max_value_error: f64,
    pub max_duality_gap: f64,
    pub max_dual_infeasibility: f64,
    pub max_adjugate_error: f64,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A random problem with `K <= 6`, `C <= 3`, uniform means and
/// right-hand sides uniform in `[0.2, 1]`.
pub fn random_problem(rng: &mut impl Rng) -> LpProblem {
    let k = rng.random_range(1..=6);
    let c = rng.random_range(1..=3);
    let objective: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let rows: Vec<Vec<f64>> = (0..c)
        .map(|_| (0..k).map(|_| rng.random::<f64>()).collect())
        .collect();
    let rhs: Vec<f64> = (0..c).map(|_| rng.random_range(0.2..=1.0)).collect();
    LpProblem::from_rows(&objective, &rows, &rhs).expect("valid random problem")
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == size {
            out.push((0..n).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    out
}

/// Best objective over every square subsystem whose solution is feasible,
/// solved with nalgebra's LU.
pub fn square_subsystem_optimum(problem: &LpProblem) -> f64 {
    let (k, c) = (problem.arms(), problem.resources());
    let a = problem.constraints();
    let mut best = 0.0f64;
    for d in 1..=k.min(c) {
        for arms in subsets(k, d) {
            for res in subsets(c, d) {
                let m = DMatrix::from_fn(d, d, |r, col| a.get(res[r], arms[col]));
                let b = DVector::from_fn(d, |r, _| problem.rhs()[res[r]]);
                if m.determinant().abs() <= 1e-12 {
                    continue;
                }
                let Some(x) = m.lu().solve(&b) else { continue };
                if x.iter().any(|&v| v < -TOLERANCE) {
                    continue;
                }
                let feasible = (0..c).all(|i| {
                    let lhs: f64 = arms
                        .iter()
                        .zip(x.iter())
                        .map(|(&j, v)| a.get(i, j) * v)
                        .sum();
                    lhs <= problem.rhs()[i] + TOLERANCE
                });
                if feasible {
                    let obj: f64 = arms
                        .iter()
                        .zip(x.iter())
                        .map(|(&j, v)| problem.objective()[j] * v)
                        .sum();
                    best = best.max(obj);
                }
            }
        }
    }
    best
}

fn adjugate_error(m: &DenseMatrix) -> f64 {
    let (det, adj) = det_and_adjugate(m).expect("square");
    let prod = m.mul(&adj).expect("conformable");
    let n = prod.rows();
    let mut err = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { det } else { 0.0 };
            err = err.max((prod.get(i, j) - want).abs());
        }
    }
    err
}

pub fn run_verify(instances: usize, seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport {
        instances,
        max_value_error: 0.0,
        max_duality_gap: 0.0,
        max_dual_infeasibility: 0.0,
        max_adjugate_error: 0.0,
        failures: Vec::new(),
    };
    for n in 0..instances {
        let p = random_problem(&mut rng);
        let oracle = square_subsystem_optimum(&p);
        let primal = match optimal_basis(&p) {
            Ok((s, _)) => s.objective,
            Err(e) => {
                report.failures.push(format!("instance {n}: {e}"));
                continue;
            }
        };
        let value_err = (primal - oracle).abs();
        report.max_value_error = report.max_value_error.max(value_err);
        if value_err > TOLERANCE {
            report
                .failures
                .push(format!("instance {n}: optimum {primal} vs oracle {oracle}"));
        }
        match solve_dual(&p) {
            Ok(dual) => {
                let a = p.constraints();
                let mut infeas = dual.zeta.iter().fold(0.0f64, |m, &z| m.max(-z));
                for j in 0..p.arms() {
                    let col: f64 = (0..p.resources()).map(|i| a.get(i, j) * dual.zeta[i]).sum();
                    infeas = infeas.max(p.objective()[j] - col);
                }
                let value: f64 = p.rhs().iter().zip(&dual.zeta).map(|(b, z)| b * z).sum();
                let gap = (value - primal).abs();
                report.max_duality_gap = report.max_duality_gap.max(gap);
                report.max_dual_infeasibility = report.max_dual_infeasibility.max(infeas);
                if gap > TOLERANCE || infeas > TOLERANCE {
                    report.failures.push(format!(
                        "instance {n}: duality gap {gap:e}, dual infeasibility {infeas:e}"
                    ));
                }
            }
            Err(e) => report.failures.push(format!("instance {n}: dual: {e}")),
        }
        let d = rng.random_range(1..=4);
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let m = DenseMatrix::from_rows(&rows).expect("square rows");
        let err = adjugate_error(&m);
        report.max_adjugate_error = report.max_adjugate_error.max(err);
        if err > TOLERANCE {
            report
                .failures
                .push(format!("instance {n}: adjugate identity off by {err:e}"));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let p = LpProblem::from_rows(&[0.9, 0.3], &[[0.8, 0.2], [1.0, 1.0]], &[0.5, 1.0]).unwrap();
        assert!((square_subsystem_optimum(&p) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn small_suite_passes() {
        let r = run_verify(25, 1);
        assert!(r.passed(), "{:?}", r.failures);
    }
}
