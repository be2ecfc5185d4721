use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::basis::PseudoBasis;
use super::problem::{BasisSolver, LpProblem};
use super::FEASIBILITY_TOL;
use crate::math::abs;
use crate::{Error, Result};

/// Outcome of the non-degeneracy check for one pseudo-basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub basis: PseudoBasis,
    pub det: f64,
    pub is_feasible: bool,
    /// Smallest basic variable (feasible bases only).
    pub min_basic: Option<f64>,
    /// Smallest slack among nonbinding constraints (feasible bases only).
    pub min_slack: Option<f64>,
    /// Smallest of `|det| - eps`, `min_basic - eps`, `min_slack - eps`.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub epsilon: f64,
    pub entries: Vec<AuditEntry>,
    pub passed: bool,
}

impl AuditReport {
    pub fn failures(&self) -> impl Iterator<Item = &AuditEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }
}

/// Checks that every pseudo-basis has `|det| >= eps` and that every feasible
/// one keeps its basic variables and nonbinding slacks at least `eps` away
/// from zero. The objective of `problem` is ignored.
pub fn audit_nondegeneracy(problem: &LpProblem, epsilon: f64) -> Result<AuditReport> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(alloc::format!(
            "audit epsilon {epsilon} outside [0, 1]"
        )));
    }
    let (k, c) = (problem.arms(), problem.resources());
    let mut solver = BasisSolver::new(k, c)?;
    // the feasibility pass does not depend on the objective, and a zero
    // objective is always bounded
    let zeros = alloc::vec![0.0; k];
    solver.solve_slices(&zeros, problem.constraints().as_slice(), problem.rhs())?;
    let a = problem.constraints();
    let mut entries = Vec::with_capacity(solver.len());
    for idx in 0..solver.len() {
        let basis = solver.basis(idx).clone();
        let det = solver.det(idx);
        let feasible = solver.is_feasible(idx);
        let mut margin = abs(det) - epsilon;
        let (mut min_basic, mut min_slack) = (None, None);
        if feasible {
            let xi = solver.xi_compact(idx);
            let mb = xi.iter().copied().fold(f64::INFINITY, f64::min);
            if !xi.is_empty() {
                min_basic = Some(mb);
                margin = margin.min(mb - epsilon);
            }
            let mut ms = f64::INFINITY;
            for i in (0..c).filter(|&i| !basis.contains_resource(i)) {
                let lhs: f64 = basis
                    .arms()
                    .iter()
                    .zip(xi)
                    .map(|(&arm, &x)| a.get(i, arm) * x)
                    .sum();
                ms = ms.min(problem.rhs()[i] - lhs);
            }
            if ms.is_finite() {
                min_slack = Some(ms);
                margin = margin.min(ms - epsilon);
            }
        }
        entries.push(AuditEntry {
            basis,
            det,
            is_feasible: feasible,
            min_basic,
            min_slack,
            margin,
            passed: margin >= -FEASIBILITY_TOL,
        });
    }
    let passed = entries.iter().all(|e| e.passed);
    Ok(AuditReport {
        epsilon,
        entries,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_passes_at_five_percent() {
        let p = LpProblem::from_rows(&[0.9, 0.3], &[[0.8, 0.2], [1.0, 1.0]], &[0.5, 1.0]).unwrap();
        let r = audit_nondegeneracy(&p, 0.05).unwrap();
        assert!(r.passed, "{:?}", r.failures().collect::<Vec<_>>());
        let full = r.entries.iter().find(|e| e.basis.size() == 2).unwrap();
        assert!((full.det - 0.6).abs() < 1e-12);
        assert!((full.min_basic.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_columns_fail() {
        let p = LpProblem::from_rows(&[0.5, 0.5], &[[0.4, 0.4], [1.0, 1.0]], &[0.5, 1.0]).unwrap();
        let r = audit_nondegeneracy(&p, 0.01).unwrap();
        assert!(!r.passed);
        assert!(r
            .failures()
            .any(|e| e.basis.size() == 2 && e.det.abs() < 1e-12));
    }

    #[test]
    fn zero_threshold_is_vacuous() {
        let p = LpProblem::from_rows(&[0.5, 0.5], &[[0.4, 0.4], [1.0, 1.0]], &[0.5, 1.0]).unwrap();
        assert!(audit_nondegeneracy(&p, 0.0).unwrap().passed);
    }
}
