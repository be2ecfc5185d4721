use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::basis::{enumerate_pseudo_bases_capped, PseudoBasis, DEFAULT_ENUMERATION_CAP};
use super::dense::{lu_solve_in_place, DenseMatrix};
use super::{FEASIBILITY_TOL, SINGULAR_TOL};
use crate::math::abs;
use crate::{Error, Result};

/// `max c.xi  s.t.  A xi <= b, xi >= 0` with `A` of shape `C x K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    objective: Vec<f64>,
    constraints: DenseMatrix,
    rhs: Vec<f64>,
}

impl LpProblem {
    /// Validates shapes and finiteness. The right-hand side must be
    /// nonnegative so that the empty basis is always feasible.
    pub fn new(objective: Vec<f64>, constraints: DenseMatrix, rhs: Vec<f64>) -> Result<Self> {
        if objective.is_empty() || rhs.is_empty() {
            return Err(Error::Dimension("empty objective or rhs".into()));
        }
        if constraints.rows() != rhs.len() || constraints.cols() != objective.len() {
            return Err(Error::Dimension(format!(
                "constraint matrix is {}x{}, expected {}x{}",
                constraints.rows(),
                constraints.cols(),
                rhs.len(),
                objective.len()
            )));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&objective) || !finite(constraints.as_slice()) || !finite(&rhs) {
            return Err(Error::InvalidParameter("non-finite LP coefficient".into()));
        }
        if rhs.iter().any(|&b| b < 0.0) {
            return Err(Error::InvalidParameter("negative right-hand side".into()));
        }
        Ok(Self {
            objective,
            constraints,
            rhs,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(objective: &[f64], rows: &[R], rhs: &[f64]) -> Result<Self> {
        Self::new(
            objective.to_vec(),
            DenseMatrix::from_rows(rows)?,
            rhs.to_vec(),
        )
    }

    pub fn arms(&self) -> usize {
        self.objective.len()
    }

    pub fn resources(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &DenseMatrix {
        &self.constraints
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }
}

/// Basic solution attached to a pseudo-basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicSolution {
    pub basis: PseudoBasis,
    /// Full-length solution, zero outside the basis arms.
    pub xi: Vec<f64>,
    pub objective: f64,
    pub is_basis: bool,
    pub is_feasible: bool,
    pub det: f64,
}

/// Dual multipliers of the resource constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub zeta: Vec<f64>,
    pub value: f64,
}

/// Per-basis results of one enumeration pass.
#[derive(Debug, Clone, Copy, Default)]
struct Slot {
    det: f64,
    is_basis: bool,
    feasible: bool,
    objective: f64,
}

/// Reusable enumeration solver for a fixed problem shape.
///
/// Holds the pseudo-bases in canonical order plus scratch space, so a solve
/// allocates nothing. When the constraint matrix and right-hand side are
/// bitwise equal to the previous call only the objectives are re-evaluated.
#[derive(Debug, Clone)]
pub struct BasisSolver {
    arms: usize,
    resources: usize,
    bases: Vec<PseudoBasis>,
    offsets: Vec<usize>,
    xi: Vec<f64>,
    slots: Vec<Slot>,
    cached_matrix: Vec<f64>,
    cached_rhs: Vec<f64>,
    cache_valid: bool,
    scratch_a: Vec<f64>,
    scratch_b: Vec<f64>,
    best: usize,
}

impl BasisSolver {
    pub fn new(arms: usize, resources: usize) -> Result<Self> {
        Self::with_cap(arms, resources, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(arms: usize, resources: usize, cap: usize) -> Result<Self> {
        let bases = enumerate_pseudo_bases_capped(arms, resources, cap)?;
        let mut offsets = Vec::with_capacity(bases.len() + 1);
        let mut off = 0;
        for b in &bases {
            offsets.push(off);
            off += b.size();
        }
        offsets.push(off);
        let d = arms.min(resources);
        Ok(Self {
            arms,
            resources,
            slots: vec![Slot::default(); bases.len()],
            bases,
            offsets,
            xi: vec![0.0; off],
            cached_matrix: vec![0.0; arms * resources],
            cached_rhs: vec![0.0; resources],
            cache_valid: false,
            scratch_a: vec![0.0; d * d],
            scratch_b: vec![0.0; d],
            best: 0,
        })
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    pub fn bases(&self) -> &[PseudoBasis] {
        &self.bases
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn invalidate_cache(&mut self) {
        self.cache_valid = false;
    }

    /// Solves from raw slices (`matrix` row-major `C x K`) and returns the
    /// index of the optimal basis. Errors if the problem is unbounded.
    pub fn solve_slices(
        &mut self,
        objective: &[f64],
        matrix: &[f64],
        rhs: &[f64],
    ) -> Result<usize> {
        let (k, c) = (self.arms, self.resources);
        if objective.len() != k || matrix.len() != k * c || rhs.len() != c {
            return Err(Error::Dimension(format!(
                "solver built for K={k}, C={c}; got objective {}, matrix {}, rhs {}",
                objective.len(),
                matrix.len(),
                rhs.len()
            )));
        }
        if !is_bounded(objective, matrix, c)? {
            return Err(Error::UnboundedLp);
        }
        let reuse = self.cache_valid
            && bits_equal(&self.cached_matrix, matrix)
            && bits_equal(&self.cached_rhs, rhs);
        if !reuse {
            self.cached_matrix.copy_from_slice(matrix);
            self.cached_rhs.copy_from_slice(rhs);
            for idx in 0..self.bases.len() {
                self.solve_one(idx, matrix, rhs);
            }
            self.cache_valid = true;
        }
        let mut best = 0;
        let mut best_obj = f64::NEG_INFINITY;
        for idx in 0..self.bases.len() {
            let obj = if self.slots[idx].feasible {
                self.eval_objective(idx, objective)
            } else {
                0.0
            };
            self.slots[idx].objective = obj;
            if self.slots[idx].feasible && obj > best_obj {
                best_obj = obj;
                best = idx;
            }
        }
        self.best = best;
        Ok(best)
    }

    pub fn solve(&mut self, problem: &LpProblem) -> Result<usize> {
        self.solve_slices(
            &problem.objective,
            problem.constraints.as_slice(),
            &problem.rhs,
        )
    }

    fn solve_one(&mut self, idx: usize, matrix: &[f64], rhs: &[f64]) {
        let k = self.arms;
        let basis = &self.bases[idx];
        let d = basis.size();
        let xi = &mut self.xi[self.offsets[idx]..self.offsets[idx + 1]];
        let det = if d == 0 {
            1.0
        } else {
            let a = &mut self.scratch_a[..d * d];
            let b = &mut self.scratch_b[..d];
            for (r, &i) in basis.resources().iter().enumerate() {
                for (col, &arm) in basis.arms().iter().enumerate() {
                    a[r * d + col] = matrix[i * k + arm];
                }
                b[r] = rhs[i];
            }
            let det = lu_solve_in_place(a, b, d);
            xi.copy_from_slice(b);
            det
        };
        let is_basis = abs(det) > SINGULAR_TOL;
        if !is_basis {
            xi.iter_mut().for_each(|x| *x = 0.0);
        }
        let feasible = is_basis
            && xi.iter().all(|&x| x >= -FEASIBILITY_TOL)
            && (0..self.resources).all(|i| {
                let lhs: f64 = basis
                    .arms()
                    .iter()
                    .zip(xi.iter())
                    .map(|(&arm, &x)| matrix[i * k + arm] * x)
                    .sum();
                lhs <= rhs[i] + FEASIBILITY_TOL
            });
        self.slots[idx] = Slot {
            det,
            is_basis,
            feasible,
            objective: 0.0,
        };
    }

    fn eval_objective(&self, idx: usize, objective: &[f64]) -> f64 {
        let mut s = 0.0;
        for (&arm, &x) in self.bases[idx].arms().iter().zip(self.xi_compact(idx)) {
            s += objective[arm] * x;
        }
        s
    }

    /// Index of the optimum found by the last solve.
    pub fn best(&self) -> usize {
        self.best
    }

    pub fn basis(&self, idx: usize) -> &PseudoBasis {
        &self.bases[idx]
    }

    /// Basic-variable values, aligned with `basis(idx).arms()`.
    pub fn xi_compact(&self, idx: usize) -> &[f64] {
        &self.xi[self.offsets[idx]..self.offsets[idx + 1]]
    }

    pub fn objective(&self, idx: usize) -> f64 {
        self.slots[idx].objective
    }

    pub fn is_feasible(&self, idx: usize) -> bool {
        self.slots[idx].feasible
    }

    pub fn is_basis(&self, idx: usize) -> bool {
        self.slots[idx].is_basis
    }

    pub fn det(&self, idx: usize) -> f64 {
        self.slots[idx].det
    }

    /// Materializes the solution of basis `idx` from the last solve.
    pub fn solution(&self, idx: usize) -> BasicSolution {
        let mut xi = vec![0.0; self.arms];
        for (&arm, &x) in self.bases[idx].arms().iter().zip(self.xi_compact(idx)) {
            xi[arm] = x;
        }
        BasicSolution {
            basis: self.bases[idx].clone(),
            xi,
            objective: self.slots[idx].objective,
            is_basis: self.slots[idx].is_basis,
            is_feasible: self.slots[idx].feasible,
            det: self.slots[idx].det,
        }
    }
}

fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Decides whether `max c.xi, A xi <= b, xi >= 0` is bounded (for any `b >= 0`).
///
/// It is unbounded exactly when an improving ray exists: `d >= 0` with
/// `A d <= 0` and `c.d > 0`.
pub(crate) fn is_bounded(objective: &[f64], matrix: &[f64], resources: usize) -> Result<bool> {
    let k = objective.len();
    // a row with every entry positive caps every variable
    if (0..resources).any(|i| matrix[i * k..(i + 1) * k].iter().all(|&a| a > 0.0)) {
        return Ok(true);
    }
    if matrix.iter().all(|&a| a >= 0.0) {
        // rays live on all-zero columns only
        let unbounded = (0..k)
            .any(|col| objective[col] > 0.0 && (0..resources).all(|i| matrix[i * k + col] == 0.0));
        return Ok(!unbounded);
    }
    // general case: max c.d  s.t.  A d <= 0, sum d <= 1, d >= 0
    let mut ray_matrix = Vec::with_capacity((resources + 1) * k);
    ray_matrix.extend_from_slice(matrix);
    ray_matrix.extend(core::iter::repeat_n(1.0, k));
    let mut ray_rhs = vec![0.0; resources + 1];
    ray_rhs[resources] = 1.0;
    let mut solver = BasisSolver::new(k, resources + 1)?;
    let best = solver.solve_slices(objective, &ray_matrix, &ray_rhs)?;
    Ok(solver.objective(best) <= FEASIBILITY_TOL)
}

/// Basic solution for one pseudo-basis.
pub fn solve_basic(problem: &LpProblem, basis: &PseudoBasis) -> Result<BasicSolution> {
    let (k, c) = (problem.arms(), problem.resources());
    if !basis.fits(k, c) {
        return Err(Error::InvalidBasis(format!(
            "{basis} does not fit K={k}, C={c}"
        )));
    }
    let d = basis.size();
    let mut xi = vec![0.0; k];
    let det = if d == 0 {
        1.0
    } else {
        let mut a = vec![0.0; d * d];
        let mut b = vec![0.0; d];
        for (r, &i) in basis.resources().iter().enumerate() {
            for (col, &arm) in basis.arms().iter().enumerate() {
                a[r * d + col] = problem.constraints.get(i, arm);
            }
            b[r] = problem.rhs[i];
        }
        let det = lu_solve_in_place(&mut a, &mut b, d);
        if abs(det) > SINGULAR_TOL {
            for (&arm, &x) in basis.arms().iter().zip(&b) {
                xi[arm] = x;
            }
        }
        det
    };
    let is_basis = abs(det) > SINGULAR_TOL;
    let is_feasible = is_basis
        && xi.iter().all(|&x| x >= -FEASIBILITY_TOL)
        && (0..c).all(|i| {
            let lhs: f64 = basis
                .arms()
                .iter()
                .map(|&arm| problem.constraints.get(i, arm) * xi[arm])
                .sum();
            lhs <= problem.rhs[i] + FEASIBILITY_TOL
        });
    let objective = basis
        .arms()
        .iter()
        .map(|&arm| problem.objective[arm] * xi[arm])
        .fold(0.0, |s, v| s + v);
    Ok(BasicSolution {
        basis: basis.clone(),
        xi,
        objective,
        is_basis,
        is_feasible,
        det,
    })
}

/// Optimal basic feasible solution and the full list of feasible ones, both
/// in canonical basis order. Ties go to the earliest basis.
pub fn optimal_basis(problem: &LpProblem) -> Result<(BasicSolution, Vec<BasicSolution>)> {
    let mut solver = BasisSolver::new(problem.arms(), problem.resources())?;
    let best = solver.solve(problem)?;
    let feasible = (0..solver.len())
        .filter(|&i| solver.is_feasible(i))
        .map(|i| solver.solution(i))
        .collect();
    Ok((solver.solution(best), feasible))
}

/// Multipliers `zeta` with `A_x^T zeta_{C_x} = c_{K_x}`, zero off `C_x`.
fn multipliers(problem: &LpProblem, basis: &PseudoBasis) -> Option<Vec<f64>> {
    let d = basis.size();
    let mut zeta = vec![0.0; problem.resources()];
    if d == 0 {
        return Some(zeta);
    }
    let mut a = vec![0.0; d * d];
    let mut rhs = vec![0.0; d];
    // transposed system: row per arm, column per resource
    for (r, &arm) in basis.arms().iter().enumerate() {
        for (col, &i) in basis.resources().iter().enumerate() {
            a[r * d + col] = problem.constraints.get(i, arm);
        }
        rhs[r] = problem.objective[arm];
    }
    let det = lu_solve_in_place(&mut a, &mut rhs, d);
    if abs(det) <= SINGULAR_TOL {
        return None;
    }
    for (&i, &z) in basis.resources().iter().zip(&rhs) {
        zeta[i] = z;
    }
    Some(zeta)
}

fn dual_feasible(problem: &LpProblem, zeta: &[f64]) -> bool {
    zeta.iter().all(|&z| z >= -FEASIBILITY_TOL)
        && (0..problem.arms()).all(|k| {
            let lhs: f64 = (0..problem.resources())
                .map(|i| problem.constraints.get(i, k) * zeta[i])
                .sum();
            lhs >= problem.objective[k] - FEASIBILITY_TOL
        })
}

fn dual_value(problem: &LpProblem, zeta: &[f64]) -> f64 {
    problem.rhs.iter().zip(zeta).map(|(b, z)| b * z).sum()
}

/// Solves `min b.zeta  s.t.  A^T zeta >= c, zeta >= 0`.
///
/// Uses the optimal basis' multipliers when they are dual feasible and falls
/// back to the best dual vertex otherwise (primal degeneracy). The result is
/// checked against the primal optimum.
pub fn solve_dual(problem: &LpProblem) -> Result<DualSolution> {
    let (primal, _) = optimal_basis(problem)?;
    let mut zeta = multipliers(problem, &primal.basis).filter(|z| dual_feasible(problem, z));
    if zeta.is_none() {
        let bases = enumerate_pseudo_bases_capped(
            problem.arms(),
            problem.resources(),
            DEFAULT_ENUMERATION_CAP,
        )?;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for b in &bases {
            if let Some(z) = multipliers(problem, b).filter(|z| dual_feasible(problem, z)) {
                let v = dual_value(problem, &z);
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, z));
                }
            }
        }
        zeta = best.map(|(_, z)| z);
    }
    let mut zeta = zeta.ok_or(Error::DualityGap {
        primal: primal.objective,
        dual: f64::INFINITY,
        gap: f64::INFINITY,
    })?;
    for z in zeta.iter_mut() {
        if *z < 0.0 {
            *z = 0.0;
        }
    }
    let value = dual_value(problem, &zeta);
    let gap = abs(primal.objective - value);
    if gap > FEASIBILITY_TOL * primal.objective.abs().max(1.0) {
        return Err(Error::DualityGap {
            primal: primal.objective,
            dual: value,
            gap,
        });
    }
    Ok(DualSolution { zeta, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn example() -> LpProblem {
        LpProblem::from_rows(&[0.9, 0.3], &[[0.8, 0.2], [1.0, 1.0]], &[0.5, 1.0]).unwrap()
    }

    #[test]
    fn single_time_constraint() {
        let p = LpProblem::from_rows(&[0.9, 0.5], &[[1.0, 1.0]], &[1.0]).unwrap();
        let b = PseudoBasis::new(vec![0], vec![0]).unwrap();
        let s = solve_basic(&p, &b).unwrap();
        assert_eq!(s.xi, vec![1.0, 0.0]);
        assert_eq!(s.objective, 0.9);
        assert!(s.is_feasible);
        let (best, _) = optimal_basis(&p).unwrap();
        assert_eq!(best.basis, b);
    }

    #[test]
    fn two_by_two_basic_solution() {
        let b = PseudoBasis::new(vec![0, 1], vec![0, 1]).unwrap();
        let s = solve_basic(&example(), &b).unwrap();
        assert!((s.xi[0] - 0.5).abs() < 1e-15 && (s.xi[1] - 0.5).abs() < 1e-15);
        assert!((s.det - 0.6).abs() < 1e-15);
    }

    #[test]
    fn empty_basis_is_feasible() {
        let s = solve_basic(&example(), &PseudoBasis::empty()).unwrap();
        assert_eq!(s.xi, vec![0.0, 0.0]);
        assert_eq!(s.objective, 0.0);
        assert!(s.is_feasible && s.is_basis);
    }

    #[test]
    fn example_optimum_and_dual() {
        let (best, feasible) = optimal_basis(&example()).unwrap();
        assert!((best.objective - 0.6).abs() < 1e-12);
        assert!((best.xi[0] - 0.5).abs() < 1e-12);
        // empty, ({1},{1}), ({2},{2}), ({1,2},{1,2})
        assert_eq!(feasible.len(), 4);
        let dual = solve_dual(&example()).unwrap();
        assert!((dual.value - 0.6).abs() < 1e-12);
    }

    #[test]
    fn scalar_duality_and_zero_objective() {
        let p = LpProblem::from_rows(&[0.7], &[[1.0]], &[1.0]).unwrap();
        let d = solve_dual(&p).unwrap();
        assert!((d.zeta[0] - 0.7).abs() < 1e-15 && (d.value - 0.7).abs() < 1e-15);

        let z = LpProblem::from_rows(&[0.0, 0.0], &[[0.3, 0.4]], &[0.5]).unwrap();
        let (best, _) = optimal_basis(&z).unwrap();
        assert!(best.basis.is_empty());
        let d = solve_dual(&z).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.zeta, vec![0.0]);
    }

    #[test]
    fn detects_unbounded_column() {
        let p = LpProblem::from_rows(&[0.5, 0.2], &[[0.0, 0.3]], &[1.0]).unwrap();
        assert_eq!(optimal_basis(&p).unwrap_err(), Error::UnboundedLp);
    }

    #[test]
    fn detects_unbounded_ray_through_negative_costs() {
        // d = (0, 1) is an improving ray: arm 2 never uses up anything
        let p = LpProblem::from_rows(&[0.5, 0.1], &[[0.5, -0.6], [0.2, 0.0]], &[0.5, 1.0]).unwrap();
        assert!(!is_bounded(p.objective(), p.constraints().as_slice(), 2).unwrap());
        // with a time row it becomes bounded
        let q = LpProblem::from_rows(&[0.5, 0.1], &[[0.5, -0.6], [1.0, 1.0]], &[0.5, 1.0]).unwrap();
        assert!(optimal_basis(&q).is_ok());
    }

    #[test]
    fn cached_resolve_matches_fresh_solve() {
        let p = example();
        let mut s = BasisSolver::new(2, 2).unwrap();
        s.solve(&p).unwrap();
        let other = [0.1, 0.95];
        let best = s
            .solve_slices(&other, p.constraints().as_slice(), p.rhs())
            .unwrap();
        let fresh = optimal_basis(
            &LpProblem::new(other.to_vec(), p.constraints().clone(), p.rhs().to_vec()).unwrap(),
        )
        .unwrap()
        .0;
        assert_eq!(s.solution(best), fresh);
    }

    fn arb_problem() -> impl Strategy<Value = LpProblem> {
        (1usize..=6, 1usize..=3).prop_flat_map(|(k, c)| {
            (
                proptest::collection::vec(0.0f64..1.0, k),
                proptest::collection::vec(0.0f64..1.0, k * c),
                proptest::collection::vec(0.2f64..1.0, c),
            )
                .prop_map(move |(obj, a, b)| {
                    let mut a = a;
                    // keep every arm costly somewhere
                    for col in 0..k {
                        a[col] = a[col].max(0.05);
                    }
                    LpProblem::new(obj, DenseMatrix::from_row_major(c, k, a).unwrap(), b).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn strong_duality(p in arb_problem()) {
            let (best, _) = optimal_basis(&p).unwrap();
            let dual = solve_dual(&p).unwrap();
            prop_assert!((best.objective - dual.value).abs() <= 1e-9);
        }

        #[test]
        fn basic_residuals(p in arb_problem()) {
            let (_, feasible) = optimal_basis(&p).unwrap();
            for s in feasible.iter().filter(|s| s.is_basis) {
                for (&i, _) in s.basis.resources().iter().zip(s.basis.arms()) {
                    let lhs: f64 = (0..p.arms()).map(|k| p.constraints().get(i, k) * s.xi[k]).sum();
                    prop_assert!((lhs - p.rhs()[i]).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn deterministic(p in arb_problem()) {
            let a = optimal_basis(&p).unwrap();
            let b = optimal_basis(&p).unwrap();
            prop_assert_eq!(a.0.objective.to_bits(), b.0.objective.to_bits());
            prop_assert_eq!(a, b);
        }
    }
}
