//! Exact LP machinery for small dense problems, solved by enumerating every
//! pseudo-basis.

mod audit;
mod basis;
mod dense;
mod problem;

pub use audit::{audit_nondegeneracy, AuditEntry, AuditReport};
pub use basis::{
    enumerate_pseudo_bases, enumerate_pseudo_bases_capped, pseudo_basis_count, PseudoBasis,
    DEFAULT_ENUMERATION_CAP,
};
pub use dense::{det_and_adjugate, determinant, lu_solve_in_place, rank, DenseMatrix};
pub use problem::{
    optimal_basis, solve_basic, solve_dual, BasicSolution, BasisSolver, DualSolution, LpProblem,
};

/// Absolute slack allowed on constraints and nonnegativity.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Bases with `|det| <= SINGULAR_TOL` are treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Threshold used for numerical rank.
pub const RANK_TOL: f64 = 1e-9;
