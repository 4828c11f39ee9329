//! Solvers for the assembled complex systems.
//!
//! The default path is a sparse LU factorisation with partial pivoting and a
//! fill-reducing ordering, followed by up to three steps of iterative
//! refinement. The fallback is restarted GMRES with an ILU(0) right
//! preconditioner, which uses far less memory but may stall on strongly
//! indefinite problems.

mod direct;
mod iterative;

use std::time::Duration;

use num_complex::Complex64;

use crate::sparse::SparseComplexMatrix;

pub use direct::solve_direct;
pub use iterative::{solve_iterative, Ilu0};

/// Default target for `‖Ax − b‖₂ / ‖b‖₂`.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Direct,
    Iterative,
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(SolverKind::Direct),
            "iterative" => Ok(SolverKind::Iterative),
            _ => Err(format!("unknown solver {s:?} (expected direct or iterative)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub kind: SolverKind,
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { kind: SolverKind::Direct, tol: DEFAULT_TOL }
    }
}

/// What a solve cost and how well it did.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub kind: SolverKind,
    /// `‖Ax − b‖₂ / ‖b‖₂`, recomputed from the returned `x`.
    pub relative_residual: f64,
    /// Refinement steps for the direct solver, Krylov iterations otherwise.
    pub iterations: usize,
    pub wall_time: Duration,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("matrix is {0}x{0} but the right-hand side has length {1}")]
    DimensionMismatch(usize, usize),
    #[error("tolerance {0:e} is below the supported minimum 1e-14")]
    BadTolerance(f64),
    #[error("system is numerically singular (relative residual {:e})", .0.relative_residual)]
    SingularSystem(SolveReport),
    #[error("no convergence after {} iterations (relative residual {:e})", .0.iterations, .0.relative_residual)]
    NoConvergence(SolveReport),
}

impl SolveError {
    pub fn report(&self) -> Option<&SolveReport> {
        match self {
            SolveError::SingularSystem(r) | SolveError::NoConvergence(r) => Some(r),
            _ => None,
        }
    }
}

fn check_inputs(a: &SparseComplexMatrix, b: &[Complex64], tol: f64) -> Result<(), SolveError> {
    if a.dim() != b.len() {
        return Err(SolveError::DimensionMismatch(a.dim(), b.len()));
    }
    if !(tol >= 1e-14) {
        return Err(SolveError::BadTolerance(tol));
    }
    Ok(())
}

/// Solves `A x = b` to relative residual `opts.tol`.
pub fn solve(a: &SparseComplexMatrix, b: &[Complex64], opts: SolveOptions) -> Result<(Vec<Complex64>, SolveReport), SolveError> {
    match opts.kind {
        SolverKind::Direct => solve_direct(a, b, opts.tol),
        SolverKind::Iterative => solve_iterative(a, b, opts.tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_kind_parses() {
        assert_eq!("direct".parse::<SolverKind>(), Ok(SolverKind::Direct));
        assert_eq!("iterative".parse::<SolverKind>(), Ok(SolverKind::Iterative));
        assert!("cg".parse::<SolverKind>().is_err());
    }

    #[test]
    fn inputs_are_validated() {
        let a = SparseComplexMatrix::identity(2);
        let b = vec![Complex64::new(1.0, 0.0); 3];
        assert!(matches!(solve(&a, &b, SolveOptions::default()), Err(SolveError::DimensionMismatch(2, 3))));
        let b = vec![Complex64::new(1.0, 0.0); 2];
        let opts = SolveOptions { tol: 1e-16, ..Default::default() };
        assert!(matches!(solve(&a, &b, opts), Err(SolveError::BadTolerance(_))));
    }
}
