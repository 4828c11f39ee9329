use std::time::Instant;

use faer::sparse::{SparseRowMatRef, SymbolicSparseRowMatRef};
use faer::prelude::Solve;
use faer::{c64, Mat};
use num_complex::Complex64;

use super::{check_inputs, SolveError, SolveReport, SolverKind};
use crate::sparse::SparseComplexMatrix;

const MAX_REFINEMENT_STEPS: usize = 3;

/// Sparse LU with partial pivoting plus iterative refinement.
pub fn solve_direct(a: &SparseComplexMatrix, b: &[Complex64], tol: f64) -> Result<(Vec<Complex64>, SolveReport), SolveError> {
    check_inputs(a, b, tol)?;
    let start = Instant::now();
    let n = a.dim();
    let report = |residual: f64, iterations: usize| SolveReport {
        kind: SolverKind::Direct,
        relative_residual: residual,
        iterations,
        wall_time: start.elapsed(),
    };
    if n == 0 {
        return Ok((Vec::new(), report(0.0, 0)));
    }
    let symbolic = SymbolicSparseRowMatRef::new_checked(n, n, a.row_ptr(), None, a.col_idx());
    let values: &[c64] = a.values();
    let mat = SparseRowMatRef::new(symbolic, values);
    let lu = mat.sp_lu().map_err(|_| SolveError::SingularSystem(report(f64::INFINITY, 0)))?;

    let solve_with = |rhs: &[Complex64]| -> Vec<Complex64> {
        let m = Mat::<c64>::from_fn(n, 1, |i, _| rhs[i]);
        let sol = lu.solve(&m);
        (0..n).map(|i| sol[(i, 0)]).collect()
    };

    let mut x = solve_with(b);
    let mut residual = a.relative_residual(&x, b);
    let mut steps = 0;
    while residual.is_finite() && residual > tol && steps < MAX_REFINEMENT_STEPS {
        let ax = a.matvec(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = solve_with(&r);
        let candidate: Vec<Complex64> = x.iter().zip(&dx).map(|(p, q)| p + q).collect();
        let res = a.relative_residual(&candidate, b);
        steps += 1;
        if !(res < residual) {
            break;
        }
        x = candidate;
        residual = res;
    }
    if !residual.is_finite() || x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(SolveError::SingularSystem(report(residual, steps)));
    }
    if residual > tol {
        return Err(SolveError::NoConvergence(report(residual, steps)));
    }
    Ok((x, report(residual, steps)))
}
