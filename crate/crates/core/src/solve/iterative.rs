use std::time::Instant;

use num_complex::Complex64;

use super::{check_inputs, SolveError, SolveReport, SolverKind};
use crate::sparse::{norm2, SparseComplexMatrix};

const RESTART: usize = 40;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Incomplete LU factorisation with the sparsity pattern of `A`.
///
/// `L` (unit diagonal) and `U` share the CSR arrays of the input matrix.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    /// Fails if a diagonal entry is missing or becomes zero.
    pub fn new(a: &SparseComplexMatrix) -> Option<Self> {
        let n = a.dim();
        let row_ptr = a.row_ptr().to_vec();
        let col_idx = a.col_idx().to_vec();
        let mut values = a.values().to_vec();
        let mut diag = vec![0; n];
        for i in 0..n {
            let r = row_ptr[i]..row_ptr[i + 1];
            diag[i] = r.start + col_idx[r].binary_search(&i).ok()?;
        }
        // Position lookup for the current row.
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[p]] = p;
            }
            for p in row_ptr[i]..diag[i] {
                let kcol = col_idx[p];
                let pivot = values[diag[kcol]];
                if pivot == ZERO {
                    return None;
                }
                let factor = values[p] / pivot;
                values[p] = factor;
                for q in diag[kcol] + 1..row_ptr[kcol + 1] {
                    let j = col_idx[q];
                    if pos[j] != usize::MAX {
                        let upd = factor * values[q];
                        values[pos[j]] -= upd;
                    }
                }
            }
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[p]] = usize::MAX;
            }
            if values[diag[i]] == ZERO {
                return None;
            }
        }
        Some(Self { row_ptr, col_idx, values, diag })
    }

    /// Applies `(LU)⁻¹` in place.
    pub fn apply(&self, x: &mut [Complex64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut s = x[i];
            for p in self.row_ptr[i]..self.diag[i] {
                s -= self.values[p] * x[self.col_idx[p]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.values[p] * x[self.col_idx[p]];
            }
            x[i] = s / self.values[self.diag[i]];
        }
    }
}

fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Restarted GMRES with ILU(0) right preconditioning. The iteration cap is
/// `10·√n` Krylov steps in total.
pub fn solve_iterative(a: &SparseComplexMatrix, b: &[Complex64], tol: f64) -> Result<(Vec<Complex64>, SolveReport), SolveError> {
    check_inputs(a, b, tol)?;
    let start = Instant::now();
    let n = a.dim();
    let cap = ((10.0 * (n as f64).sqrt()).ceil() as usize).max(1);
    let report = |residual: f64, iterations: usize| SolveReport {
        kind: SolverKind::Iterative,
        relative_residual: residual,
        iterations,
        wall_time: start.elapsed(),
    };
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![ZERO; n], report(0.0, 0)));
    }
    let Some(ilu) = Ilu0::new(a) else {
        return Err(SolveError::SingularSystem(report(f64::INFINITY, 0)));
    };

    let mut x = vec![ZERO; n];
    let mut iterations = 0;
    loop {
        let ax = a.matvec(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm2(&r);
        if beta / bnorm <= tol || iterations >= cap {
            break;
        }
        let m = RESTART.min(cap - iterations);
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut used = 0;
        for j in 0..m {
            let mut z = basis[j].clone();
            ilu.apply(&mut z);
            let mut w = a.matvec(&z);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let wn = norm2(&w);
            h[j + 1][j] = Complex64::new(wn, 0.0);
            for i in 0..j {
                let (x0, x1) = (h[i][j], h[i + 1][j]);
                h[i][j] = x0 * cs[i] + sn[i] * x1;
                h[i + 1][j] = -sn[i].conj() * x0 + x1 * cs[i];
            }
            let (p, q) = (h[j][j], h[j + 1][j]);
            let rr = (p.norm_sqr() + q.norm_sqr()).sqrt();
            if p.norm() == 0.0 {
                cs[j] = 0.0;
                sn[j] = Complex64::new(1.0, 0.0);
            } else {
                cs[j] = p.norm() / rr;
                sn[j] = p / p.norm() * q.conj() / rr;
            }
            h[j][j] = cs[j] * p + sn[j] * q;
            h[j + 1][j] = ZERO;
            g[j + 1] = -sn[j].conj() * g[j];
            g[j] *= cs[j];
            used = j + 1;
            iterations += 1;
            if g[j + 1].norm() / bnorm <= tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // Back substitution for the Krylov coefficients.
        let mut y = vec![ZERO; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for l in i + 1..used {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![ZERO; n];
        for (v, &yi) in basis.iter().zip(&y) {
            for (u, vk) in update.iter_mut().zip(v) {
                *u += yi * vk;
            }
        }
        ilu.apply(&mut update);
        for (xi, ui) in x.iter_mut().zip(&update) {
            *xi += ui;
        }
    }
    let residual = a.relative_residual(&x, b);
    if !residual.is_finite() {
        return Err(SolveError::SingularSystem(report(residual, iterations)));
    }
    if residual > tol {
        return Err(SolveError::NoConvergence(report(residual, iterations)));
    }
    Ok((x, report(residual, iterations)))
}
