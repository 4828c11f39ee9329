//! Compressed sparse row storage for complex system matrices.

use std::fmt::Write as _;
use std::io::{self, Write};

use num_complex::Complex64;

/// Square complex CSR matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseComplexMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
    symmetric: bool,
}

/// Accumulates `(row, col, value)` contributions.
///
/// Duplicates are summed in insertion order, so assembling in a fixed
/// element order gives bit-reproducible matrices.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self { n, entries: Vec::with_capacity(cap) }
    }

    pub fn add(&mut self, row: usize, col: usize, value: Complex64) {
        assert!(row < self.n && col < self.n, "entry ({row}, {col}) outside {}x{}", self.n, self.n);
        self.entries.push((row, col, value));
    }

    /// Builds the matrix. The symmetry flag is set only if `A = Aᵀ` holds
    /// bitwise.
    pub fn build(mut self) -> SparseComplexMatrix {
        // Stable sort keeps insertion order among duplicates.
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len() / 2);
        let mut values: Vec<Complex64> = Vec::with_capacity(self.entries.len() / 2);
        let mut last = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
            } else {
                row_ptr[r + 1] += 1;
                col_idx.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut a = SparseComplexMatrix { n: self.n, row_ptr, col_idx, values, symmetric: false };
        a.symmetric = a.check_symmetric();
        a
    }
}

impl SparseComplexMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![Complex64::new(1.0, 0.0); n],
            symmetric: true,
        }
    }

    /// Dense row-major input, keeping only non-zero entries.
    pub fn from_dense(rows: &[Vec<Complex64>]) -> Self {
        let mut b = TripletBuilder::new(rows.len());
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), rows.len(), "matrix must be square");
            for (j, &v) in row.iter().enumerate() {
                if v != Complex64::new(0.0, 0.0) {
                    b.add(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Whether `A = Aᵀ` entrywise (complex symmetric, not Hermitian).
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[Complex64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(Complex64::new(0.0, 0.0), |p| vals[p])
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    fn check_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&j, &v)| {
                let (cj, vj) = self.row(j);
                cj.binary_search(&i).is_ok_and(|p| vj[p] == v)
            })
        })
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n, "vector length does not match matrix dimension");
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).fold(Complex64::new(0.0, 0.0), |s, (&j, &v)| s + v * x[j])
            })
            .collect()
    }

    /// `‖A x − b‖₂ / ‖b‖₂` (or `‖A x‖₂` when `b = 0`).
    pub fn relative_residual(&self, x: &[Complex64], b: &[Complex64]) -> f64 {
        let ax = self.matvec(x);
        let r = norm2(&ax.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>());
        let nb = norm2(b);
        if nb > 0.0 {
            r / nb
        } else {
            r
        }
    }

    /// Writes the matrix in Matrix Market coordinate format (complex general,
    /// 1-based indices).
    pub fn write_matrix_market(&self, out: &mut impl Write) -> io::Result<()> {
        let mut s = String::with_capacity(64 * self.nnz() + 128);
        s.push_str("%%MatrixMarket matrix coordinate complex general\n");
        let _ = writeln!(s, "{} {} {}", self.n, self.n, self.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, v) in cols.iter().zip(vals) {
                let _ = writeln!(s, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im);
            }
        }
        out.write_all(s.as_bytes())
    }
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
