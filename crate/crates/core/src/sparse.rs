//! Compressed-row sparse matrices and an envelope (profile) Cholesky
//! factorization for the symmetric positive-definite systems produced by
//! P1 assembly on structured meshes.

use crate::error::{Error, Result};

/// Relative pivot threshold below which a factorization is declared singular.
pub const PIVOT_TOL: f64 = 1e-14;

/// Square sparse matrix in compressed row layout with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given per-row column sets. Columns are sorted and
    /// deduplicated.
    pub fn from_pattern(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::from_pattern((0..n).map(|i| vec![i]).collect());
        m.values.iter_mut().for_each(|v| *v = 1.0);
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Offset of entry (i, j) in the value array, if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Visits every stored entry as `(row, col, &mut value)`.
    pub fn for_each_entry_mut<F: FnMut(usize, usize, &mut f64)>(&mut self, mut f: F) {
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                f(i, self.col_idx[k], &mut self.values[k]);
            }
        }
    }

    pub fn clear_values(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    /// Largest |A_ij - A_ji| over the pattern.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// x^T A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                x[i] * cols.iter().zip(vals).map(|(&j, &a)| a * y[j]).sum::<f64>()
            })
            .sum()
    }

    /// Cholesky factorization of a symmetric positive-definite matrix, stored
    /// over the row envelope of the lower triangle.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.n;
        let first: Vec<usize> = (0..n)
            .map(|i| {
                let (cols, _) = self.row(i);
                cols.first().copied().unwrap_or(i).min(i)
            })
            .collect();
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut l = vec![0.0; start[n]];
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                if j <= i {
                    l[start[i] + j - first[i]] = a;
                }
            }
        }
        let max_diag = (0..n).map(|i| self.get(i, i).abs()).fold(0.0, f64::max);
        let threshold = PIVOT_TOL * max_diag;

        for i in 0..n {
            let fi = first[i];
            let row_i = start[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_j = start[j];
                let mut s = l[row_i + j - fi];
                for k in k0..j {
                    s -= l[row_i + k - fi] * l[row_j + k - fj];
                }
                l[row_i + j - fi] = s / l[row_j + j - fj];
            }
            let mut d = l[row_i + i - fi];
            for k in fi..i {
                let v = l[row_i + k - fi];
                d -= v * v;
            }
            if !(d > threshold) {
                return Err(Error::SingularSystem {
                    row: i,
                    pivot: d,
                    max_diag,
                });
            }
            l[row_i + i - fi] = d.sqrt();
        }
        Ok(Cholesky { n, first, start, l })
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        // L y = b
        for i in 0..n {
            let (fi, row) = (self.first[i], self.start[i]);
            let mut s = x[i];
            for k in fi..i {
                s -= self.l[row + k - fi] * x[k];
            }
            x[i] = s / self.l[row + i - fi];
        }
        // L^T x = y, column sweep over rows of L
        for i in (0..n).rev() {
            let (fi, row) = (self.first[i], self.start[i]);
            x[i] /= self.l[row + i - fi];
            let xi = x[i];
            for k in fi..i {
                x[k] -= self.l[row + k - fi] * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, d: f64, off: f64) -> CsrMatrix {
        let rows = (0..n)
            .map(|i| (i.saturating_sub(1)..(i + 2).min(n)).collect())
            .collect();
        let mut m = CsrMatrix::from_pattern(rows);
        for i in 0..n {
            for j in i.saturating_sub(1)..(i + 2).min(n) {
                let p = m.position(i, j).unwrap();
                m.values_mut()[p] = if i == j { d } else { off };
            }
        }
        m
    }

    #[test]
    fn identity_returns_rhs() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.5, 0.0, 7.0];
        assert_eq!(a.cholesky().unwrap().solve(&b), b);
    }

    #[test]
    fn tridiagonal_residual() {
        let a = tridiag(50, 2.0, -1.0);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let x = a.cholesky().unwrap().solve(&b);
        let r = a.mul_vec(&x);
        let err = r.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn singular_detected() {
        let a = tridiag(4, 1.0, -1.0);
        // rows sum to zero in the interior; last pivot collapses
        let mut a = a;
        let p = a.position(0, 0).unwrap();
        a.values_mut()[p] = 1.0;
        let p = a.position(3, 3).unwrap();
        a.values_mut()[p] = 1.0;
        assert!(matches!(a.cholesky(), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn indefinite_detected() {
        let a = tridiag(3, -2.0, 1.0);
        assert!(matches!(a.cholesky(), Err(Error::SingularSystem { row: 0, .. })));
    }

    #[test]
    fn dense_oracle_on_envelope() {
        // arrowhead-free banded SPD matrix with a gap in the envelope
        let n = 7;
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut r = vec![i];
                if i >= 3 {
                    r.push(i - 3);
                }
                if i + 3 < n {
                    r.push(i + 3);
                }
                r
            })
            .collect();
        let mut a = CsrMatrix::from_pattern(rows);
        for i in 0..n {
            let p = a.position(i, i).unwrap();
            a.values_mut()[p] = 4.0 + i as f64;
            if i >= 3 {
                let p = a.position(i, i - 3).unwrap();
                a.values_mut()[p] = -1.0;
                let p = a.position(i - 3, i).unwrap();
                a.values_mut()[p] = -1.0;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let x = a.cholesky().unwrap().solve(&b);
        let dense = crate::testutil::dense_solve(
            (0..n).map(|i| (0..n).map(|j| a.get(i, j)).collect()).collect(),
            b.clone(),
        );
        for (u, v) in x.iter().zip(&dense) {
            assert!((u - v).abs() < 1e-13);
        }
    }
}
