//! Compressed sparse row matrices.

use crate::dense::DenseMat;
use crate::error::Error;
use crate::scalar::Real;
use std::io::{BufRead, Write};

/// CSR matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<T>,
}

/// Triplet accumulator; duplicate entries are summed on `build`.
#[derive(Debug, Clone)]
pub struct CsrBuilder<T> {
    n_rows: usize,
    n_cols: usize,
    triplets: Vec<(usize, usize, T)>,
}

impl<T: Real> CsrBuilder<T> {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        CsrBuilder {
            n_rows,
            n_cols,
            triplets: Vec::new(),
        }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize, cap: usize) -> Self {
        CsrBuilder {
            n_rows,
            n_cols,
            triplets: Vec::with_capacity(cap),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, val: T) {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        if val != T::zero() {
            self.triplets.push((row, col, val));
        }
    }

    /// Sums duplicates and drops entries that cancelled to exact zero, so
    /// the result is a canonical representation of the assembled matrix.
    pub fn build(mut self) -> Csr<T> {
        self.triplets
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, T)> = Vec::with_capacity(self.triplets.len());
        for &(r, c, v) in &self.triplets {
            match merged.last_mut() {
                Some((lr, lc, lv)) if *lr == r && *lc == c => *lv += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut col_idx = Vec::with_capacity(merged.len());
        let mut vals: Vec<T> = Vec::with_capacity(merged.len());
        for &(r, c, v) in &merged {
            if v != T::zero() {
                col_idx.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for i in 0..self.n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            vals,
        }
    }
}

impl<T: Real> Csr<T> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Csr {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Csr {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![T::one(); n],
        }
    }

    /// Identity scaled by a constant.
    pub fn scaled_identity(n: usize, s: T) -> Self {
        let mut m = Self::identity(n);
        for v in m.vals.iter_mut() {
            *v = s;
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.vals[lo..hi])
    }

    pub fn row_mut(&mut self, i: usize) -> (&[usize], &mut [T]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &mut self.vals[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            let mut s = T::zero();
            for k in lo..hi {
                s += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    /// y += alpha * A x.
    pub fn matvec_acc(&self, alpha: T, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            let mut s = T::zero();
            for k in lo..hi {
                s += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] += alpha * s;
        }
    }

    pub fn transpose(&self) -> Csr<T> {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let mut col_idx = vec![0usize; self.nnz()];
        let mut vals = vec![T::zero(); self.nnz()];
        let mut cursor = counts.clone();
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[k];
                let pos = cursor[c];
                col_idx[pos] = i;
                vals[pos] = self.vals[k];
                cursor[c] += 1;
            }
        }
        Csr {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr: counts,
            col_idx,
            vals,
        }
    }

    /// Sparse product A * B with a dense scatter workspace per row.
    pub fn matmul(&self, other: &Csr<T>) -> Csr<T> {
        assert_eq!(self.n_cols, other.n_rows);
        let n_cols = other.n_cols;
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        let mut acc = vec![T::zero(); n_cols];
        let mut marker = vec![usize::MAX; n_cols];
        let mut row_cols: Vec<usize> = Vec::new();
        for i in 0..self.n_rows {
            row_cols.clear();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.vals[k];
                let arow = self.col_idx[k];
                for kk in other.row_ptr[arow]..other.row_ptr[arow + 1] {
                    let c = other.col_idx[kk];
                    if marker[c] != i {
                        marker[c] = i;
                        acc[c] = T::zero();
                        row_cols.push(c);
                    }
                    acc[c] += a * other.vals[kk];
                }
            }
            row_cols.sort_unstable();
            for &c in &row_cols {
                col_idx.push(c);
                vals.push(acc[c]);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Csr {
            n_rows: self.n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn diag(&self) -> Vec<T> {
        let n = self.n_rows.min(self.n_cols);
        (0..n).map(|i| self.get(i, i)).collect()
    }

    pub fn scale(&mut self, s: T) {
        for v in self.vals.iter_mut() {
            *v *= s;
        }
    }

    pub fn to_dense(&self) -> DenseMat<T> {
        let mut m = DenseMat::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[k])] = self.vals[k];
            }
        }
        m
    }

    pub fn from_dense(m: &DenseMat<T>, drop_tol: T) -> Csr<T> {
        let mut b = CsrBuilder::new(m.n_rows, m.n_cols);
        for i in 0..m.n_rows {
            for j in 0..m.n_cols {
                if m[(i, j)].abs() > drop_tol {
                    b.add(i, j, m[(i, j)]);
                }
            }
        }
        b.build()
    }

    /// Extracts the sub-matrix with the given row and column ranges.
    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Csr<T> {
        let mut b = CsrBuilder::new(rows.len(), cols.len());
        for (ri, i) in rows.clone().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[k];
                if c >= cols.start && c < cols.end {
                    b.add(ri, c - cols.start, self.vals[k]);
                }
            }
        }
        b.build()
    }

    /// Writes the matrix in Matrix Market coordinate format.
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                writeln!(
                    w,
                    "{} {} {:.16e}",
                    i + 1,
                    self.col_idx[k] + 1,
                    self.vals[k].as_f64()
                )?;
            }
        }
        Ok(())
    }

    pub fn read_matrix_market<R: BufRead>(r: &mut R) -> Result<Csr<T>, Error> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MatrixMarket("empty file".into()))??;
        if !header.starts_with("%%MatrixMarket") {
            return Err(Error::MatrixMarket("missing banner".into()));
        }
        let mut size_line = None;
        for line in lines.by_ref() {
            let line = line?;
            if line.starts_with('%') || line.trim().is_empty() {
                continue;
            }
            size_line = Some(line);
            break;
        }
        let size_line = size_line.ok_or_else(|| Error::MatrixMarket("missing sizes".into()))?;
        let mut it = size_line.split_whitespace();
        let parse = |s: Option<&str>| -> Result<usize, Error> {
            s.ok_or_else(|| Error::MatrixMarket("short size line".into()))?
                .parse()
                .map_err(|e| Error::MatrixMarket(format!("bad size: {e}")))
        };
        let n_rows = parse(it.next())?;
        let n_cols = parse(it.next())?;
        let nnz = parse(it.next())?;
        let mut b = CsrBuilder::with_capacity(n_rows, n_cols, nnz);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let i: usize = parse(it.next())?;
            let j: usize = parse(it.next())?;
            let v: f64 = it
                .next()
                .ok_or_else(|| Error::MatrixMarket("missing value".into()))?
                .parse()
                .map_err(|e| Error::MatrixMarket(format!("bad value: {e}")))?;
            b.add(i - 1, j - 1, T::of(v));
        }
        Ok(b.build())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    fn random_csr(n: usize, m: usize, fill: f64, seed: u64) -> Csr<f64> {
        let mut rng = SplitMix64::new(seed);
        let mut b = CsrBuilder::new(n, m);
        for i in 0..n {
            for j in 0..m {
                if rng.next_f64() < fill {
                    b.add(i, j, rng.uniform(-1.0, 1.0));
                }
            }
        }
        b.build()
    }

    #[test]
    fn matvec_matches_triple_loop_oracle() {
        for seed in 0..5 {
            let a = random_csr(17, 23, 0.3, seed);
            let dense = a.to_dense();
            let mut rng = SplitMix64::new(seed + 100);
            let x: Vec<f64> = (0..23).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let mut y = vec![0.0; 17];
            a.matvec(&x, &mut y);
            // naive oracle
            for i in 0..17 {
                let mut s = 0.0;
                for j in 0..23 {
                    s += dense[(i, j)] * x[j];
                }
                assert!((y[i] - s).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let mut b = CsrBuilder::new(2, 3);
        b.add(0, 2, 1.0);
        b.add(0, 0, 2.0);
        b.add(0, 2, 3.0);
        b.add(1, 1, -1.0);
        let a = b.build();
        assert_eq!(a.get(0, 2), 4.0);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(1, 1), -1.0);
        let (cols, _) = a.row(0);
        assert!(cols.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn matmul_matches_dense_oracle() {
        let a = random_csr(9, 14, 0.4, 1);
        let b = random_csr(14, 7, 0.4, 2);
        let c = a.matmul(&b);
        let oracle = a.to_dense().matmul(&b.to_dense());
        for i in 0..9 {
            for j in 0..7 {
                assert!((c.get(i, j) - oracle[(i, j)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn transpose_roundtrip() {
        let a = random_csr(11, 6, 0.5, 9);
        let att = a.transpose().transpose();
        assert_eq!(a, att);
    }

    #[test]
    fn matrix_market_roundtrip() {
        let a = random_csr(8, 8, 0.35, 4);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let b = Csr::<f64>::read_matrix_market(&mut std::io::Cursor::new(buf)).unwrap();
        assert_eq!(a.n_rows(), b.n_rows());
        for i in 0..8 {
            for j in 0..8 {
                assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-15);
            }
        }
    }
}
