//! Dense matrices with LU factorization, used for coarsest-level solves,
//! Vanka patch solves and as test oracles.

use crate::error::Error;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat<T> {
    pub n_rows: usize,
    pub n_cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMat<T> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMat {
            n_rows,
            n_cols,
            data: vec![T::zero(); n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n_rows = rows.len();
        let n_cols = if n_rows > 0 { rows[0].len() } else { 0 };
        let mut m = Self::zeros(n_rows, n_cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n_cols);
            for (j, &v) in r.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let row = &self.data[i * self.n_cols..(i + 1) * self.n_cols];
            let mut s = T::zero();
            for (a, b) in row.iter().zip(x.iter()) {
                s += *a * *b;
            }
            y[i] = s;
        }
    }

    pub fn matmul(&self, other: &DenseMat<T>) -> DenseMat<T> {
        assert_eq!(self.n_cols, other.n_rows);
        let mut c = DenseMat::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                for j in 0..other.n_cols {
                    c[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        c
    }

    pub fn transpose(&self) -> DenseMat<T> {
        let mut c = DenseMat::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                c[(j, i)] = self[(i, j)];
            }
        }
        c
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<DenseLu<T>, Error> {
        assert_eq!(self.n_rows, self.n_cols, "LU needs a square matrix");
        let n = self.n_rows;
        let mut lu = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut max_pivot = T::zero();
        for k in 0..n {
            // pivot search
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in (k + 1)..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            if pivot.abs() > max_pivot {
                max_pivot = pivot.abs();
            }
            if pivot == T::zero() {
                return Err(Error::SingularMatrix {
                    row: k,
                    pivot: 0.0,
                });
            }
            for i in (k + 1)..n {
                let m = lu[i * n + k] / pivot;
                lu[i * n + k] = m;
                if m != T::zero() {
                    for j in (k + 1)..n {
                        let v = lu[k * n + j];
                        lu[i * n + j] -= m * v;
                    }
                }
            }
        }
        let mut min_pivot = T::infinity();
        for k in 0..n {
            let v = lu[k * n + k].abs();
            if v < min_pivot {
                min_pivot = v;
            }
        }
        Ok(DenseLu {
            n,
            lu,
            perm,
            min_pivot: min_pivot.as_f64(),
            max_pivot: max_pivot.as_f64(),
        })
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for DenseMat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n_cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for DenseMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n_cols + j]
    }
}

/// Factored form of a square matrix; solves are forward/backward sweeps.
#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    pub min_pivot: f64,
    pub max_pivot: f64,
}

impl<T: Real> DenseLu<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ratio of smallest to largest pivot; a crude singularity indicator.
    pub fn pivot_ratio(&self) -> f64 {
        if self.max_pivot == 0.0 {
            0.0
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    pub fn solve(&self, b: &[T], x: &mut [T]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        assert_eq!(x.len(), n);
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        // forward: L y = Pb
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        // backward: U x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        self.solve(b, &mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    #[test]
    fn lu_solves_random_system() {
        let mut rng = SplitMix64::new(7);
        let n = 20;
        let mut a = DenseMat::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.uniform(-1.0, 1.0);
            }
            a[(i, i)] += 5.0;
        }
        let xref: Vec<f64> = (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let mut b = vec![0.0; n];
        a.matvec(&xref, &mut b);
        let lu = a.lu().unwrap();
        let x = lu.solve_vec(&b);
        for i in 0..n {
            assert!((x[i] - xref[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn singular_matrix_detected() {
        let mut a = DenseMat::<f64>::zeros(2, 2);
        a[(0, 0)] = 1.0;
        a[(0, 1)] = 2.0;
        a[(1, 0)] = 2.0;
        a[(1, 1)] = 4.0;
        assert!(a.lu().is_err() || a.lu().unwrap().pivot_ratio() < 1e-14);
    }
}
