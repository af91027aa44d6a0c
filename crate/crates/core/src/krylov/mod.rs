//! Sparse matrix kernels and Krylov subspace solvers.

mod gmres;
mod sparse;

pub use gmres::{fgmres, fgmres_fixed_steps, gmres, KrylovConfig, SolveReport};
pub use sparse::{Csr, CsrBuilder};

use crate::dense::DenseLu;
use crate::error::Error;
use crate::scalar::Real;

/// A fixed linear operator `y = A x`.
///
/// Standard GMRES requires both the system matrix and the (right)
/// preconditioner to be fixed operators; iteration-varying preconditioners
/// go through [`fgmres`] instead.
pub trait LinOp<T> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

impl<T: Real> LinOp<T> for Csr<T> {
    fn dim(&self) -> usize {
        self.n_rows()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        self.matvec(x, y);
    }
}

/// Identity operator, handy as a "no preconditioner" placeholder.
pub struct IdentityOp(pub usize);

impl<T: Real> LinOp<T> for IdentityOp {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(x);
    }
}

/// Direct solve of a square sparse system via an LU factorization with
/// partial pivoting; intended for coarsest-level systems and oracles.
pub fn direct_solve<T: Real>(a: &Csr<T>, b: &[T]) -> Result<Vec<T>, Error> {
    let lu = factorize(a)?;
    Ok(lu.solve_vec(b))
}

/// Factorizes the (densified) matrix once for repeated coarsest-level solves.
pub fn factorize<T: Real>(a: &Csr<T>) -> Result<DenseLu<T>, Error> {
    assert_eq!(a.n_rows(), a.n_cols(), "direct solve needs a square matrix");
    let dense = a.to_dense();
    let lu = dense.lu()?;
    if lu.pivot_ratio() < 1e-14 {
        return Err(Error::SingularMatrix {
            row: 0,
            pivot: lu.min_pivot,
        });
    }
    Ok(lu)
}

pub fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

pub fn axpy<T: Real>(y: &mut [T], alpha: T, x: &[T]) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * *xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    fn random_spd(n: usize, seed: u64) -> Csr<f64> {
        let mut rng = SplitMix64::new(seed);
        let mut b = CsrBuilder::new(n, n);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let v = rng.uniform(-0.5, 0.5);
                dense[i][j] = v;
                dense[j][i] = v;
            }
            dense[i][i] += n as f64;
        }
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                b.add(i, j, v);
            }
        }
        b.build()
    }

    /// Plain conjugate gradients, used only as an oracle here.
    fn cg_oracle(a: &Csr<f64>, b: &[f64], tol: f64) -> Vec<f64> {
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let b_norm = norm2(b);
        for _ in 0..10 * n {
            let mut ap = vec![0.0; n];
            a.matvec(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            axpy(&mut x, alpha, &p);
            axpy(&mut r, -alpha, &ap);
            let rr_new = dot(&r, &r);
            if rr_new.sqrt() <= tol * b_norm {
                break;
            }
            let beta = rr_new / rr;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_new;
        }
        x
    }

    #[test]
    fn direct_solve_identity() {
        let id = Csr::<f64>::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 4.0];
        let x = direct_solve(&id, &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn direct_solve_matches_cg_oracle_on_random_spd() {
        let a = random_spd(100, 3);
        let mut rng = SplitMix64::new(5);
        let b: Vec<f64> = (0..100).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let x_direct = direct_solve(&a, &b).unwrap();
        let x_cg = cg_oracle(&a, &b, 1e-14);
        let diff: f64 = x_direct
            .iter()
            .zip(x_cg.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(diff / norm2(&x_direct) < 1e-10, "diff {diff:e}");
    }

    #[test]
    fn direct_solve_flags_singular() {
        let mut b = CsrBuilder::new(2, 2);
        b.add(0, 0, 1.0);
        b.add(0, 1, 2.0);
        b.add(1, 0, 2.0);
        b.add(1, 1, 4.0);
        let a = b.build();
        assert!(direct_solve(&a, &[1.0, 1.0]).is_err());
    }
}
