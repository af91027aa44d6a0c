//! Block preconditioners built from the LU factorization structure of the
//! coupled operator, with the sub-problem inverses approximated by one AMG
//! cycle each.
//!
//! All five kinds are fixed linear operators for a frozen Jacobian, so they
//! are admissible right preconditioners for standard GMRES. The sub-solver
//! call counts per application are instrumented; the lower/upper kinds use
//! exactly one inverse per field, SSOR two extra applications (mesh and
//! fluid), ILU(0) two extra mesh and one extra fluid application.

use crate::assembly::BlockMat;
use crate::dense::DenseLu;
use crate::krylov::LinOp;
use crate::scalar::Real;
use crate::subamg::SubHierarchy;
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecondKind {
    Diagonal,
    Lower,
    Upper,
    Ssor,
    Ilu0,
}

impl PrecondKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "diag" => PrecondKind::Diagonal,
            "lower" => PrecondKind::Lower,
            "upper" => PrecondKind::Upper,
            "ssor" => PrecondKind::Ssor,
            "ilu0" => PrecondKind::Ilu0,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PrecondKind::Diagonal => "diag",
            PrecondKind::Lower => "lower",
            PrecondKind::Upper => "upper",
            PrecondKind::Ssor => "ssor",
            PrecondKind::Ilu0 => "ilu0",
        }
    }
}

/// Approximate inverse of one sub-problem block.
pub trait SubSolve<T>: Sync {
    fn apply_inv(&self, r: &[T]) -> Vec<T>;
}

/// One multigrid cycle of the sub-problem hierarchy.
impl<T: Real> SubSolve<T> for SubHierarchy<T> {
    fn apply_inv(&self, r: &[T]) -> Vec<T> {
        self.precondition(r)
    }
}

/// Exact inverse through a dense factorization (oracle use).
pub struct ExactSub<T>(pub DenseLu<T>);

impl<T: Real> SubSolve<T> for ExactSub<T> {
    fn apply_inv(&self, r: &[T]) -> Vec<T> {
        self.0.solve_vec(r)
    }
}

pub struct BlockPreconditioner<'a, T> {
    pub kind: PrecondKind,
    k: &'a BlockMat<T>,
    sub_m: &'a dyn SubSolve<T>,
    sub_f: &'a dyn SubSolve<T>,
    sub_s: &'a dyn SubSolve<T>,
    calls: [AtomicU64; 3],
}

impl<'a, T: Real> BlockPreconditioner<'a, T> {
    pub fn new(
        kind: PrecondKind,
        k: &'a BlockMat<T>,
        sub_m: &'a dyn SubSolve<T>,
        sub_f: &'a dyn SubSolve<T>,
        sub_s: &'a dyn SubSolve<T>,
    ) -> Self {
        BlockPreconditioner {
            kind,
            k,
            sub_m,
            sub_f,
            sub_s,
            calls: [AtomicU64::new(0), AtomicU64::new(0), AtomicU64::new(0)],
        }
    }

    /// (mesh, fluid, structure) sub-solver applications so far.
    pub fn call_counts(&self) -> (u64, u64, u64) {
        (
            self.calls[0].load(Ordering::Relaxed),
            self.calls[1].load(Ordering::Relaxed),
            self.calls[2].load(Ordering::Relaxed),
        )
    }

    pub fn reset_counts(&self) {
        for c in &self.calls {
            c.store(0, Ordering::Relaxed);
        }
    }

    fn inv_m(&self, r: &[T]) -> Vec<T> {
        self.calls[0].fetch_add(1, Ordering::Relaxed);
        self.sub_m.apply_inv(r)
    }

    fn inv_f(&self, r: &[T]) -> Vec<T> {
        self.calls[1].fetch_add(1, Ordering::Relaxed);
        self.sub_f.apply_inv(r)
    }

    fn inv_s(&self, r: &[T]) -> Vec<T> {
        self.calls[2].fetch_add(1, Ordering::Relaxed);
        self.sub_s.apply_inv(r)
    }

    /// z = P~^-1 r with the closed-form inverse of the selected kind.
    pub fn apply_to(&self, r: &[T]) -> Vec<T> {
        let (nm, nf) = (self.k.m_size(), self.k.f_size());
        let ns = self.k.s_size();
        let (r_m, rest) = r.split_at(nm);
        let (r_f, r_s) = rest.split_at(nf);
        let k = self.k;
        let sub = |y: &[T], mat: &crate::krylov::Csr<T>, x: &[T]| -> Vec<T> {
            // y - mat * x
            let mut out = y.to_vec();
            mat.matvec_acc(-T::one(), x, &mut out);
            out
        };
        let (z_m, z_f, z_s) = match self.kind {
            PrecondKind::Diagonal => (self.inv_m(r_m), self.inv_f(r_f), self.inv_s(r_s)),
            PrecondKind::Lower => {
                let z_m = self.inv_m(r_m);
                let z_f = self.inv_f(&sub(r_f, &k.a_fm, &z_m));
                let z_s = self.inv_s(&sub(r_s, &k.a_sf, &z_f));
                (z_m, z_f, z_s)
            }
            PrecondKind::Upper => {
                let z_s = self.inv_s(r_s);
                let z_f = self.inv_f(&sub(r_f, &k.a_fs, &z_s));
                let z_m = self.inv_m(&sub(r_m, &k.a_ms, &z_s));
                (z_m, z_f, z_s)
            }
            PrecondKind::Ssor => {
                // forward substitution, then the unit upper factor
                let y_m = self.inv_m(r_m);
                let y_f = self.inv_f(&sub(r_f, &k.a_fm, &y_m));
                let y_s = self.inv_s(&sub(r_s, &k.a_sf, &y_f));
                let mut ams_ys = vec![T::zero(); nm];
                k.a_ms.matvec(&y_s, &mut ams_ys);
                let corr_m = self.inv_m(&ams_ys);
                let mut afs_ys = vec![T::zero(); nf];
                k.a_fs.matvec(&y_s, &mut afs_ys);
                let corr_f = self.inv_f(&afs_ys);
                let z_m = y_m.iter().zip(corr_m.iter()).map(|(a, b)| *a - *b).collect();
                let z_f = y_f.iter().zip(corr_f.iter()).map(|(a, b)| *a - *b).collect();
                (z_m, z_f, y_s)
            }
            PrecondKind::Ilu0 => {
                // unit lower factor
                let t_m = self.inv_m(r_m);
                let y_f = sub(r_f, &k.a_fm, &t_m);
                let t_f = self.inv_f(&y_f);
                let y_s = sub(r_s, &k.a_sf, &t_f);
                // upper factor with the Schur-corrected (f,s) entry
                let z_s = self.inv_s(&y_s);
                let mut ams_zs = vec![T::zero(); nm];
                k.a_ms.matvec(&z_s, &mut ams_zs);
                let t_ms = self.inv_m(&ams_zs);
                let mut rhs_f = y_f.clone();
                k.a_fs.matvec_acc(-T::one(), &z_s, &mut rhs_f);
                k.a_fm.matvec_acc(T::one(), &t_ms, &mut rhs_f);
                let z_f = self.inv_f(&rhs_f);
                let z_m = {
                    let rhs = sub(r_m, &k.a_ms, &z_s);
                    self.inv_m(&rhs)
                };
                (z_m, z_f, z_s)
            }
        };
        let mut z = Vec::with_capacity(nm + nf + ns);
        z.extend_from_slice(&z_m);
        z.extend_from_slice(&z_f);
        z.extend_from_slice(&z_s);
        z
    }
}

impl<'a, T: Real> LinOp<T> for BlockPreconditioner<'a, T> {
    fn dim(&self) -> usize {
        self.k.dim()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        let z = self.apply_to(x);
        y.copy_from_slice(&z);
    }
}
