//! Coupled algebraic multigrid and AMLI (K-cycle) for the monolithic FSI
//! system.
//!
//! The block prolongation is the field-diagonal composition of the
//! sub-problem prolongations; coarse operators come from the Galerkin triple
//! product applied blockwise, which keeps the two structural zero blocks
//! empty on every level. Smoothing is the damped block Gauss-Seidel
//! iteration whose block inverses are one sub-problem AMG cycle each, and
//! the coarsest coupled system is factorized directly.
//!
//! A full cycle with fixed shape is linear in the right-hand side (usable
//! inside standard GMRES); the AMLI variant replaces the recursive coarse
//! correction by a few FGMRES iterations preconditioned by itself, which is
//! iteration-varying and belongs under flexible GMRES.

use crate::assembly::BlockMat;
use crate::dense::DenseLu;
use crate::error::Error;
use crate::krylov::{fgmres_fixed_steps, norm2, Csr, LinOp};
use crate::scalar::Real;
use crate::subamg::SubHierarchy;

#[derive(Debug, Clone)]
pub struct SmootherConfig {
    /// Common damping factor of the three block updates.
    pub omega: f64,
    pub m_pre: usize,
    pub m_post: usize,
    /// Cycle index; 2 is the W-cycle used throughout.
    pub nu: usize,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig {
            omega: 0.3,
            m_pre: 8,
            m_post: 8,
            nu: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoupledLevel<T> {
    pub k: BlockMat<T>,
    /// Per-field prolongations from the next-coarser level (none on the
    /// coarsest).
    pub p_m: Option<Csr<T>>,
    pub p_f: Option<Csr<T>>,
    pub p_s: Option<Csr<T>>,
}

impl<T: Real> CoupledLevel<T> {
    fn split<'x>(&self, x: &'x [T]) -> (&'x [T], &'x [T], &'x [T]) {
        let (nm, nf) = (self.k.m_size(), self.k.f_size());
        let (m, rest) = x.split_at(nm);
        let (f, s) = rest.split_at(nf);
        (m, f, s)
    }
}

#[derive(Debug, Clone)]
pub struct MgHierarchy<T> {
    pub levels: Vec<CoupledLevel<T>>,
    pub sub_m: SubHierarchy<T>,
    pub sub_f: SubHierarchy<T>,
    pub sub_s: SubHierarchy<T>,
    coarsest: DenseLu<T>,
    pub cfg: SmootherConfig,
}

/// Builds the coupled hierarchy from the fine operator and the three
/// sub-problem hierarchies (their prolongations are reused; exhausted fields
/// are padded by identity). Coarsening stops once the total size drops to
/// `coarse_limit`, where a direct factorization takes over.
pub fn build_hierarchy<T: Real>(
    k1: &BlockMat<T>,
    sub_m: SubHierarchy<T>,
    sub_f: SubHierarchy<T>,
    sub_s: SubHierarchy<T>,
    cfg: SmootherConfig,
    coarse_limit: usize,
) -> Result<MgHierarchy<T>, Error> {
    let mut levels: Vec<CoupledLevel<T>> = Vec::new();
    let mut k = k1.clone();
    let mut l = 0usize;
    loop {
        if k.dim() <= coarse_limit {
            levels.push(CoupledLevel {
                k,
                p_m: None,
                p_f: None,
                p_s: None,
            });
            break;
        }
        let pick = |sub: &SubHierarchy<T>, n: usize| -> Option<Csr<T>> {
            sub.levels
                .get(l)
                .and_then(|lv| lv.p.clone())
                .or_else(|| Some(Csr::identity(n)))
                .filter(|p| p.n_rows() == n)
        };
        let p_m = pick(&sub_m, k.m_size()).unwrap_or_else(|| Csr::identity(k.m_size()));
        let p_f = pick(&sub_f, k.f_size()).unwrap_or_else(|| Csr::identity(k.f_size()));
        let p_s = pick(&sub_s, k.s_size()).unwrap_or_else(|| Csr::identity(k.s_size()));
        let coarse_total = p_m.n_cols() + p_f.n_cols() + p_s.n_cols();
        let progress = (coarse_total as f64) <= 0.9 * k.dim() as f64;
        if !progress {
            levels.push(CoupledLevel {
                k,
                p_m: None,
                p_f: None,
                p_s: None,
            });
            break;
        }
        let r_m = p_m.transpose();
        let r_f = p_f.transpose();
        let r_s = p_s.transpose();
        let galerkin = |r: &Csr<T>, a: &Csr<T>, p: &Csr<T>| r.matmul(&a.matmul(p));
        let coarse = BlockMat {
            a_m: galerkin(&r_m, &k.a_m, &p_m),
            a_ms: galerkin(&r_m, &k.a_ms, &p_s),
            a_fm: galerkin(&r_f, &k.a_fm, &p_m),
            a_f: galerkin(&r_f, &k.a_f, &p_f),
            a_fs: galerkin(&r_f, &k.a_fs, &p_s),
            a_sf: galerkin(&r_s, &k.a_sf, &p_f),
            a_s: galerkin(&r_s, &k.a_s, &p_s),
        };
        levels.push(CoupledLevel {
            k,
            p_m: Some(p_m),
            p_f: Some(p_f),
            p_s: Some(p_s),
        });
        k = coarse;
        l += 1;
    }
    let coarsest_mat = levels.last().unwrap().k.to_csr();
    let coarsest = crate::krylov::factorize(&coarsest_mat)
        .map_err(|_| Error::CoarseSingular { level: levels.len() })?;
    Ok(MgHierarchy {
        levels,
        sub_m,
        sub_f,
        sub_s,
        coarsest,
        cfg,
    })
}

impl<T: Real> MgHierarchy<T> {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_dims(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.k.dim()).collect()
    }

    /// One damped block Gauss-Seidel step at the given level: mesh, fluid,
    /// structure updates in sequence, each preconditioned by one sub-AMG
    /// cycle at that level.
    pub fn block_gs_step(&self, level: usize, x: &mut [T], b: &[T]) {
        let lv = &self.levels[level];
        let k = &lv.k;
        let (nm, nf) = (k.m_size(), k.f_size());
        let omega = T::of(self.cfg.omega);
        let (b_m, b_f, b_s) = lv.split(b);

        // mesh update: r_m - A_m x_m - A_ms x_s
        let mut r = b_m.to_vec();
        k.a_m.matvec_acc(-T::one(), &x[0..nm], &mut r);
        k.a_ms.matvec_acc(-T::one(), &x[nm + nf..], &mut r);
        let z = self.sub_m.precondition_at(level, &r);
        for (xi, zi) in x[0..nm].iter_mut().zip(z.iter()) {
            *xi += omega * *zi;
        }

        // fluid update with the fresh mesh iterate
        let mut r = b_f.to_vec();
        k.a_fm.matvec_acc(-T::one(), &x[0..nm], &mut r);
        k.a_f.matvec_acc(-T::one(), &x[nm..nm + nf], &mut r);
        k.a_fs.matvec_acc(-T::one(), &x[nm + nf..], &mut r);
        let z = self.sub_f.precondition_at(level, &r);
        for (xi, zi) in x[nm..nm + nf].iter_mut().zip(z.iter()) {
            *xi += omega * *zi;
        }

        // structure update with the fresh fluid iterate
        let mut r = b_s.to_vec();
        k.a_sf.matvec_acc(-T::one(), &x[nm..nm + nf], &mut r);
        k.a_s.matvec_acc(-T::one(), &x[nm + nf..], &mut r);
        let z = self.sub_s.precondition_at(level, &r);
        for (xi, zi) in x[nm + nf..].iter_mut().zip(z.iter()) {
            *xi += omega * *zi;
        }
    }

    pub fn smooth(&self, level: usize, x: &mut [T], b: &[T], steps: usize) {
        for _ in 0..steps {
            self.block_gs_step(level, x, b);
        }
    }

    fn restrict(&self, level: usize, r: &[T]) -> Vec<T> {
        let lv = &self.levels[level];
        let (r_mv, r_fv, r_sv) = lv.split(r);
        let pm = lv.p_m.as_ref().unwrap();
        let pf = lv.p_f.as_ref().unwrap();
        let ps = lv.p_s.as_ref().unwrap();
        let mut out = Vec::with_capacity(pm.n_cols() + pf.n_cols() + ps.n_cols());
        // R = P^T applied per field
        let apply_rt = |p: &Csr<T>, v: &[T], out: &mut Vec<T>| {
            let pt = p.transpose();
            let mut y = vec![T::zero(); pt.n_rows()];
            pt.matvec(v, &mut y);
            out.extend_from_slice(&y);
        };
        apply_rt(pm, r_mv, &mut out);
        apply_rt(pf, r_fv, &mut out);
        apply_rt(ps, r_sv, &mut out);
        out
    }

    fn prolong_add(&self, level: usize, xc: &[T], x: &mut [T]) {
        let lv = &self.levels[level];
        let pm = lv.p_m.as_ref().unwrap();
        let pf = lv.p_f.as_ref().unwrap();
        let ps = lv.p_s.as_ref().unwrap();
        let (nm, nf) = (lv.k.m_size(), lv.k.f_size());
        let (cm, cf) = (pm.n_cols(), pf.n_cols());
        let mut tmp = vec![T::zero(); nm];
        pm.matvec(&xc[0..cm], &mut tmp);
        for (xi, t) in x[0..nm].iter_mut().zip(tmp.iter()) {
            *xi += *t;
        }
        let mut tmp = vec![T::zero(); nf];
        pf.matvec(&xc[cm..cm + cf], &mut tmp);
        for (xi, t) in x[nm..nm + nf].iter_mut().zip(tmp.iter()) {
            *xi += *t;
        }
        let mut tmp = vec![T::zero(); lv.k.s_size()];
        ps.matvec(&xc[cm + cf..], &mut tmp);
        for (xi, t) in x[nm + nf..].iter_mut().zip(tmp.iter()) {
            *xi += *t;
        }
    }

    fn residual(&self, level: usize, x: &[T], b: &[T]) -> Vec<T> {
        let k = &self.levels[level].k;
        let mut r = vec![T::zero(); k.dim()];
        k.matvec(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b.iter()) {
            *ri = *bi - *ri;
        }
        r
    }

    /// One coupled AMG cycle at `level` improving `x`; the recursion visits
    /// each coarser level `nu` times (W-cycle for `nu = 2`).
    pub fn amg_cycle(&self, level: usize, x: &mut [T], b: &[T]) {
        self.amg_cycle_traced(level, x, b, &mut None);
    }

    pub fn amg_cycle_traced(
        &self,
        level: usize,
        x: &mut [T],
        b: &[T],
        trace: &mut Option<&mut Vec<usize>>,
    ) {
        if let Some(t) = trace.as_deref_mut() {
            t.push(level);
        }
        let last = self.levels.len() - 1;
        if level == last {
            let y = self.coarsest.solve_vec(b);
            x.copy_from_slice(&y);
            return;
        }
        self.smooth(level, x, b, self.cfg.m_pre);
        let r = self.residual(level, x, b);
        let bc = self.restrict(level, &r);
        let mut xc = vec![T::zero(); bc.len()];
        if level + 1 == last {
            if let Some(t) = trace.as_deref_mut() {
                t.push(level + 1);
            }
            let y = self.coarsest.solve_vec(&bc);
            xc.copy_from_slice(&y);
        } else {
            for _ in 0..self.cfg.nu {
                self.amg_cycle_traced(level + 1, &mut xc, &bc, trace);
            }
        }
        self.prolong_add(level, &xc, x);
        self.smooth(level, x, b, self.cfg.m_post);
    }

    /// One AMLI cycle: identical to the AMG cycle except that the coarse
    /// correction runs `nu` FGMRES iterations on the coarse system,
    /// preconditioned by this cycle recursively.
    pub fn amli_cycle(&self, level: usize, x: &mut [T], b: &[T]) {
        let last = self.levels.len() - 1;
        if level == last {
            let y = self.coarsest.solve_vec(b);
            x.copy_from_slice(&y);
            return;
        }
        self.smooth(level, x, b, self.cfg.m_pre);
        let r = self.residual(level, x, b);
        let bc = self.restrict(level, &r);
        let mut xc = vec![T::zero(); bc.len()];
        if level + 1 == last {
            let y = self.coarsest.solve_vec(&bc);
            xc.copy_from_slice(&y);
        } else {
            let op = &self.levels[level + 1].k;
            xc = fgmres_fixed_steps(
                op,
                &bc,
                |rr: &[T], zz: &mut [T]| {
                    let mut z = vec![T::zero(); rr.len()];
                    self.amli_cycle(level + 1, &mut z, rr);
                    zz.copy_from_slice(&z);
                },
                self.cfg.nu,
            );
        }
        self.prolong_add(level, &xc, x);
        self.smooth(level, x, b, self.cfg.m_post);
    }

    /// Stationary iteration of the given cycle to a relative residual.
    pub fn solve(
        &self,
        b: &[T],
        tol: f64,
        max_iter: usize,
        amli: bool,
    ) -> (Vec<T>, usize, bool, Vec<f64>) {
        let k = &self.levels[0].k;
        let n = k.dim();
        let mut x = vec![T::zero(); n];
        let b_norm = norm2(b);
        let mut history = vec![1.0];
        if b_norm == T::zero() {
            return (x, 0, true, history);
        }
        for it in 1..=max_iter {
            if amli {
                self.amli_cycle(0, &mut x, b);
            } else {
                self.amg_cycle(0, &mut x, b);
            }
            let r = self.residual(0, &x, b);
            let rel = (norm2(&r) / b_norm).as_f64();
            history.push(rel);
            if rel <= tol {
                return (x, it, true, history);
            }
        }
        (x, max_iter, false, history)
    }

    /// Records the level-visit order of one cycle (W-shape verification).
    pub fn cycle_trace(&self) -> Vec<usize> {
        let n = self.levels[0].k.dim();
        let b = vec![T::one(); n];
        let mut x = vec![T::zero(); n];
        let mut trace = Vec::new();
        {
            let mut opt = Some(&mut trace);
            self.amg_cycle_traced(0, &mut x, &b, &mut opt);
        }
        trace
    }
}

/// Fixed linear operator wrapper: one AMG cycle from a zero initial guess.
pub struct AmgPrecond<'a, T>(pub &'a MgHierarchy<T>);

impl<'a, T: Real> LinOp<T> for AmgPrecond<'a, T> {
    fn dim(&self) -> usize {
        self.0.levels[0].k.dim()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        for v in y.iter_mut() {
            *v = T::zero();
        }
        self.0.amg_cycle(0, y, x);
    }
}

/// One AMLI cycle from zero; iteration-varying, so only admissible under
/// flexible GMRES (the paper still reports plain-GMRES counts with it, which
/// work in practice because the cycle is close to linear).
pub struct AmliPrecond<'a, T>(pub &'a MgHierarchy<T>);

impl<'a, T: Real> LinOp<T> for AmliPrecond<'a, T> {
    fn dim(&self) -> usize {
        self.0.levels[0].k.dim()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        for v in y.iter_mut() {
            *v = T::zero();
        }
        self.0.amli_cycle(0, y, x);
    }
}
