//! Algebraic multigrid for the three sub-problems.
//!
//! The mesh-motion Laplacian gets a scalar hierarchy: greedy pairwise
//! aggregation on the symmetrized strength graph, piecewise-constant
//! tentative prolongation smoothed by one Jacobi pass, Galerkin coarse
//! operators and Gauss-Seidel smoothing. The stabilized fluid and structure
//! blocks get saddle-point hierarchies: velocity/displacement nodes are
//! aggregated point-block (three components move together), pressure
//! unknowns are aggregated separately on the pressure sub-graph and their
//! prolongation is scaled so the coarse Galerkin stabilization scales like
//! the coarse mesh width. Coarse levels never mix the two families.
//!
//! One cycle with a fixed shape is a fixed linear operator (verified by the
//! linearity tests), which is what the block preconditioners and the coupled
//! smoother require; the Braess-Sarazin inner Schur solve therefore uses a
//! fixed number of damped Jacobi sweeps rather than a Krylov method.

use crate::dense::{DenseLu, DenseMat};
use crate::error::Error;
use crate::krylov::{Csr, CsrBuilder};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubKind {
    /// Scalar elliptic block (mesh motion).
    MeshMotion,
    /// Stabilized saddle block smoothed by Braess-Sarazin.
    Fluid,
    /// Stabilized saddle block smoothed by patch-wise Vanka sweeps.
    Structure,
}

#[derive(Debug, Clone)]
pub struct SubAmgOpts {
    /// Strength-of-connection threshold.
    pub theta: f64,
    /// Stop coarsening below this many unknowns.
    pub min_coarse: usize,
    pub max_levels: usize,
    /// Jacobi weight of the prolongation smoothing pass (scalar hierarchies).
    pub prolongation_weight: f64,
    /// Cycle index (2 = W-cycle) and smoothing steps of one sub-cycle.
    pub nu: usize,
    pub pre: usize,
    pub post: usize,
    /// Braess-Sarazin velocity damping of `alpha * diag(A_uu)`.
    pub bs_alpha: f64,
    /// Fixed damped-Jacobi sweeps on the approximate Schur complement.
    pub bs_inner_steps: usize,
    pub vanka_omega: f64,
    /// Extra multiplier on the pressure prolongation scaling.
    pub sigma_scale: f64,
    /// Use row-only strength (identity-like rows stay singletons).
    pub row_strength: bool,
}

impl Default for SubAmgOpts {
    fn default() -> Self {
        SubAmgOpts {
            theta: 0.25,
            min_coarse: 200,
            max_levels: 25,
            prolongation_weight: 2.0 / 3.0,
            nu: 2,
            pre: 2,
            post: 2,
            bs_alpha: 1.3,
            bs_inner_steps: 10,
            vanka_omega: 0.8,
            sigma_scale: 1.0,
            row_strength: false,
        }
    }
}

#[derive(Debug, Clone)]
enum SmootherData<T> {
    GaussSeidel,
    BraessSarazin(BsData<T>),
    Vanka(VankaData<T>),
    /// Coarsest level: no smoother.
    None,
}

#[derive(Debug, Clone)]
struct BsData<T> {
    n_u: usize,
    /// 1 / (alpha * diag(A_uu))
    ad_inv: Vec<T>,
    b_up: Csr<T>,
    b_pu: Csr<T>,
    /// Approximate Schur complement `B_pu (alpha D)^-1 B_up - C_pp`.
    shat: Csr<T>,
    shat_diag_inv: Vec<T>,
    inner_steps: usize,
}

#[derive(Debug, Clone)]
struct VankaData<T> {
    patches: Vec<Vec<usize>>,
    lus: Vec<DenseLu<T>>,
    omega: T,
}

#[derive(Debug, Clone)]
pub struct SubLevel<T> {
    pub a: Csr<T>,
    /// Prolongation from the next-coarser level onto this one.
    pub p: Option<Csr<T>>,
    /// Restriction = transpose of `p`.
    pub r: Option<Csr<T>>,
    /// (velocity-like size, pressure size) for saddle levels.
    pub split: Option<(usize, usize)>,
    smoother: SmootherData<T>,
}

#[derive(Debug, Clone)]
pub struct SubHierarchy<T> {
    pub kind: SubKind,
    pub levels: Vec<SubLevel<T>>,
    coarsest: DenseLu<T>,
    pub opts: SubAmgOpts,
}

/// Greedy pairwise matching on a symmetric strength graph given as adjacency
/// with weights. A connection is strong when its weight reaches `theta`
/// times the node's strongest connection; nodes are visited in ascending
/// order and matched to their strongest available strong neighbor, and
/// left-over singletons join their strongest neighbor's aggregate (capped at
/// three members) so the ladder keeps halving on mass-dominated blocks.
fn pairwise_aggregate(n: usize, adj: &[Vec<(usize, f64)>], theta: f64) -> (Vec<usize>, usize) {
    let wmax: Vec<f64> = adj
        .iter()
        .map(|l| l.iter().map(|&(_, w)| w).fold(0.0f64, f64::max))
        .collect();
    let mut agg = vec![usize::MAX; n];
    let mut size: Vec<usize> = Vec::new();
    for i in 0..n {
        if agg[i] != usize::MAX {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for &(j, w) in &adj[i] {
            if j == i || agg[j] != usize::MAX || w < theta * wmax[i] || w <= 0.0 {
                continue;
            }
            if best.map(|(_, bw)| w > bw).unwrap_or(true) {
                best = Some((j, w));
            }
        }
        let id = size.len();
        agg[i] = id;
        if let Some((j, _)) = best {
            agg[j] = id;
            size.push(2);
        } else {
            size.push(1);
        }
    }
    // second pass: attach singletons to a neighboring aggregate
    for i in 0..n {
        if size[agg[i]] != 1 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for &(j, w) in &adj[i] {
            if j == i || agg[j] == agg[i] || w < theta * wmax[i] || w <= 0.0 {
                continue;
            }
            if size[agg[j]] >= 3 {
                continue;
            }
            if best.map(|(_, bw)| w > bw).unwrap_or(true) {
                best = Some((j, w));
            }
        }
        if let Some((j, _)) = best {
            size[agg[i]] -= 1;
            agg[i] = agg[j];
            size[agg[i]] += 1;
        }
    }
    // compact the aggregate numbering
    let mut remap = vec![usize::MAX; size.len()];
    let mut next = 0usize;
    for a in agg.iter_mut() {
        if remap[*a] == usize::MAX {
            remap[*a] = next;
            next += 1;
        }
        *a = remap[*a];
    }
    (agg, next)
}

/// Strength adjacency of a sparse matrix based on
/// `|a_ij| / sqrt(|a_ii a_jj|)`; symmetrized over (i, j) unless
/// `row_only`, in which case rows without off-diagonal entries (identity
/// rows from constraints) stay detached and aggregate as singletons.
fn strength_adjacency<T: Real>(a: &Csr<T>, row_only: bool) -> Vec<Vec<(usize, f64)>> {
    let n = a.n_rows();
    let diag: Vec<f64> = a.diag().iter().map(|d| d.abs().as_f64()).collect();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals.iter()) {
            if j == i {
                continue;
            }
            let den = (diag[i] * diag[j]).sqrt();
            if den == 0.0 {
                continue;
            }
            let w = v.abs().as_f64() / den;
            adj[i].push((j, w));
            if !row_only {
                adj[j].push((i, w));
            }
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        list.dedup_by(|a, b| {
            if a.0 == b.0 {
                b.1 = b.1.max(a.1);
                true
            } else {
                false
            }
        });
    }
    adj
}

/// Scalar AMG hierarchy for the mesh-motion block.
pub fn build_scalar_hierarchy<T: Real>(
    a: &Csr<T>,
    opts: &SubAmgOpts,
) -> Result<SubHierarchy<T>, Error> {
    let mut levels: Vec<SubLevel<T>> = Vec::new();
    let mut current = a.clone();
    while levels.len() + 1 < opts.max_levels && current.n_rows() > opts.min_coarse {
        let n = current.n_rows();
        let adj = strength_adjacency(&current, opts.row_strength);
        let (agg, n_agg) = pairwise_aggregate(n, &adj, opts.theta);
        if n_agg as f64 > 0.75 * n as f64 {
            break; // coarsening stalled (e.g. diagonal matrix)
        }
        // tentative piecewise-constant prolongation
        let mut pt = CsrBuilder::with_capacity(n, n_agg, n);
        for (i, &g) in agg.iter().enumerate() {
            pt.add(i, g, T::one());
        }
        let pt = pt.build();
        // one Jacobi smoothing pass: P = (I - w D^-1 A) P_t
        let w = T::of(opts.prolongation_weight);
        let diag = current.diag();
        let ap = current.matmul(&pt);
        let mut pb = CsrBuilder::with_capacity(n, n_agg, 4 * n);
        for i in 0..n {
            let dinv = if diag[i] != T::zero() {
                T::one() / diag[i]
            } else {
                T::zero()
            };
            let (cols, vals) = pt.row(i);
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                pb.add(i, c, v);
            }
            let (cols, vals) = ap.row(i);
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                pb.add(i, c, -w * dinv * v);
            }
        }
        // drop small smoothed entries (row-sum preserving) to keep the
        // coarse stencils from fanning out level over level
        let p = filter_prolongation(&pb.build(), 0.08);
        let r = p.transpose();
        let coarse = r.matmul(&current.matmul(&p));
        levels.push(SubLevel {
            a: current,
            p: Some(p),
            r: Some(r),
            split: None,
            smoother: SmootherData::GaussSeidel,
        });
        current = coarse;
    }
    let coarsest = crate::krylov::factorize(&current)?;
    levels.push(SubLevel {
        a: current,
        p: None,
        r: None,
        split: None,
        smoother: SmootherData::None,
    });
    Ok(SubHierarchy {
        kind: SubKind::MeshMotion,
        levels,
        coarsest,
        opts: opts.clone(),
    })
}

/// Drops prolongation entries below `frac` of their row maximum and
/// rescales each row to preserve its sum (constants stay interpolated
/// exactly).
fn filter_prolongation<T: Real>(p: &Csr<T>, frac: f64) -> Csr<T> {
    let mut b = CsrBuilder::with_capacity(p.n_rows(), p.n_cols(), p.nnz());
    for i in 0..p.n_rows() {
        let (cols, vals) = p.row(i);
        let rowmax = vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let cut = T::of(frac) * rowmax;
        let sum_before: T = vals.iter().copied().sum();
        let mut sum_after = T::zero();
        for (&_, &v) in cols.iter().zip(vals.iter()) {
            if v.abs() >= cut {
                sum_after += v;
            }
        }
        let scale = if sum_after != T::zero() && sum_before != T::zero() {
            sum_before / sum_after
        } else {
            T::one()
        };
        for (&c, &v) in cols.iter().zip(vals.iter()) {
            if v.abs() >= cut {
                b.add(i, c, v * scale);
            }
        }
    }
    b.build()
}

/// Node-block strength graph of the velocity part: the weight between mesh
/// nodes is the Frobenius norm of the 3x3 coupling block.
fn node_block_adjacency<T: Real>(a: &Csr<T>, n_u: usize, row_only: bool) -> Vec<Vec<(usize, f64)>> {
    let n_nodes = n_u / 3;
    let mut blocks: std::collections::HashMap<(usize, usize), f64> = std::collections::HashMap::new();
    for i in 0..n_u {
        let (cols, vals) = a.row(i);
        let ni = i / 3;
        for (&j, &v) in cols.iter().zip(vals.iter()) {
            if j >= n_u {
                continue;
            }
            let nj = j / 3;
            *blocks.entry((ni, nj)).or_insert(0.0) += (v * v).as_f64();
        }
    }
    let diag: Vec<f64> = (0..n_nodes)
        .map(|ni| blocks.get(&(ni, ni)).copied().unwrap_or(0.0).sqrt())
        .collect();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_nodes];
    for (&(ni, nj), &w2) in blocks.iter() {
        if ni == nj {
            continue;
        }
        let den = (diag[ni] * diag[nj]).sqrt().max(1e-300);
        let w = w2.sqrt() / den;
        adj[ni].push((nj, w));
        if !row_only {
            adj[nj].push((ni, w));
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        list.dedup_by(|a, b| {
            if a.0 == b.0 {
                b.1 = b.1.max(a.1);
                true
            } else {
                false
            }
        });
    }
    adj
}

fn build_bs_data<T: Real>(a: &Csr<T>, n_u: usize, n_p: usize, opts: &SubAmgOpts) -> BsData<T> {
    let a_uu = a.submatrix(0..n_u, 0..n_u);
    let b_up = a.submatrix(0..n_u, n_u..n_u + n_p);
    let b_pu = a.submatrix(n_u..n_u + n_p, 0..n_u);
    let c_pp = a.submatrix(n_u..n_u + n_p, n_u..n_u + n_p);
    let alpha = T::of(opts.bs_alpha);
    let ad_inv: Vec<T> = a_uu
        .diag()
        .iter()
        .map(|&d| {
            if d != T::zero() {
                T::one() / (alpha * d)
            } else {
                T::zero()
            }
        })
        .collect();
    // Shat = B_pu (alpha D)^-1 B_up - C_pp
    let mut scaled = b_up.clone();
    let mut bld = CsrBuilder::with_capacity(n_u, n_p, scaled.nnz());
    for i in 0..n_u {
        let (cols, vals) = scaled.row(i);
        for (&c, &v) in cols.iter().zip(vals.iter()) {
            bld.add(i, c, ad_inv[i] * v);
        }
    }
    scaled = bld.build();
    let mut shat = b_pu.matmul(&scaled);
    // shat -= C_pp
    let mut sb = CsrBuilder::with_capacity(n_p, n_p, shat.nnz() + c_pp.nnz());
    for i in 0..n_p {
        let (cols, vals) = shat.row(i);
        for (&c, &v) in cols.iter().zip(vals.iter()) {
            sb.add(i, c, v);
        }
        let (cols, vals) = c_pp.row(i);
        for (&c, &v) in cols.iter().zip(vals.iter()) {
            sb.add(i, c, -v);
        }
    }
    shat = sb.build();
    let shat_diag_inv: Vec<T> = shat
        .diag()
        .iter()
        .map(|&d| {
            if d != T::zero() {
                T::one() / d
            } else {
                T::zero()
            }
        })
        .collect();
    BsData {
        n_u,
        ad_inv,
        b_up,
        b_pu,
        shat,
        shat_diag_inv,
        inner_steps: opts.bs_inner_steps,
    }
}

fn build_vanka_data<T: Real>(a: &Csr<T>, n_u: usize, n_p: usize, omega: f64) -> Result<VankaData<T>, Error> {
    let mut patches = Vec::with_capacity(n_p);
    let mut lus = Vec::with_capacity(n_p);
    for jp in 0..n_p {
        let prow = n_u + jp;
        let (cols, _) = a.row(prow);
        let mut dofs: Vec<usize> = cols.iter().copied().filter(|&c| c < n_u).collect();
        dofs.push(prow);
        // local dense sub-matrix
        let m = dofs.len();
        let mut local = DenseMat::<T>::zeros(m, m);
        let pos: std::collections::HashMap<usize, usize> =
            dofs.iter().enumerate().map(|(k, &d)| (d, k)).collect();
        for (k, &d) in dofs.iter().enumerate() {
            let (cols, vals) = a.row(d);
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                if let Some(&kk) = pos.get(&c) {
                    local[(k, kk)] = v;
                }
            }
        }
        let lu = local.lu().map_err(|_| Error::CoarseSingular { level: 0 })?;
        patches.push(dofs);
        lus.push(lu);
    }
    Ok(VankaData {
        patches,
        lus,
        omega: T::of(omega),
    })
}

/// Saddle-point AMG hierarchy for the fluid or structure block. `split` is
/// (velocity/displacement size, pressure size) with the vector field first.
pub fn build_saddle_hierarchy<T: Real>(
    a: &Csr<T>,
    split: (usize, usize),
    kind: SubKind,
    opts: &SubAmgOpts,
) -> Result<SubHierarchy<T>, Error> {
    assert!(kind != SubKind::MeshMotion);
    let mut sigma_boost = 1.0f64;
    'retry: loop {
        let mut levels: Vec<SubLevel<T>> = Vec::new();
        let mut current = a.clone();
        let mut cur_split = split;
        loop {
            let (n_u, n_p) = cur_split;
            let n = current.n_rows();
            assert_eq!(n, n_u + n_p);
            let smoother = match kind {
                SubKind::Fluid => SmootherData::BraessSarazin(build_bs_data(&current, n_u, n_p, opts)),
                SubKind::Structure => {
                    SmootherData::Vanka(build_vanka_data(&current, n_u, n_p, opts.vanka_omega)?)
                }
                SubKind::MeshMotion => unreachable!(),
            };
            if levels.len() + 2 > opts.max_levels || n <= opts.min_coarse {
                levels.push(SubLevel {
                    a: current.clone(),
                    p: None,
                    r: None,
                    split: Some(cur_split),
                    smoother,
                });
                break;
            }
            // aggregate velocity nodes point-block
            let u_adj = node_block_adjacency(&current, n_u, opts.row_strength);
            let (u_agg, n_u_agg) = pairwise_aggregate(n_u / 3, &u_adj, opts.theta);
            // aggregate pressure unknowns on the pressure sub-graph
            let c_pp = current.submatrix(n_u..n, n_u..n);
            let p_adj = strength_adjacency(&c_pp, opts.row_strength);
            let (p_agg, n_p_agg) = pairwise_aggregate(n_p, &p_adj, opts.theta);
            let coarse_n_u = 3 * n_u_agg;
            let coarse_n = coarse_n_u + n_p_agg;
            if coarse_n as f64 > 0.75 * n as f64 {
                levels.push(SubLevel {
                    a: current.clone(),
                    p: None,
                    r: None,
                    split: Some(cur_split),
                    smoother,
                });
                break;
            }
            // pressure prolongation scaling: coarse stabilization scales like
            // the coarse mesh width
            let sigma =
                T::of((n_p_agg as f64 / n_p as f64).sqrt() * sigma_boost * opts.sigma_scale);
            let mut pb = CsrBuilder::with_capacity(n, coarse_n, n);
            for node in 0..n_u / 3 {
                for c in 0..3 {
                    pb.add(3 * node + c, 3 * u_agg[node] + c, T::one());
                }
            }
            for jp in 0..n_p {
                pb.add(n_u + jp, coarse_n_u + p_agg[jp], sigma);
            }
            let p = pb.build();
            let r = p.transpose();
            let coarse = r.matmul(&current.matmul(&p));
            // solvability smoke test on small coarse systems
            if coarse.n_rows() <= 600 {
                match crate::krylov::factorize(&coarse) {
                    Ok(_) => {}
                    Err(_) => {
                        if sigma_boost < 1.5 {
                            sigma_boost = 2.0;
                            continue 'retry;
                        }
                        return Err(Error::CoarseSingular {
                            level: levels.len() + 1,
                        });
                    }
                }
            }
            levels.push(SubLevel {
                a: current,
                p: Some(p),
                r: Some(r),
                split: Some(cur_split),
                smoother,
            });
            current = coarse;
            cur_split = (coarse_n_u, n_p_agg);
        }
        let coarsest_mat = levels.last().unwrap().a.clone();
        let coarsest = match crate::krylov::factorize(&coarsest_mat) {
            Ok(lu) => lu,
            Err(_) if sigma_boost < 1.5 => {
                sigma_boost = 2.0;
                continue 'retry;
            }
            Err(e) => return Err(e),
        };
        // drop the smoother on the coarsest level
        let last = levels.len() - 1;
        levels[last].smoother = SmootherData::None;
        return Ok(SubHierarchy {
            kind,
            levels,
            coarsest,
            opts: opts.clone(),
        });
    }
}

/// One Braess-Sarazin step: damped-Jacobi velocity preconditioner, pressure
/// correction through the approximate Schur complement, velocity update.
fn bs_step<T: Real>(a: &Csr<T>, bs: &BsData<T>, x: &mut [T], b: &[T]) {
    let n = a.n_rows();
    let n_u = bs.n_u;
    let mut r = vec![T::zero(); n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let (r_u, r_p) = r.split_at(n_u);
    // g = B_pu (alpha D)^-1 r_u - r_p
    let du: Vec<T> = r_u
        .iter()
        .zip(bs.ad_inv.iter())
        .map(|(&v, &d)| v * d)
        .collect();
    let mut g = vec![T::zero(); r_p.len()];
    bs.b_pu.matvec(&du, &mut g);
    for (gi, rp) in g.iter_mut().zip(r_p.iter()) {
        *gi -= *rp;
    }
    // fixed damped-Jacobi sweeps on Shat dp = g (linear in the residual)
    let mut dp = vec![T::zero(); g.len()];
    let omega = T::of(0.8);
    let mut sres = vec![T::zero(); g.len()];
    for _ in 0..bs.inner_steps {
        bs.shat.matvec(&dp, &mut sres);
        for i in 0..dp.len() {
            dp[i] += omega * bs.shat_diag_inv[i] * (g[i] - sres[i]);
        }
    }
    // du = (alpha D)^-1 (r_u - B_up dp)
    let mut bdp = vec![T::zero(); n_u];
    bs.b_up.matvec(&dp, &mut bdp);
    for i in 0..n_u {
        x[i] += bs.ad_inv[i] * (r_u[i] - bdp[i]);
    }
    for i in 0..dp.len() {
        x[n_u + i] += dp[i];
    }
}

/// One multiplicative Vanka sweep over the pressure-centered patches in
/// ascending pressure order.
fn vanka_step<T: Real>(a: &Csr<T>, vk: &VankaData<T>, x: &mut [T], b: &[T]) {
    for (dofs, lu) in vk.patches.iter().zip(vk.lus.iter()) {
        let m = dofs.len();
        let mut r_loc = vec![T::zero(); m];
        for (k, &d) in dofs.iter().enumerate() {
            let (cols, vals) = a.row(d);
            let mut s = b[d];
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                s -= v * x[c];
            }
            r_loc[k] = s;
        }
        let dx = lu.solve_vec(&r_loc);
        for (k, &d) in dofs.iter().enumerate() {
            x[d] += vk.omega * dx[k];
        }
    }
}

/// Gauss-Seidel sweep; `backward` flips the traversal (used post-smoothing).
fn gs_step<T: Real>(a: &Csr<T>, x: &mut [T], b: &[T], backward: bool) {
    let n = a.n_rows();
    let order: Box<dyn Iterator<Item = usize>> = if backward {
        Box::new((0..n).rev())
    } else {
        Box::new(0..n)
    };
    for i in order {
        let (cols, vals) = a.row(i);
        let mut s = b[i];
        let mut diag = T::zero();
        for (&c, &v) in cols.iter().zip(vals.iter()) {
            if c == i {
                diag = v;
            } else {
                s -= v * x[c];
            }
        }
        if diag != T::zero() {
            x[i] = s / diag;
        }
    }
}

/// Smoothing entry points (exposed for the smoother measurements).
pub fn braess_sarazin_smooth<T: Real>(level: &SubLevel<T>, x: &mut [T], b: &[T], steps: usize) {
    if let SmootherData::BraessSarazin(bs) = &level.smoother {
        for _ in 0..steps {
            bs_step(&level.a, bs, x, b);
        }
    } else {
        panic!("level has no Braess-Sarazin smoother");
    }
}

pub fn vanka_smooth<T: Real>(level: &SubLevel<T>, x: &mut [T], b: &[T], steps: usize) {
    if let SmootherData::Vanka(vk) = &level.smoother {
        for _ in 0..steps {
            vanka_step(&level.a, vk, x, b);
        }
    } else {
        panic!("level has no Vanka smoother");
    }
}

impl<T: Real> SubHierarchy<T> {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.a.n_rows()).collect()
    }

    /// Total stored nonzeros over all levels relative to the finest level.
    pub fn operator_complexity(&self) -> f64 {
        let fine = self.levels[0].a.nnz() as f64;
        let total: usize = self.levels.iter().map(|l| l.a.nnz()).sum();
        total as f64 / fine
    }

    pub fn stats_csv(&self) -> String {
        let mut s = String::from("level,n,nnz\n");
        for (i, l) in self.levels.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", i + 1, l.a.n_rows(), l.a.nnz()));
        }
        s.push_str(&format!(
            "complexity,{:.4},\n",
            self.operator_complexity()
        ));
        s
    }

    fn smooth(&self, level: usize, x: &mut [T], b: &[T], steps: usize, backward: bool) {
        let l = &self.levels[level];
        match &l.smoother {
            SmootherData::GaussSeidel => {
                for _ in 0..steps {
                    gs_step(&l.a, x, b, backward);
                }
            }
            SmootherData::BraessSarazin(bs) => {
                for _ in 0..steps {
                    bs_step(&l.a, bs, x, b);
                }
            }
            SmootherData::Vanka(vk) => {
                for _ in 0..steps {
                    vanka_step(&l.a, vk, x, b);
                }
            }
            SmootherData::None => {}
        }
    }

    /// One AMG cycle starting at `level`, improving `x` for `A_level x = b`.
    pub fn cycle_from_level(&self, level: usize, x: &mut [T], b: &[T]) {
        let last = self.levels.len() - 1;
        if level == last {
            let y = self.coarsest.solve_vec(b);
            x.copy_from_slice(&y);
            return;
        }
        let l = &self.levels[level];
        self.smooth(level, x, b, self.opts.pre, false);
        // restricted residual
        let n = l.a.n_rows();
        let mut r = vec![T::zero(); n];
        l.a.matvec(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let rmat = l.r.as_ref().unwrap();
        let mut bc = vec![T::zero(); rmat.n_rows()];
        rmat.matvec(&r, &mut bc);
        let mut xc = vec![T::zero(); bc.len()];
        if level + 1 == last {
            let y = self.coarsest.solve_vec(&bc);
            xc.copy_from_slice(&y);
        } else {
            for _ in 0..self.opts.nu {
                self.cycle_from_level(level + 1, &mut xc, &bc);
            }
        }
        let p = l.p.as_ref().unwrap();
        let mut corr = vec![T::zero(); n];
        p.matvec(&xc, &mut corr);
        for i in 0..n {
            x[i] += corr[i];
        }
        self.smooth(level, x, b, self.opts.post, true);
    }

    /// One cycle from the finest level with zero initial guess; this is the
    /// `A~^-1` operator consumed by the block preconditioners and the
    /// coupled smoother.
    pub fn precondition(&self, b: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); b.len()];
        self.cycle_from_level(0, &mut x, b);
        x
    }

    /// Like [`Self::precondition`], starting the cycle at a coarser level
    /// (padded with the last level if the hierarchy is exhausted).
    pub fn precondition_at(&self, level: usize, b: &[T]) -> Vec<T> {
        let lv = level.min(self.levels.len() - 1);
        let mut x = vec![T::zero(); b.len()];
        self.cycle_from_level(lv, &mut x, b);
        x
    }

    /// Stationary iteration `x_{k+1} = x_k + cycle(b - A x_k)` down to a
    /// relative residual; returns (iterations, converged).
    pub fn solve(&self, b: &[T], tol: f64, max_iter: usize) -> (Vec<T>, usize, bool) {
        let a = &self.levels[0].a;
        let n = a.n_rows();
        let mut x = vec![T::zero(); n];
        let b_norm = crate::krylov::norm2(b);
        if b_norm == T::zero() {
            return (x, 0, true);
        }
        for it in 1..=max_iter {
            self.cycle_from_level(0, &mut x, b);
            let mut r = vec![T::zero(); n];
            a.matvec(&x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            if crate::krylov::norm2(&r) <= T::of(tol) * b_norm {
                return (x, it, true);
            }
        }
        (x, max_iter, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::norm2;
    use crate::util::SplitMix64;

    fn laplace_1d(n: usize) -> Csr<f64> {
        let mut b = CsrBuilder::new(n, n);
        for i in 0..n {
            b.add(i, i, 2.0);
            if i > 0 {
                b.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn scalar_hierarchy_halves_level_sizes() {
        let a = laplace_1d(64);
        let opts = SubAmgOpts {
            min_coarse: 4,
            ..Default::default()
        };
        let h = build_scalar_hierarchy(&a, &opts).unwrap();
        let sizes = h.level_sizes();
        assert_eq!(sizes[0], 64);
        // pairwise aggregation: the ladder starts 64/32/~16
        assert_eq!(sizes[1], 32);
        assert!((15..=18).contains(&sizes[2]), "ladder {sizes:?}");
        // smoothed-aggregation stencil growth is worst on 1D stencils; the
        // stored hierarchy still stays within a small multiple of the
        // finest operator
        assert!(
            h.operator_complexity() <= 3.5,
            "complexity {}",
            h.operator_complexity()
        );
    }

    #[test]
    fn diagonal_matrix_gives_single_level() {
        let mut b = CsrBuilder::new(50, 50);
        for i in 0..50 {
            b.add(i, i, 1.0 + i as f64);
        }
        let a = b.build();
        let opts = SubAmgOpts {
            min_coarse: 4,
            ..Default::default()
        };
        let h = build_scalar_hierarchy(&a, &opts).unwrap();
        assert_eq!(h.n_levels(), 1);
        // and the "hierarchy" still solves: it is a direct solve
        let x = h.precondition(&vec![1.0; 50]);
        for (i, xi) in x.iter().enumerate() {
            assert!((xi - 1.0 / (1.0 + i as f64)).abs() < 1e-13);
        }
    }

    #[test]
    fn scalar_cycle_contracts_on_2d_poisson() {
        // 2d 5-point laplacian on a 24x24 grid
        let n1 = 24;
        let n = n1 * n1;
        let idx = |i: usize, j: usize| i * n1 + j;
        let mut b = CsrBuilder::new(n, n);
        for i in 0..n1 {
            for j in 0..n1 {
                b.add(idx(i, j), idx(i, j), 4.0);
                if i > 0 {
                    b.add(idx(i, j), idx(i - 1, j), -1.0);
                }
                if i + 1 < n1 {
                    b.add(idx(i, j), idx(i + 1, j), -1.0);
                }
                if j > 0 {
                    b.add(idx(i, j), idx(i, j - 1), -1.0);
                }
                if j + 1 < n1 {
                    b.add(idx(i, j), idx(i, j + 1), -1.0);
                }
            }
        }
        let a = b.build();
        let opts = SubAmgOpts {
            min_coarse: 30,
            nu: 1, // V-cycle for the contraction measurement
            ..Default::default()
        };
        let h = build_scalar_hierarchy(&a, &opts).unwrap();
        let mut rng = SplitMix64::new(4);
        let rhs: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mut x = vec![0.0; n];
        let mut res_prev = norm2(&rhs);
        let mut rates = Vec::new();
        for _ in 0..6 {
            h.cycle_from_level(0, &mut x, &rhs);
            let mut r = vec![0.0; n];
            a.matvec(&x, &mut r);
            for i in 0..n {
                r[i] = rhs[i] - r[i];
            }
            let res = norm2(&r);
            rates.push(res / res_prev);
            res_prev = res;
        }
        let worst = rates.iter().copied().fold(0.0f64, f64::max);
        assert!(worst <= 0.3, "V-cycle contraction {rates:?}");
        // the deepest toy levels densify under Galerkin products; the
        // production hierarchies stop far shallower (see the 1D bound)
        assert!(
            h.operator_complexity() <= 8.0,
            "2d complexity {}",
            h.operator_complexity()
        );
    }

    #[test]
    fn cycle_is_a_fixed_linear_operator() {
        let a = laplace_1d(48);
        let opts = SubAmgOpts {
            min_coarse: 6,
            ..Default::default()
        };
        let h = build_scalar_hierarchy(&a, &opts).unwrap();
        let mut rng = SplitMix64::new(8);
        let r1: Vec<f64> = (0..48).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let r2: Vec<f64> = (0..48).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let z1 = h.precondition(&r1);
        let z2 = h.precondition(&r2);
        // additivity
        let sum: Vec<f64> = r1.iter().zip(r2.iter()).map(|(a, b)| a + b).collect();
        let zsum = h.precondition(&sum);
        for i in 0..48 {
            assert!((zsum[i] - z1[i] - z2[i]).abs() < 1e-12);
        }
        // homogeneity
        let scaled: Vec<f64> = r1.iter().map(|v| 3.5 * v).collect();
        let zs = h.precondition(&scaled);
        for i in 0..48 {
            assert!((zs[i] - 3.5 * z1[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn galerkin_identity_holds_on_every_level() {
        let a = laplace_1d(64);
        let opts = SubAmgOpts {
            min_coarse: 4,
            ..Default::default()
        };
        let h = build_scalar_hierarchy(&a, &opts).unwrap();
        for l in 0..h.n_levels() - 1 {
            let lev = &h.levels[l];
            let p = lev.p.as_ref().unwrap();
            // independent evaluation order: (P^T A) P via dense arithmetic
            let pd = p.to_dense();
            let ad = lev.a.to_dense();
            let want = pd.transpose().matmul(&ad).matmul(&pd);
            let got = &h.levels[l + 1].a;
            for i in 0..want.n_rows {
                for j in 0..want.n_cols {
                    assert!(
                        (got.get(i, j) - want[(i, j)]).abs() < 1e-12,
                        "galerkin mismatch at level {l} ({i},{j})"
                    );
                }
            }
            // full column rank: P^T P nonsingular
            let ptp = pd.transpose().matmul(&pd);
            assert!(ptp.lu().is_ok());
        }
    }

    /// Small stabilized Stokes-like toy on a structured cube: 3 velocity
    /// components on the nodes plus a stabilized pressure, wired to be
    /// symmetric positive-definite-ish in the velocity block with a weak
    /// pressure coupling. It exercises the saddle machinery without the full
    /// FSI assembly.
    fn stokes_toy(n1: usize) -> (Csr<f64>, (usize, usize)) {
        let n_nodes = n1 * n1 * n1;
        let idx = |i: usize, j: usize, k: usize| (i * n1 + j) * n1 + k;
        let n_u = 3 * n_nodes;
        let n = n_u + n_nodes;
        let mut b = CsrBuilder::new(n, n);
        for i in 0..n1 {
            for j in 0..n1 {
                for k in 0..n1 {
                    let a = idx(i, j, k);
                    let mut neighbors = Vec::new();
                    if i > 0 {
                        neighbors.push(idx(i - 1, j, k));
                    }
                    if i + 1 < n1 {
                        neighbors.push(idx(i + 1, j, k));
                    }
                    if j > 0 {
                        neighbors.push(idx(i, j - 1, k));
                    }
                    if j + 1 < n1 {
                        neighbors.push(idx(i, j + 1, k));
                    }
                    if k > 0 {
                        neighbors.push(idx(i, j, k - 1));
                    }
                    if k + 1 < n1 {
                        neighbors.push(idx(i, j, k + 1));
                    }
                    // velocity block: mass/dt shift plus a laplacian
                    for c in 0..3 {
                        b.add(3 * a + c, 3 * a + c, 2.0 + neighbors.len() as f64);
                    }
                    for &nb in &neighbors {
                        for c in 0..3 {
                            b.add(3 * a + c, 3 * nb + c, -1.0);
                        }
                        // gradient/divergence couplings over all components
                        for c in 0..3 {
                            b.add(3 * a + c, n_u + nb, 0.15);
                            b.add(n_u + a, 3 * nb + c, 0.15);
                            b.add(3 * a + c, n_u + a, -0.15);
                            b.add(n_u + a, 3 * a + c, -0.15);
                        }
                        // pressure stabilization stencil
                        b.add(n_u + a, n_u + nb, 0.05);
                    }
                    b.add(n_u + a, n_u + a, -0.2 - 0.05 * neighbors.len() as f64);
                }
            }
        }
        (b.build(), (n_u, n_nodes))
    }

    #[test]
    fn saddle_hierarchy_never_mixes_fields_and_stays_solvable() {
        let (a, split) = stokes_toy(3);
        let opts = SubAmgOpts {
            min_coarse: 20,
            ..Default::default()
        };
        let h = build_saddle_hierarchy(&a, split, SubKind::Fluid, &opts).unwrap();
        // fields never mix: the prolongation has no entries coupling the
        // velocity rows to pressure coarse columns or vice versa
        for l in 0..h.n_levels() - 1 {
            let lev = &h.levels[l];
            let (n_u, _) = lev.split.unwrap();
            let (cn_u, _) = h.levels[l + 1].split.unwrap();
            let p = lev.p.as_ref().unwrap();
            for i in 0..p.n_rows() {
                let (cols, _) = p.row(i);
                for &c in cols {
                    assert_eq!(i < n_u, c < cn_u, "mixed aggregate at level {l}");
                }
            }
            // all coarse systems pass a direct solvability check
            assert!(crate::krylov::factorize(&h.levels[l + 1].a).is_ok());
        }
    }

    #[test]
    fn braess_sarazin_exact_velocity_property_and_contraction() {
        let (a, split) = stokes_toy(3);
        let (n_u, n_p) = split;
        let n = n_u + n_p;
        // exact-variant property: with the velocity "preconditioner" replaced
        // by the exact inverse, one step zeroes the velocity residual for any
        // rhs supported in the velocity block
        let a_uu = a.submatrix(0..n_u, 0..n_u);
        let lu = crate::krylov::factorize(&a_uu).unwrap();
        let b_up = a.submatrix(0..n_u, n_u..n);
        let b_pu = a.submatrix(n_u..n, 0..n_u);
        let mut rng = SplitMix64::new(10);
        let mut b = vec![0.0; n];
        for v in b.iter_mut().take(n_u) {
            *v = rng.uniform(-1.0, 1.0);
        }
        // one exact BS step from zero: dp arbitrary (here: exact Schur on the
        // toy), du = A_uu^-1 (r_u - B_up dp)
        let g = {
            let t = lu.solve_vec(&b[..n_u]);
            let mut g = vec![0.0; n_p];
            b_pu.matvec(&t, &mut g);
            for (gi, rp) in g.iter_mut().zip(b[n_u..].iter()) {
                *gi -= rp;
            }
            g
        };
        // Schur complement built densely for the toy
        let shat = {
            let mut m = DenseMat::<f64>::zeros(n_p, n_p);
            for jp in 0..n_p {
                let mut e = vec![0.0; n_p];
                e[jp] = 1.0;
                let mut be = vec![0.0; n_u];
                b_up.matvec(&e, &mut be);
                let ai = lu.solve_vec(&be);
                let mut col = vec![0.0; n_p];
                b_pu.matvec(&ai, &mut col);
                let cpp = a.submatrix(n_u..n, n_u..n);
                let mut ce = vec![0.0; n_p];
                cpp.matvec(&e, &mut ce);
                for i in 0..n_p {
                    m[(i, jp)] = col[i] - ce[i];
                }
            }
            m
        };
        let dp = shat.lu().unwrap().solve_vec(&g);
        let mut bdp = vec![0.0; n_u];
        b_up.matvec(&dp, &mut bdp);
        let rhs_u: Vec<f64> = b[..n_u].iter().zip(bdp.iter()).map(|(r, c)| r - c).collect();
        let du = lu.solve_vec(&rhs_u);
        // assemble x and check the velocity rows of the residual vanish
        let mut x = vec![0.0; n];
        x[..n_u].copy_from_slice(&du);
        x[n_u..].copy_from_slice(&dp);
        let mut r = vec![0.0; n];
        a.matvec(&x, &mut r);
        for i in 0..n_u {
            assert!(
                (b[i] - r[i]).abs() < 1e-9,
                "velocity residual {} at {i}",
                b[i] - r[i]
            );
        }

        // the production (inexact) smoother contracts on a random rhs
        let opts = SubAmgOpts::default();
        let bs = build_bs_data(&a, n_u, n_p, &opts);
        let mut rng = SplitMix64::new(77);
        let rhs: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mut x = vec![0.0; n];
        let mut prev = norm2(&rhs);
        for _ in 0..4 {
            bs_step(&a, &bs, &mut x, &rhs);
            let mut r = vec![0.0; n];
            a.matvec(&x, &mut r);
            for i in 0..n {
                r[i] = rhs[i] - r[i];
            }
            let now = norm2(&r);
            assert!(now <= 0.7 * prev + 1e-12, "BS contraction {now} vs {prev}");
            prev = now;
        }

        // zero rhs keeps x at zero
        let mut x0 = vec![0.0; n];
        bs_step(&a, &bs, &mut x0, &vec![0.0; n]);
        assert!(x0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vanka_covers_every_dof_and_contracts() {
        let (a, split) = stokes_toy(3);
        let (n_u, n_p) = split;
        let vk = build_vanka_data(&a, n_u, n_p, 0.8).unwrap();
        let mut covered = vec![false; n_u + n_p];
        for p in &vk.patches {
            for &d in p {
                covered[d] = true;
            }
        }
        assert!(covered.iter().all(|&c| c), "vanka patches miss dofs");
        let mut rng = SplitMix64::new(5);
        let n = n_u + n_p;
        let rhs: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mut x = vec![0.0; n];
        let mut prev = norm2(&rhs);
        for _ in 0..4 {
            vanka_step(&a, &vk, &mut x, &rhs);
            let mut r = vec![0.0; n];
            a.matvec(&x, &mut r);
            for i in 0..n {
                r[i] = rhs[i] - r[i];
            }
            let now = norm2(&r);
            assert!(now <= 0.8 * prev + 1e-12, "vanka contraction {now} vs {prev}");
            prev = now;
        }
    }

    #[test]
    fn single_patch_vanka_solves_exactly() {
        // one pressure dof connected to all velocities: the patch is the
        // whole system and an undamped sweep solves it
        let n_u = 6;
        let mut b = CsrBuilder::new(n_u + 1, n_u + 1);
        let mut rng = SplitMix64::new(21);
        for i in 0..n_u {
            b.add(i, i, 3.0 + rng.uniform(0.0, 1.0));
            b.add(i, n_u, rng.uniform(-1.0, 1.0));
            b.add(n_u, i, rng.uniform(-1.0, 1.0));
        }
        b.add(n_u, n_u, -0.5);
        let a = b.build();
        let vk = build_vanka_data(&a, n_u, 1, 1.0).unwrap();
        let rhs: Vec<f64> = (0..n_u + 1).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mut x = vec![0.0; n_u + 1];
        vanka_step(&a, &vk, &mut x, &rhs);
        let mut r = vec![0.0; n_u + 1];
        a.matvec(&x, &mut r);
        for i in 0..n_u + 1 {
            assert!((rhs[i] - r[i]).abs() < 1e-11);
        }
    }
}
