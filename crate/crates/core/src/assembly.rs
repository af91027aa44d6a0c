//! Residual and Jacobian assembly for the time-discretized, stabilized
//! monolithic FSI system.
//!
//! Unknown ordering is `[d_m | u, p_f | d_s, p_s]` with fluid fields on the
//! fluid nodes and structure fields on the structure nodes. The linearized
//! operator is kept in its 3x3 block form
//!
//! ```text
//!       [ A_m   0    A_ms ]
//!   K = [ A_fm  A_f  A_fs ],   K dx = -R(X)
//!       [ 0     A_sf A_s  ]
//! ```
//!
//! Interface conditions are imposed as identity rows: mesh-displacement rows
//! on the interface read `d_m - d_s = 0` and structure-displacement rows
//! there read `(d_s - d_s_prev)/dt - u = 0`, while the interface velocity
//! rows accumulate both the fluid and the structure momentum residual
//! (shared test functions on the conforming interface).
//!
//! Everything the residual depends on is differentiated, including the
//! solution dependence of the SUPG/PSPG parameter and the full domain
//! derivative of the ALE terms; Newton's quadratic convergence depends on it
//! and the finite-difference consistency test in `tests/` enforces it.

use crate::error::Error;
use crate::krylov::{Csr, CsrBuilder, LinOp};
use crate::materials::{
    stress_and_tangent, FiberStructure, MaterialParams, ModelKind, StressTangent,
};
use crate::mesh::{FsiMesh, Patch, Subdomain};
use crate::scalar::Real;
use crate::tensor::{
    add3, axpy3, det3, dot3, ident3, inv3, matmul3, matvec3, outer3, scale3, tmatvec3, trace3,
    voigt_apply_dc, Vec3, Voigt6,
};

/// Newmark / implicit-Euler time discretization constants.
#[derive(Debug, Clone, Copy)]
pub struct TimeScheme<T> {
    pub dt: T,
    pub beta: T,
    pub gamma: T,
}

impl<T: Real> TimeScheme<T> {
    pub fn new(dt: T, beta: T, gamma: T) -> Self {
        TimeScheme { dt, beta, gamma }
    }

    /// `rho / (beta dt)`.
    pub fn beta1(&self, rho: T) -> T {
        rho / (self.beta * self.dt)
    }

    /// `rho / (beta dt^2)`.
    pub fn beta2(&self, rho: T) -> T {
        rho / (self.beta * self.dt * self.dt)
    }
}

/// Physical and numerical parameters of the coupled problem.
#[derive(Debug, Clone)]
pub struct ProblemParams<T> {
    pub rho_f: T,
    pub mu: T,
    /// Inflow traction magnitude (applied along the inward normal).
    pub g_in: T,
    /// The traction acts for `t <= g_cutoff` (ms).
    pub g_cutoff: T,
    pub media: MaterialParams<T>,
    pub adventitia: MaterialParams<T>,
    pub scheme: TimeScheme<T>,
    /// Scale of the structure pressure stabilization
    /// `-s * h^2/(2 c10) (grad p_s, grad q)`. The equal-order pair needs it
    /// for inf-sup stability (and the multigrid coarse spaces inherit that
    /// stability); setting it to zero recovers the plain mixed form.
    pub structure_pspg: T,
}

impl<T: Real> ProblemParams<T> {
    /// Table-style defaults: blood-like fluid, step traction, Newmark
    /// (beta, gamma) = (1/2, 1).
    pub fn defaults(model: ModelKind) -> Self {
        let kappa = T::of(1e5);
        let rho_s = T::of(1.2);
        let (media, adventitia) = match model {
            ModelKind::NeoHookean => (
                MaterialParams::neo_hookean(T::of(3.0), kappa, rho_s),
                MaterialParams::neo_hookean(T::of(0.3), kappa, rho_s),
            ),
            ModelKind::MooneyRivlin => (
                MaterialParams::mooney_rivlin(T::of(3.0), T::of(0.3), kappa, rho_s),
                MaterialParams::mooney_rivlin(T::of(0.3), T::of(0.2), kappa, rho_s),
            ),
            ModelKind::Artery => (
                MaterialParams::artery(
                    T::of(3.0),
                    T::of(2.3632),
                    T::of(0.8393),
                    T::of(29f64.to_radians()),
                    kappa,
                    rho_s,
                ),
                MaterialParams::artery(
                    T::of(0.3),
                    T::of(0.5620),
                    T::of(0.7112),
                    T::of(62f64.to_radians()),
                    kappa,
                    rho_s,
                ),
            ),
        };
        ProblemParams {
            rho_f: T::one(),
            mu: T::of(0.0035),
            g_in: T::of(1.332),
            g_cutoff: T::of(0.125),
            media,
            adventitia,
            scheme: TimeScheme::new(T::of(0.125), T::of(0.5), T::one()),
            structure_pspg: T::one(),
        }
    }

    pub fn g_at(&self, t: T) -> T {
        if t <= self.g_cutoff {
            self.g_in
        } else {
            T::zero()
        }
    }
}

/// Field layout bookkeeping and node classifications derived from the mesh.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_fluid_nodes: usize,
    pub n_struct_nodes: usize,
    /// Active interface pairs (fluid node, structure-local node); Dirichlet
    /// end-ring pairs are excluded.
    pub iface: Vec<(usize, usize)>,
    /// fluid node -> structure-local pair (active pairs only)
    pub f2s: Vec<Option<usize>>,
    /// structure-local node -> fluid pair (active pairs only)
    pub s2f: Vec<Option<usize>>,
    /// `d_m = 0` nodes (inflow/outflow planes).
    pub dir_m: Vec<bool>,
    /// `u = 0` nodes (fluid end rings).
    pub dir_u: Vec<bool>,
    /// `d_s = 0` structure-local nodes (ring ends).
    pub dir_s: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &FsiMesh) -> Self {
        let nf = mesh.n_fluid_nodes;
        let ns = mesh.n_struct_nodes();
        let mut dir_m = vec![false; nf];
        for f in &mesh.faces {
            if matches!(f.patch, Patch::Inflow | Patch::Outflow) {
                for &n in &f.nodes {
                    dir_m[n] = true;
                }
            }
        }
        let mut dir_u = vec![false; nf];
        for n in mesh.fluid_end_ring_nodes() {
            dir_u[n] = true;
        }
        let mut dir_s = vec![false; ns];
        for f in &mesh.faces {
            if f.patch == Patch::StructDirichlet {
                for &n in &f.nodes {
                    dir_s[n - nf] = true;
                }
            }
        }
        let mut f2s = vec![None; nf];
        let mut s2f = vec![None; ns];
        let mut iface = Vec::new();
        for &(f, s) in &mesh.interface_pairs {
            let sl = s - nf;
            if dir_s[sl] {
                // end-ring pairs are fully pinned on both sides
                continue;
            }
            f2s[f] = Some(sl);
            s2f[sl] = Some(f);
            iface.push((f, sl));
        }
        DofMap {
            n_fluid_nodes: nf,
            n_struct_nodes: ns,
            iface,
            f2s,
            s2f,
            dir_m,
            dir_u,
            dir_s,
        }
    }

    pub fn m_size(&self) -> usize {
        3 * self.n_fluid_nodes
    }

    pub fn f_size(&self) -> usize {
        4 * self.n_fluid_nodes
    }

    pub fn s_size(&self) -> usize {
        4 * self.n_struct_nodes
    }

    pub fn dim(&self) -> usize {
        self.m_size() + self.f_size() + self.s_size()
    }

    pub fn f_offset(&self) -> usize {
        self.m_size()
    }

    pub fn s_offset(&self) -> usize {
        self.m_size() + self.f_size()
    }

    pub fn u_dof(&self, node: usize, c: usize) -> usize {
        3 * node + c
    }

    pub fn pf_dof(&self, node: usize) -> usize {
        3 * self.n_fluid_nodes + node
    }

    pub fn sd_dof(&self, slocal: usize, c: usize) -> usize {
        3 * slocal + c
    }

    pub fn ps_dof(&self, slocal: usize) -> usize {
        3 * self.n_struct_nodes + slocal
    }

    /// Flat indices (into the global vector) whose corrections are
    /// constrained to zero.
    pub fn constrained_flat(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for n in 0..self.n_fluid_nodes {
            if self.dir_m[n] {
                for c in 0..3 {
                    out.push(3 * n + c);
                }
            }
            if self.dir_u[n] {
                for c in 0..3 {
                    out.push(self.f_offset() + self.u_dof(n, c));
                }
            }
        }
        for s in 0..self.n_struct_nodes {
            if self.dir_s[s] {
                for c in 0..3 {
                    out.push(self.s_offset() + self.sd_dof(s, c));
                }
            }
        }
        out
    }
}

/// The seven nonzero blocks of the linearized operator.
#[derive(Debug, Clone)]
pub struct BlockMat<T> {
    pub a_m: Csr<T>,
    pub a_ms: Csr<T>,
    pub a_fm: Csr<T>,
    pub a_f: Csr<T>,
    pub a_fs: Csr<T>,
    pub a_sf: Csr<T>,
    pub a_s: Csr<T>,
}

impl<T: Real> BlockMat<T> {
    pub fn m_size(&self) -> usize {
        self.a_m.n_rows()
    }

    pub fn f_size(&self) -> usize {
        self.a_f.n_rows()
    }

    pub fn s_size(&self) -> usize {
        self.a_s.n_rows()
    }

    pub fn dim(&self) -> usize {
        self.m_size() + self.f_size() + self.s_size()
    }

    pub fn nnz(&self) -> usize {
        self.a_m.nnz()
            + self.a_ms.nnz()
            + self.a_fm.nnz()
            + self.a_f.nnz()
            + self.a_fs.nnz()
            + self.a_sf.nnz()
            + self.a_s.nnz()
    }

    /// y = K x on the flat layout `[m | f | s]`.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        let (nm, nf) = (self.m_size(), self.f_size());
        let ns = self.s_size();
        let (xm, rest) = x.split_at(nm);
        let (xf, xs) = rest.split_at(nf);
        for v in y.iter_mut() {
            *v = T::zero();
        }
        {
            let ym = &mut y[0..nm];
            self.a_m.matvec_acc(T::one(), xm, ym);
            self.a_ms.matvec_acc(T::one(), xs, ym);
        }
        {
            let yf = &mut y[nm..nm + nf];
            self.a_fm.matvec_acc(T::one(), xm, yf);
            self.a_f.matvec_acc(T::one(), xf, yf);
            self.a_fs.matvec_acc(T::one(), xs, yf);
        }
        {
            let ys = &mut y[nm + nf..nm + nf + ns];
            self.a_sf.matvec_acc(T::one(), xf, ys);
            self.a_s.matvec_acc(T::one(), xs, ys);
        }
    }

    /// Assembles the flat monolithic CSR (coarsest-level direct solves,
    /// matrix exports).
    pub fn to_csr(&self) -> Csr<T> {
        let (nm, nf, ns) = (self.m_size(), self.f_size(), self.s_size());
        let n = nm + nf + ns;
        let mut b = CsrBuilder::with_capacity(n, n, self.nnz());
        let mut put = |mat: &Csr<T>, ro: usize, co: usize| {
            for i in 0..mat.n_rows() {
                let (cols, vals) = mat.row(i);
                for (c, v) in cols.iter().zip(vals.iter()) {
                    b.add(ro + i, co + c, *v);
                }
            }
        };
        put(&self.a_m, 0, 0);
        put(&self.a_ms, 0, nm + nf);
        put(&self.a_fm, nm, 0);
        put(&self.a_f, nm, nm);
        put(&self.a_fs, nm, nm + nf);
        put(&self.a_sf, nm + nf, nm);
        put(&self.a_s, nm + nf, nm + nf);
        b.build()
    }
}

impl<T: Real> LinOp<T> for BlockMat<T> {
    fn dim(&self) -> usize {
        BlockMat::dim(self)
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        self.matvec(x, y);
    }
}

/// Linearized system `K dx = b` with `b = -R(X)`.
#[derive(Debug, Clone)]
pub struct BlockSystem<T> {
    pub k: BlockMat<T>,
    pub b: Vec<T>,
    pub map: DofMap,
}

/// History carried between time steps.
#[derive(Debug, Clone)]
pub struct StateHistory<T> {
    pub u: Vec<T>,
    pub d_m: Vec<T>,
    pub d_s: Vec<T>,
    pub v_s: Vec<T>,
    pub a_s: Vec<T>,
}

/// Nodal solution fields of the coupled problem.
#[derive(Debug, Clone)]
pub struct FsiState<T> {
    pub d_m: Vec<T>,
    pub u: Vec<T>,
    pub p_f: Vec<T>,
    pub d_s: Vec<T>,
    pub p_s: Vec<T>,
    pub prev: StateHistory<T>,
    /// Current time level (ms).
    pub time: T,
}

impl<T: Real> FsiState<T> {
    pub fn zeros(map: &DofMap) -> Self {
        let nf = map.n_fluid_nodes;
        let ns = map.n_struct_nodes;
        FsiState {
            d_m: vec![T::zero(); 3 * nf],
            u: vec![T::zero(); 3 * nf],
            p_f: vec![T::zero(); nf],
            d_s: vec![T::zero(); 3 * ns],
            p_s: vec![T::zero(); ns],
            prev: StateHistory {
                u: vec![T::zero(); 3 * nf],
                d_m: vec![T::zero(); 3 * nf],
                d_s: vec![T::zero(); 3 * ns],
                v_s: vec![T::zero(); 3 * ns],
                a_s: vec![T::zero(); 3 * ns],
            },
            time: T::zero(),
        }
    }

    /// X += dx with the flat `[d_m | u, p_f | d_s, p_s]` layout.
    pub fn apply_correction(&mut self, map: &DofMap, dx: &[T]) {
        assert_eq!(dx.len(), map.dim());
        let nf = map.n_fluid_nodes;
        let ns = map.n_struct_nodes;
        let (dm, rest) = dx.split_at(3 * nf);
        let (df, ds_part) = rest.split_at(4 * nf);
        for (a, b) in self.d_m.iter_mut().zip(dm.iter()) {
            *a += *b;
        }
        for (a, b) in self.u.iter_mut().zip(df[..3 * nf].iter()) {
            *a += *b;
        }
        for (a, b) in self.p_f.iter_mut().zip(df[3 * nf..].iter()) {
            *a += *b;
        }
        for (a, b) in self.d_s.iter_mut().zip(ds_part[..3 * ns].iter()) {
            *a += *b;
        }
        for (a, b) in self.p_s.iter_mut().zip(ds_part[3 * ns..].iter()) {
            *a += *b;
        }
    }

    /// Newmark history update after a converged step.
    pub fn advance_history(&mut self, scheme: &TimeScheme<T>) {
        let dt = scheme.dt;
        let beta = scheme.beta;
        let gamma = scheme.gamma;
        let n = self.d_s.len();
        let mut a_new = vec![T::zero(); n];
        for i in 0..n {
            a_new[i] = (self.d_s[i] - self.prev.d_s[i]) / (beta * dt * dt)
                - self.prev.v_s[i] / (beta * dt)
                - (T::of(0.5) / beta - T::one()) * self.prev.a_s[i];
        }
        let mut v_new = vec![T::zero(); n];
        for i in 0..n {
            v_new[i] =
                self.prev.v_s[i] + dt * (gamma * a_new[i] + (T::one() - gamma) * self.prev.a_s[i]);
        }
        self.prev.u.copy_from_slice(&self.u);
        self.prev.d_m.copy_from_slice(&self.d_m);
        self.prev.d_s.copy_from_slice(&self.d_s);
        self.prev.v_s = v_new;
        self.prev.a_s = a_new;
    }
}

const QP_A: f64 = 0.585_410_196_624_968_5;
const QP_B: f64 = 0.138_196_601_125_010_5;
/// Barycentric coordinates of the degree-2 4-point tetrahedron rule.
const QPS: [[f64; 4]; 4] = [
    [QP_A, QP_B, QP_B, QP_B],
    [QP_B, QP_A, QP_B, QP_B],
    [QP_B, QP_B, QP_A, QP_B],
    [QP_B, QP_B, QP_B, QP_A],
];

#[derive(Debug, Clone)]
struct Elem<T> {
    /// Global node ids (fluid) or structure-local ids (structure).
    nodes: [usize; 4],
    grads: [Vec3<T>; 4],
    vol: T,
    /// Reference element diameter (longest edge).
    h: T,
}

#[derive(Debug, Clone)]
struct StructElem<T> {
    base: Elem<T>,
    layer: Subdomain,
    fib: FiberStructure<T>,
}

#[derive(Debug, Clone)]
struct InflowFace<T> {
    nodes: [usize; 3],
    area: T,
    normal: Vec3<T>,
}

/// Precomputed mesh-derived assembly data. Immutable across a run.
#[derive(Debug, Clone)]
pub struct Assembler<T> {
    pub map: DofMap,
    fluid_elems: Vec<Elem<T>>,
    struct_elems: Vec<StructElem<T>>,
    inflow: Vec<InflowFace<T>>,
    pub params: ProblemParams<T>,
}

fn elem_geometry<T: Real>(mesh: &FsiMesh, tet: &[usize; 4]) -> (T, [Vec3<T>; 4], T) {
    let p: Vec<[f64; 3]> = tet.iter().map(|&n| mesh.nodes[n]).collect();
    let mut e = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for d in 0..3 {
            e[d][i] = T::of(p[i + 1][d] - p[0][d]);
        }
    }
    let vol = det3(&e) / T::of(6.0);
    let einv = inv3(&e);
    // gradients of barycentric coordinates 1..3 are the rows of E^-1
    let mut grads = [[T::zero(); 3]; 4];
    for i in 0..3 {
        for d in 0..3 {
            grads[i + 1][d] = einv[i][d];
        }
        for d in 0..3 {
            grads[0][d] -= einv[i][d];
        }
    }
    let mut h = T::zero();
    for i in 0..4 {
        for j in (i + 1)..4 {
            let mut d2 = T::zero();
            for d in 0..3 {
                let dd = T::of(p[i][d] - p[j][d]);
                d2 += dd * dd;
            }
            h = h.max(d2.sqrt());
        }
    }
    (vol, grads, h)
}

impl<T: Real> Assembler<T> {
    pub fn new(mesh: &FsiMesh, params: ProblemParams<T>) -> Self {
        let map = DofMap::new(mesh);
        let nf = mesh.n_fluid_nodes;
        let mut fluid_elems = Vec::new();
        let mut struct_elems = Vec::new();
        for (ti, tet) in mesh.tets.iter().enumerate() {
            let (vol, grads, h) = elem_geometry::<T>(mesh, tet);
            match mesh.subdomain[ti] {
                Subdomain::Lumen => fluid_elems.push(Elem {
                    nodes: *tet,
                    grads,
                    vol,
                    h,
                }),
                layer => {
                    // local fiber frame from the reference centroid
                    let mut cx = 0.0;
                    let mut cy = 0.0;
                    for &n in tet.iter() {
                        cx += mesh.nodes[n][0];
                        cy += mesh.nodes[n][1];
                    }
                    let th = cy.atan2(cx);
                    let e_circ = [T::of(-th.sin()), T::of(th.cos()), T::zero()];
                    let e_ax = [T::zero(), T::zero(), T::one()];
                    let alpha = match layer {
                        Subdomain::Media => params.media.alpha,
                        _ => params.adventitia.alpha,
                    };
                    let fib = FiberStructure::from_angle_in_frame(alpha, e_circ, e_ax);
                    let mut local = *tet;
                    for n in local.iter_mut() {
                        *n -= nf;
                    }
                    struct_elems.push(StructElem {
                        base: Elem {
                            nodes: local,
                            grads,
                            vol,
                            h,
                        },
                        layer,
                        fib,
                    });
                }
            }
        }
        let mut inflow = Vec::new();
        for f in &mesh.faces {
            if f.patch == Patch::Inflow {
                let area = T::of(mesh.face_area(f));
                let n = mesh.face_normal(f);
                inflow.push(InflowFace {
                    nodes: f.nodes,
                    area,
                    normal: [T::of(n[0]), T::of(n[1]), T::of(n[2])],
                });
            }
        }
        Assembler {
            map,
            fluid_elems,
            struct_elems,
            inflow,
            params,
        }
    }

    pub fn layer_params(&self, layer: Subdomain) -> &MaterialParams<T> {
        match layer {
            Subdomain::Media => &self.params.media,
            _ => &self.params.adventitia,
        }
    }

    /// Residual R(X) on the flat layout (interface rows routed, Dirichlet
    /// rows carry their natural residual until [`apply_dirichlet`]).
    pub fn residual(&self, state: &FsiState<T>) -> Result<Vec<T>, Error> {
        let (r, _) = self.assemble(state, false)?;
        Ok(r)
    }

    /// Jacobian and `b = -R(X)` without the Dirichlet pass.
    pub fn jacobian(&self, state: &FsiState<T>) -> Result<BlockSystem<T>, Error> {
        let (r, k) = self.assemble(state, true)?;
        let b = r.into_iter().map(|v| -v).collect();
        Ok(BlockSystem {
            k: k.unwrap(),
            b,
            map: self.map.clone(),
        })
    }

    /// Full linearized system with constrained rows/columns eliminated.
    pub fn system(&self, state: &FsiState<T>) -> Result<BlockSystem<T>, Error> {
        let sys = self.jacobian(state)?;
        Ok(apply_dirichlet(sys, &self.map))
    }

    fn assemble(
        &self,
        state: &FsiState<T>,
        want_matrix: bool,
    ) -> Result<(Vec<T>, Option<BlockMat<T>>), Error> {
        let map = &self.map;
        let (nm, nfl, ns) = (map.m_size(), map.f_size(), map.s_size());
        let mut r = vec![T::zero(); map.dim()];
        let est = 40 * (nm + nfl + ns);
        let mut bm = CsrBuilder::with_capacity(nm, nm, est / 4);
        let mut bms = CsrBuilder::with_capacity(nm, ns, map.iface.len() * 3);
        let mut bfm = CsrBuilder::with_capacity(nfl, nm, est);
        let mut bf = CsrBuilder::with_capacity(nfl, nfl, est);
        let mut bfs = CsrBuilder::with_capacity(nfl, ns, est / 4);
        let mut bsf = CsrBuilder::with_capacity(ns, nfl, map.iface.len() * 3);
        let mut bs = CsrBuilder::with_capacity(ns, ns, est / 2);

        self.mesh_motion(state, &mut r, want_matrix.then_some(&mut bm))?;
        self.fluid(
            state,
            &mut r,
            want_matrix.then_some((&mut bf, &mut bfm)),
        )?;
        self.structure(
            state,
            &mut r,
            want_matrix.then_some((&mut bs, &mut bfs)),
        )?;
        self.interface_rows(state, &mut r, want_matrix.then_some((&mut bm, &mut bms, &mut bs, &mut bsf)));
        self.inflow_load(state, &mut r);

        let k = want_matrix.then(|| BlockMat {
            a_m: bm.build(),
            a_ms: bms.build(),
            a_fm: bfm.build(),
            a_f: bf.build(),
            a_fs: bfs.build(),
            a_sf: bsf.build(),
            a_s: bs.build(),
        });
        Ok((r, k))
    }

    /// Mesh-motion Laplacian rows `(grad d_m, grad v)` for non-interface test
    /// nodes; columns include the interface unknowns.
    fn mesh_motion(
        &self,
        state: &FsiState<T>,
        r: &mut [T],
        mut kb: Option<&mut CsrBuilder<T>>,
    ) -> Result<(), Error> {
        let map = &self.map;
        for e in &self.fluid_elems {
            // Gd = sum_a d_a (x) g_a
            let mut gd = [[T::zero(); 3]; 3];
            for (a, &n) in e.nodes.iter().enumerate() {
                for i in 0..3 {
                    for d in 0..3 {
                        gd[i][d] += state.d_m[3 * n + i] * e.grads[a][d];
                    }
                }
            }
            for (a, &n) in e.nodes.iter().enumerate() {
                if map.f2s[n].is_some() && !map.dir_m[n] {
                    continue; // interface constraint row instead
                }
                for i in 0..3 {
                    let row = 3 * n + i;
                    r[row] += e.vol * dot3(&gd[i], &e.grads[a]);
                    if let Some(kb) = kb.as_deref_mut() {
                        for (b, &nb) in e.nodes.iter().enumerate() {
                            let gab = e.vol * dot3(&e.grads[a], &e.grads[b]);
                            kb.add(row, 3 * nb + i, gab);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Interface identity rows: `d_m - d_s = 0` (mesh block rows) and
    /// `(d_s - d_s_prev)/dt - u = 0` (structure block rows).
    fn interface_rows(
        &self,
        state: &FsiState<T>,
        r: &mut [T],
        kb: Option<(
            &mut CsrBuilder<T>,
            &mut CsrBuilder<T>,
            &mut CsrBuilder<T>,
            &mut CsrBuilder<T>,
        )>,
    ) {
        let map = &self.map;
        let s_off = map.s_offset();
        let inv_dt = T::one() / self.params.scheme.dt;
        let mut kb = kb;
        for &(n, sl) in &map.iface {
            for c in 0..3 {
                let mrow = 3 * n + c;
                r[mrow] += state.d_m[3 * n + c] - state.d_s[3 * sl + c];
                let srow = s_off + map.sd_dof(sl, c);
                r[srow] += (state.d_s[3 * sl + c] - state.prev.d_s[3 * sl + c]) * inv_dt
                    - state.u[3 * n + c];
                if let Some((bm, bms, bs, bsf)) = kb.as_mut() {
                    bm.add(mrow, mrow, T::one());
                    bms.add(mrow, map.sd_dof(sl, c), -T::one());
                    bs.add(map.sd_dof(sl, c), map.sd_dof(sl, c), inv_dt);
                    bsf.add(map.sd_dof(sl, c), map.u_dof(n, c), -T::one());
                }
            }
        }
    }

    /// Inflow traction: `-<t, v>` with `t = -g n_out` (a pressure load).
    fn inflow_load(&self, state: &FsiState<T>, r: &mut [T]) {
        let g = self.params.g_at(state.time);
        if g == T::zero() {
            return;
        }
        let map = &self.map;
        let f_off = map.f_offset();
        let third = T::of(1.0 / 3.0);
        for face in &self.inflow {
            for &n in &face.nodes {
                for c in 0..3 {
                    // t = -g n_out; R -= t_c * area/3
                    r[f_off + map.u_dof(n, c)] += g * face.normal[c] * face.area * third;
                }
            }
        }
    }

    /// ALE Navier-Stokes rows (momentum + continuity) with SUPG/PSPG.
    #[allow(clippy::needless_range_loop)]
    fn fluid(
        &self,
        state: &FsiState<T>,
        r: &mut [T],
        mut kb: Option<(&mut CsrBuilder<T>, &mut CsrBuilder<T>)>,
    ) -> Result<(), Error> {
        let map = &self.map;
        let f_off = map.f_offset();
        let rho = self.params.rho_f;
        let mu = self.params.mu;
        let dt = self.params.scheme.dt;
        let inv_dt = T::one() / dt;
        let nu = mu / rho;
        let quarter = T::of(0.25);

        for e in &self.fluid_elems {
            // nodal values
            let mut dm = [[T::zero(); 3]; 4];
            let mut dmp = [[T::zero(); 3]; 4];
            let mut un = [[T::zero(); 3]; 4];
            let mut up = [[T::zero(); 3]; 4];
            let mut pn = [T::zero(); 4];
            for (a, &n) in e.nodes.iter().enumerate() {
                for c in 0..3 {
                    dm[a][c] = state.d_m[3 * n + c];
                    dmp[a][c] = state.prev.d_m[3 * n + c];
                    un[a][c] = state.u[3 * n + c];
                    up[a][c] = state.prev.u[3 * n + c];
                }
                pn[a] = state.p_f[n];
            }

            // element-constant kinematics
            let mut gdm = [[T::zero(); 3]; 3];
            let mut gu = [[T::zero(); 3]; 3];
            let mut grad_p = [T::zero(); 3];
            for a in 0..4 {
                for i in 0..3 {
                    for d in 0..3 {
                        gdm[i][d] += dm[a][i] * e.grads[a][d];
                        gu[i][d] += un[a][i] * e.grads[a][d];
                    }
                }
                for d in 0..3 {
                    // differencing against node 0 keeps constant fields exact
                    grad_p[d] += (pn[a] - pn[0]) * e.grads[a][d];
                }
            }
            let f = add3(&ident3(), &gdm);
            let jf = det3(&f);
            if jf <= T::zero() || !jf.is_finite() {
                return Err(Error::NonPositiveJacobian {
                    context: "fluid element",
                    j: jf.as_f64(),
                });
            }
            let fi = inv3(&f);
            let gs = matmul3(&gu, &fi); // spatial velocity gradient
            let gspat: [Vec3<T>; 4] = [
                tmatvec3(&fi, &e.grads[0]),
                tmatvec3(&fi, &e.grads[1]),
                tmatvec3(&fi, &e.grads[2]),
                tmatvec3(&fi, &e.grads[3]),
            ];
            let sp = tmatvec3(&fi, &grad_p); // spatial pressure gradient
            let sig_v = scale3(&add3(&gs, &crate::tensor::transpose3(&gs)), mu);

            // stabilization parameter from the mean velocity
            let mut ubar = [T::zero(); 3];
            for a in 0..4 {
                for c in 0..3 {
                    ubar[c] += un[a][c] * quarter;
                }
            }
            let h2 = e.h * e.h;
            let c1 = (T::of(2.0) * inv_dt) * (T::of(2.0) * inv_dt);
            let c3 = (T::of(4.0) * nu / h2) * (T::of(4.0) * nu / h2);
            let tau_m2 = c1 + T::of(4.0) / h2 * dot3(&ubar, &ubar) + c3;
            let tau = T::one() / tau_m2.sqrt();
            // d tau / d ubar_j = -4 tau^3 ubar_j / h^2
            let dtau_du = |j: usize| -T::of(4.0) * tau * tau * tau * ubar[j] / h2 * quarter;

            let w_q = e.vol * quarter;
            for lam in QPS.iter() {
                let phi: [T; 4] = [T::of(lam[0]), T::of(lam[1]), T::of(lam[2]), T::of(lam[3])];
                let mut u_q = [T::zero(); 3];
                let mut up_q = [T::zero(); 3];
                let mut w_vec = [T::zero(); 3];
                let mut p_q = T::zero();
                for a in 0..4 {
                    for c in 0..3 {
                        u_q[c] += phi[a] * un[a][c];
                        up_q[c] += phi[a] * up[a][c];
                        w_vec[c] += phi[a] * (dm[a][c] - dmp[a][c]) * inv_dt;
                    }
                    p_q += phi[a] * pn[a];
                }
                let a_q = [u_q[0] - w_vec[0], u_q[1] - w_vec[1], u_q[2] - w_vec[2]];
                let accel = [
                    (u_q[0] - up_q[0]) * inv_dt,
                    (u_q[1] - up_q[1]) * inv_dt,
                    (u_q[2] - up_q[2]) * inv_dt,
                ];
                let conv = matvec3(&gs, &a_q);
                // Eulerian strong momentum residual (viscous part vanishes for P1)
                let r_m = [
                    rho * (accel[0] + conv[0]) + sp[0],
                    rho * (accel[1] + conv[1]) + sp[1],
                    rho * (accel[2] + conv[2]) + sp[2],
                ];
                let sa: [T; 4] = [
                    dot3(&gspat[0], &a_q),
                    dot3(&gspat[1], &a_q),
                    dot3(&gspat[2], &a_q),
                    dot3(&gspat[3], &a_q),
                ];

                for (a, &n) in e.nodes.iter().enumerate() {
                    // momentum rows
                    for i in 0..3 {
                        let row = f_off + map.u_dof(n, i);
                        let mut val = rho * jf * (accel[i] + conv[i]) * phi[a];
                        // stress flux: viscous (constant) + pressure at qp
                        val += jf * (dot3(&sig_v[i], &gspat[a]) - p_q * gspat[a][i]);
                        // SUPG
                        val += tau * rho * jf * sa[a] * r_m[i];
                        r[row] += w_q * val;
                    }
                    // continuity row with PSPG
                    {
                        let row = f_off + map.pf_dof(n);
                        let div = jf * trace3(&gs);
                        let mut val = -div * phi[a];
                        val -= tau * jf * dot3(&gspat[a], &r_m);
                        r[row] += w_q * val;
                    }
                }

                if let Some((bf, bfm)) = kb.as_mut() {
                    for (a, &n) in e.nodes.iter().enumerate() {
                        for (b, &nb) in e.nodes.iter().enumerate() {
                            // --- within-fluid columns (u, p) ---
                            for j in 0..3 {
                                let col_u = map.u_dof(nb, j);
                                let sb = dot3(&gspat[b], &a_q);
                                let dtau = dtau_du(j);
                                // momentum rows
                                for i in 0..3 {
                                    let row = map.u_dof(n, i);
                                    let kron = if i == j { T::one() } else { T::zero() };
                                    let mut v = rho
                                        * jf
                                        * (kron * phi[b] * inv_dt
                                            + kron * sb
                                            + phi[b] * gs[i][j])
                                        * phi[a];
                                    // viscous flux derivative
                                    v += jf
                                        * mu
                                        * (kron * dot3(&gspat[a], &gspat[b])
                                            + gspat[a][j] * gspat[b][i]);
                                    // SUPG derivative
                                    let dr_i = rho
                                        * (kron * phi[b] * inv_dt
                                            + kron * sb
                                            + phi[b] * gs[i][j]);
                                    let dsa = phi[b] * gspat[a][j];
                                    v += rho
                                        * jf
                                        * (tau * dsa * r_m[i]
                                            + tau * sa[a] * dr_i
                                            + dtau * sa[a] * r_m[i]);
                                    bf.add(row, col_u, w_q * v);
                                }
                                // continuity row
                                {
                                    let row = map.pf_dof(n);
                                    let mut v = -jf * gspat[b][j] * phi[a];
                                    let mut dr = [
                                        rho * phi[b] * gs[0][j],
                                        rho * phi[b] * gs[1][j],
                                        rho * phi[b] * gs[2][j],
                                    ];
                                    dr[j] += rho * (phi[b] * inv_dt + sb);
                                    v -= tau * jf * dot3(&gspat[a], &dr);
                                    v -= dtau * jf * dot3(&gspat[a], &r_m);
                                    bf.add(row, col_u, w_q * v);
                                }
                            }
                            // pressure column
                            {
                                let col_p = map.pf_dof(nb);
                                for i in 0..3 {
                                    let row = map.u_dof(n, i);
                                    let mut v = -phi[b] * jf * gspat[a][i];
                                    v += tau * rho * jf * sa[a] * gspat[b][i];
                                    bf.add(row, col_p, w_q * v);
                                }
                                let row = map.pf_dof(n);
                                let v = -tau * jf * dot3(&gspat[a], &gspat[b]);
                                bf.add(row, col_p, w_q * v);
                            }
                            // --- mesh-displacement columns ---
                            for j in 0..3 {
                                let col_m = 3 * nb + j;
                                let fi_col = [fi[0][j], fi[1][j], fi[2][j]];
                                let dj = jf * dot3(&e.grads[b], &fi_col);
                                let gs_col = [gs[0][j], gs[1][j], gs[2][j]];
                                let sb = dot3(&gspat[b], &a_q);
                                // d(conv) = -(sb + phi_b/dt) gs_col
                                let dconv_f = -(sb + phi[b] * inv_dt);
                                // d(sp) = -(fi_col . grad_p) gspat_b
                                let dsp_f = -dot3(&fi_col, &grad_p);
                                let dr = [
                                    rho * dconv_f * gs_col[0] + dsp_f * gspat[b][0],
                                    rho * dconv_f * gs_col[1] + dsp_f * gspat[b][1],
                                    rho * dconv_f * gs_col[2] + dsp_f * gspat[b][2],
                                ];
                                // d(sa_a) and d(gspat_a)
                                let ga_dot = dot3(&fi_col, &e.grads[a]);
                                let dsa = -ga_dot * sb - phi[b] * gspat[a][j] * inv_dt;
                                let dgspat_a_r = -ga_dot * dot3(&gspat[b], &r_m);
                                for i in 0..3 {
                                    let row = map.u_dof(n, i);
                                    // time + convection with dJ and dconv
                                    let mut v = rho
                                        * (dj * (accel[i] + conv[i])
                                            + jf * dconv_f * gs_col[i])
                                        * phi[a];
                                    // viscous flux: dJ sig gspat_a + J dsig gspat_a + J sig dgspat_a
                                    v += dj * dot3(&sig_v[i], &gspat[a]);
                                    {
                                        // dsig = mu (dGs + dGs^T), dGs = -gs_col (x) gspat_b
                                        let t1 = -gs_col[i] * dot3(&gspat[b], &gspat[a]);
                                        let t2 = -gspat[b][i] * dot3(&gs_col, &gspat[a]);
                                        v += jf * mu * (t1 + t2);
                                        // sig * dgspat_a, dgspat_a = -ga_dot gspat_b
                                        v += jf * (-ga_dot) * dot3(&sig_v[i], &gspat[b]);
                                    }
                                    // pressure flux: -p (dJ gspat_a + J dgspat_a)
                                    v += -p_q * (dj * gspat[a][i] + jf * (-ga_dot) * gspat[b][i]);
                                    // SUPG: tau rho [ dJ sa r + J dsa r + J sa dr ]
                                    v += tau
                                        * rho
                                        * (dj * sa[a] * r_m[i]
                                            + jf * dsa * r_m[i]
                                            + jf * sa[a] * dr[i]);
                                    bfm.add(row, col_m, w_q * v);
                                }
                                // continuity + PSPG
                                {
                                    let row = map.pf_dof(n);
                                    let tr_dgs = -dot3(&gs_col, &gspat[b]);
                                    let mut v = -(dj * trace3(&gs) + jf * tr_dgs) * phi[a];
                                    v -= tau
                                        * (dj * dot3(&gspat[a], &r_m)
                                            + jf * dgspat_a_r
                                            + jf * dot3(&gspat[a], &dr));
                                    bfm.add(row, col_m, w_q * v);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Structure momentum (Newmark) and pressure rows; interface momentum
    /// rows are routed into the paired fluid velocity rows.
    #[allow(clippy::needless_range_loop)]
    fn structure(
        &self,
        state: &FsiState<T>,
        r: &mut [T],
        mut kb: Option<(&mut CsrBuilder<T>, &mut CsrBuilder<T>)>,
    ) -> Result<(), Error> {
        let map = &self.map;
        let f_off = map.f_offset();
        let s_off = map.s_offset();
        let scheme = self.params.scheme;
        let quarter = T::of(0.25);

        for e in &self.struct_elems {
            let params = self.layer_params(e.layer);
            let rho = params.rho_s;
            let beta1 = scheme.beta1(rho);
            let beta2 = scheme.beta2(rho);
            let hist_c = rho * (T::of(0.5) / scheme.beta - T::one());

            let mut ds = [[T::zero(); 3]; 4];
            let mut dsp = [[T::zero(); 3]; 4];
            let mut vsp = [[T::zero(); 3]; 4];
            let mut asp = [[T::zero(); 3]; 4];
            let mut ps = [T::zero(); 4];
            for (a, &sl) in e.base.nodes.iter().enumerate() {
                for c in 0..3 {
                    ds[a][c] = state.d_s[3 * sl + c];
                    dsp[a][c] = state.prev.d_s[3 * sl + c];
                    vsp[a][c] = state.prev.v_s[3 * sl + c];
                    asp[a][c] = state.prev.a_s[3 * sl + c];
                }
                ps[a] = state.p_s[sl];
            }

            let mut gd = [[T::zero(); 3]; 3];
            for a in 0..4 {
                for i in 0..3 {
                    for d in 0..3 {
                        gd[i][d] += ds[a][i] * e.base.grads[a][d];
                    }
                }
            }
            let kin = crate::materials::compute_kinematics(&gd).map_err(|_| {
                Error::NonPositiveJacobian {
                    context: "structure element",
                    j: det3(&add3(&ident3(), &gd)).as_f64(),
                }
            })?;
            let fs = kin.f;
            let fsi = inv3(&fs);
            let st0: StressTangent<T> = stress_and_tangent(&kin, T::zero(), params, Some(&e.fib));
            let st1: StressTangent<T> = stress_and_tangent(&kin, T::one(), params, Some(&e.fib));
            let mut ccp: Voigt6<T> = st1.cc;
            for i in 0..6 {
                for j in 0..6 {
                    ccp[i][j] -= st0.cc[i][j];
                }
            }
            let fs_s0 = matmul3(&fs, &st0.s);
            let fs_sp = matmul3(&fs, &st0.sp);

            // per-column symmetric increments dC and their tangent actions
            let mut ds0_bj = [[[[T::zero(); 3]; 3]; 3]; 4];
            let mut dsp_bj = [[[[T::zero(); 3]; 3]; 3]; 4];
            if kb.is_some() {
                for b in 0..4 {
                    for j in 0..3 {
                        let fj = [fs[j][0], fs[j][1], fs[j][2]];
                        let mut dc = outer3(&fj, &e.base.grads[b]);
                        let dc2 = outer3(&e.base.grads[b], &fj);
                        axpy3(&mut dc, T::one(), &dc2);
                        ds0_bj[b][j] = voigt_apply_dc(&st0.cc, &dc);
                        dsp_bj[b][j] = voigt_apply_dc(&ccp, &dc);
                    }
                }
            }

            let w_q = e.base.vol * quarter;
            for lam in QPS.iter() {
                let phi: [T; 4] = [T::of(lam[0]), T::of(lam[1]), T::of(lam[2]), T::of(lam[3])];
                let mut d_q = [T::zero(); 3];
                let mut hist_q = [T::zero(); 3];
                let mut p_q = T::zero();
                for a in 0..4 {
                    for c in 0..3 {
                        d_q[c] += phi[a] * ds[a][c];
                        hist_q[c] += phi[a]
                            * (beta2 * dsp[a][c] + beta1 * vsp[a][c] + hist_c * asp[a][c]);
                    }
                    p_q += phi[a] * ps[a];
                }
                // F S at this qp (linear in p)
                let mut fs_s = fs_s0;
                axpy3(&mut fs_s, p_q, &fs_sp);

                for (a, &sl) in e.base.nodes.iter().enumerate() {
                    if map.dir_s[sl] {
                        continue;
                    }
                    let routed = map.s2f[sl];
                    for i in 0..3 {
                        let row = match routed {
                            Some(nf) => f_off + map.u_dof(nf, i),
                            None => s_off + map.sd_dof(sl, i),
                        };
                        let mut val = (beta2 * d_q[i] - hist_q[i]) * phi[a];
                        val += dot3(&fs_s[i], &e.base.grads[a]);
                        r[row] += w_q * val;
                    }
                }
                // pressure equation rows
                for (a, &sl) in e.base.nodes.iter().enumerate() {
                    let row = s_off + map.ps_dof(sl);
                    let val = (-(kin.j - T::one()) - p_q / params.kappa) * phi[a];
                    r[row] += w_q * val;
                }

                if let Some((bs, bfs)) = kb.as_mut() {
                    for (a, &sl) in e.base.nodes.iter().enumerate() {
                        let routed = if map.dir_s[sl] { None } else { map.s2f[sl] };
                        let skip_mom = map.dir_s[sl];
                        for (b, &slb) in e.base.nodes.iter().enumerate() {
                            // momentum wrt displacement
                            if !skip_mom {
                                for j in 0..3 {
                                    let col = map.sd_dof(slb, j);
                                    let mut dsq = ds0_bj[b][j];
                                    axpy3(&mut dsq, p_q, &dsp_bj[b][j]);
                                    let s_q = {
                                        let mut s = st0.s;
                                        axpy3(&mut s, p_q, &st0.sp);
                                        s
                                    };
                                    let sg_b = matvec3(&s_q, &e.base.grads[b]);
                                    let fdsg_a = matvec3(&dsq, &e.base.grads[a]);
                                    let fdsg_a = matvec3(&fs, &fdsg_a);
                                    for i in 0..3 {
                                        let row = match routed {
                                            Some(nf) => (true, map.u_dof(nf, i)),
                                            None => (false, map.sd_dof(sl, i)),
                                        };
                                        let kron = if i == j { T::one() } else { T::zero() };
                                        let mut v = kron * beta2 * phi[a] * phi[b];
                                        // geometric part: (H S) grad_a with H = e_j g_b^T
                                        v += kron * dot3(&sg_b, &e.base.grads[a]);
                                        // material part: F dS grad_a
                                        v += fdsg_a[i];
                                        let v = w_q * v;
                                        match row {
                                            (true, rr) => bfs.add(rr, col, v),
                                            (false, rr) => bs.add(rr, col, v),
                                        }
                                    }
                                }
                                // momentum wrt pressure
                                {
                                    let col = map.ps_dof(slb);
                                    let fspg_a = matvec3(&fs_sp, &e.base.grads[a]);
                                    for i in 0..3 {
                                        let v = w_q * phi[b] * fspg_a[i];
                                        match routed {
                                            Some(nf) => bfs.add(map.u_dof(nf, i), col, v),
                                            None => bs.add(map.sd_dof(sl, i), col, v),
                                        }
                                    }
                                }
                            }
                            // pressure equation columns
                            {
                                let prow = map.ps_dof(sl);
                                for j in 0..3 {
                                    let fi_col = [fsi[0][j], fsi[1][j], fsi[2][j]];
                                    let dj = kin.j * dot3(&e.base.grads[b], &fi_col);
                                    bs.add(prow, map.sd_dof(slb, j), w_q * (-dj) * phi[a]);
                                }
                                bs.add(
                                    prow,
                                    map.ps_dof(slb),
                                    -w_q * phi[a] * phi[b] / params.kappa,
                                );
                            }
                        }
                    }
                }
            }

            // optional pressure stabilization (volume term, constant grads)
            if self.params.structure_pspg != T::zero() {
                let tau_s =
                    self.params.structure_pspg * e.base.h * e.base.h / (T::of(2.0) * params.c10);
                let mut gp = [T::zero(); 3];
                for a in 1..4 {
                    for d in 0..3 {
                        gp[d] += (ps[a] - ps[0]) * e.base.grads[a][d];
                    }
                }
                for (a, &sl) in e.base.nodes.iter().enumerate() {
                    let row = s_off + map.ps_dof(sl);
                    r[row] -= tau_s * e.base.vol * dot3(&gp, &e.base.grads[a]);
                    if let Some((bs, _)) = kb.as_mut() {
                        for (b, &slb) in e.base.nodes.iter().enumerate() {
                            bs.add(
                                map.ps_dof(sl),
                                map.ps_dof(slb),
                                -tau_s * e.base.vol * dot3(&e.base.grads[a], &e.base.grads[b]),
                            );
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Replaces constrained rows by identity rows with zero right-hand side and
/// drops the corresponding columns (corrections vanish on Dirichlet DOFs).
pub fn apply_dirichlet<T: Real>(sys: BlockSystem<T>, map: &DofMap) -> BlockSystem<T> {
    let nf = map.n_fluid_nodes;
    let ns = map.n_struct_nodes;
    let mut m_row = vec![false; map.m_size()];
    let mut f_row = vec![false; map.f_size()];
    let mut s_row = vec![false; map.s_size()];
    for n in 0..nf {
        if map.dir_m[n] {
            for c in 0..3 {
                m_row[3 * n + c] = true;
            }
        }
        if map.dir_u[n] {
            for c in 0..3 {
                f_row[map.u_dof(n, c)] = true;
            }
        }
    }
    for s in 0..ns {
        if map.dir_s[s] {
            for c in 0..3 {
                s_row[map.sd_dof(s, c)] = true;
            }
        }
    }

    let filter = |m: &Csr<T>, rows: &[bool], cols: &[bool], diag: bool| -> Csr<T> {
        let mut b = CsrBuilder::with_capacity(m.n_rows(), m.n_cols(), m.nnz());
        for i in 0..m.n_rows() {
            if rows[i] {
                if diag {
                    b.add(i, i, T::one());
                }
                continue;
            }
            let (cs, vs) = m.row(i);
            for (c, v) in cs.iter().zip(vs.iter()) {
                if !cols[*c] {
                    b.add(i, *c, *v);
                }
            }
        }
        b.build()
    };

    let k = BlockMat {
        a_m: filter(&sys.k.a_m, &m_row, &m_row, true),
        a_ms: filter(&sys.k.a_ms, &m_row, &s_row, false),
        a_fm: filter(&sys.k.a_fm, &f_row, &m_row, false),
        a_f: filter(&sys.k.a_f, &f_row, &f_row, true),
        a_fs: filter(&sys.k.a_fs, &f_row, &s_row, false),
        a_sf: filter(&sys.k.a_sf, &s_row, &f_row, false),
        a_s: filter(&sys.k.a_s, &s_row, &s_row, true),
    };
    let mut b = sys.b;
    for i in map.constrained_flat() {
        b[i] = T::zero();
    }
    BlockSystem { k, b, map: sys.map }
}
