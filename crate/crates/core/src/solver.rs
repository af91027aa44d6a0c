//! Monolithic solution methods for the linearized FSI system: GMRES with the
//! block preconditioners, stationary coupled AMG/AMLI, and AMG/AMLI
//! preconditioned (F)GMRES.

use crate::assembly::{BlockMat, BlockSystem, DofMap};
use crate::blockprec::{BlockPreconditioner, PrecondKind};
use crate::error::Error;
use crate::fsimg::{build_hierarchy, AmgPrecond, AmliPrecond, MgHierarchy, SmootherConfig};
use crate::krylov::{fgmres, gmres, KrylovConfig, SolveReport};
use crate::newton::LinearFsiSolver;
use crate::scalar::Real;
use crate::subamg::{build_saddle_hierarchy, build_scalar_hierarchy, SubAmgOpts, SubHierarchy, SubKind};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    /// GMRES with one of the block-factorization preconditioners.
    GmresBlock(PrecondKind),
    /// Stationary coupled AMG iteration.
    Amg,
    /// Stationary coupled AMLI (K-cycle) iteration.
    Amli,
    AmgGmres,
    AmgFgmres,
    AmliGmres,
    AmliFgmres,
}

impl MethodKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "amg" => MethodKind::Amg,
            "amli" => MethodKind::Amli,
            "amg_gmres" => MethodKind::AmgGmres,
            "amg_fgmres" => MethodKind::AmgFgmres,
            "amli_gmres" => MethodKind::AmliGmres,
            "amli_fgmres" => MethodKind::AmliFgmres,
            other => {
                let kind = other.strip_prefix("gmres_").and_then(PrecondKind::parse)?;
                MethodKind::GmresBlock(kind)
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            MethodKind::GmresBlock(k) => format!("gmres_{}", k.name()),
            MethodKind::Amg => "amg".into(),
            MethodKind::Amli => "amli".into(),
            MethodKind::AmgGmres => "amg_gmres".into(),
            MethodKind::AmgFgmres => "amg_fgmres".into(),
            MethodKind::AmliGmres => "amli_gmres".into(),
            MethodKind::AmliFgmres => "amli_fgmres".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub method: MethodKind,
    pub smoother: SmootherConfig,
    pub sub_opts: SubAmgOpts,
    /// Coarsen the coupled hierarchy until this many unknowns, then factorize.
    pub coarse_limit: usize,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: MethodKind::AmgGmres,
            smoother: SmootherConfig::default(),
            sub_opts: SubAmgOpts::default(),
            coarse_limit: 2000,
            max_iter: 800,
        }
    }
}

/// Builds the three sub-problem hierarchies from the diagonal blocks.
pub fn build_sub_hierarchies<T: Real>(
    k: &BlockMat<T>,
    map: &DofMap,
    opts: &SubAmgOpts,
) -> Result<(SubHierarchy<T>, SubHierarchy<T>, SubHierarchy<T>), Error> {
    let sub_m = build_scalar_hierarchy(&k.a_m, opts)?;
    let nf = map.n_fluid_nodes;
    let ns = map.n_struct_nodes;
    let sub_f = build_saddle_hierarchy(&k.a_f, (3 * nf, nf), SubKind::Fluid, opts)?;
    let sub_s = build_saddle_hierarchy(&k.a_s, (3 * ns, ns), SubKind::Structure, opts)?;
    Ok((sub_m, sub_f, sub_s))
}

/// Builds the coupled hierarchy for the given system.
pub fn build_coupled_hierarchy<T: Real>(
    sys: &BlockSystem<T>,
    cfg: &SolverConfig,
) -> Result<MgHierarchy<T>, Error> {
    let (sub_m, sub_f, sub_s) = build_sub_hierarchies(&sys.k, &sys.map, &cfg.sub_opts)?;
    build_hierarchy(
        &sys.k,
        sub_m,
        sub_f,
        sub_s,
        cfg.smoother.clone(),
        cfg.coarse_limit,
    )
}

/// The configurable monolithic solver used by the Newton driver and the
/// benchmark harness.
#[derive(Debug, Clone)]
pub struct MonolithicSolver {
    pub cfg: SolverConfig,
    name: String,
}

impl MonolithicSolver {
    pub fn new(cfg: SolverConfig) -> Self {
        let name = cfg.method.name();
        MonolithicSolver { cfg, name }
    }

    pub fn with_method(method: MethodKind) -> Self {
        Self::new(SolverConfig {
            method,
            ..Default::default()
        })
    }

    pub fn solve_system<T: Real>(
        &self,
        sys: &BlockSystem<T>,
        tol: f64,
    ) -> Result<(Vec<T>, SolveReport), Error> {
        let start = Instant::now();
        let kcfg = KrylovConfig {
            tol,
            max_iter: self.cfg.max_iter,
            restart: None,
        };
        let out = match self.cfg.method {
            MethodKind::GmresBlock(kind) => {
                let (sub_m, sub_f, sub_s) =
                    build_sub_hierarchies(&sys.k, &sys.map, &self.cfg.sub_opts)?;
                let precond = BlockPreconditioner::new(kind, &sys.k, &sub_m, &sub_f, &sub_s);
                gmres(&sys.k, &sys.b, &precond, &kcfg)?
            }
            MethodKind::Amg | MethodKind::Amli => {
                let hier = build_coupled_hierarchy(sys, &self.cfg)?;
                let amli = self.cfg.method == MethodKind::Amli;
                let (x, its, converged, history) =
                    hier.solve(&sys.b, tol, self.cfg.max_iter.min(100), amli);
                (
                    x,
                    SolveReport {
                        iterations: its,
                        residual_history: history,
                        converged,
                        wall_time: 0.0,
                    },
                )
            }
            MethodKind::AmgGmres => {
                let hier = build_coupled_hierarchy(sys, &self.cfg)?;
                gmres(&sys.k, &sys.b, &AmgPrecond(&hier), &kcfg)?
            }
            MethodKind::AmliGmres => {
                let hier = build_coupled_hierarchy(sys, &self.cfg)?;
                gmres(&sys.k, &sys.b, &AmliPrecond(&hier), &kcfg)?
            }
            MethodKind::AmgFgmres => {
                let hier = build_coupled_hierarchy(sys, &self.cfg)?;
                fgmres(
                    &sys.k,
                    &sys.b,
                    |r: &[T], z: &mut [T]| {
                        for v in z.iter_mut() {
                            *v = T::zero();
                        }
                        hier.amg_cycle(0, z, r);
                    },
                    &kcfg,
                )?
            }
            MethodKind::AmliFgmres => {
                let hier = build_coupled_hierarchy(sys, &self.cfg)?;
                fgmres(
                    &sys.k,
                    &sys.b,
                    |r: &[T], z: &mut [T]| {
                        for v in z.iter_mut() {
                            *v = T::zero();
                        }
                        hier.amli_cycle(0, z, r);
                    },
                    &kcfg,
                )?
            }
        };
        let (x, mut report) = out;
        report.wall_time = start.elapsed().as_secs_f64();
        Ok((x, report))
    }
}

impl<T: Real> LinearFsiSolver<T> for MonolithicSolver {
    fn solve(&self, sys: &BlockSystem<T>, tol: f64) -> Result<(Vec<T>, SolveReport), Error> {
        self.solve_system(sys, tol)
    }
    fn name(&self) -> &str {
        &self.name
    }
}
