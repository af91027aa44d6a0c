//! Benchmark harness: iteration-count tables over models x tiers x methods,
//! reported for the first Newton iteration of the first time step.

use crate::assembly::{Assembler, BlockSystem, FsiState};
use crate::config::{parse_model, RunConfig, Tier};
use crate::driver::{build_mesh, problem_params, solver_config};
use crate::error::Error;
use crate::solver::{MethodKind, MonolithicSolver};
use crate::util::fmt_g17;
use std::io::Write;

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub model: String,
    pub tier: String,
    pub method: String,
    pub omega: f64,
    pub dof: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub wall_time: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn to_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "model,tier,method,omega,dof,iterations,converged,final_residual,wall_time_s,error"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.model,
                r.tier,
                r.method,
                fmt_g17(r.omega),
                r.dof,
                r.iterations,
                r.converged,
                fmt_g17(r.final_residual),
                fmt_g17(r.wall_time),
                r.error.as_deref().unwrap_or("")
            )?;
        }
        Ok(())
    }

    pub fn find(&self, model: &str, tier: &str, method: &str) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.tier == tier && r.method == method)
    }
}

/// First-time-step, first-Newton-iteration system for the given model and
/// tier (shared by every method benchmarked on that cell).
pub fn first_step_system(cfg: &RunConfig) -> Result<(BlockSystem<f64>, usize), Error> {
    let mesh = build_mesh(cfg)?;
    let dof = mesh.total_dof();
    let params = problem_params(cfg);
    let asm = Assembler::new(&mesh, params);
    let mut state = FsiState::zeros(&asm.map);
    state.time = cfg.time.dt;
    let sys = asm.system(&state)?;
    Ok((sys, dof))
}

/// Runs the config's benchmark matrix. Failures are recorded per cell and
/// the sweep continues.
pub fn bench(cfg: &RunConfig) -> Result<BenchTable, Error> {
    let mut table = BenchTable::default();
    let omegas = if cfg.bench.omegas.is_empty() {
        vec![cfg.solver.omega]
    } else {
        cfg.bench.omegas.clone()
    };
    for model_s in &cfg.bench.models {
        let model = match parse_model(model_s) {
            Some(m) => m,
            None => {
                table.rows.push(BenchRow {
                    model: model_s.clone(),
                    tier: String::new(),
                    method: String::new(),
                    omega: 0.0,
                    dof: 0,
                    iterations: 0,
                    converged: false,
                    final_residual: f64::NAN,
                    wall_time: 0.0,
                    error: Some("unknown model".into()),
                });
                continue;
            }
        };
        for tier_s in &cfg.bench.tiers {
            let tier = match Tier::parse(tier_s) {
                Some(t) => t,
                None => {
                    table.rows.push(BenchRow {
                        model: model_s.clone(),
                        tier: tier_s.clone(),
                        method: String::new(),
                        omega: 0.0,
                        dof: 0,
                        iterations: 0,
                        converged: false,
                        final_residual: f64::NAN,
                        wall_time: 0.0,
                        error: Some("unknown tier".into()),
                    });
                    continue;
                }
            };
            let mut cell_cfg = cfg.clone();
            cell_cfg.material.model = model;
            cell_cfg.mesh.tier = tier;
            let (sys, dof) = match first_step_system(&cell_cfg) {
                Ok(v) => v,
                Err(e) => {
                    table.rows.push(BenchRow {
                        model: model_s.clone(),
                        tier: tier_s.clone(),
                        method: String::new(),
                        omega: 0.0,
                        dof: 0,
                        iterations: 0,
                        converged: false,
                        final_residual: f64::NAN,
                        wall_time: 0.0,
                        error: Some(format!("{e}")),
                    });
                    continue;
                }
            };
            for method_s in &cfg.bench.methods {
                let uses_omega = !method_s.starts_with("gmres_");
                let omega_set: &[f64] = if uses_omega { &omegas } else { &omegas[..1] };
                for &omega in omega_set {
                    let mut mcfg = cell_cfg.clone();
                    mcfg.solver.method = method_s.clone();
                    mcfg.solver.omega = omega;
                    let row = match solver_config(&mcfg)
                        .map(MonolithicSolver::new)
                        .and_then(|solver| solver.solve_system(&sys, mcfg.nonlinear.eps_l))
                    {
                        Ok((_, rep)) => BenchRow {
                            model: model_s.clone(),
                            tier: tier_s.clone(),
                            method: method_s.clone(),
                            omega,
                            dof,
                            iterations: rep.iterations,
                            converged: rep.converged,
                            final_residual: rep.final_residual(),
                            wall_time: rep.wall_time,
                            error: None,
                        },
                        Err(e) => BenchRow {
                            model: model_s.clone(),
                            tier: tier_s.clone(),
                            method: method_s.clone(),
                            omega,
                            dof,
                            iterations: 0,
                            converged: false,
                            final_residual: f64::NAN,
                            wall_time: 0.0,
                            error: Some(format!("{e}")),
                        },
                    };
                    table.rows.push(row);
                }
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_matrix_yields_header_only_csv() {
        let mut cfg = RunConfig::default();
        cfg.bench.models.clear();
        let table = bench(&cfg).unwrap();
        assert!(table.rows.is_empty());
        let mut buf = Vec::new();
        table.to_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("model,tier,method"));
    }

    #[test]
    fn unknown_cells_are_recorded_not_fatal() {
        let mut cfg = RunConfig::default();
        cfg.bench.models = vec!["gelatin".into()];
        let table = bench(&cfg).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.rows[0].error.is_some());
    }
}
