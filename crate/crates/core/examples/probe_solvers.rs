//! Quick measurement of all solution methods on the first-step Jacobian.
use fsi_core::assembly::{Assembler, FsiState, ProblemParams};
use fsi_core::blockprec::PrecondKind;
use fsi_core::materials::ModelKind;
use fsi_core::mesh::{build_tube, TubeSpec};
use fsi_core::solver::{MethodKind, MonolithicSolver, SolverConfig};
use std::time::Instant;

fn main() {
    let tier = std::env::args().nth(1).unwrap_or("tiny".into());
    let spec = match tier.as_str() {
        "coarse" => TubeSpec::coarse(),
        "intermediate" => TubeSpec::intermediate(),
        _ => TubeSpec { n_axial: 3, n_circ: 8, n_radial_fluid: 1, n_radial_media: 1, n_radial_adv: 1, ..TubeSpec::default() },
    };
    let mesh = build_tube(&spec).unwrap();
    println!("tier {tier}: dof = {}", mesh.total_dof());
    let asm = Assembler::new(&mesh, ProblemParams::defaults(ModelKind::NeoHookean));
    let mut state = FsiState::zeros(&asm.map);
    state.time = 0.125;
    let t0 = Instant::now();
    let sys = asm.system(&state).unwrap();
    println!("assembled in {:.2}s, nnz = {}", t0.elapsed().as_secs_f64(), sys.k.nnz());
    let methods = [
        MethodKind::GmresBlock(PrecondKind::Diagonal),
        MethodKind::GmresBlock(PrecondKind::Lower),
        MethodKind::GmresBlock(PrecondKind::Upper),
        MethodKind::GmresBlock(PrecondKind::Ssor),
        MethodKind::GmresBlock(PrecondKind::Ilu0),
        MethodKind::Amg,
        MethodKind::AmgGmres,
        MethodKind::AmgFgmres,
        MethodKind::Amli,
        MethodKind::AmliGmres,
        MethodKind::AmliFgmres,
    ];
    for m in methods {
        let solver = MonolithicSolver::with_method(m);
        let t = Instant::now();
        match solver.solve_system(&sys, 1e-9) {
            Ok((_, rep)) => println!(
                "{:>14}: its = {:3}, converged = {}, final = {:.2e}, {:.2}s",
                m.name(), rep.iterations, rep.converged, rep.final_residual(), t.elapsed().as_secs_f64()
            ),
            Err(e) => println!("{:>14}: ERROR {e}", m.name()),
        }
    }
}
