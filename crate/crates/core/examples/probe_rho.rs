use fsi_core::assembly::{Assembler, FsiState, ProblemParams};
use fsi_core::blockprec::PrecondKind;
use fsi_core::materials::ModelKind;
use fsi_core::mesh::{build_tube, TubeSpec};
use fsi_core::solver::{MethodKind, MonolithicSolver};

fn main() {
    let mesh = build_tube(&TubeSpec::coarse()).unwrap();
    for rho_s in [1.2, 1.2e-3] {
        println!("rho_s = {rho_s} mg/mm^3:");
        for model in [ModelKind::NeoHookean, ModelKind::MooneyRivlin, ModelKind::Artery] {
            let mut params = ProblemParams::defaults(model);
            params.media.rho_s = rho_s;
            params.adventitia.rho_s = rho_s;
            let asm = Assembler::new(&mesh, params);
            let mut state = FsiState::zeros(&asm.map);
            state.time = 0.125;
            let sys = asm.system(&state).unwrap();
            let mut counts = Vec::new();
            for kind in [PrecondKind::Diagonal, PrecondKind::Lower, PrecondKind::Upper, PrecondKind::Ssor, PrecondKind::Ilu0] {
                let solver = MonolithicSolver::with_method(MethodKind::GmresBlock(kind));
                let (_, rep) = solver.solve_system(&sys, 1e-9).unwrap();
                counts.push(rep.iterations);
            }
            let amg = MonolithicSolver::with_method(MethodKind::Amg);
            let (_, rep) = amg.solve_system(&sys, 1e-9).unwrap();
            println!("  {model:?}: D/L/U/SSOR/ILU = {counts:?}, amg = {} ({})", rep.iterations, rep.converged);
        }
    }
}
