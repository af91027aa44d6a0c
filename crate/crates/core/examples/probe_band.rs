use fsi_core::assembly::{Assembler, FsiState, ProblemParams};
use fsi_core::blockprec::PrecondKind;
use fsi_core::materials::ModelKind;
use fsi_core::mesh::{build_tube, TubeSpec};
use fsi_core::solver::{MethodKind, MonolithicSolver, SolverConfig};
use fsi_core::subamg::SubAmgOpts;

fn main() {
    let mesh = build_tube(&TubeSpec::coarse()).unwrap();
    for model in [
        ModelKind::NeoHookean,
        ModelKind::MooneyRivlin,
        ModelKind::Artery,
    ] {
        let asm = Assembler::new(&mesh, ProblemParams::defaults(model));
        let mut state = FsiState::zeros(&asm.map);
        state.time = 0.125;
        let sys = asm.system(&state).unwrap();
        for (pre, post) in [(2, 2), (3, 3)] {
            let cfg = SolverConfig {
                method: MethodKind::GmresBlock(PrecondKind::Ssor),
                sub_opts: SubAmgOpts {
                    pre,
                    post,
                    ..Default::default()
                },
                ..Default::default()
            };
            let solver = MonolithicSolver::new(cfg);
            let (_, rep) = solver.solve_system(&sys, 1e-9).unwrap();
            println!(
                "{model:?} sub-smooth ({pre},{post}): ssor its = {} ({:.2}s)",
                rep.iterations, rep.wall_time
            );
        }
    }
}
