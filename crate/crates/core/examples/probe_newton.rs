use fsi_core::assembly::{Assembler, FsiState, ProblemParams};
use fsi_core::materials::ModelKind;
use fsi_core::mesh::{build_tube, TubeSpec};
use fsi_core::newton::{newton_solve, NewtonConfig};
use fsi_core::solver::{MethodKind, MonolithicSolver};

fn main() {
    let mesh = build_tube(&TubeSpec::coarse()).unwrap();
    let solver = MonolithicSolver::with_method(MethodKind::AmgGmres);
    for model in [
        ModelKind::NeoHookean,
        ModelKind::MooneyRivlin,
        ModelKind::Artery,
    ] {
        let asm = Assembler::new(&mesh, ProblemParams::defaults(model));
        let mut state = FsiState::zeros(&asm.map);
        state.time = 0.125;
        let rep = newton_solve(&mut state, &asm, &solver, &NewtonConfig::default()).unwrap();
        println!(
            "{model:?}: {} its, err {:?}, linear its {:?}",
            rep.iterations,
            rep.err_history,
            rep.linear_reports
                .iter()
                .map(|l| l.iterations)
                .collect::<Vec<_>>()
        );
        for (k, w) in rep.err_history.windows(2).enumerate().skip(1) {
            let bound = 10.0 * w[0].powf(1.8);
            println!(
                "   k={} pair ({:.3e}, {:.3e}) bound {:.3e} {}",
                k + 1,
                w[0],
                w[1],
                bound,
                if w[1] <= bound { "ok" } else { "VIOLATED" }
            );
        }
    }
}
