use fsi_core::assembly::{Assembler, FsiState, ProblemParams};
use fsi_core::materials::ModelKind;
use fsi_core::mesh::{build_tube, TubeSpec};
use fsi_core::solver::build_sub_hierarchies;
use fsi_core::subamg::SubAmgOpts;
use std::time::Instant;

fn main() {
    let mesh = build_tube(&TubeSpec::coarse()).unwrap();
    println!("dof = {}", mesh.total_dof());
    let asm = Assembler::new(&mesh, ProblemParams::defaults(ModelKind::NeoHookean));
    let mut state = FsiState::zeros(&asm.map);
    state.time = 0.125;
    let t = Instant::now();
    let sys = asm.system(&state).unwrap();
    println!("assemble: {:.2}s", t.elapsed().as_secs_f64());
    let t = Instant::now();
    let (sub_m, sub_f, sub_s) =
        build_sub_hierarchies(&sys.k, &sys.map, &SubAmgOpts::default()).unwrap();
    println!(
        "sub builds: {:.2}s  (m {:?}, f {:?}, s {:?})",
        t.elapsed().as_secs_f64(),
        sub_m.level_sizes(),
        sub_f.level_sizes(),
        sub_s.level_sizes()
    );
    for (name, sub, n) in [
        ("m", &sub_m, sys.k.m_size()),
        ("f", &sub_f, sys.k.f_size()),
        ("s", &sub_s, sys.k.s_size()),
    ] {
        let r = vec![1.0; n];
        let t = Instant::now();
        let _ = sub.precondition(&r);
        println!("one {name}-cycle: {:.3}s", t.elapsed().as_secs_f64());
    }
}
