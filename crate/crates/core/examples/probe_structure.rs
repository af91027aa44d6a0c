use fsi_core::assembly::{Assembler, FsiState, ProblemParams};
use fsi_core::materials::ModelKind;
use fsi_core::mesh::{build_tube, TubeSpec};
use fsi_core::subamg::{build_saddle_hierarchy, SubAmgOpts, SubKind};
use fsi_core::util::SplitMix64;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|y| y * y).sum::<f64>().sqrt()
}

fn main() {
    let mesh = build_tube(&TubeSpec {
        n_axial: 6,
        n_circ: 12,
        n_radial_fluid: 2,
        n_radial_media: 1,
        n_radial_adv: 1,
        ..TubeSpec::default()
    })
    .unwrap();
    let asm = Assembler::new(&mesh, ProblemParams::defaults(ModelKind::NeoHookean));
    let mut state = FsiState::zeros(&asm.map);
    state.time = 0.125;
    let sys = asm.system(&state).unwrap();
    let ns = sys.map.n_struct_nodes;
    let a_s = &sys.k.a_s;
    let n = a_s.n_rows();
    let mut rng = SplitMix64::new(1);
    let b: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    for row_strength in [false, true] {
        for sigma in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let opts = SubAmgOpts {
                max_levels: 2,
                min_coarse: 50,
                sigma_scale: sigma,
                row_strength,
                ..Default::default()
            };
            let h = match build_saddle_hierarchy(a_s, (3 * ns, ns), SubKind::Structure, &opts) {
                Ok(h) => h,
                Err(e) => {
                    println!("row={row_strength} sigma={sigma}: build error {e}");
                    continue;
                }
            };
            let mut x = vec![0.0; n];
            let mut prev = norm(&b);
            print!("row={row_strength:5} sigma={sigma:4}: sizes {:?} rates ", h.level_sizes());
            for _ in 0..6 {
                h.cycle_from_level(0, &mut x, &b);
                let mut r = vec![0.0; n];
                a_s.matvec(&x, &mut r);
                for i in 0..n {
                    r[i] = b[i] - r[i];
                }
                let now = norm(&r);
                print!("{:.3} ", now / prev);
                prev = now;
            }
            println!();
        }
    }
}
