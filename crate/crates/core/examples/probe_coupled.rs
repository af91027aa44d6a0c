use fsi_core::assembly::{Assembler, FsiState, ProblemParams};
use fsi_core::fsimg::{build_hierarchy, SmootherConfig};
use fsi_core::materials::ModelKind;
use fsi_core::mesh::{build_tube, TubeSpec};
use fsi_core::solver::build_sub_hierarchies;
use fsi_core::subamg::SubAmgOpts;
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
    let mut params = ProblemParams::defaults(ModelKind::NeoHookean);
    if std::env::args().any(|a| a == "light") {
        params.media.rho_s = 1.2e-3;
        params.adventitia.rho_s = 1.2e-3;
        println!("(light wall variant)");
    }
    let asm = Assembler::new(&mesh, params);
    let mut state = FsiState::zeros(&asm.map);
    state.time = 0.125;
    let sys = asm.system(&state).unwrap();
    println!("dof = {}", sys.k.dim());
    let n = sys.k.dim();
    let mut rng = SplitMix64::new(9);
    let b: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();

    // smoother-only omega sweep
    for omega in [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0] {
        let (sub_m, sub_f, sub_s) =
            build_sub_hierarchies(&sys.k, &sys.map, &SubAmgOpts::default()).unwrap();
        let hier = build_hierarchy(
            &sys.k,
            sub_m,
            sub_f,
            sub_s,
            SmootherConfig {
                omega,
                ..Default::default()
            },
            1,
        );
        let hier = match hier {
            Ok(h) => h,
            Err(e) => {
                println!("omega {omega}: {e}");
                continue;
            }
        };
        let mut x = vec![0.0; n];
        let mut prev = norm(&b);
        print!("smoother omega {omega:4}: ");
        for _ in 0..8 {
            hier.block_gs_step(0, &mut x, &b);
            let r = {
                let mut r = vec![0.0; n];
                sys.k.matvec(&x, &mut r);
                for i in 0..n {
                    r[i] = b[i] - r[i];
                }
                r
            };
            let now = norm(&r);
            print!("{:.3} ", now / prev);
            prev = now;
        }
        println!();
    }

    // two-level coupled cycle with exact coarse solve
    for (omega, m_pre) in [(0.3, 2), (0.25, 4), (0.3, 4), (0.3, 8), (0.25, 8), (0.2, 8)] {
        let (sub_m, sub_f, sub_s) =
            build_sub_hierarchies(&sys.k, &sys.map, &SubAmgOpts::default()).unwrap();
        let hier = build_hierarchy(
            &sys.k,
            sub_m,
            sub_f,
            sub_s,
            SmootherConfig {
                omega,
                m_pre,
                m_post: m_pre,
                nu: 2,
            },
            400,
        )
        .unwrap();
        let mut x = vec![0.0; n];
        let mut prev = norm(&b);
        print!(
            "deep dims {:?} omega {omega} m {m_pre}: ",
            hier.level_dims()
        );
        for _ in 0..6 {
            hier.amg_cycle(0, &mut x, &b);
            let mut r = vec![0.0; n];
            sys.k.matvec(&x, &mut r);
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
