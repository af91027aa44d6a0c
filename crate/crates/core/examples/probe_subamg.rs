use fsi_core::assembly::{Assembler, FsiState, ProblemParams};
use fsi_core::fsimg::SmootherConfig;
use fsi_core::materials::ModelKind;
use fsi_core::mesh::{build_tube, TubeSpec};
use fsi_core::solver::build_sub_hierarchies;
use fsi_core::subamg::SubAmgOpts;
use fsi_core::util::SplitMix64;

fn contraction(
    name: &str,
    a: &fsi_core::Csr64,
    cycle: &dyn Fn(&mut Vec<f64>, &[f64]),
) {
    let n = a.n_rows();
    let mut rng = SplitMix64::new(3);
    let b: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let mut x = vec![0.0; n];
    let norm = |v: &[f64]| v.iter().map(|y| y * y).sum::<f64>().sqrt();
    let mut prev = norm(&b);
    let mut rates = Vec::new();
    for _ in 0..8 {
        cycle(&mut x, &b);
        let mut r = vec![0.0; n];
        a.matvec(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let now = norm(&r);
        rates.push(now / prev);
        prev = now;
    }
    println!("{name}: rates {:?}", rates.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>());
}

fn main() {
    let mesh = build_tube(&TubeSpec::coarse()).unwrap();
    let asm = Assembler::new(&mesh, ProblemParams::defaults(ModelKind::NeoHookean));
    let mut state = FsiState::zeros(&asm.map);
    state.time = 0.125;
    let sys = asm.system(&state).unwrap();
    let (sub_m, sub_f, sub_s) =
        build_sub_hierarchies(&sys.k, &sys.map, &SubAmgOpts::default()).unwrap();
    contraction("m cycle", &sys.k.a_m, &|x, b| {
        let z = {
            let mut r = vec![0.0; x.len()];
            sys.k.a_m.matvec(x, &mut r);
            for i in 0..x.len() {
                r[i] = b[i] - r[i];
            }
            sub_m.precondition(&r)
        };
        for i in 0..x.len() {
            x[i] += z[i];
        }
    });
    contraction("f cycle", &sys.k.a_f, &|x, b| {
        let z = {
            let mut r = vec![0.0; x.len()];
            sys.k.a_f.matvec(x, &mut r);
            for i in 0..x.len() {
                r[i] = b[i] - r[i];
            }
            sub_f.precondition(&r)
        };
        for i in 0..x.len() {
            x[i] += z[i];
        }
    });
    contraction("s cycle", &sys.k.a_s, &|x, b| {
        let z = {
            let mut r = vec![0.0; x.len()];
            sys.k.a_s.matvec(x, &mut r);
            for i in 0..x.len() {
                r[i] = b[i] - r[i];
            }
            sub_s.precondition(&r)
        };
        for i in 0..x.len() {
            x[i] += z[i];
        }
    });

    // coupled smoother contraction at the finest level
    let cfg = SolverInline::default();
    let hier = fsi_core::fsimg::build_hierarchy(
        &sys.k,
        sub_m,
        sub_f,
        sub_s,
        SmootherConfig::default(),
        cfg.coarse_limit,
    )
    .unwrap();
    println!("coupled level dims: {:?}", hier.level_dims());
    let n = sys.k.dim();
    let mut rng = SplitMix64::new(9);
    let b: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let mut x = vec![0.0; n];
    let norm = |v: &[f64]| v.iter().map(|y| y * y).sum::<f64>().sqrt();
    let mut prev = norm(&b);
    let mut rates = Vec::new();
    for _ in 0..10 {
        hier.block_gs_step(0, &mut x, &b);
        let mut r = vec![0.0; n];
        sys.k.matvec(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let now = norm(&r);
        rates.push((now / prev * 1000.0).round() / 1000.0);
        prev = now;
    }
    println!("coupled block-GS step rates: {rates:?}");
}

struct SolverInline {
    coarse_limit: usize,
}

impl Default for SolverInline {
    fn default() -> Self {
        SolverInline { coarse_limit: 2000 }
    }
}
