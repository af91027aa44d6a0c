//! Batch driver: configured runs, state snapshots and centerline pressure
//! extraction.

use crate::assembly::{Assembler, FsiState, ProblemParams, TimeScheme};
use crate::config::{RunConfig, Tier};
use crate::error::Error;
use crate::fsimg::SmootherConfig;
use crate::materials::{MaterialParams, ModelKind};
use crate::mesh::{build_tube, dump_mesh, export_vtk, load_mesh, uniform_refine, FsiMesh};
use crate::newton::{time_loop, write_step_log, NewtonConfig, StepRecord};
use crate::solver::{MethodKind, MonolithicSolver, SolverConfig};
use crate::subamg::SubAmgOpts;
use crate::util::fmt_g17;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

pub fn build_mesh(cfg: &RunConfig) -> Result<FsiMesh, Error> {
    let mut mesh = match cfg.mesh.tier {
        Tier::Coarse => build_tube(&crate::mesh::TubeSpec::coarse())?,
        Tier::Intermediate => build_tube(&crate::mesh::TubeSpec::intermediate())?,
        Tier::Fine => uniform_refine(&build_tube(&crate::mesh::TubeSpec::intermediate())?),
        Tier::Custom => build_tube(&cfg.mesh.spec)?,
    };
    for _ in 0..cfg.mesh.refine {
        mesh = uniform_refine(&mesh);
    }
    Ok(mesh)
}

pub fn problem_params(cfg: &RunConfig) -> ProblemParams<f64> {
    let m = &cfg.material;
    let kappa = m.kappa;
    let rho_s = m.rho_s;
    let (media, adventitia) = match m.model {
        ModelKind::NeoHookean => (
            MaterialParams::neo_hookean(m.c10_m, kappa, rho_s),
            MaterialParams::neo_hookean(m.c10_a, kappa, rho_s),
        ),
        ModelKind::MooneyRivlin => (
            MaterialParams::mooney_rivlin(m.c10_m, m.c01_m, kappa, rho_s),
            MaterialParams::mooney_rivlin(m.c10_a, m.c01_a, kappa, rho_s),
        ),
        ModelKind::Artery => (
            MaterialParams::artery(
                m.c10_m,
                m.k1_m,
                m.k2_m,
                m.alpha_m.to_radians(),
                kappa,
                rho_s,
            ),
            MaterialParams::artery(
                m.c10_a,
                m.k1_a,
                m.k2_a,
                m.alpha_a.to_radians(),
                kappa,
                rho_s,
            ),
        ),
    };
    ProblemParams {
        rho_f: cfg.fluid.rho_f,
        mu: cfg.fluid.mu,
        g_in: cfg.fluid.g_in,
        g_cutoff: cfg.fluid.g_cutoff,
        media,
        adventitia,
        scheme: TimeScheme::new(cfg.time.dt, cfg.time.newmark_beta, cfg.time.newmark_gamma),
        structure_pspg: cfg.solver.structure_pspg,
    }
}

pub fn solver_config(cfg: &RunConfig) -> Result<SolverConfig, Error> {
    let method = MethodKind::parse(&cfg.solver.method).ok_or_else(|| {
        Error::config("solver.method", format!("unknown method `{}`", cfg.solver.method))
    })?;
    Ok(SolverConfig {
        method,
        smoother: SmootherConfig {
            omega: cfg.solver.omega,
            m_pre: cfg.solver.m_pre,
            m_post: cfg.solver.m_post,
            nu: cfg.solver.nu,
        },
        sub_opts: SubAmgOpts {
            theta: cfg.solver.theta,
            ..Default::default()
        },
        coarse_limit: cfg.solver.coarse_limit,
        max_iter: cfg.solver.max_iter,
    })
}

pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<(f64, PathBuf)>,
    pub mesh: FsiMesh,
    pub state: FsiState<f64>,
}

/// Executes the configured simulation, writing the per-step CSV log,
/// requested snapshots and optional VTK exports into the output directory.
pub fn run(cfg: &RunConfig) -> Result<RunOutput, Error> {
    let mesh = build_mesh(cfg)?;
    let params = problem_params(cfg);
    let asm = Assembler::new(&mesh, params);
    let solver = MonolithicSolver::new(solver_config(cfg)?);
    let newton_cfg = NewtonConfig {
        eps_n: cfg.nonlinear.eps_n,
        eps_l: cfg.nonlinear.eps_l,
        max_iter: cfg.nonlinear.max_iter,
        line_search: cfg.nonlinear.line_search,
    };
    let n_steps = (cfg.time.t_end / cfg.time.dt).round() as usize;
    let out_dir = Path::new(&cfg.output.dir);
    std::fs::create_dir_all(out_dir)?;

    let mut state = FsiState::zeros(&asm.map);
    let snapshot_times = cfg.output.snapshot_times.clone();
    let dt = cfg.time.dt;
    let mut snapshots = Vec::new();
    let vtk = cfg.output.vtk;
    let mesh_ref = &mesh;
    let records = time_loop(
        &mut state,
        &asm,
        &solver,
        &newton_cfg,
        n_steps,
        |_, st, _| {
            let t = st.time;
            if snapshot_times.iter().any(|&ts| (ts - t).abs() < 0.5 * dt) {
                let path = out_dir.join(format!("snapshot_t{t:.3}.snap"));
                if let Ok(mut f) = std::fs::File::create(&path) {
                    let _ = write_snapshot(mesh_ref, st, &mut f);
                    snapshots.push((t, path));
                }
                if vtk {
                    let path = out_dir.join(format!("fields_t{t:.3}.vtk"));
                    if let Ok(mut f) = std::fs::File::create(&path) {
                        let _ = write_vtk_fields(mesh_ref, st, &mut f);
                    }
                }
            }
        },
        )?;

    let mut log = std::fs::File::create(out_dir.join("run_log.csv"))?;
    write_step_log(&records, &mut log)?;
    Ok(RunOutput {
        records,
        snapshots,
        mesh,
        state,
    })
}

/// Self-contained state snapshot: the mesh dump followed by named nodal
/// field sections.
pub fn write_snapshot<W: Write>(
    mesh: &FsiMesh,
    state: &FsiState<f64>,
    w: &mut W,
) -> Result<(), Error> {
    writeln!(w, "fsisnap 1")?;
    writeln!(w, "time {}", fmt_g17(state.time))?;
    dump_mesh(mesh, w)?;
    let fields: [(&str, &[f64]); 5] = [
        ("p_f", &state.p_f),
        ("u", &state.u),
        ("d_m", &state.d_m),
        ("d_s", &state.d_s),
        ("p_s", &state.p_s),
    ];
    for (name, data) in fields {
        writeln!(w, "field {} {}", name, data.len())?;
        for v in data {
            writeln!(w, "{}", fmt_g17(*v))?;
        }
    }
    Ok(())
}

pub struct Snapshot {
    pub time: f64,
    pub mesh: FsiMesh,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

pub fn read_snapshot<R: BufRead>(r: &mut R) -> Result<Snapshot, Error> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MeshFormat("empty snapshot".into()))?;
    if header.trim() != "fsisnap 1" {
        return Err(Error::MeshFormat("bad snapshot header".into()));
    }
    let time_line = lines
        .next()
        .ok_or_else(|| Error::MeshFormat("missing time".into()))?;
    let time: f64 = time_line
        .strip_prefix("time ")
        .and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| Error::MeshFormat("bad time line".into()))?;
    // the rest: mesh dump followed by field sections
    let rest: Vec<&str> = lines.collect();
    let field_start = rest
        .iter()
        .position(|l| l.starts_with("field "))
        .unwrap_or(rest.len());
    let mesh_text = rest[..field_start].join("\n");
    let mesh = load_mesh(&mut std::io::Cursor::new(mesh_text))?;
    let mut fields = Vec::new();
    let mut i = field_start;
    while i < rest.len() {
        let mut it = rest[i].split_whitespace();
        let tag = it.next();
        if tag != Some("field") {
            return Err(Error::MeshFormat(format!("expected field, got {:?}", rest[i])));
        }
        let name = it
            .next()
            .ok_or_else(|| Error::MeshFormat("field name missing".into()))?
            .to_string();
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::MeshFormat("field length missing".into()))?;
        let mut vals = Vec::with_capacity(n);
        for k in 1..=n {
            vals.push(
                rest[i + k]
                    .trim()
                    .parse()
                    .map_err(|_| Error::MeshFormat("bad field value".into()))?,
            );
        }
        fields.push((name, vals));
        i += n + 1;
    }
    Ok(Snapshot { time, mesh, fields })
}

/// Nodal VTK export of a state: velocity (fluid side; wall velocity on the
/// structure side), pressure and displacement magnitude.
pub fn write_vtk_fields<W: Write>(
    mesh: &FsiMesh,
    state: &FsiState<f64>,
    w: &mut W,
) -> Result<(), Error> {
    let n = mesh.n_nodes();
    let nf = mesh.n_fluid_nodes;
    let mut pressure = vec![0.0; n];
    let mut speed = vec![0.0; n];
    let mut disp = vec![0.0; n];
    for i in 0..nf {
        pressure[i] = state.p_f[i];
        speed[i] = (0..3).map(|c| state.u[3 * i + c].powi(2)).sum::<f64>().sqrt();
        disp[i] = (0..3)
            .map(|c| state.d_m[3 * i + c].powi(2))
            .sum::<f64>()
            .sqrt();
    }
    for sl in 0..mesh.n_struct_nodes() {
        let i = nf + sl;
        pressure[i] = state.p_s[sl];
        speed[i] = (0..3)
            .map(|c| state.prev.v_s[3 * sl + c].powi(2))
            .sum::<f64>()
            .sqrt();
        disp[i] = (0..3)
            .map(|c| state.d_s[3 * sl + c].powi(2))
            .sum::<f64>()
            .sqrt();
    }
    export_vtk(
        mesh,
        &[
            ("pressure", &pressure),
            ("speed", &speed),
            ("displacement", &disp),
        ],
        w,
    )
}

/// P1 interpolation of the fluid pressure along the tube axis; returns
/// (z, p) samples.
pub fn centerline_curve(
    mesh: &FsiMesh,
    p_f: &[f64],
    n_samples: usize,
) -> Result<Vec<(f64, f64)>, Error> {
    assert!(n_samples >= 2);
    let mut curve = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let z = mesh.length * k as f64 / (n_samples - 1) as f64;
        // nudge the end samples inside the mesh
        let zq = z.clamp(1e-9 * mesh.length, (1.0 - 1e-9) * mesh.length);
        let p = sample_fluid_field(mesh, p_f, [0.0, 0.0, zq])?;
        curve.push((z, p));
    }
    Ok(curve)
}

/// Locates the fluid tet containing the point and interpolates the nodal
/// field there.
pub fn sample_fluid_field(mesh: &FsiMesh, field: &[f64], x: [f64; 3]) -> Result<f64, Error> {
    let eps = -1e-9;
    for (ti, tet) in mesh.tets.iter().enumerate() {
        if !mesh.subdomain[ti].is_fluid() {
            continue;
        }
        if let Some(l) = barycentric(mesh, tet, x) {
            if l.iter().all(|&li| li >= eps) {
                let mut v = 0.0;
                for (a, &node) in tet.iter().enumerate() {
                    v += l[a] * field[node];
                }
                return Ok(v);
            }
        }
    }
    Err(Error::SampleOutsideDomain {
        x: x[0],
        y: x[1],
        z: x[2],
    })
}

fn barycentric(mesh: &FsiMesh, tet: &[usize; 4], x: [f64; 3]) -> Option<[f64; 4]> {
    let p: Vec<[f64; 3]> = tet.iter().map(|&n| mesh.nodes[n]).collect();
    let mut m = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for d in 0..3 {
            m[d][i] = p[i + 1][d] - p[0][d];
        }
    }
    let det = crate::tensor::det3(&m);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = crate::tensor::inv3(&m);
    let rhs = [x[0] - p[0][0], x[1] - p[0][1], x[2] - p[0][2]];
    let lam = crate::tensor::matvec3(&inv, &rhs);
    Some([1.0 - lam[0] - lam[1] - lam[2], lam[0], lam[1], lam[2]])
}

/// Writes a centerline curve as CSV.
pub fn write_centerline_csv<W: Write>(curve: &[(f64, f64)], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "z_mm,p_kpa")?;
    for (z, p) in curve {
        writeln!(w, "{},{}", fmt_g17(*z), fmt_g17(*p))?;
    }
    Ok(())
}

/// Position of the leading wave front: the largest sampled z where the
/// pressure still reaches `frac` of the curve maximum.
pub fn wavefront_z(curve: &[(f64, f64)], frac: f64) -> f64 {
    let pmax = curve.iter().map(|&(_, p)| p).fold(f64::MIN, f64::max);
    let threshold = frac * pmax;
    curve
        .iter()
        .rev()
        .find(|&&(_, p)| p >= threshold)
        .map(|&(z, _)| z)
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TubeSpec;

    fn small_mesh() -> FsiMesh {
        build_tube(&TubeSpec {
            n_axial: 3,
            n_circ: 8,
            n_radial_fluid: 1,
            n_radial_media: 1,
            n_radial_adv: 1,
            ..TubeSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn centerline_reproduces_constant_field() {
        let mesh = small_mesh();
        let p = vec![2.5; mesh.n_nodes()];
        let curve = centerline_curve(&mesh, &p, 30).unwrap();
        for (_, v) in curve {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn centerline_reproduces_linear_field() {
        // P1 interpolation is exact on linears
        let mesh = small_mesh();
        let p: Vec<f64> = mesh.nodes.iter().map(|n| 3.0 * n[2] - 1.0).collect();
        let curve = centerline_curve(&mesh, &p, 25).unwrap();
        for (z, v) in curve {
            // end samples are nudged inside the mesh by a relative 1e-9
            assert!((v - (3.0 * z - 1.0)).abs() < 1e-6, "z {z}: {v}");
        }
    }

    #[test]
    fn sample_outside_domain_errors() {
        let mesh = small_mesh();
        let p = vec![0.0; mesh.n_nodes()];
        assert!(matches!(
            sample_fluid_field(&mesh, &p, [50.0, 0.0, 1.0]),
            Err(Error::SampleOutsideDomain { .. })
        ));
    }

    #[test]
    fn wavefront_tracks_leading_edge() {
        let curve: Vec<(f64, f64)> = (0..100)
            .map(|k| {
                let z = k as f64 * 0.18;
                // a pulse centered at z = 6
                (z, (-((z - 6.0) / 1.5).powi(2)).exp())
            })
            .collect();
        let front = wavefront_z(&curve, 0.5);
        assert!((front - 7.2).abs() < 0.4, "front {front}");
    }

    #[test]
    fn snapshot_roundtrip() {
        let mesh = small_mesh();
        let map = crate::assembly::DofMap::new(&mesh);
        let mut state = FsiState::zeros(&map);
        state.time = 1.5;
        for (i, v) in state.p_f.iter_mut().enumerate() {
            *v = i as f64 * 0.25;
        }
        let mut buf = Vec::new();
        write_snapshot(&mesh, &state, &mut buf).unwrap();
        let snap = read_snapshot(&mut std::io::Cursor::new(buf)).unwrap();
        assert_eq!(snap.time, 1.5);
        assert_eq!(snap.mesh.n_nodes(), mesh.n_nodes());
        let p = snap.field("p_f").unwrap();
        assert_eq!(p.len(), state.p_f.len());
        assert_eq!(p[4], 1.0);
    }
}
