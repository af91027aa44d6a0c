//! Run configuration: a single human-editable text file with bracketed
//! sections and `key = value` lines.
//!
//! Grammar (one construct per line):
//!
//! ```text
//! # comment                 blank lines and #-comments are ignored
//! [section]                 section header
//! key = value               assignment inside the current section
//! ```
//!
//! Unknown sections or keys are rejected with their line number. Values are
//! numbers, booleans (`true`/`false`), bare words or comma-separated lists.
//! [`RunConfig::to_text`] writes the canonical form; parsing its own output
//! is a fixpoint.

use crate::error::Error;
use crate::materials::ModelKind;
use crate::mesh::TubeSpec;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Coarse,
    Intermediate,
    /// One uniform refinement of the intermediate tier; heavy, optional.
    Fine,
    Custom,
}

impl Tier {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "coarse" => Tier::Coarse,
            "intermediate" => Tier::Intermediate,
            "fine" => Tier::Fine,
            "custom" => Tier::Custom,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Tier::Coarse => "coarse",
            Tier::Intermediate => "intermediate",
            Tier::Fine => "fine",
            Tier::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeshConfig {
    pub tier: Tier,
    pub spec: TubeSpec,
    /// Extra uniform refinements applied after construction.
    pub refine: usize,
}

#[derive(Debug, Clone)]
pub struct MaterialConfig {
    pub model: ModelKind,
    pub c10_m: f64,
    pub c10_a: f64,
    pub c01_m: f64,
    pub c01_a: f64,
    pub k1_m: f64,
    pub k1_a: f64,
    pub k2_m: f64,
    pub k2_a: f64,
    pub kappa: f64,
    pub rho_s: f64,
    /// Fiber angles in degrees (converted to radians internally).
    pub alpha_m: f64,
    pub alpha_a: f64,
}

#[derive(Debug, Clone)]
pub struct FluidConfig {
    pub rho_f: f64,
    pub mu: f64,
    pub g_in: f64,
    pub g_cutoff: f64,
}

#[derive(Debug, Clone)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub newmark_beta: f64,
    pub newmark_gamma: f64,
}

#[derive(Debug, Clone)]
pub struct NonlinearConfig {
    pub eps_n: f64,
    pub eps_l: f64,
    pub max_iter: usize,
    pub line_search: bool,
}

#[derive(Debug, Clone)]
pub struct SolverSection {
    pub method: String,
    pub omega: f64,
    pub m_pre: usize,
    pub m_post: usize,
    pub nu: usize,
    pub coarse_limit: usize,
    pub theta: f64,
    pub structure_pspg: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub dir: String,
    pub snapshot_times: Vec<f64>,
    pub vtk: bool,
    pub centerline_samples: usize,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub models: Vec<String>,
    pub tiers: Vec<String>,
    pub methods: Vec<String>,
    pub omegas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub material: MaterialConfig,
    pub fluid: FluidConfig,
    pub time: TimeConfig,
    pub nonlinear: NonlinearConfig,
    pub solver: SolverSection,
    pub output: OutputConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh: MeshConfig {
                tier: Tier::Coarse,
                spec: TubeSpec::default(),
                refine: 0,
            },
            material: MaterialConfig {
                model: ModelKind::NeoHookean,
                c10_m: 3.0,
                c10_a: 0.3,
                c01_m: 0.3,
                c01_a: 0.2,
                k1_m: 2.3632,
                k1_a: 0.5620,
                k2_m: 0.8393,
                k2_a: 0.7112,
                kappa: 1e5,
                rho_s: 1.2,
                alpha_m: 29.0,
                alpha_a: 62.0,
            },
            fluid: FluidConfig {
                rho_f: 1.0,
                mu: 0.0035,
                g_in: 1.332,
                g_cutoff: 0.125,
            },
            time: TimeConfig {
                dt: 0.125,
                t_end: 12.0,
                newmark_beta: 0.5,
                newmark_gamma: 1.0,
            },
            nonlinear: NonlinearConfig {
                eps_n: 1e-9,
                eps_l: 1e-9,
                max_iter: 20,
                line_search: false,
            },
            solver: SolverSection {
                method: "amg_gmres".into(),
                omega: 0.3,
                m_pre: 8,
                m_post: 8,
                nu: 2,
                coarse_limit: 2000,
                theta: 0.25,
                structure_pspg: 1.0,
                max_iter: 800,
            },
            output: OutputConfig {
                dir: "out".into(),
                snapshot_times: Vec::new(),
                vtk: false,
                centerline_samples: 120,
            },
            bench: BenchConfig {
                models: vec![
                    "neo_hookean".into(),
                    "mooney_rivlin".into(),
                    "artery".into(),
                ],
                tiers: vec!["coarse".into(), "intermediate".into()],
                methods: vec![
                    "gmres_diag".into(),
                    "gmres_lower".into(),
                    "gmres_upper".into(),
                    "gmres_ssor".into(),
                    "gmres_ilu0".into(),
                    "amg".into(),
                    "amg_gmres".into(),
                    "amg_fgmres".into(),
                    "amli".into(),
                    "amli_gmres".into(),
                    "amli_fgmres".into(),
                ],
                omegas: Vec::new(),
            },
        }
    }
}

pub fn parse_model(s: &str) -> Option<ModelKind> {
    Some(match s {
        "neo_hookean" => ModelKind::NeoHookean,
        "mooney_rivlin" => ModelKind::MooneyRivlin,
        "artery" => ModelKind::Artery,
        _ => return None,
    })
}

pub fn model_name(m: ModelKind) -> &'static str {
    match m {
        ModelKind::NeoHookean => "neo_hookean",
        ModelKind::MooneyRivlin => "mooney_rivlin",
        ModelKind::Artery => "artery",
    }
}

/// Raw `section.key -> (value, line)` map.
type RawMap = BTreeMap<String, (String, usize)>;

fn parse_raw(text: &str) -> Result<RawMap, Error> {
    let mut map = RawMap::new();
    let mut section = String::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = match line.find('#') {
            Some(p) => &line[..p],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| {
                Error::config(format!("line {line_no}"), "unterminated section header")
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!("line {line_no}"), format!("expected `key = value`, got `{line}`"))
        })?;
        if section.is_empty() {
            return Err(Error::config(
                format!("line {line_no}"),
                "assignment before any [section]",
            ));
        }
        let full = format!("{section}.{}", key.trim());
        if map
            .insert(full.clone(), (value.trim().to_string(), line_no))
            .is_some()
        {
            return Err(Error::config(
                format!("line {line_no}"),
                format!("duplicate key `{full}`"),
            ));
        }
    }
    Ok(map)
}

struct Reader {
    map: RawMap,
    used: std::collections::BTreeSet<String>,
}

impl Reader {
    fn get(&mut self, key: &str) -> Option<(String, usize)> {
        self.used.insert(key.to_string());
        self.map.get(key).cloned()
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64, Error> {
        match self.get(key) {
            None => Ok(default),
            Some((v, ln)) => v.parse().map_err(|_| {
                Error::config(format!("line {ln} ({key})"), format!("not a number: `{v}`"))
            }),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize, Error> {
        match self.get(key) {
            None => Ok(default),
            Some((v, ln)) => v.parse().map_err(|_| {
                Error::config(format!("line {ln} ({key})"), format!("not an integer: `{v}`"))
            }),
        }
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool, Error> {
        match self.get(key) {
            None => Ok(default),
            Some((v, ln)) => match v.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::config(
                    format!("line {ln} ({key})"),
                    format!("expected true/false, got `{v}`"),
                )),
            },
        }
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        self.get(key).map(|(v, _)| v).unwrap_or_else(|| default.to_string())
    }

    fn list(&mut self, key: &str, default: &[String]) -> Vec<String> {
        match self.get(key) {
            None => default.to_vec(),
            Some((v, _)) => v
                .split(',')
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .collect(),
        }
    }

    fn f64_list(&mut self, key: &str) -> Result<Vec<f64>, Error> {
        match self.get(key) {
            None => Ok(Vec::new()),
            Some((v, ln)) => v
                .split(',')
                .map(|t| t.trim())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse().map_err(|_| {
                        Error::config(format!("line {ln} ({key})"), format!("not a number: `{t}`"))
                    })
                })
                .collect(),
        }
    }

    fn finish(self) -> Result<(), Error> {
        for (key, (_, ln)) in self.map.iter() {
            if !self.used.contains(key) {
                return Err(Error::config(
                    format!("line {ln}"),
                    format!("unknown key `{key}`"),
                ));
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let raw = parse_raw(text)?;
        Self::from_raw(raw)
    }

    /// Applies `section.key=value` command line overrides before validation.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self, Error> {
        let mut raw = parse_raw(text)?;
        for ov in overrides {
            let (key, value) = ov.split_once('=').ok_or_else(|| {
                Error::config("--set", format!("expected section.key=value, got `{ov}`"))
            })?;
            if !key.contains('.') {
                return Err(Error::config(
                    "--set",
                    format!("key `{key}` must be section.key"),
                ));
            }
            raw.insert(key.trim().to_string(), (value.trim().to_string(), 0));
        }
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawMap) -> Result<Self, Error> {
        let mut r = Reader {
            map: raw,
            used: Default::default(),
        };
        let d = RunConfig::default();
        let tier_s = r.string("mesh.tier", d.mesh.tier.name());
        let tier = Tier::parse(&tier_s)
            .ok_or_else(|| Error::config("mesh.tier", format!("unknown tier `{tier_s}`")))?;
        let ds = &d.mesh.spec;
        let spec = TubeSpec {
            inner_radius: r.f64("mesh.inner_radius", ds.inner_radius)?,
            media_thickness: r.f64("mesh.media_thickness", ds.media_thickness)?,
            adventitia_thickness: r.f64("mesh.adventitia_thickness", ds.adventitia_thickness)?,
            length: r.f64("mesh.length", ds.length)?,
            n_axial: r.usize("mesh.n_axial", ds.n_axial)?,
            n_circ: r.usize("mesh.n_circ", ds.n_circ)?,
            n_radial_fluid: r.usize("mesh.n_radial_fluid", ds.n_radial_fluid)?,
            n_radial_media: r.usize("mesh.n_radial_media", ds.n_radial_media)?,
            n_radial_adv: r.usize("mesh.n_radial_adv", ds.n_radial_adv)?,
        };
        let mesh = MeshConfig {
            tier,
            spec,
            refine: r.usize("mesh.refine", d.mesh.refine)?,
        };
        let model_s = r.string("material.model", model_name(d.material.model));
        let model = parse_model(&model_s)
            .ok_or_else(|| Error::config("material.model", format!("unknown model `{model_s}`")))?;
        let material = MaterialConfig {
            model,
            c10_m: r.f64("material.c10_M", d.material.c10_m)?,
            c10_a: r.f64("material.c10_A", d.material.c10_a)?,
            c01_m: r.f64("material.c01_M", d.material.c01_m)?,
            c01_a: r.f64("material.c01_A", d.material.c01_a)?,
            k1_m: r.f64("material.k1_M", d.material.k1_m)?,
            k1_a: r.f64("material.k1_A", d.material.k1_a)?,
            k2_m: r.f64("material.k2_M", d.material.k2_m)?,
            k2_a: r.f64("material.k2_A", d.material.k2_a)?,
            kappa: r.f64("material.kappa", d.material.kappa)?,
            rho_s: r.f64("material.rho_s", d.material.rho_s)?,
            alpha_m: r.f64("material.alpha_M", d.material.alpha_m)?,
            alpha_a: r.f64("material.alpha_A", d.material.alpha_a)?,
        };
        let fluid = FluidConfig {
            rho_f: r.f64("fluid.rho_f", d.fluid.rho_f)?,
            mu: r.f64("fluid.mu", d.fluid.mu)?,
            g_in: r.f64("fluid.g_in", d.fluid.g_in)?,
            g_cutoff: r.f64("fluid.g_cutoff", d.fluid.g_cutoff)?,
        };
        let time = TimeConfig {
            dt: r.f64("time.dt", d.time.dt)?,
            t_end: r.f64("time.t_end", d.time.t_end)?,
            newmark_beta: r.f64("time.newmark_beta", d.time.newmark_beta)?,
            newmark_gamma: r.f64("time.newmark_gamma", d.time.newmark_gamma)?,
        };
        let nonlinear = NonlinearConfig {
            eps_n: r.f64("nonlinear.eps_n", d.nonlinear.eps_n)?,
            eps_l: r.f64("nonlinear.eps_l", d.nonlinear.eps_l)?,
            max_iter: r.usize("nonlinear.max_iter", d.nonlinear.max_iter)?,
            line_search: r.bool("nonlinear.line_search", d.nonlinear.line_search)?,
        };
        let solver = SolverSection {
            method: r.string("solver.method", &d.solver.method),
            omega: r.f64("solver.omega", d.solver.omega)?,
            m_pre: r.usize("solver.m_pre", d.solver.m_pre)?,
            m_post: r.usize("solver.m_post", d.solver.m_post)?,
            nu: r.usize("solver.nu", d.solver.nu)?,
            coarse_limit: r.usize("solver.coarse_limit", d.solver.coarse_limit)?,
            theta: r.f64("solver.theta", d.solver.theta)?,
            structure_pspg: r.f64("solver.structure_pspg", d.solver.structure_pspg)?,
            max_iter: r.usize("solver.max_iter", d.solver.max_iter)?,
        };
        if crate::solver::MethodKind::parse(&solver.method).is_none() {
            return Err(Error::config(
                "solver.method",
                format!("unknown method `{}`", solver.method),
            ));
        }
        let output = OutputConfig {
            dir: r.string("output.dir", &d.output.dir),
            snapshot_times: r.f64_list("output.snapshot_times")?,
            vtk: r.bool("output.vtk", d.output.vtk)?,
            centerline_samples: r.usize("output.centerline_samples", d.output.centerline_samples)?,
        };
        let bench = BenchConfig {
            models: r.list("bench.models", &d.bench.models),
            tiers: r.list("bench.tiers", &d.bench.tiers),
            methods: r.list("bench.methods", &d.bench.methods),
            omegas: r.f64_list("bench.omegas")?,
        };
        r.finish()?;
        let cfg = RunConfig {
            mesh,
            material,
            fluid,
            time,
            nonlinear,
            solver,
            output,
            bench,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Error> {
        let bad = |loc: &str, msg: String| Err(Error::config(loc, msg));
        if self.time.dt <= 0.0 || self.time.t_end < self.time.dt {
            return bad("time", format!("dt = {}, t_end = {}", self.time.dt, self.time.t_end));
        }
        if !(0.0 < self.nonlinear.eps_n && self.nonlinear.eps_n < 1.0) {
            return bad("nonlinear.eps_n", format!("{}", self.nonlinear.eps_n));
        }
        if !(0.0 < self.nonlinear.eps_l && self.nonlinear.eps_l < 1.0) {
            return bad("nonlinear.eps_l", format!("{}", self.nonlinear.eps_l));
        }
        if self.material.kappa <= 0.0 || self.material.c10_m <= 0.0 {
            return bad("material", "kappa and c10 must be positive".into());
        }
        if self.material.model == ModelKind::Artery
            && (self.material.k2_m <= 0.0 || self.material.k2_a <= 0.0)
        {
            return bad("material", "artery model needs positive k2".into());
        }
        if !(0.0 < self.time.newmark_beta && self.time.newmark_beta <= 1.0) {
            return bad("time.newmark_beta", format!("{}", self.time.newmark_beta));
        }
        if !(0.0..=1.0).contains(&self.time.newmark_gamma) {
            return bad("time.newmark_gamma", format!("{}", self.time.newmark_gamma));
        }
        Ok(())
    }

    /// Canonical serialized form; `parse(to_text(cfg)) == cfg`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let num = |x: f64| {
            if x == x.trunc() && x.abs() < 1e15 {
                format!("{:.1}", x)
            } else {
                format!("{}", x)
            }
        };
        s.push_str("[mesh]\n");
        s.push_str(&format!("tier = {}\n", self.mesh.tier.name()));
        let sp = &self.mesh.spec;
        s.push_str(&format!("inner_radius = {}\n", num(sp.inner_radius)));
        s.push_str(&format!("media_thickness = {}\n", num(sp.media_thickness)));
        s.push_str(&format!(
            "adventitia_thickness = {}\n",
            num(sp.adventitia_thickness)
        ));
        s.push_str(&format!("length = {}\n", num(sp.length)));
        s.push_str(&format!("n_axial = {}\n", sp.n_axial));
        s.push_str(&format!("n_circ = {}\n", sp.n_circ));
        s.push_str(&format!("n_radial_fluid = {}\n", sp.n_radial_fluid));
        s.push_str(&format!("n_radial_media = {}\n", sp.n_radial_media));
        s.push_str(&format!("n_radial_adv = {}\n", sp.n_radial_adv));
        s.push_str(&format!("refine = {}\n", self.mesh.refine));
        s.push_str("\n[material]\n");
        s.push_str(&format!("model = {}\n", model_name(self.material.model)));
        s.push_str(&format!("c10_M = {}\n", num(self.material.c10_m)));
        s.push_str(&format!("c10_A = {}\n", num(self.material.c10_a)));
        s.push_str(&format!("c01_M = {}\n", num(self.material.c01_m)));
        s.push_str(&format!("c01_A = {}\n", num(self.material.c01_a)));
        s.push_str(&format!("k1_M = {}\n", num(self.material.k1_m)));
        s.push_str(&format!("k1_A = {}\n", num(self.material.k1_a)));
        s.push_str(&format!("k2_M = {}\n", num(self.material.k2_m)));
        s.push_str(&format!("k2_A = {}\n", num(self.material.k2_a)));
        s.push_str(&format!("kappa = {}\n", num(self.material.kappa)));
        s.push_str(&format!("rho_s = {}\n", num(self.material.rho_s)));
        s.push_str(&format!("alpha_M = {}\n", num(self.material.alpha_m)));
        s.push_str(&format!("alpha_A = {}\n", num(self.material.alpha_a)));
        s.push_str("\n[fluid]\n");
        s.push_str(&format!("rho_f = {}\n", num(self.fluid.rho_f)));
        s.push_str(&format!("mu = {}\n", num(self.fluid.mu)));
        s.push_str(&format!("g_in = {}\n", num(self.fluid.g_in)));
        s.push_str(&format!("g_cutoff = {}\n", num(self.fluid.g_cutoff)));
        s.push_str("\n[time]\n");
        s.push_str(&format!("dt = {}\n", num(self.time.dt)));
        s.push_str(&format!("t_end = {}\n", num(self.time.t_end)));
        s.push_str(&format!("newmark_beta = {}\n", num(self.time.newmark_beta)));
        s.push_str(&format!(
            "newmark_gamma = {}\n",
            num(self.time.newmark_gamma)
        ));
        s.push_str("\n[nonlinear]\n");
        s.push_str(&format!("eps_n = {}\n", self.nonlinear.eps_n));
        s.push_str(&format!("eps_l = {}\n", self.nonlinear.eps_l));
        s.push_str(&format!("max_iter = {}\n", self.nonlinear.max_iter));
        s.push_str(&format!("line_search = {}\n", self.nonlinear.line_search));
        s.push_str("\n[solver]\n");
        s.push_str(&format!("method = {}\n", self.solver.method));
        s.push_str(&format!("omega = {}\n", num(self.solver.omega)));
        s.push_str(&format!("m_pre = {}\n", self.solver.m_pre));
        s.push_str(&format!("m_post = {}\n", self.solver.m_post));
        s.push_str(&format!("nu = {}\n", self.solver.nu));
        s.push_str(&format!("coarse_limit = {}\n", self.solver.coarse_limit));
        s.push_str(&format!("theta = {}\n", num(self.solver.theta)));
        s.push_str(&format!(
            "structure_pspg = {}\n",
            num(self.solver.structure_pspg)
        ));
        s.push_str(&format!("max_iter = {}\n", self.solver.max_iter));
        s.push_str("\n[output]\n");
        s.push_str(&format!("dir = {}\n", self.output.dir));
        if !self.output.snapshot_times.is_empty() {
            let times: Vec<String> = self.output.snapshot_times.iter().map(|t| num(*t)).collect();
            s.push_str(&format!("snapshot_times = {}\n", times.join(",")));
        }
        s.push_str(&format!("vtk = {}\n", self.output.vtk));
        s.push_str(&format!(
            "centerline_samples = {}\n",
            self.output.centerline_samples
        ));
        s.push_str("\n[bench]\n");
        s.push_str(&format!("models = {}\n", self.bench.models.join(",")));
        s.push_str(&format!("tiers = {}\n", self.bench.tiers.join(",")));
        s.push_str(&format!("methods = {}\n", self.bench.methods.join(",")));
        if !self.bench.omegas.is_empty() {
            let os: Vec<String> = self.bench.omegas.iter().map(|t| num(*t)).collect();
            s.push_str(&format!("omegas = {}\n", os.join(",")));
        }
        s
    }
}
