//! Parametric two-layer tube meshes with a conforming fluid-structure
//! interface, uniform refinement, a line-oriented dump format and legacy
//! ASCII VTK export.
//!
//! The cross-section is a butterfly layout: a Cartesian square core, a ring
//! of transition cells blending the square onto the lumen circle, and polar
//! rings for the media and adventitia layers. Every cell is a quad, each
//! quad is split into two triangles by the smaller-node-id diagonal, and the
//! triangles are extruded along z into prisms that are cut into three
//! tetrahedra each (six per original hex cell). Because the prism face
//! diagonals depend only on the 2D node ordering, the split conforms across
//! all neighbors, including the fluid-structure interface where the node
//! rings are duplicated.

use crate::error::Error;
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subdomain {
    Lumen,
    Media,
    Adventitia,
}

impl Subdomain {
    pub fn is_fluid(self) -> bool {
        self == Subdomain::Lumen
    }

    pub fn tag(self) -> u8 {
        match self {
            Subdomain::Lumen => 0,
            Subdomain::Media => 1,
            Subdomain::Adventitia => 2,
        }
    }

    fn from_tag(t: u8) -> Result<Self, Error> {
        match t {
            0 => Ok(Subdomain::Lumen),
            1 => Ok(Subdomain::Media),
            2 => Ok(Subdomain::Adventitia),
            _ => Err(Error::MeshFormat(format!("bad subdomain tag {t}"))),
        }
    }
}

/// Boundary patch tags.
///
/// The fluid end rings (the curves where the fluid wall meets the tube
/// ends, `u = 0` there) are a node set rather than a face patch; see
/// [`FsiMesh::fluid_end_ring_nodes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Patch {
    Inflow,
    Outflow,
    /// Fluid side of the interface.
    FluidWall,
    /// Structure side of the interface.
    StructInner,
    /// Structure ring ends (homogeneous Dirichlet).
    StructDirichlet,
    /// Outer wall (traction free).
    StructNeumann,
}

impl Patch {
    pub fn tag(self) -> u8 {
        match self {
            Patch::Inflow => 0,
            Patch::Outflow => 1,
            Patch::FluidWall => 2,
            Patch::StructInner => 3,
            Patch::StructDirichlet => 4,
            Patch::StructNeumann => 5,
        }
    }

    fn from_tag(t: u8) -> Result<Self, Error> {
        Ok(match t {
            0 => Patch::Inflow,
            1 => Patch::Outflow,
            2 => Patch::FluidWall,
            3 => Patch::StructInner,
            4 => Patch::StructDirichlet,
            5 => Patch::StructNeumann,
            _ => return Err(Error::MeshFormat(format!("bad patch tag {t}"))),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryFace {
    pub nodes: [usize; 3],
    pub patch: Patch,
}

/// Conforming tetrahedral FSI mesh.
///
/// Fluid nodes come first (`0..n_fluid_nodes`), structure nodes after;
/// interface nodes are duplicated and identified through `interface_pairs`.
#[derive(Debug, Clone)]
pub struct FsiMesh {
    pub nodes: Vec<[f64; 3]>,
    pub n_fluid_nodes: usize,
    pub tets: Vec<[usize; 4]>,
    pub subdomain: Vec<Subdomain>,
    pub faces: Vec<BoundaryFace>,
    /// (fluid node, structure node) identifications on the interface.
    pub interface_pairs: Vec<(usize, usize)>,
    /// Radii of the construction cylinders; refinement snaps new nodes whose
    /// parent edge lies on one of these surfaces back onto it.
    pub surface_radii: Vec<f64>,
    pub length: f64,
}

/// Parametric tube description. Lengths in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeSpec {
    pub inner_radius: f64,
    pub media_thickness: f64,
    pub adventitia_thickness: f64,
    pub length: f64,
    pub n_axial: usize,
    /// Circumferential subdivisions; must be a multiple of 4.
    pub n_circ: usize,
    /// Transition rings between the square core and the lumen circle.
    pub n_radial_fluid: usize,
    pub n_radial_media: usize,
    pub n_radial_adv: usize,
}

impl Default for TubeSpec {
    fn default() -> Self {
        TubeSpec {
            inner_radius: 1.43,
            media_thickness: 0.26,
            adventitia_thickness: 0.13,
            length: 18.0,
            n_axial: 12,
            n_circ: 16,
            n_radial_fluid: 2,
            n_radial_media: 1,
            n_radial_adv: 1,
        }
    }
}

impl TubeSpec {
    /// The desk-scale coarse tier, calibrated to roughly 7e3 coupled DOF.
    pub fn coarse() -> Self {
        TubeSpec::default()
    }

    /// The desk-scale intermediate tier, calibrated to roughly 38e3 coupled
    /// DOF (element size roughly halved against the coarse tier).
    pub fn intermediate() -> Self {
        TubeSpec {
            n_axial: 26,
            n_circ: 24,
            n_radial_fluid: 4,
            n_radial_media: 2,
            n_radial_adv: 1,
            ..TubeSpec::default()
        }
    }

    fn validate(&self) -> Result<(), Error> {
        if self.n_axial == 0
            || self.n_circ == 0
            || self.n_radial_fluid == 0
            || self.n_radial_media == 0
            || self.n_radial_adv == 0
        {
            return Err(Error::DegenerateSpec("zero subdivision count".into()));
        }
        if self.n_circ % 4 != 0 {
            return Err(Error::DegenerateSpec(format!(
                "n_circ = {} is not a multiple of 4",
                self.n_circ
            )));
        }
        if self.inner_radius <= 0.0
            || self.media_thickness <= 0.0
            || self.adventitia_thickness <= 0.0
            || self.length <= 0.0
        {
            return Err(Error::DegenerateSpec("non-positive dimension".into()));
        }
        Ok(())
    }
}

struct CrossSection {
    fluid: Vec<[f64; 2]>,
    structure: Vec<[f64; 2]>,
    fluid_quads: Vec<[usize; 4]>,
    struct_quads: Vec<([usize; 4], Subdomain)>,
    /// (fluid 2d id, structure 2d id) pairs along the interface ring.
    iface: Vec<(usize, usize)>,
}

fn build_cross_section(spec: &TubeSpec) -> CrossSection {
    let n0 = spec.n_circ / 4;
    let r_i = spec.inner_radius;
    let half = 0.5 * r_i;
    let step = 2.0 * half / n0 as f64;

    let mut fluid: Vec<[f64; 2]> = Vec::new();
    let core_id = |i: usize, j: usize| j * (n0 + 1) + i;
    for j in 0..=n0 {
        for i in 0..=n0 {
            fluid.push([-half + i as f64 * step, -half + j as f64 * step]);
        }
    }

    // perimeter of the square, counterclockwise from the (+x, -y) corner
    let mut perimeter: Vec<usize> = Vec::with_capacity(spec.n_circ);
    for t in 0..n0 {
        perimeter.push(core_id(n0, t));
    }
    for t in 0..n0 {
        perimeter.push(core_id(n0 - t, n0));
    }
    for t in 0..n0 {
        perimeter.push(core_id(0, n0 - t));
    }
    for t in 0..n0 {
        perimeter.push(core_id(t, 0));
    }

    // transition rings: radial blend from square perimeter to the circle
    let mut rings: Vec<Vec<usize>> = vec![perimeter.clone()];
    for ring in 1..=spec.n_radial_fluid {
        let s = ring as f64 / spec.n_radial_fluid as f64;
        let mut ids = Vec::with_capacity(spec.n_circ);
        for k in 0..spec.n_circ {
            let p = fluid[perimeter[k]];
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let unit = [p[0] / r, p[1] / r];
            let target = [unit[0] * r_i, unit[1] * r_i];
            let x = [p[0] + s * (target[0] - p[0]), p[1] + s * (target[1] - p[1])];
            ids.push(fluid.len());
            fluid.push(x);
        }
        rings.push(ids);
    }
    let iface_ring_fluid = rings.last().unwrap().clone();

    let mut fluid_quads = Vec::new();
    for j in 0..n0 {
        for i in 0..n0 {
            fluid_quads.push([
                core_id(i, j),
                core_id(i + 1, j),
                core_id(i + 1, j + 1),
                core_id(i, j + 1),
            ]);
        }
    }
    for w in rings.windows(2) {
        let (inner, outer) = (&w[0], &w[1]);
        for k in 0..spec.n_circ {
            let kn = (k + 1) % spec.n_circ;
            fluid_quads.push([inner[k], inner[kn], outer[kn], outer[k]]);
        }
    }

    // structure: duplicated interface ring, then media and adventitia rings
    let mut structure: Vec<[f64; 2]> = Vec::new();
    let mut srings: Vec<Vec<usize>> = Vec::new();
    let n_media = spec.n_radial_media;
    let n_adv = spec.n_radial_adv;
    for ring in 0..=(n_media + n_adv) {
        let r = if ring == 0 {
            r_i
        } else if ring <= n_media {
            r_i + spec.media_thickness * ring as f64 / n_media as f64
        } else {
            r_i + spec.media_thickness
                + spec.adventitia_thickness * (ring - n_media) as f64 / n_adv as f64
        };
        let mut ids = Vec::with_capacity(spec.n_circ);
        for k in 0..spec.n_circ {
            let p = fluid[perimeter[k]];
            let pr = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let unit = [p[0] / pr, p[1] / pr];
            ids.push(structure.len());
            structure.push([unit[0] * r, unit[1] * r]);
        }
        srings.push(ids);
    }

    let mut struct_quads = Vec::new();
    for (ri, w) in srings.windows(2).enumerate() {
        let sd = if ri < n_media {
            Subdomain::Media
        } else {
            Subdomain::Adventitia
        };
        let (inner, outer) = (&w[0], &w[1]);
        for k in 0..spec.n_circ {
            let kn = (k + 1) % spec.n_circ;
            struct_quads.push(([inner[k], inner[kn], outer[kn], outer[k]], sd));
        }
    }

    let iface = iface_ring_fluid
        .iter()
        .zip(srings[0].iter())
        .map(|(&f, &s)| (f, s))
        .collect();

    CrossSection {
        fluid,
        structure,
        fluid_quads,
        struct_quads,
        iface,
    }
}

/// Splits a prism over triangle `(a, b, c)` (2D ids, layers `k`/`k+1`) into
/// three tetrahedra using the ascending-id diagonal rule; `node` maps
/// (2d id, layer) to 3D ids. The rule depends only on the 2D ordering, so
/// neighboring prisms agree on the shared quad-face diagonal.
fn prism_tets(tri: [usize; 3], k: usize, node: &dyn Fn(usize, usize) -> usize) -> [[usize; 4]; 3] {
    let mut s = tri;
    s.sort_unstable();
    let [a, b, c] = s;
    let (a0, b0, c0) = (node(a, k), node(b, k), node(c, k));
    let (a1, b1, c1) = (node(a, k + 1), node(b, k + 1), node(c, k + 1));
    [[a0, b0, c0, c1], [a0, b0, c1, b1], [a0, b1, c1, a1]]
}

fn tet_volume_of(nodes: &[[f64; 3]], t: &[usize; 4]) -> f64 {
    let p = |i: usize| nodes[t[i]];
    let (p0, p1, p2, p3) = (p(0), p(1), p(2), p(3));
    let d1 = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
    let d2 = [p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]];
    let d3 = [p3[0] - p0[0], p3[1] - p0[1], p3[2] - p0[2]];
    let cx = d1[1] * d2[2] - d1[2] * d2[1];
    let cy = d1[2] * d2[0] - d1[0] * d2[2];
    let cz = d1[0] * d2[1] - d1[1] * d2[0];
    (cx * d3[0] + cy * d3[1] + cz * d3[2]) / 6.0
}

/// Builds the conforming two-layer tube mesh.
pub fn build_tube(spec: &TubeSpec) -> Result<FsiMesh, Error> {
    spec.validate()?;
    let cs = build_cross_section(spec);
    let n2f = cs.fluid.len();
    let n2s = cs.structure.len();
    let layers = spec.n_axial + 1;
    let dz = spec.length / spec.n_axial as f64;

    let mut nodes = Vec::with_capacity((n2f + n2s) * layers);
    for k in 0..layers {
        let z = k as f64 * dz;
        for p in &cs.fluid {
            nodes.push([p[0], p[1], z]);
        }
    }
    let n_fluid_nodes = nodes.len();
    for k in 0..layers {
        let z = k as f64 * dz;
        for p in &cs.structure {
            nodes.push([p[0], p[1], z]);
        }
    }

    let fnode = move |id2: usize, k: usize| k * n2f + id2;
    let snode = move |id2: usize, k: usize| n_fluid_nodes + k * n2s + id2;

    let mut tris_f: Vec<[usize; 3]> = Vec::new();
    for q in &cs.fluid_quads {
        for t in split_quad(*q, &cs.fluid) {
            tris_f.push(t);
        }
    }
    let mut tris_s: Vec<([usize; 3], Subdomain)> = Vec::new();
    for (q, sd) in &cs.struct_quads {
        for t in split_quad(*q, &cs.structure) {
            tris_s.push((t, *sd));
        }
    }

    let mut tets = Vec::new();
    let mut subdomain = Vec::new();
    for k in 0..spec.n_axial {
        for t in &tris_f {
            for tet in prism_tets(*t, k, &fnode) {
                tets.push(tet);
                subdomain.push(Subdomain::Lumen);
            }
        }
        for (t, sd) in &tris_s {
            for tet in prism_tets(*t, k, &snode) {
                tets.push(tet);
                subdomain.push(*sd);
            }
        }
    }

    for t in tets.iter_mut() {
        if tet_volume_of(&nodes, t) < 0.0 {
            t.swap(2, 3);
        }
    }

    let mut interface_pairs = Vec::with_capacity(cs.iface.len() * layers);
    for k in 0..layers {
        for &(f2, s2) in &cs.iface {
            interface_pairs.push((fnode(f2, k), snode(s2, k)));
        }
    }

    let r_i = spec.inner_radius;
    let mut surface_radii = vec![r_i];
    for ring in 1..=spec.n_radial_media {
        surface_radii.push(r_i + spec.media_thickness * ring as f64 / spec.n_radial_media as f64);
    }
    for ring in 1..=spec.n_radial_adv {
        surface_radii.push(
            r_i + spec.media_thickness
                + spec.adventitia_thickness * ring as f64 / spec.n_radial_adv as f64,
        );
    }

    let mut mesh = FsiMesh {
        nodes,
        n_fluid_nodes,
        tets,
        subdomain,
        faces: Vec::new(),
        interface_pairs,
        surface_radii,
        length: spec.length,
    };
    mesh.faces = extract_boundary_faces(&mesh)?;
    mesh.check_invariants()?;
    Ok(mesh)
}

/// Split a quad by the diagonal through its smallest node id, keeping both
/// triangles counterclockwise.
fn split_quad(q: [usize; 4], pts: &[[f64; 2]]) -> [[usize; 3]; 2] {
    let off = (0..4).min_by_key(|&i| q[i]).unwrap();
    let r = [q[off], q[(off + 1) % 4], q[(off + 2) % 4], q[(off + 3) % 4]];
    let mut out = [[r[0], r[1], r[2]], [r[0], r[2], r[3]]];
    for t in out.iter_mut() {
        let a = pts[t[0]];
        let b = pts[t[1]];
        let c = pts[t[2]];
        let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if cross < 0.0 {
            t.swap(1, 2);
        }
    }
    out
}

/// Finds all faces that belong to exactly one tet and classifies them
/// geometrically.
fn extract_boundary_faces(mesh: &FsiMesh) -> Result<Vec<BoundaryFace>, Error> {
    let mut count: HashMap<[usize; 3], (usize, usize)> = HashMap::new();
    const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];
    for (ti, tet) in mesh.tets.iter().enumerate() {
        for (fi, f) in FACES.iter().enumerate() {
            let mut key = [tet[f[0]], tet[f[1]], tet[f[2]]];
            key.sort_unstable();
            count
                .entry(key)
                .and_modify(|e| e.1 += 1)
                .or_insert((ti * 4 + fi, 1));
        }
    }
    let mut faces = Vec::new();
    let eps = 1e-9 * mesh.length.max(1.0);
    let r_iface = mesh.surface_radii.first().copied().unwrap_or(0.0);
    let r_outer = mesh.surface_radii.last().copied().unwrap_or(0.0);
    let mut singles: Vec<usize> = count
        .values()
        .filter(|v| v.1 == 1)
        .map(|v| v.0)
        .collect();
    singles.sort_unstable();
    for code in singles {
        let (ti, fi) = (code / 4, code % 4);
        let tet = mesh.tets[ti];
        let f = FACES[fi];
        let tri = [tet[f[0]], tet[f[1]], tet[f[2]]];
        let is_fluid = mesh.subdomain[ti].is_fluid();
        let zs: Vec<f64> = tri.iter().map(|&n| mesh.nodes[n][2]).collect();
        let rs: Vec<f64> = tri
            .iter()
            .map(|&n| (mesh.nodes[n][0].powi(2) + mesh.nodes[n][1].powi(2)).sqrt())
            .collect();
        let patch = if zs.iter().all(|&z| z.abs() < eps) {
            if is_fluid {
                Patch::Inflow
            } else {
                Patch::StructDirichlet
            }
        } else if zs.iter().all(|&z| (z - mesh.length).abs() < eps) {
            if is_fluid {
                Patch::Outflow
            } else {
                Patch::StructDirichlet
            }
        } else if is_fluid && rs.iter().all(|&r| (r - r_iface).abs() < eps) {
            Patch::FluidWall
        } else if !is_fluid && rs.iter().all(|&r| (r - r_iface).abs() < eps) {
            Patch::StructInner
        } else if !is_fluid && rs.iter().all(|&r| (r - r_outer).abs() < eps) {
            Patch::StructNeumann
        } else {
            return Err(Error::MeshFormat(format!(
                "unclassifiable boundary face {tri:?}"
            )));
        };
        faces.push(BoundaryFace { nodes: tri, patch });
    }
    Ok(faces)
}

impl FsiMesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_struct_nodes(&self) -> usize {
        self.nodes.len() - self.n_fluid_nodes
    }

    /// Total coupled degrees of freedom: 7 per fluid node (mesh displacement,
    /// velocity, pressure), 4 per structure node (displacement, pressure).
    pub fn total_dof(&self) -> usize {
        7 * self.n_fluid_nodes + 4 * self.n_struct_nodes()
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        tet_volume_of(&self.nodes, &self.tets[t])
    }

    /// Fluid nodes on the end rings (intersection of the fluid wall with the
    /// inflow/outflow planes); velocity is constrained to zero there.
    pub fn fluid_end_ring_nodes(&self) -> Vec<usize> {
        let eps = 1e-9 * self.length.max(1.0);
        let mut wall = vec![false; self.n_nodes()];
        for f in &self.faces {
            if f.patch == Patch::FluidWall {
                for &n in &f.nodes {
                    wall[n] = true;
                }
            }
        }
        (0..self.n_fluid_nodes)
            .filter(|&n| {
                wall[n]
                    && (self.nodes[n][2].abs() < eps
                        || (self.nodes[n][2] - self.length).abs() < eps)
            })
            .collect()
    }

    pub fn nodes_on_patch(&self, patch: Patch) -> Vec<usize> {
        let mut mask = vec![false; self.n_nodes()];
        for f in &self.faces {
            if f.patch == patch {
                for &n in &f.nodes {
                    mask[n] = true;
                }
            }
        }
        (0..self.n_nodes()).filter(|&n| mask[n]).collect()
    }

    pub fn patch_area(&self, patch: Patch) -> f64 {
        self.faces
            .iter()
            .filter(|f| f.patch == patch)
            .map(|f| self.face_area(f))
            .sum()
    }

    pub fn face_area(&self, f: &BoundaryFace) -> f64 {
        let [a, b, c] = f.nodes;
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        let u = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
        let v = [pc[0] - pa[0], pc[1] - pa[1], pc[2] - pa[2]];
        let cx = u[1] * v[2] - u[2] * v[1];
        let cy = u[2] * v[0] - u[0] * v[2];
        let cz = u[0] * v[1] - u[1] * v[0];
        0.5 * (cx * cx + cy * cy + cz * cz).sqrt()
    }

    /// Outward unit normal of a boundary face.
    pub fn face_normal(&self, f: &BoundaryFace) -> [f64; 3] {
        let [a, b, c] = f.nodes;
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        let u = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
        let v = [pc[0] - pa[0], pc[1] - pa[1], pc[2] - pa[2]];
        let mut n = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        for x in n.iter_mut() {
            *x /= len;
        }
        let centroid = [
            (pa[0] + pb[0] + pc[0]) / 3.0,
            (pa[1] + pb[1] + pc[1]) / 3.0,
            (pa[2] + pb[2] + pc[2]) / 3.0,
        ];
        let outward = match f.patch {
            Patch::Inflow => [0.0, 0.0, -1.0],
            Patch::Outflow => [0.0, 0.0, 1.0],
            Patch::FluidWall | Patch::StructNeumann => {
                let r = (centroid[0] * centroid[0] + centroid[1] * centroid[1]).sqrt();
                [centroid[0] / r, centroid[1] / r, 0.0]
            }
            Patch::StructInner => {
                let r = (centroid[0] * centroid[0] + centroid[1] * centroid[1]).sqrt();
                [-centroid[0] / r, -centroid[1] / r, 0.0]
            }
            Patch::StructDirichlet => {
                if centroid[2] < 0.5 * self.length {
                    [0.0, 0.0, -1.0]
                } else {
                    [0.0, 0.0, 1.0]
                }
            }
        };
        if n[0] * outward[0] + n[1] * outward[1] + n[2] * outward[2] < 0.0 {
            for x in n.iter_mut() {
                *x = -*x;
            }
        }
        n
    }

    pub fn check_invariants(&self) -> Result<(), Error> {
        for t in 0..self.tets.len() {
            let v = self.tet_volume(t);
            if v <= 0.0 {
                return Err(Error::MeshFormat(format!("tet {t} has volume {v}")));
            }
        }
        for &(f, s) in &self.interface_pairs {
            let (pf, ps) = (self.nodes[f], self.nodes[s]);
            let d = ((pf[0] - ps[0]).powi(2) + (pf[1] - ps[1]).powi(2) + (pf[2] - ps[2]).powi(2))
                .sqrt();
            if d > 1e-12 {
                return Err(Error::MeshFormat(format!(
                    "interface pair ({f}, {s}) separated by {d:e}"
                )));
            }
            if f >= self.n_fluid_nodes || s < self.n_fluid_nodes {
                return Err(Error::MeshFormat("interface pair side mismatch".into()));
            }
        }
        let mut seen_f = std::collections::HashSet::new();
        let mut seen_s = std::collections::HashSet::new();
        for &(f, s) in &self.interface_pairs {
            if !seen_f.insert(f) || !seen_s.insert(s) {
                return Err(Error::MeshFormat("interface pairs not a bijection".into()));
            }
        }
        Ok(())
    }

    pub fn lumen_volume(&self) -> f64 {
        (0..self.tets.len())
            .filter(|&t| self.subdomain[t].is_fluid())
            .map(|t| self.tet_volume(t))
            .sum()
    }
}

/// Uniformly refines the mesh, splitting each tet 1:8; new nodes whose parent
/// edge lies on a construction cylinder are snapped back onto it so the
/// geometry converges under refinement. Tags and interface pairs are
/// inherited.
pub fn uniform_refine(mesh: &FsiMesh) -> FsiMesh {
    let old_fluid = mesh.n_fluid_nodes;
    let edge = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };

    let mut edges_fluid: Vec<(usize, usize)> = Vec::new();
    let mut edges_struct: Vec<(usize, usize)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for tet in &mesh.tets {
        for i in 0..4 {
            for j in (i + 1)..4 {
                let e = edge(tet[i], tet[j]);
                if seen.insert(e) {
                    if e.0 < old_fluid {
                        edges_fluid.push(e);
                    } else {
                        edges_struct.push(e);
                    }
                }
            }
        }
    }
    edges_fluid.sort_unstable();
    edges_struct.sort_unstable();

    let snap = |a: usize, b: usize, p: &mut [f64; 3]| {
        let ra = (mesh.nodes[a][0].powi(2) + mesh.nodes[a][1].powi(2)).sqrt();
        let rb = (mesh.nodes[b][0].powi(2) + mesh.nodes[b][1].powi(2)).sqrt();
        if (ra - rb).abs() > 1e-9 {
            return;
        }
        for &rs in &mesh.surface_radii {
            if (ra - rs).abs() < 1e-9 {
                let rp = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if rp > 0.0 {
                    p[0] *= rs / rp;
                    p[1] *= rs / rp;
                }
                return;
            }
        }
    };

    let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut new_nodes_fluid: Vec<[f64; 3]> = Vec::with_capacity(edges_fluid.len());
    let mut new_nodes_struct: Vec<[f64; 3]> = Vec::with_capacity(edges_struct.len());
    for &(a, b) in edges_fluid.iter().chain(edges_struct.iter()) {
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let mut p = [
            0.5 * (pa[0] + pb[0]),
            0.5 * (pa[1] + pb[1]),
            0.5 * (pa[2] + pb[2]),
        ];
        snap(a, b, &mut p);
        if a < old_fluid {
            new_nodes_fluid.push(p);
        } else {
            new_nodes_struct.push(p);
        }
    }
    let n_fluid_new = old_fluid + edges_fluid.len();
    let old_struct = mesh.n_struct_nodes();
    let map_old = |n: usize| if n < old_fluid { n } else { n + edges_fluid.len() };
    for (i, &e) in edges_fluid.iter().enumerate() {
        mid.insert(e, old_fluid + i);
    }
    for (i, &e) in edges_struct.iter().enumerate() {
        mid.insert(e, n_fluid_new + old_struct + i);
    }
    let mut nodes = Vec::with_capacity(mesh.n_nodes() + mid.len());
    nodes.extend_from_slice(&mesh.nodes[..old_fluid]);
    nodes.extend_from_slice(&new_nodes_fluid);
    nodes.extend_from_slice(&mesh.nodes[old_fluid..]);
    nodes.extend_from_slice(&new_nodes_struct);

    let m = |a: usize, b: usize| mid[&edge(a, b)];
    let mut tets = Vec::with_capacity(8 * mesh.tets.len());
    let mut subdomain = Vec::with_capacity(8 * mesh.tets.len());
    for (ti, tet) in mesh.tets.iter().enumerate() {
        let [v0, v1, v2, v3] = *tet;
        let (m01, m02, m03) = (m(v0, v1), m(v0, v2), m(v0, v3));
        let (m12, m13, m23) = (m(v1, v2), m(v1, v3), m(v2, v3));
        let children = [
            [map_old(v0), m01, m02, m03],
            [m01, map_old(v1), m12, m13],
            [m02, m12, map_old(v2), m23],
            [m03, m13, m23, map_old(v3)],
            [m01, m02, m03, m13],
            [m01, m02, m12, m13],
            [m02, m03, m13, m23],
            [m02, m12, m13, m23],
        ];
        for mut c in children {
            if tet_volume_of(&nodes, &c) < 0.0 {
                c.swap(2, 3);
            }
            tets.push(c);
            subdomain.push(mesh.subdomain[ti]);
        }
    }

    let pair_of: HashMap<usize, usize> = mesh.interface_pairs.iter().copied().collect();
    let mut interface_pairs: Vec<(usize, usize)> = mesh
        .interface_pairs
        .iter()
        .map(|&(f, s)| (f, map_old(s)))
        .collect();
    let mut iface_edges = std::collections::HashSet::new();
    for f in &mesh.faces {
        if f.patch == Patch::FluidWall {
            let [a, b, c] = f.nodes;
            for e in [edge(a, b), edge(b, c), edge(a, c)] {
                iface_edges.insert(e);
            }
        }
    }
    for &(a, b) in &iface_edges {
        let (sa, sb) = (pair_of[&a], pair_of[&b]);
        interface_pairs.push((m(a, b), m(sa, sb)));
    }
    interface_pairs.sort_unstable();

    let mut faces = Vec::with_capacity(4 * mesh.faces.len());
    for f in &mesh.faces {
        let [a, b, c] = f.nodes;
        let (mab, mbc, mac) = (m(a, b), m(b, c), m(a, c));
        for tri in [
            [map_old(a), mab, mac],
            [mab, map_old(b), mbc],
            [mac, mbc, map_old(c)],
            [mab, mbc, mac],
        ] {
            faces.push(BoundaryFace {
                nodes: tri,
                patch: f.patch,
            });
        }
    }

    FsiMesh {
        nodes,
        n_fluid_nodes: n_fluid_new,
        tets,
        subdomain,
        faces,
        interface_pairs,
        surface_radii: mesh.surface_radii.clone(),
        length: mesh.length,
    }
}

/// Legacy ASCII VTK unstructured-grid export with named nodal arrays and the
/// subdomain tag as cell data.
pub fn export_vtk<W: Write>(
    mesh: &FsiMesh,
    fields: &[(&str, &[f64])],
    w: &mut W,
) -> Result<(), Error> {
    for (name, data) in fields {
        if data.len() != mesh.n_nodes() {
            return Err(Error::FieldLengthMismatch {
                name: name.to_string(),
                got: data.len(),
                want: mesh.n_nodes(),
            });
        }
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "fsi tube")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_nodes())?;
    for p in &mesh.nodes {
        writeln!(w, "{:.12e} {:.12e} {:.12e}", p[0], p[1], p[2])?;
    }
    writeln!(w, "CELLS {} {}", mesh.tets.len(), 5 * mesh.tets.len())?;
    for t in &mesh.tets {
        writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.tets.len())?;
    for _ in &mesh.tets {
        writeln!(w, "10")?;
    }
    writeln!(w, "CELL_DATA {}", mesh.tets.len())?;
    writeln!(w, "SCALARS subdomain int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for s in &mesh.subdomain {
        writeln!(w, "{}", s.tag())?;
    }
    if !fields.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.n_nodes())?;
        for (name, data) in fields {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in data.iter() {
                writeln!(w, "{:.12e}", v)?;
            }
        }
    }
    Ok(())
}

/// Minimal legacy-VTK reader for round-trip tests: points, tet cells and
/// named scalar point arrays.
pub fn read_vtk_points_and_scalars<R: BufRead>(
    r: &mut R,
) -> Result<(Vec<[f64; 3]>, Vec<[usize; 4]>, Vec<(String, Vec<f64>)>), Error> {
    let lines: Vec<String> = r.lines().collect::<Result<_, _>>()?;
    let mut points = Vec::new();
    let mut cells = Vec::new();
    let mut scalars = Vec::new();
    let mut in_point_data = false;
    let mut i = 0usize;
    let bad = |msg: &str| Error::MeshFormat(format!("vtk: {msg}"));
    while i < lines.len() {
        let line = lines[i].trim().to_string();
        if let Some(rest) = line.strip_prefix("POINTS ") {
            let n: usize = rest
                .split_whitespace()
                .next()
                .ok_or_else(|| bad("POINTS"))?
                .parse()
                .map_err(|_| bad("POINTS count"))?;
            for k in 1..=n {
                let xs: Vec<f64> = lines[i + k]
                    .split_whitespace()
                    .map(|t| t.parse().unwrap())
                    .collect();
                points.push([xs[0], xs[1], xs[2]]);
            }
            i += n;
        } else if let Some(rest) = line.strip_prefix("CELLS ") {
            let n: usize = rest
                .split_whitespace()
                .next()
                .ok_or_else(|| bad("CELLS"))?
                .parse()
                .map_err(|_| bad("CELLS count"))?;
            for k in 1..=n {
                let xs: Vec<usize> = lines[i + k]
                    .split_whitespace()
                    .map(|t| t.parse().unwrap())
                    .collect();
                cells.push([xs[1], xs[2], xs[3], xs[4]]);
            }
            i += n;
        } else if line.starts_with("POINT_DATA") {
            in_point_data = true;
        } else if let Some(rest) = line.strip_prefix("SCALARS ") {
            if in_point_data {
                let name = rest.split_whitespace().next().unwrap_or("").to_string();
                let n = points.len();
                let mut vals = Vec::with_capacity(n);
                for k in 2..(2 + n) {
                    vals.push(lines[i + k].trim().parse().map_err(|_| bad("scalar"))?);
                }
                scalars.push((name, vals));
                i += 1 + n;
            }
        }
        i += 1;
    }
    Ok((points, cells, scalars))
}

/// Writes the mesh in the line-oriented text dump format (sections: length,
/// radii, nodes, tets, faces, pairs).
pub fn dump_mesh<W: Write>(mesh: &FsiMesh, w: &mut W) -> Result<(), Error> {
    writeln!(w, "fsimesh 1")?;
    writeln!(w, "length {:.17e}", mesh.length)?;
    writeln!(w, "radii {}", mesh.surface_radii.len())?;
    for r in &mesh.surface_radii {
        writeln!(w, "{:.17e}", r)?;
    }
    writeln!(w, "nodes {} {}", mesh.n_nodes(), mesh.n_fluid_nodes)?;
    for p in &mesh.nodes {
        writeln!(w, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2])?;
    }
    writeln!(w, "tets {}", mesh.tets.len())?;
    for (t, sd) in mesh.tets.iter().zip(mesh.subdomain.iter()) {
        writeln!(w, "{} {} {} {} {}", t[0], t[1], t[2], t[3], sd.tag())?;
    }
    writeln!(w, "faces {}", mesh.faces.len())?;
    for f in &mesh.faces {
        writeln!(
            w,
            "{} {} {} {}",
            f.nodes[0],
            f.nodes[1],
            f.nodes[2],
            f.patch.tag()
        )?;
    }
    writeln!(w, "pairs {}", mesh.interface_pairs.len())?;
    for &(a, b) in &mesh.interface_pairs {
        writeln!(w, "{a} {b}")?;
    }
    Ok(())
}

pub fn load_mesh<R: BufRead>(r: &mut R) -> Result<FsiMesh, Error> {
    let mut lines = r.lines();
    let mut next = || -> Result<String, Error> {
        lines
            .next()
            .ok_or_else(|| Error::MeshFormat("unexpected end of mesh dump".into()))?
            .map_err(Error::Io)
    };
    let header = next()?;
    if header.trim() != "fsimesh 1" {
        return Err(Error::MeshFormat("bad header".into()));
    }
    let length: f64 = field(&next()?, "length")?;
    let nr: usize = field(&next()?, "radii")?;
    let mut surface_radii = Vec::with_capacity(nr);
    for _ in 0..nr {
        surface_radii.push(
            next()?
                .trim()
                .parse()
                .map_err(|_| Error::MeshFormat("bad radius".into()))?,
        );
    }
    let node_hdr = next()?;
    let mut it = node_hdr.split_whitespace();
    expect(&mut it, "nodes")?;
    let nn: usize = parse_tok(&mut it)?;
    let nf: usize = parse_tok(&mut it)?;
    let mut nodes = Vec::with_capacity(nn);
    for _ in 0..nn {
        let line = next()?;
        let mut it = line.split_whitespace();
        nodes.push([
            parse_tok(&mut it)?,
            parse_tok(&mut it)?,
            parse_tok(&mut it)?,
        ]);
    }
    let nt: usize = field(&next()?, "tets")?;
    let mut tets = Vec::with_capacity(nt);
    let mut subdomain = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = next()?;
        let mut it = line.split_whitespace();
        tets.push([
            parse_tok(&mut it)?,
            parse_tok(&mut it)?,
            parse_tok(&mut it)?,
            parse_tok(&mut it)?,
        ]);
        let tag: u8 = parse_tok(&mut it)?;
        subdomain.push(Subdomain::from_tag(tag)?);
    }
    let nfaces: usize = field(&next()?, "faces")?;
    let mut faces = Vec::with_capacity(nfaces);
    for _ in 0..nfaces {
        let line = next()?;
        let mut it = line.split_whitespace();
        let nodes3 = [
            parse_tok(&mut it)?,
            parse_tok(&mut it)?,
            parse_tok(&mut it)?,
        ];
        let tag: u8 = parse_tok(&mut it)?;
        faces.push(BoundaryFace {
            nodes: nodes3,
            patch: Patch::from_tag(tag)?,
        });
    }
    let np: usize = field(&next()?, "pairs")?;
    let mut interface_pairs = Vec::with_capacity(np);
    for _ in 0..np {
        let line = next()?;
        let mut it = line.split_whitespace();
        interface_pairs.push((parse_tok(&mut it)?, parse_tok(&mut it)?));
    }
    let mesh = FsiMesh {
        nodes,
        n_fluid_nodes: nf,
        tets,
        subdomain,
        faces,
        interface_pairs,
        surface_radii,
        length,
    };
    mesh.check_invariants()?;
    Ok(mesh)
}

fn field<T: std::str::FromStr>(line: &str, name: &str) -> Result<T, Error> {
    let mut it = line.split_whitespace();
    expect(&mut it, name)?;
    parse_tok(&mut it)
}

fn expect(it: &mut std::str::SplitWhitespace, name: &str) -> Result<(), Error> {
    match it.next() {
        Some(t) if t == name => Ok(()),
        other => Err(Error::MeshFormat(format!(
            "expected `{name}`, got {other:?}"
        ))),
    }
}

fn parse_tok<T: std::str::FromStr>(it: &mut std::str::SplitWhitespace) -> Result<T, Error> {
    it.next()
        .ok_or_else(|| Error::MeshFormat("short line".into()))?
        .parse()
        .map_err(|_| Error::MeshFormat("bad token".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_spec() -> TubeSpec {
        TubeSpec {
            n_axial: 2,
            n_circ: 4,
            n_radial_fluid: 1,
            n_radial_media: 1,
            n_radial_adv: 1,
            ..TubeSpec::default()
        }
    }

    /// Every face of a subdomain complex must be shared by one or two tets.
    fn assert_conforming(mesh: &FsiMesh) {
        let mut count: HashMap<[usize; 3], usize> = HashMap::new();
        const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];
        for tet in &mesh.tets {
            for f in FACES.iter() {
                let mut key = [tet[f[0]], tet[f[1]], tet[f[2]]];
                key.sort_unstable();
                *count.entry(key).or_insert(0) += 1;
            }
        }
        for (k, c) in count {
            assert!(c <= 2, "face {k:?} shared by {c} tets");
        }
    }

    #[test]
    fn minimal_tube_conforms_and_has_six_tets_per_hex() {
        let spec = minimal_spec();
        let mesh = build_tube(&spec).unwrap();
        mesh.check_invariants().unwrap();
        assert_conforming(&mesh);
        // hex cells: (core + transition + media + adv quads) x axial layers
        let n0 = spec.n_circ / 4;
        let quads = n0 * n0
            + spec.n_circ * (spec.n_radial_fluid + spec.n_radial_media + spec.n_radial_adv);
        let hexes = quads * spec.n_axial;
        assert_eq!(mesh.tets.len(), 6 * hexes);
    }

    #[test]
    fn coarse_tier_dof_matches_reference_ladder() {
        let mesh = build_tube(&TubeSpec::coarse()).unwrap();
        let dof = mesh.total_dof() as f64;
        // reference coarse row: 6959 coupled unknowns, +/-30%
        assert!(
            dof > 0.7 * 6959.0 && dof < 1.3 * 6959.0,
            "coarse tier dof {dof}"
        );
        let mid = build_tube(&TubeSpec::intermediate()).unwrap();
        let dof = mid.total_dof() as f64;
        // reference intermediate row: 37909 coupled unknowns, +/-30%
        assert!(
            dof > 0.7 * 37909.0 && dof < 1.3 * 37909.0,
            "intermediate tier dof {dof}"
        );
    }

    #[test]
    fn doubling_all_counts_grows_nodes_about_eightfold() {
        let spec = TubeSpec::coarse();
        let doubled = TubeSpec {
            n_axial: 2 * spec.n_axial,
            n_circ: 2 * spec.n_circ,
            n_radial_fluid: 2 * spec.n_radial_fluid,
            n_radial_media: 2 * spec.n_radial_media,
            n_radial_adv: 2 * spec.n_radial_adv,
            ..spec.clone()
        };
        let coarse = build_tube(&spec).unwrap();
        let fine = build_tube(&doubled).unwrap();
        let ratio = fine.n_nodes() as f64 / coarse.n_nodes() as f64;
        // reference node growth 1034 -> 7249 is about x7, +/-30%
        assert!(
            ratio > 0.7 * 7.01 && ratio < 1.3 * 7.01,
            "node growth ratio {ratio}"
        );
    }

    #[test]
    fn refine_splits_each_tet_in_eight_and_preserves_invariants() {
        let mesh = build_tube(&minimal_spec()).unwrap();
        let fine = uniform_refine(&mesh);
        assert_eq!(fine.tets.len(), 8 * mesh.tets.len());
        fine.check_invariants().unwrap();
        assert_conforming(&fine);
        // interface bijection survives refinement
        let n_iface_edges: usize = {
            let mut set = std::collections::HashSet::new();
            for f in &mesh.faces {
                if f.patch == Patch::FluidWall {
                    let [a, b, c] = f.nodes;
                    for e in [(a.min(b), a.max(b)), (b.min(c), b.max(c)), (a.min(c), a.max(c))] {
                        set.insert(e);
                    }
                }
            }
            set.len()
        };
        assert_eq!(
            fine.interface_pairs.len(),
            mesh.interface_pairs.len() + n_iface_edges
        );
    }

    #[test]
    fn dof_ladder_ratios_match_reference_pattern() {
        let coarse = build_tube(&TubeSpec::coarse()).unwrap();
        let mid = uniform_refine(&coarse);
        let fine = uniform_refine(&mid);
        let r1 = mid.total_dof() as f64 / coarse.total_dof() as f64;
        let r2 = fine.total_dof() as f64 / mid.total_dof() as f64;
        // reference ladder 6959 / 37909 / 285167: x5.4 then x7.5, +/-40%
        assert!(r1 > 0.6 * 5.4 && r1 < 1.4 * 5.4, "first ratio {r1}");
        assert!(r2 > 0.6 * 7.5 && r2 < 1.4 * 7.5, "second ratio {r2}");
    }

    #[test]
    fn lumen_volume_close_and_converging() {
        let spec = TubeSpec::coarse();
        let mesh = build_tube(&spec).unwrap();
        let exact = std::f64::consts::PI * spec.inner_radius.powi(2) * spec.length;
        let v0 = mesh.lumen_volume();
        let err0 = (v0 - exact).abs() / exact;
        assert!(err0 < 0.05, "coarse lumen volume error {err0}");
        let fine = uniform_refine(&mesh);
        let err1 = (fine.lumen_volume() - exact).abs() / exact;
        assert!(err1 < err0, "refinement did not converge: {err0} -> {err1}");
    }

    #[test]
    fn boundary_tags_partition_the_boundary() {
        let mesh = build_tube(&minimal_spec()).unwrap();
        // extraction yields each boundary face once; check uniqueness of keys
        let mut seen = std::collections::HashSet::new();
        for f in &mesh.faces {
            let mut key = f.nodes;
            key.sort_unstable();
            assert!(seen.insert(key), "face tagged twice: {key:?}");
        }
        // every patch is present
        for p in [
            Patch::Inflow,
            Patch::Outflow,
            Patch::FluidWall,
            Patch::StructInner,
            Patch::StructDirichlet,
            Patch::StructNeumann,
        ] {
            assert!(
                mesh.faces.iter().any(|f| f.patch == p),
                "patch {p:?} missing"
            );
        }
        // fluid wall and structure inner faces pair up through the bijection
        let pair: HashMap<usize, usize> = mesh.interface_pairs.iter().copied().collect();
        let wall_count = mesh.faces.iter().filter(|f| f.patch == Patch::FluidWall).count();
        let inner_count = mesh
            .faces
            .iter()
            .filter(|f| f.patch == Patch::StructInner)
            .count();
        assert_eq!(wall_count, inner_count);
        let inner_keys: std::collections::HashSet<[usize; 3]> = mesh
            .faces
            .iter()
            .filter(|f| f.patch == Patch::StructInner)
            .map(|f| {
                let mut k = f.nodes;
                k.sort_unstable();
                k
            })
            .collect();
        for f in mesh.faces.iter().filter(|f| f.patch == Patch::FluidWall) {
            let mut mapped = [pair[&f.nodes[0]], pair[&f.nodes[1]], pair[&f.nodes[2]]];
            mapped.sort_unstable();
            assert!(inner_keys.contains(&mapped), "wall face without twin");
        }
    }

    #[test]
    fn end_ring_nodes_sit_on_both_wall_and_ends() {
        let mesh = build_tube(&minimal_spec()).unwrap();
        let rim = mesh.fluid_end_ring_nodes();
        assert_eq!(rim.len(), 2 * 4); // n_circ nodes per end
        for &n in &rim {
            let p = mesh.nodes[n];
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - mesh.surface_radii[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        let mut spec = minimal_spec();
        spec.n_axial = 0;
        assert!(matches!(
            build_tube(&spec),
            Err(Error::DegenerateSpec(_))
        ));
        let mut spec = minimal_spec();
        spec.n_circ = 6;
        assert!(build_tube(&spec).is_err());
    }

    #[test]
    fn vtk_roundtrip_constant_field() {
        let mesh = build_tube(&minimal_spec()).unwrap();
        let field = vec![1.0; mesh.n_nodes()];
        let mut buf = Vec::new();
        export_vtk(&mesh, &[("pressure", &field)], &mut buf).unwrap();
        let (pts, cells, scalars) =
            read_vtk_points_and_scalars(&mut std::io::Cursor::new(buf)).unwrap();
        assert_eq!(pts.len(), mesh.n_nodes());
        assert_eq!(cells.len(), mesh.tets.len());
        assert_eq!(scalars.len(), 1);
        assert_eq!(scalars[0].0, "pressure");
        assert!(scalars[0].1.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn vtk_empty_field_set_is_valid() {
        let mesh = build_tube(&minimal_spec()).unwrap();
        let mut buf = Vec::new();
        export_vtk(&mesh, &[], &mut buf).unwrap();
        let (pts, cells, scalars) =
            read_vtk_points_and_scalars(&mut std::io::Cursor::new(buf)).unwrap();
        assert_eq!(pts.len(), mesh.n_nodes());
        assert_eq!(cells.len(), mesh.tets.len());
        assert!(scalars.is_empty());
    }

    #[test]
    fn vtk_rejects_wrong_field_length() {
        let mesh = build_tube(&minimal_spec()).unwrap();
        let field = vec![0.0; 3];
        let mut buf = Vec::new();
        assert!(matches!(
            export_vtk(&mesh, &[("u", &field)], &mut buf),
            Err(Error::FieldLengthMismatch { .. })
        ));
    }

    #[test]
    fn dump_load_roundtrip() {
        let mesh = build_tube(&minimal_spec()).unwrap();
        let mut buf = Vec::new();
        dump_mesh(&mesh, &mut buf).unwrap();
        let loaded = load_mesh(&mut std::io::Cursor::new(buf)).unwrap();
        assert_eq!(loaded.n_nodes(), mesh.n_nodes());
        assert_eq!(loaded.n_fluid_nodes, mesh.n_fluid_nodes);
        assert_eq!(loaded.tets, mesh.tets);
        assert_eq!(loaded.interface_pairs, mesh.interface_pairs);
        for (a, b) in loaded.nodes.iter().zip(mesh.nodes.iter()) {
            for i in 0..3 {
                assert_eq!(a[i], b[i]);
            }
        }
    }
}
