//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use fsi_core::assembly::{Assembler, FsiState, ProblemParams};
use fsi_core::materials::ModelKind;
use fsi_core::mesh::{build_tube, FsiMesh, TubeSpec};
use fsi_core::util::SplitMix64;

/// Tiny tube for derivative checks: a few hundred tets.
pub fn tiny_mesh() -> FsiMesh {
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

pub fn coarse_mesh() -> FsiMesh {
    build_tube(&TubeSpec::coarse()).unwrap()
}

pub fn assembler(mesh: &FsiMesh, model: ModelKind) -> Assembler<f64> {
    Assembler::new(mesh, ProblemParams::defaults(model))
}

/// A random feasible state with populated history, small enough that all
/// element jacobians stay positive.
pub fn random_state(asm: &Assembler<f64>, seed: u64) -> FsiState<f64> {
    let mut rng = SplitMix64::new(seed);
    let mut state = FsiState::zeros(&asm.map);
    state.time = 0.125;
    for v in state.d_m.iter_mut() {
        *v = rng.uniform(-0.01, 0.01);
    }
    for v in state.u.iter_mut() {
        *v = rng.uniform(-0.4, 0.4);
    }
    for v in state.p_f.iter_mut() {
        *v = rng.uniform(-0.5, 0.5);
    }
    for v in state.d_s.iter_mut() {
        *v = rng.uniform(-0.005, 0.005);
    }
    for v in state.p_s.iter_mut() {
        *v = rng.uniform(-0.5, 0.5);
    }
    for v in state.prev.u.iter_mut() {
        *v = rng.uniform(-0.2, 0.2);
    }
    for v in state.prev.d_m.iter_mut() {
        *v = rng.uniform(-0.005, 0.005);
    }
    for v in state.prev.d_s.iter_mut() {
        *v = rng.uniform(-0.003, 0.003);
    }
    for v in state.prev.v_s.iter_mut() {
        *v = rng.uniform(-0.05, 0.05);
    }
    for v in state.prev.a_s.iter_mut() {
        *v = rng.uniform(-0.05, 0.05);
    }
    state
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
