//! Hyperelastic constitutive models and fluid stress.
//!
//! Three nearly incompressible wall models are supported: Neo-Hookean,
//! modified Mooney-Rivlin and an anisotropic two-layer artery model with
//! exponentially stiffening collagen fiber families that are active in
//! extension only. The mixed displacement/pressure form replaces the bulk
//! penalty by the wall pressure `p_s`, so every stress is
//! `S = S' - p_s J C^-1` and the consistent fourth-order tangent
//! `CC = 2 dS/dC` is assembled analytically (Voigt 6x6, strain-type
//! factor-2 convention on the off-diagonal columns).

use crate::error::Error;
use crate::scalar::Real;
use crate::tensor::{
    self, add3, axpy3, ddot3, det3, ident3, inv3, matmul3, outer3, scale3, tmatmul3, to_voigt,
    trace3, voigt_dyad_acc, voigt_symdyad_acc, voigt_zero, Mat3, Vec3, Voigt6,
};

/// Deformation state at a quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct KinematicState<T> {
    /// Deformation gradient `F = I + grad d`.
    pub f: Mat3<T>,
    /// `det F`, positive for admissible states.
    pub j: T,
    /// Right Cauchy-Green tensor `C = F^T F`.
    pub c: Mat3<T>,
    pub c_inv: Mat3<T>,
    pub i1: T,
    pub i2: T,
    pub i3: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    NeoHookean,
    MooneyRivlin,
    Artery,
}

/// Material parameters of one wall layer (media or adventitia).
///
/// Units: stresses in kPa, angle in radians, density in mg/mm^3.
#[derive(Debug, Clone, Copy)]
pub struct MaterialParams<T> {
    pub model: ModelKind,
    pub c10: T,
    pub c01: T,
    pub k1: T,
    pub k2: T,
    pub kappa: T,
    pub alpha: T,
    pub rho_s: T,
}

impl<T: Real> MaterialParams<T> {
    pub fn neo_hookean(c10: T, kappa: T, rho_s: T) -> Self {
        MaterialParams {
            model: ModelKind::NeoHookean,
            c10,
            c01: T::zero(),
            k1: T::zero(),
            k2: T::zero(),
            kappa,
            alpha: T::zero(),
            rho_s,
        }
    }

    pub fn mooney_rivlin(c10: T, c01: T, kappa: T, rho_s: T) -> Self {
        MaterialParams {
            model: ModelKind::MooneyRivlin,
            c10,
            c01,
            k1: T::zero(),
            k2: T::zero(),
            kappa,
            alpha: T::zero(),
            rho_s,
        }
    }

    pub fn artery(c10: T, k1: T, k2: T, alpha: T, kappa: T, rho_s: T) -> Self {
        MaterialParams {
            model: ModelKind::Artery,
            c10,
            c01: T::zero(),
            k1,
            k2,
            kappa,
            alpha,
            rho_s,
        }
    }
}

/// Collagen fiber families of the artery model.
///
/// `a01 = (0, cos a, sin a)` and `a02 = (0, cos a, -sin a)` in a local frame
/// whose second axis is circumferential and third axis axial.
#[derive(Debug, Clone, Copy)]
pub struct FiberStructure<T> {
    pub a01: Vec3<T>,
    pub a02: Vec3<T>,
    pub a1: Mat3<T>,
    pub a2: Mat3<T>,
}

impl<T: Real> FiberStructure<T> {
    /// Fiber families in the canonical local frame (radial, circumferential,
    /// axial) for the given fiber angle.
    pub fn from_angle(alpha: T) -> Self {
        let (s, c) = (alpha.sin(), alpha.cos());
        Self::from_directions([T::zero(), c, s], [T::zero(), c, -s])
    }

    /// Fiber families rotated into an element frame with circumferential
    /// direction `e_circ` and axial direction `e_axial`.
    pub fn from_angle_in_frame(alpha: T, e_circ: Vec3<T>, e_axial: Vec3<T>) -> Self {
        let (s, c) = (alpha.sin(), alpha.cos());
        let mk = |sgn: T| {
            let mut d = [T::zero(); 3];
            for i in 0..3 {
                d[i] = c * e_circ[i] + sgn * s * e_axial[i];
            }
            d
        };
        Self::from_directions(mk(T::one()), mk(-T::one()))
    }

    pub fn from_directions(a01: Vec3<T>, a02: Vec3<T>) -> Self {
        FiberStructure {
            a01,
            a02,
            a1: outer3(&a01, &a01),
            a2: outer3(&a02, &a02),
        }
    }
}

/// Stress and consistent linearization at a quadrature point.
#[derive(Debug, Clone)]
pub struct StressTangent<T> {
    /// Second Piola-Kirchhoff stress (kPa), including the `-p_s J C^-1` part.
    pub s: Mat3<T>,
    /// `2 dS/dC` in Voigt storage; columns act on engineering-strain
    /// increments (`dE = dC/2`, off-diagonal entries doubled).
    pub cc: Voigt6<T>,
    /// `dS/dp_s = -J C^-1`.
    pub sp: Mat3<T>,
}

/// Kinematic quantities from a displacement gradient.
///
/// Fails with [`Error::NonPositiveJacobian`] when the element is inverted;
/// the caller (Newton) must reject the step.
pub fn compute_kinematics<T: Real>(grad_d: &Mat3<T>) -> Result<KinematicState<T>, Error> {
    let f = add3(&ident3(), grad_d);
    let j = det3(&f);
    if j <= T::zero() || !j.is_finite() {
        return Err(Error::NonPositiveJacobian {
            context: "compute_kinematics",
            j: j.as_f64(),
        });
    }
    let c = tmatmul3(&f, &f);
    let c_inv = inv3(&c);
    let i1 = trace3(&c);
    let i2 = T::of(0.5) * (i1 * i1 - ddot3(&c, &c));
    let i3 = j * j;
    Ok(KinematicState {
        f,
        j,
        c,
        c_inv,
        i1,
        i2,
        i3,
    })
}

/// Modified (volumetric-split) invariants `J1, J2, J4, J6`.
///
/// Without fiber data the fiber invariants are reported at their reference
/// value 1.
pub fn modified_invariants<T: Real>(
    k: &KinematicState<T>,
    fib: Option<&FiberStructure<T>>,
) -> (T, T, T, T) {
    let third = T::of(1.0 / 3.0);
    let i3m13 = k.i3.powf(-third);
    let j1 = k.i1 * i3m13;
    let j2 = k.i2 * k.i3.powf(-T::of(2.0 / 3.0));
    let (j4, j6) = match fib {
        Some(f) => (i3m13 * ddot3(&f.a1, &k.c), i3m13 * ddot3(&f.a2, &k.c)),
        None => (T::one(), T::one()),
    };
    (j1, j2, j4, j6)
}

/// Stress and consistent tangent for the selected model.
pub fn stress_and_tangent<T: Real>(
    k: &KinematicState<T>,
    p_s: T,
    params: &MaterialParams<T>,
    fib: Option<&FiberStructure<T>>,
) -> StressTangent<T> {
    let third = T::of(1.0 / 3.0);
    let one = T::one();
    let two = T::of(2.0);
    let id = ident3::<T>();
    let cinv = k.c_inv;
    let i3m13 = k.i3.powf(-third);

    let mut s = tensor::zero3::<T>();
    let mut cc = voigt_zero::<T>();

    // isotropic part: c10 * dJ1/dC
    {
        // dJ1/dC = I3^{-1/3} (I - (I1/3) Cinv)
        let mut dj1 = id;
        axpy3(&mut dj1, -k.i1 * third, &cinv);
        axpy3(&mut s, params.c10 * i3m13, &dj1);
        // 2 c10 d2J1/dC2
        let w = two * params.c10 * i3m13;
        voigt_dyad_acc(&mut cc, -w * third, &id, &cinv);
        voigt_dyad_acc(&mut cc, -w * third, &cinv, &id);
        voigt_dyad_acc(&mut cc, w * k.i1 / T::of(9.0), &cinv, &cinv);
        voigt_symdyad_acc(&mut cc, w * k.i1 * third, &cinv, &cinv);
    }

    if params.model == ModelKind::MooneyRivlin {
        let i3m23 = k.i3.powf(-two * third);
        // dJ2/dC = I3^{-2/3} [ (I1 I - C) - (2/3) I2 Cinv ]
        let mut i1i_c = scale3(&id, k.i1);
        axpy3(&mut i1i_c, -one, &k.c);
        let mut dj2 = i1i_c;
        axpy3(&mut dj2, -two * third * k.i2, &cinv);
        axpy3(&mut s, params.c01 * i3m23, &dj2);
        // 2 c01 d2J2/dC2
        let w = two * params.c01 * i3m23;
        voigt_dyad_acc(&mut cc, w, &id, &id);
        voigt_symdyad_acc(&mut cc, -w, &id, &id);
        voigt_dyad_acc(&mut cc, -w * two * third, &i1i_c, &cinv);
        voigt_dyad_acc(&mut cc, -w * two * third, &cinv, &i1i_c);
        voigt_dyad_acc(&mut cc, w * T::of(4.0 / 9.0) * k.i2, &cinv, &cinv);
        voigt_symdyad_acc(&mut cc, w * two * third * k.i2, &cinv, &cinv);
    }

    if params.model == ModelKind::Artery {
        let fib = fib.expect("artery model needs fiber structure");
        for a in [&fib.a1, &fib.a2] {
            let ji = i3m13 * ddot3(a, &k.c);
            // fibers carry load in extension only
            if ji <= one {
                continue;
            }
            let e = ji - one;
            let expo = (params.k2 * e * e).exp();
            let fi = params.k1 * e * expo;
            let dfi = params.k1 * expo * (one + two * params.k2 * e * e);
            // G = dJi/dC = I3^{-1/3} A - (Ji/3) Cinv
            let mut g = scale3(a, i3m13);
            axpy3(&mut g, -ji * third, &cinv);
            axpy3(&mut s, fi, &g);
            // 2 [ dfi G (x) G + fi dG/dC ]
            voigt_dyad_acc(&mut cc, two * dfi, &g, &g);
            let w = two * fi;
            voigt_dyad_acc(&mut cc, -w * third * i3m13, a, &cinv);
            voigt_dyad_acc(&mut cc, -w * third, &cinv, &g);
            voigt_symdyad_acc(&mut cc, w * ji * third, &cinv, &cinv);
        }
    }

    // mixed pressure part: -p_s J Cinv, consistent with p_s = -kappa (J - 1)
    let sp = scale3(&cinv, -k.j);
    axpy3(&mut s, p_s, &sp);
    voigt_dyad_acc(&mut cc, -p_s * k.j, &cinv, &cinv);
    voigt_symdyad_acc(&mut cc, two * p_s * k.j, &cinv, &cinv);

    StressTangent { s, cc, sp }
}

/// Fluid Cauchy stress `mu (grad u + grad u^T) - p I` (kPa), with `grad u`
/// the spatial velocity gradient in 1/ms and `mu` in kPa*ms.
pub fn fluid_cauchy_stress<T: Real>(grad_u: &Mat3<T>, p_f: T, mu: T) -> Mat3<T> {
    let mut sig = scale3(&add3(grad_u, &tensor::transpose3(grad_u)), mu);
    for i in 0..3 {
        sig[i][i] -= p_f;
    }
    sig
}

/// Strain energy density of the mixed formulation (bulk penalty replaced by
/// the `-p_s (J - 1)` coupling); `S = 2 dPsi/dC` by construction. Exposed for
/// the finite-difference oracles in the test suite.
pub fn mixed_energy<T: Real>(
    k: &KinematicState<T>,
    p_s: T,
    params: &MaterialParams<T>,
    fib: Option<&FiberStructure<T>>,
) -> T {
    let half = T::of(0.5);
    let three = T::of(3.0);
    let (j1, j2, _, _) = modified_invariants(k, None);
    let mut psi = half * params.c10 * (j1 - three);
    if params.model == ModelKind::MooneyRivlin {
        psi += half * params.c01 * (j2 - three);
    }
    if params.model == ModelKind::Artery {
        let fib = fib.expect("artery model needs fiber structure");
        let quarter = T::of(0.25);
        for a in [&fib.a1, &fib.a2] {
            let ji = k.i3.powf(-T::of(1.0 / 3.0)) * ddot3(a, &k.c);
            if ji > T::one() {
                let e = ji - T::one();
                psi += quarter * params.k1 / params.k2 * ((params.k2 * e * e).exp() - T::one());
            }
        }
    }
    psi - p_s * (k.j - T::one())
}

/// Rotates a symmetric tensor: `Q^T S Q`.
pub fn rotate_sym<T: Real>(q: &Mat3<T>, s: &Mat3<T>) -> Mat3<T> {
    tmatmul3(q, &matmul3(s, q))
}

#[allow(unused)]
fn voigt_of<T: Real>(m: &Mat3<T>) -> [T; 6] {
    to_voigt(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{frob3, matvec3, norm3, tmatvec3, Voigt6, VOIGT};
    use crate::util::SplitMix64;

    fn params_for(model: ModelKind) -> MaterialParams<f64> {
        let kappa = 1e5;
        let rho = 1.2;
        match model {
            ModelKind::NeoHookean => MaterialParams::neo_hookean(3.0, kappa, rho),
            ModelKind::MooneyRivlin => MaterialParams::mooney_rivlin(3.0, 0.3, kappa, rho),
            ModelKind::Artery => {
                MaterialParams::artery(3.0, 2.3632, 0.8393, 29f64.to_radians(), kappa, rho)
            }
        }
    }

    fn fib_default() -> FiberStructure<f64> {
        FiberStructure::from_angle(29f64.to_radians())
    }

    /// Random deformation gradient near identity with J in (0.5, 2).
    fn random_grad(rng: &mut SplitMix64, scale: f64) -> Mat3<f64> {
        loop {
            let mut g = [[0.0; 3]; 3];
            for row in g.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.uniform(-scale, scale);
                }
            }
            let k = compute_kinematics(&g);
            if let Ok(k) = k {
                if k.j > 0.5 && k.j < 2.0 {
                    return g;
                }
            }
        }
    }

    fn random_rotation(rng: &mut SplitMix64) -> Mat3<f64> {
        let axis = {
            let v = [
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
            ];
            let n = norm3(&v);
            [v[0] / n, v[1] / n, v[2] / n]
        };
        let th = rng.uniform(0.0, std::f64::consts::PI);
        let (s, c) = th.sin_cos();
        let mut q = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let kron = if i == j { 1.0 } else { 0.0 };
                let eps: f64 = match (i, j) {
                    (0, 1) => -axis[2],
                    (0, 2) => axis[1],
                    (1, 0) => axis[2],
                    (1, 2) => -axis[0],
                    (2, 0) => -axis[1],
                    (2, 1) => axis[0],
                    _ => 0.0,
                };
                q[i][j] = c * kron + s * eps + (1.0 - c) * axis[i] * axis[j];
            }
        }
        q
    }

    /// Builds a kinematic state directly from a (symmetric positive definite)
    /// right Cauchy-Green tensor; the F stored is irrelevant for S(C, p).
    fn kin_from_c(c: Mat3<f64>) -> KinematicState<f64> {
        let i1 = trace3(&c);
        let i2 = 0.5 * (i1 * i1 - ddot3(&c, &c));
        let i3 = det3(&c);
        KinematicState {
            f: ident3(),
            j: i3.sqrt(),
            c,
            c_inv: inv3(&c),
            i1,
            i2,
            i3,
        }
    }

    #[test]
    fn kinematics_reference_configuration() {
        let k = compute_kinematics(&[[0.0; 3]; 3]).unwrap();
        assert_eq!(k.j, 1.0);
        assert_eq!(k.c, ident3::<f64>());
        assert_eq!((k.i1, k.i2, k.i3), (3.0, 3.0, 1.0));
    }

    #[test]
    fn kinematics_diagonal_stretch() {
        let mut g = [[0.0; 3]; 3];
        g[0][0] = 1.0;
        let k = compute_kinematics(&g).unwrap();
        assert_eq!(k.f[0][0], 2.0);
        assert_eq!(k.c[0][0], 4.0);
        assert_eq!((k.i1, k.i2, k.i3), (6.0, 9.0, 4.0));
        assert_eq!(k.j, 2.0);
    }

    #[test]
    fn kinematics_rejects_inverted_elements() {
        let mut g = [[0.0; 3]; 3];
        g[0][0] = -2.0;
        assert!(compute_kinematics(&g).is_err());
    }

    #[test]
    fn i2_matches_eigenvalue_oracle() {
        // I2 must equal both 0.5(I1^2 - C:C) and the sum of pairwise products
        // of the eigenvalues of C; eigenvalues from the characteristic cubic.
        let mut rng = SplitMix64::new(2024);
        for _ in 0..20 {
            let g = random_grad(&mut rng, 0.4);
            let k = compute_kinematics(&g).unwrap();
            // eigenvalues of symmetric 3x3 by the trigonometric method
            let c = k.c;
            let q = trace3(&c) / 3.0;
            let mut b = c;
            for i in 0..3 {
                b[i][i] -= q;
            }
            let p = (ddot3(&b, &b) / 6.0).sqrt();
            let det_b = det3(&b);
            let r = det_b / (2.0 * p * p * p);
            let phi = r.clamp(-1.0, 1.0).acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3 * 2.0).cos();
            let e2 = 3.0 * q - e1 - e3;
            let i2_eig = e1 * e2 + e2 * e3 + e3 * e1;
            assert!(
                (k.i2 - i2_eig).abs() <= 1e-12 * i2_eig.abs(),
                "I2 {} vs eigen oracle {}",
                k.i2,
                i2_eig
            );
        }
    }

    #[test]
    fn modified_invariants_reference() {
        let k = compute_kinematics(&[[0.0; 3]; 3]).unwrap();
        let f = fib_default();
        let (j1, j2, j4, j6) = modified_invariants(&k, Some(&f));
        assert!((j1 - 3.0).abs() < 1e-15);
        assert!((j2 - 3.0).abs() < 1e-15);
        assert!((j4 - 1.0).abs() < 1e-15);
        assert!((j6 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn modified_invariants_diagonal() {
        let mut g = [[0.0; 3]; 3];
        g[0][0] = 1.0; // C = diag(4,1,1)
        let k = compute_kinematics(&g).unwrap();
        let (j1, j2, _, _) = modified_invariants(&k, None);
        assert!((j1 - 6.0 * 4f64.powf(-1.0 / 3.0)).abs() < 1e-14);
        assert!((j2 - 9.0 * 4f64.powf(-2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn fiber_invariants_scale_invariant() {
        // J4(sC) = J4(C) for any s > 0
        let mut rng = SplitMix64::new(7);
        for _ in 0..20 {
            let g = random_grad(&mut rng, 0.3);
            let k = compute_kinematics(&g).unwrap();
            let f = fib_default();
            let (_, _, j4, j6) = modified_invariants(&k, Some(&f));
            let s = rng.uniform(0.2, 5.0);
            let ks = kin_from_c(scale3(&k.c, s));
            let (_, _, j4s, j6s) = modified_invariants(&ks, Some(&f));
            assert!((j4 - j4s).abs() <= 1e-12 * j4.abs());
            assert!((j6 - j6s).abs() <= 1e-12 * j6.abs());
        }
    }

    #[test]
    fn stress_free_reference_all_models() {
        let k = compute_kinematics(&[[0.0; 3]; 3]).unwrap();
        let f = fib_default();
        for model in [
            ModelKind::NeoHookean,
            ModelKind::MooneyRivlin,
            ModelKind::Artery,
        ] {
            let st = stress_and_tangent(&k, 0.0, &params_for(model), Some(&f));
            assert!(frob3(&st.s) < 1e-14, "{model:?} not stress free: {:?}", st.s);
        }
    }

    #[test]
    fn pure_pressure_stress_at_reference() {
        let k = compute_kinematics(&[[0.0; 3]; 3]).unwrap();
        let st = stress_and_tangent(&k, 1.0, &params_for(ModelKind::NeoHookean), None);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { -1.0 } else { 0.0 };
                assert!((st.s[i][j] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pressure_linearity_exact() {
        let mut rng = SplitMix64::new(33);
        for _ in 0..10 {
            let g = random_grad(&mut rng, 0.3);
            let k = compute_kinematics(&g).unwrap();
            let f = fib_default();
            for model in [
                ModelKind::NeoHookean,
                ModelKind::MooneyRivlin,
                ModelKind::Artery,
            ] {
                let p = rng.uniform(-2.0, 2.0);
                let p0 = stress_and_tangent(&k, 0.0, &params_for(model), Some(&f));
                let pp = stress_and_tangent(&k, p, &params_for(model), Some(&f));
                for i in 0..3 {
                    for j in 0..3 {
                        let want = -p * k.j * k.c_inv[i][j];
                        assert!((pp.s[i][j] - p0.s[i][j] - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn fiber_terms_vanish_in_compression() {
        // any C with J4 <= 1 and J6 <= 1: artery stress equals neo-hookean
        let mut rng = SplitMix64::new(55);
        let f = fib_default();
        let mut found = 0;
        for _ in 0..200 {
            let g = random_grad(&mut rng, 0.3);
            let k = compute_kinematics(&g).unwrap();
            let (_, _, j4, j6) = modified_invariants(&k, Some(&f));
            if j4 > 1.0 || j6 > 1.0 {
                continue;
            }
            found += 1;
            let ar = stress_and_tangent(&k, 0.3, &params_for(ModelKind::Artery), Some(&f));
            let nh = stress_and_tangent(&k, 0.3, &params_for(ModelKind::NeoHookean), None);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((ar.s[i][j] - nh.s[i][j]).abs() < 1e-14);
                }
            }
        }
        assert!(found > 3, "sampler never produced compressed fibers");
    }

    /// Central FD of the mixed energy: returns S_ij = 2 dPsi/dC_ij with the
    /// symmetric-perturbation convention.
    fn fd_stress(
        c: &Mat3<f64>,
        p: f64,
        params: &MaterialParams<f64>,
        fib: Option<&FiberStructure<f64>>,
        h: f64,
    ) -> Mat3<f64> {
        let mut s = [[0.0; 3]; 3];
        for &(i, j) in VOIGT.iter() {
            let mut cp = *c;
            let mut cm = *c;
            cp[i][j] += h;
            cp[j][i] = cp[i][j];
            cm[i][j] -= h;
            cm[j][i] = cm[i][j];
            if i == j {
                // keep the perturbation symmetric but single-entry
                cp = *c;
                cp[i][i] += h;
                cm = *c;
                cm[i][i] -= h;
            }
            let ep = mixed_energy(&kin_from_c(cp), p, params, fib);
            let em = mixed_energy(&kin_from_c(cm), p, params, fib);
            let d = (ep - em) / (2.0 * h);
            if i == j {
                s[i][i] = 2.0 * d;
            } else {
                s[i][j] = d;
                s[j][i] = d;
            }
        }
        s
    }

    /// Central FD of the analytic stress: returns 2 dS/dC in Voigt storage.
    fn fd_tangent(
        c: &Mat3<f64>,
        p: f64,
        params: &MaterialParams<f64>,
        fib: Option<&FiberStructure<f64>>,
        h: f64,
    ) -> Voigt6<f64> {
        let mut cc = [[0.0; 6]; 6];
        for (col, &(k, l)) in VOIGT.iter().enumerate() {
            let mut cp = *c;
            let mut cm = *c;
            cp[k][l] += h;
            cp[l][k] = cp[k][l];
            cm[k][l] -= h;
            cm[l][k] = cm[k][l];
            if k == l {
                cp = *c;
                cp[k][k] += h;
                cm = *c;
                cm[k][k] -= h;
            }
            let sp = stress_and_tangent(&kin_from_c(cp), p, params, fib).s;
            let sm = stress_and_tangent(&kin_from_c(cm), p, params, fib).s;
            for (row, &(i, j)) in VOIGT.iter().enumerate() {
                let d = (sp[i][j] - sm[i][j]) / (2.0 * h);
                // dS = 0.5 CC : dC -> diagonal perturbations pick up 1/2
                cc[row][col] = if k == l { 2.0 * d } else { d };
            }
        }
        cc
    }

    #[test]
    fn stress_matches_fd_of_energy() {
        let mut rng = SplitMix64::new(101);
        let f = fib_default();
        for model in [
            ModelKind::NeoHookean,
            ModelKind::MooneyRivlin,
            ModelKind::Artery,
        ] {
            let params = params_for(model);
            for _ in 0..100 {
                let g = random_grad(&mut rng, 0.25);
                let k = compute_kinematics(&g).unwrap();
                let p = rng.uniform(-1.0, 1.0);
                let st = stress_and_tangent(&k, p, &params, Some(&f));
                let s_fd = fd_stress(&k.c, p, &params, Some(&f), 1e-6);
                let err = {
                    let mut d = st.s;
                    axpy3(&mut d, -1.0, &s_fd);
                    frob3(&d) / frob3(&s_fd).max(1e-12)
                };
                assert!(err <= 1e-6, "{model:?}: stress FD mismatch {err:e}");
            }
        }
    }

    #[test]
    fn tangent_matches_fd_of_stress() {
        let mut rng = SplitMix64::new(202);
        let f = fib_default();
        for model in [
            ModelKind::NeoHookean,
            ModelKind::MooneyRivlin,
            ModelKind::Artery,
        ] {
            let params = params_for(model);
            for _ in 0..100 {
                let g = random_grad(&mut rng, 0.25);
                let k = compute_kinematics(&g).unwrap();
                let p = rng.uniform(-1.0, 1.0);
                let st = stress_and_tangent(&k, p, &params, Some(&f));
                let cc_fd = fd_tangent(&k.c, p, &params, Some(&f), 1e-6);
                let mut num = 0.0;
                let mut den = 0.0;
                for i in 0..6 {
                    for j in 0..6 {
                        num += (st.cc[i][j] - cc_fd[i][j]).powi(2);
                        den += cc_fd[i][j].powi(2);
                    }
                }
                let err = (num / den.max(1e-24)).sqrt();
                assert!(err <= 1e-5, "{model:?}: tangent FD mismatch {err:e}");
            }
        }
    }

    #[test]
    fn sp_is_pressure_derivative() {
        let mut rng = SplitMix64::new(77);
        let g = random_grad(&mut rng, 0.3);
        let k = compute_kinematics(&g).unwrap();
        let st = stress_and_tangent(&k, 0.7, &params_for(ModelKind::NeoHookean), None);
        for i in 0..3 {
            for j in 0..3 {
                assert!((st.sp[i][j] + k.j * k.c_inv[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn objectivity_under_rotation() {
        let mut rng = SplitMix64::new(404);
        let f = fib_default();
        for model in [
            ModelKind::NeoHookean,
            ModelKind::MooneyRivlin,
            ModelKind::Artery,
        ] {
            let params = params_for(model);
            for _ in 0..20 {
                let g = random_grad(&mut rng, 0.3);
                let k = compute_kinematics(&g).unwrap();
                let q = random_rotation(&mut rng);
                let p = rng.uniform(-1.0, 1.0);
                // rotated state: C' = Q^T C Q, fibers a' = Q^T a
                let c_rot = rotate_sym(&q, &k.c);
                let k_rot = kin_from_c(c_rot);
                let f_rot = FiberStructure::from_directions(
                    tmatvec3(&q, &f.a01),
                    tmatvec3(&q, &f.a02),
                );
                let s_ref = stress_and_tangent(&k, p, &params, Some(&f)).s;
                let s_rot = stress_and_tangent(&k_rot, p, &params, Some(&f_rot)).s;
                let want = rotate_sym(&q, &s_ref);
                let mut d = s_rot;
                axpy3(&mut d, -1.0, &want);
                let rel = frob3(&d) / frob3(&want).max(1e-12);
                assert!(rel <= 1e-12, "{model:?}: objectivity violated, rel {rel:e}");
            }
        }
    }

    #[test]
    fn fluid_stress_hydrostatic() {
        let zero: Mat3<f64> = [[0.0; 3]; 3];
        let sig = fluid_cauchy_stress(&zero, 1.0, 0.0035);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { -1.0 } else { 0.0 };
                assert_eq!(sig[i][j], want);
            }
        }
    }

    #[test]
    fn fluid_stress_rigid_rotation_is_stress_free() {
        let w: Mat3<f64> = [[0.0, 0.3, -0.1], [-0.3, 0.0, 0.2], [0.1, -0.2, 0.0]];
        let sig = fluid_cauchy_stress(&w, 0.0, 0.0035);
        assert!(frob3(&sig) < 1e-15);
    }

    #[test]
    fn fluid_stress_simple_shear() {
        // grad u = e1 (x) e2, mu = 0.0035 kPa ms (0.035 Poise)
        let mut g: Mat3<f64> = [[0.0; 3]; 3];
        g[0][1] = 1.0;
        let sig = fluid_cauchy_stress(&g, 0.0, 0.0035);
        assert!((sig[0][1] - 0.0035).abs() < 1e-15);
        assert!((sig[1][0] - 0.0035).abs() < 1e-15);
        assert!(sig[0][0].abs() < 1e-15 && sig[2][2].abs() < 1e-15);
    }

    #[test]
    fn tmatvec_rotation_sanity() {
        // guards the helper used in the objectivity test
        let q = random_rotation(&mut SplitMix64::new(5));
        let v = [1.0, 2.0, -0.5];
        let qv = matvec3(&q, &tmatvec3(&q, &v));
        for i in 0..3 {
            assert!((qv[i] - v[i]).abs() < 1e-12);
        }
    }
}
