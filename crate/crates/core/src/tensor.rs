//! Small fixed-size tensor kernels (3-vectors, 3x3 matrices, Voigt 6x6).

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

/// 6x6 matrix in Voigt ordering, see [`VOIGT`].
pub type Voigt6<T> = [[T; 6]; 6];

/// Voigt index pairs: 00, 11, 22, 01, 12, 02.
pub const VOIGT: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)];

pub fn zero3<T: Real>() -> Mat3<T> {
    [[T::zero(); 3]; 3]
}

pub fn ident3<T: Real>() -> Mat3<T> {
    let mut m = zero3();
    for i in 0..3 {
        m[i][i] = T::one();
    }
    m
}

pub fn add3<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = zero3();
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][j] + b[i][j];
        }
    }
    c
}

pub fn scale3<T: Real>(a: &Mat3<T>, s: T) -> Mat3<T> {
    let mut c = *a;
    for row in c.iter_mut() {
        for v in row.iter_mut() {
            *v = *v * s;
        }
    }
    c
}

pub fn axpy3<T: Real>(y: &mut Mat3<T>, alpha: T, x: &Mat3<T>) {
    for i in 0..3 {
        for j in 0..3 {
            y[i][j] += alpha * x[i][j];
        }
    }
}

pub fn transpose3<T: Real>(a: &Mat3<T>) -> Mat3<T> {
    let mut c = zero3();
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[j][i];
        }
    }
    c
}

pub fn matmul3<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = zero3();
    for i in 0..3 {
        for k in 0..3 {
            let aik = a[i][k];
            for j in 0..3 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// A^T * B.
pub fn tmatmul3<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = zero3();
    for i in 0..3 {
        for k in 0..3 {
            let aki = a[k][i];
            for j in 0..3 {
                c[i][j] += aki * b[k][j];
            }
        }
    }
    c
}

pub fn matvec3<T: Real>(a: &Mat3<T>, x: &Vec3<T>) -> Vec3<T> {
    let mut y = [T::zero(); 3];
    for i in 0..3 {
        y[i] = a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2];
    }
    y
}

/// A^T * x.
pub fn tmatvec3<T: Real>(a: &Mat3<T>, x: &Vec3<T>) -> Vec3<T> {
    let mut y = [T::zero(); 3];
    for j in 0..3 {
        y[j] = a[0][j] * x[0] + a[1][j] * x[1] + a[2][j] * x[2];
    }
    y
}

pub fn det3<T: Real>(a: &Mat3<T>) -> T {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Inverse via cofactors; caller guarantees a nonzero determinant.
pub fn inv3<T: Real>(a: &Mat3<T>) -> Mat3<T> {
    let d = det3(a);
    let inv_d = T::one() / d;
    let mut c = zero3();
    c[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) * inv_d;
    c[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * inv_d;
    c[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * inv_d;
    c[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) * inv_d;
    c[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * inv_d;
    c[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * inv_d;
    c[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) * inv_d;
    c[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * inv_d;
    c[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * inv_d;
    c
}

pub fn trace3<T: Real>(a: &Mat3<T>) -> T {
    a[0][0] + a[1][1] + a[2][2]
}

/// Double contraction A : B.
pub fn ddot3<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> T {
    let mut s = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

pub fn outer3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Mat3<T> {
    let mut c = zero3();
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i] * b[j];
        }
    }
    c
}

pub fn dot3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3<T: Real>(a: &Vec3<T>) -> T {
    dot3(a, a).sqrt()
}

pub fn sym3<T: Real>(a: &Mat3<T>) -> Mat3<T> {
    let mut c = zero3();
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = T::of(0.5) * (a[i][j] + a[j][i]);
        }
    }
    c
}

pub fn frob3<T: Real>(a: &Mat3<T>) -> T {
    ddot3(a, a).sqrt()
}

/// Symmetric 3x3 tensor to its 6-entry Voigt vector (raw components).
pub fn to_voigt<T: Real>(a: &Mat3<T>) -> [T; 6] {
    let mut v = [T::zero(); 6];
    for (k, &(i, j)) in VOIGT.iter().enumerate() {
        v[k] = a[i][j];
    }
    v
}

pub fn from_voigt<T: Real>(v: &[T; 6]) -> Mat3<T> {
    let mut a = zero3();
    for (k, &(i, j)) in VOIGT.iter().enumerate() {
        a[i][j] = v[k];
        a[j][i] = v[k];
    }
    a
}

pub fn voigt_zero<T: Real>() -> Voigt6<T> {
    [[T::zero(); 6]; 6]
}

/// Rank-one update `M += s * voigt(A) voigt(B)^T` with raw tensor components.
pub fn voigt_dyad_acc<T: Real>(m: &mut Voigt6<T>, s: T, a: &Mat3<T>, b: &Mat3<T>) {
    let va = to_voigt(a);
    let vb = to_voigt(b);
    for i in 0..6 {
        for j in 0..6 {
            m[i][j] += s * va[i] * vb[j];
        }
    }
}

/// Accumulates `s * ( Sym(A (.) B) )` where the fourth-order kernel is
/// `0.5 (A_IK B_JL + A_IL B_JK)` for symmetric `A`, `B`; this is the
/// symmetrized dyadic that appears in d(C^-1)/dC and the identity tensor.
pub fn voigt_symdyad_acc<T: Real>(m: &mut Voigt6<T>, s: T, a: &Mat3<T>, b: &Mat3<T>) {
    let half = T::of(0.5);
    for (r, &(i, j)) in VOIGT.iter().enumerate() {
        for (c, &(k, l)) in VOIGT.iter().enumerate() {
            m[r][c] += s * half * (a[i][k] * b[j][l] + a[i][l] * b[j][k]);
        }
    }
}

/// Applies a Voigt tangent to a symmetric increment `dC`:
/// `dS = M : dC / 2` in tensor terms, i.e. the engineering-strain column
/// convention where off-diagonal strain entries carry a factor 2.
pub fn voigt_apply_dc<T: Real>(m: &Voigt6<T>, dc: &Mat3<T>) -> Mat3<T> {
    let half = T::of(0.5);
    // dE = dC/2; engineering vector doubles the shear entries -> dC off-diagonals.
    let de = [
        dc[0][0] * half,
        dc[1][1] * half,
        dc[2][2] * half,
        dc[0][1],
        dc[1][2],
        dc[0][2],
    ];
    let mut ds = [T::zero(); 6];
    for i in 0..6 {
        for j in 0..6 {
            ds[i] += m[i][j] * de[j];
        }
    }
    from_voigt(&ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_det() {
        let a: Mat3<f64> = [[2.0, 1.0, 0.0], [0.0, 3.0, 1.0], [1.0, 0.0, 2.0]];
        let ai = inv3(&a);
        let p = matmul3(&a, &ai);
        let id = ident3::<f64>();
        for i in 0..3 {
            for j in 0..3 {
                assert!((p[i][j] - id[i][j]).abs() < 1e-14);
            }
        }
        assert!((det3(&a) - 13.0).abs() < 1e-13);
    }

    #[test]
    fn voigt_roundtrip() {
        let s: Mat3<f64> = [[1.0, 4.0, 6.0], [4.0, 2.0, 5.0], [6.0, 5.0, 3.0]];
        let v = to_voigt(&s);
        let s2 = from_voigt(&v);
        assert_eq!(s, s2);
    }
}
