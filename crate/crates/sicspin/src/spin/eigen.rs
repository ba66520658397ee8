//! Eigensolver for 3x3 complex Hermitian matrices.
//!
//! The primary path is the closed-form solution of the characteristic cubic
//! (trigonometric form), with eigenvectors recovered from row cross products
//! of `A - lambda*I`. When the cubic discriminant is within 1e-12 of zero
//! (nearly repeated roots) or the closed-form vectors fail a residual check,
//! the solver falls back to cyclic Jacobi rotations, which are unconditionally
//! stable for Hermitian input.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

pub type CMatrix3 = Matrix3<Complex64>;
pub type CVector3 = Vector3<Complex64>;

/// Normalized discriminant threshold below which roots are treated as repeated.
const DISCRIMINANT_TOL: f64 = 1e-12;

/// Residual threshold (relative to the Frobenius norm) for accepting the
/// closed-form eigenvectors.
const RESIDUAL_TOL: f64 = 1e-10;

/// Largest entry magnitude, used as the matrix scale.
pub fn max_abs(a: &CMatrix3) -> f64 {
    a.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn frobenius(a: &CMatrix3) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Unconjugated cross product. For rows `u`, `v` of a singular matrix `M`,
/// the result satisfies `u . w = v . w = 0` in the plain (bilinear) dot
/// product, which is exactly the null-space condition `M w = 0`.
fn cross_bilinear(u: &CVector3, v: &CVector3) -> CVector3 {
    CVector3::new(
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )
}

/// Rotate the global phase so the largest-magnitude component is real and
/// positive. Keeps eigenvector output deterministic.
fn fix_phase(v: &mut CVector3) {
    let mut k = 0;
    let mut best = 0.0;
    for i in 0..3 {
        let m = v[i].norm();
        if m > best {
            best = m;
            k = i;
        }
    }
    if best > 0.0 {
        let phase = v[k].conj() / Complex64::from(best);
        *v *= phase;
    }
}

fn normalize(v: &mut CVector3) -> bool {
    let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if n < 1e-300 {
        return false;
    }
    *v /= Complex64::from(n);
    true
}

/// Eigendecomposition of a Hermitian 3x3 matrix.
///
/// Returns eigenvalues in ascending order with matching orthonormal
/// eigenvectors. The input is assumed Hermitian; callers are expected to
/// validate that beforehand.
pub fn eigh3(a: &CMatrix3) -> ([f64; 3], [CVector3; 3]) {
    let scale = max_abs(a);
    if scale == 0.0 {
        return ([0.0; 3], identity_vectors());
    }

    let q = (a[(0, 0)].re + a[(1, 1)].re + a[(2, 2)].re) / 3.0;
    let p1 = a[(0, 1)].norm_sqr() + a[(0, 2)].norm_sqr() + a[(1, 2)].norm_sqr();
    if p1 == 0.0 {
        // Exactly diagonal: sort the diagonal, keep basis vectors paired.
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
        let basis = identity_vectors();
        let mut energies = [0.0; 3];
        let mut vectors = [CVector3::zeros(); 3];
        for (slot, &i) in order.iter().enumerate() {
            energies[slot] = a[(i, i)].re;
            vectors[slot] = basis[i];
        }
        return (energies, vectors);
    }
    let d0 = a[(0, 0)].re - q;
    let d1 = a[(1, 1)].re - q;
    let d2 = a[(2, 2)].re - q;
    let p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;

    // A is (numerically) a multiple of the identity.
    if p2.sqrt() <= 1e-14 * scale {
        return ([q, q, q], identity_vectors());
    }

    let p = (p2 / 6.0).sqrt();
    let b = (a - CMatrix3::identity() * Complex64::from(q)) / Complex64::from(p);
    let r = (b.determinant().re / 2.0).clamp(-1.0, 1.0);

    // 1 - r^2 is the normalized discriminant of the depressed cubic; zero
    // means repeated eigenvalues, where the cross-product vector extraction
    // loses rank.
    if 1.0 - r * r < DISCRIMINANT_TOL {
        return jacobi_eigh3(a);
    }

    let phi = r.acos() / 3.0;
    let e_high = q + 2.0 * p * phi.cos();
    let e_low = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let e_mid = 3.0 * q - e_high - e_low;
    let energies = [e_low, e_mid, e_high];

    let mut vectors = [CVector3::zeros(); 3];
    for (i, &lambda) in energies.iter().enumerate() {
        let m = a - CMatrix3::identity() * Complex64::from(lambda);
        let rows: [CVector3; 3] = [
            CVector3::new(m[(0, 0)], m[(0, 1)], m[(0, 2)]),
            CVector3::new(m[(1, 0)], m[(1, 1)], m[(1, 2)]),
            CVector3::new(m[(2, 0)], m[(2, 1)], m[(2, 2)]),
        ];
        let candidates = [
            cross_bilinear(&rows[0], &rows[1]),
            cross_bilinear(&rows[0], &rows[2]),
            cross_bilinear(&rows[1], &rows[2]),
        ];
        let mut best = candidates[0];
        let mut best_norm = best.iter().map(|c| c.norm_sqr()).sum::<f64>();
        for c in &candidates[1..] {
            let n = c.iter().map(|x| x.norm_sqr()).sum::<f64>();
            if n > best_norm {
                best_norm = n;
                best = *c;
            }
        }
        if best_norm.sqrt() < 1e-12 * scale * scale {
            return jacobi_eigh3(a);
        }
        let mut v = best;
        if !normalize(&mut v) {
            return jacobi_eigh3(a);
        }
        vectors[i] = v;
    }

    // Orthonormal polish; the vectors are already near-orthogonal for
    // well-separated eigenvalues, so this only strips rounding error.
    for i in 1..3 {
        for j in 0..i {
            let proj = vectors[j].dotc(&vectors[i]);
            let prev = vectors[j];
            vectors[i] -= prev * proj;
        }
        if !normalize(&mut vectors[i]) {
            return jacobi_eigh3(a);
        }
    }
    for v in vectors.iter_mut() {
        fix_phase(v);
    }

    let fro = frobenius(a);
    for (i, v) in vectors.iter().enumerate() {
        let resid = (a * v - v * Complex64::from(energies[i])).norm();
        if resid > RESIDUAL_TOL * fro {
            return jacobi_eigh3(a);
        }
    }

    (energies, vectors)
}

/// Cyclic Jacobi eigendecomposition for Hermitian 3x3 matrices.
///
/// Each rotation phase-aligns the pivot to a real value and applies the
/// classic symmetric Schur rotation; the accumulated transform stays unitary
/// so the eigenvectors are orthonormal by construction.
pub fn jacobi_eigh3(a: &CMatrix3) -> ([f64; 3], [CVector3; 3]) {
    let scale = max_abs(a);
    if scale == 0.0 {
        return ([0.0; 3], identity_vectors());
    }
    let mut m = *a;
    let mut v = CMatrix3::identity();

    for _sweep in 0..60 {
        let off = (m[(0, 1)].norm_sqr() + m[(0, 2)].norm_sqr() + m[(1, 2)].norm_sqr()).sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = m[(p, q)];
            let rho = apq.norm();
            if rho <= 1e-18 * scale {
                continue;
            }
            let phase = apq / Complex64::from(rho);
            let app = m[(p, p)].re;
            let aqq = m[(q, q)].re;
            let tau = (aqq - app) / (2.0 * rho);
            let t = if tau >= 0.0 {
                1.0 / (tau + (1.0 + tau * tau).sqrt())
            } else {
                1.0 / (tau - (1.0 + tau * tau).sqrt())
            };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;

            // U = D * R with D = diag(.., e^{-i arg(apq)} at q) making the
            // pivot real, R the real Jacobi rotation that annihilates it.
            let mut u = CMatrix3::identity();
            u[(p, p)] = Complex64::from(c);
            u[(p, q)] = Complex64::from(s);
            u[(q, p)] = -Complex64::from(s) * phase.conj();
            u[(q, q)] = Complex64::from(c) * phase.conj();

            m = u.adjoint() * m * u;
            v *= u;
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));

    let mut energies = [0.0; 3];
    let mut vectors = [CVector3::zeros(); 3];
    for (slot, &i) in order.iter().enumerate() {
        energies[slot] = m[(i, i)].re;
        let mut col = CVector3::new(v[(0, i)], v[(1, i)], v[(2, i)]);
        fix_phase(&mut col);
        vectors[slot] = col;
    }
    (energies, vectors)
}

fn identity_vectors() -> [CVector3; 3] {
    let one = Complex64::from(1.0);
    let zero = Complex64::from(0.0);
    [
        CVector3::new(one, zero, zero),
        CVector3::new(zero, one, zero),
        CVector3::new(zero, zero, one),
    ]
}
