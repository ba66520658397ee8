//! Test-only oracles, independent of the library's implementation paths.

#![allow(dead_code)]

use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::Rng;

pub type CMatrix3 = Matrix3<Complex64>;

/// Random Hermitian matrix with entries of the given scale.
pub fn random_hermitian<R: Rng>(rng: &mut R, scale: f64) -> CMatrix3 {
    let mut r = || rng.gen_range(-scale..scale);
    let d = [r(), r(), r()];
    let o01 = Complex64::new(r(), r());
    let o02 = Complex64::new(r(), r());
    let o12 = Complex64::new(r(), r());
    Matrix3::new(
        Complex64::from(d[0]),
        o01,
        o02,
        o01.conj(),
        Complex64::from(d[1]),
        o12,
        o02.conj(),
        o12.conj(),
        Complex64::from(d[2]),
    )
}

/// Eigenvalues of a Hermitian 3x3 matrix by bisection on the characteristic
/// polynomial: an implementation-independent route used to cross-check the
/// closed-form solver. Returns ascending values.
pub fn bisection_eigenvalues(input: &CMatrix3) -> [f64; 3] {
    // Work on the trace-shifted matrix; forming tr^2 - 3m on the raw input
    // cancels catastrophically when the eigenvalues cluster far from zero.
    let shift = (input[(0, 0)].re + input[(1, 1)].re + input[(2, 2)].re) / 3.0;
    let a = input - Matrix3::from_diagonal_element(Complex64::from(shift));

    // Monic characteristic polynomial q(x) = x^3 - tr x^2 + m x - det,
    // with m the sum of principal 2x2 minors. All coefficients are real
    // for Hermitian input.
    let tr = a[(0, 0)].re + a[(1, 1)].re + a[(2, 2)].re;
    let m = a[(0, 0)].re * a[(1, 1)].re - a[(0, 1)].norm_sqr()
        + a[(0, 0)].re * a[(2, 2)].re
        - a[(0, 2)].norm_sqr()
        + a[(1, 1)].re * a[(2, 2)].re
        - a[(1, 2)].norm_sqr();
    let det = a.determinant().re;
    let q = |x: f64| ((x - tr) * x + m) * x - det;

    // Gershgorin bounds bracket the whole spectrum.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..3 {
        let radius: f64 = (0..3)
            .filter(|&j| j != i)
            .map(|j| a[(i, j)].norm())
            .sum();
        lo = lo.min(a[(i, i)].re - radius);
        hi = hi.max(a[(i, i)].re + radius);
    }
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    let lo = lo - 1e-12 * scale;
    let hi = hi + 1e-12 * scale;

    // Critical points of q split the axis into one-root intervals.
    let disc = tr * tr - 3.0 * m;
    if disc <= 1e-24 * scale * scale {
        // Triple (or numerically triple) root.
        let x = tr / 3.0 + shift;
        return [x, x, x];
    }
    let sqrt_disc = disc.sqrt();
    let x1 = (tr - sqrt_disc) / 3.0;
    let x2 = (tr + sqrt_disc) / 3.0;

    // Polynomial values near a root scale with the cube of the spectral
    // scale; evaluation noise sits a few eps below that.
    let root_tol = 1e-13 * scale * scale * scale;
    let mut roots = [0.0; 3];
    if q(x1).abs() <= root_tol {
        // Double root at the local maximum.
        roots[0] = x1;
        roots[1] = x1;
        roots[2] = bisect(&q, x2, hi);
    } else if q(x2).abs() <= root_tol {
        roots[0] = bisect(&q, lo, x1);
        roots[1] = x2;
        roots[2] = x2;
    } else {
        roots[0] = bisect(&q, lo, x1);
        roots[1] = bisect(&q, x1, x2);
        roots[2] = bisect(&q, x2, hi);
    }
    roots.sort_by(f64::total_cmp);
    roots.map(|r| r + shift)
}

/// Bisection on [a, b]; q(a) and q(b) must have opposite (or zero) signs.
fn bisect(q: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut qa = q(a);
    if qa == 0.0 {
        return a;
    }
    if q(b) == 0.0 {
        return b;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let qm = q(mid);
        if qm == 0.0 {
            return mid;
        }
        if (qm > 0.0) == (qa > 0.0) {
            a = mid;
            qa = qm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Plain O(N^2) discrete Fourier transform magnitudes for bins 0..N/2.
pub fn dft_magnitudes(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n / 2)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (i, &yi) in y.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64;
                re += yi * angle.cos();
                im += yi * angle.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

/// Indices of the `count` strongest local maxima, each at least `min_gap`
/// bins from a stronger pick.
pub fn dominant_peaks(magnitudes: &[f64], count: usize, min_gap: usize) -> Vec<usize> {
    let mut candidates: Vec<usize> = (1..magnitudes.len() - 1)
        .filter(|&k| magnitudes[k] >= magnitudes[k - 1] && magnitudes[k] >= magnitudes[k + 1])
        .collect();
    candidates.sort_by(|&i, &j| magnitudes[j].total_cmp(&magnitudes[i]));
    let mut picks: Vec<usize> = Vec::new();
    for k in candidates {
        if picks.iter().all(|&p| p.abs_diff(k) >= min_gap) {
            picks.push(k);
            if picks.len() == count {
                break;
            }
        }
    }
    picks
}

/// Central-difference Jacobian at half the forward step, as an independent
/// check of the fit engine's forward differences.
pub fn central_difference_jacobian(
    eval: &dyn Fn(f64, &[f64]) -> f64,
    params: &[f64],
    x: &[f64],
) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; params.len()]; x.len()];
    let mut probe = params.to_vec();
    for j in 0..params.len() {
        let h = 0.5 * f64::EPSILON.sqrt() * params[j].abs().max(1.0);
        probe[j] = params[j] + h;
        let plus: Vec<f64> = x.iter().map(|&xi| eval(xi, &probe)).collect();
        probe[j] = params[j] - h;
        let minus: Vec<f64> = x.iter().map(|&xi| eval(xi, &probe)).collect();
        probe[j] = params[j];
        for i in 0..x.len() {
            out[i][j] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    out
}
