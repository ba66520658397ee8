//! Independent oracles for the acceptance suite. These deliberately avoid
//! the library's own numerical paths: eigenvalues come from polynomial
//! bisection, spectra from a plain DFT, and derivatives from central
//! differences.

#![allow(dead_code)]

use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::Rng;

pub type CMatrix3 = Matrix3<Complex64>;

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

pub fn frobenius(a: &CMatrix3) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian 3x3 eigenvalues by bisection on the characteristic polynomial,
/// evaluated on the trace-shifted matrix for conditioning. Ascending.
pub fn bisection_eigenvalues(input: &CMatrix3) -> [f64; 3] {
    let shift = (input[(0, 0)].re + input[(1, 1)].re + input[(2, 2)].re) / 3.0;
    let a = input - Matrix3::from_diagonal_element(Complex64::from(shift));

    let tr = a[(0, 0)].re + a[(1, 1)].re + a[(2, 2)].re;
    let m = a[(0, 0)].re * a[(1, 1)].re - a[(0, 1)].norm_sqr()
        + a[(0, 0)].re * a[(2, 2)].re
        - a[(0, 2)].norm_sqr()
        + a[(1, 1)].re * a[(2, 2)].re
        - a[(1, 2)].norm_sqr();
    let det = a.determinant().re;
    let q = |x: f64| ((x - tr) * x + m) * x - det;

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

    let disc = tr * tr - 3.0 * m;
    if disc <= 1e-24 * scale * scale {
        let x = tr / 3.0 + shift;
        return [x, x, x];
    }
    let sqrt_disc = disc.sqrt();
    let x1 = (tr - sqrt_disc) / 3.0;
    let x2 = (tr + sqrt_disc) / 3.0;

    let root_tol = 1e-13 * scale * scale * scale;
    let mut roots = [0.0; 3];
    if q(x1).abs() <= root_tol {
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

/// Least-squares slope of y against x.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let x_mean = x.iter().sum::<f64>() / n;
    let y_mean = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        num += (x[i] - x_mean) * (y[i] - y_mean);
        den += (x[i] - x_mean) * (x[i] - x_mean);
    }
    num / den
}
