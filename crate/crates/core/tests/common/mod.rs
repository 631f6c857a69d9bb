#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Largest Lyapunov exponent of Lorenz63 by tangent-vector renormalization
/// with the analytic Jacobian, per unit time.
pub fn benettin_lorenz63(sigma: f64, rho: f64, beta: f64, dt: f64, steps: usize, transient: usize) -> f64 {
    let f = |s: &[f64; 6]| -> [f64; 6] {
        let (x, y, z) = (s[0], s[1], s[2]);
        let (u, v, w) = (s[3], s[4], s[5]);
        [
            sigma * (y - x),
            x * (rho - z) - y,
            x * y - beta * z,
            sigma * (v - u),
            (rho - z) * u - v - x * w,
            y * u + x * v - beta * w,
        ]
    };
    let rk4 = |s: &[f64; 6]| -> [f64; 6] {
        let add = |a: &[f64; 6], b: &[f64; 6], h: f64| -> [f64; 6] {
            let mut o = *a;
            for i in 0..6 {
                o[i] += h * b[i];
            }
            o
        };
        let k1 = f(s);
        let k2 = f(&add(s, &k1, dt / 2.0));
        let k3 = f(&add(s, &k2, dt / 2.0));
        let k4 = f(&add(s, &k3, dt));
        let mut o = *s;
        for i in 0..6 {
            o[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        o
    };
    let mut s = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0];
    let mut acc = 0.0;
    for step in 0..transient + steps {
        s = rk4(&s);
        let norm = (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]).sqrt();
        for v in &mut s[3..] {
            *v /= norm;
        }
        if step >= transient {
            acc += norm.ln();
        }
    }
    acc / (steps as f64 * dt)
}

/// One level of the orthonormal Haar transform.
pub fn haar_step(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let r = 0.5f64.sqrt();
    let coarse = x.chunks(2).map(|p| r * (p[0] + p[1])).collect();
    let detail = x.chunks(2).map(|p| r * (p[0] - p[1])).collect();
    (coarse, detail)
}

pub fn dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / n as f64))
                .sum()
        })
        .collect()
}

pub fn idft(spec: &[Complex64]) -> Vec<f64> {
    let n = spec.len();
    (0..n)
        .map(|t| {
            spec.iter()
                .enumerate()
                .map(|(k, &c)| c * Complex64::from_polar(1.0, 2.0 * PI * (k * t) as f64 / n as f64))
                .sum::<Complex64>()
                .re
                / n as f64
        })
        .collect()
}

/// Keeps DFT bins `0..m` and their mirror images, zeroing the rest.
pub fn dft_lowpass(x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut spec = dft(x);
    for (k, c) in spec.iter_mut().enumerate() {
        let freq = k.min(n - k);
        if freq >= m {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    idft(&spec)
}

/// Matrix exponential by scaling, a 30-term Taylor series and squaring.
pub fn expm_taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.iter().map(|v| v.abs()).sum::<f64>();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Ridge coefficients from explicitly stacked rows:
/// `(XᵀX + λI)⁻¹ XᵀY`.
pub fn ridge_dense(xs: &[Vec<f64>], ys: &[Vec<f64>], lambda: f64) -> DMatrix<f64> {
    let x = DMatrix::from_fn(xs.len(), xs[0].len(), |i, j| xs[i][j]);
    let y = DMatrix::from_fn(ys.len(), ys[0].len(), |i, j| ys[i][j]);
    let p = x.ncols();
    let gram = x.transpose() * &x + DMatrix::identity(p, p) * lambda;
    gram.lu().solve(&(x.transpose() * y)).expect("singular oracle system")
}

/// Exhaustive false-nearest-neighbor fraction with the Kennel criteria.
pub fn fnn_exhaustive(series: &[f64], m: usize, tau: usize, r_tol: f64, a_tol: f64, theiler: usize) -> f64 {
    let n = series.len() - m * tau;
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let size = (series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / series.len() as f64).sqrt();
    let mut false_count = 0;
    let mut total = 0;
    for i in 0..n {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..n {
            if (i as i64 - j as i64).unsigned_abs() as usize <= theiler {
                continue;
            }
            let d: f64 = (0..m).map(|k| (series[i + k * tau] - series[j + k * tau]).powi(2)).sum();
            if d < best.0 {
                best = (d, j);
            }
        }
        if best.1 == usize::MAX {
            continue;
        }
        let extra = (series[i + m * tau] - series[best.1 + m * tau]).abs();
        let rm = best.0.sqrt();
        let stretched = if rm > 0.0 { extra / rm > r_tol } else { extra > 0.0 };
        let escaped = (best.0 + extra * extra).sqrt() / size > a_tol;
        total += 1;
        if stretched || escaped {
            false_count += 1;
        }
    }
    false_count as f64 / total as f64
}

/// Mutual information from a linearly binned histogram, coded with dense
/// per-sample membership vectors.
pub fn mutual_information_brute(series: &[f64], tau: usize, bins: usize) -> f64 {
    let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let membership = |v: f64| -> Vec<f64> {
        let centers: Vec<f64> = (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect();
        let mut w = vec![0.0; bins];
        if v <= centers[0] {
            w[0] = 1.0;
        } else if v >= centers[bins - 1] {
            w[bins - 1] = 1.0;
        } else {
            let k = centers.iter().rposition(|&c| c <= v).unwrap();
            let f = (v - centers[k]) / width;
            w[k] = 1.0 - f;
            w[k + 1] = f;
        }
        w
    };
    let n = series.len() - tau;
    let mut joint = vec![vec![0.0; bins]; bins];
    for t in 0..n {
        let (a, b) = (membership(series[t]), membership(series[t + tau]));
        for i in 0..bins {
            for j in 0..bins {
                joint[i][j] += a[i] * b[j] / n as f64;
            }
        }
    }
    let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let pb: Vec<f64> = (0..bins).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            if joint[i][j] > 0.0 {
                mi += joint[i][j] * (joint[i][j] / (pa[i] * pb[j])).ln();
            }
        }
    }
    mi
}

pub fn lorenz63_x(steps: usize) -> Vec<f64> {
    use attraos_core::chaos_sim::{simulate_lorenz63, Lorenz63Params};
    simulate_lorenz63(&Lorenz63Params::default(), [1.0, 1.0, 1.0], 0.01, steps + 1000)
        .unwrap()
        .discard_transient(1001)
        .component(0)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
