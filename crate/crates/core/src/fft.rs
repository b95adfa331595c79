//! Thin helpers over `rustfft` for periodic boundary samples.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

pub fn is_pow2(n: usize) -> bool {
    n >= 1 && n & (n - 1) == 0
}

/// Normalised forward DFT: `a_k = (1/N) Σ_j x_j e^{-2πi jk/N}`.
pub fn forward(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

/// Inverse of [`forward`]: `x_j = Σ_k a_k e^{2πi jk/N}`.
pub fn inverse(a: &[C64]) -> Vec<C64> {
    let mut buf = a.to_vec();
    FftPlanner::new().plan_fft_inverse(a.len()).process(&mut buf);
    buf
}

pub fn forward_real(x: &[f64]) -> Vec<C64> {
    let c: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    forward(&c)
}

/// Signed frequency of DFT bin `k` for length `n`.
pub fn freq(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Boundary trace of the circle conjugate function.
///
/// Multiplier `-i sign(k)`; the Nyquist bin is dropped.
pub fn conjugate(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut a = forward_real(x);
    for (k, v) in a.iter_mut().enumerate() {
        let f = freq(k, n);
        *v = if n.is_multiple_of(2) && k == n / 2 {
            C64::new(0.0, 0.0)
        } else {
            *v * C64::new(0.0, -(f.signum() as f64))
        };
    }
    inverse(&a).into_iter().map(|v| v.re).collect()
}

/// Spectral derivative of periodic samples over `[0, 2π)`.
pub fn derivative(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    let mut a = forward(x);
    for (k, v) in a.iter_mut().enumerate() {
        if n.is_multiple_of(2) && k == n / 2 {
            *v = C64::new(0.0, 0.0);
        } else {
            *v *= C64::new(0.0, freq(k, n) as f64);
        }
    }
    inverse(&a)
}

/// Band-limited upsampling of periodic samples by an integer factor.
pub fn upsample(x: &[C64], factor: usize) -> Vec<C64> {
    let n = x.len();
    let m = n * factor;
    let a = forward(x);
    let mut b = vec![C64::new(0.0, 0.0); m];
    for (k, &v) in a.iter().enumerate() {
        if n.is_multiple_of(2) && k == n / 2 {
            b[k] += 0.5 * v;
            b[m - k] += 0.5 * v;
        } else {
            let f = freq(k, n);
            let idx = if f >= 0 { f as usize } else { (m as i64 + f) as usize };
            b[idx] = v;
        }
    }
    inverse(&b)
}

/// Uniform parameter nodes `t_j = 2πj/N`.
pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Two-dimensional transform on a row-major `n × n` array, in place.
///
/// Rows are processed in parallel; each row is transformed independently, so
/// the result does not depend on the thread count.
pub(crate) fn fft2(data: &mut [C64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    data.par_chunks_mut(n).for_each(|row| plan.process(row));
    transpose(data, n);
    data.par_chunks_mut(n).for_each(|row| plan.process(row));
    transpose(data, n);
    if inverse {
        let s = 1.0 / (n * n) as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }
}

fn transpose(data: &mut [C64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_of_cosine_is_sine() {
        let t = nodes(64);
        let g: Vec<f64> = t.iter().map(|t| (3.0 * t).cos()).collect();
        let h = conjugate(&g);
        for (ti, hi) in t.iter().zip(&h) {
            assert!((hi - (3.0 * ti).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn upsample_reproduces_trig_polynomial() {
        let t = nodes(16);
        let x: Vec<C64> = t.iter().map(|&t| C64::new((2.0 * t).sin(), t.cos())).collect();
        let y = upsample(&x, 4);
        for (j, v) in y.iter().enumerate() {
            let s = 2.0 * PI * j as f64 / 64.0;
            assert!((v - C64::new((2.0 * s).sin(), s.cos())).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_exponential() {
        let t = nodes(32);
        let x: Vec<C64> = t.iter().map(|&t| C64::new(0.0, 2.0 * t).exp()).collect();
        let d = derivative(&x);
        for (xi, di) in x.iter().zip(&d) {
            assert!((di - C64::new(0.0, 2.0) * xi).norm() < 1e-12);
        }
    }
}
