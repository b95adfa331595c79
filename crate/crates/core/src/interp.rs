//! Shape-preserving piecewise cubic Hermite interpolation (Fritsch–Carlson).

use std::f64::consts::PI;

/// Monotone cubic interpolant through `(x_i, y_i)` with strictly increasing `x`.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    period: Option<(f64, f64)>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2, "need at least two nodes");
        debug_assert!(x.windows(2).all(|w| w[1] > w[0]), "abscissae must increase");
        let d = slopes(&x, &y);
        Pchip { x, y, d, period: None }
    }

    /// Periodic table: `y(x + period) = y(x) + shift`.
    ///
    /// `x` must lie in `[x_0, x_0 + period)`; three wrapped nodes are added
    /// on each side so the slopes at the seam see both neighbours.
    pub fn periodic(x: &[f64], y: &[f64], period: f64, shift: f64) -> Self {
        let n = x.len();
        assert!(n >= 4);
        let pad = 3.min(n);
        let mut xe = Vec::with_capacity(n + 2 * pad);
        let mut ye = Vec::with_capacity(n + 2 * pad);
        for i in n - pad..n {
            xe.push(x[i] - period);
            ye.push(y[i] - shift);
        }
        xe.extend_from_slice(x);
        ye.extend_from_slice(y);
        for i in 0..pad {
            xe.push(x[i] + period);
            ye.push(y[i] + shift);
        }
        let d = slopes(&xe, &ye);
        Pchip {
            x: xe,
            y: ye,
            d,
            period: Some((period, shift)),
        }
    }

    /// Periodic samples on the uniform grid `t_j = 2πj/N`.
    pub fn periodic_uniform(y: &[f64], shift: f64) -> Self {
        let x = crate::fft::nodes(y.len());
        Self::periodic(&x, y, 2.0 * PI, shift)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (t, offset) = match self.period {
            Some((p, s)) => {
                // the first real node sits three places in
                let x0 = self.x[3];
                let k = ((t - x0) / p).floor();
                (t - k * p, k * s)
            }
            None => (t, 0.0),
        };
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (d0, d1) = (self.d[i] * h, self.d[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1;
        v + offset
    }
}

fn slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = del[0];
        d[1] = del[0];
        return d;
    }
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], del[0], del[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_stays_monotone() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        let p = Pchip::new(x.clone(), y.clone());
        for (a, b) in x.iter().zip(&y) {
            assert!((p.eval(*a) - b).abs() < 1e-12);
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..500 {
            let v = p.eval(i as f64 * 0.0114);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn periodic_wraps_with_shift() {
        let n = 64;
        let t = crate::fft::nodes(n);
        let y: Vec<f64> = t.iter().map(|t| t + 0.2 * t.sin()).collect();
        let p = Pchip::periodic_uniform(&y, 2.0 * PI);
        for &s in &[-1.0, 0.05, 3.0, 6.2, 7.0, 13.0] {
            let exact = s + 0.2 * f64::sin(s);
            assert!((p.eval(s) - exact).abs() < 1e-4, "{s}");
        }
    }
}
