//! Symmetric class-B coefficient matrices and their Beltrami coefficients,
//! extension of `μ` to the plane, and an FFT solver for `h_z̄ = μ h_z`.
//!
//! The solver iterates `ω = μ(1 + Bω)` on a periodic square, with `B` the
//! Beurling transform as a Fourier multiplier. A periodic Cauchy transform only
//! accepts mean-zero data, so the mean of `ω` is carried by a radial bump `G`
//! whose whole-plane transforms are known in closed form:
//! `h = z + C_p[ω − mG] + m·C[G]`, `m = Σω / ΣG`.

use crate::error::{Error, Result};
use crate::fft;
use crate::geometry::{fmt, JordanCurve};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

pub type Mat2 = [[f64; 2]; 2];

/// Class-B tolerance on `det A − 1`.
pub const DET_TOL: f64 = 1e-10;
const BUMP_POWER: i32 = 8;

/// `(a22 − a11 − 2i·a21)/(1 + Tr A + det A)`.
pub fn mu_of(a: &Mat2) -> C64 {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    C64::new(a[1][1] - a[0][0], -2.0 * a[1][0]) / (1.0 + tr + det)
}

/// Symmetric matrix with `det = 1` whose Beltrami coefficient is `μ`.
pub fn matrix_of(mu: C64) -> Result<Mat2> {
    let d = 1.0 - mu.norm_sqr();
    if !(d > 0.0) {
        return Err(Error::Validation {
            message: format!("|μ| = {} is not below 1", mu.norm()),
            points: vec![0],
        });
    }
    let a11 = (C64::new(1.0, 0.0) - mu).norm_sqr() / d;
    let a22 = (C64::new(1.0, 0.0) + mu).norm_sqr() / d;
    let a12 = -2.0 * mu.im / d;
    Ok([[a11, a12], [a12, a22]])
}

/// `K_μ = (1 + |μ|)/(1 − |μ|)`.
pub fn k_of(mu: C64) -> f64 {
    let m = mu.norm();
    (1.0 + m) / (1.0 - m)
}

fn eig_min(a: &Mat2) -> f64 {
    let h = 0.5 * (a[0][0] + a[1][1]);
    let d = 0.5 * (a[0][0] - a[1][1]);
    h - (d * d + a[0][1] * a[0][1]).sqrt()
}

fn eig_max(a: &Mat2) -> f64 {
    let h = 0.5 * (a[0][0] + a[1][1]);
    let d = 0.5 * (a[0][0] - a[1][1]);
    h + (d * d + a[0][1] * a[0][1]).sqrt()
}

pub fn eigenvalues(a: &Mat2) -> (f64, f64) {
    (eig_min(a), eig_max(a))
}

/// Square grid `center + (−L + 2Li/n, −L + 2Lj/n)`, stored row-major in `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub center: C64,
    pub half_width: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(center: C64, half_width: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::Config(format!("grid needs at least 8 nodes per side, got {n}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Config(format!("grid half-width must be positive, got {half_width}")));
        }
        Ok(Grid { center, half_width, n })
    }

    /// Square of half-width twice the circumradius about the centroid.
    pub fn for_curve(curve: &JordanCurve, n: usize) -> Result<Self> {
        let c = curve.centroid();
        Self::new(c, 2.0 * curve.circumradius(c), n)
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn point(&self, i: usize, j: usize) -> C64 {
        let h = self.step();
        self.center + C64::new(-self.half_width + h * i as f64, -self.half_width + h * j as f64)
    }

    pub fn point_at(&self, k: usize) -> C64 {
        self.point(k % self.n, k / self.n)
    }

    pub fn points(&self) -> Vec<C64> {
        (0..self.len()).map(|k| self.point_at(k)).collect()
    }

    /// Fractional grid coordinates of `z`.
    fn locate(&self, z: C64) -> (f64, f64) {
        let d = z - self.center;
        let h = self.step();
        ((d.re + self.half_width) / h, (d.im + self.half_width) / h)
    }

    /// Bicubic Lagrange interpolation of row-major samples.
    pub fn interpolate(&self, data: &[C64], z: C64) -> Result<C64> {
        let (fx, fy) = self.locate(z);
        let (ix, iy) = (fx.floor(), fy.floor());
        let n = self.n as f64;
        if !(ix >= 1.0 && iy >= 1.0 && ix + 2.0 < n && iy + 2.0 < n) {
            return Err(Error::Domain(format!("{z} is outside the grid interior")));
        }
        let wx = lagrange4(fx - ix);
        let wy = lagrange4(fy - iy);
        let (ix, iy) = (ix as usize - 1, iy as usize - 1);
        let mut v = C64::new(0.0, 0.0);
        for (b, wyb) in wy.iter().enumerate() {
            let row = (iy + b) * self.n + ix;
            let mut r = C64::new(0.0, 0.0);
            for (a, wxa) in wx.iter().enumerate() {
                r += data[row + a] * wxa;
            }
            v += r * wyb;
        }
        Ok(v)
    }

    /// Nodes with frequencies `ξ = π k / L` for the row-major FFT layout.
    fn frequency(&self, k: usize) -> (f64, f64) {
        let s = PI / self.half_width;
        (s * fft::freq(k % self.n, self.n) as f64, s * fft::freq(k / self.n, self.n) as f64)
    }
}

/// Weights at offsets −1, 0, 1, 2 for `s ∈ [0, 1)`.
fn lagrange4(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// CSV with columns `x, y, re, im`.
pub fn write_grid_csv<W: Write>(grid: &Grid, values: &[C64], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "y", "re", "im"])?;
    for (k, v) in values.iter().enumerate() {
        let z = grid.point_at(k);
        wr.write_record([fmt(z.re), fmt(z.im), fmt(v.re), fmt(v.im)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Symmetric, unit-determinant, elliptic matrix samples on a grid.
#[derive(Debug, Clone)]
pub struct MatrixFieldA {
    grid: Grid,
    a: Vec<Mat2>,
    alpha: f64,
    holder: f64,
    ellipticity: f64,
}

/// Indices violating symmetry, `|det − 1| ≤ DET_TOL` or positivity.
pub fn class_b_violations(a: &[Mat2]) -> Vec<usize> {
    a.iter()
        .enumerate()
        .filter(|(_, m)| {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            m[0][1] != m[1][0] || !((det - 1.0).abs() <= DET_TOL) || !(eig_min(m) > 0.0) || m.iter().flatten().any(|v| !v.is_finite())
        })
        .map(|(k, _)| k)
        .collect()
}

impl MatrixFieldA {
    pub fn from_samples(grid: Grid, a: Vec<Mat2>, alpha: f64) -> Result<Self> {
        if a.len() != grid.len() {
            return Err(Error::Config(format!("{} matrices for a grid of {}", a.len(), grid.len())));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("Hölder exponent must lie in (0, 1), got {alpha}")));
        }
        let bad = class_b_violations(&a);
        if !bad.is_empty() {
            return Err(Error::Validation {
                message: "matrix field is not in class B (symmetric, det = 1, elliptic)".into(),
                points: bad,
            });
        }
        let ellipticity = a.iter().map(eig_min).fold(f64::INFINITY, f64::min);
        let holder = holder_estimate(&grid, &a, alpha);
        Ok(MatrixFieldA {
            grid,
            a,
            alpha,
            holder,
            ellipticity,
        })
    }

    pub fn from_fn(grid: Grid, alpha: f64, f: impl Fn(C64) -> Mat2 + Sync) -> Result<Self> {
        let a = (0..grid.len()).into_par_iter().map(|k| f(grid.point_at(k))).collect();
        Self::from_samples(grid, a, alpha)
    }

    pub fn constant(grid: Grid, m: Mat2) -> Result<Self> {
        Self::from_samples(grid, vec![m; grid.len()], 0.5)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Mat2] {
        &self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Largest `‖A(p) − A(q)‖ / |p − q|^α` over grid pairs at dyadic distances.
    pub fn holder_constant(&self) -> f64 {
        self.holder
    }

    /// Smallest eigenvalue over the samples.
    pub fn ellipticity(&self) -> f64 {
        self.ellipticity
    }

    /// Bilinear interpolation inside the grid.
    pub fn eval(&self, z: C64) -> Result<Mat2> {
        let (fx, fy) = self.grid.locate(z);
        let n = self.grid.n;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= (n - 1) as f64 && fy <= (n - 1) as f64) {
            return Err(Error::Domain(format!("{z} is outside the matrix grid")));
        }
        let (i, j) = ((fx.floor() as usize).min(n - 2), (fy.floor() as usize).min(n - 2));
        let (s, t) = (fx - i as f64, fy - j as f64);
        let at = |a: usize, b: usize| &self.a[(j + b) * n + i + a];
        let mut m = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = (1.0 - s) * (1.0 - t) * at(0, 0)[r][c]
                    + s * (1.0 - t) * at(1, 0)[r][c]
                    + (1.0 - s) * t * at(0, 1)[r][c]
                    + s * t * at(1, 1)[r][c];
            }
        }
        // bilinear blending keeps symmetry but not det = 1; renormalize
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let s = det.sqrt();
        Ok([[m[0][0] / s, m[0][1] / s], [m[1][0] / s, m[1][1] / s]])
    }
}

fn holder_estimate(grid: &Grid, a: &[Mat2], alpha: f64) -> f64 {
    let n = grid.n;
    let h = grid.step();
    let diff = |p: &Mat2, q: &Mat2| {
        p.iter()
            .flatten()
            .zip(q.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let mut best: f64 = 0.0;
    let mut d = 1;
    while d < n / 2 {
        let scale = (d as f64 * h).powf(alpha);
        let m = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut m: f64 = 0.0;
                for i in 0..n {
                    let p = &a[j * n + i];
                    if i + d < n {
                        m = m.max(diff(p, &a[j * n + i + d]));
                    }
                    if j + d < n {
                        m = m.max(diff(p, &a[(j + d) * n + i]));
                    }
                }
                m
            })
            .reduce(|| 0.0, f64::max);
        best = best.max(m / scale);
        d *= 2;
    }
    best
}

/// Complex Beltrami coefficient samples with `‖μ‖_∞ < 1`.
#[derive(Debug, Clone)]
pub struct BeltramiField {
    grid: Grid,
    mu: Vec<C64>,
    k: f64,
    support: Option<f64>,
}

impl BeltramiField {
    pub fn from_samples(grid: Grid, mu: Vec<C64>) -> Result<Self> {
        if mu.len() != grid.len() {
            return Err(Error::Config(format!("{} samples for a grid of {}", mu.len(), grid.len())));
        }
        let bad: Vec<usize> = mu.iter().enumerate().filter(|(_, m)| !(m.norm() < 1.0)).map(|(k, _)| k).collect();
        if !bad.is_empty() {
            return Err(Error::Validation {
                message: "Beltrami coefficient is degenerate (|μ| ≥ 1)".into(),
                points: bad,
            });
        }
        let k = mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
        Ok(BeltramiField {
            grid,
            mu,
            k,
            support: None,
        })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(C64) -> C64 + Sync) -> Result<Self> {
        let mu = (0..grid.len()).into_par_iter().map(|k| f(grid.point_at(k))).collect();
        Self::from_samples(grid, mu)
    }

    pub fn zero(grid: Grid) -> Self {
        BeltramiField {
            grid,
            mu: vec![C64::new(0.0, 0.0); grid.len()],
            k: 0.0,
            support: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.mu
    }

    /// `‖μ‖_∞` over the samples.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Radius about the grid center outside which `μ` vanishes, when known.
    pub fn support_radius(&self) -> Option<f64> {
        self.support
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_grid_csv(&self.grid, &self.mu, w)
    }
}

pub fn mu_from_a(a: &MatrixFieldA) -> Result<BeltramiField> {
    let bad = class_b_violations(&a.a);
    if !bad.is_empty() {
        return Err(Error::Validation {
            message: "matrix field is not in class B".into(),
            points: bad,
        });
    }
    BeltramiField::from_samples(a.grid, a.a.iter().map(mu_of).collect())
}

pub fn a_from_mu(mu: &BeltramiField, alpha: f64) -> Result<MatrixFieldA> {
    let mut bad = Vec::new();
    let mut a = Vec::with_capacity(mu.mu.len());
    for (k, &m) in mu.mu.iter().enumerate() {
        match matrix_of(m) {
            Ok(v) => a.push(v),
            Err(_) => {
                bad.push(k);
                a.push([[1.0, 0.0], [0.0, 1.0]]);
            }
        }
    }
    if !bad.is_empty() {
        return Err(Error::Validation {
            message: "Beltrami coefficient is degenerate (|μ| ≥ 1)".into(),
            points: bad,
        });
    }
    MatrixFieldA::from_samples(mu.grid, a, alpha)
}

/// Pointwise `K_μ` and its supremum.
pub fn k_mu(mu: &BeltramiField) -> (Vec<f64>, f64) {
    let k: Vec<f64> = mu.mu.iter().map(|&m| k_of(m)).collect();
    let sup = k.iter().cloned().fold(1.0, f64::max);
    (k, sup)
}

/// `C^∞` step: 1 for `r ≤ r0`, 0 for `r ≥ r1`.
pub fn cutoff(r: f64, r0: f64, r1: f64) -> f64 {
    if r <= r0 {
        return 1.0;
    }
    if r >= r1 {
        return 0.0;
    }
    let x = (r - r0) / (r1 - r0);
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    b / (a + b)
}

/// Extension of `μ` from the closed domain to the grid: `μ` itself inside
/// the curve, outside the value at the nearest boundary sample times a
/// cutoff that is 1 up to the circumradius and 0 beyond `radius`.
///
/// `radius` defaults to 1.5 times the circumradius about the grid center.
pub fn extend_mu(mu: impl Fn(C64) -> C64 + Sync, curve: &JordanCurve, grid: Grid, radius: Option<f64>) -> Result<BeltramiField> {
    let c = grid.center;
    let rc = curve.circumradius(c);
    let r1 = radius.unwrap_or(1.5 * rc);
    if !(r1 > rc) {
        return Err(Error::Config(format!("cutoff radius {r1} must exceed the circumradius {rc}")));
    }
    if r1 >= grid.half_width {
        return Err(Error::Config(format!(
            "cutoff radius {r1} does not fit in the grid of half-width {}",
            grid.half_width
        )));
    }
    let edge: Vec<C64> = curve.points().iter().map(|&z| mu(z)).collect();
    let pts = curve.points();
    let vals: Vec<C64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let z = grid.point_at(k);
            let r = (z - c).norm();
            if r > r1 {
                C64::new(0.0, 0.0)
            } else if curve.contains(z) {
                mu(z)
            } else {
                let j = nearest(pts, z);
                edge[j] * cutoff(r, rc, r1)
            }
        })
        .collect();
    let mut f = BeltramiField::from_samples(grid, vals)?;
    f.support = Some(r1);
    Ok(f)
}

fn nearest(pts: &[C64], z: C64) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (j, p) in pts.iter().enumerate() {
        let d = (p - z).norm_sqr();
        if d < best.0 {
            best = (d, j);
        }
    }
    best.1
}

#[derive(Debug, Clone, Copy)]
pub struct BeltramiOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for BeltramiOptions {
    fn default() -> Self {
        BeltramiOptions {
            tol: 1e-10,
            max_iters: 1000,
        }
    }
}

/// Radial bump of unit mass, `(p+1)/(πR²)(1 − r²/R²)^p`, with its closed-form
/// Cauchy and Beurling transforms.
#[derive(Debug, Clone, Copy)]
struct Bump {
    center: C64,
    radius: f64,
}

impl Bump {
    fn g(&self, z: C64) -> f64 {
        let s = (z - self.center).norm_sqr() / (self.radius * self.radius);
        if s >= 1.0 {
            0.0
        } else {
            (BUMP_POWER + 1) as f64 / (PI * self.radius * self.radius) * (1.0 - s).powi(BUMP_POWER)
        }
    }

    /// Mass inside radius `r` divided by `π r²`.
    fn mass_density(&self, s: f64) -> f64 {
        let r2 = self.radius * self.radius;
        if s == 0.0 {
            return (BUMP_POWER + 1) as f64 / (PI * r2);
        }
        let m = if s >= 1.0 {
            1.0
        } else {
            -((BUMP_POWER + 1) as f64 * (-s).ln_1p()).exp_m1()
        };
        m / (PI * s * r2)
    }

    /// `C[G] = M(r) z̄/(π r²)`.
    fn cauchy(&self, z: C64) -> C64 {
        let d = z - self.center;
        let s = d.norm_sqr() / (self.radius * self.radius);
        d.conj() * self.mass_density(s)
    }

    /// `B[G] = (z̄/z)(G − M(r)/(π r²))`.
    fn beurling(&self, z: C64) -> C64 {
        let d = z - self.center;
        if d.norm_sqr() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let s = d.norm_sqr() / (self.radius * self.radius);
        (d.conj() / d) * (self.g(z) - self.mass_density(s))
    }
}

/// Quasiconformal solution of `h_z̄ = μ h_z` on the computational square.
#[derive(Debug, Clone)]
pub struct QCMap {
    grid: Grid,
    periodic: Vec<C64>,
    periodic_z: Vec<C64>,
    omega: Vec<C64>,
    bump: Bump,
    mass: C64,
    k: f64,
    tol: f64,
    iterations: usize,
    residual: f64,
    min_jacobian: f64,
    max_distortion: f64,
}

/// `h`, `h_z`, `h_z̄` at a point.
#[derive(Debug, Clone, Copy)]
pub struct QCValue {
    pub h: C64,
    pub hz: C64,
    pub hzb: C64,
}

impl QCValue {
    pub fn jacobian(&self) -> f64 {
        self.hz.norm_sqr() - self.hzb.norm_sqr()
    }

    /// `h_e = h_z e + h_z̄ ē` for a unit direction `e`.
    pub fn directional(&self, e: C64) -> C64 {
        self.hz * e + self.hzb * e.conj()
    }
}

struct Multipliers {
    beurling: Vec<C64>,
    cauchy: Vec<C64>,
}

fn multipliers(grid: &Grid) -> Multipliers {
    let n = grid.n;
    let (beurling, cauchy) = (0..grid.len())
        .map(|k| {
            let nyq = n.is_multiple_of(2) && (k % n == n / 2 || k / n == n / 2);
            let (x, y) = grid.frequency(k);
            if nyq || (x == 0.0 && y == 0.0) {
                (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
            } else {
                let w = C64::new(x, y);
                ((w.conj() / w), C64::new(0.0, -2.0) / w)
            }
        })
        .unzip();
    Multipliers { beurling, cauchy }
}

fn apply(spec: &[C64], mult: &[C64], n: usize) -> Vec<C64> {
    let mut v: Vec<C64> = spec.par_iter().zip(mult).map(|(a, b)| a * b).collect();
    fft::fft2(&mut v, n, true);
    v
}

pub fn solve_beltrami(mu: &BeltramiField, opts: BeltramiOptions) -> Result<QCMap> {
    let grid = mu.grid;
    let n = grid.n;
    if !(mu.k < 1.0) {
        return Err(Error::Regularity(format!("‖μ‖∞ = {} is not below 1", mu.k)));
    }
    let frame = 0.95 * grid.half_width;
    if let Some(k) = (0..grid.len()).find(|&k| {
        let d = grid.point_at(k) - grid.center;
        d.re.abs().max(d.im.abs()) >= frame && mu.mu[k] != C64::new(0.0, 0.0)
    }) {
        return Err(Error::Config(format!(
            "μ must vanish near the edge of the computational square (nonzero at {})",
            grid.point_at(k)
        )));
    }
    let bump = Bump {
        center: grid.center,
        radius: 0.9 * grid.half_width,
    };
    let pts = grid.points();
    let g: Vec<f64> = pts.iter().map(|&z| bump.g(z)).collect();
    let g_sum: f64 = g.iter().sum();
    let bg: Vec<C64> = pts.iter().map(|&z| bump.beurling(z)).collect();
    let mult = multipliers(&grid);

    let split = |omega: &[C64]| -> (C64, Vec<C64>) {
        let m = omega.iter().sum::<C64>() / g_sum;
        let mut f: Vec<C64> = omega.iter().zip(&g).map(|(w, g)| w - m * g).collect();
        fft::fft2(&mut f, n, false);
        (m, f)
    };

    let mut omega = mu.mu.clone();
    let mut iterations = 0;
    let mut last = f64::INFINITY;
    if mu.k > 0.0 {
        loop {
            iterations += 1;
            let (m, spec) = split(&omega);
            let bp = apply(&spec, &mult.beurling, n);
            let next: Vec<C64> = (0..grid.len())
                .into_par_iter()
                .map(|k| mu.mu[k] * (1.0 + bp[k] + m * bg[k]))
                .collect();
            let diff = (next.iter().zip(&omega).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / grid.len() as f64).sqrt();
            omega = next;
            if diff < opts.tol {
                break;
            }
            if iterations >= opts.max_iters || !diff.is_finite() {
                return Err(Error::Convergence {
                    iterations,
                    detail: format!(
                        "Beltrami iteration stalled: last update {diff:.3e} (previous {last:.3e}), k = {:.4}, grid {n}²",
                        mu.k
                    ),
                });
            }
            last = diff;
        }
    }
    let (mass, spec) = split(&omega);
    let periodic = apply(&spec, &mult.cauchy, n);
    let periodic_z = apply(&spec, &mult.beurling, n);

    let mut map = QCMap {
        grid,
        periodic,
        periodic_z,
        omega,
        bump,
        mass,
        k: mu.k,
        tol: opts.tol,
        iterations,
        residual: 0.0,
        min_jacobian: 0.0,
        max_distortion: 0.0,
    };
    let hz = map.hz_samples();
    let mut residual: f64 = 0.0;
    let mut jmin = f64::INFINITY;
    let mut dmax: f64 = 1.0;
    for k in 0..grid.len() {
        let (a, b) = (hz[k], map.omega[k]);
        residual = residual.max((b - mu.mu[k] * a).norm());
        jmin = jmin.min(a.norm_sqr() - b.norm_sqr());
        dmax = dmax.max((a.norm() + b.norm()) / (a.norm() - b.norm()));
    }
    map.residual = residual;
    map.min_jacobian = jmin;
    map.max_distortion = dmax;
    Ok(map)
}

impl QCMap {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `max |h_z̄ − μ h_z|` over the grid samples.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Smallest `|h_z|² − |h_z̄|²` over the grid samples.
    pub fn min_jacobian(&self) -> f64 {
        self.min_jacobian
    }

    /// Largest `(|h_z| + |h_z̄|)/(|h_z| − |h_z̄|)` over the grid samples.
    pub fn max_distortion(&self) -> f64 {
        self.max_distortion
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn h_samples(&self) -> Vec<C64> {
        (0..self.grid.len())
            .map(|k| {
                let z = self.grid.point_at(k);
                z + self.periodic[k] + self.mass * self.bump.cauchy(z)
            })
            .collect()
    }

    pub fn hz_samples(&self) -> Vec<C64> {
        (0..self.grid.len())
            .map(|k| 1.0 + self.periodic_z[k] + self.mass * self.bump.beurling(self.grid.point_at(k)))
            .collect()
    }

    pub fn hzb_samples(&self) -> &[C64] {
        &self.omega
    }

    pub fn eval(&self, z: C64) -> Result<QCValue> {
        let p = self.grid.interpolate(&self.periodic, z)?;
        let pz = self.grid.interpolate(&self.periodic_z, z)?;
        let hzb = self.grid.interpolate(&self.omega, z)?;
        Ok(QCValue {
            h: z + p + self.mass * self.bump.cauchy(z),
            hz: 1.0 + pz + self.mass * self.bump.beurling(z),
            hzb,
        })
    }

    pub fn h(&self, z: C64) -> Result<C64> {
        Ok(self.eval(z)?.h)
    }

    /// `h⁻¹(p)` by a coarse search over the samples and Newton refinement.
    pub fn inverse(&self, p: C64) -> Result<C64> {
        let hs = self.h_samples();
        let n = self.grid.n;
        let mut best = (f64::INFINITY, 0);
        for j in 2..n - 3 {
            for i in 2..n - 3 {
                let d = (hs[j * n + i] - p).norm_sqr();
                if d < best.0 {
                    best = (d, j * n + i);
                }
            }
        }
        let mut z = self.grid.point_at(best.1);
        let scale = 1.0 + p.norm();
        for _ in 0..50 {
            let v = self.eval(z)?;
            let r = p - v.h;
            if r.norm() <= 1e-14 * scale {
                return Ok(z);
            }
            let j = v.jacobian();
            if !(j > 0.0) {
                return Err(Error::Regularity(format!("J_h = {j} at {z}")));
            }
            z += (v.hz.conj() * r - v.hzb * r.conj()) / j;
        }
        let r = (self.h(z)? - p).norm();
        if r <= 1e-10 * scale {
            Ok(z)
        } else {
            Err(Error::Convergence {
                iterations: 50,
                detail: format!("inverse of h at {p}: residual {r:.3e}"),
            })
        }
    }

    /// JSON header for grid exports.
    pub fn header_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&GridHeader {
            half_width: self.grid.half_width,
            n: self.grid.n,
            center: [self.grid.center.re, self.grid.center.im],
            k: self.k,
            tol: self.tol,
            iterations: self.iterations,
            residual: self.residual,
            min_jacobian: self.min_jacobian,
            max_distortion: self.max_distortion,
        })?)
    }
}

#[derive(Serialize)]
struct GridHeader {
    #[serde(rename = "L")]
    half_width: f64,
    #[serde(rename = "N")]
    n: usize,
    center: [f64; 2],
    k: f64,
    tol: f64,
    iterations: usize,
    residual: f64,
    min_jacobian: f64,
    max_distortion: f64,
}

/// `h_e(ζ) = h_z e + h_z̄ ē`.
pub fn directional_derivative_h(h: &QCMap, zeta: C64, e: C64) -> Result<C64> {
    Ok(h.eval(zeta)?.directional(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dictionary_examples() {
        assert_eq!(mu_of(&[[1.0, 0.0], [0.0, 1.0]]), c(0.0, 0.0));
        assert!((mu_of(&[[2.0, 0.0], [0.0, 0.5]]) - c(-1.0 / 3.0, 0.0)).norm() < 1e-15);
        let k: f64 = 0.2;
        let d = 1.0 - k * k;
        let a = [[(1.0 + k * k) / d, -2.0 * k / d], [-2.0 * k / d, (1.0 + k * k) / d]];
        assert!((mu_of(&a) - c(0.0, 0.2)).norm() < 1e-15);
        let m = matrix_of(c(-1.0 / 3.0, 0.0)).unwrap();
        assert!((m[0][0] - 2.0).abs() < 1e-14 && (m[1][1] - 0.5).abs() < 1e-14 && m[0][1] == 0.0);
        let m = matrix_of(c(0.0, 0.2)).unwrap();
        assert!((m[0][1] + 0.4 / 0.96).abs() < 1e-15);
        assert!((m[0][0] - 1.04 / 0.96).abs() < 1e-15);
        assert!((m[0][0] * m[1][1] - m[0][1] * m[1][0] - 1.0).abs() < 1e-12);
        assert!(matrix_of(c(1.0, 0.0)).is_err());
        assert_eq!(k_of(c(0.0, 0.0)), 1.0);
        assert!((k_of(c(0.0, 1.0 / 3.0)) - 2.0).abs() < 1e-15);
        assert!((k_of(c(0.5, 0.0)) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn class_b_validation_lists_points() {
        let grid = Grid::new(c(0.0, 0.0), 1.0, 8).unwrap();
        let mut a = vec![[[1.0, 0.0], [0.0, 1.0]]; 64];
        a[5] = [[2.0, 0.0], [0.0, 1.0]];
        a[9] = [[1.0, 0.1], [0.0, 1.0]];
        match MatrixFieldA::from_samples(grid, a, 0.5) {
            Err(Error::Validation { points, .. }) => assert_eq!(points, vec![5, 9]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cutoff_extension_agrees_inside() {
        let curve = JordanCurve::unit_circle(128).unwrap();
        let grid = Grid::for_curve(&curve, 64).unwrap();
        let ext = extend_mu(|_| c(0.3, 0.0), &curve, grid, Some(2.0 * 0.99)).unwrap();
        for (k, v) in ext.values().iter().enumerate() {
            let z = grid.point_at(k);
            if curve.contains(z) {
                assert_eq!(*v, c(0.3, 0.0));
            }
            if z.norm() > 1.98 {
                assert_eq!(*v, c(0.0, 0.0));
            }
            assert!(v.norm() <= 0.3);
        }
        assert!(extend_mu(|_| c(0.3, 0.0), &curve, grid, Some(0.5)).is_err());
    }

    #[test]
    fn zero_mu_gives_identity() {
        let grid = Grid::new(c(0.0, 0.0), 2.0, 64).unwrap();
        let h = solve_beltrami(&BeltramiField::zero(grid), BeltramiOptions::default()).unwrap();
        assert_eq!(h.residual(), 0.0);
        let z = c(0.3, -0.2);
        let v = h.eval(z).unwrap();
        assert!((v.h - z).norm() < 1e-14 && (v.hz - 1.0).norm() < 1e-14 && v.hzb.norm() == 0.0);
        assert!((directional_derivative_h(&h, z, c(0.0, 1.0)).unwrap() - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn bump_transforms_are_consistent() {
        let b = Bump {
            center: c(0.1, 0.0),
            radius: 1.5,
        };
        let e = 1e-5;
        for z in [c(0.4, 0.3), c(-0.9, 0.5), c(0.1, 1.2), c(2.0, 0.5)] {
            let dx = (b.cauchy(z + e) - b.cauchy(z - e)) / (2.0 * e);
            let dy = (b.cauchy(z + c(0.0, e)) - b.cauchy(z - c(0.0, e))) / (2.0 * e);
            let dzb = 0.5 * (dx + C64::i() * dy);
            let dz = 0.5 * (dx - C64::i() * dy);
            assert!((dzb - b.g(z)).norm() < 1e-8, "{z}");
            assert!((dz - b.beurling(z)).norm() < 1e-8, "{z}");
        }
    }

    #[test]
    fn plateau_ratio_and_inverse() {
        let curve = JordanCurve::unit_circle(128).unwrap();
        let grid = Grid::for_curve(&curve, 128).unwrap();
        let ext = extend_mu(|_| c(0.3, 0.0), &curve, grid, None).unwrap();
        let h = solve_beltrami(&ext, BeltramiOptions::default()).unwrap();
        assert!(h.residual() < 1e-8);
        assert!(h.min_jacobian() > 0.0);
        assert!(h.max_distortion() <= k_of(c(0.3, 0.0)) + 0.05);
        for z in [c(0.0, 0.0), c(0.5, 0.2), c(-0.3, -0.6)] {
            let v = h.eval(z).unwrap();
            assert!((v.hzb / v.hz - 0.3).norm() < 1e-3);
            let e = directional_derivative_h(&h, z, c(1.0, 0.0)).unwrap();
            assert!((e / v.hz - 1.3).norm() < 1e-3);
            let back = h.inverse(v.h).unwrap();
            assert!((back - z).norm() < 1e-6);
        }
    }

    #[test]
    fn derivatives_match_differences_of_h() {
        let curve = JordanCurve::ellipse(1.0, 0.8, 128).unwrap();
        let grid = Grid::for_curve(&curve, 128).unwrap();
        let mu = |z: C64| 0.4 * C64::from_polar(0.5 + 0.5 * (2.0 * z.re).sin() * z.im.cos(), z.re - 2.0 * z.im);
        let ext = extend_mu(mu, &curve, grid, None).unwrap();
        let h = solve_beltrami(&ext, BeltramiOptions::default()).unwrap();
        assert!(h.residual() < 1e-6);
        let hs = h.h_samples();
        let hz = h.hz_samples();
        let n = grid.n;
        let d = grid.step();
        let mut worst: f64 = 0.0;
        // stay clear of the curve, where the extension has a kink
        for j in (3 * n / 8..5 * n / 8).step_by(3) {
            for i in (3 * n / 8..5 * n / 8).step_by(3) {
                let at = |a: isize, b: isize| hs[(j as isize + b) as usize * n + (i as isize + a) as usize];
                let dx = (-at(2, 0) + 8.0 * at(1, 0) - 8.0 * at(-1, 0) + at(-2, 0)) / (12.0 * d);
                let dy = (-at(0, 2) + 8.0 * at(0, 1) - 8.0 * at(0, -1) + at(0, -2)) / (12.0 * d);
                let k = j * n + i;
                worst = worst.max((0.5 * (dx - C64::i() * dy) - hz[k]).norm());
                worst = worst.max((0.5 * (dx + C64::i() * dy) - h.hzb_samples()[k]).norm());
            }
        }
        assert!(worst < 1e-3, "{worst}");
    }
}
