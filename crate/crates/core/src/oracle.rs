//! Reference solvers for cross-validation: the Fourier-series Neumann
//! solution on the disk, a cut-cell finite-volume solver for `div(A∇u) = 0`
//! with Neumann data, and finite-difference Laplacian statistics.
//!
//! Nothing here is used by the production solvers.

use crate::beltrami::{Mat2, MatrixFieldA};
use crate::error::{Error, Result};
use crate::geometry::{fmt, BoundaryData, JordanCurve};
use crate::harmonic::Potential;
use crate::interp::Pchip;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::VecDeque;
use std::f64::consts::PI;
use std::io::Write;

/// `u = −Re Σ_{k≥1} 2c_k z^k / k` for `φ = Σ c_k e^{ikθ}` with zero mean.
#[derive(Debug, Clone)]
pub struct FourierNeumann {
    /// `c_k`, `k = 1..K`.
    coeffs: Vec<C64>,
}

/// Classical Neumann solution with `∂u/∂n = φ` for the interior normal.
///
/// Fourier coefficients are plain `O(N²)` sums.
pub fn fourier_neumann_disk(phi: &BoundaryData) -> Result<FourierNeumann> {
    let n = phi.len();
    let v = phi.values();
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mean = v.iter().sum::<f64>() / n as f64;
    if mean.abs() > 1e-10 * scale {
        return Err(Error::Compatibility(format!(
            "∫φ ≠ 0 (mean {mean:.3e}); the classical Neumann problem has no solution"
        )));
    }
    let coeffs = (1..n / 2)
        .map(|k| {
            let mut s = C64::new(0.0, 0.0);
            for (j, x) in v.iter().enumerate() {
                s += x * C64::from_polar(1.0, -2.0 * PI * ((j * k) % n) as f64 / n as f64);
            }
            s / n as f64
        })
        .collect();
    Ok(FourierNeumann { coeffs })
}

impl FourierNeumann {
    fn check(z: C64) -> Result<()> {
        if z.norm() >= 1.0 {
            return Err(Error::Domain(format!("|z| = {} is not inside the disk", z.norm())));
        }
        Ok(())
    }
}

impl Potential for FourierNeumann {
    fn value(&self, z: C64) -> Result<f64> {
        Self::check(z)?;
        let mut s = C64::new(0.0, 0.0);
        let mut p = z;
        for (i, c) in self.coeffs.iter().enumerate() {
            s += 2.0 * c * p / (i + 1) as f64;
            p *= z;
        }
        Ok(-s.re)
    }

    fn gradient(&self, z: C64) -> Result<C64> {
        Self::check(z)?;
        let mut s = C64::new(0.0, 0.0);
        let mut p = C64::new(1.0, 0.0);
        for c in &self.coeffs {
            s += 2.0 * c * p;
            p *= z;
        }
        Ok(-s.conj())
    }
}

/// Five-point Laplacian statistics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LaplacianReport {
    pub max: f64,
    pub mean: f64,
    pub points: usize,
    pub step: f64,
}

pub fn laplacian_residual(u: &dyn Potential, points: &[C64], step: f64) -> Result<LaplacianReport> {
    let r = points
        .par_iter()
        .map(|&z| {
            let e = C64::new(step, 0.0);
            let f = C64::new(0.0, step);
            let l = u.value(z + e)? + u.value(z - e)? + u.value(z + f)? + u.value(z - f)? - 4.0 * u.value(z)?;
            Ok((l / (step * step)).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let max = r.iter().cloned().fold(0.0, f64::max);
    let mean = if r.is_empty() {
        0.0
    } else {
        r.iter().sum::<f64>() / r.len() as f64
    };
    Ok(LaplacianReport {
        max,
        mean,
        points: r.len(),
        step,
    })
}

/// Cut-cell grid over the bounding box of a curve.
///
/// Cells are `h × h` squares; each carries the fraction of its area inside the
/// domain, and each interior face the fraction of its length inside.
#[derive(Debug, Clone)]
pub struct FDGrid {
    lo: C64,
    h: f64,
    nx: usize,
    ny: usize,
    volume: Vec<f64>,
    /// Aperture of the face between cell `(i, j)` and `(i+1, j)`.
    ax: Vec<f64>,
    /// Aperture of the face between cell `(i, j)` and `(i, j+1)`.
    ay: Vec<f64>,
    active: Vec<bool>,
    /// Boundary arc length carried by each cell with its curve parameter midpoints.
    boundary: Vec<Vec<(f64, f64)>>,
}

const MIN_VOLUME: f64 = 0.01;

impl FDGrid {
    /// `n` cells across the larger side of the bounding box.
    pub fn new(curve: &JordanCurve, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::Config(format!("grid needs at least 8 cells per side, got {n}")));
        }
        let (mut lo, mut hi) = (C64::new(f64::MAX, f64::MAX), C64::new(f64::MIN, f64::MIN));
        for p in curve.points() {
            lo = C64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = C64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let span = (hi.re - lo.re).max(hi.im - lo.im);
        let h = span * 1.04 / n as f64;
        let nx = ((hi.re - lo.re) * 1.04 / h).ceil() as usize;
        let ny = ((hi.im - lo.im) * 1.04 / h).ceil() as usize;
        let mid = 0.5 * (lo + hi);
        let lo = mid - C64::new(0.5 * nx as f64 * h, 0.5 * ny as f64 * h);
        let node = |i: usize, j: usize| lo + C64::new(i as f64 * h, j as f64 * h);

        let corner: Vec<bool> = (0..(nx + 1) * (ny + 1))
            .into_par_iter()
            .map(|k| curve.contains(node(k % (nx + 1), k / (nx + 1))))
            .collect();
        let inside = |i: usize, j: usize| corner[j * (nx + 1) + i];
        let fraction = |a: C64, b: C64, ia: bool, ib: bool| -> f64 {
            match (ia, ib) {
                (true, true) => 1.0,
                (false, false) => 0.0,
                _ => {
                    // bisect for the crossing
                    let (mut s0, mut s1) = (0.0, 1.0);
                    for _ in 0..40 {
                        let m = 0.5 * (s0 + s1);
                        if curve.contains(a + m * (b - a)) == ia {
                            s0 = m;
                        } else {
                            s1 = m;
                        }
                    }
                    let s = 0.5 * (s0 + s1);
                    if ia {
                        s
                    } else {
                        1.0 - s
                    }
                }
            }
        };
        let volume: Vec<f64> = (0..nx * ny)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % nx, k / nx);
                let c = [inside(i, j), inside(i + 1, j), inside(i, j + 1), inside(i + 1, j + 1)];
                if c.iter().all(|&v| v) {
                    1.0
                } else if c.iter().all(|&v| !v) {
                    0.0
                } else {
                    let m = 16;
                    let mut count = 0;
                    for a in 0..m {
                        for b in 0..m {
                            let p = node(i, j) + C64::new((a as f64 + 0.5) * h / m as f64, (b as f64 + 0.5) * h / m as f64);
                            if curve.contains(p) {
                                count += 1;
                            }
                        }
                    }
                    count as f64 / (m * m) as f64
                }
            })
            .collect();
        let mut active: Vec<bool> = volume.iter().map(|&v| v >= MIN_VOLUME).collect();
        // face between (i,j) and (i+1,j) is the segment x = x_{i+1}
        let ax: Vec<f64> = (0..nx * ny)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % nx, k / nx);
                if i + 1 >= nx {
                    return 0.0;
                }
                fraction(node(i + 1, j), node(i + 1, j + 1), inside(i + 1, j), inside(i + 1, j + 1))
            })
            .collect();
        let ay: Vec<f64> = (0..nx * ny)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % nx, k / nx);
                if j + 1 >= ny {
                    return 0.0;
                }
                fraction(node(i, j + 1), node(i + 1, j + 1), inside(i, j + 1), inside(i + 1, j + 1))
            })
            .collect();

        // keep the largest connected set of active cells
        let mut comp = vec![usize::MAX; nx * ny];
        let mut sizes = Vec::new();
        for start in 0..nx * ny {
            if !active[start] || comp[start] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            let mut size = 0;
            let mut queue = VecDeque::from([start]);
            comp[start] = id;
            while let Some(k) = queue.pop_front() {
                size += 1;
                let (i, j) = (k % nx, k / nx);
                let mut nb = Vec::with_capacity(4);
                if i + 1 < nx && ax[k] > 0.0 {
                    nb.push(k + 1);
                }
                if i > 0 && ax[k - 1] > 0.0 {
                    nb.push(k - 1);
                }
                if j + 1 < ny && ay[k] > 0.0 {
                    nb.push(k + nx);
                }
                if j > 0 && ay[k - nx] > 0.0 {
                    nb.push(k - nx);
                }
                for q in nb {
                    if active[q] && comp[q] == usize::MAX {
                        comp[q] = id;
                        queue.push_back(q);
                    }
                }
            }
            sizes.push(size);
        }
        let main = (0..sizes.len())
            .max_by_key(|&i| sizes[i])
            .ok_or_else(|| Error::Geometry("no grid cell lies inside the curve".into()))?;
        for k in 0..nx * ny {
            active[k] = active[k] && comp[k] == main;
        }

        let mut grid = FDGrid {
            lo,
            h,
            nx,
            ny,
            volume,
            ax,
            ay,
            active,
            boundary: vec![Vec::new(); nx * ny],
        };
        grid.assign_boundary(curve);
        Ok(grid)
    }

    /// Distributes short arcs of the curve to the cells containing them,
    /// or to the nearest active cell.
    fn assign_boundary(&mut self, curve: &JordanCurve) {
        let factor = 8;
        let fine = crate::fft::upsample(curve.points(), factor);
        let m = fine.len();
        for k in 0..m {
            let (a, b) = (fine[k], fine[(k + 1) % m]);
            let mid = 0.5 * (a + b);
            let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
            let cell = self.nearest_active(mid);
            self.boundary[cell].push((t, (b - a).norm()));
        }
    }

    fn cell_of(&self, z: C64) -> (i64, i64) {
        let d = (z - self.lo) / self.h;
        (d.re.floor() as i64, d.im.floor() as i64)
    }

    fn nearest_active(&self, z: C64) -> usize {
        let (ci, cj) = self.cell_of(z);
        for r in 0..(self.nx.max(self.ny) as i64) {
            let mut best = (f64::INFINITY, usize::MAX);
            for dj in -r..=r {
                for di in -r..=r {
                    if di.abs() != r && dj.abs() != r {
                        continue;
                    }
                    let (i, j) = (ci + di, cj + dj);
                    if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                        continue;
                    }
                    let k = j as usize * self.nx + i as usize;
                    if self.active[k] {
                        let d = (self.center(k) - z).norm();
                        if d < best.0 {
                            best = (d, k);
                        }
                    }
                }
            }
            if best.1 != usize::MAX {
                return best.1;
            }
        }
        0
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn center(&self, k: usize) -> C64 {
        self.lo + C64::new(((k % self.nx) as f64 + 0.5) * self.h, ((k / self.nx) as f64 + 0.5) * self.h)
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.active[k]
    }

    pub fn volume_fraction(&self, k: usize) -> f64 {
        self.volume[k]
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// Cell-centered solution of the finite-volume scheme.
#[derive(Debug, Clone)]
pub struct FDSolution {
    grid: FDGrid,
    u: Vec<f64>,
    pub iterations: usize,
    /// `‖Lu − b‖ / ‖b‖` of the projected system.
    pub residual: f64,
    /// `|Σ b|` removed to make the data compatible.
    pub projection: f64,
}

impl FDSolution {
    pub fn grid(&self) -> &FDGrid {
        &self.grid
    }

    /// `(cell center, u)` for every active cell.
    pub fn samples(&self) -> Vec<(C64, f64)> {
        (0..self.u.len())
            .filter(|&k| self.grid.active[k])
            .map(|k| (self.grid.center(k), self.u[k]))
            .collect()
    }

    pub fn value_at_cell(&self, k: usize) -> Option<f64> {
        self.grid.active[k].then(|| self.u[k])
    }

    /// CSV with columns `x, y, u, ux, uy`; gradients by central differences,
    /// empty where a neighbour is inactive.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let g = &self.grid;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "y", "u", "ux", "uy"])?;
        for k in 0..self.u.len() {
            if !g.active[k] {
                continue;
            }
            let (i, j) = (k % g.nx, k / g.nx);
            let ux = if i > 0 && i + 1 < g.nx && g.active[k - 1] && g.active[k + 1] {
                fmt((self.u[k + 1] - self.u[k - 1]) / (2.0 * g.h))
            } else {
                Default::default()
            };
            let uy = if j > 0 && j + 1 < g.ny && g.active[k - g.nx] && g.active[k + g.nx] {
                fmt((self.u[k + g.nx] - self.u[k - g.nx]) / (2.0 * g.h))
            } else {
                Default::default()
            };
            let z = g.center(k);
            wr.write_record([fmt(z.re), fmt(z.im), fmt(self.u[k]), ux, uy])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Diagonal coefficient source for the finite-volume scheme.
pub enum Coefficients<'a> {
    Constant(Mat2),
    Field(&'a MatrixFieldA),
}

impl Coefficients<'_> {
    fn at(&self, z: C64) -> Result<Mat2> {
        let m = match self {
            Coefficients::Constant(m) => *m,
            Coefficients::Field(a) => a.eval(z)?,
        };
        if m[0][1] != 0.0 || m[1][0] != 0.0 {
            return Err(Error::Config("the finite-volume oracle handles diagonal A only".into()));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FDOptions {
    pub tol: f64,
    /// Iteration cap as a multiple of the active cell count's square root.
    pub max_iters_factor: usize,
}

impl Default for FDOptions {
    fn default() -> Self {
        FDOptions {
            tol: 1e-10,
            max_iters_factor: 50,
        }
    }
}

/// Solves `div(A∇u) = 0` with conormal data `⟨A∇u, n⟩ = g` for the interior
/// normal `n`, `g` sampled at the curve parameters.
///
/// The data is projected to zero total flux; `u` is normalized to zero
/// volume-weighted mean.
pub fn fd_solve_neumann(a: Coefficients, grid: &FDGrid, g: &BoundaryData, opts: FDOptions) -> Result<FDSolution> {
    let (nx, ny) = (grid.nx, grid.ny);
    let n = nx * ny;
    let gi = Pchip::periodic_uniform(&g.filled(), 0.0);
    let mut b = vec![0.0; n];
    for k in 0..n {
        for &(t, len) in &grid.boundary[k] {
            // outward flux is −g
            b[k] -= gi.eval(t) * len;
        }
    }
    // face coefficients a·aperture
    let mut cx = vec![0.0; n];
    let mut cy = vec![0.0; n];
    for k in 0..n {
        let (i, j) = (k % nx, k / nx);
        if i + 1 < nx && grid.active[k] && grid.active[k + 1] && grid.ax[k] > 0.0 {
            let z = grid.lo + C64::new((i + 1) as f64 * grid.h, (j as f64 + 0.5) * grid.h);
            cx[k] = a.at(z)?[0][0] * grid.ax[k];
        }
        if j + 1 < ny && grid.active[k] && grid.active[k + nx] && grid.ay[k] > 0.0 {
            let z = grid.lo + C64::new((i as f64 + 0.5) * grid.h, (j + 1) as f64 * grid.h);
            cy[k] = a.at(z)?[1][1] * grid.ay[k];
        }
    }
    let mut diag = vec![0.0; n];
    for k in 0..n {
        if cx[k] > 0.0 {
            diag[k] += cx[k];
            diag[k + 1] += cx[k];
        }
        if cy[k] > 0.0 {
            diag[k] += cy[k];
            diag[k + nx] += cy[k];
        }
    }
    let act: Vec<usize> = (0..n).filter(|&k| grid.active[k]).collect();
    let total: f64 = act.iter().map(|&k| b[k]).sum();
    let vol: f64 = act.iter().map(|&k| grid.volume[k]).sum();
    for &k in &act {
        b[k] -= total * grid.volume[k] / vol;
    }
    for k in 0..n {
        if !grid.active[k] {
            b[k] = 0.0;
        }
    }

    let apply = |x: &[f64], y: &mut [f64]| {
        y.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..n {
            if cx[k] > 0.0 {
                let f = cx[k] * (x[k] - x[k + 1]);
                y[k] += f;
                y[k + 1] -= f;
            }
            if cy[k] > 0.0 {
                let f = cy[k] * (x[k] - x[k + nx]);
                y[k] += f;
                y[k + nx] -= f;
            }
        }
    };
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let precond = |r: &[f64], z: &mut [f64]| {
        for k in 0..n {
            z[k] = if diag[k] > 0.0 { r[k] / diag[k] } else { 0.0 };
        }
    };

    let bnorm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; n];
    let mut iterations = 0;
    let mut history = Vec::new();
    if bnorm > 0.0 {
        let mut r = b.clone();
        let mut z = vec![0.0; n];
        precond(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        let cap = opts.max_iters_factor * ((act.len() as f64).sqrt() as usize).max(1) * 4;
        loop {
            let rn = dot(&r, &r).sqrt() / bnorm;
            if iterations % 100 == 0 {
                history.push(format!("{iterations}:{rn:.2e}"));
            }
            if rn < opts.tol {
                break;
            }
            if iterations >= cap {
                return Err(Error::Convergence {
                    iterations,
                    detail: format!("finite-volume PCG residual history {}", history.join(" ")),
                });
            }
            iterations += 1;
            apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            precond(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
    }
    let mean: f64 = act.iter().map(|&k| x[k] * grid.volume[k]).sum::<f64>() / vol;
    let mut u = vec![f64::NAN; n];
    for &k in &act {
        u[k] = x[k] - mean;
    }
    let mut lu = vec![0.0; n];
    apply(&x, &mut lu);
    let res = lu.iter().zip(&b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(FDSolution {
        grid: grid.clone(),
        u,
        iterations,
        residual: if bnorm > 0.0 { res / bnorm } else { res },
        projection: total.abs(),
    })
}

/// Largest `|u_a − u_b − c|` over common points after the best constant shift
/// (midrange of the differences).
pub fn max_difference_after_shift(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    0.5 * (hi - lo)
}
