//! Riemann maps of star-like smooth Jordan domains onto the unit disk,
//! transport of boundary data through the boundary correspondence, and the
//! Jordan-domain directional-derivative and Neumann solvers.
//!
//! The map is stored through its inverse `q = ω⁻¹` as a Taylor series on the
//! disk. `ω(z)` is evaluated by Newton iteration on `q(w) = z`, continued
//! along the segment from the center, which stays inside a star-like domain.

use crate::error::{Error, Result};
use crate::fft;
use crate::geometry::{BoundaryData, DirectionField, JordanCurve};
use crate::harmonic::{
    self, normal_cone_paths, BoundarySample, BoundarySolution, HarmonicSolution, LimitOptions, NeumannQuantities, Potential,
};
use crate::interp::Pchip;
use crate::series::{derivative_coeffs, horner, AnalyticRep};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::PI;

const OVERSAMPLE: usize = 16;
const CONTINUATION_STEPS: usize = 8;
/// Boundary modulus error above which a map is refused by the solvers.
pub const MAP_QUALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct MapOptions {
    /// Star center; the area centroid when `None`.
    pub center: Option<C64>,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            center: None,
            tol: 1e-10,
            max_iters: 500,
        }
    }
}

/// Conformal `ω: D → 𝔻` with `ω(center) = 0` and `(ω⁻¹)′(0) > 0`.
#[derive(Debug, Clone)]
pub struct ConformalMap {
    curve: JordanCurve,
    center: C64,
    /// Taylor coefficients of `ω⁻¹`.
    inv: Vec<C64>,
    dinv: Vec<C64>,
    /// Curve parameter of `ω⁻¹(e^{iφ_j})`, unwrapped and increasing.
    t_of_phi: Vec<f64>,
    /// `arg ω(z(t_j))`, unwrapped and increasing.
    psi: Vec<f64>,
    iterations: usize,
    closed_form: bool,
    boundary_error: f64,
    analyticity_defect: f64,
}

/// Polar tables of the curve about `c`, on the oversampled parameter grid.
struct PolarTable {
    log_rho: Pchip,
    t_of_alpha: Pchip,
}

fn polar_table(curve: &JordanCurve, c: C64) -> Result<PolarTable> {
    if !curve.contains(c) {
        return Err(Error::UnsupportedDomain(format!("center {c} lies outside the curve")));
    }
    let fine = fft::upsample(curve.points(), OVERSAMPLE);
    let m = fine.len();
    let mut alpha = Vec::with_capacity(m);
    let mut log_rho = Vec::with_capacity(m);
    let mut a = (fine[0] - c).arg();
    for j in 0..m {
        let d = fine[j] - c;
        if j > 0 {
            let step = crate::geometry::wrap(d.arg() - (fine[j - 1] - c).arg());
            if step <= 0.0 {
                return Err(Error::UnsupportedDomain(format!(
                    "curve is not star-like about {c}: polar angle decreases near t = {:.4}",
                    2.0 * PI * j as f64 / m as f64
                )));
            }
            a += step;
        }
        alpha.push(a);
        log_rho.push(d.norm().ln());
    }
    let total = a + crate::geometry::wrap((fine[0] - c).arg() - (fine[m - 1] - c).arg()) - alpha[0];
    if (total - 2.0 * PI).abs() > 1e-6 {
        return Err(Error::UnsupportedDomain(format!(
            "polar angle about {c} turns by {total:.6}, not 2π"
        )));
    }
    let t = fft::nodes(m);
    Ok(PolarTable {
        log_rho: Pchip::periodic(&alpha, &log_rho, 2.0 * PI, 0.0),
        t_of_alpha: Pchip::periodic(&alpha, &t, 2.0 * PI, 2.0 * PI),
    })
}

/// Value of the trigonometric interpolant with DFT coefficients `zhat` at `t`.
fn trig_eval(zhat: &[C64], t: f64) -> C64 {
    let n = zhat.len();
    let mut v = C64::new(0.0, 0.0);
    for (k, a) in zhat.iter().enumerate() {
        if n.is_multiple_of(2) && k == n / 2 {
            v += a * (k as f64 * t).cos();
        } else {
            v += a * C64::from_polar(1.0, fft::freq(k, n) as f64 * t);
        }
    }
    v
}

/// Polynomial and derivative in one pass.
fn horner2(c: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for a in c.iter().rev() {
        d = d * z + p;
        p = p * z + a;
    }
    (p, d)
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0]) && v[v.len() - 1] < v[0] + 2.0 * PI
}

/// Theodorsen iteration `θ(φ) = φ + K[log ρ(θ(φ))]` for a star-like curve.
pub fn riemann_map(curve: &JordanCurve, opts: MapOptions) -> Result<ConformalMap> {
    let c = opts.center.unwrap_or_else(|| curve.centroid());
    let table = polar_table(curve, c)?;
    let n = curve.len();
    let phi = fft::nodes(n);
    let mut theta = phi.clone();
    let mut iterations = 0;
    loop {
        if iterations >= opts.max_iters {
            return Err(Error::Convergence {
                iterations,
                detail: "Theodorsen iteration for the boundary correspondence".into(),
            });
        }
        iterations += 1;
        let l: Vec<f64> = theta.iter().map(|&t| table.log_rho.eval(t)).collect();
        let k = fft::conjugate(&l);
        let next: Vec<f64> = phi.iter().zip(&k).map(|(p, k)| p + k).collect();
        let diff = next.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        theta = next;
        if !diff.is_finite() {
            return Err(Error::Convergence {
                iterations,
                detail: "Theodorsen iteration diverged".into(),
            });
        }
        if diff < opts.tol {
            break;
        }
    }
    let t_of_phi = theta.iter().map(|&a| table.t_of_alpha.eval(a)).collect();
    ConformalMap::assemble(curve, c, t_of_phi, None, iterations)
}

impl ConformalMap {
    /// Map whose inverse is the polynomial `Σ a_k w^k`, with `a_0` the center.
    ///
    /// The curve supplies the boundary parameterization used for transport.
    pub fn from_inverse_polynomial(curve: &JordanCurve, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() < 2 || !(coeffs[1].norm() > 0.0) {
            return Err(Error::Config("inverse map needs a nonzero linear coefficient".into()));
        }
        let c = coeffs[0];
        let table = polar_table(curve, c)?;
        let n = curve.len();
        let mut t_of_phi = Vec::with_capacity(n);
        let mut a = 0.0;
        for (j, &p) in fft::nodes(n).iter().enumerate() {
            let b = horner(&coeffs, C64::from_polar(1.0, p)) - c;
            a = if j == 0 { b.arg() } else { a + crate::geometry::wrap(b.arg() - a) };
            t_of_phi.push(table.t_of_alpha.eval(a));
        }
        Self::assemble(curve, c, t_of_phi, Some(coeffs), 0)
    }

    fn assemble(curve: &JordanCurve, c: C64, t_of_phi: Vec<f64>, closed: Option<Vec<C64>>, iterations: usize) -> Result<Self> {
        let n = curve.len();
        if !strictly_increasing(&t_of_phi) {
            return Err(Error::Consistency("boundary correspondence is not monotone".into()));
        }
        let zhat = fft::forward(curve.points());
        let (inv, defect) = match &closed {
            Some(p) => (p.clone(), 0.0),
            None => {
                let b: Vec<C64> = t_of_phi.iter().map(|&t| trig_eval(&zhat, t)).collect();
                let a = fft::forward(&b);
                let defect = a[n / 2 + 1..].iter().map(|v| v.norm()).fold(0.0, f64::max);
                (a[..n / 2].to_vec(), defect)
            }
        };
        let phi = fft::nodes(n);
        let back = Pchip::periodic(&t_of_phi, &phi, 2.0 * PI, 2.0 * PI);
        let psi: Vec<f64> = curve.params().iter().map(|&t| back.eval(t)).collect();
        let dinv = derivative_coeffs(&inv);
        let mut map = ConformalMap {
            curve: curve.clone(),
            center: c,
            inv,
            dinv,
            t_of_phi,
            psi,
            iterations,
            closed_form: closed.is_some(),
            boundary_error: 0.0,
            analyticity_defect: defect,
        };
        map.boundary_error = map.measure_boundary_error();
        Ok(map)
    }

    fn measure_boundary_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (z, &p) in self.curve.points().iter().zip(&self.psi) {
            let mut w = C64::from_polar(1.0, p);
            let mut ok = false;
            for _ in 0..30 {
                let (q, dq) = horner2(&self.inv, w);
                let r = q - z;
                if r.norm() < 1e-15 * (1.0 + z.norm()) {
                    ok = true;
                    break;
                }
                w -= r / dq;
            }
            let r = horner(&self.inv, w) - z;
            if !ok && r.norm() > 1e-12 * (1.0 + z.norm()) {
                return f64::INFINITY;
            }
            worst = worst.max((w.norm() - 1.0).abs());
        }
        worst
    }

    pub fn curve(&self) -> &JordanCurve {
        &self.curve
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn len(&self) -> usize {
        self.t_of_phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_of_phi.is_empty()
    }

    /// Taylor coefficients of `ω⁻¹`.
    pub fn inverse_coeffs(&self) -> &[C64] {
        &self.inv
    }

    /// Taylor coefficients of `(ω⁻¹)′`.
    pub fn inverse_derivative_coeffs(&self) -> &[C64] {
        &self.dinv
    }

    /// Curve parameter of `ω⁻¹(e^{iφ_j})`.
    pub fn inverse_correspondence(&self) -> &[f64] {
        &self.t_of_phi
    }

    /// `arg ω(z(t_j))`.
    pub fn correspondence(&self) -> &[f64] {
        &self.psi
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn is_closed_form(&self) -> bool {
        self.closed_form
    }

    /// `max_j ||ω(z_j)| − 1|` over the curve samples.
    pub fn boundary_error(&self) -> f64 {
        self.boundary_error
    }

    /// Largest negative-frequency coefficient of the boundary values of `ω⁻¹`.
    pub fn analyticity_defect(&self) -> f64 {
        self.analyticity_defect
    }

    pub fn inverse(&self, w: C64) -> Result<C64> {
        if w.norm() > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("|w| = {} exceeds 1", w.norm())));
        }
        Ok(horner(&self.inv, w))
    }

    pub fn inverse_derivative(&self, w: C64) -> Result<C64> {
        if w.norm() > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("|w| = {} exceeds 1", w.norm())));
        }
        Ok(horner(&self.dinv, w))
    }

    /// `ω(z)` for `z` inside the curve.
    pub fn forward(&self, z: C64) -> Result<C64> {
        if !self.curve.contains(z) {
            return Err(Error::Domain(format!("{z} lies outside the domain")));
        }
        let scale = 1.0 + (z - self.center).norm();
        let mut w = C64::new(0.0, 0.0);
        for s in 1..=CONTINUATION_STEPS {
            let target = self.center + (z - self.center) * (s as f64 / CONTINUATION_STEPS as f64);
            let last = s == CONTINUATION_STEPS;
            let mut converged = false;
            for _ in 0..60 {
                let (q, dq) = horner2(&self.inv, w);
                let r = q - target;
                if r.norm() <= 1e-15 * scale {
                    converged = true;
                    break;
                }
                let mut next = w - r / dq;
                if next.norm() >= 1.0 {
                    next = 0.5 * (w + next / next.norm());
                }
                let step = (next - w).norm();
                w = next;
                if step <= 1e-16 {
                    converged = true;
                    break;
                }
            }
            if last && !converged {
                let r = (horner(&self.inv, w) - target).norm();
                if r > 1e-11 * scale {
                    return Err(Error::MapQuality(format!(
                        "Newton inversion of ω⁻¹ stalled at {z} (residual {r:.2e})"
                    )));
                }
            }
        }
        Ok(w)
    }

    /// `ω′(z) = 1/(ω⁻¹)′(ω(z))`.
    pub fn forward_derivative(&self, z: C64) -> Result<C64> {
        let w = self.forward(z)?;
        Ok(1.0 / horner(&self.dinv, w))
    }

    /// Boundary point of the curve matching `e^{iφ}`.
    pub fn boundary_point(&self, w: C64) -> C64 {
        horner(&self.inv, w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MapJson {
            theta: self.curve.params().to_vec(),
            psi: self.psi.clone(),
            center: [self.center.re, self.center.im],
        })?)
    }

    /// Rebuilds a map from its correspondence table and the curve it was built on.
    pub fn from_json(s: &str, curve: &JordanCurve) -> Result<Self> {
        let j: MapJson = serde_json::from_str(s)?;
        if j.theta.len() != curve.len() || j.psi.len() != curve.len() {
            return Err(Error::Config("correspondence table does not match the curve".into()));
        }
        if !strictly_increasing(&j.psi) {
            return Err(Error::Consistency("boundary correspondence is not monotone".into()));
        }
        let forward = Pchip::periodic(&j.psi, &j.theta, 2.0 * PI, 2.0 * PI);
        let t_of_phi: Vec<f64> = fft::nodes(curve.len()).iter().map(|&p| forward.eval(p)).collect();
        Self::assemble(curve, C64::new(j.center[0], j.center[1]), t_of_phi, None, 0)
    }
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    theta: Vec<f64>,
    psi: Vec<f64>,
    center: [f64; 2],
}

/// Largest upper-quarter Fourier coefficient, relative to the sup norm, for
/// which periodic samples count as resolved.
const RESOLVED_TOL: f64 = 1e-8;

/// Periodic resampler on the uniform parameter grid: band-limited when the
/// samples are resolved, monotone cubic otherwise (jumps, kinks, masks).
enum Resampler {
    Spectral(Vec<C64>),
    Cubic(Pchip),
}

impl Resampler {
    fn new(v: &[f64]) -> Self {
        let n = v.len();
        let c = fft::forward_real(v);
        let scale = v.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        let top = (0..n)
            .filter(|&k| fft::freq(k, n).unsigned_abs() as usize >= n / 4)
            .map(|k| c[k].norm())
            .fold(0.0, f64::max);
        if top <= RESOLVED_TOL * scale {
            Resampler::Spectral(c)
        } else {
            Resampler::Cubic(Pchip::periodic_uniform(v, 0.0))
        }
    }

    fn eval(&self, t: f64) -> f64 {
        match self {
            Resampler::Spectral(c) => trig_eval(c, t).re,
            Resampler::Cubic(p) => p.eval(t),
        }
    }
}

/// `(N, Φ) = (ν∘Ω⁻¹, φ∘Ω⁻¹)` sampled at `φ_j = 2πj/N` on the circle; the
/// argument of `ν` is resampled after removing its winding.
pub fn transport_data(map: &ConformalMap, nu: &DirectionField, phi: &BoundaryData) -> Result<(DirectionField, BoundaryData)> {
    let n = map.len();
    if nu.len() != n || phi.len() != n {
        return Err(Error::Config(format!("data has {} / {} samples, the map {n}", nu.len(), phi.len())));
    }
    if !strictly_increasing(&map.t_of_phi) {
        return Err(Error::Consistency("boundary correspondence is not monotone".into()));
    }
    let vals = Resampler::new(&phi.filled());
    let arg = Resampler::new(nu.reduced_arg());
    let m = nu.winding() as f64;
    let big_phi: Vec<f64> = map.t_of_phi.par_iter().map(|&t| vals.eval(t)).collect();
    let big_nu: Vec<C64> = map
        .t_of_phi
        .par_iter()
        .map(|&t| C64::from_polar(1.0, arg.eval(t) + m * t))
        .collect();
    let mask: BTreeSet<usize> = phi
        .mask()
        .iter()
        .map(|&i| {
            let k = (map.psi[i] * n as f64 / (2.0 * PI)).round() as i64;
            k.rem_euclid(n as i64) as usize
        })
        .collect();
    Ok((DirectionField::new(big_nu)?, BoundaryData::new(big_phi, mask)?))
}

/// Harmonic `u` on a Jordan domain, `u = Re F`, `F′ = g∘ω` with `g` the
/// disk solution for the transported data.
#[derive(Debug, Clone)]
pub struct JordanSolution {
    map: ConformalMap,
    disk: HarmonicSolution,
    big_f: AnalyticRep,
    nu: DirectionField,
    phi: BoundaryData,
}

impl JordanSolution {
    pub fn map(&self) -> &ConformalMap {
        &self.map
    }

    /// Solution of the transported problem on the unit disk.
    pub fn disk_solution(&self) -> &HarmonicSolution {
        &self.disk
    }

    /// `∫ g(w)·(ω⁻¹)′(w) dw`, so that `u(z) = Re` of it at `w = ω(z)`.
    pub fn pulled_primitive(&self) -> &AnalyticRep {
        &self.big_f
    }

    pub fn direction(&self) -> &DirectionField {
        &self.nu
    }

    pub fn data(&self) -> &BoundaryData {
        &self.phi
    }
}

impl Potential for JordanSolution {
    fn value(&self, z: C64) -> Result<f64> {
        let w = self.map.forward(z)?;
        Ok(self.big_f.eval(w)?.re)
    }

    fn gradient(&self, z: C64) -> Result<C64> {
        let w = self.map.forward(z)?;
        Ok(self.disk.derivative().eval(w)?.conj())
    }
}

impl BoundarySolution for JordanSolution {
    fn sample_count(&self) -> usize {
        self.phi.len()
    }

    fn boundary_sample(&self, j: usize) -> BoundarySample {
        let curve = self.map.curve();
        BoundarySample {
            zeta: curve.points()[j],
            normal: curve.normals()[j],
            nu: self.nu.values()[j],
            phi: self.phi.values()[j],
            masked: self.phi.is_masked(j),
        }
    }

    fn approach_paths(&self, j: usize, kappa: f64, levels: usize) -> Result<Vec<Vec<C64>>> {
        let b = self.boundary_sample(j);
        Ok(normal_cone_paths(b.zeta, b.normal, kappa, levels))
    }

    fn exceptional_points(&self) -> Vec<C64> {
        self.disk
            .exceptional_points()
            .into_iter()
            .map(|w| self.map.boundary_point(w))
            .collect()
    }
}

/// Directional-derivative problem on the domain of an existing map.
pub fn solve_directional_with_map(map: &ConformalMap, nu: &DirectionField, phi: &BoundaryData, zeta0: C64) -> Result<JordanSolution> {
    if map.boundary_error() > MAP_QUALITY_TOL {
        return Err(Error::MapQuality(format!(
            "|ω| deviates from 1 by {:.3e} on the boundary",
            map.boundary_error()
        )));
    }
    let (big_nu, big_phi) = transport_data(map, nu, phi)?;
    let disk = harmonic::solve_directional_disk(&big_nu, &big_phi, zeta0)?;
    let big_f = disk.derivative().mul_series(map.inverse_derivative_coeffs())?.integrate()?;
    Ok(JordanSolution {
        map: map.clone(),
        disk,
        big_f,
        nu: nu.clone(),
        phi: phi.clone(),
    })
}

/// `ζ₀` is the corrector point on the unit circle, i.e. on the disk side of the map.
pub fn solve_directional_jordan(curve: &JordanCurve, nu: &DirectionField, phi: &BoundaryData, zeta0: C64) -> Result<JordanSolution> {
    let map = riemann_map(curve, MapOptions::default())?;
    solve_directional_with_map(&map, nu, phi, zeta0)
}

/// Neumann problem with the three boundary quantities at `probes` evenly
/// spaced samples away from masked and exceptional points.
pub fn solve_neumann_jordan(
    curve: &JordanCurve,
    phi: &BoundaryData,
    zeta0: C64,
    probes: usize,
) -> Result<(JordanSolution, Vec<NeumannQuantities>)> {
    let map = riemann_map(curve, MapOptions::default())?;
    solve_neumann_with_map(&map, phi, zeta0, probes)
}

pub fn solve_neumann_with_map(
    map: &ConformalMap,
    phi: &BoundaryData,
    zeta0: C64,
    probes: usize,
) -> Result<(JordanSolution, Vec<NeumannQuantities>)> {
    let nu = DirectionField::new(map.curve().normals().to_vec())?;
    let sol = solve_directional_with_map(map, &nu, phi, zeta0)?;
    let report = neumann_probes(&sol, probes, LimitOptions::default(), 0.1)?;
    Ok((sol, report))
}

/// Boundary quantities at evenly spaced usable samples.
pub fn neumann_probes<S: BoundarySolution>(sol: &S, probes: usize, opts: LimitOptions, exclusion: f64) -> Result<Vec<NeumannQuantities>> {
    let n = sol.sample_count();
    let bad = sol.exceptional_points();
    let stride = (n / probes.max(1)).max(1);
    (0..n)
        .step_by(stride)
        .filter(|&j| {
            let b = sol.boundary_sample(j);
            !b.masked && bad.iter().all(|p| (b.zeta - p).norm() > exclusion)
        })
        .map(|j| harmonic::neumann_quantities(sol, j, opts))
        .collect()
}

/// Cartesian nodes inside the curve, at least `margin` from every boundary sample.
pub fn interior_grid(curve: &JordanCurve, margin: f64, step: f64) -> Vec<C64> {
    let (mut lo, mut hi) = (C64::new(f64::MAX, f64::MAX), C64::new(f64::MIN, f64::MIN));
    for p in curve.points() {
        lo = C64::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = C64::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    let nx = ((hi.re - lo.re) / step).ceil() as i64;
    let ny = ((hi.im - lo.im) / step).ceil() as i64;
    let mut v = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            let z = lo + C64::new(i as f64 * step, j as f64 * step);
            if curve.contains(z) && curve.points().iter().all(|p| (p - z).norm() >= margin) {
                v.push(z);
            }
        }
    }
    v
}
