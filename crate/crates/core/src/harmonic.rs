//! Harmonic functions with prescribed directional derivative on the disk,
//! built from the Riemann–Hilbert solution `f = conj(∇u)` and its indefinite
//! integral, together with the boundary-limit estimators used to certify them.

use crate::disk_rh::{self, ResidualReport, SampleResidual};
use crate::error::{Error, Result};
use crate::geometry::{fmt, normal_field, BoundaryData, DirectionField, JordanCurve, StolzApproach};
use crate::series::AnalyticRep;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

/// A real function on a planar domain with its gradient `u_x + i·u_y`.
pub trait Potential: Sync {
    fn value(&self, z: C64) -> Result<f64>;
    fn gradient(&self, z: C64) -> Result<C64>;
}

/// Boundary sample of a solved problem.
#[derive(Debug, Clone, Copy)]
pub struct BoundarySample {
    pub zeta: C64,
    /// Unit interior normal.
    pub normal: C64,
    pub nu: C64,
    pub phi: f64,
    pub masked: bool,
}

/// A solution that knows its boundary problem, so it can be certified.
pub trait BoundarySolution: Potential {
    fn sample_count(&self) -> usize;
    fn boundary_sample(&self, j: usize) -> BoundarySample;
    /// Nontangential paths to sample `j`; each path lists points at depths
    /// proportional to `2^{−k}`, `k = 1..=levels`.
    fn approach_paths(&self, j: usize, kappa: f64, levels: usize) -> Result<Vec<Vec<C64>>>;
    /// Boundary points where the construction is allowed to fail.
    fn exceptional_points(&self) -> Vec<C64>;
}

/// Paths `ζ + 2^{−k}·n·(1 + i·o)` for lateral offsets `o ∈ {0, ±κ/2}`.
pub fn normal_cone_paths(zeta: C64, normal: C64, kappa: f64, levels: usize) -> Vec<Vec<C64>> {
    disk_rh::path_offsets(kappa)
        .iter()
        .map(|&o| {
            (1..=levels)
                .map(|k| zeta + 0.5f64.powi(k as i32) * normal * C64::new(1.0, o))
                .collect()
        })
        .collect()
}

/// Richardson-extrapolated limit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitEstimate {
    pub value: f64,
    /// Largest disagreement between successive extrapolants or between paths.
    pub spread: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct LimitOptions {
    pub kappa: f64,
    pub levels: usize,
    pub tol: f64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            kappa: 0.5,
            levels: 12,
            tol: 1e-6,
        }
    }
}

/// Last Richardson extrapolant of values at halving depths, and its change
/// from the previous one.
fn richardson_tail(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    let e1 = disk_rh::richardson(v);
    let e0 = disk_rh::richardson(&v[..n - 1]);
    (e1, (e1 - e0).abs())
}

fn finish(value: f64, spread: f64, tol: f64) -> LimitEstimate {
    let converged = value.is_finite() && spread <= tol * value.abs().max(1.0);
    LimitEstimate { value, spread, converged }
}

/// Limit of `g` along each path (last three points), the first path giving the value.
pub fn limit_along<G>(paths: &[Vec<C64>], tol: f64, g: G) -> Result<LimitEstimate>
where
    G: Fn(C64) -> Result<f64>,
{
    let mut value = None;
    let mut spread: f64 = 0.0;
    for path in paths {
        if path.len() < 4 {
            return Err(Error::Domain("approach path needs at least four points".into()));
        }
        let tail = &path[path.len() - 4..];
        let v = tail.iter().map(|&z| g(z)).collect::<Result<Vec<f64>>>()?;
        let (e, s) = richardson_tail(&v);
        spread = spread.max(s);
        match value {
            None => value = Some(e),
            Some(v0) => spread = spread.max((e - v0).abs()),
        }
    }
    let value = value.ok_or_else(|| Error::Domain("no approach paths".into()))?;
    Ok(finish(value, spread, tol))
}

/// `lim ⟨ν, ∇u(z)⟩` along the given paths.
pub fn derivative_limit(pot: &dyn Potential, nu: C64, paths: &[Vec<C64>], tol: f64) -> Result<LimitEstimate> {
    limit_along(paths, tol, |z| pot.gradient(z).map(|g| (nu * g.conj()).re))
}

/// `lim u(ζ + t·n)` as `t = 2^{−k} → 0`.
pub fn normal_limit(pot: &dyn Potential, zeta: C64, normal: C64, levels: usize, tol: f64) -> Result<LimitEstimate> {
    let path: Vec<C64> = (1..=levels).map(|k| zeta + 0.5f64.powi(k as i32) * normal).collect();
    limit_along(&[path], tol, |z| pot.value(z))
}

/// `lim_{t→0} (u(ζ + t n) − u(ζ))/t` from quotients at `t = 2^{−k}`, `k ∈ steps`.
pub fn difference_quotient(
    pot: &dyn Potential,
    zeta: C64,
    normal: C64,
    boundary_value: f64,
    steps: &[u32],
    tol: f64,
) -> Result<LimitEstimate> {
    if steps.len() < 4 {
        return Err(Error::Config("difference quotient needs at least four steps".into()));
    }
    let q = steps
        .iter()
        .map(|&k| {
            let t = 0.5f64.powi(k as i32);
            pot.value(zeta + t * normal).map(|u| (u - boundary_value) / t)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (e, s) = richardson_tail(&q);
    Ok(finish(e, s, tol))
}

/// Harmonic function on the unit disk with `conj(∇u) = f` and `u = Re F`.
#[derive(Debug, Clone)]
pub struct HarmonicSolution {
    f: AnalyticRep,
    big_f: AnalyticRep,
    nu: DirectionField,
    phi: BoundaryData,
    zeta0: C64,
}

/// Indefinite integral vanishing at the origin.
pub fn integrate_analytic(f: &AnalyticRep) -> Result<AnalyticRep> {
    f.integrate()
}

impl HarmonicSolution {
    /// Harmonic `u = Re ∫f` for an analytic `f` that need not come from a solve.
    pub fn from_derivative(f: AnalyticRep, nu: DirectionField, phi: BoundaryData, zeta0: C64) -> Result<Self> {
        let big_f = integrate_analytic(&f)?;
        Ok(HarmonicSolution { f, big_f, nu, phi, zeta0 })
    }

    /// `conj(∇u)`.
    pub fn derivative(&self) -> &AnalyticRep {
        &self.f
    }

    /// `F` with `u = Re F`.
    pub fn primitive(&self) -> &AnalyticRep {
        &self.big_f
    }

    pub fn direction(&self) -> &DirectionField {
        &self.nu
    }

    pub fn data(&self) -> &BoundaryData {
        &self.phi
    }

    pub fn corrector_point(&self) -> C64 {
        self.zeta0
    }

    /// Boundary residual of the underlying Riemann–Hilbert solution.
    pub fn residual(&self, opts: disk_rh::ResidualOptions) -> ResidualReport {
        disk_rh::boundary_residual(&self.f, &self.nu, &self.phi, opts)
    }

    fn direction_at(&self, zeta: C64) -> C64 {
        self.nu.at_angle(zeta.arg())
    }
}

impl Potential for HarmonicSolution {
    fn value(&self, z: C64) -> Result<f64> {
        Ok(self.big_f.eval(z)?.re)
    }

    fn gradient(&self, z: C64) -> Result<C64> {
        Ok(self.f.eval(z)?.conj())
    }
}

impl BoundarySolution for HarmonicSolution {
    fn sample_count(&self) -> usize {
        self.phi.len()
    }

    fn boundary_sample(&self, j: usize) -> BoundarySample {
        let n = self.phi.len();
        let zeta = C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        BoundarySample {
            zeta,
            normal: -zeta,
            nu: self.nu.values()[j],
            phi: self.phi.values()[j],
            masked: self.phi.is_masked(j),
        }
    }

    fn approach_paths(&self, j: usize, kappa: f64, levels: usize) -> Result<Vec<Vec<C64>>> {
        stolz_paths(self.boundary_sample(j).zeta, kappa, levels)
    }

    fn exceptional_points(&self) -> Vec<C64> {
        let mut v: Vec<C64> = self
            .f
            .correctors()
            .iter()
            .filter(|c| c.gamma.norm() > 1e-12)
            .map(|c| c.zeta0)
            .collect();
        v.extend(self.big_f.log_terms().iter().filter(|l| l.beta.norm() > 1e-12).map(|l| l.zeta0));
        v.dedup();
        v
    }
}

fn stolz_paths(zeta: C64, kappa: f64, levels: usize) -> Result<Vec<Vec<C64>>> {
    let s = StolzApproach::new(zeta, kappa, levels, disk_rh::path_offsets(kappa).to_vec())?;
    Ok(disk_rh::path_offsets(kappa).iter().map(|&o| s.path(o)).collect())
}

/// `u = Re F`, `F = ∫ f`, where `f` solves `Re(ν f) = φ`.
pub fn solve_directional_disk(nu: &DirectionField, phi: &BoundaryData, zeta0: C64) -> Result<HarmonicSolution> {
    let f = disk_rh::solve_rh(nu, phi, zeta0)?;
    HarmonicSolution::from_derivative(f, nu.clone(), phi.clone(), zeta0)
}

/// Neumann problem `∂u/∂n = φ` with `n` the interior normal of the unit circle.
pub fn solve_neumann_disk(phi: &BoundaryData, zeta0: C64) -> Result<HarmonicSolution> {
    let nu = normal_field(&JordanCurve::unit_circle(phi.len())?)?;
    solve_directional_disk(&nu, phi, zeta0)
}

fn check_on_circle(zeta: C64) -> Result<()> {
    if (zeta.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("|ζ| = {} is not 1", zeta.norm())));
    }
    Ok(())
}

/// Nontangential limit of `⟨ν(ζ), ∇u(z)⟩` as `z → ζ` inside the Stolz cone.
pub fn nontangential_derivative_trace(sol: &HarmonicSolution, zeta: C64, opts: LimitOptions) -> Result<LimitEstimate> {
    check_on_circle(zeta)?;
    let paths = stolz_paths(zeta, opts.kappa, opts.levels)?;
    derivative_limit(sol, sol.direction_at(zeta), &paths, opts.tol)
}

/// `lim u(rζ)` as `r → 1`; `converged == false` flags divergence.
pub fn radial_limit(sol: &HarmonicSolution, zeta: C64, opts: LimitOptions) -> Result<LimitEstimate> {
    check_on_circle(zeta)?;
    normal_limit(sol, zeta, -zeta, opts.levels, opts.tol)
}

/// Difference-quotient normal derivative at `ζ`, with `u(ζ)` taken from
/// [`radial_limit`].
pub fn normal_derivative_pointwise(sol: &HarmonicSolution, zeta: C64, steps: &[u32], opts: LimitOptions) -> Result<LimitEstimate> {
    let u0 = radial_limit(sol, zeta, opts)?;
    if !u0.converged {
        return Err(Error::Convergence {
            iterations: opts.levels,
            detail: format!("radial limit diverges at ζ = {zeta} (spread {:.3e})", u0.spread),
        });
    }
    difference_quotient(sol, zeta, -zeta, u0.value, steps, opts.tol)
}

pub const DEFAULT_QUOTIENT_STEPS: [u32; 4] = [7, 8, 9, 10];

/// The three boundary quantities of the Neumann problem at a sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NeumannQuantities {
    pub index: usize,
    pub normal_limit: LimitEstimate,
    pub normal_derivative: LimitEstimate,
    pub nontangential_limit: LimitEstimate,
}

pub fn neumann_quantities<S: BoundarySolution>(sol: &S, j: usize, opts: LimitOptions) -> Result<NeumannQuantities> {
    let b = sol.boundary_sample(j);
    let u0 = normal_limit(sol, b.zeta, b.normal, opts.levels, opts.tol)?;
    let dq = difference_quotient(sol, b.zeta, b.normal, u0.value, &DEFAULT_QUOTIENT_STEPS, opts.tol)?;
    let paths = sol.approach_paths(j, opts.kappa, opts.levels)?;
    let nt = derivative_limit(sol, b.normal, &paths, opts.tol)?;
    Ok(NeumannQuantities {
        index: j,
        normal_limit: u0,
        normal_derivative: dq,
        nontangential_limit: nt,
    })
}

/// Nontangential certification of `∂u/∂ν → φ` at every unmasked sample
/// farther than `exclusion` from the exceptional points.
pub fn certify<S: BoundarySolution>(sol: &S, opts: LimitOptions, exclusion: f64) -> ResidualReport {
    let bad = sol.exceptional_points();
    let (mut masked, mut excluded) = (0, 0);
    let mut todo = Vec::new();
    for j in 0..sol.sample_count() {
        let b = sol.boundary_sample(j);
        if b.masked {
            masked += 1;
        } else if bad.iter().any(|p| (b.zeta - p).norm() <= exclusion) {
            excluded += 1;
        } else {
            todo.push(j);
        }
    }
    let samples = todo
        .par_iter()
        .map(|&j| {
            let b = sol.boundary_sample(j);
            let est = sol
                .approach_paths(j, opts.kappa, opts.levels)
                .and_then(|p| derivative_limit(sol, b.nu, &p, opts.tol));
            let theta = 2.0 * PI * j as f64 / sol.sample_count() as f64;
            match est {
                Ok(e) => SampleResidual {
                    index: j,
                    theta,
                    estimate: e.value,
                    deviation: (e.value - b.phi).abs().max(e.spread),
                },
                Err(_) => SampleResidual {
                    index: j,
                    theta,
                    estimate: f64::NAN,
                    deviation: f64::INFINITY,
                },
            }
        })
        .collect();
    ResidualReport::from_samples(samples, masked, excluded)
}

/// Cartesian nodes with spacing `step` inside the disk of the given radius.
pub fn disk_grid(center: C64, radius: f64, step: f64) -> Vec<C64> {
    let m = (radius / step).floor() as i64;
    let mut v = Vec::new();
    for i in -m..=m {
        for j in -m..=m {
            let d = C64::new(i as f64 * step, j as f64 * step);
            if d.norm() <= radius {
                v.push(center + d);
            }
        }
    }
    v
}

/// CSV with columns `x, y, u, ux, uy`.
pub fn write_solution_csv<W: Write>(pot: &dyn Potential, points: &[C64], w: W) -> Result<()> {
    let rows = points
        .par_iter()
        .map(|&z| Ok((z, pot.value(z)?, pot.gradient(z)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "y", "u", "ux", "uy"])?;
    for (z, u, g) in rows {
        wr.write_record([fmt(z.re), fmt(z.im), fmt(u), fmt(g.re), fmt(g.im)])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk_rh::corrector;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    const ONE: C64 = C64 { re: 1.0, im: 0.0 };

    #[test]
    fn cosine_neumann_gives_minus_x() {
        let phi = BoundaryData::from_fn(256, f64::cos).unwrap();
        let sol = solve_neumann_disk(&phi, ONE).unwrap();
        for z in disk_grid(c(0.0, 0.0), 0.9, 0.1) {
            assert!((sol.value(z).unwrap() + z.re).abs() < 1e-12);
        }
        let tr = nontangential_derivative_trace(&sol, ONE, LimitOptions::default()).unwrap();
        assert!((tr.value - 1.0).abs() < 1e-12 && tr.converged);
        let rl = radial_limit(&sol, ONE, LimitOptions::default()).unwrap();
        assert!((rl.value + 1.0).abs() < 1e-12 && rl.converged);
        let nd = normal_derivative_pointwise(&sol, ONE, &DEFAULT_QUOTIENT_STEPS, LimitOptions::default()).unwrap();
        assert!((nd.value - 1.0).abs() < 1e-9);
        assert!((nd.value - tr.value).abs() < 1e-6);
    }

    #[test]
    fn constant_data_gives_log_solution() {
        let phi = BoundaryData::constant(256, 1.0).unwrap();
        let sol = solve_neumann_disk(&phi, ONE).unwrap();
        for z in disk_grid(c(0.0, 0.0), 0.9, 0.15) {
            let exact = -2.0 * (ONE - z).norm().ln();
            assert!((sol.value(z).unwrap() - exact).abs() < 1e-12);
        }
        let opts = LimitOptions::default();
        let m1 = c(-1.0, 0.0);
        let tr = nontangential_derivative_trace(&sol, m1, opts).unwrap();
        assert!((tr.value - 1.0).abs() < 1e-6);
        let rl = radial_limit(&sol, m1, opts).unwrap();
        assert!((rl.value + 2.0 * 2f64.ln()).abs() < 1e-6);
        let div = radial_limit(&sol, ONE, opts).unwrap();
        assert!(!div.converged);
        assert!(matches!(
            normal_derivative_pointwise(&sol, ONE, &DEFAULT_QUOTIENT_STEPS, opts),
            Err(Error::Convergence { .. })
        ));
    }

    #[test]
    fn zero_data_zero_solution() {
        let phi = BoundaryData::constant(64, 0.0).unwrap();
        let sol = solve_neumann_disk(&phi, ONE).unwrap();
        for z in disk_grid(c(0.0, 0.0), 0.9, 0.3) {
            assert_eq!(sol.value(z).unwrap(), 0.0);
        }
        let q = neumann_quantities(&sol, 5, LimitOptions::default()).unwrap();
        assert_eq!(q.normal_limit.value, 0.0);
        assert_eq!(q.normal_derivative.value, 0.0);
        assert_eq!(q.nontangential_limit.value, 0.0);
    }

    #[test]
    fn integrate_closed_forms() {
        let f = corrector(ONE, 1.0).unwrap();
        let big = integrate_analytic(&f).unwrap();
        let z = c(0.2, 0.5);
        let exact = -2.0 * (ONE - z).ln();
        assert!((big.eval(z).unwrap() - exact).norm() < 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let phi = BoundaryData::from_fn(128, |t| (2.0 * t).sin() + 0.3 * (3.0 * t).cos() + 0.5).unwrap();
        let sol = solve_neumann_disk(&phi, C64::from_polar(1.0, 1.0)).unwrap();
        let h = 1e-5;
        for z in disk_grid(c(0.0, 0.0), 0.9, 0.2) {
            let ux = (sol.value(z + h).unwrap() - sol.value(z - h).unwrap()) / (2.0 * h);
            let uy = (sol.value(z + c(0.0, h)).unwrap() - sol.value(z - c(0.0, h)).unwrap()) / (2.0 * h);
            let g = sol.gradient(z).unwrap();
            assert!((g - c(ux, uy)).norm() < 1e-6, "{z}");
        }
    }

    #[test]
    fn csv_export_header() {
        let phi = BoundaryData::from_fn(64, f64::cos).unwrap();
        let sol = solve_neumann_disk(&phi, ONE).unwrap();
        let mut buf = Vec::new();
        write_solution_csv(&sol, &[c(0.5, 0.0)], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("x,y,u,ux,uy"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert!((row[2] + 0.5).abs() < 1e-15 && (row[3] + 1.0).abs() < 1e-14);
    }
}
