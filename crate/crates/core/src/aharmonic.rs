//! A-harmonic directional-derivative problems, `div(A∇u) = 0`, reduced to the
//! harmonic case by the quasiconformal change of variables `u = U∘h`.
//!
//! `h` solves the Beltrami equation for the coefficient `μ` of `A`; at a
//! boundary point `∂_ν u = ⟨∇U, h_ν⟩`, so `U` solves a directional problem on
//! `h(D)` with direction `h_ν/|h_ν|` and data `φ/|h_ν|`.

use crate::beltrami::{extend_mu, mu_of, solve_beltrami, BeltramiField, BeltramiOptions, Grid, MatrixFieldA, QCMap};
use crate::conformal::{riemann_map, solve_directional_with_map, JordanSolution, MapOptions};
use crate::error::{Error, Result, StageExt};
use crate::geometry::{BoundaryData, DirectionField, JordanCurve};
use crate::harmonic::{
    neumann_quantities, normal_cone_paths, BoundarySample, BoundarySolution, LimitOptions, NeumannQuantities, Potential,
};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Pipeline settings; every field has a default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AHarmonicOptions {
    /// Beltrami grid nodes per side.
    pub grid_n: usize,
    /// Outer radius of the μ cutoff; 1.5 × circumradius when absent.
    pub cutoff_radius: Option<f64>,
    pub beltrami_tol: f64,
    pub beltrami_max_iters: usize,
    pub map_tol: f64,
    pub map_max_iters: usize,
}

impl Default for AHarmonicOptions {
    fn default() -> Self {
        let b = BeltramiOptions::default();
        let m = MapOptions::default();
        AHarmonicOptions {
            grid_n: 512,
            cutoff_radius: None,
            beltrami_tol: b.tol,
            beltrami_max_iters: b.max_iters,
            map_tol: m.tol,
            map_max_iters: m.max_iters,
        }
    }
}

/// Boundary problem carried to `h(D)`, indexed like the original samples.
#[derive(Debug, Clone)]
pub struct TransportedFields {
    /// `h(z_j)` with tangents `h_τ/|h_τ|`.
    pub curve: JordanCurve,
    /// `|h_ν|/h_ν`, the conjugate of the direction actually imposed.
    pub nu_star: Vec<C64>,
    /// `h_ν/|h_ν|`.
    pub direction: DirectionField,
    /// `φ/|h_ν|`, same mask as `φ`.
    pub phi: BoundaryData,
    /// `|h_ν(z_j)|`.
    pub stretch: Vec<f64>,
}

pub fn transport_fields(h: &QCMap, curve: &JordanCurve, nu: &DirectionField, phi: &BoundaryData) -> Result<TransportedFields> {
    let n = curve.len();
    if nu.len() != n || phi.len() != n {
        return Err(Error::Config(format!(
            "{} samples on the curve but {} directions and {} data values",
            n,
            nu.len(),
            phi.len()
        )));
    }
    let vals = (0..n)
        .into_par_iter()
        .map(|j| h.eval(curve.points()[j]))
        .collect::<Result<Vec<_>>>()?;
    let mut pts = Vec::with_capacity(n);
    let mut tang = Vec::with_capacity(n);
    let mut dir = Vec::with_capacity(n);
    let mut nu_star = Vec::with_capacity(n);
    let mut stretch = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n);
    for (j, v) in vals.iter().enumerate() {
        let ht = v.directional(curve.tangents()[j]);
        let hn = v.directional(nu.values()[j]);
        let s = hn.norm();
        if !(s > 0.0) || !(ht.norm() > 0.0) {
            return Err(Error::Regularity(format!(
                "h has a vanishing directional derivative at {}",
                curve.points()[j]
            )));
        }
        pts.push(v.h);
        tang.push(ht / ht.norm());
        dir.push(hn / s);
        nu_star.push(hn.conj() / s);
        stretch.push(s);
        data.push(phi.values()[j] / s);
    }
    Ok(TransportedFields {
        curve: JordanCurve::from_parts(pts, tang)?,
        nu_star,
        direction: DirectionField::new(dir)?,
        phi: BoundaryData::new(data, phi.mask().clone())?,
        stretch,
    })
}

/// `u = U∘h` with `U` harmonic on `h(D)`.
#[derive(Debug, Clone)]
pub struct AHarmonicSolution {
    h: QCMap,
    mu: BeltramiField,
    fields: TransportedFields,
    inner: JordanSolution,
    curve: JordanCurve,
    nu: DirectionField,
    phi: BoundaryData,
}

impl AHarmonicSolution {
    pub fn qc_map(&self) -> &QCMap {
        &self.h
    }

    /// Extended Beltrami coefficient on the computational grid.
    pub fn beltrami(&self) -> &BeltramiField {
        &self.mu
    }

    pub fn transported(&self) -> &TransportedFields {
        &self.fields
    }

    /// Harmonic solution `U` on `h(D)`.
    pub fn harmonic_part(&self) -> &JordanSolution {
        &self.inner
    }

    pub fn curve(&self) -> &JordanCurve {
        &self.curve
    }

    pub fn direction(&self) -> &DirectionField {
        &self.nu
    }

    pub fn data(&self) -> &BoundaryData {
        &self.phi
    }
}

impl Potential for AHarmonicSolution {
    fn value(&self, z: C64) -> Result<f64> {
        self.inner.value(self.h.h(z)?)
    }

    /// `(⟨∇U, h_x⟩, ⟨∇U, h_y⟩)` at `h(z)`.
    fn gradient(&self, z: C64) -> Result<C64> {
        let v = self.h.eval(z)?;
        let g = self.inner.gradient(v.h)?;
        let hx = v.hz + v.hzb;
        let hy = C64::new(0.0, 1.0) * (v.hz - v.hzb);
        Ok(C64::new((g * hx.conj()).re, (g * hy.conj()).re))
    }
}

impl BoundarySolution for AHarmonicSolution {
    fn sample_count(&self) -> usize {
        self.phi.len()
    }

    fn boundary_sample(&self, j: usize) -> BoundarySample {
        BoundarySample {
            zeta: self.curve.points()[j],
            normal: self.curve.normals()[j],
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
        self.inner
            .exceptional_points()
            .into_iter()
            .map(|p| self.curve.points()[self.fields.curve.nearest_sample(p)])
            .collect()
    }
}

/// `μ` of `A` on the closed domain, extended to the grid of `A`.
pub fn beltrami_for(a: &MatrixFieldA, curve: &JordanCurve, cutoff_radius: Option<f64>) -> Result<BeltramiField> {
    for p in curve.points() {
        a.eval(*p)?;
    }
    extend_mu(
        |z| a.eval(z).map(|m| mu_of(&m)).unwrap_or(C64::new(0.0, 0.0)),
        curve,
        *a.grid(),
        cutoff_radius,
    )
}

/// `A` sampled on the pipeline grid for `curve`; `f` only needs to be of
/// class B on the whole grid.
pub fn coefficient_grid(
    curve: &JordanCurve,
    opts: &AHarmonicOptions,
    alpha: f64,
    f: impl Fn(C64) -> [[f64; 2]; 2] + Sync,
) -> Result<MatrixFieldA> {
    MatrixFieldA::from_fn(Grid::for_curve(curve, opts.grid_n)?, alpha, f)
}

/// Directional problem `⟨ν, ∇u⟩ = φ` for `div(A∇u) = 0`. `ζ₀` is the corrector
/// point on the unit circle of the final conformal map. Errors name the
/// failing stage.
pub fn solve_directional_aharmonic(
    a: &MatrixFieldA,
    curve: &JordanCurve,
    nu: &DirectionField,
    phi: &BoundaryData,
    zeta0: C64,
    opts: &AHarmonicOptions,
) -> Result<AHarmonicSolution> {
    let mu = beltrami_for(a, curve, opts.cutoff_radius).stage("extension")?;
    let h = solve_beltrami(
        &mu,
        BeltramiOptions {
            tol: opts.beltrami_tol,
            max_iters: opts.beltrami_max_iters,
        },
    )
    .stage("beltrami")?;
    let fields = transport_fields(&h, curve, nu, phi).stage("transport")?;
    let map = riemann_map(
        &fields.curve,
        MapOptions {
            center: None,
            tol: opts.map_tol,
            max_iters: opts.map_max_iters,
        },
    )
    .stage("conformal")?;
    let inner = solve_directional_with_map(&map, &fields.direction, &fields.phi, zeta0).stage("harmonic")?;
    Ok(AHarmonicSolution {
        h,
        mu,
        fields,
        inner,
        curve: curve.clone(),
        nu: nu.clone(),
        phi: phi.clone(),
    })
}

/// Neumann problem `∂u/∂n = φ` for the interior normal, with boundary
/// quantities at `probes` evenly spaced usable samples.
pub fn solve_neumann_aharmonic(
    a: &MatrixFieldA,
    curve: &JordanCurve,
    phi: &BoundaryData,
    zeta0: C64,
    probes: usize,
    opts: &AHarmonicOptions,
) -> Result<(AHarmonicSolution, Vec<NeumannQuantities>)> {
    let nu = DirectionField::new(curve.normals().to_vec())?;
    let sol = solve_directional_aharmonic(a, curve, &nu, phi, zeta0, opts)?;
    let n = sol.sample_count();
    let bad = sol.exceptional_points();
    let stride = (n / probes.max(1)).max(1);
    let q = (0..n)
        .step_by(stride)
        .filter(|&j| {
            let b = sol.boundary_sample(j);
            !b.masked && bad.iter().all(|p| (b.zeta - p).norm() > 0.1)
        })
        .map(|j| neumann_quantities(&sol, j, LimitOptions::default()))
        .collect::<Result<Vec<_>>>()?;
    Ok((sol, q))
}

#[derive(Debug, Clone, Copy)]
pub struct WeakResidualOptions {
    /// Half-width of the square support of each test function.
    pub support: f64,
    /// Midpoint cells per side of the support.
    pub quadrature: usize,
    /// Step of the central differences for the pointwise divergence.
    pub step: f64,
    /// Hölder exponent for the gradient continuity statistic.
    pub alpha: f64,
}

impl Default for WeakResidualOptions {
    fn default() -> Self {
        WeakResidualOptions {
            support: 0.05,
            quadrature: 16,
            step: 1e-3,
            alpha: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeakResidualReport {
    /// Largest `|∫⟨A∇u, ∇ψ⟩| / ∫ψ` over the test functions.
    pub max: f64,
    pub mean: f64,
    /// Largest `|div(A∇u)|` by central differences of the flux.
    pub divergence_max: f64,
    /// Largest `|∇u(p) − ∇u(q)| / |p − q|^α` between neighbouring centers.
    pub gradient_holder: f64,
    pub tests: usize,
}

/// `(1 − s²)⁴` on `|s| < 1` and its derivative.
fn bump(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    (q.powi(4), -8.0 * s * q.powi(3))
}

/// Weak-form residual of `div(A∇u) = 0` against tensor-product bumps centered
/// at `centers`; each support square must lie inside the domain of `u`.
pub fn aharmonic_residual(
    u: &dyn Potential,
    a: &(dyn Fn(C64) -> Result<[[f64; 2]; 2]> + Sync),
    centers: &[C64],
    opts: WeakResidualOptions,
) -> Result<WeakResidualReport> {
    let w = opts.support;
    let m = opts.quadrature;
    let dh = 2.0 * w / m as f64;
    let flux = |z: C64| -> Result<(f64, f64)> {
        let g = u.gradient(z)?;
        let am = a(z)?;
        Ok((am[0][0] * g.re + am[0][1] * g.im, am[1][0] * g.re + am[1][1] * g.im))
    };
    let rows = centers
        .par_iter()
        .map(|&c| {
            let (mut s, mut mass) = (0.0, 0.0);
            for p in 0..m {
                for q in 0..m {
                    let x = -w + (p as f64 + 0.5) * dh;
                    let y = -w + (q as f64 + 0.5) * dh;
                    let (bx, dbx) = bump(x / w);
                    let (by, dby) = bump(y / w);
                    let (fx, fy) = flux(c + C64::new(x, y))?;
                    s += fx * dbx / w * by + fy * bx * dby / w;
                    mass += bx * by;
                }
            }
            let e = opts.step;
            let (fxp, _) = flux(c + e)?;
            let (fxm, _) = flux(c - e)?;
            let (_, fyp) = flux(c + C64::new(0.0, e))?;
            let (_, fym) = flux(c - C64::new(0.0, e))?;
            let div = (fxp - fxm + fyp - fym) / (2.0 * e);
            Ok(((s / mass).abs(), div.abs(), u.gradient(c)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let max = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let mean = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.0).sum::<f64>() / rows.len() as f64
    };
    let divergence_max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut holder: f64 = 0.0;
    for i in 0..centers.len() {
        for j in i + 1..centers.len().min(i + 64) {
            let d = (centers[i] - centers[j]).norm();
            if d > 0.0 && d <= 2.0 * w {
                holder = holder.max((rows[i].2 - rows[j].2).norm() / d.powf(opts.alpha));
            }
        }
    }
    Ok(WeakResidualReport {
        max,
        mean,
        divergence_max,
        gradient_holder: holder,
        tests: rows.len(),
    })
}
