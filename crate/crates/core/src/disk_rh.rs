//! Schwarz-operator machinery and the constructive Riemann–Hilbert solver
//! `Re(ν·f) = φ` on the unit disk.
//!
//! The direction field is factored as `ν(ζ) = ζ^m e^{i s(θ)}`. With
//! `p = S[s]` the boundary condition becomes `Re(ζ^m g) = φ e^{−Im p}` for
//! `g = e^{ip} f`. Index `m = 0` is a Schwarz integral. Index `m = 1` is solved
//! by shifting Fourier coefficients for the zero-mean part, and the mean is
//! absorbed by a corrector pole at `ζ₀`, so the boundary condition fails only
//! at that single point.

use crate::error::{Error, Result};
use crate::fft;
use crate::geometry::{BoundaryData, DirectionField, StolzApproach};
use crate::series::{AnalyticRep, Corrector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Largest tolerated `e^{|Im p|}`.
pub const OVERFLOW_GUARD: f64 = 1e8;

fn check_pow2(n: usize) -> Result<()> {
    if !fft::is_pow2(n) || n < 4 {
        return Err(Error::Config(format!("sample count must be a power of two, got {n}")));
    }
    Ok(())
}

/// Taylor coefficients `c_0 = a_0`, `c_k = 2a_k` of the Schwarz integral,
/// `K = N/2` terms.
fn schwarz_coeffs(values: &[f64]) -> Vec<C64> {
    let n = values.len();
    let a = fft::forward_real(values);
    let mut c = Vec::with_capacity(n / 2);
    c.push(C64::new(a[0].re, 0.0));
    c.extend(a.iter().take(n / 2).skip(1).map(|v| 2.0 * v));
    c
}

/// Values of a Taylor series at the `N` boundary nodes.
fn boundary_values(coeffs: &[C64], n: usize) -> Vec<C64> {
    let mut a = vec![C64::new(0.0, 0.0); n];
    for (k, c) in coeffs.iter().enumerate().take(n) {
        a[k] = *c;
    }
    fft::inverse(&a)
}

/// Analytic `S[g]` with `Re S[g] = g` on the circle and `Im S[g](0) = 0`.
///
/// The mask is ignored.
pub fn schwarz_operator(g: &BoundaryData) -> Result<AnalyticRep> {
    check_pow2(g.len())?;
    Ok(AnalyticRep::from_coeffs(schwarz_coeffs(g.values())))
}

/// Circle conjugate function: `cos kθ ↦ sin kθ`, `sin kθ ↦ −cos kθ`.
pub fn conjugate_operator(g: &BoundaryData) -> Result<BoundaryData> {
    check_pow2(g.len())?;
    BoundaryData::new(fft::conjugate(g.values()), g.mask().clone())
}

/// `2a·ζ̄₀/(1 − ζ̄₀z)`, for which `Re(−ζ·f(ζ)) = a` on `|ζ| = 1`, `ζ ≠ ζ₀`.
pub fn corrector(zeta0: C64, a: f64) -> Result<AnalyticRep> {
    if (zeta0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "corrector point must be unimodular, |ζ₀| = {}",
            zeta0.norm()
        )));
    }
    if a == 0.0 {
        return Ok(AnalyticRep::zero());
    }
    AnalyticRep::zero().with_corrector(Corrector {
        zeta0,
        gamma: 2.0 * a * zeta0.conj(),
    })
}

/// Intermediate quantities of the index reduction, exposed for diagnostics.
#[derive(Debug, Clone)]
pub struct IndexReduction {
    pub winding: i64,
    /// Taylor coefficients of `p = S[s]`.
    pub p: Vec<C64>,
    /// Boundary values of `e^{−Im p}`.
    pub damping: Vec<f64>,
    /// Taylor coefficients of `e^{−ip}`.
    pub rotation: Vec<C64>,
}

pub fn index_reduction(nu: &DirectionField) -> Result<IndexReduction> {
    let n = nu.len();
    check_pow2(n)?;
    let m = nu.winding();
    if !(0..=1).contains(&m) {
        return Err(Error::UnsupportedIndex(m));
    }
    let p = schwarz_coeffs(nu.reduced_arg());
    let pb = boundary_values(&p, n);
    let ln_guard = OVERFLOW_GUARD.ln();
    if let Some((j, v)) = pb.iter().enumerate().find(|(_, v)| v.im.abs() > ln_guard || !v.im.is_finite()) {
        return Err(Error::DataTooWild(format!(
            "e^{{|Im p|}} = {:.3e} at sample {j} exceeds {OVERFLOW_GUARD:e}",
            v.im.abs().exp()
        )));
    }
    let damping = pb.iter().map(|v| (-v.im).exp()).collect();
    let rot: Vec<C64> = pb.iter().map(|v| (-C64::i() * v).exp()).collect();
    let rotation = fft::forward(&rot).into_iter().take(n / 2).collect();
    Ok(IndexReduction {
        winding: m,
        p,
        damping,
        rotation,
    })
}

/// Normalised analytic `f` with `Re(ν(ζ)·f(z)) → φ(ζ)` nontangentially at
/// continuity points of the data, except at `ζ₀` and masked samples.
pub fn solve_rh(nu: &DirectionField, phi: &BoundaryData, zeta0: C64) -> Result<AnalyticRep> {
    let n = phi.len();
    if nu.len() != n {
        return Err(Error::Config(format!("direction field has {} samples, data has {n}", nu.len())));
    }
    if (zeta0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "corrector point must be unimodular, |ζ₀| = {}",
            zeta0.norm()
        )));
    }
    let red = index_reduction(nu)?;
    let psi: Vec<f64> = phi.filled().iter().zip(&red.damping).map(|(v, d)| v * d).collect();
    let c = schwarz_coeffs(&psi);
    let g = match red.winding {
        0 => AnalyticRep::from_coeffs(c),
        _ => {
            let mut shifted: Vec<C64> = c.iter().skip(1).cloned().collect();
            shifted.push(C64::new(0.0, 0.0));
            let mean = c[0].re;
            let scale = psi.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            let g = AnalyticRep::from_coeffs(shifted);
            if mean.abs() > 1e-14 * scale {
                // Re(ζ·corrector(ζ₀, −a)) = a
                g.add(&corrector(zeta0, -mean)?)
            } else {
                g
            }
        }
    };
    g.mul_series(&red.rotation)
}

#[derive(Debug, Clone, Copy)]
pub struct ResidualOptions {
    pub kappa: f64,
    /// Deepest Stolz level; the last point sits at `r = 1 − 2^{−levels}`.
    pub levels: usize,
    /// Samples closer than this to a singular point of `f` are skipped.
    pub exclusion: f64,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions {
            kappa: 0.5,
            levels: 12,
            exclusion: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleResidual {
    pub index: usize,
    pub theta: f64,
    pub estimate: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub max: f64,
    pub mean: f64,
    pub checked: usize,
    pub masked: usize,
    pub excluded: usize,
    pub failed: usize,
    pub samples: Vec<SampleResidual>,
}

impl ResidualReport {
    pub(crate) fn from_samples(samples: Vec<SampleResidual>, masked: usize, excluded: usize) -> Self {
        let failed = samples.iter().filter(|s| !s.deviation.is_finite()).count();
        let finite: Vec<f64> = samples.iter().map(|s| s.deviation).filter(|d| d.is_finite()).collect();
        let max = if failed > 0 {
            f64::INFINITY
        } else {
            finite.iter().cloned().fold(0.0, f64::max)
        };
        let mean = if finite.is_empty() {
            0.0
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        ResidualReport {
            max,
            mean,
            checked: samples.len(),
            masked,
            excluded,
            failed,
            samples,
        }
    }
}

/// Lateral offsets of the approach paths used for certification.
pub(crate) fn path_offsets(kappa: f64) -> [f64; 3] {
    [0.0, -0.5 * kappa, 0.5 * kappa]
}

/// Nontangential estimate of `lim Re(ν f)` at every unmasked sample away
/// from the singular points of `f`, compared with `φ`.
pub fn boundary_residual(f: &AnalyticRep, nu: &DirectionField, phi: &BoundaryData, opts: ResidualOptions) -> ResidualReport {
    let n = phi.len();
    let singular: Vec<C64> = f
        .correctors()
        .iter()
        .filter(|c| c.gamma.norm() > 1e-12)
        .map(|c| c.zeta0)
        .chain(f.log_terms().iter().filter(|l| l.beta.norm() > 1e-12).map(|l| l.zeta0))
        .collect();
    let mut masked = 0;
    let mut excluded = 0;
    let mut todo = Vec::new();
    for j in 0..n {
        let theta = 2.0 * PI * j as f64 / n as f64;
        let zeta = C64::from_polar(1.0, theta);
        if phi.is_masked(j) {
            masked += 1;
        } else if singular.iter().any(|s| (zeta - s).norm() <= opts.exclusion) {
            excluded += 1;
        } else {
            todo.push((j, theta, zeta));
        }
    }
    let samples: Vec<SampleResidual> = todo
        .par_iter()
        .map(|&(j, theta, zeta)| {
            let nu_j = nu.values()[j];
            let target = phi.values()[j];
            let est = stolz_estimate(zeta, opts, |z| f.eval(z).map(|v| (nu_j * v).re));
            match est {
                Ok((e, worst)) => SampleResidual {
                    index: j,
                    theta,
                    estimate: e,
                    deviation: worst.iter().map(|w| (w - target).abs()).fold(0.0, f64::max),
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

/// Limit of values sampled at depths `4δ, 2δ, δ` (the last three entries of
/// `v`), cancelling the `δ` and `δ²` terms.
pub(crate) fn richardson(v: &[f64]) -> f64 {
    let n = v.len();
    (8.0 * v[n - 1] - 6.0 * v[n - 2] + v[n - 3]) / 3.0
}

/// Richardson limits along the radial and two lateral Stolz
/// paths; returns the radial estimate and all path estimates.
fn stolz_estimate(zeta: C64, opts: ResidualOptions, g: impl Fn(C64) -> Result<f64>) -> Result<(f64, Vec<f64>)> {
    let approach = StolzApproach::new(zeta, opts.kappa, opts.levels, path_offsets(opts.kappa).to_vec())?;
    let mut ests = Vec::with_capacity(3);
    for off in path_offsets(opts.kappa) {
        let path = approach.path(off);
        if path.len() < 3 {
            continue;
        }
        let v = path[path.len() - 3..].iter().map(|&z| g(z)).collect::<Result<Vec<f64>>>()?;
        ests.push(richardson(&v));
    }
    if ests.is_empty() {
        return Err(Error::Domain("empty Stolz approach".into()));
    }
    Ok((ests[0], ests))
}

/// Boundary values of `Re(ν f)` straight from the Taylor series (no limit process).
pub fn boundary_trace(f: &AnalyticRep, nu: &DirectionField) -> Vec<f64> {
    let n = nu.len();
    (0..n)
        .map(|j| {
            let zeta = C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
            (nu.values()[j] * f.eval_unchecked(zeta)).re
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{normal_field, JordanCurve};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn neumann_nu(n: usize) -> DirectionField {
        normal_field(&JordanCurve::unit_circle(n).unwrap()).unwrap()
    }

    #[test]
    fn schwarz_reproduces_constants_and_linear() {
        let s = schwarz_operator(&BoundaryData::constant(32, 2.5).unwrap()).unwrap();
        assert!((s.coeffs()[0] - c(2.5, 0.0)).norm() < 1e-15);
        assert!(s.coeffs().iter().skip(1).all(|v| v.norm() < 1e-14));

        let cos = schwarz_operator(&BoundaryData::from_fn(64, f64::cos).unwrap()).unwrap();
        assert!((cos.coeffs()[1] - c(1.0, 0.0)).norm() < 1e-14);
        let sin = schwarz_operator(&BoundaryData::from_fn(64, f64::sin).unwrap()).unwrap();
        assert!((sin.coeffs()[1] - c(0.0, -1.0)).norm() < 1e-14);
        // boundary residual of Re S[cos] against cos θ
        let one = DirectionField::constant(64, c(1.0, 0.0)).unwrap();
        let tr = boundary_trace(&cos, &one);
        for (j, v) in tr.iter().enumerate() {
            let t = 2.0 * PI * j as f64 / 64.0;
            assert!((v - t.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn conjugate_operator_cases() {
        let z = conjugate_operator(&BoundaryData::constant(16, 5.0).unwrap()).unwrap();
        assert!(z.values().iter().all(|v| v.abs() < 1e-14));
        let s = conjugate_operator(&BoundaryData::from_fn(64, f64::cos).unwrap()).unwrap();
        for (j, v) in s.values().iter().enumerate() {
            assert!((v - (2.0 * PI * j as f64 / 64.0).sin()).abs() < 1e-12);
        }
        let g = BoundaryData::from_fn(128, |t| (2.0 * t).sin() - 0.3 * (5.0 * t).cos()).unwrap();
        let gg = conjugate_operator(&conjugate_operator(&g).unwrap()).unwrap();
        for (a, b) in g.values().iter().zip(gg.values()) {
            assert!((a + b).abs() < 1e-10);
        }
    }

    #[test]
    fn corrector_hand_values() {
        let f = corrector(c(1.0, 0.0), 1.0).unwrap();
        let v = f.eval_unchecked(c(-1.0, 0.0));
        assert!((v - c(1.0, 0.0)).norm() < 1e-15);
        assert!(((c(1.0, 0.0) * v).re - 1.0).abs() < 1e-15);
        let w = f.eval_unchecked(C64::i());
        assert!((w - c(1.0, 1.0)).norm() < 1e-15);
        assert!(((-C64::i() * w).re - 1.0).abs() < 1e-15);
        assert_eq!(corrector(c(1.0, 0.0), 0.0).unwrap(), AnalyticRep::zero());
        assert!(matches!(corrector(c(0.9, 0.0), 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn corrector_identity_away_from_pole() {
        let z0 = C64::from_polar(1.0, 2.1);
        let f = corrector(z0, -0.7).unwrap();
        for j in 0..256 {
            let zeta = C64::from_polar(1.0, 2.0 * PI * j as f64 / 256.0);
            if (zeta - z0).norm() > 0.1 {
                assert!(((-zeta * f.eval_unchecked(zeta)).re + 0.7).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn index_reduction_for_neumann() {
        let r = index_reduction(&neumann_nu(64)).unwrap();
        assert_eq!(r.winding, 1);
        assert!((r.p[0].re.abs() - PI).abs() < 1e-12);
        assert!(r.damping.iter().all(|d| (d - 1.0).abs() < 1e-12));
        assert!((r.rotation[0] + 1.0).norm() < 1e-12);
    }

    #[test]
    fn solve_rh_examples() {
        let n = 64;
        let one = DirectionField::constant(n, c(1.0, 0.0)).unwrap();
        let cos = BoundaryData::from_fn(n, f64::cos).unwrap();
        let f = solve_rh(&one, &cos, c(1.0, 0.0)).unwrap();
        assert!((f.coeffs()[1] - c(1.0, 0.0)).norm() < 1e-13);
        assert!(f.correctors().is_empty());

        let nu = neumann_nu(n);
        let zero = solve_rh(&nu, &BoundaryData::constant(n, 0.0).unwrap(), c(1.0, 0.0)).unwrap();
        assert!(zero.coeffs().iter().all(|v| v.norm() == 0.0));
        assert!(zero.correctors().is_empty());

        let f = solve_rh(&nu, &cos, c(1.0, 0.0)).unwrap();
        assert!((f.coeffs()[0] + 1.0).norm() < 1e-13);
        assert!(f.coeffs().iter().skip(1).all(|v| v.norm() < 1e-13));
    }

    #[test]
    fn unsupported_index_and_wild_data() {
        let n = 64;
        let nu2 = DirectionField::from_fn(n, |t| C64::from_polar(1.0, 2.0 * t)).unwrap();
        let phi = BoundaryData::constant(n, 1.0).unwrap();
        assert!(matches!(solve_rh(&nu2, &phi, c(1.0, 0.0)), Err(Error::UnsupportedIndex(2))));
        let neg = DirectionField::from_fn(n, |t| C64::from_polar(1.0, -t)).unwrap();
        assert!(matches!(solve_rh(&neg, &phi, c(1.0, 0.0)), Err(Error::UnsupportedIndex(-1))));
        // large-amplitude smooth argument: |Im p| = 30 overflows the guard
        let wild = DirectionField::from_fn(1024, |t| C64::from_polar(1.0, 30.0 * t.cos())).unwrap();
        assert_eq!(wild.winding(), 0);
        let phi = BoundaryData::constant(1024, 1.0).unwrap();
        assert!(matches!(solve_rh(&wild, &phi, c(1.0, 0.0)), Err(Error::DataTooWild(_))));
    }

    #[test]
    fn residual_cases() {
        let n = 256;
        let one = DirectionField::constant(n, c(1.0, 0.0)).unwrap();
        let cos = BoundaryData::from_fn(n, f64::cos).unwrap();
        let f = solve_rh(&one, &cos, c(1.0, 0.0)).unwrap();
        let r = boundary_residual(&f, &one, &cos, ResidualOptions::default());
        assert!(r.max < 1e-6, "{}", r.max);

        let zero = BoundaryData::constant(n, 0.0).unwrap();
        let r = boundary_residual(&AnalyticRep::zero(), &one, &zero, ResidualOptions::default());
        assert_eq!(r.max, 0.0);

        let nu = neumann_nu(n);
        let ones = BoundaryData::constant(n, 1.0).unwrap();
        let fc = corrector(c(1.0, 0.0), 1.0).unwrap();
        let r = boundary_residual(&fc, &nu, &ones, ResidualOptions::default());
        assert!(r.max < 1e-3, "{}", r.max);
        assert!(r.excluded > 0);
        let far = ResidualOptions {
            exclusion: 0.5,
            ..Default::default()
        };
        let r = boundary_residual(&fc, &nu, &ones, far);
        assert!(r.max < 1e-6, "{}", r.max);
        // at the corrector point itself the trace diverges
        let near = fc.eval(c(1.0 - 1.0 / 4096.0, 0.0)).unwrap();
        assert!((-near).re < -1000.0);
    }

    #[test]
    fn masked_samples_are_skipped() {
        let n = 128;
        let nu = neumann_nu(n);
        let mut vals: Vec<f64> = fft::nodes(n).iter().map(|t| t.cos()).collect();
        vals[10] = 1e6;
        let phi = BoundaryData::new(vals, [10].into()).unwrap();
        let f = solve_rh(&nu, &phi, c(1.0, 0.0)).unwrap();
        assert!((f.coeffs()[0] + 1.0).norm() < 1e-3);
        let r = boundary_residual(&f, &nu, &phi, ResidualOptions::default());
        assert_eq!(r.masked, 1);
    }
}
