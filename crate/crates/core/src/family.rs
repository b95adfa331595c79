//! Finite families of distinct solutions of one boundary problem, obtained by
//! moving the corrector point, with a numerical certificate of linear
//! independence.

use crate::disk_rh::ResidualReport;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryData, DirectionField};
use crate::harmonic::{certify, solve_directional_disk, BoundarySolution, HarmonicSolution, LimitOptions};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

/// Rank threshold relative to the Gram trace.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SolutionFamily<S> {
    pub points: Vec<C64>,
    pub members: Vec<S>,
    /// Certification of each member away from its own exceptional points.
    pub residuals: Vec<ResidualReport>,
}

fn check_points(points: &[C64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Config("a family needs at least one corrector point".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if (p.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("corrector point {p} is not on the unit circle")));
        }
        if points[..i].iter().any(|q| (p - q).norm() < 1e-12) {
            return Err(Error::Config(format!("corrector point {p} is listed twice")));
        }
    }
    Ok(())
}

/// One member per corrector point, built by `solve` and certified with
/// exclusion `exclusion`.
pub fn generate_family_with<S, F>(points: &[C64], exclusion: f64, solve: F) -> Result<SolutionFamily<S>>
where
    S: BoundarySolution + Send,
    F: Fn(C64) -> Result<S> + Sync,
{
    check_points(points)?;
    let members = points.par_iter().map(|&p| solve(p)).collect::<Result<Vec<S>>>()?;
    let residuals = members.iter().map(|m| certify(m, LimitOptions::default(), exclusion)).collect();
    Ok(SolutionFamily {
        points: points.to_vec(),
        members,
        residuals,
    })
}

/// Disk family for `Re(ν f) = φ`; `ν` must have winding 1 for the
/// correctors to act.
pub fn generate_family(nu: &DirectionField, phi: &BoundaryData, points: &[C64]) -> Result<SolutionFamily<HarmonicSolution>> {
    if nu.winding() != 1 {
        return Err(Error::Config(format!(
            "direction winding {} differs from 1; corrector placement has no effect",
            nu.winding()
        )));
    }
    generate_family_with(points, 0.1, |p| solve_directional_disk(nu, phi, p))
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceCertificate {
    pub rank: usize,
    pub min_eig: f64,
    pub trace: f64,
    pub eigenvalues: Vec<f64>,
}

/// Gram matrix of mean-removed samples of the members at `grid`.
pub fn independence_certificate<S: BoundarySolution>(members: &[S], grid: &[C64]) -> Result<IndependenceCertificate> {
    if members.is_empty() {
        return Err(Error::Config("empty family".into()));
    }
    let k = members.len();
    let m = grid.len();
    let cols = members
        .iter()
        .map(|s| {
            let v = grid.par_iter().map(|&z| s.value(z)).collect::<Result<Vec<f64>>>()?;
            let mean = v.iter().sum::<f64>() / m as f64;
            Ok(v.into_iter().map(|x| x - mean).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let g = DMatrix::from_fn(k, k, |i, j| {
        cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum::<f64>() / m as f64
    });
    let trace = g.trace();
    let mut eig: Vec<f64> = SymmetricEigen::new(g).eigenvalues.iter().cloned().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let rank = eig.iter().filter(|&&e| e > RANK_TOL * trace).count();
    Ok(IndependenceCertificate {
        rank,
        min_eig: *eig.last().unwrap_or(&0.0),
        trace,
        eigenvalues: eig,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub k: usize,
    pub rank: usize,
    pub min_eig: f64,
    /// Largest certified deviation per member.
    pub residuals: Vec<f64>,
}

impl FamilyReport {
    pub fn new<S>(family: &SolutionFamily<S>, cert: &IndependenceCertificate) -> Self {
        FamilyReport {
            k: family.members.len(),
            rank: cert.rank,
            min_eig: cert.min_eig,
            residuals: family.residuals.iter().map(|r| r.max).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `33 × 33` nodes of `[−0.8, 0.8]²` inside the disk of radius 0.8.
pub fn default_sample_grid() -> Vec<C64> {
    let mut v = Vec::new();
    for i in 0..33 {
        for j in 0..33 {
            let z = C64::new(-0.8 + 0.05 * i as f64, -0.8 + 0.05 * j as f64);
            if z.norm() <= 0.8 + 1e-12 {
                v.push(z);
            }
        }
    }
    v
}
