//! Boundary curves, boundary samples, direction fields and Stolz approach paths.

use crate::error::{Error, Result};
use crate::fft;
use crate::interp::Pchip;
use num_complex::Complex64 as C64;
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::io::{Read, Write};

const UNIT_TOL: f64 = 1e-12;

fn check_count(n: usize) -> Result<()> {
    if !fft::is_pow2(n) || n < 16 {
        return Err(Error::Config(format!("sample count must be a power of two ≥ 16, got {n}")));
    }
    Ok(())
}

/// Closed, positively oriented curve sampled at `t_j = 2πj/N`.
#[derive(Debug, Clone)]
pub struct JordanCurve {
    t: Vec<f64>,
    z: Vec<C64>,
    tangent: Vec<C64>,
    normal: Vec<C64>,
    lipschitz: bool,
}

impl JordanCurve {
    pub fn unit_circle(n: usize) -> Result<Self> {
        Self::circle(C64::new(0.0, 0.0), 1.0, n)
    }

    pub fn circle(center: C64, radius: f64, n: usize) -> Result<Self> {
        check_count(n)?;
        if !(radius > 0.0) {
            return Err(Error::Config(format!("radius must be positive, got {radius}")));
        }
        let t = fft::nodes(n);
        let z = t.iter().map(|&t| center + radius * C64::from_polar(1.0, t)).collect();
        let tangent = t.iter().map(|&t| C64::i() * C64::from_polar(1.0, t)).collect();
        Self::assemble(t, z, tangent)
    }

    /// Limaçon `e^{it} + a e^{2it}`, the image of the unit circle under `w + a w²`.
    pub fn limacon(a: f64, n: usize) -> Result<Self> {
        check_count(n)?;
        if a.abs() >= 0.5 {
            return Err(Error::Config(format!("limaçon needs |a| < 1/2, got {a}")));
        }
        let t = fft::nodes(n);
        let z = t
            .iter()
            .map(|&t| C64::from_polar(1.0, t) + a * C64::from_polar(1.0, 2.0 * t))
            .collect();
        let tangent = t
            .iter()
            .map(|&t| {
                let d = C64::i() * C64::from_polar(1.0, t) + 2.0 * a * C64::i() * C64::from_polar(1.0, 2.0 * t);
                d / d.norm()
            })
            .collect();
        Self::assemble(t, z, tangent)
    }

    pub fn ellipse(a: f64, b: f64, n: usize) -> Result<Self> {
        check_count(n)?;
        let t = fft::nodes(n);
        let z = t.iter().map(|&t| C64::new(a * t.cos(), b * t.sin())).collect();
        let tangent = t
            .iter()
            .map(|&t| {
                let d = C64::new(-a * t.sin(), b * t.cos());
                d / d.norm()
            })
            .collect();
        Self::assemble(t, z, tangent)
    }

    /// Curve from uniform-parameter samples; tangents by spectral differentiation.
    pub fn from_samples(z: Vec<C64>) -> Result<Self> {
        check_count(z.len())?;
        let d = fft::derivative(&z);
        let mut tangent = Vec::with_capacity(z.len());
        for (j, v) in d.iter().enumerate() {
            let m = v.norm();
            if !(m > 1e-12 * (1.0 + z[j].norm())) {
                return Err(Error::Geometry(format!("degenerate tangent at sample {j}")));
            }
            tangent.push(v / m);
        }
        Self::assemble(fft::nodes(z.len()), z, tangent)
    }

    /// Curve with caller-supplied unit tangents (normalised here).
    pub fn from_parts(z: Vec<C64>, tangent: Vec<C64>) -> Result<Self> {
        check_count(z.len())?;
        if tangent.len() != z.len() {
            return Err(Error::Config("tangent count differs from sample count".into()));
        }
        let mut tau = Vec::with_capacity(z.len());
        for (j, v) in tangent.iter().enumerate() {
            let m = v.norm();
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::Geometry(format!("degenerate tangent at sample {j}")));
            }
            tau.push(v / m);
        }
        Self::assemble(fft::nodes(z.len()), z, tau)
    }

    fn assemble(t: Vec<f64>, z: Vec<C64>, tangent: Vec<C64>) -> Result<Self> {
        let normal: Vec<C64> = tangent.iter().map(|v| C64::i() * v).collect();
        if signed_area(&z) <= 0.0 {
            return Err(Error::Geometry("curve is not positively oriented".into()));
        }
        if let Some((a, b)) = self_intersection(&z) {
            return Err(Error::Geometry(format!("polyline is not simple: segments {a} and {b} intersect")));
        }
        let lens: Vec<f64> = (0..z.len()).map(|j| (z[(j + 1) % z.len()] - z[j]).norm()).collect();
        let min = lens.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = lens.iter().cloned().fold(0.0, f64::max);
        Ok(JordanCurve {
            t,
            z,
            tangent,
            normal,
            lipschitz: min > 0.0 && max.is_finite(),
        })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn params(&self) -> &[f64] {
        &self.t
    }

    pub fn points(&self) -> &[C64] {
        &self.z
    }

    pub fn tangents(&self) -> &[C64] {
        &self.tangent
    }

    /// Unit interior normals, `n = i·τ`.
    pub fn normals(&self) -> &[C64] {
        &self.normal
    }

    pub fn is_lipschitz(&self) -> bool {
        self.lipschitz
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.z.len();
        (0..n).map(|j| (self.z[(j + 1) % n] - self.z[j]).norm()).sum()
    }

    /// Area centroid of the polygon.
    pub fn centroid(&self) -> C64 {
        let n = self.z.len();
        let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for j in 0..n {
            let p = self.z[j];
            let q = self.z[(j + 1) % n];
            let cr = p.re * q.im - q.re * p.im;
            a += cr;
            cx += (p.re + q.re) * cr;
            cy += (p.im + q.im) * cr;
        }
        C64::new(cx / (3.0 * a), cy / (3.0 * a))
    }

    pub fn circumradius(&self, center: C64) -> f64 {
        self.z.iter().map(|p| (p - center).norm()).fold(0.0, f64::max)
    }

    /// Even–odd point-in-polygon test.
    pub fn contains(&self, p: C64) -> bool {
        let n = self.z.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.z[i], self.z[j]);
            if (a.im > p.im) != (b.im > p.im) {
                let x = (b.re - a.re) * (p.im - a.im) / (b.im - a.im) + a.re;
                if p.re < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    pub fn nearest_sample(&self, p: C64) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (j, z) in self.z.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best.0 {
                best = (d, j);
            }
        }
        best.1
    }

    /// CSV with columns `t, re_z, im_z, re_n, im_n`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "re_z", "im_z", "re_n", "im_n"])?;
        for j in 0..self.len() {
            wr.write_record([
                fmt(self.t[j]),
                fmt(self.z[j].re),
                fmt(self.z[j].im),
                fmt(self.normal[j].re),
                fmt(self.normal[j].im),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv). Normals are
    /// taken from the file (tangent `τ = -i·n`).
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let (mut z, mut tau) = (Vec::new(), Vec::new());
        for rec in rd.records() {
            let rec = rec?;
            let v: Vec<f64> = parse_record(&rec, 5)?;
            z.push(C64::new(v[1], v[2]));
            tau.push(-C64::i() * C64::new(v[3], v[4]));
        }
        Self::from_parts(z, tau)
    }
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_record(rec: &csv::StringRecord, n: usize) -> Result<Vec<f64>> {
    if rec.len() < n {
        return Err(Error::Config(format!("expected {n} columns, found {}", rec.len())));
    }
    rec.iter()
        .take(n)
        .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number {s:?}: {e}"))))
        .collect()
}

fn signed_area(z: &[C64]) -> f64 {
    let n = z.len();
    (0..n)
        .map(|j| {
            let (p, q) = (z[j], z[(j + 1) % n]);
            p.re * q.im - q.re * p.im
        })
        .sum::<f64>()
        * 0.5
}

fn self_intersection(z: &[C64]) -> Option<(usize, usize)> {
    let n = z.len();
    for i in 0..n {
        let (a, b) = (z[i], z[(i + 1) % n]);
        if (b - a).norm() == 0.0 {
            return Some((i, i));
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (z[j], z[(j + 1) % n]);
            // bounding-box rejection first
            if a.re.max(b.re) < c.re.min(d.re)
                || c.re.max(d.re) < a.re.min(b.re)
                || a.im.max(b.im) < c.im.min(d.im)
                || c.im.max(d.im) < a.im.min(b.im)
            {
                continue;
            }
            if segments_cross(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

fn cross(u: C64, v: C64) -> f64 {
    u.re * v.im - u.im * v.re
}

fn segments_cross(a: C64, b: C64, c: C64, d: C64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0
}

/// Real boundary samples with a finite set of exempt indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    values: Vec<f64>,
    mask: BTreeSet<usize>,
    mean: f64,
}

impl BoundaryData {
    pub fn new(values: Vec<f64>, mask: BTreeSet<usize>) -> Result<Self> {
        let n = values.len();
        if !fft::is_pow2(n) {
            return Err(Error::Config(format!("sample count must be a power of two, got {n}")));
        }
        if mask.len() * 8 >= n {
            return Err(Error::Config(format!(
                "exceptional mask has {} points; must stay below N/8 = {}",
                mask.len(),
                n / 8
            )));
        }
        if let Some(&j) = mask.iter().find(|&&j| j >= n) {
            return Err(Error::Config(format!("mask index {j} out of range")));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        Ok(BoundaryData { values, mask, mean })
    }

    pub fn unmasked(values: Vec<f64>) -> Result<Self> {
        Self::new(values, BTreeSet::new())
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::unmasked(fft::nodes(n).into_iter().map(f).collect())
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::unmasked(vec![c; n])
    }

    pub fn with_mask(self, mask: BTreeSet<usize>) -> Result<Self> {
        Self::new(self.values, mask)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &BTreeSet<usize> {
        &self.mask
    }

    pub fn is_masked(&self, j: usize) -> bool {
        self.mask.contains(&j)
    }

    /// Mean over all samples, masked ones included.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Values with masked samples replaced by linear interpolation between
    /// the nearest unmasked neighbours (cyclically).
    pub fn filled(&self) -> Vec<f64> {
        let n = self.values.len();
        if self.mask.is_empty() {
            return self.values.clone();
        }
        let mut out = self.values.clone();
        for &j in &self.mask {
            let mut lo = 1;
            while self.mask.contains(&((j + n - lo) % n)) {
                lo += 1;
            }
            let mut hi = 1;
            while self.mask.contains(&((j + hi) % n)) {
                hi += 1;
            }
            let a = self.values[(j + n - lo) % n];
            let b = self.values[(j + hi) % n];
            let w = lo as f64 / (lo + hi) as f64;
            out[j] = a + w * (b - a);
        }
        out
    }

    /// CSV with columns `t, phi, mask`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "phi", "mask"])?;
        let t = fft::nodes(self.len());
        for (j, v) in self.values.iter().enumerate() {
            let m = if self.is_masked(j) { "1" } else { "0" };
            wr.write_record([fmt(t[j]), fmt(*v), m.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let (mut vals, mut mask) = (Vec::new(), BTreeSet::new());
        for (j, rec) in rd.records().enumerate() {
            let v = parse_record(&rec?, 3)?;
            vals.push(v[1]);
            if v[2] != 0.0 {
                mask.insert(j);
            }
        }
        Self::new(vals, mask)
    }
}

/// Unit-complex boundary samples with winding number and reduced argument.
#[derive(Debug, Clone)]
pub struct DirectionField {
    values: Vec<C64>,
    total_variation: f64,
    winding: i64,
    reduced_arg: Vec<f64>,
}

impl DirectionField {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        let n = values.len();
        if !fft::is_pow2(n) || n < 4 {
            return Err(Error::Config(format!("sample count must be a power of two, got {n}")));
        }
        for (j, v) in values.iter().enumerate() {
            if ((v.norm() - 1.0).abs()) > UNIT_TOL || !v.re.is_finite() {
                return Err(Error::Geometry(format!("direction at sample {j} has modulus {}", v.norm())));
            }
        }
        let t = fft::nodes(n);
        let mut arg = Vec::with_capacity(n);
        let mut a = values[0].arg();
        arg.push(a);
        for j in 1..=n {
            let d = wrap(values[j % n].arg() - values[j - 1].arg());
            a += d;
            if j < n {
                arg.push(a);
            }
        }
        let turns = (a - arg[0]) / (2.0 * PI);
        let winding = turns.round() as i64;
        let reduced_arg: Vec<f64> = arg.iter().zip(&t).map(|(a, t)| a - winding as f64 * t).collect();
        let total_variation = chord_sum(&values);
        let field = DirectionField {
            values,
            total_variation,
            winding,
            reduced_arg,
        };
        if (field.reduced_arg[n - 1] - field.reduced_arg[0]).abs() >= PI {
            return Err(Error::Geometry("reduced argument is not single-valued at sample resolution".into()));
        }
        Ok(field)
    }

    pub fn constant(n: usize, nu: C64) -> Result<Self> {
        Self::new(vec![nu / nu.norm(); n])
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        Self::new(
            fft::nodes(n)
                .into_iter()
                .map(|t| {
                    let v = f(t);
                    v / v.norm()
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn total_variation(&self) -> f64 {
        self.total_variation
    }

    pub fn winding(&self) -> i64 {
        self.winding
    }

    /// `s_j = arg ν_j − m·t_j`, single-valued over a period.
    pub fn reduced_arg(&self) -> &[f64] {
        &self.reduced_arg
    }

    /// Direction at an arbitrary parameter by monotone cubic interpolation
    /// of the reduced argument.
    pub fn interpolator(&self) -> DirectionInterp {
        DirectionInterp {
            s: Pchip::periodic_uniform(&self.reduced_arg, 0.0),
            winding: self.winding,
        }
    }

    /// Direction at the boundary point `e^{iθ}` of the unit disk.
    pub fn at_angle(&self, theta: f64) -> C64 {
        self.interpolator().eval(theta)
    }
}

#[derive(Debug, Clone)]
pub struct DirectionInterp {
    s: Pchip,
    winding: i64,
}

impl DirectionInterp {
    pub fn arg(&self, t: f64) -> f64 {
        self.s.eval(t) + self.winding as f64 * t
    }

    pub fn eval(&self, t: f64) -> C64 {
        C64::from_polar(1.0, self.arg(t))
    }
}

/// Interior unit normals of a curve as a direction field.
pub fn normal_field(curve: &JordanCurve) -> Result<DirectionField> {
    DirectionField::new(curve.normals().to_vec())
}

fn chord_sum(v: &[C64]) -> f64 {
    let n = v.len();
    (0..n).map(|j| (v[(j + 1) % n] - v[j]).norm()).sum()
}

pub(crate) fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Nontangential approach to a point of the unit circle.
#[derive(Debug, Clone)]
pub struct StolzApproach {
    pub zeta: C64,
    pub kappa: f64,
    pub radii: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl StolzApproach {
    /// Approach with radii `1 − 2^{−k}`, `k = 1..=levels`.
    ///
    /// `offsets` are lateral displacements in units of `1 − r`; zero is the
    /// radial ray.
    pub fn new(zeta: C64, kappa: f64, levels: usize, offsets: Vec<f64>) -> Result<Self> {
        if ((zeta.norm() - 1.0).abs()) > 1e-12 {
            return Err(Error::Domain(format!("|ζ| = {} is not 1", zeta.norm())));
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::Config(format!("aperture must lie in (0,1), got {kappa}")));
        }
        let radii = (1..=levels).map(|k| 1.0 - 0.5f64.powi(k as i32)).collect();
        Ok(StolzApproach {
            zeta,
            kappa,
            radii,
            offsets,
        })
    }

    pub fn in_cone(&self, z: C64) -> bool {
        z.norm() < 1.0 && (z - self.zeta).norm() <= (1.0 + self.kappa) * (1.0 - z.norm())
    }

    /// Points along one path; points outside the cone are dropped.
    pub fn path(&self, offset: f64) -> Vec<C64> {
        self.radii
            .iter()
            .map(|r| {
                let d = 1.0 - r;
                self.zeta * C64::new(1.0 - d, offset * d)
            })
            .filter(|&z| self.in_cone(z))
            .collect()
    }

    pub fn points(&self) -> Vec<C64> {
        self.offsets.iter().flat_map(|&o| self.path(o)).collect()
    }
}

/// Radial points `(1 − 2^{−k})·ζ`, `k = 1..=m`, inside the Stolz cone at `ζ`.
pub fn stolz_points(zeta: C64, kappa: f64, m: usize) -> Result<Vec<C64>> {
    Ok(StolzApproach::new(zeta, kappa, m, vec![0.0])?.points())
}
