//! Built-in data selectors for curves, boundary data, directions and
//! coefficient fields. A selector is `name` or `name:args`; `csv:path` reads
//! a file in the library's CSV formats.

use caplace::beltrami::{cutoff, matrix_of, BeltramiField, Grid, Mat2};
use caplace::geometry::{normal_field, BoundaryData, DirectionField, JordanCurve};
use caplace::{Error, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fs::File;

fn open(path: &str) -> Result<File> {
    File::open(path).map_err(|e| Error::Config(format!("cannot open {path}: {e}")))
}

fn split(spec: &str) -> (&str, &str) {
    spec.split_once(':').unwrap_or((spec, ""))
}

fn numbers(args: &str, want: usize, what: &str) -> Result<Vec<f64>> {
    let v = args
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|e| Error::Config(format!("{what}: {e}")))?;
    if v.len() != want {
        return Err(Error::Config(format!("{what} expects {want} number(s), got {}", v.len())));
    }
    Ok(v)
}

pub fn parse_point(s: &str) -> Result<C64> {
    let v = numbers(s, 2, "point")?;
    Ok(C64::new(v[0], v[1]))
}

/// `circle`, `ellipse:a,b`, `limacon:a`, `csv:path` (columns `x, y`).
pub fn curve(spec: &str, n: usize) -> Result<JordanCurve> {
    match split(spec) {
        ("circle", "") => JordanCurve::unit_circle(n),
        ("ellipse", a) => {
            let v = numbers(a, 2, "ellipse")?;
            JordanCurve::ellipse(v[0], v[1], n)
        }
        ("limacon", a) => JordanCurve::limacon(numbers(a, 1, "limacon")?[0], n),
        ("csv", path) => JordanCurve::read_csv(open(path)?),
        _ => Err(Error::Config(format!("unknown curve selector '{spec}'"))),
    }
}

/// `cos`, `sin`, `cos:k`, `sin:k`, `one`, `zero`, `const:c`, `normal-x`
/// (`⟨n, e₁⟩`, the normal derivative of `x`), `csv:path`.
pub fn data(spec: &str, curve: &JordanCurve) -> Result<BoundaryData> {
    let n = curve.len();
    let harmonic = |k: &str, f: fn(f64) -> f64| -> Result<BoundaryData> {
        let k = if k.is_empty() { 1.0 } else { numbers(k, 1, "mode")?[0] };
        BoundaryData::from_fn(n, move |t| f(k * t))
    };
    match split(spec) {
        ("cos", k) => harmonic(k, f64::cos),
        ("sin", k) => harmonic(k, f64::sin),
        ("one", "") => BoundaryData::constant(n, 1.0),
        ("zero", "") => BoundaryData::constant(n, 0.0),
        ("const", c) => BoundaryData::constant(n, numbers(c, 1, "const")?[0]),
        ("normal-x", "") => BoundaryData::unmasked(curve.normals().iter().map(|v| v.re).collect()),
        ("csv", path) => {
            let d = BoundaryData::read_csv(open(path)?)?;
            if d.len() != n {
                return Err(Error::Config(format!("{path}: {} values for {n} boundary samples", d.len())));
            }
            Ok(d)
        }
        _ => Err(Error::Config(format!("unknown data selector '{spec}'"))),
    }
}

/// `normal`, `rotated:deg` (normal turned by a fixed angle), `const:deg`,
/// `csv:path` (columns `re, im`).
pub fn direction(spec: &str, curve: &JordanCurve) -> Result<DirectionField> {
    match split(spec) {
        ("normal", "") => normal_field(curve),
        ("rotated", d) => {
            let r = C64::from_polar(1.0, numbers(d, 1, "rotation")?[0].to_radians());
            DirectionField::new(curve.normals().iter().map(|v| v * r).collect())
        }
        ("const", d) => DirectionField::constant(curve.len(), C64::from_polar(1.0, numbers(d, 1, "angle")?[0].to_radians())),
        ("csv", path) => {
            let mut rd = csv::Reader::from_reader(open(path)?);
            let mut v = Vec::new();
            for row in rd.records() {
                let row = row?;
                let x: f64 = row
                    .get(0)
                    .unwrap_or("")
                    .trim()
                    .parse()
                    .map_err(|e| Error::Config(format!("{path}: {e}")))?;
                let y: f64 = row
                    .get(1)
                    .unwrap_or("")
                    .trim()
                    .parse()
                    .map_err(|e| Error::Config(format!("{path}: {e}")))?;
                v.push(C64::new(x, y));
            }
            if v.len() != curve.len() {
                return Err(Error::Config(format!("{path}: {} directions for {} samples", v.len(), curve.len())));
            }
            DirectionField::new(v)
        }
        _ => Err(Error::Config(format!("unknown direction selector '{spec}'"))),
    }
}

/// `identity`, `diag:a,b`, `sym:a11,a12,a22` (all constant), or `mu:re,im`.
pub fn matrix(spec: &str) -> Result<Mat2> {
    match split(spec) {
        ("identity", "") => Ok([[1.0, 0.0], [0.0, 1.0]]),
        ("diag", a) => {
            let v = numbers(a, 2, "diag")?;
            Ok([[v[0], 0.0], [0.0, v[1]]])
        }
        ("sym", a) => {
            let v = numbers(a, 3, "sym")?;
            Ok([[v[0], v[1]], [v[1], v[2]]])
        }
        ("mu", m) => matrix_of(parse_point(m)?),
        _ => Err(Error::Config(format!("unknown matrix selector '{spec}'"))),
    }
}

/// Rows `a11, a12, a21, a22`.
pub fn matrices_csv(path: &str) -> Result<Vec<Mat2>> {
    let mut rd = csv::Reader::from_reader(open(path)?);
    let mut v = Vec::new();
    for row in rd.records() {
        let row = row?;
        let x = (0..4)
            .map(|i| row.get(i).unwrap_or("").trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Config(format!("{path}: {e}")))?;
        v.push([[x[0], x[1]], [x[2], x[3]]]);
    }
    Ok(v)
}

/// `zero`, `const:re,im`, `plateau:v` (v inside radius 0.3 with a smooth
/// shoulder to 0.6), `random:k,seed` (smooth random field with sup `k`
/// supported in radius 0.6).
pub fn beltrami(spec: &str, grid: Grid) -> Result<BeltramiField> {
    let r = |z: C64| (z - grid.center).norm();
    match split(spec) {
        ("zero", "") => Ok(BeltramiField::zero(grid)),
        ("const", m) => {
            let m = parse_point(m)?;
            let w = 0.6 * grid.half_width;
            BeltramiField::from_fn(grid, |z| m * cutoff(r(z), 0.5 * w, w))
        }
        ("plateau", v) => {
            let v = numbers(v, 1, "plateau")?[0];
            BeltramiField::from_fn(grid, |z| C64::new(v * cutoff(r(z), 0.3, 0.6), 0.0))
        }
        ("random", a) => {
            let v = numbers(a, 2, "random")?;
            Ok(random_field(grid, v[0], v[1] as u64)?)
        }
        _ => Err(Error::Config(format!("unknown Beltrami selector '{spec}'"))),
    }
}

fn random_field(grid: Grid, k: f64, seed: u64) -> Result<BeltramiField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, C64)> = (0..8)
        .map(|_| {
            (
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)),
            )
        })
        .collect();
    let raw = |z: C64| -> C64 {
        let d = z - grid.center;
        let s: C64 = modes.iter().map(|&(a, b, c)| c * C64::from_polar(1.0, a * d.re + b * d.im)).sum();
        s * cutoff(d.norm(), 0.2, 0.6)
    };
    let sup = grid.points().into_iter().map(|z| raw(z).norm()).fold(0.0, f64::max);
    if !(sup > 0.0) {
        return Ok(BeltramiField::zero(grid));
    }
    BeltramiField::from_fn(grid, |z| raw(z) * (k / sup))
}
