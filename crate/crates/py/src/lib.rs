//! Python bindings: the `μ ↔ A` dictionary and the disk, Jordan and
//! A-harmonic Neumann solvers on built-in curves.

use caplace::aharmonic::{coefficient_grid, solve_directional_aharmonic, AHarmonicOptions, AHarmonicSolution};
use caplace::beltrami::{matrix_of, mu_of, Mat2};
use caplace::conformal::{solve_directional_jordan, JordanSolution};
use caplace::geometry::{normal_field, BoundaryData, JordanCurve};
use caplace::harmonic::{certify, solve_neumann_disk as neumann_disk, BoundarySolution, HarmonicSolution, LimitOptions, Potential};
use caplace::{Error, C64};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e.root() {
        Error::Convergence { .. } | Error::SeriesTail { .. } | Error::MapQuality(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

enum Inner {
    Disk(Box<HarmonicSolution>),
    Jordan(Box<JordanSolution>),
    AHarmonic(Box<AHarmonicSolution>),
}

impl Inner {
    fn solution(&self) -> &dyn Solved {
        match self {
            Inner::Disk(s) => s.as_ref(),
            Inner::Jordan(s) => s.as_ref(),
            Inner::AHarmonic(s) => s.as_ref(),
        }
    }
}

trait Solved: Potential {
    fn max_residual(&self) -> f64;
}

impl<S: BoundarySolution> Solved for S {
    fn max_residual(&self) -> f64 {
        certify(self, LimitOptions::default(), 0.1).max
    }
}

/// A solved boundary problem.
#[pyclass(name = "Solution", frozen)]
struct PySolution {
    inner: Inner,
}

#[pymethods]
impl PySolution {
    fn value(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.solution().value(C64::new(x, y)).map_err(py_err)
    }

    /// `(u_x, u_y)`.
    fn gradient(&self, x: f64, y: f64) -> PyResult<(f64, f64)> {
        let g = self.inner.solution().gradient(C64::new(x, y)).map_err(py_err)?;
        Ok((g.re, g.im))
    }

    /// Largest certified deviation of the boundary derivative from the data,
    /// 0.1 away from the exceptional points.
    fn residual(&self) -> f64 {
        self.inner.solution().max_residual()
    }
}

#[pyfunction]
fn mu_from_a(a: [[f64; 2]; 2]) -> (f64, f64) {
    let m = mu_of(&a);
    (m.re, m.im)
}

#[pyfunction]
fn a_from_mu(re: f64, im: f64) -> PyResult<Mat2> {
    matrix_of(C64::new(re, im)).map_err(py_err)
}

fn curve_of(name: &str, n: usize) -> PyResult<JordanCurve> {
    let c = match name.split_once(':') {
        None if name == "circle" => JordanCurve::unit_circle(n),
        Some(("limacon", a)) => {
            let a: f64 = a
                .parse()
                .map_err(|_| PyValueError::new_err(format!("bad limacon parameter '{a}'")))?;
            JordanCurve::limacon(a, n)
        }
        _ => return Err(PyValueError::new_err(format!("unknown curve '{name}'"))),
    };
    c.map_err(py_err)
}

/// Neumann problem on the unit disk; `phi` sampled at `θ_j = 2πj/N`.
#[pyfunction]
#[pyo3(signature = (phi, zeta0 = (1.0, 0.0)))]
fn solve_neumann_disk(py: Python<'_>, phi: Vec<f64>, zeta0: (f64, f64)) -> PyResult<PySolution> {
    let phi = BoundaryData::unmasked(phi).map_err(py_err)?;
    let s = py.detach(|| neumann_disk(&phi, C64::new(zeta0.0, zeta0.1))).map_err(py_err)?;
    Ok(PySolution {
        inner: Inner::Disk(Box::new(s)),
    })
}

/// Neumann problem on `circle` or `limacon:a`, data at the curve parameters.
#[pyfunction]
#[pyo3(signature = (curve, phi, zeta0 = (1.0, 0.0)))]
fn solve_neumann_jordan(py: Python<'_>, curve: &str, phi: Vec<f64>, zeta0: (f64, f64)) -> PyResult<PySolution> {
    let curve = curve_of(curve, phi.len())?;
    let phi = BoundaryData::unmasked(phi).map_err(py_err)?;
    let s = py
        .detach(|| {
            let nu = normal_field(&curve)?;
            solve_directional_jordan(&curve, &nu, &phi, C64::new(zeta0.0, zeta0.1))
        })
        .map_err(py_err)?;
    Ok(PySolution {
        inner: Inner::Jordan(Box::new(s)),
    })
}

/// Neumann problem for `div(A∇u) = 0` with constant `A` on a built-in curve.
#[pyfunction]
#[pyo3(signature = (a, curve, phi, zeta0 = (1.0, 0.0), grid_n = 256))]
fn solve_neumann_aharmonic(py: Python<'_>, a: Mat2, curve: &str, phi: Vec<f64>, zeta0: (f64, f64), grid_n: usize) -> PyResult<PySolution> {
    let curve = curve_of(curve, phi.len())?;
    let phi = BoundaryData::unmasked(phi).map_err(py_err)?;
    let s = py
        .detach(|| {
            let opts = AHarmonicOptions {
                grid_n,
                ..Default::default()
            };
            let field = coefficient_grid(&curve, &opts, 0.5, |_| a)?;
            let nu = normal_field(&curve)?;
            solve_directional_aharmonic(&field, &curve, &nu, &phi, C64::new(zeta0.0, zeta0.1), &opts)
        })
        .map_err(py_err)?;
    Ok(PySolution {
        inner: Inner::AHarmonic(Box::new(s)),
    })
}

#[pymodule]
fn caplace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(mu_from_a, m)?)?;
    m.add_function(wrap_pyfunction!(a_from_mu, m)?)?;
    m.add_function(wrap_pyfunction!(solve_neumann_disk, m)?)?;
    m.add_function(wrap_pyfunction!(solve_neumann_jordan, m)?)?;
    m.add_function(wrap_pyfunction!(solve_neumann_aharmonic, m)?)?;
    Ok(())
}
