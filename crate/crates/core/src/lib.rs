//! Constructive solvers for Neumann and directional-derivative problems for
//! harmonic and A-harmonic functions on the unit disk and smooth Jordan
//! domains, with boundary data that may violate the boundary condition on
//! finitely many points.

// `!(x > 0.0)` rejects NaN along with nonpositive values; index loops mirror
// the matrix formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod aharmonic;
pub mod beltrami;
pub mod conformal;
pub mod disk_rh;
pub mod error;
pub mod family;
pub mod fft;
pub mod geometry;
pub mod harmonic;
pub mod interp;
pub mod oracle;
pub mod series;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
