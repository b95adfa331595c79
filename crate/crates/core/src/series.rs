//! Analytic functions on the unit disk: a truncated Taylor series plus
//! closed-form terms singular at single boundary points.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub const DEFAULT_R_MAX: f64 = 1.0 - 1.0 / 16384.0;
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

/// `γ / (1 − conj(ζ₀)·z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corrector {
    pub zeta0: C64,
    pub gamma: C64,
}

impl Corrector {
    pub fn eval(&self, z: C64) -> C64 {
        self.gamma / (1.0 - self.zeta0.conj() * z)
    }
}

/// `β · log(1 − conj(ζ₀)·z)`, principal branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTerm {
    pub zeta0: C64,
    pub beta: C64,
}

impl LogTerm {
    pub fn eval(&self, z: C64) -> C64 {
        self.beta * (1.0 - self.zeta0.conj() * z).ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticRep {
    coeffs: Vec<C64>,
    correctors: Vec<Corrector>,
    log_terms: Vec<LogTerm>,
    r_max: f64,
    tail_tol: f64,
}

impl AnalyticRep {
    pub fn from_coeffs(coeffs: Vec<C64>) -> Self {
        AnalyticRep {
            coeffs,
            correctors: Vec::new(),
            log_terms: Vec::new(),
            r_max: DEFAULT_R_MAX,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }

    pub fn zero() -> Self {
        Self::from_coeffs(vec![C64::new(0.0, 0.0)])
    }

    pub fn with_corrector(mut self, c: Corrector) -> Result<Self> {
        check_unimodular(c.zeta0)?;
        self.correctors.push(c);
        Ok(self)
    }

    pub fn with_log_term(mut self, l: LogTerm) -> Result<Self> {
        check_unimodular(l.zeta0)?;
        self.log_terms.push(l);
        Ok(self)
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        self
    }

    pub fn with_tail_tol(mut self, tol: f64) -> Self {
        self.tail_tol = tol;
        self
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn correctors(&self) -> &[Corrector] {
        &self.correctors
    }

    pub fn log_terms(&self) -> &[LogTerm] {
        &self.log_terms
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Boundary points where a closed-form term is singular.
    pub fn singular_points(&self) -> Vec<C64> {
        let mut v: Vec<C64> = self.correctors.iter().map(|c| c.zeta0).collect();
        v.extend(self.log_terms.iter().map(|l| l.zeta0));
        v
    }

    /// Value at `z`, refusing points beyond `r_max` or where the series
    /// tail bound exceeds the tolerance.
    pub fn eval(&self, z: C64) -> Result<C64> {
        let r = z.norm();
        if r > self.r_max {
            return Err(Error::Domain(format!("|z| = {r} exceeds the evaluation radius {}", self.r_max)));
        }
        self.check_tail(r)?;
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn check_tail(&self, r: f64) -> Result<()> {
        if let Some(last) = self.coeffs.last() {
            let k = self.coeffs.len() - 1;
            let tail = last.norm() * r.powi(k as i32);
            if tail > self.tail_tol {
                return Err(Error::SeriesTail {
                    tail,
                    tol: self.tail_tol,
                    radius: r,
                });
            }
        }
        Ok(())
    }

    /// Evaluation without guards; boundary values of the series part when `|z| = 1`.
    pub fn eval_unchecked(&self, z: C64) -> C64 {
        let mut v = horner(&self.coeffs, z);
        for c in &self.correctors {
            v += c.eval(z);
        }
        for l in &self.log_terms {
            v += l.eval(z);
        }
        v
    }

    /// Indefinite integral vanishing at the origin.
    ///
    /// Poles integrate to log terms; log terms have no closed-form antiderivative here.
    pub fn integrate(&self) -> Result<AnalyticRep> {
        if !self.log_terms.is_empty() {
            return Err(Error::Domain(
                "cannot integrate a representation that already carries log terms".into(),
            ));
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(C64::new(0.0, 0.0));
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / (k as f64 + 1.0));
        }
        let log_terms = self
            .correctors
            .iter()
            .map(|c| LogTerm {
                zeta0: c.zeta0,
                beta: -c.gamma * c.zeta0,
            })
            .collect();
        Ok(AnalyticRep {
            coeffs,
            correctors: Vec::new(),
            log_terms,
            r_max: self.r_max,
            tail_tol: self.tail_tol,
        })
    }

    /// Product with an analytic function given by Taylor coefficients `q`.
    ///
    /// The series part is truncated to `max(len, q.len())` terms. A pole
    /// `γ/(1 − ζ̄₀z)` times `q` splits into `γq(ζ₀)/(1 − ζ̄₀z)` plus the analytic
    /// remainder `−γ Σ_j T_j z^j`, `T_j = Σ_{k>j} q_k ζ₀^{k−j}`.
    pub fn mul_series(&self, q: &[C64]) -> Result<AnalyticRep> {
        if !self.log_terms.is_empty() {
            return Err(Error::Domain("log terms cannot be multiplied".into()));
        }
        let k = self.coeffs.len().max(q.len());
        let mut coeffs = vec![C64::new(0.0, 0.0); k];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in q.iter().enumerate().take(k - i) {
                coeffs[i + j] += a * b;
            }
        }
        let mut correctors = Vec::with_capacity(self.correctors.len());
        for c in &self.correctors {
            let z0 = c.zeta0;
            correctors.push(Corrector {
                zeta0: z0,
                gamma: c.gamma * horner(q, z0),
            });
            let mut t = C64::new(0.0, 0.0);
            for j in (0..q.len().saturating_sub(1)).rev() {
                t = z0 * (q[j + 1] + t);
                if j < k {
                    coeffs[j] -= c.gamma * t;
                }
            }
        }
        Ok(AnalyticRep {
            coeffs,
            correctors,
            log_terms: Vec::new(),
            r_max: self.r_max,
            tail_tol: self.tail_tol,
        })
    }

    pub fn add(&self, other: &AnalyticRep) -> AnalyticRep {
        let k = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![C64::new(0.0, 0.0); k];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        let mut correctors = self.correctors.clone();
        correctors.extend_from_slice(&other.correctors);
        let mut log_terms = self.log_terms.clone();
        log_terms.extend_from_slice(&other.log_terms);
        AnalyticRep {
            coeffs,
            correctors,
            log_terms,
            r_max: self.r_max.min(other.r_max),
            tail_tol: self.tail_tol.max(other.tail_tol),
        }
    }

    pub fn scale(&self, s: C64) -> AnalyticRep {
        AnalyticRep {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            correctors: self
                .correctors
                .iter()
                .map(|c| Corrector {
                    zeta0: c.zeta0,
                    gamma: c.gamma * s,
                })
                .collect(),
            log_terms: self
                .log_terms
                .iter()
                .map(|l| LogTerm {
                    zeta0: l.zeta0,
                    beta: l.beta * s,
                })
                .collect(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&AnalyticRepJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: AnalyticRepJson = serde_json::from_str(s)?;
        j.try_into()
    }
}

pub(crate) fn horner(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, a| acc * z + a)
}

/// Taylor coefficients of the derivative.
pub(crate) fn derivative_coeffs(c: &[C64]) -> Vec<C64> {
    if c.len() <= 1 {
        return vec![C64::new(0.0, 0.0)];
    }
    c.iter().enumerate().skip(1).map(|(k, a)| a * k as f64).collect()
}

fn check_unimodular(z: C64) -> Result<()> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("|ζ₀| = {} is not 1", z.norm())));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct CorrectorJson {
    zeta0: [f64; 2],
    gamma: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct LogTermJson {
    zeta0: [f64; 2],
    beta: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct AnalyticRepJson {
    coeffs: Vec<[f64; 2]>,
    correctors: Vec<CorrectorJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    log_terms: Vec<LogTermJson>,
    r_max: f64,
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn cplx(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

impl From<&AnalyticRep> for AnalyticRepJson {
    fn from(a: &AnalyticRep) -> Self {
        AnalyticRepJson {
            coeffs: a.coeffs.iter().map(|&c| pair(c)).collect(),
            correctors: a
                .correctors
                .iter()
                .map(|c| CorrectorJson {
                    zeta0: pair(c.zeta0),
                    gamma: pair(c.gamma),
                })
                .collect(),
            log_terms: a
                .log_terms
                .iter()
                .map(|l| LogTermJson {
                    zeta0: pair(l.zeta0),
                    beta: pair(l.beta),
                })
                .collect(),
            r_max: a.r_max,
        }
    }
}

impl TryFrom<AnalyticRepJson> for AnalyticRep {
    type Error = Error;

    fn try_from(j: AnalyticRepJson) -> Result<Self> {
        let mut a = AnalyticRep::from_coeffs(j.coeffs.into_iter().map(cplx).collect()).with_r_max(j.r_max);
        for c in j.correctors {
            a = a.with_corrector(Corrector {
                zeta0: cplx(c.zeta0),
                gamma: cplx(c.gamma),
            })?;
        }
        for l in j.log_terms {
            a = a.with_log_term(LogTerm {
                zeta0: cplx(l.zeta0),
                beta: cplx(l.beta),
            })?;
        }
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn integrate_monomials_and_pole() {
        let one = AnalyticRep::from_coeffs(vec![c(1.0, 0.0)]).integrate().unwrap();
        assert_eq!(one.coeffs(), &[c(0.0, 0.0), c(1.0, 0.0)]);
        let z = AnalyticRep::from_coeffs(vec![c(0.0, 0.0), c(1.0, 0.0)]).integrate().unwrap();
        assert_eq!(z.coeffs()[2], c(0.5, 0.0));

        // 2/(1−z) integrates to −2 log(1−z); check by central differences
        let f = AnalyticRep::zero()
            .with_corrector(Corrector {
                zeta0: c(1.0, 0.0),
                gamma: c(2.0, 0.0),
            })
            .unwrap();
        let big_f = f.integrate().unwrap();
        assert_eq!(big_f.log_terms()[0].beta, c(-2.0, 0.0));
        let p = c(0.3, -0.4);
        let h = 1e-5;
        let d = (big_f.eval(p + h).unwrap() - big_f.eval(p - h).unwrap()) / (2.0 * h);
        assert!((d - f.eval(p).unwrap()).norm() < 1e-8);
        assert!(big_f.eval(c(0.0, 0.0)).unwrap().norm() < 1e-16);
    }

    #[test]
    fn pole_times_series_matches_pointwise_product() {
        let z0 = C64::from_polar(1.0, 0.9);
        let mut a = vec![c(0.2, 0.1), c(-0.3, 0.0), c(0.05, 0.02)];
        a.resize(16, c(0.0, 0.0));
        let f = AnalyticRep::from_coeffs(a)
            .with_corrector(Corrector {
                zeta0: z0,
                gamma: c(0.7, -1.1),
            })
            .unwrap();
        let mut q = vec![c(1.0, 0.5), c(0.3, 0.0), c(0.0, -0.2), c(0.01, 0.0)];
        q.resize(16, c(0.0, 0.0));
        let g = f.mul_series(&q).unwrap();
        for p in [c(0.1, 0.2), c(-0.5, 0.6), z0 * 0.95] {
            let expect = f.eval(p).unwrap() * horner(&q, p);
            assert!((g.eval(p).unwrap() - expect).norm() < 1e-12, "{p}");
        }
    }

    #[test]
    fn guards_refuse() {
        let f = AnalyticRep::from_coeffs(vec![c(1.0, 0.0); 64]);
        assert!(matches!(f.eval(c(0.999, 0.0)), Err(Error::SeriesTail { .. })));
        assert!(matches!(f.eval(c(0.99999, 0.0)), Err(Error::Domain(_))));
        assert!(f.eval(c(0.1, 0.0)).is_ok());
        assert!(AnalyticRep::zero()
            .with_corrector(Corrector {
                zeta0: c(0.5, 0.0),
                gamma: c(1.0, 0.0)
            })
            .is_err());
    }

    #[test]
    fn json_shape() {
        let f = AnalyticRep::from_coeffs(vec![c(1.0, 2.0)])
            .with_corrector(Corrector {
                zeta0: c(0.0, 1.0),
                gamma: c(3.0, 0.0),
            })
            .unwrap();
        let s = f.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["coeffs"][0][1], 2.0);
        assert_eq!(v["correctors"][0]["zeta0"][1], 1.0);
        assert!(v.get("log_terms").is_none());
        assert_eq!(AnalyticRep::from_json(&s).unwrap(), f);
    }
}
