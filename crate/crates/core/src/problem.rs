//! TOML problem and solution files for Gaussian right-hand sides.
//!
//! ```toml
//! schema = "tracesolve-problem/1"
//!
//! [system]
//! particles = 2
//! mu = 1.0
//!
//! [expsum]
//! tol = 1e-3            # or explicit grid parameters: h, k1, k2
//!
//! [[term]]
//! coeff = 1.0
//! center = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]   # optional, default origin
//! qform_scale = 0.5     # multiple of the identity, or
//! # qform_lower = [...] # row-major lower triangle, n(n+1)/2 entries
//! ```
//!
//! Solutions use the same layout with `kind = "solution"`, the kernel
//! `mode`, the grid parameters actually used and every quadratic form
//! written out as `qform_lower`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsum::ExpSum;
use crate::gausscalc::{fit_kernel, GaussianSum, GaussianTerm, KernelMode};
use crate::tspace::SystemDims;

pub const PROBLEM_SCHEMA: &str = "tracesolve-problem/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub particles: usize,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpsumSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub coeff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qform_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qform_lower: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub system: SystemSection,
    #[serde(default)]
    pub expsum: ExpsumSection,
    #[serde(default, rename = "term")]
    pub terms: Vec<TermRecord>,
}

/// A validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub dims: SystemDims,
    pub mu: f64,
    pub rhs: GaussianSum,
    pub expsum: ExpsumSection,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn lower_to_matrix(n: usize, lower: &[f64]) -> Result<DMatrix<f64>> {
    let expected = n * (n + 1) / 2;
    if lower.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: lower.len(),
        });
    }
    let mut a = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in 0..=i {
            a[(i, j)] = lower[k];
            a[(j, i)] = lower[k];
            k += 1;
        }
    }
    Ok(a)
}

fn matrix_to_lower(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in 0..=i {
            out.push(a[(i, j)]);
        }
    }
    out
}

impl TermRecord {
    fn to_term(&self, n: usize) -> Result<GaussianTerm> {
        let center = self.center.clone().unwrap_or_else(|| vec![0.0; n]);
        if center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: center.len(),
            });
        }
        let qform = match (self.qform_scale, &self.qform_lower) {
            (Some(s), None) => DMatrix::identity(n, n) * s,
            (None, Some(lower)) => lower_to_matrix(n, lower)?,
            _ => {
                return Err(invalid(
                    "each term needs exactly one of qform_scale or qform_lower",
                ))
            }
        };
        GaussianTerm::new(self.coeff, center, qform)
    }

    fn from_term(t: &GaussianTerm) -> Self {
        Self {
            coeff: t.coeff(),
            center: Some(t.center().iter().copied().collect()),
            qform_scale: None,
            qform_lower: Some(matrix_to_lower(t.qform())),
        }
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| invalid(format!("problem file: {e}")))?;
        if file.schema != PROBLEM_SCHEMA {
            return Err(invalid(format!(
                "unsupported schema {:?}, expected {PROBLEM_SCHEMA:?}",
                file.schema
            )));
        }
        Ok(file)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid(format!("serializing problem: {e}")))
    }

    pub fn validate(&self) -> Result<Problem> {
        let dims = SystemDims::new(self.system.particles)?;
        let mu = self.system.mu;
        if !(mu.is_finite() && mu > 0.0) {
            return Err(invalid(format!("mu must be positive, got {mu}")));
        }
        let n = dims.n();
        let terms = self
            .terms
            .iter()
            .map(|t| t.to_term(n))
            .collect::<Result<Vec<_>>>()?;
        let e = &self.expsum;
        let grid = e.h.is_some() || e.k1.is_some() || e.k2.is_some();
        match (e.tol, grid) {
            (Some(_), false) => {}
            (None, true) if e.h.is_some() && e.k1.is_some() && e.k2.is_some() => {}
            _ => return Err(invalid("[expsum] needs either tol or all of h, k1, k2")),
        }
        Ok(Problem {
            dims,
            mu,
            rhs: GaussianSum::from_terms(n, terms)?,
            expsum: e.clone(),
        })
    }
}

impl Problem {
    /// The exponential sum for this problem, rescaled to `mu`, and its grid
    /// parameters.
    pub fn kernel_expsum(&self) -> Result<(ExpSum, (f64, i64, i64))> {
        match (
            self.expsum.tol,
            self.expsum.h,
            self.expsum.k1,
            self.expsum.k2,
        ) {
            (Some(tol), ..) => {
                let (sum, s) = fit_kernel(&self.rhs, self.mu, &self.dims, tol)?;
                Ok((sum, (s.h, s.k1, s.k2)))
            }
            (None, Some(h), Some(k1), Some(k2)) => {
                Ok((ExpSum::build(h, k1, k2)?.rescale(self.mu)?, (h, k1, k2)))
            }
            _ => Err(invalid("[expsum] needs either tol or all of h, k1, k2")),
        }
    }
}

/// Serializes a solution in the problem schema.
pub fn solution_file(
    dims: &SystemDims,
    mu: f64,
    mode: KernelMode,
    grid: (f64, i64, i64),
    u: &GaussianSum,
) -> ProblemFile {
    ProblemFile {
        schema: PROBLEM_SCHEMA.to_string(),
        kind: Some("solution".to_string()),
        mode: Some(mode.name().to_string()),
        system: SystemSection {
            particles: dims.particles(),
            mu,
        },
        expsum: ExpsumSection {
            tol: None,
            h: Some(grid.0),
            k1: Some(grid.1),
            k2: Some(grid.2),
        },
        terms: u.terms().iter().map(TermRecord::from_term).collect(),
    }
}
