//! Closed-form solves for right-hand sides that are finite sums of shifted
//! anisotropic Gaussians.
//!
//! With the symmetric transform convention `f^(w) = (2 pi)^{-d/2} \int f(y) e^{-i w.y} dy`
//! the term `c exp(-(y-y0)' A (y-y0))` has the transform
//!
//! ```text
//! c 2^{-d/2} det(A)^{-1/2} exp(-w' B w) e^{-i w.y0},   B = A^{-1} / 4.
//! ```
//!
//! A kernel factor `a e^{-b mu} exp(-b w' S w)` only changes `B` to `B + b S`,
//! so applying an exponential-sum resolvent maps every term to a new Gaussian
//! with the same center, quadratic form `(A^{-1} + 4 b S)^{-1}` and
//! coefficient `c a e^{-b mu} (det B / det(B + b S))^{1/2}`. Here `S = I` for
//! the decoupled kernel `1/(mu + |w|^2)` and `S = T T'` for the kernel
//! `1/(mu + |T' w|^2)` of the degenerate operator.
//!
//! The phase factor never has to be materialized: the kernels act on the
//! quadratic form only and commute with shifts.

use std::cmp::Ordering;
use std::collections::HashSet;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::expsum::{fit_interval, ExpSum, Suggestion};
use crate::tspace::{Permutation, PermutationAction, SystemDims};

/// Default bound on the number of terms a solve may create.
pub const DEFAULT_TERM_BUDGET: usize = 100_000;

/// Centers and quadratic forms closer than this (max-norm) are merged.
pub const MERGE_TOL: f64 = 1e-12;

/// `e^{-37} < 1e-16`: Fourier mass beyond this exponent is irrelevant in
/// double precision.
const MASS_EXPONENT: f64 = 37.0;

/// Largest particle count for which the full symmetric group is generated.
pub const MAX_FULL_GROUP_PARTICLES: usize = 5;

/// `coeff * exp(-(y - center)' qform (y - center))`.
#[derive(Debug, Clone)]
pub struct GaussianTerm {
    coeff: f64,
    center: DVector<f64>,
    qform: DMatrix<f64>,
    /// Lower Cholesky factor of `qform`.
    factor: DMatrix<f64>,
}

impl PartialEq for GaussianTerm {
    fn eq(&self, other: &Self) -> bool {
        self.coeff == other.coeff && self.center == other.center && self.qform == other.qform
    }
}

fn cholesky(a: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite)
}

fn ln_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|v| v.ln())
        .sum::<f64>()
}

fn symmetrized(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

impl GaussianTerm {
    /// Validates that `qform` is square, symmetric (to `1e-12` relative) and
    /// positive definite.
    pub fn new(coeff: f64, center: Vec<f64>, qform: DMatrix<f64>) -> Result<Self> {
        let d = center.len();
        if qform.nrows() != d || qform.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: qform.nrows(),
            });
        }
        if !coeff.is_finite() || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "non-finite coefficient or center".into(),
            ));
        }
        let scale = qform.amax();
        if !(scale.is_finite()) || (&qform - qform.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidInput(
                "quadratic form is not symmetric".into(),
            ));
        }
        Self::from_parts(coeff, DVector::from_vec(center), symmetrized(&qform))
    }

    /// `coeff * exp(-scale |y - center|^2)`.
    pub fn isotropic(coeff: f64, center: Vec<f64>, scale: f64) -> Result<Self> {
        let d = center.len();
        Self::new(coeff, center, DMatrix::identity(d, d) * scale)
    }

    fn from_parts(coeff: f64, center: DVector<f64>, qform: DMatrix<f64>) -> Result<Self> {
        let factor = cholesky(&qform)?.unpack();
        Ok(Self {
            coeff,
            center,
            qform,
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn qform(&self) -> &DMatrix<f64> {
        &self.qform
    }

    /// The same Gaussian with coefficient `coeff`.
    pub fn with_coeff(&self, coeff: f64) -> Self {
        Self {
            coeff,
            ..self.clone()
        }
    }

    /// `(y - center)' qform (y - center)`, as `|L'(y - center)|^2`.
    pub fn exponent(&self, y: &[f64]) -> Result<f64> {
        check_len(self.dim(), y.len())?;
        let d = self.dim();
        let diff: Vec<f64> = y
            .iter()
            .zip(self.center.iter())
            .map(|(a, b)| a - b)
            .collect();
        let mut sum = 0.0;
        for j in 0..d {
            let v: f64 = (j..d).map(|i| self.factor[(i, j)] * diff[i]).sum();
            sum += v * v;
        }
        Ok(sum)
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        Ok(self.coeff * (-self.exponent(y)?).exp())
    }

    /// Laplacian `(4 |A(y - c)|^2 - 2 tr A) g(y)`.
    pub fn laplacian(&self, y: &[f64]) -> Result<f64> {
        check_len(self.dim(), y.len())?;
        let diff = DVector::from_iterator(
            self.dim(),
            y.iter().zip(self.center.iter()).map(|(a, b)| a - b),
        );
        let grad = &self.qform * &diff;
        let g = self.eval(y)?;
        Ok((4.0 * grad.norm_squared() - 2.0 * self.qform.trace()) * g)
    }

    /// Largest eigenvalue of the quadratic form.
    pub fn max_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.qform.clone()).eigenvalues.max()
    }
}

/// A term in frequency space:
/// `coeff * exp(-w' qform w) * e^{-i w.shift}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierGaussian {
    pub coeff: f64,
    pub shift: DVector<f64>,
    pub qform: DMatrix<f64>,
}

impl FourierGaussian {
    /// Real and imaginary part at `w`.
    pub fn eval(&self, w: &[f64]) -> Result<(f64, f64)> {
        check_len(self.shift.len(), w.len())?;
        let wv = DVector::from_column_slice(w);
        let modulus = self.coeff * (-(wv.transpose() * &self.qform * &wv)[(0, 0)]).exp();
        let phase = -wv.dot(&self.shift);
        Ok((modulus * phase.cos(), modulus * phase.sin()))
    }
}

/// The transform `c 2^{-d/2} det(A)^{-1/2} exp(-w' A^{-1}/4 w) e^{-i w.c0}`.
pub fn fourier(t: &GaussianTerm) -> Result<FourierGaussian> {
    let d = t.dim();
    let chol = cholesky(&t.qform)?;
    let log_scale = -0.5 * d as f64 * 2f64.ln() - 0.5 * ln_det(&chol);
    Ok(FourierGaussian {
        coeff: t.coeff * log_scale.exp(),
        shift: t.center.clone(),
        qform: symmetrized(&(chol.inverse() * 0.25)),
    })
}

/// Inverse of [`fourier`]; the same formula with the roles of the two
/// quadratic forms exchanged.
pub fn inverse_fourier(g: &FourierGaussian) -> Result<GaussianTerm> {
    let d = g.shift.len();
    if g.qform.nrows() != d || g.qform.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: g.qform.nrows(),
        });
    }
    let chol = cholesky(&symmetrized(&g.qform))?;
    let log_scale = -0.5 * d as f64 * 2f64.ln() - 0.5 * ln_det(&chol);
    GaussianTerm::from_parts(
        g.coeff * log_scale.exp(),
        g.shift.clone(),
        symmetrized(&(chol.inverse() * 0.25)),
    )
}

/// A finite sum of Gaussians on `R^dim`; the empty sum is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSum {
    dim: usize,
    terms: Vec<GaussianTerm>,
}

impl GaussianSum {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(dim: usize, terms: Vec<GaussianTerm>) -> Result<Self> {
        for t in &terms {
            check_len(dim, t.dim())?;
        }
        Ok(Self { dim, terms })
    }

    pub fn push(&mut self, term: GaussianTerm) -> Result<()> {
        check_len(self.dim, term.dim())?;
        self.terms.push(term);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        check_len(self.dim, y.len())?;
        self.terms.iter().map(|t| t.eval(y)).sum()
    }

    pub fn laplacian(&self, y: &[f64]) -> Result<f64> {
        check_len(self.dim, y.len())?;
        self.terms.iter().map(|t| t.laplacian(y)).sum()
    }

    /// `alpha * self`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| t.with_coeff(alpha * t.coeff))
                .collect(),
        }
    }

    /// `self + other`, merged.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        check_len(self.dim, other.dim)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            dim: self.dim,
            terms: compress(terms),
        })
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).fold(0.0, f64::max)
    }

    /// Puts the terms in canonical order and merges duplicates.
    pub fn compressed(&self) -> Self {
        Self {
            dim: self.dim,
            terms: compress(self.terms.clone()),
        }
    }
}

fn lex_cmp(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> Ordering {
    for (x, y) in a.zip(b) {
        match x.total_cmp(&y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

fn canonical_cmp(a: &GaussianTerm, b: &GaussianTerm) -> Ordering {
    lex_cmp(a.center.iter().copied(), b.center.iter().copied())
        .then_with(|| lex_cmp(a.qform.iter().copied(), b.qform.iter().copied()))
        .then_with(|| a.coeff.total_cmp(&b.coeff))
}

fn mergeable(a: &GaussianTerm, b: &GaussianTerm) -> bool {
    (&a.center - &b.center).amax() <= MERGE_TOL && (&a.qform - &b.qform).amax() <= MERGE_TOL
}

/// Sorts terms canonically, adds the coefficients of terms whose centers and
/// quadratic forms agree within [`MERGE_TOL`], and drops terms that cancel.
fn compress(mut terms: Vec<GaussianTerm>) -> Vec<GaussianTerm> {
    terms.sort_by(canonical_cmp);
    let mut out: Vec<(GaussianTerm, f64)> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.last_mut() {
            Some((last, mass)) if mergeable(last, &t) => {
                last.coeff += t.coeff;
                *mass += t.coeff.abs();
            }
            _ => {
                let mass = t.coeff.abs();
                out.push((t, mass));
            }
        }
    }
    out.into_iter()
        .filter(|(t, mass)| t.coeff.abs() > 4.0 * f64::EPSILON * mass)
        .map(|(t, _)| t)
        .collect()
}

/// Which resolvent kernel a solve applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelMode {
    /// `1/(mu + |w|^2)`: the screened Laplacian on the full space.
    Decoupled,
    /// `1/(mu + |T' w|^2)`: the degenerate operator whose traces solve the
    /// particle equation.
    Operator,
}

impl KernelMode {
    pub fn name(&self) -> &'static str {
        match self {
            KernelMode::Decoupled => "decoupled",
            KernelMode::Operator => "operator",
        }
    }
}

/// A resolvent kernel with `1/r` replaced by an exponential sum.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub mode: KernelMode,
    pub mu: f64,
    pub expsum: ExpSum,
}

impl KernelSpec {
    pub fn new(mode: KernelMode, mu: f64, expsum: ExpSum) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidInput(format!(
                "mu must be positive, got {mu}"
            )));
        }
        Ok(Self { mode, mu, expsum })
    }
}

/// Radius `Lambda` such that the Fourier mass of every term of `f` with
/// `|w|^2 > Lambda` is below `1e-16`.
///
/// For `exp(-w' B w)` the variable `2 lambda_min(B) |w|^2` is dominated by a
/// chi-square variable with `d` degrees of freedom, whose tail beyond
/// `d + 2 sqrt(d x) + 2 x` is below `e^{-x}`. With `lambda_min(B) = 1/(4 lambda_max(A))`
/// this gives `Lambda = 2 lambda_max(A) (d + 2 sqrt(37 d) + 74)`.
pub fn kernel_band(f: &GaussianSum) -> f64 {
    let d = f.dim() as f64;
    let chi = d + 2.0 * (MASS_EXPONENT * d).sqrt() + 2.0 * MASS_EXPONENT;
    f.terms
        .iter()
        .map(|t| 2.0 * t.max_eigenvalue() * chi)
        .fold(0.0, f64::max)
}

/// Interval `[mu, mu + Lambda max(1, |T'|^2)]` of kernel arguments that a
/// solve of `f` can see.
pub fn kernel_interval(f: &GaussianSum, mu: f64, dims: &SystemDims) -> (f64, f64) {
    let stretch = dims.tt_norm().powi(2).max(1.0);
    let hi = mu + kernel_band(f) * stretch;
    (mu, hi.max(2.0 * mu))
}

/// Exponential sum for `1/r` certified to relative accuracy `tol` on
/// [`kernel_interval`].
pub fn fit_kernel(
    f: &GaussianSum,
    mu: f64,
    dims: &SystemDims,
    tol: f64,
) -> Result<(ExpSum, Suggestion)> {
    let (lo, hi) = kernel_interval(f, mu, dims);
    fit_interval(lo, hi, tol)
}

/// Applies `a e^{-b mu} exp(-b w' S w)` for every kernel term to every term
/// of `f` and merges the result.
fn apply_fourier_multiplier(
    f: &GaussianSum,
    kernel: &[(f64, f64)],
    s: &DMatrix<f64>,
    budget: usize,
) -> Result<GaussianSum> {
    let total = f.len().saturating_mul(kernel.len());
    if total > budget {
        return Err(Error::Capacity(format!(
            "solve would create {total} terms, budget is {budget}"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..f.len())
        .flat_map(|i| (0..kernel.len()).map(move |k| (i, k)))
        .collect();
    let inverses: Vec<(DMatrix<f64>, f64)> = f
        .terms
        .par_iter()
        .map(|t| {
            let chol = cholesky(&t.qform)?;
            Ok((symmetrized(&chol.inverse()), -ln_det(&chol)))
        })
        .collect::<Result<_>>()?;
    let terms: Vec<GaussianTerm> = pairs
        .par_iter()
        .map(|&(i, k)| {
            let t = &f.terms[i];
            let (a_inv, ln_det_inv) = &inverses[i];
            let (weight, rate) = kernel[k];
            let widened = a_inv + s * (4.0 * rate);
            let chol = cholesky(&widened)?;
            let ratio = 0.5 * (ln_det_inv - ln_det(&chol));
            GaussianTerm::from_parts(
                t.coeff * weight * ratio.exp(),
                t.center.clone(),
                symmetrized(&chol.inverse()),
            )
        })
        .collect::<Result<_>>()?;
    Ok(GaussianSum {
        dim: f.dim,
        terms: compress(terms),
    })
}

fn kernel_terms(kernel: &KernelSpec) -> Vec<(f64, f64)> {
    kernel
        .expsum
        .terms()
        .iter()
        .map(|t| (t.weight * (-t.rate * kernel.mu).exp(), t.rate))
        .collect()
}

/// Solves `(mu - Delta) U = f` on `R^d` with the exponential-sum kernel,
/// for any dimension `d` (no particle structure needed).
pub fn apply_decoupled(f: &GaussianSum, kernel: &KernelSpec) -> Result<GaussianSum> {
    let s = DMatrix::identity(f.dim, f.dim);
    apply_fourier_multiplier(f, &kernel_terms(kernel), &s, DEFAULT_TERM_BUDGET)
}

/// [`apply_screened_inverse_with_budget`] with [`DEFAULT_TERM_BUDGET`].
pub fn apply_screened_inverse(
    f: &GaussianSum,
    kernel: &KernelSpec,
    dims: &SystemDims,
) -> Result<GaussianSum> {
    apply_screened_inverse_with_budget(f, kernel, dims, DEFAULT_TERM_BUDGET)
}

/// Multiplies the transform of `f` (a sum on `R^n`) by the kernel of
/// `kernel.mode` and transforms back.
pub fn apply_screened_inverse_with_budget(
    f: &GaussianSum,
    kernel: &KernelSpec,
    dims: &SystemDims,
    budget: usize,
) -> Result<GaussianSum> {
    check_len(dims.n(), f.dim)?;
    let s = match kernel.mode {
        KernelMode::Decoupled => DMatrix::identity(f.dim, f.dim),
        KernelMode::Operator => dims.t_tt(),
    };
    apply_fourier_multiplier(f, &kernel_terms(kernel), &s, budget)
}

/// Convolution with the order-zero mollifier at scale `eps`, i.e. the
/// Fourier multiplier `exp(-eps^2 |w|^2 / 2)`.
pub fn smooth_gaussian(f: &GaussianSum, eps: f64) -> Result<GaussianSum> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "scale must be positive, got {eps}"
        )));
    }
    let s = DMatrix::identity(f.dim, f.dim);
    apply_fourier_multiplier(f, &[(1.0, 0.5 * eps * eps)], &s, DEFAULT_TERM_BUDGET)
}

/// `U(T x)` at a particle configuration `x`.
pub fn eval_trace(u: &GaussianSum, dims: &SystemDims, x: &[f64]) -> Result<f64> {
    check_len(dims.n(), u.dim)?;
    u.eval(&dims.apply_t(x)?)
}

/// The trace `x -> U(T x)` written as a Gaussian sum on `R^m`: each term
/// gets the form `M = T' A T`, center `x0 = M^{-1} T' A c` and its coefficient
/// multiplied by `exp(-(T x0 - c)' A (T x0 - c))`.
pub fn materialize_trace(u: &GaussianSum, dims: &SystemDims) -> Result<GaussianSum> {
    check_len(dims.n(), u.dim)?;
    let t = dims.dense_t();
    let terms = u
        .terms
        .par_iter()
        .map(|term| {
            let at = &term.qform * &t;
            let m = symmetrized(&(t.transpose() * &at));
            let chol = cholesky(&m)?;
            let x0 = chol.solve(&(at.transpose() * &term.center));
            let tx0 = &t * &x0;
            let offset = term.exponent(tx0.as_slice())?;
            GaussianTerm::from_parts(term.coeff * (-offset).exp(), x0, m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GaussianSum {
        dim: dims.m(),
        terms,
    })
}

/// `count` points in `R^dim` with independent `N(0, scale^2)` coordinates,
/// reproducible from `seed`.
pub fn sample_points(dim: usize, count: usize, scale: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..dim)
                .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect()
        })
        .collect()
}

/// `Delta_x U(T x)` through the materialized trace.
pub fn laplacian_trace(u: &GaussianSum, dims: &SystemDims, x: &[f64]) -> Result<f64> {
    materialize_trace(u, dims)?.laplacian(x)
}

/// `sup_x |-Delta u + mu u - f| / max(1, sup_x |f|)` over `points`, with `u`
/// and `f` the traces of `u_sum` and `f_sum`.
pub fn residual(
    f_sum: &GaussianSum,
    u_sum: &GaussianSum,
    mu: f64,
    dims: &SystemDims,
    points: &[Vec<f64>],
) -> Result<f64> {
    let f = materialize_trace(f_sum, dims)?;
    let u = materialize_trace(u_sum, dims)?;
    let mut worst: f64 = 0.0;
    let mut f_sup: f64 = 0.0;
    for x in points {
        let fx = f.eval(x)?;
        let r = -u.laplacian(x)? + mu * u.eval(x)? - fx;
        worst = worst.max(r.abs());
        f_sup = f_sup.max(fx.abs());
    }
    Ok(worst / f_sup.max(1.0))
}

/// Pointwise comparison of the operator solution `U` and the decoupled
/// solution `U~` built from the same exponential sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub max_rel_dev: f64,
    pub per_point: Vec<f64>,
    pub operator: GaussianSum,
    pub decoupled: GaussianSum,
}

/// Solves with both kernels and reports `|U - U~| / max(|U|, floor)` at
/// `points` in `R^n`, where `floor = 1e-12` times the largest coefficient.
pub fn compare_u_utilde(
    f: &GaussianSum,
    mu: f64,
    dims: &SystemDims,
    expsum: &ExpSum,
    points: &[Vec<f64>],
) -> Result<Comparison> {
    let op = apply_screened_inverse(
        f,
        &KernelSpec::new(KernelMode::Operator, mu, expsum.clone())?,
        dims,
    )?;
    let dec = apply_screened_inverse(
        f,
        &KernelSpec::new(KernelMode::Decoupled, mu, expsum.clone())?,
        dims,
    )?;
    let floor = 1e-12 * op.max_abs_coeff().max(dec.max_abs_coeff());
    let per_point = points
        .iter()
        .map(|y| {
            let u = op.eval(y)?;
            let v = dec.eval(y)?;
            Ok((u - v).abs() / u.abs().max(floor).max(f64::MIN_POSITIVE))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        max_rel_dev: per_point.iter().copied().fold(0.0, f64::max),
        per_point,
        operator: op,
        decoupled: dec,
    })
}

/// All `N!` permutations of the particles; refused beyond
/// [`MAX_FULL_GROUP_PARTICLES`].
pub fn symmetric_group(dims: &SystemDims) -> Result<Vec<Permutation>> {
    let n = dims.particles();
    if n > MAX_FULL_GROUP_PARTICLES {
        return Err(Error::Capacity(format!(
            "full symmetric group of {n} particles is not generated (limit {MAX_FULL_GROUP_PARTICLES})"
        )));
    }
    Ok(Permutation::all(n))
}

fn check_group(dims: &SystemDims, group: &[Permutation]) -> Result<()> {
    if group.is_empty() {
        return Err(Error::InvalidInput("group must not be empty".into()));
    }
    let mut members = HashSet::new();
    for g in group {
        check_len(dims.particles(), g.len())?;
        if !members.insert(g.images().to_vec()) {
            return Err(Error::InvalidInput(
                "group lists a permutation twice".into(),
            ));
        }
    }
    for a in group {
        for b in group {
            if !members.contains(a.compose(b).images()) {
                return Err(Error::InvalidInput(
                    "permutations are not closed under composition".into(),
                ));
            }
        }
    }
    Ok(())
}

/// `U(Q y)` as a Gaussian sum: centers `Q' c` and forms `Q' A Q`.
pub fn transport(f: &GaussianSum, action: &PermutationAction) -> Result<GaussianSum> {
    check_len(action.dims().n(), f.dim)?;
    let q = action.dense_q();
    let terms = f
        .terms
        .iter()
        .map(|t| {
            let center = q.transpose() * &t.center;
            let qform = symmetrized(&(q.transpose() * &t.qform * &q));
            GaussianTerm::from_parts(t.coeff, center, qform)
        })
        .collect::<Result<_>>()?;
    Ok(GaussianSum { dim: f.dim, terms })
}

/// Signed group average `|G|^{-1} sum_g sign(g) U(Q_g y)`. The group must be
/// closed under composition.
pub fn antisymmetrize(
    f: &GaussianSum,
    dims: &SystemDims,
    group: &[Permutation],
) -> Result<GaussianSum> {
    check_len(dims.n(), f.dim)?;
    check_group(dims, group)?;
    let total = f.len().saturating_mul(group.len());
    if total > DEFAULT_TERM_BUDGET {
        return Err(Error::Capacity(format!(
            "antisymmetrization would create {total} terms, budget is {DEFAULT_TERM_BUDGET}"
        )));
    }
    let weight = 1.0 / group.len() as f64;
    let mut terms = Vec::with_capacity(total);
    for g in group {
        let action = PermutationAction::new(*dims, g.clone())?;
        let sign = action.sign() as f64;
        terms.extend(
            transport(f, &action)?
                .terms
                .into_iter()
                .map(|t| t.with_coeff(sign * weight * t.coeff)),
        );
    }
    Ok(GaussianSum {
        dim: f.dim,
        terms: compress(terms),
    })
}

/// `max |U(Q_g y) - sign(g) U(y)|` over the given group elements and points.
pub fn antisymmetry_defect(
    u: &GaussianSum,
    dims: &SystemDims,
    group: &[Permutation],
    points: &[Vec<f64>],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for g in group {
        let action = PermutationAction::new(*dims, g.clone())?;
        for y in points {
            let qy = action.act_q(y)?;
            let d = u.eval(&qy)? - action.sign() as f64 * u.eval(y)?;
            worst = worst.max(d.abs());
        }
    }
    Ok(worst)
}
