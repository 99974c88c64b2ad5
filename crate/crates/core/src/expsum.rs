//! Exponential-sum approximations of `1/r`.
//!
//! The grid construction
//!
//! ```text
//! v(r) = h * sum_{k=k1}^{k2} e^{-kh} exp(-e^{-kh} r)
//! ```
//!
//! satisfies `r v(r) = phi(ln r)` with the window sum
//! `phi(s) = h * sum_k w(s - kh)`, `w(s) = exp(-e^s + s)`. The relative error
//! of `v` against `1/r` on `[1, R]` is therefore the deviation of `phi` from one
//! on `[0, ln R]`, which is nearly periodic with period `h`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Default cap on the number of terms a parameter search may produce.
pub const TERM_BUDGET: usize = 512;

/// Grid sampling density used for certification.
pub const POINTS_PER_PERIOD: usize = 40;

const CSV_SCHEMA: &str = "tracesolve-expsum/1";

/// One term `weight * exp(-rate * r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub weight: f64,
    pub rate: f64,
}

/// Parameters of the grid construction and the scale it was rescaled to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub h: f64,
    pub k1: i64,
    pub k2: i64,
    pub mu: f64,
}

/// A finite sum of decaying exponentials. Terms are kept sorted by
/// descending rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    terms: Vec<ExpTerm>,
    provenance: Option<GridParams>,
}

/// The window function `w(s) = exp(-e^s + s)`.
pub fn window_fn(s: f64) -> f64 {
    (s - s.exp()).exp()
}

/// Leading-order relative error `4 pi h^{-1/2} e^{-pi^2/h}` of the infinite
/// grid series.
pub fn asymptotic_rel_error(h: f64) -> f64 {
    4.0 * PI / h.sqrt() * (-PI * PI / h).exp()
}

impl ExpSum {
    /// The grid sum with step `h` over `k1..=k2`; empty when `k2 < k1`.
    pub fn build(h: f64, k1: i64, k2: i64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidInput(format!(
                "step h must be positive, got {h}"
            )));
        }
        let terms = (k1..=k2)
            .map(|k| {
                let rate = (-(k as f64) * h).exp();
                ExpTerm {
                    weight: h * rate,
                    rate,
                }
            })
            .collect();
        Ok(Self {
            terms,
            provenance: Some(GridParams { h, k1, k2, mu: 1.0 }),
        })
    }

    /// A sum from explicit terms, which must have positive finite weights
    /// and nonnegative finite rates.
    pub fn from_terms(mut terms: Vec<ExpTerm>) -> Result<Self> {
        if terms.iter().any(|t| {
            !(t.weight.is_finite() && t.weight > 0.0 && t.rate.is_finite() && t.rate >= 0.0)
        }) {
            return Err(Error::InvalidInput(
                "exponential-sum weights must be positive and rates nonnegative".into(),
            ));
        }
        terms.sort_by(|a, b| b.rate.partial_cmp(&a.rate).unwrap());
        Ok(Self {
            terms,
            provenance: None,
        })
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn provenance(&self) -> Option<GridParams> {
        self.provenance
    }

    /// `r -> v(r/mu)/mu`, which approximates `1/r` on `[mu, R mu]` as well
    /// as `v` does on `[1, R]`.
    pub fn rescale(&self, mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidInput(format!(
                "scale must be positive, got {mu}"
            )));
        }
        Ok(Self {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    weight: t.weight / mu,
                    rate: t.rate / mu,
                })
                .collect(),
            provenance: self.provenance.map(|p| GridParams { mu: p.mu * mu, ..p }),
        })
    }

    /// `sum_k a_k exp(-b_k r)`.
    pub fn eval(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight * (-t.rate * r).exp())
            .sum()
    }

    /// `r v(r)` at `r = e^s`, written as `sum_k (a_k/b_k) w(s + ln b_k)`.
    pub fn window(&self, s: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                if t.rate == 0.0 {
                    t.weight * s.exp()
                } else {
                    t.weight / t.rate * window_fn(s + t.rate.ln())
                }
            })
            .sum()
    }

    /// Two-column CSV (`weight,rate`) with the grid parameters in a comment
    /// header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# schema={CSV_SCHEMA}").unwrap();
        if let Some(p) = self.provenance {
            writeln!(out, "# h={:e},k1={},k2={},mu={:e}", p.h, p.k1, p.k2, p.mu).unwrap();
        }
        out.push_str("weight,rate\n");
        for t in &self.terms {
            writeln!(out, "{:e},{:e}", t.weight, t.rate).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut provenance = None;
        let mut terms = Vec::new();
        let mut saw_header = false;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(comment) = line.strip_prefix('#') {
                if comment.trim_start().starts_with("h=") {
                    provenance = Some(parse_provenance(comment.trim())?);
                }
                continue;
            }
            if !saw_header {
                if line != "weight,rate" {
                    return Err(Error::InvalidInput(format!(
                        "unexpected CSV header: {line}"
                    )));
                }
                saw_header = true;
                continue;
            }
            let (w, r) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidInput(format!("malformed row: {line}")))?;
            terms.push(ExpTerm {
                weight: parse_f64(w)?,
                rate: parse_f64(r)?,
            });
        }
        let mut sum = Self::from_terms(terms)?;
        sum.provenance = provenance;
        Ok(sum)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("not a number: {s}")))
}

fn parse_provenance(s: &str) -> Result<GridParams> {
    let mut p = GridParams {
        h: f64::NAN,
        k1: 0,
        k2: -1,
        mu: 1.0,
    };
    for field in s.split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("bad provenance field: {field}")))?;
        let bad = || Error::InvalidInput(format!("bad provenance value: {field}"));
        match key.trim() {
            "h" => p.h = parse_f64(value)?,
            "k1" => p.k1 = value.trim().parse().map_err(|_| bad())?,
            "k2" => p.k2 = value.trim().parse().map_err(|_| bad())?,
            "mu" => p.mu = parse_f64(value)?,
            _ => return Err(bad()),
        }
    }
    Ok(p)
}

/// Result of a relative-error scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupError {
    /// `max |r v(r) - 1|` over the grid, from direct evaluation.
    pub sup_error: f64,
    /// Grid point where the maximum is attained.
    pub argmax_r: f64,
    /// The same maximum computed through the window form.
    pub window_sup: f64,
    /// Largest pointwise gap between the two forms.
    pub form_gap: f64,
}

/// Number of log-uniform grid points giving `per_period` samples per period
/// `h` on `[lo, hi]`.
pub fn grid_points_for(lo: f64, hi: f64, h: f64, per_period: usize) -> usize {
    (((hi / lo).ln() / h) * per_period as f64).ceil().max(1.0) as usize + 1
}

/// `sup |r v(r) - 1|` over a log-uniform grid of `grid_points` on `[1, R]`.
pub fn rel_error_sup(v: &ExpSum, big_r: f64, grid_points: usize) -> Result<SupError> {
    rel_error_sup_on(v, 1.0, big_r, grid_points)
}

/// `sup |r v(r) - 1|` over a log-uniform grid on `[lo, hi]`.
pub fn rel_error_sup_on(v: &ExpSum, lo: f64, hi: f64, grid_points: usize) -> Result<SupError> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need 0 < lo < hi, got [{lo:e}, {hi:e}]"
        )));
    }
    if grid_points < 2 {
        return Err(Error::InvalidInput("need at least two grid points".into()));
    }
    let (s0, s1) = (lo.ln(), hi.ln());
    let mut out = SupError {
        sup_error: 0.0,
        argmax_r: lo,
        window_sup: 0.0,
        form_gap: 0.0,
    };
    for i in 0..grid_points {
        let s = s0 + (s1 - s0) * i as f64 / (grid_points - 1) as f64;
        let r = s.exp();
        let direct = r * v.eval(r);
        let windowed = v.window(s);
        let err = (direct - 1.0).abs();
        if err > out.sup_error {
            out.sup_error = err;
            out.argmax_r = r;
        }
        out.window_sup = out.window_sup.max((windowed - 1.0).abs());
        out.form_gap = out.form_gap.max((direct - windowed).abs());
    }
    Ok(out)
}

/// Grid parameters produced by [`suggest_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Suggestion {
    pub h: f64,
    pub k1: i64,
    pub k2: i64,
    /// Certified sup relative error on the certification interval.
    pub sup_error: f64,
}

impl Suggestion {
    /// The sum built from these parameters and rescaled to `mu`.
    pub fn build(&self, mu: f64) -> Result<ExpSum> {
        ExpSum::build(self.h, self.k1, self.k2)?.rescale(mu)
    }

    pub fn term_count(&self) -> usize {
        (self.k2 - self.k1 + 1).max(0) as usize
    }
}

/// Grid parameters approximating `1/r` on `[mu, R mu]` to relative accuracy
/// `tol`, certified on the sub-interval `[10 mu, R mu / 10]`.
///
/// The parameters do not depend on `mu`; only the rescaling does.
pub fn suggest_params(mu: f64, big_r: f64, tol: f64) -> Result<Suggestion> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidInput(format!(
            "scale must be positive, got {mu}"
        )));
    }
    let lo = 10.0f64.max(1.0001);
    let hi = big_r / 10.0;
    if hi.is_nan() || hi <= lo {
        return Err(Error::InvalidInput(format!(
            "range ratio {big_r} leaves an empty certification interval"
        )));
    }
    search_params(lo, hi, tol, TERM_BUDGET)
}

/// Grid parameters certified on the whole of `[lo, hi]` (in the unit scale,
/// i.e. before rescaling) to relative accuracy `tol`.
///
/// Starting from `h = 2`, the step is halved until the sampled sup error
/// meets `tol`. For each step the index range is widened until the omitted
/// boundary terms contribute less than `tol / 10` at the interval ends.
pub fn search_params(lo: f64, hi: f64, tol: f64, budget: usize) -> Result<Suggestion> {
    if !(tol > 1e-12 && tol < 1.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance must lie in (1e-12, 1), got {tol:e}"
        )));
    }
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need 0 < lo < hi, got [{lo:e}, {hi:e}]"
        )));
    }
    let (s_lo, s_hi) = (lo.ln(), hi.ln());
    let mut h = 2.0;
    let mut fewest = usize::MAX;
    while h >= 1.0 / 64.0 {
        let k1 = widen_low(h, s_lo, 0.1 * tol);
        let k2 = widen_high(h, s_hi, 0.1 * tol);
        let count = (k2 - k1 + 1) as usize;
        fewest = fewest.min(count);
        if count > budget {
            break;
        }
        let sum = ExpSum::build(h, k1, k2)?;
        let report = rel_error_sup_on(&sum, lo, hi, grid_points_for(lo, hi, h, POINTS_PER_PERIOD))?;
        if report.sup_error <= tol {
            return Ok(Suggestion {
                h,
                k1,
                k2,
                sup_error: report.sup_error,
            });
        }
        h *= 0.5;
    }
    Err(Error::Capacity(format!(
        "tolerance {tol:e} on [{lo:e}, {hi:e}] not reached within {budget} terms (smallest attempt {fewest})"
    )))
}

/// Smallest `k1` such that the omitted terms `k < k1` stay below `limit`
/// at `s = s_lo`.
fn widen_low(h: f64, s_lo: f64, limit: f64) -> i64 {
    let mut k1 = (s_lo / h).floor() as i64;
    // omitted terms are w(s_lo - k h) for k < k1; they decay super-exponentially
    while 2.0 * h * window_fn(s_lo - (k1 - 1) as f64 * h) > limit {
        k1 -= 1;
    }
    k1
}

/// Smallest `k2` such that the omitted terms `k > k2` stay below `limit`
/// at `s = s_hi`.
fn widen_high(h: f64, s_hi: f64, limit: f64) -> i64 {
    let mut k2 = (s_hi / h).ceil() as i64;
    // for k > k2 the arguments are negative and w(t) ~ e^t decays geometrically
    while h * window_fn(s_hi - (k2 + 1) as f64 * h) / (1.0 - (-h).exp()) > limit {
        k2 += 1;
    }
    k2
}

/// The grid sum certified to relative accuracy `tol` on `[lo, hi]`, already
/// rescaled to `lo`.
pub fn fit_interval(lo: f64, hi: f64, tol: f64) -> Result<(ExpSum, Suggestion)> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!(
            "need 0 < lo < hi, got [{lo:e}, {hi:e}]"
        )));
    }
    let s = search_params(1.0, hi / lo, tol, TERM_BUDGET)?;
    Ok((s.build(lo)?, s))
}
