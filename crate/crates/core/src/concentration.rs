//! Volume ratios of sectors `{x : ||A x|| < delta ||A|| ||x||}` of the unit
//! ball and the exponential concentration bounds that control them.
//!
//! For an orthogonal projection from `R^n` onto `R^m` the ratio is the
//! function `F(m, n; delta)`, a normalized integral of
//! `(1 - t^2)^alpha t^(m-1)` with `alpha = (n - m - 2)/2`. After the
//! substitution `t = sin u` the integrand becomes
//! `sin^(m-1) u cos^(n-m-1) u`, which has integer exponents and no endpoint
//! singularity, so the integral is evaluated in that variable. The integrand
//! is scaled by its maximum so that dimensions up to `2^16` and beyond neither
//! overflow nor lose the ratio to underflow.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::tspace::SystemDims;

const QUAD_ORDER: usize = 20;
const QUAD_REL_TOL: f64 = 1e-13;

/// Samples per independently seeded Monte-Carlo stream.
pub const MC_CHUNK: usize = 4096;

/// `c = -ln(phi(2)) = 3/2 - ln 2`.
pub const CONCENTRATION_RATE: f64 = 1.5 - std::f64::consts::LN_2;

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || m >= n {
        return Err(Error::InvalidInput(format!(
            "need 0 < m < n, got m={m}, n={n}"
        )));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidInput(format!(
            "delta must lie in [0, 1], got {delta}"
        )));
    }
    Ok(())
}

/// The integrand `sin^a(u) cos^b(u)` in the angle variable, with
/// `a = m - 1` and `b = n - m - 1`, scaled by its value at the peak.
struct SectorIntegrand {
    a: f64,
    b: f64,
    peak: f64,
    width: f64,
    peak_sin: f64,
    peak_cos: f64,
}

impl SectorIntegrand {
    fn new(m: usize, n: usize) -> Self {
        let a = (m - 1) as f64;
        let b = (n - m - 1) as f64;
        let (peak, width) = match (a > 0.0, b > 0.0) {
            (false, false) => (0.0, FRAC_PI_2),
            (false, true) => (0.0, 1.0 / b.sqrt()),
            (true, false) => (FRAC_PI_2, 1.0 / a.sqrt()),
            (true, true) => {
                let u = (a / b).sqrt().atan();
                let (s, c) = u.sin_cos();
                (u, 1.0 / (a / (s * s) + b / (c * c)).sqrt())
            }
        };
        let (peak_sin, peak_cos) = peak.sin_cos();
        Self {
            a,
            b,
            peak,
            width: width.min(FRAC_PI_2),
            peak_sin,
            peak_cos,
        }
    }

    /// `a ln(sin u / sin u*) + b ln(cos u / cos u*)`. The differences
    /// `sin u - sin u*` and `cos u - cos u*` are formed with product formulas
    /// so that no large logarithms cancel; for `m` in the tens of thousands
    /// the naive difference loses about four digits near the peak.
    fn log_ratio(&self, u: f64) -> f64 {
        let half_diff = (0.5 * (u - self.peak)).sin();
        let (half_sum_sin, half_sum_cos) = (0.5 * (u + self.peak)).sin_cos();
        let mut g = 0.0;
        if self.a > 0.0 {
            g += self.a
                * (2.0 * half_sum_cos * half_diff / self.peak_sin)
                    .max(-1.0)
                    .ln_1p();
        }
        if self.b > 0.0 {
            g += self.b
                * (-2.0 * half_sum_sin * half_diff / self.peak_cos)
                    .max(-1.0)
                    .ln_1p();
        }
        g
    }

    fn scaled(&self, u: f64) -> f64 {
        self.log_ratio(u).exp()
    }

    /// Panel boundaries on `[lo, hi]` clustered geometrically around the peak.
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = vec![lo, hi];
        let mut k = 0.5;
        while k <= 256.0 {
            for sgn in [-1.0, 1.0] {
                let p = self.peak + sgn * k * self.width;
                if p > lo && p < hi {
                    pts.push(p);
                }
            }
            k *= 2.0;
        }
        if self.peak > lo && self.peak < hi {
            pts.push(self.peak);
        }
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup();
        pts
    }
}

/// Scaled sector integrals below and above `asin(delta)`.
fn sector_split(m: usize, n: usize, delta: f64) -> (f64, f64) {
    let integrand = SectorIntegrand::new(m, n);
    let rule = GaussLegendre::new(QUAD_ORDER);
    let f = |u: f64| integrand.scaled(u);
    let cut = delta.asin();
    let lower = if cut > 0.0 {
        rule.adaptive_panels(&f, &integrand.breakpoints(0.0, cut), QUAD_REL_TOL, 0.0)
    } else {
        0.0
    };
    let upper = if cut < FRAC_PI_2 {
        rule.adaptive_panels(
            &f,
            &integrand.breakpoints(cut, FRAC_PI_2),
            QUAD_REL_TOL,
            0.0,
        )
    } else {
        0.0
    };
    (lower, upper)
}

/// `F(m, n; delta)`: the volume ratio of `{x : ||P x|| < delta ||x||}` for an
/// orthogonal projection `P` from `R^n` onto `R^m`.
pub fn volume_ratio(m: usize, n: usize, delta: f64) -> Result<f64> {
    check_dims(m, n)?;
    check_delta(delta)?;
    let (lower, upper) = sector_split(m, n, delta);
    Ok(lower / (lower + upper))
}

/// `1 - F(m, n; delta)`, computed from the upper integral directly so that it
/// keeps full relative accuracy when `F` is close to one.
pub fn volume_ratio_complement(m: usize, n: usize, delta: f64) -> Result<f64> {
    check_dims(m, n)?;
    check_delta(delta)?;
    let (lower, upper) = sector_split(m, n, delta);
    Ok(upper / (lower + upper))
}

/// Smallest `delta` with `F(m, n; delta) >= p`, by bisection.
pub fn volume_ratio_quantile(m: usize, n: usize, p: f64) -> Result<f64> {
    check_dims(m, n)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!(
            "level must be in [0, 1], got {p}"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if volume_ratio(m, n, mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `phi(theta) = theta exp((1 - theta^2)/2)`.
pub fn phi(theta: f64) -> f64 {
    theta * (0.5 * (1.0 - theta * theta)).exp()
}

/// `ln phi(theta)`, finite for `theta > 0`.
pub fn ln_phi(theta: f64) -> f64 {
    theta.ln() + 0.5 * (1.0 - theta * theta)
}

/// Upper bound `min(1, phi(theta)^m)` on the measure of
/// `{x : ||A x|| >= theta xi ||A|| ||x||}`, `xi = sqrt(m/n)`, valid for
/// `theta > 1` and any nonzero `m x n` matrix.
pub fn tail_bound_above(m: usize, n: usize, theta: f64) -> Result<f64> {
    check_dims(m, n)?;
    if theta.is_nan() || theta <= 1.0 {
        return Err(Error::InvalidInput(format!(
            "upper tail bound requires theta > 1, got {theta}"
        )));
    }
    Ok((m as f64 * ln_phi(theta)).exp().min(1.0))
}

/// Upper bound `phi(theta)^(m - m0)` on the measure of
/// `{x : ||A x|| < theta xi' ||A|| ||x||}`, `xi' = sqrt((m - m0)/n)`, for
/// matrices whose singular values other than the `m0` smallest all equal the
/// largest one. Valid for `0 < theta < 1`.
pub fn tail_bound_below(m: usize, m0: usize, n: usize, theta: f64) -> Result<f64> {
    check_dims(m, n)?;
    if m0 >= m {
        return Err(Error::InvalidInput(format!(
            "need m0 < m, got m0={m0}, m={m}"
        )));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "lower tail bound requires 0 < theta < 1, got {theta}"
        )));
    }
    Ok(((m - m0) as f64 * ln_phi(theta)).exp())
}

/// The constants `xi' ||T^t||` and `xi ||T^t||` that enclose one.
pub fn enclosure_constants(dims: &SystemDims) -> (f64, f64) {
    let np = dims.particles() as f64;
    let lower = (1.0 - 2.0 / (np * (np + 1.0))).sqrt();
    let upper = (1.0 + 1.0 / (np + 1.0)).sqrt();
    (lower, upper)
}

/// `xi = sqrt(m/n)` and `xi' = sqrt(m'/n)` for the trace map.
pub fn xi_pair(dims: &SystemDims) -> (f64, f64) {
    let n = dims.n() as f64;
    (
        (dims.m() as f64 / n).sqrt(),
        (dims.mprime() as f64 / n).sqrt(),
    )
}

/// Lower bounds on the probability that
/// `(1-eps) xi' ||T^t|| ||w|| <= ||T^t w|| < (1+eps) xi ||T^t|| ||w||`
/// built from the exponential tail bounds. Values are raw and may be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleProbBound {
    /// `1 - (phi(1-eps)^m' + phi(1+eps)^m)`.
    pub phi_form: f64,
    /// `1 - 2 exp(-c eps^2 m')`.
    pub exp_form: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon must lie in (0, 1), got {eps}"
        )));
    }
    Ok(())
}

pub fn prob_bound_simple(dims: &SystemDims, eps: f64) -> Result<SimpleProbBound> {
    check_eps(eps)?;
    let m = dims.m() as f64;
    let mp = dims.mprime() as f64;
    let phi_form = 1.0 - ((mp * ln_phi(1.0 - eps)).exp() + (m * ln_phi(1.0 + eps)).exp());
    let exp_form = 1.0 - 2.0 * (-CONCENTRATION_RATE * eps * eps * mp).exp();
    Ok(SimpleProbBound { phi_form, exp_form })
}

/// The volume-ratio form of the same probability bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpProbBound {
    /// `F(m, n; (1+eps) xi) - F(m', n; (1-eps) xi')`.
    pub sharp: f64,
    /// `F(m, n; (1+eps) xi) - F(m, n; (1-eps) xi)`, the orthogonal projection case.
    pub projection: f64,
    /// Set when `(1+eps) xi > 1` and the argument was clamped to one.
    pub clamped: bool,
}

impl SharpProbBound {
    /// Distance of the sharp bound to one, computed without cancellation.
    pub fn distance_to_one(&self) -> f64 {
        1.0 - self.sharp
    }
}

pub fn prob_bound_sharp(dims: &SystemDims, eps: f64) -> Result<SharpProbBound> {
    check_eps(eps)?;
    let (m, mp, n) = (dims.m(), dims.mprime(), dims.n());
    let (xi, xi_p) = xi_pair(dims);
    let upper_arg = (1.0 + eps) * xi;
    let clamped = upper_arg > 1.0;
    let upper_arg = upper_arg.min(1.0);
    let top_gap = volume_ratio_complement(m, n, upper_arg)?;
    let below_p = volume_ratio(mp, n, (1.0 - eps) * xi_p)?;
    let below = volume_ratio(m, n, (1.0 - eps) * xi)?;
    Ok(SharpProbBound {
        sharp: 1.0 - top_gap - below_p,
        projection: 1.0 - top_gap - below,
        clamped,
    })
}

/// `1 - sharp bound`, i.e. `(1 - F(m,n;(1+eps)xi)) + F(m',n;(1-eps)xi')`,
/// summed from the two small pieces.
pub fn sharp_bound_distance(dims: &SystemDims, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let (xi, xi_p) = xi_pair(dims);
    let top_gap = volume_ratio_complement(dims.m(), dims.n(), ((1.0 + eps) * xi).min(1.0))?;
    let below_p = volume_ratio(dims.mprime(), dims.n(), (1.0 - eps) * xi_p)?;
    Ok(top_gap + below_p)
}

/// Singular values of an `m x n` matrix, `m < n`, sorted in descending order.
/// By orthogonal invariance these alone determine every sector volume ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularProfile {
    sigmas: Vec<f64>,
    n: usize,
}

impl SingularProfile {
    pub fn new(mut sigmas: Vec<f64>, n: usize) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::InvalidInput("singular profile is empty".into()));
        }
        if sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidInput(
                "singular values must be positive and finite".into(),
            ));
        }
        check_dims(sigmas.len(), n)?;
        sigmas.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self { sigmas, n })
    }

    /// Profile of an orthogonal projection from `R^n` onto `R^m`.
    pub fn projection(m: usize, n: usize) -> Result<Self> {
        Self::new(vec![1.0; m], n)
    }

    /// Profile of `T^t` for the given system.
    pub fn trace_adjoint(dims: &SystemDims) -> Self {
        Self::new(dims.singular_values_tt(), dims.n()).expect("valid by construction")
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn m(&self) -> usize {
        self.sigmas.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max(&self) -> f64 {
        self.sigmas[0]
    }

    /// Number of singular values equal to the largest one.
    pub fn count_at_max(&self) -> usize {
        self.sigmas
            .iter()
            .take_while(|&&s| s == self.sigmas[0])
            .count()
    }

    /// `(F(m, n; delta), F(m', n; delta))` with `m'` the multiplicity of the
    /// largest singular value: the volume ratio of the profile lies between.
    pub fn sandwich(&self, delta: f64) -> Result<(f64, f64)> {
        Ok((
            volume_ratio(self.m(), self.n, delta)?,
            volume_ratio(self.count_at_max(), self.n, delta)?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    Quadrature,
    MonteCarlo,
}

/// A volume-ratio value with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeRatioEstimate {
    pub value: f64,
    pub method: EstimateMethod,
    pub stderr: f64,
    pub samples: u64,
}

impl VolumeRatioEstimate {
    pub fn quadrature(m: usize, n: usize, delta: f64) -> Result<Self> {
        Ok(Self {
            value: volume_ratio(m, n, delta)?,
            method: EstimateMethod::Quadrature,
            stderr: 0.0,
            samples: 0,
        })
    }
}

/// Monte-Carlo estimate of `lambda({x : ||S x|| < delta max(S) ||x||})` for the
/// diagonal matrix `S` of the profile, using standard Gaussian draws in `R^n`.
///
/// Sample index `i` belongs to stream `i / MC_CHUNK`, and each stream is a
/// ChaCha generator keyed by `seed` with that stream id. The result depends
/// only on `(seed, samples)`, not on the number of worker threads.
pub fn mc_volume_ratio(
    profile: &SingularProfile,
    delta: f64,
    samples: u64,
    seed: u64,
) -> Result<VolumeRatioEstimate> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    check_delta(delta)?;
    let chunks = samples.div_ceil(MC_CHUNK as u64);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * MC_CHUNK as u64;
            let len = (samples - start).min(MC_CHUNK as u64);
            count_chunk(profile, delta, seed, c, len)
        })
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(VolumeRatioEstimate {
        value: p,
        method: EstimateMethod::MonteCarlo,
        stderr: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}

/// [`mc_volume_ratio`] on a dedicated pool of `threads` workers.
pub fn mc_volume_ratio_with_threads(
    profile: &SingularProfile,
    delta: f64,
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<VolumeRatioEstimate> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| mc_volume_ratio(profile, delta, samples, seed))
}

fn count_chunk(profile: &SingularProfile, delta: f64, seed: u64, stream: u64, len: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let sig_sq: Vec<f64> = profile.sigmas.iter().map(|s| s * s).collect();
    let threshold = delta * delta * sig_sq[0];
    let mut hits = 0;
    for _ in 0..len {
        let mut image = 0.0;
        let mut total = 0.0;
        for k in 0..profile.n {
            let x: f64 = StandardNormal.sample(&mut rng);
            let x2 = x * x;
            total += x2;
            if k < sig_sq.len() {
                image += sig_sq[k] * x2;
            }
        }
        if image < threshold * total {
            hits += 1;
        }
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Independent route: F(m, n; delta) = I_{delta^2}(m/2, (n-m)/2).
    fn beta_oracle(m: usize, n: usize, delta: f64) -> f64 {
        statrs::function::beta::beta_reg(m as f64 / 2.0, (n - m) as f64 / 2.0, delta * delta)
    }

    #[test]
    fn closed_forms() {
        for k in 0..=100 {
            let d = k as f64 / 100.0;
            assert!((volume_ratio(2, 4, d).unwrap() - d * d).abs() < 1e-10);
            assert!((volume_ratio(1, 3, d).unwrap() - d).abs() < 1e-10);
        }
        assert_relative_eq!(volume_ratio(2, 4, 0.5).unwrap(), 0.25, epsilon = 1e-14);
        assert_relative_eq!(volume_ratio(1, 3, 0.3).unwrap(), 0.3, epsilon = 1e-14);
    }

    #[test]
    fn endpoints() {
        for (m, n) in [(1, 2), (3, 4), (6, 9), (64, 128), (192, 6240)] {
            assert_eq!(volume_ratio(m, n, 0.0).unwrap(), 0.0);
            assert_eq!(volume_ratio(m, n, 1.0).unwrap(), 1.0);
            assert_eq!(volume_ratio_complement(m, n, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn matches_incomplete_beta() {
        for (m, n) in [
            (1, 2),
            (2, 3),
            (3, 4),
            (3, 9),
            (6, 9),
            (9, 18),
            (24, 108),
            (21, 108),
        ] {
            for k in 1..20 {
                let d = k as f64 / 20.0;
                let ours = volume_ratio(m, n, d).unwrap();
                let oracle = beta_oracle(m, n, d);
                assert!(
                    (ours - oracle).abs() <= 1e-12 + 1e-9 * oracle,
                    "m={m} n={n} d={d}: {ours} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn half_at_symmetric_point() {
        for m in [1, 2, 8, 32, 128, 2048, 1 << 16] {
            let v = volume_ratio(m, 2 * m, 0.5f64.sqrt()).unwrap();
            assert!((v - 0.5).abs() < 1e-6, "m={m}: {v}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(volume_ratio(4, 4, 0.5).is_err());
        assert!(volume_ratio(0, 4, 0.5).is_err());
        assert!(volume_ratio(2, 4, 1.5).is_err());
        assert!(volume_ratio(2, 4, -0.1).is_err());
        assert!(volume_ratio(2, 4, f64::NAN).is_err());
    }

    #[test]
    fn transition_narrows() {
        let mut last = f64::INFINITY;
        for m in [2, 8, 32, 128] {
            let w = volume_ratio_quantile(m, 2 * m, 0.99).unwrap()
                - volume_ratio_quantile(m, 2 * m, 0.01).unwrap();
            assert!(w < last);
            last = w;
        }
    }

    #[test]
    fn phi_shape() {
        assert_eq!(phi(1.0), 1.0);
        assert_eq!(phi(0.0), 0.0);
        assert_relative_eq!(phi(2.0), 2.0 * (-1.5f64).exp(), max_relative = 1e-15);
        assert!((phi(2.0) - 0.4463).abs() < 1e-4);
        let grid: Vec<f64> = (0..=300).map(|k| k as f64 / 100.0).collect();
        for w in grid.windows(2) {
            if w[1] <= 1.0 {
                assert!(phi(w[1]) > phi(w[0]));
            } else if w[0] >= 1.0 {
                assert!(phi(w[1]) < phi(w[0]));
            }
        }
        assert_relative_eq!(CONCENTRATION_RATE, -phi(2.0).ln(), max_relative = 1e-15);
        assert!((CONCENTRATION_RATE - 0.8069).abs() < 1e-4);
    }

    #[test]
    fn tail_bounds() {
        assert!(tail_bound_above(6, 9, 1.0).is_err());
        assert!(tail_bound_above(6, 9, 0.5).is_err());
        assert!((tail_bound_above(6, 9, 1.0 + 1e-9).unwrap() - 1.0).abs() < 1e-12);
        let b = tail_bound_above(6, 9, 2.0).unwrap();
        assert_relative_eq!(b, phi(2.0).powi(6), max_relative = 1e-13);
        assert!((b - 7.9e-3).abs() < 1e-4);

        assert!(tail_bound_below(6, 3, 9, 1.0).is_err());
        assert!(tail_bound_below(6, 3, 9, 0.0).is_err());
        assert!(tail_bound_below(6, 6, 9, 0.5).is_err());
        let b = tail_bound_below(6, 3, 9, 0.5).unwrap();
        assert_relative_eq!(b, (0.5 * 0.375f64.exp()).powi(3), max_relative = 1e-13);
        assert!((b - 0.385).abs() < 1e-3);
        assert!((tail_bound_below(6, 3, 9, 1.0 - 1e-9).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_dominate_volume_ratio() {
        let cases = [
            (3, 9),
            (6, 9),
            (24, 108),
            (192, 6240),
            (9, 18),
            (1000, 3000),
        ];
        for (m, n) in cases {
            let xi = (m as f64 / n as f64).sqrt();
            for theta in [0.3, 0.5, 0.8, 0.95, 1.05, 1.2, 1.5, 2.0] {
                let delta = theta * xi;
                if delta >= 1.0 {
                    continue;
                }
                let bound = (m as f64 * ln_phi(theta)).exp();
                if theta < 1.0 {
                    assert!(volume_ratio(m, n, delta).unwrap() <= bound);
                } else {
                    assert!(volume_ratio_complement(m, n, delta).unwrap() <= bound);
                }
            }
        }
    }

    #[test]
    fn enclosure_constants_match_dims() {
        let d2 = SystemDims::new(2).unwrap();
        let (lo, hi) = enclosure_constants(&d2);
        assert_relative_eq!(lo, (2.0f64 / 3.0).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(hi, (4.0f64 / 3.0).sqrt(), max_relative = 1e-15);
        for np in 2..=200 {
            let d = SystemDims::new(np).unwrap();
            let (lo, hi) = enclosure_constants(&d);
            let (xi, xi_p) = xi_pair(&d);
            assert!(lo < 1.0 && hi > 1.0);
            assert!((lo - xi_p * d.tt_norm()).abs() <= 1e-14);
            assert!((hi - xi * d.tt_norm()).abs() <= 1e-14);
            assert!(1.0 - lo <= 2.0 / np as f64 && hi - 1.0 <= 1.0 / np as f64);
        }
    }

    #[test]
    fn probability_bounds_order() {
        for np in [2, 3, 4, 8, 16, 32, 64] {
            let d = SystemDims::new(np).unwrap();
            for k in 1..20 {
                let eps = k as f64 / 20.0;
                let simple = prob_bound_simple(&d, eps).unwrap();
                let sharp = prob_bound_sharp(&d, eps).unwrap();
                assert!(simple.phi_form >= simple.exp_form);
                assert!(sharp.sharp >= simple.phi_form - 1e-12);
                let dist = sharp_bound_distance(&d, eps).unwrap();
                assert!((dist - sharp.distance_to_one()).abs() < 1e-12);
            }
        }
        let d = SystemDims::new(64).unwrap();
        let s = prob_bound_simple(&d, 0.1).unwrap();
        assert!(1.0 - s.phi_form < 1.0 - s.exp_form);
        assert!(prob_bound_simple(&d, 0.0).is_err());
        assert!(prob_bound_sharp(&d, 1.0).is_err());

        let d2 = SystemDims::new(2).unwrap();
        assert!(prob_bound_sharp(&d2, 0.5).unwrap().clamped);
        assert!(!prob_bound_sharp(&d2, 0.1).unwrap().clamped);
        let near_one = prob_bound_sharp(&SystemDims::new(64).unwrap(), 0.99).unwrap();
        assert!(near_one.distance_to_one() < 1e-12);
    }

    #[test]
    fn monte_carlo_projection_matches_quadrature() {
        let p = SingularProfile::projection(3, 9).unwrap();
        let est = mc_volume_ratio(&p, 0.5, 200_000, 17).unwrap();
        let exact = volume_ratio(3, 9, 0.5).unwrap();
        assert!((est.value - exact).abs() <= 4.0 * est.stderr);
        assert_eq!(est.method, EstimateMethod::MonteCarlo);
        assert_eq!(mc_volume_ratio(&p, 0.0, 1000, 1).unwrap().value, 0.0);
    }

    #[test]
    fn monte_carlo_is_thread_count_independent() {
        let p = SingularProfile::trace_adjoint(&SystemDims::new(3).unwrap());
        let a = mc_volume_ratio_with_threads(&p, 0.6, 30_000, 99, 1).unwrap();
        let b = mc_volume_ratio_with_threads(&p, 0.6, 30_000, 99, 4).unwrap();
        let c = mc_volume_ratio_with_threads(&p, 0.6, 30_000, 99, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
        assert_ne!(a, mc_volume_ratio(&p, 0.6, 30_000, 100).unwrap());
    }

    #[test]
    fn monte_carlo_trace_profile_between_bounds() {
        let dims = SystemDims::new(3).unwrap();
        let p = SingularProfile::trace_adjoint(&dims);
        assert_eq!(p.count_at_max(), dims.mprime());
        let (lo, hi) = enclosure_constants(&dims);
        let delta = 0.5 * (lo + hi) / dims.tt_norm();
        let est = mc_volume_ratio(&p, delta, 100_000, 3).unwrap();
        let (f_lo, f_hi) = p.sandwich(delta).unwrap();
        assert!(f_lo < est.value && est.value < f_hi);
    }

    #[test]
    fn profile_validation() {
        assert!(SingularProfile::new(vec![], 3).is_err());
        assert!(SingularProfile::new(vec![1.0, 0.0], 3).is_err());
        assert!(SingularProfile::new(vec![1.0, 1.0, 1.0], 3).is_err());
        let p = SingularProfile::new(vec![1.0, 3.0, 2.0], 5).unwrap();
        assert_eq!(p.sigmas(), &[3.0, 2.0, 1.0]);
    }

    proptest! {
        #[test]
        fn monotone_in_delta(m in 1usize..40, extra in 1usize..60, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let n = m + extra;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let f_lo = volume_ratio(m, n, lo).unwrap();
            let f_hi = volume_ratio(m, n, hi).unwrap();
            prop_assert!(f_lo <= f_hi + 1e-15);
            prop_assert!((0.0..=1.0).contains(&f_lo));
            let sum = f_hi + volume_ratio_complement(m, n, hi).unwrap();
            prop_assert!((sum - 1.0).abs() < 1e-14);
        }
    }
}
