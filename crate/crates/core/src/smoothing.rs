//! Fourier-side mollifiers `K_eps(x) = eps^{-n} K(x/eps)` with
//!
//! ```text
//! K^(w) = (2 pi)^{-n/2} prod_i phi_nu(w_i^2 / 2),   phi_nu(t) = e^{-t} sum_{k<=nu} t^k/k!
//! ```
//!
//! `phi_nu` is the probability that a Poisson variable with mean `t` is at
//! most `nu`; it equals one at `t = 0` with `1 - phi_nu(t) = O(t^{nu+1})`.

use std::f64::consts::PI;

use crate::error::{check_len, Error, Result};

/// Largest supported order.
pub const MAX_ORDER: u32 = 16;

/// Order `nu` of the mollifier on `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelOrder {
    nu: u32,
    n: usize,
}

impl KernelOrder {
    pub fn new(nu: u32, n: usize) -> Result<Self> {
        if nu > MAX_ORDER {
            return Err(Error::InvalidInput(format!(
                "kernel order {nu} exceeds the supported maximum {MAX_ORDER}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        Ok(Self { nu, n })
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

fn ln_factorial(k: u32) -> f64 {
    (1..=k).map(|j| (j as f64).ln()).sum()
}

/// `ln phi_nu(t)` via a log-sum-exp over the partial sum.
pub fn ln_phi_factor(nu: u32, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let ln_t = t.ln();
    let logs: Vec<f64> = (0..=nu)
        .map(|k| k as f64 * ln_t - ln_factorial(k))
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    top + sum.ln() - t
}

/// `phi_nu(t) = e^{-t} sum_{k=0}^{nu} t^k / k!` for `t >= 0`.
pub fn phi_factor(nu: u32, t: f64) -> f64 {
    assert!(t >= 0.0, "phi_factor needs t >= 0, got {t}");
    ln_phi_factor(nu, t).exp()
}

/// `1 - phi_nu(t) = e^{-t} sum_{k>nu} t^k / k!`, accurate for small `t`.
pub fn one_minus_phi_factor(nu: u32, t: f64) -> f64 {
    assert!(t >= 0.0);
    if t > 1.0 {
        return 1.0 - phi_factor(nu, t);
    }
    let mut term = (nu as f64 + 1.0) * t.ln() - ln_factorial(nu + 1);
    let mut sum = 0.0;
    let mut k = nu + 1;
    loop {
        let v = term.exp();
        sum += v;
        if v < 1e-18 * sum || v == 0.0 {
            break;
        }
        k += 1;
        term += t.ln() - (k as f64).ln();
    }
    sum * (-t).exp()
}

/// `K^(w)`, the Fourier transform of the unscaled kernel.
pub fn khat(order: &KernelOrder, omega: &[f64]) -> Result<f64> {
    check_len(order.n, omega.len())?;
    let norm = -0.5 * order.n as f64 * (2.0 * PI).ln();
    let logs: f64 = omega
        .iter()
        .map(|w| ln_phi_factor(order.nu, 0.5 * w * w))
        .sum();
    Ok((norm + logs).exp())
}

/// `K^(eps w)`, the transform of the kernel at scale `eps`.
pub fn khat_scaled(order: &KernelOrder, eps: f64, omega: &[f64]) -> Result<f64> {
    let scaled = scale_frequency(eps, omega)?;
    khat(order, &scaled)
}

/// `(2 pi)^{n/2} K^(eps w)`, the factor that smoothing at scale `eps`
/// applies to a Fourier integrand. Lies in `(0, 1]`.
pub fn smoothing_multiplier(order: &KernelOrder, eps: f64, omega: &[f64]) -> Result<f64> {
    check_len(order.n, omega.len())?;
    let scaled = scale_frequency(eps, omega)?;
    Ok(scaled
        .iter()
        .map(|w| ln_phi_factor(order.nu, 0.5 * w * w))
        .sum::<f64>()
        .exp())
}

fn scale_frequency(eps: f64, omega: &[f64]) -> Result<Vec<f64>> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "scale must be positive, got {eps}"
        )));
    }
    Ok(omega.iter().map(|w| eps * w).collect())
}

/// The order-zero kernel in physical space, the standard normal density
/// `(2 pi)^{-n/2} exp(-|x|^2 / 2)`.
pub fn gaussian_kernel(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (-0.5 * x.len() as f64 * (2.0 * PI).ln() - 0.5 * r2).exp()
}
