//! Smooth monotone time changes σ with σ(0) = τ_α, σ(ε) = τ_β and slope ε
//! outside [0, ε].

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;

use crate::{Error, Result};

/// χ(v) = exp(−1/v) for v > 0, else 0.
pub fn chi(v: f64) -> f64 {
    if v > 0.0 {
        (-1.0 / v).exp()
    } else {
        0.0
    }
}

fn chi_prime(v: f64) -> f64 {
    if v > 0.0 {
        chi(v) / (v * v)
    } else {
        0.0
    }
}

/// ξ(v) = χ(v) / (χ(v) + χ(1 − v)), a C^∞ step from 0 (v ≤ 0) to 1 (v ≥ 1).
pub fn xi(v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else if v >= 1.0 {
        1.0
    } else {
        let (a, b) = (chi(v), chi(1.0 - v));
        a / (a + b)
    }
}

pub fn xi_prime(v: f64) -> f64 {
    if v <= 0.0 || v >= 1.0 {
        return 0.0;
    }
    let (a, b) = (chi(v), chi(1.0 - v));
    let den = a + b;
    (chi_prime(v) * b + a * chi_prime(1.0 - v)) / (den * den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaReparam {
    tau_alpha: f64,
    tau_beta: f64,
    eps: f64,
}

impl SigmaReparam {
    pub fn new(tau_alpha: f64, tau_beta: f64, eps: f64) -> Result<Self> {
        let ok = tau_alpha.is_finite() && tau_beta.is_finite() && tau_alpha < tau_beta && eps > 0.0 && eps * eps < tau_beta - tau_alpha;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "σ needs τ_α < τ_β and 0 < ε² < τ_β − τ_α (got τ_α = {tau_alpha}, τ_β = {tau_beta}, ε = {eps})"
            )));
        }
        Ok(SigmaReparam { tau_alpha, tau_beta, eps })
    }

    pub fn tau_alpha(&self) -> f64 {
        self.tau_alpha
    }

    pub fn tau_beta(&self) -> f64 {
        self.tau_beta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn jump(&self) -> f64 {
        self.tau_beta - self.tau_alpha - self.eps * self.eps
    }

    /// σ(τ) = τ_α + ετ + (τ_β − τ_α − ε²)·ξ(τ/ε)
    pub fn eval(&self, tau: f64) -> f64 {
        let v = tau / self.eps;
        let lin = self.tau_alpha + self.eps * tau;
        if v <= 0.0 {
            lin
        } else if v >= 1.0 {
            lin + self.jump()
        } else {
            lin + self.jump() * xi(v)
        }
    }

    pub fn derivative(&self, tau: f64) -> f64 {
        self.eps + self.jump() * xi_prime(tau / self.eps) / self.eps
    }
}
