//! Two-variable activation functions `σ(t1, t2)` with analytic partial derivatives.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    /// `exp(−t1² − t2²)`.
    Gaussian,
    /// `(t1)₊^{m1} (t2)₊^{m2}`, with `(z)₊⁰` the unit step that vanishes at `z = 0`.
    RampProduct { m1: u32, m2: u32 },
}

/// `(z)₊^m` and its `k`-th derivative, `m!/(m−k)! (z)₊^{m−k}`.
pub fn ramp_derivative(m: u32, k: u32, z: f64) -> f64 {
    if k > m || z <= 0.0 {
        return 0.0;
    }
    let falling: f64 = ((m - k + 1)..=m).map(|j| j as f64).product();
    falling * z.powi((m - k) as i32)
}

/// `d^n/dt^n exp(−t²) = (−1)^n H_n(t) exp(−t²)` with physicists' Hermite polynomials.
pub fn gaussian_derivative(n: u32, t: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * t);
    let h = match n {
        0 => h0,
        1 => h1,
        _ => {
            for k in 1..n {
                let h2 = 2.0 * t * h1 - 2.0 * k as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    };
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * h * (-t * t).exp()
}

impl Activation {
    pub fn eval(&self, t1: f64, t2: f64) -> f64 {
        self.partial(0, 0, t1, t2)
    }

    /// `∂_{t1}^{i1} ∂_{t2}^{i2} σ(t1, t2)`.
    pub fn partial(&self, i1: u32, i2: u32, t1: f64, t2: f64) -> f64 {
        match *self {
            Activation::Gaussian => gaussian_derivative(i1, t1) * gaussian_derivative(i2, t2),
            Activation::RampProduct { m1, m2 } => ramp_derivative(m1, i1, t1) * ramp_derivative(m2, i2, t2),
        }
    }

    /// `(1/2π) ∫∫ σ(t) e^{−i τ·t} dt`, when `σ` is integrable.
    pub fn fourier(&self, tau1: f64, tau2: f64) -> Option<Complex64> {
        match self {
            Activation::Gaussian => Some(Complex64::new(0.5 * (-(tau1 * tau1 + tau2 * tau2) / 4.0).exp(), 0.0)),
            Activation::RampProduct { .. } => None,
        }
    }

    /// Frequency pair with both components nonzero maximizing `|σ̂|` over `{±2^k : k = −2..3}²`.
    pub fn select_tau(&self) -> Result<((f64, f64), Complex64)> {
        let mut cands = Vec::new();
        for k in -2..=3 {
            let v = 2f64.powi(k);
            cands.push(v);
            cands.push(-v);
        }
        let mut best: Option<((f64, f64), Complex64)> = None;
        for &a in &cands {
            for &b in &cands {
                let s = self
                    .fourier(a, b)
                    .ok_or_else(|| Error::Activation(format!("{self} is not integrable; σ̂ is undefined")))?;
                if best.is_none_or(|(_, v)| s.norm() > v.norm()) {
                    best = Some(((a, b), s));
                }
            }
        }
        match best {
            Some((t, s)) if s.norm() > 0.0 => Ok((t, s)),
            _ => Err(Error::Usage(format!("σ̂ of {self} vanishes on the whole candidate lattice"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Gaussian => write!(f, "gaussian"),
            Activation::RampProduct { m1, m2 } => write!(f, "ramp_product({m1},{m2})"),
        }
    }
}
