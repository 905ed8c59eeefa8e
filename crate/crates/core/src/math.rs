//! Scalar functions shared by the channel model, the LP builder and the rate engine.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Above this photon number `λ^k/k!` is evaluated in log space.
const DIRECT_SERIES_MAX_K: usize = 20;

/// Number of photon-number terms kept explicitly (indices `0..=n`) when the
/// infinite yield sums are truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct TruncationOrder(usize);

impl TruncationOrder {
    /// The key-rate objective references `Y₁, Y₂, e₁, e₂`, so at least three terms are needed.
    pub const MIN: usize = 2;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN {
            return Err(Error::domain(format!(
                "truncation order must be at least {}, got {n}",
                Self::MIN
            )));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl Default for TruncationOrder {
    fn default() -> Self {
        Self(10)
    }
}

impl TryFrom<usize> for TruncationOrder {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<TruncationOrder> for usize {
    fn from(n: TruncationOrder) -> usize {
        n.0
    }
}

impl std::fmt::Display for TruncationOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Shannon binary entropy in bits, `−x·log₂x − (1−x)·log₂(1−x)` with `0·log₂0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("binary entropy argument {x} not in [0, 1]")));
    }
    Ok(entropy_bits(x))
}

/// `Φ(x) = H_bin(1/2 + x/2)` for `x ∈ [−1, 1]`.
pub fn phi(x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("phi argument {x} not in [-1, 1]")));
    }
    Ok(phi_unchecked(x))
}

/// Probability that a Poisson variable with mean `lambda` equals `k`.
pub fn poisson_weight(lambda: f64, k: usize) -> Result<f64> {
    check_mean(lambda)?;
    if lambda == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if k <= DIRECT_SERIES_MAX_K {
        Ok(series_term(lambda, k) * (-lambda).exp())
    } else {
        Ok((k as f64 * lambda.ln() - lambda - ln_factorial(k)).exp())
    }
}

/// Tail of the exponential series, `e^λ − Σ_{k=0..n} λ^k/k!`.
///
/// Summed directly from `k = n+1` so that small tails do not vanish in the
/// cancellation of the closed form.
pub fn theta_truncation(lambda: f64, n: usize) -> Result<f64> {
    check_mean(lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let mut k = n + 1;
    let mut term = series_term(lambda, k);
    let mut sum = 0.0;
    while term > 0.0 {
        sum += term;
        k += 1;
        term *= lambda / k as f64;
        if (k as f64) > lambda && term <= sum * 1e-18 {
            break;
        }
    }
    Ok(sum)
}

/// `λ^k / k!`, without the `e^{−λ}` factor.
pub(crate) fn series_term(lambda: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    if k <= DIRECT_SERIES_MAX_K {
        (1..=k).fold(1.0, |acc, i| acc * lambda / i as f64)
    } else {
        (k as f64 * lambda.ln() - ln_factorial(k)).exp()
    }
}

pub(crate) fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

pub(crate) fn entropy_bits(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    xlog2x(x) + xlog2x(1.0 - x)
}

pub(crate) fn phi_unchecked(x: f64) -> f64 {
    entropy_bits(0.5 + 0.5 * x)
}

fn xlog2x(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

fn check_mean(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("mean photon number {lambda} must be finite and >= 0")))
    }
}
