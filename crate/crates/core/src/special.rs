//! Digamma and trigamma via upward recurrence plus asymptotic expansion.
//!
//! Arguments below [`ASYMPTOTIC_FROM`] are shifted upward with
//! `psi(x) = psi(x + 1) - 1/x` and `psi'(x) = psi'(x + 1) + 1/x^2`; the
//! Bernoulli-number series is then accurate to about 1e-17 relative.

use crate::error::{Error, Result};

const ASYMPTOTIC_FROM: f64 = 10.0;

/// `B_{2k} / (2k)` for k = 1..7, used by the digamma series.
const DIGAMMA_COEFFS: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// `B_{2k}` for k = 1..7, used by the trigamma series.
const TRIGAMMA_COEFFS: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

fn check_positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} requires a finite x > 0, got {x}")))
    }
}

/// Derivative of `ln Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive(x, "digamma")?;
    Ok(digamma_unchecked(x))
}

/// Second derivative of `ln Γ(x)` for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    check_positive(x, "trigamma")?;
    Ok(trigamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(x: f64) -> f64 {
    let mut shifted = x;
    let mut n = 0usize;
    while shifted < ASYMPTOTIC_FROM {
        shifted += 1.0;
        n += 1;
    }
    let inv2 = 1.0 / (shifted * shifted);
    // Horner over 1/x^2, highest order first.
    let mut series = 0.0;
    for c in DIGAMMA_COEFFS.iter().rev() {
        series = series * inv2 + c;
    }
    let mut value = shifted.ln() - 0.5 / shifted - series * inv2;
    // Smallest corrections first.
    for k in (0..n).rev() {
        value -= 1.0 / (x + k as f64);
    }
    value
}

pub(crate) fn trigamma_unchecked(x: f64) -> f64 {
    let mut shifted = x;
    let mut n = 0usize;
    while shifted < ASYMPTOTIC_FROM {
        shifted += 1.0;
        n += 1;
    }
    let inv = 1.0 / shifted;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for c in TRIGAMMA_COEFFS.iter().rev() {
        series = series * inv2 + c;
    }
    let mut value = inv + 0.5 * inv2 + series * inv2 * inv;
    for k in (0..n).rev() {
        let xk = x + k as f64;
        value += 1.0 / (xk * xk);
    }
    value
}

/// Natural log of the gamma function.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}
