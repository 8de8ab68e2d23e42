//! Closed-form helpers for the ergodic capacity of a Log-Normal SNR.
//!
//! `Ξ(a, b) = (a/√π) ∫₀¹ ln(1+x)/x · exp(−(a ln x − b)²) dx`. Replacing
//! `ln(1+x)` on `[0, 1]` by `Σ_k c_k x^k` and integrating term by term gives
//!
//! `Ξ(a, b) ≈ Σ_k c_k · (e^{−b²}/2) · e^{y_k²} erfc(y_k)`, `y_k = b + k/(2a)`.

use crate::error::{Error, Result};

use super::{erfc, erfcx};

/// Minimax polynomial for `ln(1+x)` on `[0, 1]` (Abramowitz & Stegun 4.1.44),
/// `|ε| < 3.5e-8`. Index `k−1` holds the coefficient of `x^k`.
pub const LN1P_COEFFS: [f64; 8] = [
    0.999_996_423_9,
    -0.499_874_123_8,
    0.331_799_025_8,
    -0.240_733_808_4,
    0.167_654_071_1,
    -0.095_329_389_7,
    0.036_088_493_7,
    -0.006_453_544_2,
];

pub fn xi(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(
            "xi",
            format!("a = {a} must be positive and finite"),
        ));
    }
    if !b.is_finite() {
        return Err(Error::domain("xi", format!("b = {b} must be finite")));
    }
    let mut total = 0.0;
    for (i, &c) in LN1P_COEFFS.iter().enumerate() {
        let shift = (i + 1) as f64 / (2.0 * a);
        let y = b + shift;
        // ln(e^{-b²} e^{y²} erfc(y)); y² − b² = shift·(2b + shift)
        let ln_h = if y >= 0.0 {
            -b * b + erfcx(y).ln()
        } else {
            shift * (2.0 * b + shift) + erfc(y).ln()
        };
        total += c * 0.5 * ln_h.exp();
    }
    Ok(total)
}

/// Ergodic capacity `E[log2(1 + ρ̄X)]` of `X ~ LogNormal(ν, ζ)`, in bit/s/Hz.
pub fn upsilon(nu: f64, zeta: f64, rho_bar: f64) -> Result<f64> {
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(Error::domain(
            "upsilon",
            format!("zeta = {zeta} must be positive"),
        ));
    }
    if !(rho_bar > 0.0) || !rho_bar.is_finite() {
        return Err(Error::domain(
            "upsilon",
            format!("rho_bar = {rho_bar} must be positive"),
        ));
    }
    if !nu.is_finite() {
        return Err(Error::domain(
            "upsilon",
            format!("nu = {nu} must be finite"),
        ));
    }
    let mu = rho_bar.ln() + nu;
    let s = zeta * std::f64::consts::SQRT_2;
    let a = 1.0 / s;
    let b = mu / s;
    let gauss = zeta / (2.0 * std::f64::consts::PI).sqrt() * (-mu * mu / (2.0 * zeta * zeta)).exp();
    let linear = 0.5 * mu * erfc(-b);
    let value = xi(a, b)? + xi(a, -b)? + gauss + linear;
    Ok(value.max(0.0) / std::f64::consts::LN_2)
}
