//! Scalar special functions: gamma family, error functions, Bessel K and
//! Pochhammer symbols. Series-type functions live in the submodules.

mod capacity;
mod lauricella;

pub use capacity::{upsilon, xi, LN1P_COEFFS};
pub use lauricella::{lauricella_fa, ln_lauricella_fa, LauricellaArgs, SeriesControl, SeriesSum};

use crate::error::{Error, Result};
use crate::quad::Quadrature;

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "ln_gamma",
            format!("x = {x} must be positive and finite"),
        ));
    }
    Ok(lgam(x))
}

/// `ln Γ(x)` without domain checking; callers guarantee `x > 0`.
#[inline]
pub(crate) fn lgam(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        if x < -26.7 {
            return f64::INFINITY;
        }
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 2.0 {
        return (x * x).exp() * erfc(x);
    }
    // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut tail = x;
    for n in (1..=120).rev() {
        tail = x + 0.5 * n as f64 / tail;
    }
    1.0 / (tail * std::f64::consts::PI.sqrt())
}

fn check_gamma_args(func: &'static str, a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(
            func,
            format!("shape a = {a} must be positive and finite"),
        ));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(func, format!("x = {x} must be nonnegative")));
    }
    Ok(())
}

/// Either `ln P(a,x)` from the power series or `ln Q(a,x)` from the
/// continued fraction, whichever converges well at this point.
enum IncGamma {
    LnLower(f64),
    LnUpper(f64),
}

fn incomplete_gamma(a: f64, x: f64) -> IncGamma {
    if x == 0.0 {
        return IncGamma::LnLower(f64::NEG_INFINITY);
    }
    if x.is_infinite() {
        return IncGamma::LnUpper(f64::NEG_INFINITY);
    }
    let prefix = a * x.ln() - x;
    if x < a + 1.0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut n = 1.0;
        while n < MAX_ITER as f64 {
            term *= x / (a + n);
            sum += term;
            if term < sum * EPS {
                break;
            }
            n += 1.0;
        }
        IncGamma::LnLower(prefix - lgam(a + 1.0) + sum.ln())
    } else {
        // modified Lentz evaluation of the Legendre continued fraction
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        IncGamma::LnUpper(prefix - lgam(a) + h.ln())
    }
}

/// Regularized lower incomplete gamma `P(a, x) = γ(a, x)/Γ(a)`.
pub fn reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    check_gamma_args("reg_lower_gamma", a, x)?;
    Ok(match incomplete_gamma(a, x) {
        IncGamma::LnLower(lp) => lp.exp(),
        IncGamma::LnUpper(lq) => -lq.exp_m1(),
    })
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn reg_upper_gamma(a: f64, x: f64) -> Result<f64> {
    check_gamma_args("reg_upper_gamma", a, x)?;
    Ok(match incomplete_gamma(a, x) {
        IncGamma::LnLower(lp) => -lp.exp_m1(),
        IncGamma::LnUpper(lq) => lq.exp(),
    })
}

/// `ln P(a, x)`, accurate deep in the lower tail where `P` underflows.
pub fn ln_reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    check_gamma_args("ln_reg_lower_gamma", a, x)?;
    Ok(match incomplete_gamma(a, x) {
        IncGamma::LnLower(lp) => lp,
        IncGamma::LnUpper(lq) => (-lq.exp()).ln_1p(),
    })
}

/// Modified Bessel function of the second kind `K_ν(x)`, from
/// `K_ν(x) = ∫₀^∞ exp(−x cosh t) cosh(νt) dt`.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    Ok(bessel_k_scaled(nu, x)? * (-x).exp())
}

/// `e^x K_ν(x)`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "bessel_k",
            format!("x = {x} must be positive and finite"),
        ));
    }
    if !nu.is_finite() {
        return Err(Error::domain("bessel_k", "order must be finite"));
    }
    let nu = nu.abs();
    let integrand = |t: f64| {
        let s = (0.5 * t).sinh();
        (-2.0 * x * s * s).exp() * (nu * t).cosh()
    };
    let scale = (1.0 + 1.0 / x).acosh() + nu / x;
    Quadrature::with_tolerances(0.0, 1e-13)
        .integrate_semi_infinite(integrand, 0.0, scale)
        .map(|r| r.value)
        .map_err(|e| e.context("bessel_k"))
}

/// `ln ⟨x⟩_n = ln Γ(x+n) − ln Γ(x)`.
pub fn ln_pochhammer(x: f64, n: u32) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "pochhammer",
            format!("x = {x} must be positive and finite"),
        ));
    }
    if n == 0 {
        return Ok(0.0);
    }
    Ok(lgam(x + n as f64) - lgam(x))
}

/// Rising factorial `⟨x⟩_n = Γ(x+n)/Γ(x)`.
pub fn pochhammer(x: f64, n: u32) -> Result<f64> {
    ln_pochhammer(x, n).map(f64::exp)
}

/// `ln(e^a + e^b)`.
#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}
