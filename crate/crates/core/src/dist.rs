//! Densities and distribution functions for every law in the analysis chain,
//! including the maximum of independent Gammas and the staircase law of
//! `h₀ + max_n V_n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NakagamiParams;
use crate::quad::Quadrature;
use crate::special::{
    bessel_k_scaled, erfc, lgam, ln_reg_lower_gamma, reg_lower_gamma, reg_upper_gamma,
};

/// Natural log below which a probability is reported as exactly zero.
pub const LN_UNDERFLOW: f64 = -745.0;

pub trait ContinuousDist {
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;

    /// `1 − F(x)`, overridden where it can be computed without cancellation.
    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    fn mean(&self) -> f64;

    /// Inverse CDF by bracketing and bisection.
    fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(
                "quantile",
                format!("probability {p} outside [0, 1]"),
            ));
        }
        if p == 0.0 {
            return Ok(0.0);
        }
        let mut hi = self.mean().max(f64::MIN_POSITIVE);
        let mut steps = 0;
        while self.cdf(hi) < p {
            hi *= 2.0;
            steps += 1;
            if steps > 2000 || !hi.is_finite() {
                return Err(Error::domain(
                    "quantile",
                    format!("no upper bracket for p = {p}"),
                ));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn positive(func: &'static str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            func,
            format!("{name} = {v} must be positive and finite"),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nakagami(pub NakagamiParams);

impl ContinuousDist for Nakagami {
    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let NakagamiParams { m, omega } = self.0;
        let ln = std::f64::consts::LN_2 + m * (m / omega).ln() - lgam(m) + (2.0 * m - 1.0) * x.ln()
            - m * x * x / omega;
        ln.exp()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let NakagamiParams { m, omega } = self.0;
        reg_lower_gamma(m, m * x * x / omega).unwrap_or(f64::NAN)
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let NakagamiParams { m, omega } = self.0;
        reg_upper_gamma(m, m * x * x / omega).unwrap_or(f64::NAN)
    }

    fn mean(&self) -> f64 {
        let NakagamiParams { m, omega } = self.0;
        (lgam(m + 0.5) - lgam(m)).exp() * (omega / m).sqrt()
    }
}

/// Gamma law with shape `alpha` and rate `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma {
    pub alpha: f64,
    pub beta: f64,
}

impl Gamma {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        positive("Gamma", "alpha", alpha)?;
        positive("Gamma", "beta", beta)?;
        Ok(Self { alpha, beta })
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.alpha * self.beta.ln() + (self.alpha - 1.0) * x.ln() - self.beta * x - lgam(self.alpha)
    }

    pub fn ln_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        ln_reg_lower_gamma(self.alpha, self.beta * x).unwrap_or(f64::NAN)
    }

    pub fn variance(&self) -> f64 {
        self.alpha / (self.beta * self.beta)
    }

    /// Raw moment `E[X^k] = ⟨α⟩_k / β^k`.
    pub fn moment(&self, k: u32) -> f64 {
        (lgam(self.alpha + k as f64) - lgam(self.alpha) - k as f64 * self.beta.ln()).exp()
    }
}

impl ContinuousDist for Gamma {
    fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        reg_lower_gamma(self.alpha, self.beta * x).unwrap_or(f64::NAN)
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        reg_upper_gamma(self.alpha, self.beta * x).unwrap_or(f64::NAN)
    }

    fn mean(&self) -> f64 {
        self.alpha / self.beta
    }
}

/// `ln X ~ Normal(nu, zeta²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormal {
    pub nu: f64,
    pub zeta: f64,
}

impl LogNormal {
    pub fn new(nu: f64, zeta: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::domain(
                "LogNormal",
                format!("nu = {nu} must be finite"),
            ));
        }
        positive("LogNormal", "zeta", zeta)?;
        Ok(Self { nu, zeta })
    }

    pub fn variance(&self) -> f64 {
        let s2 = self.zeta * self.zeta;
        s2.exp_m1() * (2.0 * self.nu + s2).exp()
    }

    pub fn moment(&self, k: u32) -> f64 {
        let k = k as f64;
        (k * self.nu + 0.5 * k * k * self.zeta * self.zeta).exp()
    }

    fn standard(&self, x: f64) -> f64 {
        (x.ln() - self.nu) / (self.zeta * std::f64::consts::SQRT_2)
    }
}

impl ContinuousDist for LogNormal {
    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let t = self.standard(x);
        (-t * t).exp() / (x * self.zeta * (2.0 * std::f64::consts::PI).sqrt())
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        0.5 * erfc(-self.standard(x))
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        0.5 * erfc(self.standard(x))
    }

    fn mean(&self) -> f64 {
        self.moment(1)
    }
}

/// Stacy generalized Gamma: `f(x) = p/(a^d Γ(d/p)) x^{d−1} e^{−(x/a)^p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedGamma {
    pub a: f64,
    pub d: f64,
    pub p: f64,
}

impl GeneralizedGamma {
    pub fn new(a: f64, d: f64, p: f64) -> Result<Self> {
        positive("GeneralizedGamma", "a", a)?;
        positive("GeneralizedGamma", "d", d)?;
        positive("GeneralizedGamma", "p", p)?;
        Ok(Self { a, d, p })
    }
}

impl ContinuousDist for GeneralizedGamma {
    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let ln = self.p.ln() - self.d * self.a.ln() - lgam(self.d / self.p)
            + (self.d - 1.0) * x.ln()
            - (x / self.a).powf(self.p);
        ln.exp()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        reg_lower_gamma(self.d / self.p, (x / self.a).powf(self.p)).unwrap_or(f64::NAN)
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        reg_upper_gamma(self.d / self.p, (x / self.a).powf(self.p)).unwrap_or(f64::NAN)
    }

    fn mean(&self) -> f64 {
        self.a * (lgam((self.d + 1.0) / self.p) - lgam(self.d / self.p)).exp()
    }
}

/// Product `κ·h·g` of two independent Nakagami magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleNakagami {
    pub h: NakagamiParams,
    pub g: NakagamiParams,
    pub kappa: f64,
}

impl DoubleNakagami {
    pub fn new(h: NakagamiParams, g: NakagamiParams, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::domain(
                "DoubleNakagami",
                format!("kappa = {kappa} must lie in (0, 1]"),
            ));
        }
        Ok(Self { h, g, kappa })
    }

    /// `λ = √((1/κ²)(m_h/Ω_h)(m_g/Ω_g))`.
    pub fn lambda(&self) -> f64 {
        ((self.h.m / self.h.omega) * (self.g.m / self.g.omega)).sqrt() / self.kappa
    }
}

impl ContinuousDist for DoubleNakagami {
    fn pdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let (mh, mg) = (self.h.m, self.g.m);
        let lam = self.lambda();
        let arg = 2.0 * lam * z;
        let k = match bessel_k_scaled(mg - mh, arg) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        let ln = (4.0f64).ln() + (mh + mg) * lam.ln() - lgam(mh) - lgam(mg)
            + (mh + mg - 1.0) * z.ln()
            + k.ln()
            - arg;
        ln.exp()
    }

    /// `F(z) = E_g[P(m_h, m_h z²/(κ² Ω_h g²))]`, one quadrature over `g`.
    fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let g_law = Nakagami(self.g);
        let (mh, oh, kappa) = (self.h.m, self.h.omega, self.kappa);
        let integrand = |y: f64| {
            if y <= 0.0 {
                return 0.0;
            }
            let inner = mh * z * z / (kappa * kappa * oh * y * y);
            g_law.pdf(y) * reg_lower_gamma(mh, inner).unwrap_or(f64::NAN)
        };
        Quadrature::with_tolerances(1e-14, 1e-10)
            .integrate_semi_infinite(integrand, 0.0, self.g.omega.sqrt())
            .map(|r| r.value.clamp(0.0, 1.0))
            .unwrap_or(f64::NAN)
    }

    fn mean(&self) -> f64 {
        self.kappa * Nakagami(self.h).mean() * Nakagami(self.g).mean()
    }
}

/// One of the three fitted families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedDistribution {
    Gamma(Gamma),
    LogNormal(LogNormal),
    GeneralizedGamma(GeneralizedGamma),
}

impl FittedDistribution {
    pub fn family(&self) -> &'static str {
        match self {
            FittedDistribution::Gamma(_) => "gamma",
            FittedDistribution::LogNormal(_) => "lognormal",
            FittedDistribution::GeneralizedGamma(_) => "generalized_gamma",
        }
    }
}

impl From<Gamma> for FittedDistribution {
    fn from(g: Gamma) -> Self {
        FittedDistribution::Gamma(g)
    }
}

impl From<LogNormal> for FittedDistribution {
    fn from(l: LogNormal) -> Self {
        FittedDistribution::LogNormal(l)
    }
}

impl From<GeneralizedGamma> for FittedDistribution {
    fn from(g: GeneralizedGamma) -> Self {
        FittedDistribution::GeneralizedGamma(g)
    }
}

macro_rules! dispatch {
    ($self:ident, $d:ident => $e:expr) => {
        match $self {
            FittedDistribution::Gamma($d) => $e,
            FittedDistribution::LogNormal($d) => $e,
            FittedDistribution::GeneralizedGamma($d) => $e,
        }
    };
}

impl ContinuousDist for FittedDistribution {
    fn pdf(&self, x: f64) -> f64 {
        dispatch!(self, d => d.pdf(x))
    }
    fn cdf(&self, x: f64) -> f64 {
        dispatch!(self, d => d.cdf(x))
    }
    fn sf(&self, x: f64) -> f64 {
        dispatch!(self, d => d.sf(x))
    }
    fn mean(&self) -> f64 {
        dispatch!(self, d => d.mean())
    }
}

/// Law of `max_n V_n` for independent `V_n ~ Gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxOfGammas {
    pub parts: Vec<Gamma>,
}

/// A CDF value together with whether it fell below the representable range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailValue {
    pub value: f64,
    pub ln_value: f64,
    pub saturated: bool,
}

impl MaxOfGammas {
    pub fn new(parts: Vec<Gamma>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::domain("MaxOfGammas", "need at least one component"));
        }
        Ok(Self { parts })
    }

    pub fn ln_cdf(&self, x: f64) -> f64 {
        self.parts.iter().map(|g| g.ln_cdf(x)).sum()
    }

    /// CDF as a log-domain product; values below `e^{−745}` come back as
    /// zero with `saturated` set.
    pub fn cdf_checked(&self, x: f64) -> TailValue {
        let ln_value = self.ln_cdf(x);
        if ln_value < LN_UNDERFLOW {
            TailValue {
                value: 0.0,
                ln_value,
                saturated: x > 0.0,
            }
        } else {
            TailValue {
                value: ln_value.exp(),
                ln_value,
                saturated: false,
            }
        }
    }
}

impl ContinuousDist for MaxOfGammas {
    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let ln_cdfs: Vec<f64> = self.parts.iter().map(|g| g.ln_cdf(x)).collect();
        let mut total = 0.0;
        for (k, g) in self.parts.iter().enumerate() {
            let others: f64 = ln_cdfs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, v)| v)
                .sum();
            total += (g.ln_pdf(x) + others).exp();
        }
        total
    }

    fn cdf(&self, x: f64) -> f64 {
        self.cdf_checked(x).value
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        -self.ln_cdf(x).exp_m1()
    }

    fn mean(&self) -> f64 {
        // bounded below by the largest component mean; adequate as a bracket seed
        self.parts.iter().map(|g| g.mean()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaircaseControl {
    pub steps: usize,
}

impl Default for StaircaseControl {
    fn default() -> Self {
        Self { steps: 100 }
    }
}

impl StaircaseControl {
    pub fn new(steps: usize) -> Result<Self> {
        if steps < 1 {
            return Err(Error::domain(
                "StaircaseControl",
                "steps must be at least 1",
            ));
        }
        Ok(Self { steps })
    }
}

/// `R = h₀ + max_n V_n` under the `M`-step staircase discretization of the
/// convolution `F_R(x) = ∫ F_{M_V}(x − y) dF_{h₀}(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Staircase {
    pub direct: Nakagami,
    pub mv: MaxOfGammas,
    pub ctl: StaircaseControl,
}

impl Staircase {
    pub fn new(direct: NakagamiParams, riss: Vec<Gamma>, ctl: StaircaseControl) -> Result<Self> {
        StaircaseControl::new(ctl.steps)?;
        Ok(Self {
            direct: Nakagami(direct),
            mv: MaxOfGammas::new(riss)?,
            ctl,
        })
    }

    /// `F_h(mx/M) − F_h((m−1)x/M)` for `m = 1..=M`, each difference taken on
    /// whichever side of the median avoids cancellation.
    fn direct_masses(&self, x: f64) -> Vec<f64> {
        let steps = self.ctl.steps;
        let mf = steps as f64;
        let grid: Vec<(f64, f64)> = (0..=steps)
            .map(|m| {
                let y = m as f64 * x / mf;
                (self.direct.cdf(y), self.direct.sf(y))
            })
            .collect();
        grid.windows(2)
            .map(|w| {
                if w[1].0 < 0.5 {
                    w[1].0 - w[0].0
                } else {
                    w[0].1 - w[1].1
                }
            })
            .collect()
    }
}

impl ContinuousDist for Staircase {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let mf = self.ctl.steps as f64;
        let masses = self.direct_masses(x);
        let mut acc = 0.0;
        for (i, dm) in masses.iter().enumerate() {
            let m = (i + 1) as f64;
            acc += dm * self.mv.cdf((mf - m + 1.0) * x / mf);
        }
        acc.clamp(0.0, 1.0)
    }

    /// `1 − Φ(x) = (1 − F_h(x)) + Σ_m ΔF_h(m) · (1 − F_{M_V}((M−m+1)x/M))`.
    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let mf = self.ctl.steps as f64;
        let masses = self.direct_masses(x);
        let mut acc = self.direct.sf(x);
        for (i, dm) in masses.iter().enumerate() {
            let m = (i + 1) as f64;
            acc += dm * self.mv.sf((mf - m + 1.0) * x / mf);
        }
        acc.clamp(0.0, 1.0)
    }

    /// Derivative of the staircase sum:
    /// `Σ_m [(m/M) f_h(mx/M) − ((m−1)/M) f_h((m−1)x/M)] F_{M_V}(s_m)
    ///  + [F_h(mx/M) − F_h((m−1)x/M)] ((M−m+1)/M) f_{M_V}(s_m)`, `s_m = (M−m+1)x/M`.
    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let steps = self.ctl.steps;
        let mf = steps as f64;
        let masses = self.direct_masses(x);
        let weighted: Vec<f64> = (0..=steps)
            .map(|m| {
                let c = m as f64 / mf;
                c * self.direct.pdf(c * x)
            })
            .collect();
        let mut acc = 0.0;
        for (i, dm) in masses.iter().enumerate() {
            let m = (i + 1) as f64;
            let c = (mf - m + 1.0) / mf;
            let s = c * x;
            acc += (weighted[i + 1] - weighted[i]) * self.mv.cdf(s) + dm * c * self.mv.pdf(s);
        }
        acc.max(0.0)
    }

    fn mean(&self) -> f64 {
        self.direct.mean() + self.mv.mean()
    }
}

/// `F_{M_V}(x) = Π_n F_{V_n}(x)`.
pub fn mv_cdf(riss: &[Gamma], x: f64) -> Result<f64> {
    Ok(MaxOfGammas::new(riss.to_vec())?.cdf(x))
}

/// Staircase CDF of `h₀ + max_n V_n`.
pub fn r_cdf(
    direct: &NakagamiParams,
    riss: &[Gamma],
    x: f64,
    ctl: StaircaseControl,
) -> Result<f64> {
    Ok(Staircase::new(*direct, riss.to_vec(), ctl)?.cdf(x))
}

/// Staircase density of `h₀ + max_n V_n`.
pub fn r_pdf(
    direct: &NakagamiParams,
    riss: &[Gamma],
    x: f64,
    ctl: StaircaseControl,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("r_pdf", format!("x = {x} must be positive")));
    }
    Ok(Staircase::new(*direct, riss.to_vec(), ctl)?.pdf(x))
}
