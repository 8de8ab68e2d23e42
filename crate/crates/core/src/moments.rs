//! Method-of-moments engine: raw moment sequences for every variable in the
//! chain `h₀ → U → V → T, M_V → Z, R`, and the parametric fitters.

use log::{info, warn};

use crate::dist::{ContinuousDist, Gamma, GeneralizedGamma, LogNormal, MaxOfGammas};
use crate::error::{Error, Result};
use crate::model::{NakagamiParams, Topology};
use crate::quad::Quadrature;
use crate::special::{lgam, ln_lauricella_fa, log_add_exp, LauricellaArgs, SeriesControl};

pub use crate::dist::FittedDistribution;

/// Default number of raw moments carried through the engine.
pub const DEFAULT_ORDER: usize = 4;

/// Raw moments `μ(1), …, μ(K)` of a nonnegative random variable.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    mu: Vec<f64>,
}

impl MomentVector {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::domain("MomentVector", "need at least one moment"));
        }
        if let Some((i, v)) = mu
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
        {
            return Err(Error::domain(
                "MomentVector",
                format!("μ({}) = {v} must be positive and finite", i + 1),
            ));
        }
        Ok(Self { mu })
    }

    /// Moments `f(1), …, f(order)`.
    pub fn from_fn(order: usize, f: impl Fn(u32) -> f64) -> Result<Self> {
        Self::new((1..=order as u32).map(f).collect())
    }

    /// Moments of the point mass at `c > 0`.
    pub fn constant(c: f64, order: usize) -> Result<Self> {
        Self::from_fn(order, |k| c.powi(k as i32))
    }

    pub fn order(&self) -> usize {
        self.mu.len()
    }

    /// `μ(k)`, with `μ(0) = 1`.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.mu[k - 1]
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mu
    }

    pub fn mean(&self) -> f64 {
        self.mu[0]
    }

    pub fn variance(&self) -> f64 {
        self.mu[1] - self.mu[0] * self.mu[0]
    }

    /// Lyapunov check `μ(k)² ≤ μ(k−1) μ(k+1)` with a relative slack.
    pub fn is_log_convex(&self, slack: f64) -> bool {
        (1..self.order()).all(|k| {
            let lhs = self.get(k) * self.get(k);
            lhs <= self.get(k - 1) * self.get(k + 1) * (1.0 + slack)
        })
    }

    fn require(&self, order: usize) -> Result<()> {
        if self.order() < order {
            return Err(Error::domain(
                "MomentVector",
                format!(
                    "order {} requested from a vector of order {}",
                    order,
                    self.order()
                ),
            ));
        }
        Ok(())
    }

    fn truncated(&self, order: usize) -> Self {
        Self {
            mu: self.mu[..order].to_vec(),
        }
    }
}

/// `μ_h(k) = Γ(m + k/2)/Γ(m) · (m/Ω)^{−k/2}`.
pub fn nakagami_moment(p: &NakagamiParams, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let half = 0.5 * k as f64;
    (lgam(p.m + half) - lgam(p.m) - half * (p.m / p.omega).ln()).exp()
}

/// `μ_U(k) = λ^{−k} Γ(m_h + k/2) Γ(m_g + k/2)/(Γ(m_h) Γ(m_g))` for `U = κ h g`.
pub fn double_nakagami_moment(h: &NakagamiParams, g: &NakagamiParams, kappa: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let half = 0.5 * k as f64;
    let ln_lambda = 0.5 * ((h.m / h.omega).ln() + (g.m / g.omega).ln()) - kappa.ln();
    (lgam(h.m + half) + lgam(g.m + half) - lgam(h.m) - lgam(g.m) - k as f64 * ln_lambda).exp()
}

fn binomial_rows(order: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for n in 1..=order {
        let prev = &rows[n - 1];
        let mut row = vec![1.0; n + 1];
        for j in 1..n {
            row[j] = prev[j - 1] + prev[j];
        }
        rows.push(row);
    }
    rows
}

fn fold_pair(acc: &[f64], part: &MomentVector, binom: &[Vec<f64>]) -> Vec<f64> {
    // acc[0] = 1 holds μ(0)
    (1..acc.len())
        .map(|k| {
            (0..=k)
                .map(|j| binom[k][j] * acc[j] * part.get(k - j))
                .sum()
        })
        .collect()
}

/// Moments of a sum of independent variables by pairwise binomial folding,
/// `μ_{X+Y}(k) = Σ_j C(k, j) μ_X(j) μ_Y(k−j)`.
pub fn sum_moments(parts: &[MomentVector], order: usize) -> Result<MomentVector> {
    if parts.is_empty() {
        return Err(Error::domain("sum_moments", "need at least one part"));
    }
    for p in parts {
        p.require(order)?;
    }
    let binom = binomial_rows(order);
    let mut acc: Vec<f64> = std::iter::once(1.0)
        .chain(parts[0].as_slice()[..order].iter().copied())
        .collect();
    for p in &parts[1..] {
        let next = fold_pair(&acc, p, &binom);
        acc[1..].copy_from_slice(&next);
    }
    MomentVector::new(acc[1..].to_vec())
}

/// Moments of the sum of `count` i.i.d. copies.
pub fn iid_sum_moments(part: &MomentVector, count: usize, order: usize) -> Result<MomentVector> {
    if count == 0 {
        return Err(Error::domain("iid_sum_moments", "need at least one term"));
    }
    part.require(order)?;
    let part = part.truncated(order);
    sum_moments(&vec![part; count], order)
}

/// Gamma with matched mean and variance: `α = μ₁²/(μ₂−μ₁²)`, `β = μ₁/(μ₂−μ₁²)`.
pub fn fit_gamma(mu1: f64, mu2: f64) -> Result<Gamma> {
    let var = checked_variance(mu1, mu2)?;
    Gamma::new(mu1 * mu1 / var, mu1 / var)
}

/// Log-Normal with matched first two moments:
/// `ν = ln(μ₁²/√μ₂)`, `ζ = √ln(μ₂/μ₁²)`.
pub fn fit_lognormal(mu1: f64, mu2: f64) -> Result<LogNormal> {
    checked_variance(mu1, mu2)?;
    let nu = 2.0 * mu1.ln() - 0.5 * mu2.ln();
    let zeta = (mu2.ln() - 2.0 * mu1.ln()).sqrt();
    LogNormal::new(nu, zeta)
}

fn checked_variance(mu1: f64, mu2: f64) -> Result<f64> {
    if !(mu1 > 0.0) || !mu1.is_finite() || !(mu2 > 0.0) || !mu2.is_finite() {
        return Err(Error::domain(
            "fit",
            format!("moments ({mu1}, {mu2}) must be positive and finite"),
        ));
    }
    let var = mu2 - mu1 * mu1;
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance {
            mu1_sq: mu1 * mu1,
            mu2,
        });
    }
    Ok(var)
}

/// Law of `X²` when `X ~ Gamma(α, β)`: `GG(a = β^{−2}, d = α/2, p = 1/2)`.
pub fn gamma_to_gen_gamma_sq(g: &Gamma) -> GeneralizedGamma {
    GeneralizedGamma {
        a: 1.0 / (g.beta * g.beta),
        d: 0.5 * g.alpha,
        p: 0.5,
    }
}

/// Log-Normal with the Gamma's mean and variance:
/// `ζ² = ln((α+1)/α)`, `ν = ln((α/β)·√α/√(α+1))`.
pub fn gamma_tail_lognormal(g: &Gamma) -> LogNormal {
    let a = g.alpha;
    LogNormal {
        nu: (a / g.beta).ln() + 0.5 * (a.ln() - (a + 1.0).ln()),
        zeta: (1.0 / a).ln_1p().sqrt(),
    }
}

/// Exact moments of `U = κ h g`.
pub fn cascade_moments(
    h: &NakagamiParams,
    g: &NakagamiParams,
    kappa: f64,
    order: usize,
) -> Result<MomentVector> {
    MomentVector::from_fn(order, |k| double_nakagami_moment(h, g, kappa, k))
}

/// Gamma fit of one element's cascade `U`, and of the RIS sum
/// `V = Σ_l U_l ≈ Gamma(L α_U, β_U)`.
pub fn ris_sum_fit(
    h: &NakagamiParams,
    g: &NakagamiParams,
    kappa: f64,
    elements: usize,
) -> Result<Gamma> {
    if elements < 1 {
        return Err(Error::domain(
            "ris_sum_fit",
            "a RIS needs at least one element",
        ));
    }
    let u = fit_gamma(
        double_nakagami_moment(h, g, kappa, 1),
        double_nakagami_moment(h, g, kappa, 2),
    )?;
    Gamma::new(elements as f64 * u.alpha, u.beta)
}

/// Gamma fits of every `V_n` in the topology.
pub fn ris_sum_fits(topo: &Topology) -> Result<Vec<Gamma>> {
    topo.riss
        .iter()
        .enumerate()
        .map(|(n, r)| ris_sum_fit(&topo.hop1[n], &topo.hop2[n], r.kappa, r.elements))
        .collect()
}

/// Exact moments of `Z = h₀ + Σ_n Σ_l U_nl`.
pub fn z_moments(topo: &Topology, order: usize) -> Result<MomentVector> {
    let mut parts = Vec::with_capacity(topo.n_ris() + 1);
    parts.push(MomentVector::from_fn(order, |k| {
        nakagami_moment(&topo.direct, k)
    })?);
    for (n, r) in topo.riss.iter().enumerate() {
        let u = cascade_moments(&topo.hop1[n], &topo.hop2[n], r.kappa, order)?;
        parts.push(iid_sum_moments(&u, r.elements, order)?);
    }
    sum_moments(&parts, order)
}

fn check_fits(riss: &[Gamma]) -> Result<()> {
    if riss.is_empty() {
        return Err(Error::domain("mv_moment", "need at least one RIS"));
    }
    for g in riss {
        Gamma::new(g.alpha, g.beta)?;
    }
    Ok(())
}

/// `μ_{M_V}(k)` for `M_V = max_n V_n`, `V_n ~ Gamma(A_n, β_n)`, through the
/// Lauricella series
///
/// `μ(k) = S^{−k} Π_t χ_t^{A_t} Σ_n Γ(Λ+k)/Γ(A_n) Π_{t≠n} 1/Γ(A_t+1)
///         · F_A^{(N−1)}[Λ+k; 1, …, 1; (A_t+1)_{t≠n}; (χ_t)_{t≠n}]`
///
/// with `S = Σβ_t`, `χ_t = β_t/S`, `Λ = Σ A_t`.
pub fn mv_moment(riss: &[Gamma], k: u32, ctl: &SeriesControl) -> Result<f64> {
    check_fits(riss)?;
    let sum_beta: f64 = riss.iter().map(|g| g.beta).sum();
    let chi: Vec<f64> = riss.iter().map(|g| g.beta / sum_beta).collect();
    let shapes: Vec<f64> = riss.iter().map(|g| g.alpha).collect();
    let lambda: f64 = shapes.iter().sum();
    let kf = k as f64;

    let ln_prefix = -kf * sum_beta.ln()
        + shapes
            .iter()
            .zip(&chi)
            .map(|(a, c)| a * c.ln())
            .sum::<f64>();
    let mut ln_total = f64::NEG_INFINITY;
    for n in 0..riss.len() {
        let others: Vec<usize> = (0..riss.len()).filter(|&t| t != n).collect();
        let c: Vec<f64> = others.iter().map(|&t| shapes[t] + 1.0).collect();
        let x: Vec<f64> = others.iter().map(|&t| chi[t]).collect();
        let args = LauricellaArgs::unit_b(lambda + kf, c, x)?;
        let series = ln_lauricella_fa(&args, ctl)
            .map_err(|e| e.context(format!("mv_moment k={k}, term n={n}")))?;
        let ln_term = lgam(lambda + kf)
            - lgam(shapes[n])
            - others.iter().map(|&t| lgam(shapes[t] + 1.0)).sum::<f64>()
            + series.ln_value;
        ln_total = log_add_exp(ln_total, ln_term);
    }
    Ok((ln_prefix + ln_total).exp())
}

/// `μ_{M_V}(k) = Σ_n ∫ x^k f_{V_n}(x) Π_{t≠n} F_{V_t}(x) dx` by adaptive quadrature.
pub fn mv_moment_quadrature(riss: &[Gamma], k: u32, quad: &Quadrature) -> Result<f64> {
    check_fits(riss)?;
    let kf = k as f64;
    // breakpoints spanning every component's bulk
    let mut pts = vec![0.0];
    let mut marks: Vec<f64> = Vec::new();
    for g in riss {
        let sd = g.variance().sqrt();
        for z in [-8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0, 16.0] {
            let p = g.mean() + z * sd;
            if p > 0.0 {
                marks.push(p);
            }
        }
    }
    marks.sort_by(f64::total_cmp);
    marks.dedup();
    pts.extend(marks);
    let top = *pts.last().unwrap_or(&1.0);
    let rate = riss.iter().map(|g| g.beta).fold(f64::INFINITY, f64::min);
    pts.push(top + 60.0 / rate);

    let mut total = 0.0;
    for n in 0..riss.len() {
        let integrand = |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            let mut ln = kf * x.ln() + riss[n].ln_pdf(x);
            for (t, g) in riss.iter().enumerate() {
                if t != n {
                    ln += g.ln_cdf(x);
                }
            }
            ln.exp()
        };
        total += quad
            .integrate_breaks(integrand, &pts)
            .map_err(|e| e.context(format!("mv_moment quadrature k={k}, term n={n}")))?
            .value;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MvPath {
    Lauricella,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvMoment {
    pub value: f64,
    pub path: MvPath,
}

/// Quadrature settings used when the series path gives up.
pub fn mv_quadrature() -> Quadrature {
    Quadrature {
        abs_tol: 0.0,
        rel_tol: 1e-11,
        max_intervals: 20_000,
    }
}

/// Series path first, quadrature on truncation failure.
pub fn mv_moment_auto(riss: &[Gamma], k: u32, ctl: &SeriesControl) -> Result<MvMoment> {
    match mv_moment(riss, k, ctl) {
        Ok(value) => {
            info!("mv_moment k={k}: Lauricella series");
            Ok(MvMoment {
                value,
                path: MvPath::Lauricella,
            })
        }
        Err(e) if matches!(root(&e), Error::Truncation { .. }) => {
            warn!("mv_moment k={k}: series truncated ({e}); falling back to quadrature");
            let value = mv_moment_quadrature(riss, k, &mv_quadrature())?;
            Ok(MvMoment {
                value,
                path: MvPath::Quadrature,
            })
        }
        Err(e) => Err(e),
    }
}

fn root(e: &Error) -> &Error {
    match e {
        Error::Context { source, .. } => root(source),
        other => other,
    }
}

/// Which route `r_moments` takes for `μ_{M_V}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MvMethod {
    Auto(SeriesControl),
    Lauricella(SeriesControl),
    Quadrature(Quadrature),
}

impl Default for MvMethod {
    fn default() -> Self {
        MvMethod::Auto(SeriesControl::default())
    }
}

/// Moments of `M_V` for orders `1..=order`.
pub fn mv_moments(
    riss: &[Gamma],
    order: usize,
    method: &MvMethod,
) -> Result<(MomentVector, Vec<MvPath>)> {
    let mut values = Vec::with_capacity(order);
    let mut paths = Vec::with_capacity(order);
    for k in 1..=order as u32 {
        let m = match method {
            MvMethod::Auto(ctl) => mv_moment_auto(riss, k, ctl)?,
            MvMethod::Lauricella(ctl) => MvMoment {
                value: mv_moment(riss, k, ctl)?,
                path: MvPath::Lauricella,
            },
            MvMethod::Quadrature(q) => MvMoment {
                value: mv_moment_quadrature(riss, k, q)?,
                path: MvPath::Quadrature,
            },
        };
        values.push(m.value);
        paths.push(m.path);
    }
    Ok((MomentVector::new(values)?, paths))
}

/// `μ_R(k) = Σ_v C(k, v) μ_{h₀}(v) μ_{M_V}(k−v)`.
pub fn r_moments(
    direct: &NakagamiParams,
    riss: &[Gamma],
    order: usize,
    method: &MvMethod,
) -> Result<MomentVector> {
    let (mv, _) = mv_moments(riss, order, method)?;
    let h0 = MomentVector::from_fn(order, |k| nakagami_moment(direct, k))?;
    sum_moments(&[h0, mv], order)
}

/// Moment check of the max law against its own CDF, used by callers that
/// want a third opinion: `E[M^k] = ∫ k x^{k−1} (1 − F(x)) dx`.
pub fn mv_moment_by_survival(riss: &[Gamma], k: u32) -> Result<f64> {
    let law = MaxOfGammas::new(riss.to_vec())?;
    let kf = k as f64;
    let scale = law.mean();
    Quadrature::with_tolerances(0.0, 1e-11)
        .integrate_semi_infinite(|x| kf * x.powf(kf - 1.0) * law.sf(x), 0.0, scale)
        .map(|r| r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_topology, presets};
    use approx::assert_relative_eq;

    fn nak(m: f64, omega: f64) -> NakagamiParams {
        NakagamiParams::new(m, omega).unwrap()
    }

    #[test]
    fn nakagami_moment_basics() {
        let p = nak(2.7, 0.4);
        assert_eq!(nakagami_moment(&p, 0), 1.0);
        assert_relative_eq!(nakagami_moment(&p, 2), 0.4, max_relative = 1e-13);
        assert_relative_eq!(
            nakagami_moment(&nak(1.0, 1.0), 1),
            std::f64::consts::PI.sqrt() / 2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn double_nakagami_moment_basics() {
        let one = nak(1.0, 1.0);
        assert_relative_eq!(
            double_nakagami_moment(&one, &one, 1.0, 2),
            1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            double_nakagami_moment(&one, &one, 1.0, 1),
            std::f64::consts::PI / 4.0,
            max_relative = 1e-14
        );
        let (h, g) = (nak(2.0, 0.5), nak(3.0, 0.2));
        for k in 0..6 {
            let split = 0.9f64.powi(k as i32) * nakagami_moment(&h, k) * nakagami_moment(&g, k);
            assert_relative_eq!(
                double_nakagami_moment(&h, &g, 0.9, k),
                split,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn sum_of_one_part_is_identity() {
        let v = MomentVector::new(vec![1.5, 3.0, 7.0, 20.0]).unwrap();
        assert_eq!(sum_moments(std::slice::from_ref(&v), 4).unwrap(), v);
    }

    #[test]
    fn sum_of_constants() {
        let a = MomentVector::constant(1.5, 4).unwrap();
        let b = MomentVector::constant(2.25, 4).unwrap();
        let s = sum_moments(&[a, b], 4).unwrap();
        for k in 1..=4 {
            assert_relative_eq!(s.get(k), 3.75f64.powi(k as i32), max_relative = 1e-14);
        }
    }

    /// Brute-force multinomial expansion of `E[(X_1 + … + X_n)^k]`.
    fn multinomial_oracle(parts: &[MomentVector], k: usize) -> f64 {
        fn rec(
            parts: &[MomentVector],
            idx: usize,
            left: usize,
            coef: f64,
            prod: f64,
            fact: &[f64],
        ) -> f64 {
            if idx == parts.len() - 1 {
                return coef / fact[left] * prod * parts[idx].get(left);
            }
            (0..=left)
                .map(|j| {
                    rec(
                        parts,
                        idx + 1,
                        left - j,
                        coef / fact[j],
                        prod * parts[idx].get(j),
                        fact,
                    )
                })
                .sum()
        }
        let fact: Vec<f64> = (0..=k)
            .scan(1.0, |acc, i| {
                if i > 0 {
                    *acc *= i as f64;
                }
                Some(*acc)
            })
            .collect();
        rec(parts, 0, k, fact[k], 1.0, &fact)
    }

    #[test]
    fn folding_matches_multinomial_expansion() {
        let parts = [
            MomentVector::new(vec![0.8, 0.9, 1.2, 1.9]).unwrap(),
            MomentVector::new(vec![2.0, 4.5, 11.0, 29.0]).unwrap(),
            MomentVector::new(vec![0.3, 0.1, 0.04, 0.02]).unwrap(),
        ];
        for n in 1..=3 {
            let s = sum_moments(&parts[..n], 4).unwrap();
            for k in 1..=4 {
                assert_relative_eq!(
                    s.get(k),
                    multinomial_oracle(&parts[..n], k),
                    max_relative = 1e-14
                );
            }
        }
    }

    #[test]
    fn iid_sum_first_two_moments() {
        let (h, g) = (nak(2.2, 3e-6), nak(2.8, 5e-7));
        let u = cascade_moments(&h, &g, 1.0, 4).unwrap();
        let t = iid_sum_moments(&u, 25, 4).unwrap();
        let (m1, m2) = (u.get(1), u.get(2));
        assert_relative_eq!(t.get(1), 25.0 * m1, max_relative = 1e-13);
        assert_relative_eq!(
            t.get(2),
            25.0 * m2 + 25.0 * 24.0 * m1 * m1,
            max_relative = 1e-13
        );
    }

    #[test]
    fn fit_gamma_arithmetic() {
        let g = fit_gamma(4.0, 18.0).unwrap();
        assert_relative_eq!(g.alpha, 8.0, max_relative = 1e-14);
        assert_relative_eq!(g.beta, 2.0, max_relative = 1e-14);
        let back = fit_gamma(g.moment(1), g.moment(2)).unwrap();
        assert_relative_eq!(back.alpha, g.alpha, max_relative = 1e-12);
        assert!(matches!(
            fit_gamma(2.0, 4.0),
            Err(Error::DegenerateVariance { .. })
        ));
        assert!(fit_gamma(2.0, 3.0).is_err());
    }

    #[test]
    fn fit_lognormal_arithmetic() {
        let l = fit_lognormal(1.0, std::f64::consts::E).unwrap();
        assert_relative_eq!(l.nu, -0.5, max_relative = 1e-14);
        assert_relative_eq!(l.zeta, 1.0, max_relative = 1e-14);
        let src = LogNormal::new(0.7, 0.3).unwrap();
        let back = fit_lognormal(src.moment(1), src.moment(2)).unwrap();
        assert_relative_eq!(back.nu, 0.7, max_relative = 1e-12);
        assert_relative_eq!(back.zeta, 0.3, max_relative = 1e-10);
    }

    #[test]
    fn squared_lognormal_fit_formula() {
        let (m2, m4) = (2.5e-10, 7.0e-20);
        let l = fit_lognormal(m2, m4).unwrap();
        assert_relative_eq!(l.nu, (m2 * m2 / m4.sqrt()).ln(), max_relative = 1e-12);
        assert_relative_eq!(l.zeta, (m4 / (m2 * m2)).ln().sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn generalized_gamma_map() {
        let gg = gamma_to_gen_gamma_sq(&Gamma::new(8.0, 2.0).unwrap());
        assert_relative_eq!(gg.a, 0.25);
        assert_relative_eq!(gg.d, 4.0);
        assert_relative_eq!(gg.p, 0.5);
        let gg = gamma_to_gen_gamma_sq(&Gamma::new(1.0, 1.0).unwrap());
        assert_eq!((gg.a, gg.d, gg.p), (1.0, 0.5, 0.5));
    }

    #[test]
    fn tail_lognormal_matches_mean_and_variance() {
        let g = Gamma::new(100.0, 1.0).unwrap();
        let l = gamma_tail_lognormal(&g);
        assert_relative_eq!(l.zeta * l.zeta, 1.01f64.ln(), max_relative = 1e-13);
        assert_relative_eq!(l.nu, 4.600_19, epsilon = 1e-5);
        assert_relative_eq!(l.mean(), 100.0, max_relative = 1e-12);
        assert_relative_eq!(l.variance(), 100.0, max_relative = 1e-10);
    }

    #[test]
    fn tail_lognormal_lower_decile() {
        let g = Gamma::new(30.0, 2.0).unwrap();
        let l = gamma_tail_lognormal(&g);
        let q10 = g.quantile(0.1).unwrap();
        let worst = (1..=200)
            .map(|i| q10 * i as f64 / 200.0)
            .map(|x| (g.cdf(x) - l.cdf(x)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.01, "{worst}");
    }

    #[test]
    fn mv_moment_single_ris_is_gamma_moment() {
        let g = Gamma::new(113.0, 4.0e5).unwrap();
        for k in 1..=4 {
            let v = mv_moment(&[g], k, &SeriesControl::default()).unwrap();
            assert_relative_eq!(v, g.moment(k), max_relative = 1e-12);
        }
    }

    #[test]
    fn mv_moment_two_identical_matches_quadrature() {
        let g = Gamma::new(40.0, 3.0).unwrap();
        let q = mv_quadrature();
        for k in 1..=4 {
            let series = mv_moment(&[g, g], k, &SeriesControl::default()).unwrap();
            let quad = mv_moment_quadrature(&[g, g], k, &q).unwrap();
            assert_relative_eq!(series, quad, max_relative = 1e-6);
        }
    }

    #[test]
    fn mv_moment_three_distinct_all_routes_agree() {
        let riss = [
            Gamma::new(25.0, 2.0).unwrap(),
            Gamma::new(60.0, 5.5).unwrap(),
            Gamma::new(12.0, 1.1).unwrap(),
        ];
        for k in 1..=4 {
            let series = mv_moment(&riss, k, &SeriesControl::default()).unwrap();
            let quad = mv_moment_quadrature(&riss, k, &mv_quadrature()).unwrap();
            let surv = mv_moment_by_survival(&riss, k).unwrap();
            assert_relative_eq!(series, quad, max_relative = 1e-6);
            assert_relative_eq!(surv, quad, max_relative = 1e-6);
        }
    }

    #[test]
    fn mv_moment_dominates_subsets() {
        let riss = [
            Gamma::new(25.0, 2.0).unwrap(),
            Gamma::new(60.0, 5.5).unwrap(),
            Gamma::new(12.0, 1.1).unwrap(),
        ];
        let ctl = SeriesControl::default();
        let full = mv_moment(&riss, 2, &ctl).unwrap();
        assert!(full >= mv_moment(&riss[..2], 2, &ctl).unwrap());
        assert!(full >= mv_moment(&riss[1..], 2, &ctl).unwrap());
    }

    #[test]
    fn auto_falls_back_on_truncation() {
        let riss = [
            Gamma::new(25.0, 2.0).unwrap(),
            Gamma::new(60.0, 5.5).unwrap(),
        ];
        let tight = SeriesControl {
            rel_tol: 1e-10,
            max_order: 3,
        };
        let m = mv_moment_auto(&riss, 1, &tight).unwrap();
        assert_eq!(m.path, MvPath::Quadrature);
        let m = mv_moment_auto(&riss, 1, &SeriesControl::default()).unwrap();
        assert_eq!(m.path, MvPath::Lauricella);
    }

    #[test]
    fn r_moments_single_element() {
        let (h0, h, g) = (nak(2.5, 1e-6), nak(2.0, 3e-5), nak(3.0, 2e-5));
        let v = ris_sum_fit(&h, &g, 1.0, 1).unwrap();
        let r = r_moments(&h0, &[v], 4, &MvMethod::default()).unwrap();
        assert_relative_eq!(
            r.get(1),
            nakagami_moment(&h0, 1) + double_nakagami_moment(&h, &g, 1.0, 1),
            max_relative = 1e-12
        );
        assert!(r.get(1) >= nakagami_moment(&h0, 1));
    }

    #[test]
    fn z_moments_match_explicit_forms() {
        let topo = build_topology(&presets::reference(&presets::L1, &presets::D1, 1)).unwrap();
        let z = z_moments(&topo, 4).unwrap();
        // μ_Z(1) = μ_h0(1) + Σ_n L_n μ_Un(1)
        // μ_Z(2) = μ_h0(2) + 2 μ_h0(1) μ_T(1) + μ_T(2),
        // μ_T(2) = Σ_n L_n μ_Un(2) + Σ_n L_n(L_n−1) μ_Un(1)² + Σ_{n≠n'} L_n L_n' μ_Un(1) μ_Un'(1)
        let u1: Vec<f64> = (0..5)
            .map(|n| double_nakagami_moment(&topo.hop1[n], &topo.hop2[n], 1.0, 1))
            .collect();
        let u2: Vec<f64> = (0..5)
            .map(|n| double_nakagami_moment(&topo.hop1[n], &topo.hop2[n], 1.0, 2))
            .collect();
        let l: Vec<f64> = topo.riss.iter().map(|r| r.elements as f64).collect();
        let t1: f64 = (0..5).map(|n| l[n] * u1[n]).sum();
        let mut t2: f64 = (0..5)
            .map(|n| l[n] * u2[n] + l[n] * (l[n] - 1.0) * u1[n] * u1[n])
            .sum();
        for n in 0..5 {
            for m in 0..5 {
                if n != m {
                    t2 += l[n] * l[m] * u1[n] * u1[m];
                }
            }
        }
        let h1 = nakagami_moment(&topo.direct, 1);
        let h2 = nakagami_moment(&topo.direct, 2);
        assert_relative_eq!(z.get(1), h1 + t1, max_relative = 1e-12);
        assert_relative_eq!(z.get(2), h2 + 2.0 * h1 * t1 + t2, max_relative = 1e-12);
        assert!(z.is_log_convex(1e-12));
    }
}
