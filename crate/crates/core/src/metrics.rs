//! Outage probability, ergodic capacity and energy efficiency of the
//! exhaustive (ERA) and opportunistic (ORA) schemes under each fitted model.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::{ContinuousDist, Gamma, LogNormal, Staircase, StaircaseControl};
use crate::error::{Error, Result};
use crate::model::{dbm_to_mw, CircuitPower, LinkBudget, Topology};
use crate::moments::{
    fit_gamma, fit_lognormal, r_moments, ris_sum_fits, z_moments, MomentVector, MvMethod,
};
use crate::quad::Quadrature;
use crate::special::upsilon;

/// Survival level at which the capacity integrand is truncated.
pub const EC_TAIL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "ERA")]
    Era,
    #[serde(rename = "ORA")]
    Ora,
    /// One RIS holding every element; ERA and ORA coincide.
    #[serde(rename = "C-RIS")]
    Centralized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Metric {
    Op,
    Ec,
    Ee,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GammaAnalytic,
    LognormalAnalytic,
    Quadrature,
    Staircase,
    MonteCarlo,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Era => "ERA",
            Scheme::Ora => "ORA",
            Scheme::Centralized => "C-RIS",
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Op => "OP",
            Metric::Ec => "EC",
            Metric::Ee => "EE",
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::GammaAnalytic => "gamma-analytic",
            Method::LognormalAnalytic => "lognormal-analytic",
            Method::Quadrature => "quadrature",
            Method::Staircase => "staircase",
            Method::MonteCarlo => "monte-carlo",
        })
    }
}

/// Diagnostics attached to a metric value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultMeta {
    /// Standard error for Monte Carlo values, error estimate for quadrature.
    pub uncertainty: Option<f64>,
    pub tolerance: Option<f64>,
    pub staircase_steps: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub scheme: Scheme,
    pub metric: Metric,
    pub method: Method,
    pub value: f64,
    pub meta: ResultMeta,
}

impl MetricResult {
    pub fn new(scheme: Scheme, metric: Metric, method: Method, value: f64) -> Result<Self> {
        let ok = match metric {
            Metric::Op => (0.0..=1.0).contains(&value),
            Metric::Ec | Metric::Ee => value >= 0.0 && value.is_finite(),
        };
        if !ok {
            return Err(Error::domain(
                "MetricResult",
                format!("{scheme} {metric} value {value} out of range"),
            ));
        }
        Ok(Self {
            scheme,
            metric,
            method,
            value,
            meta: ResultMeta::default(),
        })
    }

    pub fn with_meta(mut self, meta: ResultMeta) -> Self {
        self.meta = meta;
        self
    }
}

fn check_snr(rho_bar: f64, rho_th: f64) -> Result<()> {
    if !(rho_bar > 0.0) || !(rho_th >= 0.0) || !rho_bar.is_finite() {
        return Err(Error::domain(
            "outage",
            format!("need ρ̄ > 0 and ρ_th ≥ 0, got ({rho_bar}, {rho_th})"),
        ));
    }
    Ok(())
}

/// Magnitude threshold `√(ρ_th/ρ̄)`.
fn magnitude_threshold(rho_bar: f64, rho_th: f64) -> f64 {
    (rho_th / rho_bar).sqrt()
}

/// `Pr(ρ̄Z² ≤ ρ_th)` with `Z ~ Gamma(α_Z, β_Z)`.
pub fn op_era_gamma(fit_z: &Gamma, rho_bar: f64, rho_th: f64) -> Result<f64> {
    check_snr(rho_bar, rho_th)?;
    Ok(fit_z.cdf(magnitude_threshold(rho_bar, rho_th)))
}

/// `Pr(ρ̄Z² ≤ ρ_th)` with `Z ~ LogNormal(ν_Z, ζ_Z)`.
pub fn op_era_lognormal(fit_z: &LogNormal, rho_bar: f64, rho_th: f64) -> Result<f64> {
    check_snr(rho_bar, rho_th)?;
    Ok(fit_z.cdf(magnitude_threshold(rho_bar, rho_th)))
}

/// `(1/ln2) ∫₀^∞ (1 − F_X(√(z/ρ̄)))/(1 + z) dz` for a nonnegative magnitude
/// `X`, written in `t = ln x` as `(1/ln2) ∫ 2σ(ln ρ̄ + 2t) S_X(eᵗ) dt` with
/// the logistic `σ`. The part below `t_lo`, where `S_X = 1` to machine
/// precision, is added in closed form; the part above the point where
/// `S_X < 1e-12` is dropped.
pub fn ec_from_survival<F: Fn(f64) -> f64>(sf: F, location: f64, rho_bar: f64) -> Result<f64> {
    if !(rho_bar > 0.0) || !rho_bar.is_finite() {
        return Err(Error::domain(
            "ergodic_capacity",
            format!("ρ̄ = {rho_bar} must be positive"),
        ));
    }
    if !(location > 0.0) || !location.is_finite() {
        return Err(Error::domain(
            "ergodic_capacity",
            format!("location {location} must be positive"),
        ));
    }
    let c = rho_bar.ln();
    let mut x_hi = location;
    let mut doublings = 0;
    while sf(x_hi) >= EC_TAIL {
        x_hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::domain(
                "ergodic_capacity",
                "survival function does not decay",
            ));
        }
    }
    let t_hi = x_hi.ln();
    let t_lo = (-0.5 * c).min(location.ln()) - 20.0;
    // Below t_lo: ∫ 2σ(c + 2t) dt = ln(1 + e^{c + 2 t_lo}).
    let head = (c + 2.0 * t_lo).exp().ln_1p();

    let pieces = 48;
    let mut breaks: Vec<f64> = (0..=pieces)
        .map(|i| t_lo + (t_hi - t_lo) * i as f64 / pieces as f64)
        .collect();
    let knee = -0.5 * c;
    if knee > t_lo && knee < t_hi {
        breaks.push(knee);
    }
    breaks.push(location.ln());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let integrand = |t: f64| {
        let u = c + 2.0 * t;
        let logistic = if u >= 0.0 {
            1.0 / (1.0 + (-u).exp())
        } else {
            u.exp() / (1.0 + u.exp())
        };
        2.0 * logistic * sf(t.exp())
    };
    let body = Quadrature {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_intervals: 4000,
    }
    .integrate_breaks(integrand, &breaks)?;
    Ok((head + body.value) / std::f64::consts::LN_2)
}

/// Ergodic capacity with `Z ~ Gamma`, by quadrature of the survival integral.
pub fn ec_era_gamma(fit_z: &Gamma, rho_bar: f64) -> Result<f64> {
    ec_from_survival(|x| fit_z.sf(x), fit_z.mean(), rho_bar)
}

/// Ergodic capacity with `Z² ~ LogNormal(ν, ζ)`, via `Υ`.
pub fn ec_era_lognormal(fit_z_sq: &LogNormal, rho_bar: f64) -> Result<f64> {
    upsilon(fit_z_sq.nu, fit_z_sq.zeta, rho_bar)
}

/// Fitted laws of the ERA magnitude `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct EraModel {
    pub moments: MomentVector,
    pub gamma: Gamma,
    pub lognormal: LogNormal,
    /// Log-Normal for `Z²`, matched to `(μ_Z(2), μ_Z(4))`.
    pub lognormal_sq: LogNormal,
}

impl EraModel {
    pub fn from_moments(moments: MomentVector) -> Result<Self> {
        if moments.order() < 4 {
            return Err(Error::domain("EraModel", "need the first four moments"));
        }
        Ok(Self {
            gamma: fit_gamma(moments.get(1), moments.get(2))?,
            lognormal: fit_lognormal(moments.get(1), moments.get(2))?,
            lognormal_sq: fit_lognormal(moments.get(2), moments.get(4))?,
            moments,
        })
    }

    pub fn from_topology(topo: &Topology) -> Result<Self> {
        Self::from_moments(z_moments(topo, 4)?)
    }
}

/// Fitted laws of the ORA magnitude `R = h₀ + max_n V_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OraModel {
    pub moments: MomentVector,
    pub staircase: Staircase,
    pub lognormal: LogNormal,
    pub lognormal_sq: LogNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OraOpMethod {
    Staircase,
    Lognormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OraEcMethod {
    Quadrature,
    Lognormal,
}

impl OraModel {
    pub fn from_topology(topo: &Topology, mv: &MvMethod, ctl: StaircaseControl) -> Result<Self> {
        let riss = ris_sum_fits(topo)?;
        let moments = r_moments(&topo.direct, &riss, 4, mv)?;
        Ok(Self {
            staircase: Staircase::new(topo.direct, riss, ctl)?,
            lognormal: fit_lognormal(moments.get(1), moments.get(2))?,
            lognormal_sq: fit_lognormal(moments.get(2), moments.get(4))?,
            moments,
        })
    }
}

/// ORA outage under the staircase CDF or the Log-Normal fit of `R`.
pub fn op_ora(model: &OraModel, rho_bar: f64, rho_th: f64, method: OraOpMethod) -> Result<f64> {
    check_snr(rho_bar, rho_th)?;
    let x = magnitude_threshold(rho_bar, rho_th);
    Ok(match method {
        OraOpMethod::Staircase => model.staircase.cdf(x),
        OraOpMethod::Lognormal => model.lognormal.cdf(x),
    })
}

/// ORA ergodic capacity by quadrature over the staircase survival function,
/// or via `Υ` with the Log-Normal fit of `R²`.
pub fn ec_ora(model: &OraModel, rho_bar: f64, method: OraEcMethod) -> Result<f64> {
    match method {
        OraEcMethod::Quadrature => {
            ec_from_survival(|x| model.staircase.sf(x), model.moments.mean(), rho_bar)
        }
        OraEcMethod::Lognormal => upsilon(model.lognormal_sq.nu, model.lognormal_sq.zeta, rho_bar),
    }
}

/// Both schemes' fitted models for one topology.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticModels {
    pub era: EraModel,
    pub ora: OraModel,
}

impl AnalyticModels {
    pub fn build(topo: &Topology, mv: &MvMethod, ctl: StaircaseControl) -> Result<Self> {
        Ok(Self {
            era: EraModel::from_topology(topo)?,
            ora: OraModel::from_topology(topo, mv, ctl)?,
        })
    }

    /// All four outage values at one operating point, in the fixed order
    /// ERA-Gamma, ERA-LogNormal, ORA-staircase, ORA-LogNormal.
    pub fn outage(&self, rho_bar: f64, rho_th: f64) -> Result<Vec<MetricResult>> {
        let steps = self.ora.staircase.ctl.steps;
        Ok(vec![
            MetricResult::new(
                Scheme::Era,
                Metric::Op,
                Method::GammaAnalytic,
                op_era_gamma(&self.era.gamma, rho_bar, rho_th)?,
            )?,
            MetricResult::new(
                Scheme::Era,
                Metric::Op,
                Method::LognormalAnalytic,
                op_era_lognormal(&self.era.lognormal, rho_bar, rho_th)?,
            )?,
            MetricResult::new(
                Scheme::Ora,
                Metric::Op,
                Method::Staircase,
                op_ora(&self.ora, rho_bar, rho_th, OraOpMethod::Staircase)?,
            )?
            .with_meta(ResultMeta {
                staircase_steps: Some(steps),
                ..ResultMeta::default()
            }),
            MetricResult::new(
                Scheme::Ora,
                Metric::Op,
                Method::LognormalAnalytic,
                op_ora(&self.ora, rho_bar, rho_th, OraOpMethod::Lognormal)?,
            )?,
        ])
    }

    /// All four capacity values, ordered ERA-quadrature, ERA-LogNormal,
    /// ORA-quadrature, ORA-LogNormal.
    pub fn capacity(&self, rho_bar: f64) -> Result<Vec<MetricResult>> {
        let steps = self.ora.staircase.ctl.steps;
        Ok(vec![
            MetricResult::new(
                Scheme::Era,
                Metric::Ec,
                Method::Quadrature,
                ec_era_gamma(&self.era.gamma, rho_bar)?,
            )?,
            MetricResult::new(
                Scheme::Era,
                Metric::Ec,
                Method::LognormalAnalytic,
                ec_era_lognormal(&self.era.lognormal_sq, rho_bar)?,
            )?,
            MetricResult::new(
                Scheme::Ora,
                Metric::Ec,
                Method::Quadrature,
                ec_ora(&self.ora, rho_bar, OraEcMethod::Quadrature)?,
            )?
            .with_meta(ResultMeta {
                staircase_steps: Some(steps),
                ..ResultMeta::default()
            }),
            MetricResult::new(
                Scheme::Ora,
                Metric::Ec,
                Method::LognormalAnalytic,
                ec_ora(&self.ora, rho_bar, OraEcMethod::Lognormal)?,
            )?,
        ])
    }

    /// Primary analytic capacity of one scheme: Gamma quadrature for ERA,
    /// staircase quadrature for ORA.
    pub fn primary_capacity(&self, scheme: Scheme, rho_bar: f64) -> Result<f64> {
        match scheme {
            Scheme::Era | Scheme::Centralized => ec_era_gamma(&self.era.gamma, rho_bar),
            Scheme::Ora => ec_ora(&self.ora, rho_bar, OraEcMethod::Quadrature),
        }
    }

    /// Primary analytic outage of one scheme: Gamma for ERA, staircase for ORA.
    pub fn primary_outage(&self, scheme: Scheme, rho_bar: f64, rho_th: f64) -> Result<f64> {
        match scheme {
            Scheme::Era | Scheme::Centralized => op_era_gamma(&self.era.gamma, rho_bar, rho_th),
            Scheme::Ora => op_ora(&self.ora, rho_bar, rho_th, OraOpMethod::Staircase),
        }
    }
}

/// `BW · R_th / P_tol` in Mbit/J, `P_tol = P_S + n_active·P̃_nl + P̃_S + P̃_D`.
pub fn energy_efficiency(
    rate_bps_hz: f64,
    bandwidth_hz: f64,
    p_tx_dbm: f64,
    active_elements: f64,
    circuit: &CircuitPower,
) -> Result<f64> {
    if !(rate_bps_hz >= 0.0)
        || !(bandwidth_hz > 0.0)
        || !p_tx_dbm.is_finite()
        || !(active_elements >= 0.0)
    {
        return Err(Error::domain(
            "energy_efficiency",
            "rate, bandwidth and element count must be nonnegative",
        ));
    }
    if !(circuit.element_mw >= 0.0) || !(circuit.source_mw >= 0.0) || !(circuit.dest_mw >= 0.0) {
        return Err(Error::domain(
            "energy_efficiency",
            "circuit powers must be nonnegative",
        ));
    }
    let total_w = (dbm_to_mw(p_tx_dbm)
        + active_elements * circuit.element_mw
        + circuit.source_mw
        + circuit.dest_mw)
        * 1e-3;
    Ok(bandwidth_hz * rate_bps_hz / total_w * 1e-6)
}

/// Transmit-power grid for the EE feasibility rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerGrid {
    pub from_dbm: f64,
    pub to_dbm: f64,
    pub step_db: f64,
}

impl Default for PowerGrid {
    fn default() -> Self {
        Self {
            from_dbm: 0.0,
            to_dbm: 30.0,
            step_db: 0.1,
        }
    }
}

impl PowerGrid {
    fn len(&self) -> usize {
        ((self.to_dbm - self.from_dbm) / self.step_db + 1e-9).floor() as usize + 1
    }

    fn at(&self, i: usize) -> f64 {
        // Rounded to the step so that grid powers print cleanly.
        let p = self.from_dbm + i as f64 * self.step_db;
        (p / self.step_db).round() * self.step_db
    }
}

/// Smallest grid power whose capacity reaches each target rate, assuming the
/// capacity is nondecreasing in power. Capacities are memoized across targets.
pub struct FeasibilitySolver<F: Fn(f64) -> Result<f64>> {
    capacity_at_dbm: F,
    grid: PowerGrid,
    memo: HashMap<usize, f64>,
}

impl<F: Fn(f64) -> Result<f64>> FeasibilitySolver<F> {
    pub fn new(capacity_at_dbm: F, grid: PowerGrid) -> Result<Self> {
        if !(grid.step_db > 0.0) || !(grid.to_dbm >= grid.from_dbm) {
            return Err(Error::domain(
                "FeasibilitySolver",
                "power grid must be nonempty with a positive step",
            ));
        }
        Ok(Self {
            capacity_at_dbm,
            grid,
            memo: HashMap::new(),
        })
    }

    fn capacity(&mut self, i: usize) -> Result<f64> {
        if let Some(v) = self.memo.get(&i) {
            return Ok(*v);
        }
        let v = (self.capacity_at_dbm)(self.grid.at(i))?;
        self.memo.insert(i, v);
        Ok(v)
    }

    /// `None` when even the top of the grid falls short.
    pub fn min_power(&mut self, rate_bps_hz: f64) -> Result<Option<f64>> {
        let n = self.grid.len();
        if self.capacity(n - 1)? < rate_bps_hz {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0usize, n - 1);
        if self.capacity(0)? >= rate_bps_hz {
            return Ok(Some(self.grid.at(0)));
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.capacity(mid)? >= rate_bps_hz {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(self.grid.at(hi)))
    }
}

/// One point of an EE-vs-rate curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EePoint {
    pub rate_bps_hz: f64,
    /// Selected transmit power; `None` when the rate is infeasible.
    pub tx_power_dbm: Option<f64>,
    pub ee_mbit_per_j: f64,
}

/// EE over a list of target rates under the feasibility rule: each rate uses
/// the minimum grid power meeting it, infeasible rates score zero.
pub fn ee_curve<F: Fn(f64) -> Result<f64>>(
    solver: &mut FeasibilitySolver<F>,
    rates: &[f64],
    bandwidth_hz: f64,
    active_elements: f64,
    circuit: &CircuitPower,
) -> Result<Vec<EePoint>> {
    rates
        .iter()
        .map(|&r| {
            let p = solver.min_power(r)?;
            let ee = match p {
                Some(p) => energy_efficiency(r, bandwidth_hz, p, active_elements, circuit)?,
                None => 0.0,
            };
            Ok(EePoint {
                rate_bps_hz: r,
                tx_power_dbm: p,
                ee_mbit_per_j: ee,
            })
        })
        .collect()
}

/// First rate at which `first` stops exceeding `second`, linearly
/// interpolated between grid points. Points where both are zero are skipped.
pub fn crossing(rates: &[f64], first: &[f64], second: &[f64]) -> Option<f64> {
    let diffs: Vec<(f64, f64)> = rates
        .iter()
        .zip(first.iter().zip(second))
        .filter(|(_, (a, b))| **a > 0.0 || **b > 0.0)
        .map(|(r, (a, b))| (*r, a - b))
        .collect();
    let start = diffs.iter().position(|(_, d)| *d > 0.0)?;
    diffs[start..].windows(2).find(|w| w[1].1 <= 0.0).map(|w| {
        let (r0, d0) = w[0];
        let (r1, d1) = w[1];
        r0 + (r1 - r0) * d0 / (d0 - d1)
    })
}

/// Transmit power (dBm) at which a nonincreasing-in-power outage reaches
/// `target`, by bisection on `[lo, hi]` to 1e-3 dB.
pub fn power_for_outage<F: Fn(f64) -> Result<f64>>(
    outage_at_dbm: F,
    target: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) || !(hi > lo) {
        return Err(Error::domain(
            "power_for_outage",
            "need target in (0, 1) and lo < hi",
        ));
    }
    let (mut lo, mut hi) = (lo, hi);
    if outage_at_dbm(hi)? > target {
        return Err(Error::domain(
            "power_for_outage",
            format!("outage stays above {target} at {hi} dBm"),
        ));
    }
    if outage_at_dbm(lo)? <= target {
        return Ok(lo);
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if outage_at_dbm(mid)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// ρ̄ for a transmit power under a given budget.
pub fn rho_bar_at(budget: &LinkBudget, tx_power_dbm: f64) -> Result<f64> {
    Ok(budget.with_tx_power(tx_power_dbm)?.rho_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NakagamiParams;
    use crate::quad::Quadrature;
    use approx::assert_relative_eq;

    fn gamma(a: f64, b: f64) -> Gamma {
        Gamma::new(a, b).unwrap()
    }

    /// `E[log2(1 + ρ̄X²)]` by direct quadrature of the density.
    fn ec_by_density<D: ContinuousDist>(d: &D, rho_bar: f64, hi: f64) -> f64 {
        Quadrature::with_tolerances(1e-13, 1e-11)
            .integrate_breaks(
                |x| (rho_bar * x * x).ln_1p() / std::f64::consts::LN_2 * d.pdf(x),
                &[0.0, hi / 16.0, hi / 4.0, hi],
            )
            .unwrap()
            .value
    }

    #[test]
    fn outage_limits() {
        let g = gamma(12.0, 3.0);
        assert_eq!(op_era_gamma(&g, 10.0, 0.0).unwrap(), 0.0);
        assert!(op_era_gamma(&g, 1e30, 1.0).unwrap() < 1e-100);
        let ln = LogNormal::new(0.5, 0.3).unwrap();
        assert_eq!(op_era_lognormal(&ln, 10.0, 0.0).unwrap(), 0.0);
        assert!(op_era_lognormal(&ln, 1e30, 1.0).unwrap() < 1e-100);
        assert!(op_era_gamma(&g, 0.0, 1.0).is_err());
    }

    #[test]
    fn survival_integral_matches_density_expectation() {
        let g = gamma(12.0, 3.0);
        for rho in [1e-3, 1.0, 50.0, 1e6] {
            let a = ec_era_gamma(&g, rho).unwrap();
            let b = ec_by_density(&g, rho, 20.0);
            assert_relative_eq!(a, b, max_relative = 1e-8);
        }
    }

    #[test]
    fn capacity_vanishes_at_zero_snr_and_obeys_jensen() {
        let g = gamma(12.0, 3.0);
        assert!(ec_era_gamma(&g, 1e-12).unwrap() < 1e-10);
        for rho in [0.1, 10.0, 1e4] {
            let ec = ec_era_gamma(&g, rho).unwrap();
            assert!(ec <= (1.0 + rho * g.moment(2)).log2());
        }
        assert!(ec_era_lognormal(&LogNormal::new(0.0, 0.3).unwrap(), 1e-12).unwrap() < 1e-10);
    }

    #[test]
    fn upsilon_path_matches_lognormal_quadrature() {
        let ln = LogNormal::new(-1.0, 0.4).unwrap();
        for rho in [0.5, 20.0, 1e5] {
            let closed = ec_era_lognormal(&ln, rho).unwrap();
            let numeric = Quadrature::with_tolerances(1e-13, 1e-11)
                .integrate_breaks(
                    |x| (rho * x).ln_1p() / std::f64::consts::LN_2 * ln.pdf(x),
                    &[0.0, 0.1, 0.4, 1.0, 5.0],
                )
                .unwrap()
                .value;
            assert!(
                (closed - numeric).abs() < 1e-3,
                "{rho}: {closed} vs {numeric}"
            );
        }
    }

    fn toy_ora(n: usize) -> OraModel {
        let direct = NakagamiParams::new(2.0, 0.3).unwrap();
        let riss: Vec<Gamma> = (0..n)
            .map(|i| gamma(30.0 + 10.0 * i as f64, 20.0))
            .collect();
        let moments = r_moments(&direct, &riss, 4, &MvMethod::default()).unwrap();
        OraModel {
            staircase: Staircase::new(direct, riss, StaircaseControl::default()).unwrap(),
            lognormal: fit_lognormal(moments.get(1), moments.get(2)).unwrap(),
            lognormal_sq: fit_lognormal(moments.get(2), moments.get(4)).unwrap(),
            moments,
        }
    }

    #[test]
    fn ora_paths_agree_and_are_monotone() {
        let m = toy_ora(3);
        let mut prev = 0.0;
        for rho in [0.1, 1.0, 10.0, 100.0] {
            let q = ec_ora(&m, rho, OraEcMethod::Quadrature).unwrap();
            let l = ec_ora(&m, rho, OraEcMethod::Lognormal).unwrap();
            assert!((q - l).abs() / q < 0.05, "{q} vs {l}");
            assert!(q > prev);
            prev = q;
        }
        let a = op_ora(&m, 10.0, 5.0, OraOpMethod::Staircase).unwrap();
        let b = op_ora(&m, 20.0, 5.0, OraOpMethod::Staircase).unwrap();
        assert!(b <= a);
    }

    #[test]
    fn ee_definition() {
        let c = CircuitPower::default();
        let e1 = energy_efficiency(4.0, 1e6, 20.0, 100.0, &c).unwrap();
        // P_tol = 100 + 780 + 20 mW = 0.9 W.
        assert_relative_eq!(e1, 4.0 / 0.9, max_relative = 1e-12);
        let fewer = energy_efficiency(4.0, 1e6, 20.0, 25.0, &c).unwrap();
        assert!(fewer > e1);
        let zero = CircuitPower {
            element_mw: 0.0,
            source_mw: 0.0,
            dest_mw: 0.0,
        };
        let a = energy_efficiency(1.0, 1e6, 10.0, 0.0, &zero).unwrap();
        let b = energy_efficiency(1.0, 1e6, 10.0 + 10.0 * 2f64.log10(), 0.0, &zero).unwrap();
        assert_relative_eq!(a, 2.0 * b, max_relative = 1e-12);
    }

    #[test]
    fn feasibility_picks_minimum_grid_power() {
        // Capacity rises 1 b/s/Hz per 3 dB.
        let cap = |p: f64| Ok(p / 3.0);
        let mut s = FeasibilitySolver::new(cap, PowerGrid::default()).unwrap();
        assert_eq!(s.min_power(0.0).unwrap(), Some(0.0));
        let p = s.min_power(5.0).unwrap().unwrap();
        assert!((p - 15.0).abs() < 1e-9, "{p}");
        let p = s.min_power(5.01).unwrap().unwrap();
        assert!((p - 15.1).abs() < 1e-9, "{p}");
        assert_eq!(s.min_power(10.5).unwrap(), None);
    }

    #[test]
    fn crossing_interpolates() {
        let r = [1.0, 2.0, 3.0, 4.0];
        let a = [5.0, 4.0, 1.0, 0.0];
        let b = [3.0, 3.0, 3.0, 0.0];
        let x = crossing(&r, &a, &b).unwrap();
        assert_relative_eq!(x, 2.0 + 1.0 / 3.0, max_relative = 1e-12);
        assert!(crossing(&r, &b, &b).is_none());
    }

    #[test]
    fn power_for_outage_bisects() {
        let op = |p: f64| Ok(10f64.powf(-p / 10.0));
        let p = power_for_outage(op, 1e-3, -10.0, 60.0).unwrap();
        assert!((p - 30.0).abs() < 2e-3);
        assert!(power_for_outage(op, 1e-9, -10.0, 60.0).is_err());
    }

    #[test]
    fn metric_result_range_checked() {
        assert!(MetricResult::new(Scheme::Era, Metric::Op, Method::GammaAnalytic, 1.5).is_err());
        assert!(MetricResult::new(Scheme::Ora, Metric::Ec, Method::Quadrature, -0.1).is_err());
        let r = MetricResult::new(Scheme::Ora, Metric::Ee, Method::Quadrature, 2.0).unwrap();
        assert_eq!(
            format!("{} {} {}", r.scheme, r.metric, r.method),
            "ORA EE quadrature"
        );
    }
}
