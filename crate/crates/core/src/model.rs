//! Scenario definition: geometry, link budget and per-link fading parameters.
//!
//! All dB conversions use the power convention `10·log10`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference distance of the path-loss model, in meters.
pub const D0_M: f64 = 1.0;
/// Thermal noise power spectral density, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

/// UMi NLoS path gain in dB: `G_sum − 22.7 − 26 log10(fc) − 36.7 log10(d/d0)`.
pub fn path_loss_db(dist_m: f64, fc_ghz: f64, gain_sum_db: f64) -> Result<f64> {
    if !(dist_m > 0.0) || !dist_m.is_finite() {
        return Err(Error::domain(
            "path_loss_db",
            format!("distance {dist_m} m must be positive"),
        ));
    }
    if dist_m < D0_M {
        return Err(Error::domain(
            "path_loss_db",
            format!("distance {dist_m} m is below the reference distance {D0_M} m"),
        ));
    }
    if !(fc_ghz > 0.0) || !fc_ghz.is_finite() {
        return Err(Error::domain(
            "path_loss_db",
            format!("carrier {fc_ghz} GHz must be positive"),
        ));
    }
    Ok(gain_sum_db - 22.7 - 26.0 * fc_ghz.log10() - 36.7 * (dist_m / D0_M).log10())
}

/// SNR threshold `2^R − 1` for a target rate in bit/s/Hz.
pub fn snr_threshold(rate_bps_hz: f64) -> Result<f64> {
    if !(rate_bps_hz > 0.0) || !rate_bps_hz.is_finite() {
        return Err(Error::domain(
            "snr_threshold",
            format!("rate {rate_bps_hz} must be positive"),
        ));
    }
    Ok(rate_bps_hz.exp2() - 1.0)
}

/// Noise power `−174 + 10 log10(BW) + NF` in dBm.
pub fn noise_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NakagamiParams {
    pub m: f64,
    pub omega: f64,
}

impl NakagamiParams {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::domain(
                "NakagamiParams",
                format!("shape m = {m} must be positive"),
            ));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::domain(
                "NakagamiParams",
                format!("spread omega = {omega} must be positive"),
            ));
        }
        Ok(Self { m, omega })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisConfig {
    pub elements: usize,
    pub kappa: f64,
    pub position: Point,
}

impl RisConfig {
    pub fn new(elements: usize, kappa: f64, position: Point) -> Result<Self> {
        if elements < 1 {
            return Err(Error::domain(
                "RisConfig",
                "a RIS needs at least one element",
            ));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::domain(
                "RisConfig",
                format!("kappa = {kappa} must lie in (0, 1]"),
            ));
        }
        Ok(Self {
            elements,
            kappa,
            position,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaGains {
    pub source_db: f64,
    pub dest_db: f64,
    pub ris_db: Vec<f64>,
}

/// A fully resolved scenario: every link carries its own fading parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub source_pos: Point,
    pub dest_pos: Point,
    pub riss: Vec<RisConfig>,
    pub direct: NakagamiParams,
    pub hop1: Vec<NakagamiParams>,
    pub hop2: Vec<NakagamiParams>,
    pub gains: AntennaGains,
    pub carrier_ghz: f64,
    pub shape_seed: u64,
}

impl Topology {
    pub fn validate(&self) -> Result<()> {
        let n = self.riss.len();
        if self.hop1.len() != n || self.hop2.len() != n || self.gains.ris_db.len() != n {
            return Err(Error::domain(
                "Topology",
                format!(
                    "per-RIS lists disagree: {} RISs, {} S→R links, {} R→D links, {} gains",
                    n,
                    self.hop1.len(),
                    self.hop2.len(),
                    self.gains.ris_db.len()
                ),
            ));
        }
        if !(self.source_pos.distance(&self.dest_pos) > 0.0) {
            return Err(Error::domain("Topology", "source and destination coincide"));
        }
        for (i, r) in self.riss.iter().enumerate() {
            if !(r.position.distance(&self.source_pos) > 0.0)
                || !(r.position.distance(&self.dest_pos) > 0.0)
            {
                return Err(Error::domain(
                    "Topology",
                    format!("RIS {i} coincides with the source or destination"),
                ));
            }
        }
        Ok(())
    }

    pub fn n_ris(&self) -> usize {
        self.riss.len()
    }

    pub fn total_elements(&self) -> usize {
        self.riss.iter().map(|r| r.elements).sum()
    }

    pub fn elements(&self) -> Vec<usize> {
        self.riss.iter().map(|r| r.elements).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub rho_bar: f64,
}

impl LinkBudget {
    pub fn new(tx_power_dbm: f64, bandwidth_hz: f64, noise_figure_db: f64) -> Result<Self> {
        if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
            return Err(Error::domain(
                "LinkBudget",
                format!("bandwidth {bandwidth_hz} Hz must be positive"),
            ));
        }
        if !tx_power_dbm.is_finite() || !noise_figure_db.is_finite() {
            return Err(Error::domain("LinkBudget", "powers must be finite"));
        }
        let noise = noise_dbm(bandwidth_hz, noise_figure_db);
        Ok(Self {
            tx_power_dbm,
            noise_dbm: noise,
            bandwidth_hz,
            noise_figure_db,
            rho_bar: db_to_linear(tx_power_dbm - noise),
        })
    }

    pub fn with_tx_power(&self, tx_power_dbm: f64) -> Result<Self> {
        Self::new(tx_power_dbm, self.bandwidth_hz, self.noise_figure_db)
    }
}

// ---------------------------------------------------------------------------
// JSON scenario configuration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionRange {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisSpec {
    pub elements: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_range: Option<PositionRange>,
}

fn default_kappa() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSpec {
    pub source: f64,
    pub dest: f64,
    /// One gain shared by every RIS.
    pub ris: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSweep {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl PowerSweep {
    pub fn grid(&self) -> Result<Vec<f64>> {
        linear_grid(self.from, self.to, self.step)
    }
}

/// `from, from + step, ...` up to `to` inclusive (with a small rounding allowance).
pub fn linear_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !from.is_finite() || !to.is_finite() || to < from {
        return Err(Error::Config(format!(
            "invalid grid from {from} to {to} step {step}"
        )));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}

/// Circuit dissipation powers in mW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitPower {
    pub element_mw: f64,
    pub source_mw: f64,
    pub dest_mw: f64,
}

impl Default for CircuitPower {
    fn default() -> Self {
        Self {
            element_mw: 7.8,
            source_mw: 10.0,
            dest_mw: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub riss: Vec<RisSpec>,
    pub source: [f64; 2],
    pub dest: [f64; 2],
    pub fc_ghz: f64,
    pub gains_db: GainsSpec,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_sweep: Option<PowerSweep>,
    pub m_range: [f64; 2],
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_m: Option<f64>,
    #[serde(default)]
    pub fold_height_into_distance: bool,
    #[serde(default)]
    pub circuit: CircuitPower,
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!(
                "at `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.riss.is_empty() {
            return bad("`riss` must list at least one RIS".into());
        }
        for (i, r) in self.riss.iter().enumerate() {
            match (&r.position, &r.position_range) {
                (Some(_), Some(_)) => {
                    return bad(format!(
                        "riss[{i}]: give either `position` or `position_range`, not both"
                    ))
                }
                (None, None) => {
                    return bad(format!(
                        "riss[{i}]: one of `position` or `position_range` is required"
                    ))
                }
                (None, Some(pr)) if !(pr.x[0] <= pr.x[1] && pr.y[0] <= pr.y[1]) => {
                    return bad(format!("riss[{i}]: position_range bounds must be ordered"));
                }
                _ => {}
            }
            if r.elements < 1 {
                return bad(format!("riss[{i}]: `elements` must be at least 1"));
            }
            if !(r.kappa > 0.0 && r.kappa <= 1.0) {
                return bad(format!("riss[{i}]: `kappa` must lie in (0, 1]"));
            }
        }
        if !(self.m_range[0] > 0.0 && self.m_range[0] <= self.m_range[1]) {
            return bad(format!(
                "`m_range` {:?} must be positive and ordered",
                self.m_range
            ));
        }
        if !(self.fc_ghz > 0.0) {
            return bad("`fc_ghz` must be positive".into());
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad("`bandwidth_hz` must be positive".into());
        }
        if self.tx_power_dbm.is_some() && self.tx_power_sweep.is_some() {
            return bad("give either `tx_power_dbm` or `tx_power_sweep`, not both".into());
        }
        if let Some(sw) = &self.tx_power_sweep {
            sw.grid()?;
        }
        if let Some(h) = self.height_m {
            if !(h >= 0.0) {
                return bad("`height_m` must be nonnegative".into());
            }
        }
        Ok(())
    }

    /// Transmit powers requested by the config: the sweep grid, the single
    /// power, or an empty list when neither is given.
    pub fn tx_powers(&self) -> Result<Vec<f64>> {
        match (self.tx_power_dbm, &self.tx_power_sweep) {
            (_, Some(sw)) => sw.grid(),
            (Some(p), None) => Ok(vec![p]),
            (None, None) => Ok(Vec::new()),
        }
    }

    pub fn link_budget(&self, tx_power_dbm: f64) -> Result<LinkBudget> {
        LinkBudget::new(tx_power_dbm, self.bandwidth_hz, self.noise_figure_db)
    }

    /// Replaces every RIS by one RIS holding all elements at `position`.
    pub fn centralized(&self, position: [f64; 2]) -> Self {
        let total = self.riss.iter().map(|r| r.elements).sum();
        let kappa = self.riss[0].kappa;
        Self {
            riss: vec![RisSpec {
                elements: total,
                kappa,
                position: Some(position),
                position_range: None,
            }],
            ..self.clone()
        }
    }

    /// Replaces the element counts, keeping everything else.
    pub fn with_elements(&self, elements: &[usize]) -> Result<Self> {
        if elements.len() != self.riss.len() {
            return Err(Error::Config(format!(
                "element vector has {} entries for {} RISs",
                elements.len(),
                self.riss.len()
            )));
        }
        let mut out = self.clone();
        for (r, &l) in out.riss.iter_mut().zip(elements) {
            r.elements = l;
        }
        Ok(out)
    }
}

/// Resolves a config into a topology. Positions drawn from ranges come
/// first from the seeded stream, then one shape per link: the direct link,
/// then `(S→R_n, R_n→D)` for each RIS in order.
pub fn build_topology(cfg: &ScenarioConfig) -> Result<Topology> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut uniform = |lo: f64, hi: f64| {
        if hi > lo {
            rng.random_range(lo..hi)
        } else {
            lo
        }
    };

    let source = Point::new(cfg.source[0], cfg.source[1]);
    let dest = Point::new(cfg.dest[0], cfg.dest[1]);

    let mut riss = Vec::with_capacity(cfg.riss.len());
    for spec in &cfg.riss {
        let position = match (&spec.position, &spec.position_range) {
            (Some(p), _) => Point::new(p[0], p[1]),
            (None, Some(pr)) => {
                let x = uniform(pr.x[0], pr.x[1]);
                let y = uniform(pr.y[0], pr.y[1]);
                Point::new(x, y)
            }
            (None, None) => unreachable!("validated above"),
        };
        riss.push(RisConfig::new(spec.elements, spec.kappa, position)?);
    }

    let [m_lo, m_hi] = cfg.m_range;
    let g = &cfg.gains_db;
    let height = if cfg.fold_height_into_distance {
        cfg.height_m.unwrap_or(0.0)
    } else {
        0.0
    };
    let hop_distance = |a: &Point, b: &Point| a.distance(b).hypot(height);

    let link = |dist: f64, gain_sum: f64, m: f64| -> Result<NakagamiParams> {
        let omega = db_to_linear(path_loss_db(dist, cfg.fc_ghz, gain_sum)?);
        NakagamiParams::new(m, omega)
    };

    let direct = link(
        source.distance(&dest),
        g.source + g.dest,
        uniform(m_lo, m_hi),
    )
    .map_err(|e| e.context("direct link"))?;
    let mut hop1 = Vec::with_capacity(riss.len());
    let mut hop2 = Vec::with_capacity(riss.len());
    for (i, r) in riss.iter().enumerate() {
        if !(r.position.distance(&source) > 0.0) || !(r.position.distance(&dest) > 0.0) {
            return Err(Error::domain(
                "build_topology",
                format!("RIS {i} coincides with the source or destination"),
            ));
        }
        let m_h = uniform(m_lo, m_hi);
        let m_g = uniform(m_lo, m_hi);
        hop1.push(
            link(hop_distance(&source, &r.position), g.source + g.ris, m_h)
                .map_err(|e| e.context(format!("S→R{i} link")))?,
        );
        hop2.push(
            link(hop_distance(&r.position, &dest), g.ris + g.dest, m_g)
                .map_err(|e| e.context(format!("R{i}→D link")))?,
        );
    }

    let topo = Topology {
        source_pos: source,
        dest_pos: dest,
        gains: AntennaGains {
            source_db: g.source,
            dest_db: g.dest,
            ris_db: vec![g.ris; riss.len()],
        },
        riss,
        direct,
        hop1,
        hop2,
        carrier_ghz: cfg.fc_ghz,
        shape_seed: cfg.seed,
    };
    topo.validate()?;
    Ok(topo)
}

/// Named settings of the reference study.
pub mod presets {
    use super::*;

    pub const L1: [usize; 5] = [25, 25, 25, 25, 25];
    pub const L2: [usize; 5] = [40, 40, 40, 40, 40];
    pub const L3: [usize; 5] = [20, 30, 40, 50, 60];
    pub const L4: [usize; 5] = [60, 50, 40, 30, 20];
    pub const D1: [[f64; 2]; 5] = [
        [7.0, 2.0],
        [13.0, 6.0],
        [41.0, 8.0],
        [75.0, 4.0],
        [93.0, 3.0],
    ];
    pub const D2: [[f64; 2]; 5] = [
        [5.0, 2.0],
        [13.0, 7.0],
        [37.0, 6.0],
        [69.0, 1.0],
        [91.0, 3.0],
    ];

    /// The reference scenario with the given element and location settings.
    pub fn reference(elements: &[usize], positions: &[[f64; 2]], seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            riss: elements
                .iter()
                .zip(positions)
                .map(|(&l, &p)| RisSpec {
                    elements: l,
                    kappa: 1.0,
                    position: Some(p),
                    position_range: None,
                })
                .collect(),
            source: [0.0, 0.0],
            dest: [100.0, 0.0],
            fc_ghz: 3.0,
            gains_db: GainsSpec {
                source: 5.0,
                dest: 5.0,
                ris: 5.0,
            },
            bandwidth_hz: 10e6,
            noise_figure_db: 10.0,
            tx_power_dbm: None,
            tx_power_sweep: Some(PowerSweep {
                from: 0.0,
                to: 30.0,
                step: 1.0,
            }),
            m_range: [2.0, 3.0],
            seed,
            height_m: Some(10.0),
            fold_height_into_distance: false,
            circuit: CircuitPower::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn path_loss_reference_values() {
        assert_relative_eq!(
            path_loss_db(1.0, 1.0, 0.0).unwrap(),
            -22.7,
            max_relative = 1e-15
        );
        let pl = path_loss_db(100.0, 3.0, 10.0).unwrap();
        assert_relative_eq!(
            pl,
            10.0 - 22.7 - 26.0 * 3f64.log10() - 73.4,
            max_relative = 1e-14
        );
        assert_relative_eq!(pl, -98.505, epsilon = 5e-4);
        assert_relative_eq!(
            db_to_linear(pl),
            10f64.powf(pl / 10.0),
            max_relative = 1e-15
        );
    }

    #[test]
    fn path_loss_domain() {
        assert!(path_loss_db(0.0, 3.0, 0.0).is_err());
        assert!(path_loss_db(-5.0, 3.0, 0.0).is_err());
        assert!(path_loss_db(0.5, 3.0, 0.0).is_err());
        assert!(path_loss_db(10.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn path_loss_decreasing() {
        let a = path_loss_db(10.0, 3.0, 0.0).unwrap();
        assert!(path_loss_db(10.5, 3.0, 0.0).unwrap() < a);
        assert!(path_loss_db(10.0, 3.5, 0.0).unwrap() < a);
    }

    #[test]
    fn snr_thresholds() {
        assert_eq!(snr_threshold(1.0).unwrap(), 1.0);
        assert_eq!(snr_threshold(3.0).unwrap(), 7.0);
        assert_relative_eq!(
            snr_threshold(0.5).unwrap(),
            2f64.sqrt() - 1.0,
            max_relative = 1e-15
        );
        assert!(snr_threshold(0.0).is_err());
    }

    #[test]
    fn noise_budget() {
        let b = LinkBudget::new(20.0, 10e6, 10.0).unwrap();
        assert_relative_eq!(b.noise_dbm, -94.0, max_relative = 1e-14);
        assert_relative_eq!(b.rho_bar, 10f64.powf(11.4), max_relative = 1e-12);
    }

    #[test]
    fn single_ris_topology() {
        let mut cfg = presets::reference(&[1], &[[50.0, 5.0]], 3);
        cfg.riss.truncate(1);
        let t = build_topology(&cfg).unwrap();
        assert_eq!(t.hop1.len(), 1);
        assert_eq!(t.hop2.len(), 1);
        assert_eq!(t.total_elements(), 1);
    }

    #[test]
    fn topology_is_deterministic() {
        let cfg = presets::reference(&presets::L1, &presets::D1, 11);
        assert_eq!(build_topology(&cfg).unwrap(), build_topology(&cfg).unwrap());
        let other = presets::reference(&presets::L1, &presets::D1, 12);
        assert_ne!(
            build_topology(&cfg).unwrap().direct,
            build_topology(&other).unwrap().direct
        );
    }

    #[test]
    fn omega_is_linearized_path_loss() {
        let cfg = presets::reference(&presets::L1, &presets::D1, 5);
        let t = build_topology(&cfg).unwrap();
        for (i, r) in t.riss.iter().enumerate() {
            let d1 = r.position.distance(&t.source_pos);
            let d2 = r.position.distance(&t.dest_pos);
            assert_relative_eq!(
                t.hop1[i].omega,
                db_to_linear(path_loss_db(d1, 3.0, 10.0).unwrap()),
                max_relative = 1e-14
            );
            assert_relative_eq!(
                t.hop2[i].omega,
                db_to_linear(path_loss_db(d2, 3.0, 10.0).unwrap()),
                max_relative = 1e-14
            );
            assert!((2.0..3.0).contains(&t.hop1[i].m));
            assert!((2.0..3.0).contains(&t.hop2[i].m));
        }
    }

    #[test]
    fn coincident_ris_rejected() {
        let cfg = presets::reference(&[10], &[[0.0, 0.0]], 1);
        assert!(build_topology(&cfg).is_err());
    }

    #[test]
    fn sampled_positions_stay_in_range() {
        let mut cfg = presets::reference(&presets::L1, &presets::D1, 9);
        for r in &mut cfg.riss {
            r.position = None;
            r.position_range = Some(PositionRange {
                x: [5.0, 95.0],
                y: [1.0, 9.0],
            });
        }
        let t = build_topology(&cfg).unwrap();
        for r in &t.riss {
            assert!((5.0..95.0).contains(&r.position.x) && (1.0..9.0).contains(&r.position.y));
        }
    }

    #[test]
    fn height_folding_lengthens_hops() {
        let mut cfg = presets::reference(&presets::L1, &presets::D1, 2);
        let flat = build_topology(&cfg).unwrap();
        cfg.fold_height_into_distance = true;
        let raised = build_topology(&cfg).unwrap();
        assert_eq!(flat.direct, raised.direct);
        assert!(raised.hop1[0].omega < flat.hop1[0].omega);
    }

    #[test]
    fn centralized_variant() {
        let cfg = presets::reference(&presets::L3, &presets::D1, 2).centralized([30.0, 0.5]);
        let t = build_topology(&cfg).unwrap();
        assert_eq!(t.n_ris(), 1);
        assert_eq!(t.total_elements(), 200);
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let text = r#"{"riss": [{"elements": 4, "position": [1, 1], "colour": 3}],
            "source": [0,0], "dest": [10,0], "fc_ghz": 3,
            "gains_db": {"source": 5, "dest": 5, "ris": 5},
            "bandwidth_hz": 1e7, "noise_figure_db": 10, "m_range": [2,3], "seed": 1}"#;
        let err = ScenarioConfig::from_json_str(text).unwrap_err().to_string();
        assert!(err.contains("riss[0]"), "{err}");
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn config_round_trip() {
        let cfg = presets::reference(&presets::L2, &presets::D2, 4);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json_str(&text).unwrap(), cfg);
    }

    #[test]
    fn power_grid() {
        let g = linear_grid(0.0, 30.0, 1.0).unwrap();
        assert_eq!(g.len(), 31);
        assert_eq!(g[30], 30.0);
        assert_eq!(linear_grid(0.0, 1.0, 0.1).unwrap().len(), 11);
    }
}
