//! Declarative experiments: a scenario, one swept variable and a list of
//! methods, producing long-format result rows and a run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::dist::StaircaseControl;
use crate::error::{Error, Result};
use crate::metrics::{
    crossing, ee_curve, AnalyticModels, FeasibilitySolver, Method, Metric, MetricResult,
    OraEcMethod, PowerGrid, ResultMeta, Scheme,
};
use crate::model::{build_topology, snr_threshold, PowerSweep, ScenarioConfig, Topology};
use crate::moments::MvMethod;
use crate::sim::{empirical_grid, ChannelSampler, EmpiricalGrid, SamplingRoute, SimPlan};

/// Header of every results CSV.
pub const CSV_HEADER: &str = "variable,x,scheme,metric,method,value,uncertainty";

/// Trials used to estimate ORA selection frequencies when the experiment
/// itself runs no Monte Carlo.
pub const SELECTION_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    TxPower,
    Rate,
    Elements,
    RisPosition,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::TxPower => "tx_power",
            SweepVariable::Rate => "rate",
            SweepVariable::Elements => "elements",
            SweepVariable::RisPosition => "ris_position",
        }
    }
}

/// Either an explicit `grid` or a `range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<PowerSweep>,
}

impl SweepSpec {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        let grid = match (&self.range, self.grid.is_empty()) {
            (Some(_), false) => {
                return Err(Error::Config(
                    "sweep: give either `grid` or `range`, not both".into(),
                ))
            }
            (Some(r), true) => r.grid()?,
            (None, _) => self.grid.clone(),
        };
        if grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "sweep grid must be finite and strictly increasing".into(),
            ));
        }
        if self.variable == SweepVariable::Elements
            && grid.iter().any(|x| x.fract() != 0.0 || *x < 1.0)
        {
            return Err(Error::Config(
                "element counts must be positive integers".into(),
            ));
        }
        Ok(grid)
    }
}

/// A scenario given inline or as a path relative to the experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Path(PathBuf),
    Inline(Box<ScenarioConfig>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub results: PathBuf,
    pub manifest: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            results: PathBuf::from("results.csv"),
            manifest: PathBuf::from("manifest.json"),
        }
    }
}

/// Active-element count charged to ORA in the EE denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OraActive {
    /// `Σ_n Pr(n* = n) L_n`, frequencies from Monte Carlo.
    #[default]
    Expected,
    /// `max_n L_n`.
    Max,
}

fn default_methods() -> Vec<Method> {
    vec![
        Method::GammaAnalytic,
        Method::LognormalAnalytic,
        Method::Staircase,
        Method::Quadrature,
    ]
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::Op, Metric::Ec, Metric::Ee]
}

fn default_rate() -> f64 {
    1.0
}

fn default_steps() -> usize {
    StaircaseControl::default().steps
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: ScenarioSource,
    pub sweep: SweepSpec,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Metrics kept in the output; a sweep only produces the metrics that
    /// make sense for its variable.
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    /// Target rate `R_th` (b/s/Hz) for outage; ignored by rate sweeps.
    #[serde(default = "default_rate")]
    pub rate_bps_hz: f64,
    /// Fixed transmit power for sweeps over anything but power; falls back to
    /// the scenario's `tx_power_dbm`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_dbm: Option<f64>,
    /// Monte Carlo trials per grid point; required when `monte-carlo` is listed.
    #[serde(default)]
    pub trials: u64,
    /// Monte Carlo seed; defaults to the scenario seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_steps")]
    pub staircase_steps: usize,
    #[serde(default)]
    pub ora_active: OraActive,
    #[serde(default)]
    pub power_grid: PowerGrid,
    /// `y` coordinate of the centralized RIS in position sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_y: Option<f64>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

impl ExperimentSpec {
    /// Defaults for a given scenario and sweep.
    pub fn new(scenario: ScenarioConfig, sweep: SweepSpec) -> Self {
        Self {
            scenario: ScenarioSource::Inline(Box::new(scenario)),
            sweep,
            methods: default_methods(),
            metrics: default_metrics(),
            rate_bps_hz: default_rate(),
            tx_power_dbm: None,
            trials: 0,
            seed: None,
            staircase_steps: default_steps(),
            ora_active: OraActive::default(),
            power_grid: PowerGrid::default(),
            position_y: None,
            outputs: OutputSpec::default(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!(
                "at `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| e.context(path.display().to_string()))
    }

    /// Loads a path-referenced scenario relative to `base_dir` and checks
    /// everything the run will need.
    pub fn resolve(&self, base_dir: &Path) -> Result<ResolvedExperiment> {
        let scenario = match &self.scenario {
            ScenarioSource::Inline(cfg) => {
                cfg.validate()?;
                (**cfg).clone()
            }
            ScenarioSource::Path(p) => ScenarioConfig::from_path(&base_dir.join(p))?,
        };
        let grid = self.sweep.resolve()?;
        if self.methods.is_empty() || self.metrics.is_empty() {
            return Err(Error::Config(
                "`methods` and `metrics` must not be empty".into(),
            ));
        }
        if self.methods.contains(&Method::MonteCarlo) && self.trials == 0 {
            return Err(Error::Config("`monte-carlo` needs `trials` ≥ 1".into()));
        }
        StaircaseControl::new(self.staircase_steps).map_err(|e| Error::Config(e.to_string()))?;
        snr_threshold(self.rate_bps_hz).map_err(|e| Error::Config(e.to_string()))?;
        let tx_power_dbm = self.tx_power_dbm.or(scenario.tx_power_dbm);
        if self.sweep.variable != SweepVariable::TxPower && tx_power_dbm.is_none() {
            return Err(Error::Config(format!(
                "a {} sweep needs `tx_power_dbm` in the experiment or the scenario",
                self.sweep.variable.as_str()
            )));
        }
        let mut spec = self.clone();
        spec.scenario = ScenarioSource::Inline(Box::new(scenario.clone()));
        let seed = self.seed.unwrap_or(scenario.seed);
        spec.seed = Some(seed);
        Ok(ResolvedExperiment {
            spec,
            scenario,
            grid,
            seed,
            tx_power_dbm,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedExperiment {
    /// The experiment with its scenario inlined and seed filled in.
    pub spec: ExperimentSpec,
    pub scenario: ScenarioConfig,
    pub grid: Vec<f64>,
    pub seed: u64,
    pub tx_power_dbm: Option<f64>,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub variable: SweepVariable,
    pub x: f64,
    pub result: MetricResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub rows: Vec<ResultRow>,
    /// Scalar by-products such as EE crossing rates, keyed by name.
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ResolvedExperiment {
    fn wants(&self, m: Method) -> bool {
        self.spec.methods.contains(&m)
    }

    fn staircase(&self) -> StaircaseControl {
        StaircaseControl {
            steps: self.spec.staircase_steps,
        }
    }

    fn plan(&self) -> Result<SimPlan> {
        SimPlan::new(self.spec.trials, self.seed)
    }

    fn fixed_power(&self) -> f64 {
        self.tx_power_dbm.expect("checked in resolve")
    }

    fn models(&self, topo: &Topology) -> Result<AnalyticModels> {
        AnalyticModels::build(topo, &MvMethod::default(), self.staircase())
    }

    /// Analytic OP and EC rows at one operating point, filtered by method.
    fn analytic_rows(
        &self,
        models: &AnalyticModels,
        x: f64,
        rho_bar: f64,
        rho_th: f64,
        out: &mut Vec<ResultRow>,
    ) -> Result<()> {
        let variable = self.spec.sweep.variable;
        let mut results = models.outage(rho_bar, rho_th)?;
        results.extend(models.capacity(rho_bar)?);
        out.extend(
            results
                .into_iter()
                .filter(|r| self.wants(r.method))
                .map(|result| ResultRow {
                    variable,
                    x,
                    result,
                }),
        );
        Ok(())
    }

    fn monte_carlo_rows(
        &self,
        grid: &EmpiricalGrid,
        xs: &[f64],
        metrics: &[Metric],
        out: &mut Vec<ResultRow>,
    ) -> Result<()> {
        let variable = self.spec.sweep.variable;
        for (i, &x) in xs.iter().enumerate() {
            for (scheme, series) in [(Scheme::Era, &grid.era), (Scheme::Ora, &grid.ora)] {
                for &metric in metrics {
                    let est = match metric {
                        Metric::Op => series[i].outage,
                        Metric::Ec => series[i].capacity,
                        Metric::Ee => continue,
                    };
                    let result = MetricResult::new(scheme, metric, Method::MonteCarlo, est.value)?
                        .with_meta(ResultMeta {
                            uncertainty: Some(est.std_error),
                            seed: Some(grid.seed),
                            ..ResultMeta::default()
                        });
                    out.push(ResultRow {
                        variable,
                        x,
                        result,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn run(&self) -> Result<RunReport> {
        let mut report = RunReport {
            rows: Vec::new(),
            summary: BTreeMap::new(),
            notes: Vec::new(),
        };
        match self.spec.sweep.variable {
            SweepVariable::TxPower => self.run_tx_power(&mut report)?,
            SweepVariable::Elements => self.run_elements(&mut report)?,
            SweepVariable::Rate => self.run_rate(&mut report)?,
            SweepVariable::RisPosition => self.run_position(&mut report)?,
        }
        report
            .rows
            .retain(|r| self.spec.metrics.contains(&r.result.metric));
        Ok(report)
    }

    fn run_tx_power(&self, report: &mut RunReport) -> Result<()> {
        let topo = build_topology(&self.scenario)?;
        let models = self.models(&topo)?;
        let rho_th = snr_threshold(self.spec.rate_bps_hz)?;
        let rhos = self.rho_bars(&self.grid)?;
        for (&p, &rho) in self.grid.iter().zip(&rhos) {
            info!("tx_power {p} dBm");
            self.analytic_rows(&models, p, rho, rho_th, &mut report.rows)?;
        }
        if self.wants(Method::MonteCarlo) {
            let sampler = ChannelSampler::new(&topo, SamplingRoute::GammaRoot)?;
            let g = empirical_grid(&self.plan()?, &sampler, &rhos, rho_th)?;
            self.monte_carlo_rows(&g, &self.grid, &[Metric::Op, Metric::Ec], &mut report.rows)?;
        }
        Ok(())
    }

    fn rho_bars(&self, powers: &[f64]) -> Result<Vec<f64>> {
        powers
            .iter()
            .map(|&p| Ok(self.scenario.link_budget(p)?.rho_bar))
            .collect()
    }

    fn run_elements(&self, report: &mut RunReport) -> Result<()> {
        let rho_th = snr_threshold(self.spec.rate_bps_hz)?;
        let rho = self.scenario.link_budget(self.fixed_power())?.rho_bar;
        let n = self.scenario.riss.len();
        for &l in &self.grid {
            info!("elements {l}");
            let cfg = self.scenario.with_elements(&vec![l as usize; n])?;
            let topo = build_topology(&cfg)?;
            self.analytic_rows(&self.models(&topo)?, l, rho, rho_th, &mut report.rows)?;
            if self.wants(Method::MonteCarlo) {
                let sampler = ChannelSampler::new(&topo, SamplingRoute::GammaRoot)?;
                let g = empirical_grid(&self.plan()?, &sampler, &[rho], rho_th)?;
                self.monte_carlo_rows(&g, &[l], &[Metric::Op, Metric::Ec], &mut report.rows)?;
            }
        }
        Ok(())
    }

    fn selection(&self, topo: &Topology) -> Result<Vec<f64>> {
        let trials = if self.spec.trials > 0 {
            self.spec.trials
        } else {
            SELECTION_TRIALS
        };
        let sampler = ChannelSampler::new(topo, SamplingRoute::GammaRoot)?;
        Ok(empirical_grid(&SimPlan::new(trials, self.seed)?, &sampler, &[1.0], 0.0)?.selection)
    }

    fn run_rate(&self, report: &mut RunReport) -> Result<()> {
        let topo = build_topology(&self.scenario)?;
        let models = self.models(&topo)?;
        let power = self.fixed_power();
        let rho = self.scenario.link_budget(power)?.rho_bar;
        let variable = SweepVariable::Rate;

        // Outage at the fixed power, per target rate.
        for &r in &self.grid {
            let rho_th = snr_threshold(r)?;
            let results = models.outage(rho, rho_th)?;
            report
                .rows
                .extend(
                    results
                        .into_iter()
                        .filter(|x| self.wants(x.method))
                        .map(|result| ResultRow {
                            variable,
                            x: r,
                            result,
                        }),
                );
        }
        if self.wants(Method::MonteCarlo) {
            let sampler = ChannelSampler::new(&topo, SamplingRoute::GammaRoot)?;
            for &r in &self.grid {
                let g = empirical_grid(&self.plan()?, &sampler, &[rho], snr_threshold(r)?)?;
                self.monte_carlo_rows(&g, &[r], &[Metric::Op], &mut report.rows)?;
            }
        }

        if !self.spec.metrics.contains(&Metric::Ee) {
            return Ok(());
        }
        // EE under the minimum-feasible-power rule.
        let elements = topo.elements();
        let era_active = elements.iter().sum::<usize>() as f64;
        let ora_active = match self.spec.ora_active {
            OraActive::Max => *elements.iter().max().unwrap_or(&0) as f64,
            OraActive::Expected => {
                let sel = self.selection(&topo)?;
                sel.iter().zip(&elements).map(|(p, &l)| p * l as f64).sum()
            }
        };
        report
            .summary
            .insert("ora_active_elements".into(), ora_active);
        let circuit = &self.scenario.circuit;
        let bw = self.scenario.bandwidth_hz;
        for method in [Method::Quadrature, Method::LognormalAnalytic] {
            if !self.wants(method) {
                continue;
            }
            let mut curves = Vec::new();
            for (scheme, active) in [(Scheme::Era, era_active), (Scheme::Ora, ora_active)] {
                let cap = |p: f64| -> Result<f64> {
                    let rho = self.scenario.link_budget(p)?.rho_bar;
                    match (scheme, method) {
                        (Scheme::Ora, Method::LognormalAnalytic) => {
                            crate::metrics::ec_ora(&models.ora, rho, OraEcMethod::Lognormal)
                        }
                        (_, Method::LognormalAnalytic) => {
                            crate::metrics::ec_era_lognormal(&models.era.lognormal_sq, rho)
                        }
                        _ => models.primary_capacity(scheme, rho),
                    }
                };
                let mut solver = FeasibilitySolver::new(cap, self.spec.power_grid)?;
                let curve = ee_curve(&mut solver, &self.grid, bw, active, circuit)?;
                for pt in &curve {
                    let result = MetricResult::new(scheme, Metric::Ee, method, pt.ee_mbit_per_j)?;
                    report.rows.push(ResultRow {
                        variable,
                        x: pt.rate_bps_hz,
                        result,
                    });
                    if let Some(p) = pt.tx_power_dbm {
                        report.notes.push(format!(
                            "{scheme} {method} R_th={} uses P_S={p} dBm",
                            pt.rate_bps_hz
                        ));
                    }
                }
                curves.push(curve.iter().map(|p| p.ee_mbit_per_j).collect::<Vec<_>>());
            }
            if let Some(x) = crossing(&self.grid, &curves[1], &curves[0]) {
                report
                    .summary
                    .insert(format!("ee_crossing_rate_{method}"), x);
            }
        }
        Ok(())
    }

    fn run_position(&self, report: &mut RunReport) -> Result<()> {
        let rho = self.scenario.link_budget(self.fixed_power())?.rho_bar;
        let rho_th = snr_threshold(self.spec.rate_bps_hz)?;
        let y = self
            .spec
            .position_y
            .unwrap_or_else(|| default_y(&self.scenario));
        let variable = SweepVariable::RisPosition;
        let ec_methods = [Method::Quadrature, Method::LognormalAnalytic];

        // Distributed reference, repeated at every x for plotting.
        let topo = build_topology(&self.scenario)?;
        let models = self.models(&topo)?;
        let distributed: Vec<MetricResult> = models
            .capacity(rho)?
            .into_iter()
            .filter(|r| self.wants(r.method))
            .collect();
        let distributed_mc = if self.wants(Method::MonteCarlo) {
            let sampler = ChannelSampler::new(&topo, SamplingRoute::GammaRoot)?;
            Some(empirical_grid(&self.plan()?, &sampler, &[rho], rho_th)?)
        } else {
            None
        };

        for &x in &self.grid {
            info!("centralized RIS at x = {x}");
            let cfg = self.scenario.centralized([x, y]);
            let ctopo = build_topology(&cfg)?;
            let cm = self.models(&ctopo)?;
            for result in cm
                .capacity(rho)?
                .into_iter()
                .filter(|r| r.scheme == Scheme::Era)
            {
                if !self.wants(result.method) || !ec_methods.contains(&result.method) {
                    continue;
                }
                let result = MetricResult {
                    scheme: Scheme::Centralized,
                    ..result
                };
                report.rows.push(ResultRow {
                    variable,
                    x,
                    result,
                });
            }
            if self.wants(Method::MonteCarlo) {
                let sampler = ChannelSampler::new(&ctopo, SamplingRoute::GammaRoot)?;
                let g = empirical_grid(&self.plan()?, &sampler, &[rho], rho_th)?;
                let est = g.era[0].capacity;
                let result = MetricResult::new(
                    Scheme::Centralized,
                    Metric::Ec,
                    Method::MonteCarlo,
                    est.value,
                )?
                .with_meta(ResultMeta {
                    uncertainty: Some(est.std_error),
                    seed: Some(self.seed),
                    ..ResultMeta::default()
                });
                report.rows.push(ResultRow {
                    variable,
                    x,
                    result,
                });
            }
            report
                .rows
                .extend(distributed.iter().cloned().map(|result| ResultRow {
                    variable,
                    x,
                    result,
                }));
            if let Some(g) = &distributed_mc {
                self.monte_carlo_rows(g, &[x], &[Metric::Ec], &mut report.rows)?;
            }
        }
        Ok(())
    }
}

/// Mean `y` of the configured RIS positions (range midpoints for drawn ones).
fn default_y(cfg: &ScenarioConfig) -> f64 {
    let ys: Vec<f64> = cfg
        .riss
        .iter()
        .map(|r| match (&r.position, &r.position_range) {
            (Some(p), _) => p[1],
            (None, Some(pr)) => 0.5 * (pr.y[0] + pr.y[1]),
            (None, None) => 0.0,
        })
        .collect();
    ys.iter().sum::<f64>() / ys.len() as f64
}

/// Writes the header and one line per row. Numbers use the shortest
/// round-trip decimal form; a missing uncertainty is an empty field.
pub fn write_csv<W: Write>(out: &mut W, rows: &[ResultRow]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        let r = &row.result;
        let unc = r
            .meta
            .uncertainty
            .map(|u| u.to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.variable.as_str(),
            row.x,
            r.scheme,
            r.metric,
            r.method,
            r.value,
            unc
        )?;
    }
    Ok(())
}

/// Provenance record written next to the results.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub created_unix_s: u64,
    pub threads: usize,
    pub seed: u64,
    pub experiment: &'a ExperimentSpec,
    pub grid: &'a [f64],
    pub results_file: String,
    pub rows: usize,
    pub summary: &'a BTreeMap<String, f64>,
}

/// Runs the experiment and writes the results CSV and manifest under
/// `out_dir`. Returns the report.
pub fn run_to_dir(resolved: &ResolvedExperiment, out_dir: &Path) -> Result<RunReport> {
    let report = resolved.run()?;
    std::fs::create_dir_all(out_dir)?;
    let results_path = out_dir.join(&resolved.spec.outputs.results);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&results_path)?);
    write_csv(&mut f, &report.rows)?;
    f.flush()?;

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        created_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        threads: rayon::current_num_threads(),
        seed: resolved.seed,
        experiment: &resolved.spec,
        grid: &resolved.grid,
        results_file: resolved.spec.outputs.results.display().to_string(),
        rows: report.rows.len(),
        summary: &report.summary,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out_dir.join(&resolved.spec.outputs.manifest), text + "\n")?;
    Ok(report)
}
