use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use multiris::dist::{ContinuousDist, FittedDistribution, StaircaseControl};
use multiris::experiment::{
    run_to_dir, write_csv, ExperimentSpec, OraActive, ResolvedExperiment, RunReport, SweepSpec,
    SweepVariable,
};
use multiris::metrics::{AnalyticModels, Method, Metric};
use multiris::model::{build_topology, PowerSweep, ScenarioConfig};
use multiris::moments::MvMethod;
use multiris::sim::{
    gof, sample_draws, write_sample_dump, ChannelSampler, DumpScheme, GofReport, SamplingRoute,
    SimPlan,
};
use multiris::{Error, Result};

/// Outage, capacity and energy-efficiency analysis of distributed multi-RIS links.
#[derive(Parser, Debug)]
#[command(name = "multiris", version)]
struct Cli {
    /// Worker threads (1 gives bit-stable output on every platform).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Monte Carlo seed (defaults to the scenario seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for results.csv and manifest.json; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Staircase steps for the ORA distribution.
    #[arg(long, default_value_t = 100)]
    steps: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the Gamma and Log-Normal models and test them against simulation.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1000)]
        ks_samples: usize,
        #[arg(long, default_value_t = 0.05)]
        significance: f64,
    },
    /// Outage probability over the scenario's transmit-power grid.
    Op(PointArgs),
    /// Ergodic capacity over the scenario's transmit-power grid.
    Ec(PointArgs),
    /// Energy efficiency versus target rate under the minimum-power rule.
    Ee {
        #[command(flatten)]
        common: Common,
        /// Rates as from:to:step.
        #[arg(long, default_value = "1:20:0.5", value_parser = parse_range)]
        rates: PowerSweep,
        #[arg(long, value_enum, default_value_t = ActiveArg::Expected)]
        ora_active: ActiveArg,
        /// Trials for the ORA selection frequencies.
        #[arg(long, default_value_t = 0)]
        trials: u64,
    },
    /// Monte Carlo OP and EC over the scenario's transmit-power grid.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        /// Also write per-trial sample dumps (first grid power) for this many trials.
        #[arg(long)]
        dump: Option<u64>,
    },
    /// Goodness of fit of every fitted law against simulated samples.
    Gof {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1000)]
        ks_samples: usize,
        #[arg(long, default_value_t = 0.05)]
        significance: f64,
    },
    /// Run an experiment file, or a one-variable sweep of a scenario.
    Sweep {
        /// Experiment JSON; when given, the remaining options are ignored.
        #[arg(long, conflicts_with = "config")]
        spec: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        var: Option<VarArg>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        trials: u64,
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        #[arg(long)]
        tx_power: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ergodic capacity of one centralized RIS moved along the S→D line.
    Centralized {
        #[command(flatten)]
        common: Common,
        /// Comma-separated x coordinates.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "10,20,30,40,50,60,70,80,90"
        )]
        positions: Vec<f64>,
        #[arg(long)]
        y: Option<f64>,
        #[arg(long)]
        tx_power: Option<f64>,
        #[arg(long, default_value_t = 0)]
        trials: u64,
    },
}

#[derive(Args, Debug)]
struct PointArgs {
    #[command(flatten)]
    common: Common,
    /// Target rate R_th in b/s/Hz.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Monte Carlo trials (0 for analytic only).
    #[arg(long, default_value_t = 0)]
    trials: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ActiveArg {
    Expected,
    Max,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
#[value(rename_all = "snake_case")]
enum VarArg {
    TxPower,
    Rate,
    Elements,
    RisPosition,
}

impl From<VarArg> for SweepVariable {
    fn from(v: VarArg) -> Self {
        match v {
            VarArg::TxPower => SweepVariable::TxPower,
            VarArg::Rate => SweepVariable::Rate,
            VarArg::Elements => SweepVariable::Elements,
            VarArg::RisPosition => SweepVariable::RisPosition,
        }
    }
}

fn parse_range(s: &str) -> std::result::Result<PowerSweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected from:to:step".into());
    }
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}"));
    Ok(PowerSweep {
        from: num(parts[0])?,
        to: num(parts[1])?,
        step: num(parts[2])?,
    })
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    ScenarioConfig::from_path(path)
}

fn power_sweep_of(cfg: &ScenarioConfig) -> Result<SweepSpec> {
    let grid = cfg.tx_powers()?;
    if grid.is_empty() {
        return Err(Error::Config(
            "the scenario needs `tx_power_dbm` or `tx_power_sweep`".into(),
        ));
    }
    Ok(SweepSpec {
        variable: SweepVariable::TxPower,
        grid,
        range: None,
    })
}

fn with_mc(spec: &mut ExperimentSpec, trials: u64) {
    spec.trials = trials;
    if trials > 0 {
        spec.methods.push(Method::MonteCarlo);
    }
}

fn emit(resolved: &ResolvedExperiment, out: Option<&Path>) -> Result<RunReport> {
    match out {
        Some(dir) => {
            let report = run_to_dir(resolved, dir)?;
            info!("wrote {} rows to {}", report.rows.len(), dir.display());
            Ok(report)
        }
        None => {
            let report = resolved.run()?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&mut lock, &report.rows)?;
            lock.flush()?;
            Ok(report)
        }
    }
}

fn print_summary(report: &RunReport) {
    for (k, v) in &report.summary {
        eprintln!("{k} = {v}");
    }
}

#[derive(Serialize)]
struct NamedGof {
    target: &'static str,
    model: String,
    #[serde(flatten)]
    report: GofReport,
}

#[derive(Serialize)]
struct FitOutput {
    alpha_z: f64,
    beta_z: f64,
    nu_z: f64,
    zeta_z: f64,
    nu_r: f64,
    zeta_r: f64,
    nu_z_sq: f64,
    zeta_z_sq: f64,
    nu_r_sq: f64,
    zeta_r_sq: f64,
    gof: Vec<NamedGof>,
}

fn gof_table(
    common: &Common,
    trials: u64,
    ks_samples: usize,
    significance: f64,
) -> Result<FitOutput> {
    let cfg = load(&common.config)?;
    let topo = build_topology(&cfg)?;
    let ctl = StaircaseControl::new(common.steps)?;
    let models = AnalyticModels::build(&topo, &MvMethod::default(), ctl)?;
    let plan = SimPlan::new(trials, common.seed.unwrap_or(cfg.seed))?;
    let draws = sample_draws(
        &plan,
        &ChannelSampler::new(&topo, SamplingRoute::GammaRoot)?,
    );
    let z: Vec<f64> = draws.iter().map(|d| d.z).collect();
    let r: Vec<f64> = draws.iter().map(|d| d.r).collect();

    let mut rows = Vec::new();
    let mut push = |target: &'static str,
                    samples: &[f64],
                    model: String,
                    d: &dyn ContinuousDist|
     -> Result<()> {
        let report = gof(samples, &Wrap(d), significance, ks_samples)?;
        rows.push(NamedGof {
            target,
            model,
            report,
        });
        Ok(())
    };
    push(
        "Z",
        &z,
        "gamma".into(),
        &FittedDistribution::from(models.era.gamma),
    )?;
    push(
        "Z",
        &z,
        "lognormal".into(),
        &FittedDistribution::from(models.era.lognormal),
    )?;
    push("R", &r, "staircase".into(), &models.ora.staircase)?;
    push(
        "R",
        &r,
        "lognormal".into(),
        &FittedDistribution::from(models.ora.lognormal),
    )?;
    Ok(FitOutput {
        alpha_z: models.era.gamma.alpha,
        beta_z: models.era.gamma.beta,
        nu_z: models.era.lognormal.nu,
        zeta_z: models.era.lognormal.zeta,
        nu_r: models.ora.lognormal.nu,
        zeta_r: models.ora.lognormal.zeta,
        nu_z_sq: models.era.lognormal_sq.nu,
        zeta_z_sq: models.era.lognormal_sq.zeta,
        nu_r_sq: models.ora.lognormal_sq.nu,
        zeta_r_sq: models.ora.lognormal_sq.zeta,
        gof: rows,
    })
}

/// Lets a trait object stand in where a sized distribution is expected.
struct Wrap<'a>(&'a dyn ContinuousDist);

impl ContinuousDist for Wrap<'_> {
    fn pdf(&self, x: f64) -> f64 {
        self.0.pdf(x)
    }
    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }
    fn sf(&self, x: f64) -> f64 {
        self.0.sf(x)
    }
    fn mean(&self) -> f64 {
        self.0.mean()
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>, name: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn point_command(args: &PointArgs, metric: Metric) -> Result<()> {
    let cfg = load(&args.common.config)?;
    let mut spec = ExperimentSpec::new(cfg.clone(), power_sweep_of(&cfg)?);
    spec.metrics = vec![metric];
    spec.rate_bps_hz = args.rate;
    spec.seed = args.common.seed;
    spec.staircase_steps = args.common.steps;
    with_mc(&mut spec, args.trials);
    emit(&spec.resolve(Path::new("."))?, args.common.out.as_deref())?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            common,
            trials,
            ks_samples,
            significance,
        }
        | Command::Gof {
            common,
            trials,
            ks_samples,
            significance,
        } => {
            let fit = gof_table(&common, trials, ks_samples, significance)?;
            write_json(&fit, common.out.as_deref(), "fit.json")
        }
        Command::Op(args) => point_command(&args, Metric::Op),
        Command::Ec(args) => point_command(&args, Metric::Ec),
        Command::Ee {
            common,
            rates,
            ora_active,
            trials,
        } => {
            let cfg = load(&common.config)?;
            let mut spec = ExperimentSpec::new(
                cfg.clone(),
                SweepSpec {
                    variable: SweepVariable::Rate,
                    grid: Vec::new(),
                    range: Some(rates),
                },
            );
            spec.metrics = vec![Metric::Ee];
            spec.methods = vec![Method::Quadrature, Method::LognormalAnalytic];
            spec.seed = common.seed;
            spec.trials = trials;
            spec.staircase_steps = common.steps;
            // Outage rows are dropped, so any power satisfies the fixed-power check.
            spec.tx_power_dbm = Some(cfg.tx_power_dbm.unwrap_or(0.0));
            spec.ora_active = match ora_active {
                ActiveArg::Expected => OraActive::Expected,
                ActiveArg::Max => OraActive::Max,
            };
            let report = emit(&spec.resolve(Path::new("."))?, common.out.as_deref())?;
            print_summary(&report);
            Ok(())
        }
        Command::Simulate {
            common,
            trials,
            rate,
            dump,
        } => {
            let cfg = load(&common.config)?;
            let mut spec = ExperimentSpec::new(cfg.clone(), power_sweep_of(&cfg)?);
            spec.methods = vec![Method::MonteCarlo];
            spec.metrics = vec![Metric::Op, Metric::Ec];
            spec.trials = trials;
            spec.rate_bps_hz = rate;
            spec.seed = common.seed;
            let resolved = spec.resolve(Path::new("."))?;
            emit(&resolved, common.out.as_deref())?;
            if let Some(n) = dump {
                let dir = common
                    .out
                    .as_deref()
                    .ok_or_else(|| Error::Config("--dump needs --out".into()))?;
                let topo = build_topology(&cfg)?;
                let draws = sample_draws(
                    &SimPlan::new(n, resolved.seed)?,
                    &ChannelSampler::new(&topo, SamplingRoute::GammaRoot)?,
                );
                let rho = cfg.link_budget(resolved.grid[0])?.rho_bar;
                for (name, scheme) in [
                    ("samples_era.csv", DumpScheme::Era),
                    ("samples_ora.csv", DumpScheme::Ora),
                ] {
                    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
                    write_sample_dump(&mut f, &draws, scheme, rho)?;
                    f.flush()?;
                }
            }
            Ok(())
        }
        Command::Sweep {
            spec,
            config,
            var,
            from,
            to,
            step,
            seed,
            trials,
            rate,
            tx_power,
            out,
        } => {
            let (resolved, out) = match spec {
                Some(path) => {
                    let s = ExperimentSpec::from_path(&path)?;
                    let base = path.parent().unwrap_or(Path::new("."));
                    (s.resolve(base)?, out)
                }
                None => {
                    let config = config
                        .ok_or_else(|| Error::Config("sweep needs --spec or --config".into()))?;
                    let var = var.ok_or_else(|| Error::Config("sweep needs --var".into()))?;
                    let (from, to, step) = match (from, to, step) {
                        (Some(a), Some(b), Some(c)) => (a, b, c),
                        _ => {
                            return Err(Error::Config("sweep needs --from, --to and --step".into()))
                        }
                    };
                    let cfg = load(&config)?;
                    let mut s = ExperimentSpec::new(
                        cfg,
                        SweepSpec {
                            variable: var.into(),
                            grid: Vec::new(),
                            range: Some(PowerSweep { from, to, step }),
                        },
                    );
                    s.seed = seed;
                    s.rate_bps_hz = rate;
                    s.tx_power_dbm = tx_power;
                    with_mc(&mut s, trials);
                    (s.resolve(Path::new("."))?, out)
                }
            };
            let report = emit(&resolved, out.as_deref())?;
            print_summary(&report);
            Ok(())
        }
        Command::Centralized {
            common,
            positions,
            y,
            tx_power,
            trials,
        } => {
            let cfg = load(&common.config)?;
            let mut spec = ExperimentSpec::new(
                cfg,
                SweepSpec {
                    variable: SweepVariable::RisPosition,
                    grid: positions,
                    range: None,
                },
            );
            spec.metrics = vec![Metric::Ec];
            spec.seed = common.seed;
            spec.position_y = y;
            spec.tx_power_dbm = tx_power;
            spec.staircase_steps = common.steps;
            with_mc(&mut spec, trials);
            emit(&spec.resolve(Path::new("."))?, common.out.as_deref())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 2 } else { 1 })
        }
    }
}
