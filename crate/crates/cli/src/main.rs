mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fouqv::gaussian::{Y1Route, DEFAULT_REFINE};
use fouqv::mc::ExperimentConfig;
use fouqv::VolatilityFn;
use serde_json::Value;

use commands::{FbmMethod, Process};
use config::{resolve, ConfigFile, Overrides};
use error::{CliError, CliResult};

/// Simulate fractional OU drivers and estimate integrated volatility from
/// realized quadratic variation.
#[derive(Debug, Parser)]
#[command(name = "fouqv", version)]
struct Cli {
    /// JSON config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: fouqv-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample fBm or the Y1 driver, optionally with the fOU solution.
    Simulate(SimulateArgs),
    /// Tabulate the Y1 variogram v(t) and v(t)/t^{2H}.
    Variogram(VariogramArgs),
    /// Scaled realized QV of a path, with sup-norm error when σ is known.
    Estimate(EstimateArgs),
    /// Monte Carlo experiments: consistency, clt, variance-constant.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RouteArg {
    Circulant,
    ExactCov,
    Timechange,
}

#[derive(Debug, Args)]
struct RouteArgs {
    /// Sampling route for the Y1 driver.
    #[arg(long, value_enum)]
    route: Option<RouteArg>,
    /// Sub-steps per grid step on the time-change route.
    #[arg(long)]
    refine: Option<usize>,
}

impl RouteArgs {
    fn route(&self) -> CliResult<Option<Y1Route>> {
        Ok(match (self.route, self.refine) {
            (None, None) => None,
            (Some(RouteArg::Circulant), None) => Some(Y1Route::Circulant),
            (Some(RouteArg::ExactCov), None) => Some(Y1Route::ExactCov),
            (Some(RouteArg::Timechange) | None, refine) => Some(Y1Route::Timechange {
                refine: refine.unwrap_or(DEFAULT_REFINE),
            }),
            (Some(_), Some(_)) => {
                return Err(CliError::Config("--refine applies only to --route timechange".into()))
            }
        })
    }
}

fn sigma_arg(s: &Option<String>) -> CliResult<Option<VolatilityFn>> {
    s.as_deref().map(VolatilityFn::parse).transpose().map_err(CliError::from)
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    process: Option<Process>,
    /// Hurst index.
    #[arg(long)]
    h: Option<f64>,
    /// Number of grid steps.
    #[arg(long)]
    n: Option<usize>,
    /// Horizon T.
    #[arg(long)]
    t: Option<f64>,
    #[command(flatten)]
    route: RouteArgs,
    /// fBm sampler.
    #[arg(long, value_enum)]
    method: Option<FbmMethod>,
    /// Mean reversion θ; with --sigma also writes the fOU path.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    /// Volatility, e.g. const:1, affine:1,0.5, sine:1,0.3,6.28,0, power:1,1,0.5,0.8
    #[arg(long)]
    sigma: Option<String>,
}

#[derive(Debug, Args)]
struct VariogramArgs {
    /// Hurst indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    h: Option<Vec<f64>>,
    /// Lags t, comma separated (default 1e-4,1e-3,1e-2,1e-1,1).
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    /// Sub-cells of the brute-force route used for H <= 1/2.
    #[arg(long)]
    subdiv: Option<usize>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Path CSV (`t,value`) on a uniform grid.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    h: Option<f64>,
    /// Simulate a path with this many steps instead of reading one.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[command(flatten)]
    route: RouteArgs,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    /// Volatility; also the target of the sup-norm error.
    #[arg(long)]
    sigma: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Consistency,
    Clt,
    VarianceConstant,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    #[arg(long)]
    h: Option<f64>,
    /// Sampling frequency (clt, variance-constant).
    #[arg(long)]
    n: Option<usize>,
    /// Frequencies, comma separated (consistency).
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<usize>>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[command(flatten)]
    route: RouteArgs,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    sigma: Option<String>,
    /// Calibration replications for the CLT variance constant.
    #[arg(long)]
    calibration_replications: Option<usize>,
}

fn run(cli: Cli) -> CliResult<()> {
    let file = ConfigFile::load(cli.config.as_deref())?;
    let threads = cli.threads.or(file.threads);
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {t} threads: {e}")))?;
    }
    let out_dir = cli.out.or(file.out).unwrap_or_else(|| PathBuf::from("fouqv-out"));
    let seed = cli.seed.or(file.seed).unwrap_or(0);

    let (outputs, passed, lines) = match cli.command {
        Command::Simulate(a) => {
            let mut o = Overrides::default();
            o.set("process", a.process)
                .set("H", a.h)
                .set("n", a.n)
                .set("horizon", a.t)
                .set("route", a.route.route()?)
                .set("fbm_method", a.method)
                .set("theta", a.theta)
                .set("x0", a.x0)
                .set("sigma", sigma_arg(&a.sigma)?);
            let (cfg, echo) = resolve("simulate", file.simulate, o, Overrides::default())?;
            (commands::simulate(&cfg, echo, seed)?, true, Vec::new())
        }
        Command::Variogram(a) => {
            let mut o = Overrides::default();
            o.set("H", a.h).set("t", a.t).set("subdiv", a.subdiv);
            let (cfg, echo) = resolve("variogram", file.variogram, o, Overrides::default())?;
            (commands::variogram(&cfg, echo, seed)?, true, Vec::new())
        }
        Command::Estimate(a) => {
            let mut o = Overrides::default();
            o.set("input", a.input)
                .set("H", a.h)
                .set("n", a.n)
                .set("horizon", a.t)
                .set("route", a.route.route()?)
                .set("theta", a.theta)
                .set("x0", a.x0)
                .set("sigma", sigma_arg(&a.sigma)?);
            let (cfg, echo) = resolve("estimate", file.estimate, o, Overrides::default())?;
            (commands::estimate(&cfg, echo, seed)?, true, Vec::new())
        }
        Command::Experiment(a) => {
            let mut o = Overrides::default();
            let kind = a.kind.map(|k| match k {
                KindArg::Consistency => "consistency",
                KindArg::Clt => "clt",
                KindArg::VarianceConstant => "variance-constant",
            });
            o.set("kind", kind)
                .set("H", a.h)
                .set("n", a.n)
                .set("ladder", a.ladder)
                .set("replications", a.replications)
                .set("horizon", a.t)
                .set("route", a.route.route()?)
                .set("theta", a.theta)
                .set("x0", a.x0)
                .set("sigma", sigma_arg(&a.sigma)?)
                .set("calibration_replications", a.calibration_replications)
                .set("base_seed", cli.seed);
            let mut defaults = Overrides::default();
            defaults.set_default("base_seed", Value::from(seed));
            let (cfg, echo): (ExperimentConfig, Value) = resolve("experiment", file.experiment, o, defaults)?;
            let (out, passed, lines) = commands::experiment(&cfg, echo)?;
            (out, passed, lines)
        }
    };
    for l in &lines {
        println!("{l}");
    }
    for p in outputs.commit(&out_dir)? {
        log::info!("wrote {}", p.display());
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::Verdict)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fouqv: {e}");
            e.exit_code()
        }
    }
}
