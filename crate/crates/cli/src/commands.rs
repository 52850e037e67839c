use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::time::Instant;

use fouqv::gaussian::{variogram_auto, PathSampler, ProcessKind, Y1Route};
use fouqv::io::{fmt_f64, read_path_csv, write_table};
use fouqv::mc::ExperimentConfig;
use fouqv::model::time_change;
use fouqv::pathwise::solve_fou2;
use fouqv::qv::{qv_on_jumps, sup_error, write_qv_csv, IVTarget, QvSummary};
use fouqv::{HurstParam, RawPath, SampledPath, SeedSpec, TimeGrid, VolatilityFn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::output::{Manifest, Outputs};

fn one() -> f64 {
    1.0
}

fn csv_bytes<F: FnOnce(&mut Vec<u8>) -> fouqv::Result<()>>(f: F) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Fbm,
    Y1,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FbmMethod {
    #[default]
    Circulant,
    Cholesky,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_process")]
    pub process: Process,
    #[serde(rename = "H")]
    pub h: f64,
    pub n: usize,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default)]
    pub route: Y1Route,
    #[serde(default)]
    pub fbm_method: FbmMethod,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub sigma: Option<VolatilityFn>,
}

fn default_process() -> Process {
    Process::Y1
}

/// Checks shared by every command that samples the driver.
fn driver_setup(h: f64, n: usize, horizon: f64) -> CliResult<(HurstParam, TimeGrid)> {
    let h = HurstParam::from_config(h)?;
    if n == 0 {
        return Err(fouqv::Error::invalid("n", "must be positive").into());
    }
    let grid = TimeGrid::uniform(horizon, n)?;
    Ok((h, grid))
}

pub fn simulate(cfg: &SimulateConfig, config_echo: Value, seed: u64) -> CliResult<Outputs> {
    let (h, grid) = driver_setup(cfg.h, cfg.n, cfg.horizon)?;
    let sde = cfg.theta.is_some() || cfg.sigma.is_some();
    if sde && cfg.process != Process::Y1 {
        return Err(CliError::Config("theta/sigma need the y1 driver (process = y1)".into()));
    }
    if let Some(s) = &cfg.sigma {
        s.validate()?;
    }
    let sampler = match cfg.process {
        Process::Y1 => {
            time_change(h, cfg.horizon)?;
            PathSampler::y1(h, &grid, cfg.route)?
        }
        Process::Fbm => match cfg.fbm_method {
            FbmMethod::Circulant => PathSampler::fbm_circulant(h, &grid)?,
            FbmMethod::Cholesky => PathSampler::fbm_cholesky(h, &grid)?,
        },
    };
    let spec = SeedSpec::new(seed, 0);
    let path = sampler.sample(spec);
    let mut out = Outputs::default();
    out.add("path.csv", csv_bytes(|b| path.write_csv(b))?);
    if sde {
        let sigma = cfg.sigma.clone().unwrap_or(VolatilityFn::constant(1.0));
        let sol = solve_fou2(cfg.theta.unwrap_or(0.0), &sigma, cfg.x0, &path)?;
        out.add("x.csv", csv_bytes(|b| sol.x.write_csv(b))?);
        out.add("drift.csv", csv_bytes(|b| sol.drift.write_csv(b))?);
    }
    let mut m = Manifest::new("simulate", seed, config_echo);
    m.details = json!({
        "process": match path.process { ProcessKind::Fbm => "fbm", ProcessKind::Y1 => "y1" },
        "method": path.method,
        "H": h.value(),
        "grid": {"n": grid.n(), "horizon": grid.horizon(), "points": grid.len()},
        "seed": spec,
    });
    m.finish(&mut out);
    Ok(out)
}

fn default_times() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0]
}

fn default_subdiv() -> usize {
    256
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariogramConfig {
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    #[serde(default = "default_times")]
    pub t: Vec<f64>,
    /// Sub-cells for the brute-force route used when `H ≤ ½`.
    #[serde(default = "default_subdiv")]
    pub subdiv: usize,
}

pub fn variogram(cfg: &VariogramConfig, config_echo: Value, seed: u64) -> CliResult<Outputs> {
    if cfg.h.is_empty() {
        return Err(CliError::Config("need at least one H".into()));
    }
    let mut hs = cfg
        .h
        .iter()
        .map(|&h| HurstParam::from_config(h))
        .collect::<fouqv::Result<Vec<_>>>()?;
    if let Some(t) = cfg.t.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(fouqv::Error::invalid("t", format!("times must be finite and >= 0, got {t}")).into());
    }
    let mut ts: Vec<f64> = cfg.t.iter().copied().filter(|&t| t > 0.0).collect();
    hs.sort_by(|a, b| a.value().total_cmp(&b.value()));
    hs.dedup();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut rows = Vec::with_capacity(hs.len() * ts.len());
    let mut notes = Vec::new();
    for &h in &hs {
        if !h.kernel_regime_valid() {
            notes.push(format!(
                "H = {}: the kernel is not integrable for H <= 1/2; values use the brute-force route with {} sub-cells",
                h.value(),
                cfg.subdiv
            ));
        }
        for &t in &ts {
            let (v, _) = variogram_auto(h, t, cfg.subdiv)?;
            rows.push(vec![h.value(), t, v, v / t.powf(2.0 * h.value())]);
        }
    }
    let mut out = Outputs::default();
    out.add("variogram.csv", csv_bytes(|b| write_table(b, &["h", "t", "v", "v_over_t2h"], rows))?);
    let mut m = Manifest::new("variogram", seed, config_echo);
    m.details = json!({"rows": hs.len() * ts.len(), "excluded_zero_times": cfg.t.len() - cfg.t.iter().filter(|&&t| t > 0.0).count()});
    m.notes = notes;
    m.finish(&mut out);
    Ok(out)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    #[serde(rename = "H")]
    pub h: f64,
    /// Path CSV to estimate from; when absent a path is simulated.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default)]
    pub route: Y1Route,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub x0: f64,
    /// Volatility of the simulated path; also the target `∫σ²`.
    #[serde(default)]
    pub sigma: Option<VolatilityFn>,
}

pub fn estimate(cfg: &EstimateConfig, config_echo: Value, seed: u64) -> CliResult<Outputs> {
    let start = Instant::now();
    let h = HurstParam::from_config(cfg.h)?;
    let mut m = Manifest::new("estimate", seed, config_echo);
    let (path, sigma) = match &cfg.input {
        Some(file) => {
            if cfg.n.is_some() {
                return Err(CliError::Config("give either an input file or n, not both".into()));
            }
            let f = File::open(file).map_err(|e| CliError::Input(format!("cannot open {}: {e}", file.display())))?;
            let (grid, values) = read_path_csv(BufReader::new(f))?;
            grid.require_uniform()?;
            m.notes.push(format!("input path {}", file.display()));
            (RawPath { grid, values }, cfg.sigma.clone())
        }
        None => {
            let n = cfg
                .n
                .ok_or_else(|| CliError::Config("need an input file or a simulation size n".into()))?;
            let (h, grid) = driver_setup(cfg.h, n, cfg.horizon)?;
            time_change(h, cfg.horizon)?;
            let sigma = cfg.sigma.clone().unwrap_or(VolatilityFn::constant(1.0));
            sigma.validate()?;
            let y = PathSampler::y1(h, &grid, cfg.route)?.sample(SeedSpec::new(seed, 0));
            let x = solve_fou2(cfg.theta, &sigma, cfg.x0, &y)?.x;
            (RawPath { grid, values: x.values }, Some(sigma))
        }
    };
    let series = qv_on_jumps(&path, h)?;
    let target = sigma.as_ref().map(|s| IVTarget::new(s, path.grid()));
    let err = target.as_ref().map(|t| sup_error(&series, t)).transpose()?;
    let mut out = Outputs::default();
    out.add("qv.csv", csv_bytes(|b| write_qv_csv(b, &series, target.as_ref()))?);
    out.add_json(
        "summary.json",
        &QvSummary {
            n: series.frequency,
            h: h.value(),
            theta: Some(cfg.theta),
            sup_error: err,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    );
    m.details = json!({
        "n": series.frequency,
        "H": h.value(),
        "scale_exponent": series.scale_exponent,
        "steps": path.grid().n(),
        "horizon": path.grid().horizon(),
        "target": sigma.as_ref().map(|s| s.describe()),
        "sup_error": err.map(fmt_f64),
    });
    m.finish(&mut out);
    Ok(out)
}

/// Runs an experiment; the flag is whether every verdict passed.
pub fn experiment(cfg: &ExperimentConfig, config_echo: Value) -> CliResult<(Outputs, bool, Vec<String>)> {
    let start = Instant::now();
    let report = cfg.run()?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut out = Outputs::default();
    out.add("report.json", report.to_json()?.into_bytes());
    match &report {
        fouqv::mc::ExperimentReport::Clt(r) => out.add("samples.csv", csv_bytes(|b| r.write_samples_csv(b))?),
        fouqv::mc::ExperimentReport::Consistency(r) => {
            let rows = r.rows.iter().map(|row| {
                vec![
                    row.n as f64,
                    row.median_sup_error,
                    row.p90_sup_error,
                    row.single_path_sup_error,
                    row.mean_terminal_error,
                    row.terminal_std_error,
                ]
            });
            let header = [
                "n",
                "median_sup_error",
                "p90_sup_error",
                "single_path_sup_error",
                "mean_terminal_error",
                "terminal_std_error",
            ];
            out.add("ladder.csv", csv_bytes(|b| write_table(b, &header, rows))?);
        }
        fouqv::mc::ExperimentReport::VarianceConstant(_) => {}
    }
    out.add_json("timing.json", &json!({ "runtime_ms": runtime_ms }));
    let mut m = Manifest::new("experiment", cfg.base_seed(), config_echo);
    m.details = json!({"passed": report.passed()});
    m.notes.push("timing.json holds wall-clock time and is the only file that varies between reruns".into());
    m.finish(&mut out);
    let lines = report
        .verdicts()
        .iter()
        .map(|v| format!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail))
        .collect();
    Ok((out, report.passed(), lines))
}
