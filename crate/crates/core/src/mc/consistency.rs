use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stats, steps_for, Verdict};
use crate::error::{Error, Result};
use crate::gaussian::{PathSampler, Y1Route};
use crate::model::{HurstParam, SeedSpec, TimeGrid, VolatilityFn};
use crate::pathwise::solve_fou2;
use crate::qv::{qv_on_jumps, sup_error, IVTarget};

fn unit() -> VolatilityFn {
    VolatilityFn::constant(1.0)
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// Pass/fail thresholds; unset ones are not checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyCriteria {
    /// Median sup-error must fall at every rung of the ladder.
    #[serde(default = "yes")]
    pub monotone_median: bool,
    /// Median at the last rung over median at the first rung.
    #[serde(default)]
    pub max_median_ratio: Option<f64>,
    /// Sup-error of replication 0 at the last rung.
    #[serde(default)]
    pub max_single_path_error: Option<f64>,
    /// Median sup-error at the last rung.
    #[serde(default)]
    pub max_final_median: Option<f64>,
    /// With θ = 0, mean terminal error within 3 standard errors of 0 for
    /// every rung with n ≥ 1024.
    #[serde(default = "yes")]
    pub bias_check: bool,
}

impl Default for ConsistencyCriteria {
    fn default() -> Self {
        Self {
            monotone_median: true,
            max_median_ratio: None,
            max_single_path_error: None,
            max_final_median: None,
            bias_check: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyConfig {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "unit")]
    pub sigma: VolatilityFn,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    /// Sampling frequencies n; each path has n·T steps.
    pub ladder: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub route: Y1Route,
    #[serde(default)]
    pub criteria: ConsistencyCriteria,
}

impl ConsistencyConfig {
    pub fn validate(&self) -> Result<HurstParam> {
        let h = HurstParam::from_config(self.h)?;
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        if self.ladder.is_empty() {
            return Err(Error::invalid("ladder", "needs at least one frequency"));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::invalid("theta", format!("must be finite and >= 0, got {}", self.theta)));
        }
        if !self.x0.is_finite() {
            return Err(Error::invalid("x0", "must be finite"));
        }
        self.sigma.validate()?;
        for &n in &self.ladder {
            steps_for(n, self.horizon)?;
        }
        crate::model::time_change(h, self.horizon)?;
        Ok(h)
    }
}

/// Aggregates for one rung of the ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub n: usize,
    pub median_sup_error: f64,
    pub p90_sup_error: f64,
    /// Sup-error of replication 0.
    pub single_path_sup_error: f64,
    /// Mean of `QV_n(X)_T − ∫_0^T σ²`.
    pub mean_terminal_error: f64,
    pub terminal_std_error: f64,
    /// With σ ≡ 0: replications where `QV_n(X)_T > θ²‖X‖²_∞ T n^{2H−2}`.
    pub drift_bound_violations: Option<usize>,
    /// With σ ≡ 0: largest `QV_n(X)_T / (θ²‖X‖²_∞ T n^{2H−2})`.
    pub max_drift_bound_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub config: ConsistencyConfig,
    pub rows: Vec<LadderRow>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy)]
struct Replication {
    sup_error: f64,
    terminal_error: f64,
    /// `(QV_T, θ²‖X‖²_∞ T n^{2H−2})`
    drift: Option<(f64, f64)>,
}

fn replicate(
    cfg: &ConsistencyConfig,
    h: HurstParam,
    sampler: &PathSampler,
    n: usize,
    seed: SeedSpec,
) -> Result<Replication> {
    let y = sampler.sample(seed);
    let sol = solve_fou2(cfg.theta, &cfg.sigma, cfg.x0, &y)?;
    let est = qv_on_jumps(&sol.x, h)?;
    let target = IVTarget::new(&cfg.sigma, &y.grid);
    let last = est.values.len() - 1;
    let drift = cfg.sigma.is_identically_zero().then(|| {
        let xmax = sol.x.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bound = cfg.theta.powi(2) * xmax * xmax * cfg.horizon * (n as f64).powf(2.0 * h.value() - 2.0);
        (est.values[last], bound)
    });
    Ok(Replication {
        sup_error: sup_error(&est, &target)?,
        terminal_error: est.values[last] - target.values[last],
        drift,
    })
}

fn aggregate(n: usize, reps: &[Replication]) -> LadderRow {
    let sup: Vec<f64> = reps.iter().map(|r| r.sup_error).collect();
    let term: Vec<f64> = reps.iter().map(|r| r.terminal_error).collect();
    let drift: Option<Vec<(f64, f64)>> = reps.iter().map(|r| r.drift).collect();
    let (mean, se) = if term.len() > 1 {
        (stats::mean(&term), stats::std_error(&term))
    } else {
        (term[0], f64::NAN)
    };
    LadderRow {
        n,
        median_sup_error: stats::median(&sup),
        p90_sup_error: stats::quantile(&sup, 0.9),
        single_path_sup_error: sup[0],
        mean_terminal_error: mean,
        terminal_std_error: se,
        drift_bound_violations: drift.as_ref().map(|d| d.iter().filter(|(q, b)| q > b).count()),
        max_drift_bound_ratio: drift.map(|d| {
            d.iter()
                .map(|&(q, b)| if b > 0.0 { q / b } else if q > 0.0 { f64::INFINITY } else { 0.0 })
                .fold(0.0, f64::max)
        }),
    }
}

fn judge(cfg: &ConsistencyConfig, rows: &[LadderRow]) -> Vec<Verdict> {
    let c = &cfg.criteria;
    let mut out = Vec::new();
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    if c.monotone_median && rows.len() > 1 {
        let ok = rows.windows(2).all(|w| w[1].median_sup_error < w[0].median_sup_error);
        let meds: Vec<String> = rows.iter().map(|r| format!("{:.4e}", r.median_sup_error)).collect();
        out.push(Verdict::new("median_decreasing", ok, format!("medians {}", meds.join(" > "))));
    }
    if let Some(ratio) = c.max_median_ratio {
        let got = last.median_sup_error / first.median_sup_error;
        out.push(Verdict::new(
            "median_ratio",
            got < ratio,
            format!("median(n={}) / median(n={}) = {got:.4} (limit {ratio})", last.n, first.n),
        ));
    }
    if let Some(tol) = c.max_single_path_error {
        out.push(Verdict::new(
            "single_path",
            last.single_path_sup_error < tol,
            format!("sup error {:.4e} at n={} (limit {tol})", last.single_path_sup_error, last.n),
        ));
    }
    if let Some(tol) = c.max_final_median {
        out.push(Verdict::new(
            "final_median",
            last.median_sup_error < tol,
            format!("median sup error {:.4e} at n={} (limit {tol})", last.median_sup_error, last.n),
        ));
    }
    if c.bias_check && cfg.theta == 0.0 && cfg.replications > 1 {
        for r in rows.iter().filter(|r| r.n >= 1024) {
            out.push(Verdict::new(
                format!("bias_n{}", r.n),
                r.mean_terminal_error.abs() <= 3.0 * r.terminal_std_error,
                format!("mean {:.3e} ± {:.3e}", r.mean_terminal_error, r.terminal_std_error),
            ));
        }
    }
    for r in rows {
        if let (Some(v), Some(m)) = (r.drift_bound_violations, r.max_drift_bound_ratio) {
            out.push(Verdict::new(
                format!("drift_bound_n{}", r.n),
                v == 0,
                format!("{v} violations, largest QV / bound = {m:.4}"),
            ));
        }
    }
    out
}

/// Sup-norm error of the integrated-volatility estimator over an n-ladder.
pub fn run_consistency(cfg: &ConsistencyConfig) -> Result<ConsistencyReport> {
    let h = cfg.validate()?;
    let base = SeedSpec::new(cfg.base_seed, 0);
    let mut rows = Vec::with_capacity(cfg.ladder.len());
    for &n in &cfg.ladder {
        let grid = TimeGrid::uniform(cfg.horizon, steps_for(n, cfg.horizon)?)?;
        let sampler = PathSampler::y1(h, &grid, cfg.route)?;
        let rung = base.child(n as u64);
        let reps = (0..cfg.replications)
            .into_par_iter()
            .map(|r| replicate(cfg, h, &sampler, n, rung.with_replication(r as u64)))
            .collect::<Result<Vec<_>>>()?;
        rows.push(aggregate(n, &reps));
    }
    let verdicts = judge(cfg, &rows);
    Ok(ConsistencyReport {
        config: cfg.clone(),
        passed: verdicts.iter().all(|v| v.passed),
        rows,
        verdicts,
    })
}
