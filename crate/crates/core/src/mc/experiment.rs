use serde::{Deserialize, Serialize};

use super::clt::{run_clt, CltConfig, CltReport};
use super::consistency::{run_consistency, ConsistencyConfig, ConsistencyReport};
use super::variance::{estimate_variance_constant, VarianceConstantEstimate};
use super::Verdict;
use crate::error::{Error, Result};
use crate::gaussian::Y1Route;
use crate::model::{HurstParam, SeedSpec};

fn relative_tol() -> f64 {
    0.15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceConstantConfig {
    #[serde(rename = "H")]
    pub h: f64,
    pub n: usize,
    pub replications: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub route: Y1Route,
    /// Allowed relative deviation from the fBm benchmark (checked only
    /// where the benchmark is finite).
    #[serde(default = "relative_tol")]
    pub relative_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceConstantReport {
    pub config: VarianceConstantConfig,
    pub estimate: VarianceConstantEstimate,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

pub fn run_variance_constant(cfg: &VarianceConstantConfig) -> Result<VarianceConstantReport> {
    let h = HurstParam::from_config(cfg.h)?;
    if cfg.n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let estimate = estimate_variance_constant(h, cfg.n, cfg.replications, SeedSpec::new(cfg.base_seed, 0), cfg.route)?;
    let mut verdicts = vec![Verdict::new(
        "seed_batches_agree",
        estimate.batches_agree(),
        format!(
            "batches {:.4} and {:.4}, z = {:.2}",
            estimate.batches[0], estimate.batches[1], estimate.batch_z
        ),
    )];
    if let (Some(b), Some(dev)) = (estimate.benchmark, estimate.relative_deviation()) {
        verdicts.push(Verdict::new(
            "fbm_benchmark",
            dev < cfg.relative_tolerance,
            format!("c_hat {:.4} ± {:.4} vs benchmark {b:.4}", estimate.c_hat, estimate.std_error),
        ));
    }
    Ok(VarianceConstantReport {
        config: cfg.clone(),
        passed: verdicts.iter().all(|v| v.passed),
        estimate,
        verdicts,
    })
}

/// Any experiment, tagged by `kind` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Consistency(ConsistencyConfig),
    Clt(CltConfig),
    VarianceConstant(VarianceConstantConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentReport {
    Consistency(ConsistencyReport),
    Clt(CltReport),
    VarianceConstant(VarianceConstantReport),
}

impl ExperimentConfig {
    pub fn base_seed(&self) -> u64 {
        match self {
            ExperimentConfig::Consistency(c) => c.base_seed,
            ExperimentConfig::Clt(c) => c.base_seed,
            ExperimentConfig::VarianceConstant(c) => c.base_seed,
        }
    }

    pub fn set_base_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Consistency(c) => c.base_seed = seed,
            ExperimentConfig::Clt(c) => c.base_seed = seed,
            ExperimentConfig::VarianceConstant(c) => c.base_seed = seed,
        }
    }

    pub fn run(&self) -> Result<ExperimentReport> {
        Ok(match self {
            ExperimentConfig::Consistency(c) => ExperimentReport::Consistency(run_consistency(c)?),
            ExperimentConfig::Clt(c) => ExperimentReport::Clt(run_clt(c)?),
            ExperimentConfig::VarianceConstant(c) => ExperimentReport::VarianceConstant(run_variance_constant(c)?),
        })
    }
}

impl ExperimentReport {
    pub fn verdicts(&self) -> &[Verdict] {
        match self {
            ExperimentReport::Consistency(r) => &r.verdicts,
            ExperimentReport::Clt(r) => &r.verdicts,
            ExperimentReport::VarianceConstant(r) => &r.verdicts,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts().iter().all(|v| v.passed)
    }

    /// Canonical JSON bytes, newline-terminated.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Input(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}
