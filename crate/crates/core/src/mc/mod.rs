//! Monte Carlo checks of the estimator's limit theorems.

pub mod ks;
pub mod stats;
pub mod variance;

pub use ks::{kolmogorov_survival, ks_distance, ks_normal, ks_two_sample, KsResult};
pub use variance::{estimate_variance_constant, fbm_variance_benchmark, VarianceConstantEstimate};

pub mod clt;
pub mod consistency;
pub mod experiment;

pub use clt::{run_clt, CltConfig, CltReport, CltSample};
pub use experiment::{
    run_variance_constant, ExperimentConfig, ExperimentReport, VarianceConstantConfig, VarianceConstantReport,
};
pub use consistency::{run_consistency, ConsistencyConfig, ConsistencyCriteria, ConsistencyReport, LadderRow};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One named pass/fail check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Number of steps `n·T`, which must be a whole number.
pub fn steps_for(n: usize, horizon: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon", format!("must be positive, got {horizon}")));
    }
    let x = n as f64 * horizon;
    let k = x.round();
    if (x - k).abs() > 1e-9 * x.max(1.0) || k < 1.0 {
        return Err(Error::invalid("horizon", format!("n·T = {x} is not a whole number of steps")));
    }
    Ok(k as usize)
}
