use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats;
use crate::error::{Error, Result};
use crate::gaussian::{fgn_autocorrelation, PathSampler, Y1Route};
use crate::model::{HurstParam, SeedSpec, TimeGrid};
use crate::qv::scaled_qv;
use crate::special::hurwitz_zeta;

/// Lags summed directly before switching to the asymptotic tail.
const DIRECT_LAGS: usize = 64;
const TAIL_ORDER: usize = 8;

/// Generalized binomial coefficient `C(a, m)`.
fn binomial(a: f64, m: usize) -> f64 {
    (0..m).fold(1.0, |c, i| c * (a - i as f64) / (i + 1) as f64)
}

/// `2 Σ_{r∈ℤ} ρ_H(r)²`, the limiting variance of normalized fBm quadratic
/// variation. Finite only for `H < ¾`.
///
/// Lags below 64 are summed directly; beyond that `ρ_H(r)` is expanded as
/// `Σ_k C(2H, 2k) r^{2H−2k}` and the squared series summed with Hurwitz zeta.
pub fn fbm_variance_benchmark(h: HurstParam) -> Result<f64> {
    let hv = h.value();
    if hv >= 0.75 {
        return Err(Error::Regime(format!(
            "Σρ_H(r)² diverges for H >= 3/4 (got H = {hv})"
        )));
    }
    let mut sum = 0.0;
    for r in 1..DIRECT_LAGS {
        sum += fgn_autocorrelation(h, r as f64).powi(2);
    }
    let coef: Vec<f64> = (1..=TAIL_ORDER).map(|k| binomial(2.0 * hv, 2 * k)).collect();
    let mut tail = 0.0;
    for (j, cj) in coef.iter().enumerate() {
        for (k, ck) in coef.iter().enumerate() {
            let s = 2.0 * (j + k + 2) as f64 - 4.0 * hv;
            tail += cj * ck * hurwitz_zeta(s, DIRECT_LAGS as f64)?;
        }
    }
    Ok(2.0 * (1.0 + 2.0 * (sum + tail)))
}

/// Empirical variance of `√n(QV_n(Y⁽¹⁾)_1 − 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceConstantEstimate {
    #[serde(rename = "H")]
    pub h: f64,
    pub n: usize,
    pub replications: usize,
    pub c_hat: f64,
    pub std_error: f64,
    /// The same estimate on two disjoint halves of the replications.
    pub batches: [f64; 2],
    pub batch_std_errors: [f64; 2],
    /// `|batch₀ − batch₁|` in units of its standard error.
    pub batch_z: f64,
    pub benchmark: Option<f64>,
}

impl VarianceConstantEstimate {
    pub fn batches_agree(&self) -> bool {
        self.batch_z <= 2.0
    }

    pub fn relative_deviation(&self) -> Option<f64> {
        self.benchmark.map(|b| (self.c_hat / b - 1.0).abs())
    }
}

/// Normalized QV statistics of the driver with σ ≡ 1 on `[0, 1]`.
pub(crate) fn driver_statistics(
    h: HurstParam,
    n: usize,
    replications: usize,
    seed: SeedSpec,
    route: Y1Route,
) -> Result<Vec<f64>> {
    let grid = TimeGrid::uniform(1.0, n)?;
    let sampler = PathSampler::y1(h, &grid, route)?;
    let root = (n as f64).sqrt();
    (0..replications)
        .into_par_iter()
        .map(|r| {
            let y = sampler.sample(seed.with_replication(r as u64));
            Ok(root * (scaled_qv(&y, h, 1.0)? - 1.0))
        })
        .collect()
}

/// `ĉ_H` from `replications` independent driver paths at frequency `n`.
pub fn estimate_variance_constant(
    h: HurstParam,
    n: usize,
    replications: usize,
    seed: SeedSpec,
    route: Y1Route,
) -> Result<VarianceConstantEstimate> {
    if replications < 4 {
        return Err(Error::invalid("replications", format!("need at least 4, got {replications}")));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let half = replications / 2;
    let a = driver_statistics(h, n, half, seed.child(1), route)?;
    let b = driver_statistics(h, n, replications - half, seed.child(2), route)?;
    let all: Vec<f64> = a.iter().chain(&b).copied().collect();
    let (va, vb) = (stats::variance(&a), stats::variance(&b));
    let (sa, sb) = (stats::variance_std_error(&a), stats::variance_std_error(&b));
    Ok(VarianceConstantEstimate {
        h: h.value(),
        n,
        replications,
        c_hat: stats::variance(&all),
        std_error: stats::variance_std_error(&all),
        batches: [va, vb],
        batch_std_errors: [sa, sb],
        batch_z: (va - vb).abs() / (sa * sa + sb * sb).sqrt(),
        benchmark: fbm_variance_benchmark(h).ok(),
    })
}
