use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ks::{ks_normal, KsResult};
use super::variance::{estimate_variance_constant, VarianceConstantEstimate};
use super::{stats, steps_for, Verdict};
use crate::error::{Error, Result};
use crate::gaussian::{PathSampler, Y1Route};
use crate::io::fmt_f64;
use crate::model::{HurstParam, SeedSpec, TimeGrid, VolatilityFn};
use crate::pathwise::solve_fou2;
use crate::qv::qv_estimator;

/// Seed tag of the calibration run for `ĉ_H`.
const CALIBRATION_TAG: u64 = 0xCA11;
/// Seed tags of the extra volatility configurations, offset by their index.
const MIXED_TAG: u64 = 0x313D;

fn unit() -> VolatilityFn {
    VolatilityFn::constant(1.0)
}

fn one() -> f64 {
    1.0
}

fn level() -> f64 {
    0.01
}

fn calibration_reps() -> usize {
    2000
}

fn relative_tol() -> f64 {
    0.15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltConfig {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(default = "unit")]
    pub sigma: VolatilityFn,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    pub n: usize,
    pub replications: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub route: Y1Route,
    /// Fixed standardization constant; estimated from a separate run when
    /// absent.
    #[serde(default)]
    pub c_hat: Option<f64>,
    #[serde(default = "calibration_reps")]
    pub calibration_replications: usize,
    #[serde(default = "level")]
    pub ks_level: f64,
    /// Raw variance must be within `relative_tolerance` of
    /// `reference_constant · ∫σ⁴`.
    #[serde(default)]
    pub reference_constant: Option<f64>,
    #[serde(default = "relative_tol")]
    pub relative_tolerance: f64,
    /// Further volatilities for the mixed-normal regression.
    #[serde(default)]
    pub mixed_normal: Vec<VolatilityFn>,
}

pub const MIN_CLT_REPLICATIONS: usize = 300;

impl CltConfig {
    pub fn validate(&self) -> Result<HurstParam> {
        let h = HurstParam::from_config(self.h)?;
        if h.value() >= 0.75 {
            return Err(Error::Regime(format!(
                "the stable CLT holds only for 0 < H < 3/4; refusing H = {}",
                h.value()
            )));
        }
        for s in std::iter::once(&self.sigma).chain(&self.mixed_normal) {
            s.validate()?;
            let need = (1.0 - h.value()).max(0.5);
            if s.beta() <= need {
                return Err(Error::Regime(format!(
                    "the stable CLT needs a volatility of Hölder order above max(1 - H, 1/2) = {need}; {} has order {}",
                    s.describe(),
                    s.beta()
                )));
            }
        }
        if self.replications < MIN_CLT_REPLICATIONS {
            return Err(Error::invalid(
                "replications",
                format!("the CLT check needs at least {MIN_CLT_REPLICATIONS}, got {}", self.replications),
            ));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::invalid("theta", "must be finite and >= 0"));
        }
        if !self.x0.is_finite() {
            return Err(Error::invalid("x0", "must be finite"));
        }
        if !(self.ks_level > 0.0 && self.ks_level < 1.0) {
            return Err(Error::invalid("ks_level", "must lie in (0, 1)"));
        }
        if let Some(c) = self.c_hat {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid("c_hat", "must be positive"));
            }
        } else if self.calibration_replications < 4 {
            return Err(Error::invalid("calibration_replications", "need at least 4"));
        }
        if self.sigma.integrated_quartic(self.horizon) <= 0.0 {
            return Err(Error::invalid("sigma", "∫σ⁴ must be positive to standardize"));
        }
        steps_for(self.n, self.horizon)?;
        crate::model::time_change(h, self.horizon)?;
        Ok(h)
    }
}

/// `√n (QV_n(X)_T − ∫_0^T σ²)` and its standardized version.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltSample {
    pub replication: usize,
    pub raw: f64,
    pub standardized: f64,
}

/// `Cov(S_T, S_{T/2}) / Var(S_{T/2})`, which is 1 for a limit with
/// independent increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoTimeCheck {
    pub ratio: f64,
    pub std_error: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedNormalPoint {
    pub sigma: String,
    pub integrated_quartic: f64,
    pub mean_square: f64,
}

/// Least squares through the origin of `E[S²]` on `∫σ⁴`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedNormalCheck {
    pub points: Vec<MixedNormalPoint>,
    pub slope: f64,
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub config: CltConfig,
    pub calibration: Option<VarianceConstantEstimate>,
    pub c_hat: f64,
    pub integrated_quartic: f64,
    pub raw_mean: f64,
    pub raw_variance: f64,
    pub expected_raw_variance: f64,
    pub ks: KsResult,
    pub two_time: TwoTimeCheck,
    pub mixed_normal: Option<MixedNormalCheck>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    #[serde(skip)]
    pub samples: Vec<CltSample>,
}

impl CltReport {
    /// `replication,raw,standardized` rows.
    pub fn write_samples_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "replication,raw,standardized")?;
        for s in &self.samples {
            writeln!(w, "{},{},{}", s.replication, fmt_f64(s.raw), fmt_f64(s.standardized))?;
        }
        Ok(())
    }
}

/// `(S_{T/2}, S_T)` for each replication.
fn statistics(
    cfg: &CltConfig,
    h: HurstParam,
    sigma: &VolatilityFn,
    seed: SeedSpec,
) -> Result<Vec<(f64, f64)>> {
    let grid = TimeGrid::uniform(cfg.horizon, steps_for(cfg.n, cfg.horizon)?)?;
    let sampler = PathSampler::y1(h, &grid, cfg.route)?;
    let t = cfg.horizon;
    let eval = TimeGrid::from_points(vec![0.0, 0.5 * t, t])?;
    let (iv_half, iv_full) = (sigma.integrated_variance(0.5 * t), sigma.integrated_variance(t));
    let root = (cfg.n as f64).sqrt();
    (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let y = sampler.sample(seed.with_replication(r as u64));
            let x = solve_fou2(cfg.theta, sigma, cfg.x0, &y)?.x;
            let q = qv_estimator(&x, h, &eval)?;
            Ok((root * (q.values[1] - iv_half), root * (q.values[2] - iv_full)))
        })
        .collect()
}

fn two_time(pairs: &[(f64, f64)]) -> TwoTimeCheck {
    let half: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let full: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let vh = stats::variance(&half);
    let slope = stats::covariance(&full, &half) / vh;
    let (mh, mf) = (stats::mean(&half), stats::mean(&full));
    let resid: f64 = pairs
        .iter()
        .map(|&(a, b)| (b - mf - slope * (a - mh)).powi(2))
        .sum::<f64>()
        / (pairs.len() as f64 - 2.0);
    TwoTimeCheck {
        ratio: slope,
        std_error: (resid / (vh * (pairs.len() as f64 - 1.0))).sqrt(),
        expected: 1.0,
    }
}

/// Stable-CLT check at `t = T`: KS of the standardized statistic, raw
/// variance, the two-time covariance ratio and, optionally, the
/// mixed-normal regression across volatilities.
pub fn run_clt(cfg: &CltConfig) -> Result<CltReport> {
    let h = cfg.validate()?;
    let base = SeedSpec::new(cfg.base_seed, 0);
    let calibration = match cfg.c_hat {
        Some(_) => None,
        None => Some(estimate_variance_constant(
            h,
            cfg.n,
            cfg.calibration_replications,
            base.child(CALIBRATION_TAG),
            cfg.route,
        )?),
    };
    let c_hat = cfg.c_hat.unwrap_or_else(|| calibration.as_ref().map_or(f64::NAN, |c| c.c_hat));
    let iq = cfg.sigma.integrated_quartic(cfg.horizon);
    let pairs = statistics(cfg, h, &cfg.sigma, base)?;
    let scale = (c_hat * iq).sqrt();
    let samples: Vec<CltSample> = pairs
        .iter()
        .enumerate()
        .map(|(replication, &(_, raw))| CltSample {
            replication,
            raw,
            standardized: raw / scale,
        })
        .collect();
    let raw: Vec<f64> = samples.iter().map(|s| s.raw).collect();
    let standardized: Vec<f64> = samples.iter().map(|s| s.standardized).collect();
    let ks = ks_normal(&standardized)?;
    let raw_variance = stats::variance(&raw);
    let tt = two_time(&pairs);

    let mixed_normal = if cfg.mixed_normal.is_empty() {
        None
    } else {
        let mut points = vec![MixedNormalPoint {
            sigma: cfg.sigma.describe(),
            integrated_quartic: iq,
            mean_square: raw.iter().map(|s| s * s).sum::<f64>() / raw.len() as f64,
        }];
        for (k, s) in cfg.mixed_normal.iter().enumerate() {
            let p = statistics(cfg, h, s, base.child(MIXED_TAG + k as u64))?;
            points.push(MixedNormalPoint {
                sigma: s.describe(),
                integrated_quartic: s.integrated_quartic(cfg.horizon),
                mean_square: p.iter().map(|q| q.1 * q.1).sum::<f64>() / p.len() as f64,
            });
        }
        let sxy: f64 = points.iter().map(|p| p.integrated_quartic * p.mean_square).sum();
        let sxx: f64 = points.iter().map(|p| p.integrated_quartic.powi(2)).sum();
        let slope = sxy / sxx;
        Some(MixedNormalCheck {
            points,
            slope,
            relative_deviation: (slope / c_hat - 1.0).abs(),
        })
    };

    let mut verdicts = vec![
        Verdict::new(
            "ks_normal",
            ks.p_value > cfg.ks_level,
            format!("D = {:.4}, p = {:.4} (level {})", ks.distance, ks.p_value, cfg.ks_level),
        ),
        Verdict::new(
            "two_time_ratio",
            (tt.ratio - tt.expected).abs() <= 4.0 * tt.std_error,
            format!("Cov(S_T, S_T/2)/Var(S_T/2) = {:.4} ± {:.4}", tt.ratio, tt.std_error),
        ),
    ];
    if let Some(r) = cfg.reference_constant {
        let expected = r * iq;
        let dev = (raw_variance / expected - 1.0).abs();
        verdicts.push(Verdict::new(
            "reference_variance",
            dev < cfg.relative_tolerance,
            format!("raw variance {raw_variance:.4} vs {expected:.4} (relative deviation {dev:.4})"),
        ));
    }
    if let Some(m) = &mixed_normal {
        verdicts.push(Verdict::new(
            "mixed_normal",
            m.relative_deviation < cfg.relative_tolerance,
            format!("slope {:.4} vs c_hat {c_hat:.4}", m.slope),
        ));
    }
    Ok(CltReport {
        config: cfg.clone(),
        calibration,
        c_hat,
        integrated_quartic: iq,
        raw_mean: stats::mean(&raw),
        raw_variance,
        expected_raw_variance: c_hat * iq,
        ks,
        two_time: tt,
        mixed_normal,
        passed: verdicts.iter().all(|v| v.passed),
        verdicts,
        samples,
    })
}
