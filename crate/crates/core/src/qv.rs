//! Realized quadratic variation and the integrated-volatility estimator.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_table;
use crate::model::{HurstParam, TimeGrid, VolatilityFn};
use crate::path::SampledPath;

/// Integer-crossing slack for `⌊nt⌋`: `t = i/n` must count the i-th
/// increment even when `t·n` rounds to just below `i`.
const FLOOR_SLACK: f64 = 1e-9;

/// `⌊nt⌋` and the number of jumps strictly before `t`.
fn counts(freq: f64, n: usize, horizon: f64, t: f64) -> Result<(usize, usize)> {
    if !(t >= 0.0 && t <= horizon * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("evaluation time {t} outside [0, {horizon}]")));
    }
    let x = t * freq;
    let floor = (x + FLOOR_SLACK).floor();
    let at = (floor as usize).min(n);
    let before = if (x - floor).abs() <= FLOOR_SLACK && at > 0 {
        at - 1
    } else {
        at
    };
    Ok((at, before))
}

/// Running sums `Σ_{i≤k} |Δ_i|²`, `k = 0..=n`, accumulated left to right.
fn prefix_squares(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    let mut acc = 0.0;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        acc += d * d;
        out.push(acc);
    }
    out
}

fn check_path<P: SampledPath + ?Sized>(path: &P) -> Result<()> {
    path.grid().require_uniform()?;
    if path.values().len() != path.grid().len() {
        return Err(Error::GridMismatch(format!(
            "{} values on a grid of {} points",
            path.values().len(),
            path.grid().len()
        )));
    }
    Ok(())
}

/// `V_n(Z)_t = Σ_{i=1}^{⌊nt⌋} |Z_{i/n} − Z_{(i−1)/n}|²` on the path's own
/// uniform grid.
pub fn v_n<P: SampledPath + ?Sized>(path: &P, t: f64) -> Result<f64> {
    check_path(path)?;
    let g = path.grid();
    let (k, _) = counts(g.frequency()?, g.n(), g.horizon(), t)?;
    let v = path.values();
    let mut acc = 0.0;
    for i in 1..=k {
        let d = v[i] - v[i - 1];
        acc += d * d;
    }
    Ok(acc)
}

/// `n^{2H−1} V_n(Z)_t` where `n` is the sampling frequency.
pub fn scaled_qv<P: SampledPath + ?Sized>(path: &P, h: HurstParam, t: f64) -> Result<f64> {
    let freq = path.grid().frequency()?;
    Ok(freq.powf(2.0 * h.value() - 1.0) * v_n(path, t)?)
}

/// Scaled realized QV evaluated at a set of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QVSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Value just before each time (the step function is right-continuous).
    pub left_limits: Vec<f64>,
    pub frequency: f64,
    pub scale_exponent: f64,
}

/// `QV_n(X)_t = n^{2H−1} V_n(X)_t` at each of `eval_times`.
pub fn qv_estimator<P: SampledPath + ?Sized>(x: &P, h: HurstParam, eval_times: &TimeGrid) -> Result<QVSeries> {
    check_path(x)?;
    let g = x.grid();
    let freq = g.frequency()?;
    let exponent = 2.0 * h.value() - 1.0;
    let scale = freq.powf(exponent);
    let prefix = prefix_squares(x.values());
    let mut values = Vec::with_capacity(eval_times.len());
    let mut left_limits = Vec::with_capacity(eval_times.len());
    for &t in eval_times.points() {
        let (at, before) = counts(freq, g.n(), g.horizon(), t)?;
        values.push(scale * prefix[at]);
        left_limits.push(scale * prefix[before]);
    }
    Ok(QVSeries {
        times: eval_times.points().to_vec(),
        values,
        left_limits,
        frequency: freq,
        scale_exponent: exponent,
    })
}

/// The estimator at every jump time `i/n`, which is where its sup-norm
/// distance to a continuous target is attained.
pub fn qv_on_jumps<P: SampledPath + ?Sized>(x: &P, h: HurstParam) -> Result<QVSeries> {
    qv_estimator(x, h, x.grid())
}

/// `∫_0^t |σ_s|² ds` at each evaluation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IVTarget {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl IVTarget {
    pub fn new(sigma: &VolatilityFn, times: &TimeGrid) -> Self {
        Self {
            times: times.points().to_vec(),
            values: times.points().iter().map(|&t| sigma.integrated_variance(t)).collect(),
        }
    }
}

/// `max_t |QV_n(t) − target(t)|`, checking both one-sided limits at each
/// evaluation time.
pub fn sup_error(est: &QVSeries, target: &IVTarget) -> Result<f64> {
    if est.times.len() != target.times.len() {
        return Err(Error::GridMismatch(format!(
            "{} estimator times vs {} target times",
            est.times.len(),
            target.times.len()
        )));
    }
    let mut worst: f64 = 0.0;
    for i in 0..est.times.len() {
        let (t, s) = (est.times[i], target.times[i]);
        if (t - s).abs() > 1e-12 * t.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("time {t} vs target time {s}")));
        }
        let c = target.values[i];
        worst = worst.max((est.values[i] - c).abs()).max((est.left_limits[i] - c).abs());
    }
    Ok(worst)
}

/// `t,qv,target,abs_error` rows.
pub fn write_qv_csv<W: Write>(w: W, est: &QVSeries, target: Option<&IVTarget>) -> Result<()> {
    if let Some(tg) = target {
        if tg.values.len() != est.values.len() {
            return Err(Error::GridMismatch("target and estimator lengths differ".into()));
        }
    }
    let rows = (0..est.times.len()).map(|i| {
        let tgt = target.map_or(f64::NAN, |tg| tg.values[i]);
        vec![est.times[i], est.values[i], tgt, (est.values[i] - tgt).abs()]
    });
    write_table(w, &["t", "qv", "target", "abs_error"], rows)
}

/// JSON summary of one estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvSummary {
    pub n: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub theta: Option<f64>,
    pub sup_error: Option<f64>,
    pub runtime_ms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::RawPath;
    use proptest::prelude::*;

    fn h(x: f64) -> HurstParam {
        HurstParam::new(x).unwrap()
    }

    fn path(values: Vec<f64>, horizon: f64) -> RawPath {
        RawPath {
            grid: TimeGrid::uniform(horizon, values.len() - 1).unwrap(),
            values,
        }
    }

    #[test]
    fn examples() {
        let flat = path(vec![1.0; 5], 1.0);
        assert_eq!(v_n(&flat, 1.0).unwrap(), 0.0);
        let lin = path((0..=4).map(|i| i as f64 / 4.0).collect(), 1.0);
        assert_eq!(v_n(&lin, 1.0).unwrap(), 0.25);
        assert_eq!(v_n(&lin, 0.99).unwrap(), 3.0 / 16.0);
        assert_eq!(v_n(&lin, 0.75).unwrap(), 3.0 / 16.0);
        assert_eq!(v_n(&lin, 0.0).unwrap(), 0.0);
        assert!(v_n(&lin, 1.5).is_err());
        assert!(v_n(&lin, -0.1).is_err());
        assert_eq!(scaled_qv(&lin, h(0.5), 1.0).unwrap(), 0.25);
        // frequency is n/T, not the number of steps
        let wide = path((0..=4).map(|i| i as f64).collect(), 2.0);
        assert!((scaled_qv(&wide, h(0.75), 2.0).unwrap() - 2f64.sqrt() * 4.0).abs() < 1e-12);
    }

    #[test]
    fn floor_is_inclusive_at_grid_times() {
        let n = 10;
        let p = path((0..=n).map(|i| (i * i) as f64).collect(), 1.0);
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let expected: f64 = (1..=i).map(|k| ((2 * k - 1) as f64).powi(2)).sum();
            assert_eq!(v_n(&p, t).unwrap(), expected, "t={t}");
        }
    }

    #[test]
    fn rejects_irregular_grids() {
        let p = RawPath {
            grid: TimeGrid::from_points(vec![0.0, 0.2, 1.0]).unwrap(),
            values: vec![0.0, 1.0, 2.0],
        };
        assert!(matches!(v_n(&p, 1.0), Err(Error::NonUniformGrid(_))));
        assert!(matches!(
            qv_estimator(&p, h(0.6), &TimeGrid::uniform(1.0, 2).unwrap()),
            Err(Error::NonUniformGrid(_))
        ));
    }

    #[test]
    fn series_has_left_limits_and_sup_error_sees_them() {
        let p = path(vec![0.0, 1.0, 1.0, 3.0], 3.0);
        let est = qv_estimator(&p, h(0.5), &TimeGrid::from_points(vec![0.0, 1.0, 1.5, 3.0]).unwrap()).unwrap();
        assert_eq!(est.values, vec![0.0, 1.0, 1.0, 5.0]);
        assert_eq!(est.left_limits, vec![0.0, 0.0, 1.0, 1.0]);
        let target = IVTarget {
            times: est.times.clone(),
            values: vec![0.0, 0.5, 1.0, 5.0],
        };
        assert_eq!(sup_error(&est, &target).unwrap(), 4.0);

        let shifted = IVTarget {
            times: est.times.clone(),
            values: est.values.iter().map(|v| v - 0.25).collect(),
        };
        let exact = QVSeries {
            left_limits: est.values.clone(),
            ..est.clone()
        };
        assert_eq!(sup_error(&exact, &shifted).unwrap(), 0.25);
        let same = IVTarget {
            times: est.times.clone(),
            values: est.values.clone(),
        };
        assert_eq!(sup_error(&exact, &same).unwrap(), 0.0);
        let other = IVTarget {
            times: vec![0.0, 1.0],
            values: vec![0.0, 1.0],
        };
        assert!(matches!(sup_error(&est, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn csv_schema() {
        let p = path(vec![0.0, 1.0, 1.0], 1.0);
        let est = qv_on_jumps(&p, h(0.5)).unwrap();
        let tgt = IVTarget::new(&VolatilityFn::constant(1.0), p.grid());
        let mut buf = Vec::new();
        write_qv_csv(&mut buf, &est, Some(&tgt)).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "t,qv,target,abs_error");
        assert_eq!(lines.len(), 4);
    }

    proptest! {
        #[test]
        fn additivity(vals in prop::collection::vec(-5.0f64..5.0, 3..60), cut in 0usize..60) {
            let n = vals.len() - 1;
            let k = cut % (n + 1);
            let p = path(vals.clone(), 1.0);
            let mut acc = v_n(&p, k as f64 / n as f64).unwrap();
            for i in k + 1..=n {
                let d = vals[i] - vals[i - 1];
                acc += d * d;
            }
            prop_assert_eq!(acc, v_n(&p, 1.0).unwrap());
        }

        #[test]
        fn scaling_is_quadratic(vals in prop::collection::vec(-5.0f64..5.0, 2..60), e in -3i32..4, hv in 0.05f64..0.95) {
            let c = 2f64.powi(e);
            let p = path(vals.clone(), 1.0);
            let q = path(vals.iter().map(|v| c * v).collect(), 1.0);
            prop_assert_eq!(v_n(&q, 1.0).unwrap(), c * c * v_n(&p, 1.0).unwrap());
            let (a, b) = (scaled_qv(&q, h(hv), 1.0).unwrap(), scaled_qv(&p, h(hv), 1.0).unwrap());
            prop_assert_eq!(a, c * c * b);
        }

        #[test]
        fn monotone_in_t(vals in prop::collection::vec(-5.0f64..5.0, 2..60), hv in 0.05f64..0.95) {
            let p = path(vals, 1.0);
            let s = qv_on_jumps(&p, h(hv)).unwrap();
            prop_assert_eq!(s.values[0], 0.0);
            for w in s.values.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
        }

        #[test]
        fn drift_perturbation_is_cauchy_schwarz_bounded(
            z in prop::collection::vec(-5.0f64..5.0, 2..60),
            y in prop::collection::vec(-0.1f64..0.1, 60),
            hv in 0.05f64..0.95,
        ) {
            let pz = path(z.clone(), 1.0);
            let py = path(y[..z.len()].to_vec(), 1.0);
            let psum = path(z.iter().zip(&y).map(|(a, b)| a + b).collect(), 1.0);
            let (qz, qy, qs) = (
                scaled_qv(&pz, h(hv), 1.0).unwrap(),
                scaled_qv(&py, h(hv), 1.0).unwrap(),
                scaled_qv(&psum, h(hv), 1.0).unwrap(),
            );
            let bound = qy + 2.0 * qz.sqrt() * qy.sqrt();
            prop_assert!((qs - qz).abs() <= bound * (1.0 + 1e-12) + 1e-12 * qz);
        }
    }
}
