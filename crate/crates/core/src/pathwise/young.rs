use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianPath;
use crate::model::{TimeGrid, VolatilityFn};
use crate::path::SampledPath;
use crate::special::zeta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PathTag {
    ZIntegral,
    XSde,
    Drift,
}

/// Where a derived path came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub driver: String,
    pub volatility: String,
    pub theta: Option<f64>,
}

/// A path built from a driver: an integral, an SDE solution or its drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub tag: PathTag,
    pub provenance: Provenance,
}

impl SampledPath for ProcessPath {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

pub(crate) fn driver_id(y: &GaussianPath) -> String {
    format!(
        "{:?}(H={}) {:?} seed={}/{}",
        y.process,
        y.h.value(),
        y.method,
        y.seed.base_seed,
        y.seed.replication_index
    )
}

/// Integrand of a Young integral.
#[derive(Debug, Clone, PartialEq)]
pub enum Integrand {
    Function(VolatilityFn),
    /// Values on the driver's grid with a declared Hölder order.
    Sampled { values: Vec<f64>, beta: f64 },
}

impl Integrand {
    pub fn beta(&self) -> f64 {
        match self {
            Integrand::Function(f) => f.beta(),
            Integrand::Sampled { beta, .. } => *beta,
        }
    }

    fn describe(&self) -> String {
        match self {
            Integrand::Function(f) => f.describe(),
            Integrand::Sampled { beta, .. } => format!("sampled(beta={beta})"),
        }
    }
}

impl From<VolatilityFn> for Integrand {
    fn from(f: VolatilityFn) -> Self {
        Integrand::Function(f)
    }
}

/// Slack used when a regularity exponent must sit strictly inside its window.
pub fn regularity_margin(beta: f64, h: f64) -> f64 {
    (beta / 4.0).min(h / 4.0)
}

/// Positions of `grid`'s points inside `outer`.
pub(crate) fn embed(grid: &TimeGrid, outer: &TimeGrid) -> Result<Vec<usize>> {
    let tol = 1e-12 * outer.horizon().max(1.0);
    let pts = outer.points();
    let mut idx = Vec::with_capacity(grid.len());
    let mut k = 0;
    for &t in grid.points() {
        while k < pts.len() && pts[k] < t - tol {
            k += 1;
        }
        if k == pts.len() || (pts[k] - t).abs() > tol {
            return Err(Error::GridMismatch(format!("time {t} is not a point of the driver grid")));
        }
        idx.push(k);
    }
    Ok(idx)
}

/// Left-point Riemann–Stieltjes sums `Σ u_{t_{i−1}} (y_{t_i} − y_{t_{i−1}})`
/// along `grid`, which must be a subset of the driver's grid.
pub fn young_integral(u: &Integrand, y: &GaussianPath, grid: &TimeGrid) -> Result<ProcessPath> {
    let beta = u.beta();
    let h = y.h.value();
    if beta + h <= 1.0 {
        return Err(Error::Regularity { beta, hurst: h });
    }
    if let Integrand::Sampled { values, .. } = u {
        if values.len() != y.grid.len() {
            return Err(Error::GridMismatch(format!(
                "integrand has {} values, driver has {} points",
                values.len(),
                y.grid.len()
            )));
        }
    }
    let idx = embed(grid, &y.grid)?;
    let pts = y.grid.points();
    let at = |k: usize| match u {
        Integrand::Function(f) => f.eval(pts[k]),
        Integrand::Sampled { values, .. } => values[k],
    };
    let mut values = Vec::with_capacity(idx.len());
    values.push(0.0);
    let mut acc = 0.0;
    for w in idx.windows(2) {
        acc += at(w[0]) * (y.values[w[1]] - y.values[w[0]]);
        values.push(acc);
    }
    Ok(ProcessPath {
        grid: grid.clone(),
        values,
        tag: PathTag::ZIntegral,
        provenance: Provenance {
            driver: driver_id(y),
            volatility: u.describe(),
            theta: None,
        },
    })
}

/// `ζ(1/p + 1/q) · varp · varq`, the constant in the Young–Loève estimate.
pub fn young_error_bound(p: f64, q: f64, varp: f64, varq: f64) -> Result<f64> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::Domain(format!("variation indices must be at least 1 (p = {p}, q = {q})")));
    }
    let s = 1.0 / p + 1.0 / q;
    if s <= 1.0 {
        return Err(Error::Domain(format!("need 1/p + 1/q > 1, got {s}")));
    }
    if varp == 0.0 || varq == 0.0 {
        return Ok(0.0);
    }
    Ok(zeta(s)? * varp * varq)
}
