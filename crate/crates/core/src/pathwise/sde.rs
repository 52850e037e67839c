use serde::{Deserialize, Serialize};

use super::young::{driver_id, PathTag, ProcessPath, Provenance};
use crate::error::{Error, Result};
use crate::gaussian::GaussianPath;
use crate::model::VolatilityFn;

/// `X` together with its decomposition `X = x0 + D + Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fou2Solution {
    pub x: ProcessPath,
    /// `D_t = X_t − x0 − Σ σ ΔY`, the accumulated mean-reversion term.
    pub drift: ProcessPath,
    /// `Z_t = Σ σ_{t_{i−1}} ΔY_i`.
    pub z: ProcessPath,
}

/// Solves `dX = −θ X dt + σ_t dY` on the driver's grid with the
/// exponential Euler step `X_i = e^{−θΔ} X_{i−1} + σ_{t_{i−1}} ΔY_i`.
pub fn solve_fou2(theta: f64, sigma: &VolatilityFn, x0: f64, y: &GaussianPath) -> Result<Fou2Solution> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", format!("must be finite and >= 0, got {theta}")));
    }
    if !x0.is_finite() {
        return Err(Error::invalid("x0", "must be finite"));
    }
    sigma.validate()?;
    let pts = y.grid.points();
    let len = pts.len();
    let (mut x, mut z, mut d) = (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
    x.push(x0);
    z.push(0.0);
    d.push(0.0);
    let (mut xi, mut zi) = (x0, 0.0);
    for i in 1..len {
        let step = sigma.eval(pts[i - 1]) * (y.values[i] - y.values[i - 1]);
        xi = (-theta * (pts[i] - pts[i - 1])).exp() * xi + step;
        zi += step;
        x.push(xi);
        z.push(zi);
        d.push(xi - x0 - zi);
    }
    let provenance = Provenance {
        driver: driver_id(y),
        volatility: sigma.describe(),
        theta: Some(theta),
    };
    let wrap = |values, tag| ProcessPath {
        grid: y.grid.clone(),
        values,
        tag,
        provenance: provenance.clone(),
    };
    Ok(Fou2Solution {
        x: wrap(x, PathTag::XSde),
        drift: wrap(d, PathTag::Drift),
        z: wrap(z, PathTag::ZIntegral),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{sample_y1, Y1Route};
    use crate::model::{HurstParam, SeedSpec, TimeGrid};
    use crate::pathwise::young_integral;

    fn driver(h: f64, n: usize) -> GaussianPath {
        let g = TimeGrid::uniform(1.0, n).unwrap();
        sample_y1(HurstParam::new(h).unwrap(), &g, SeedSpec::new(21, 0), Y1Route::Circulant).unwrap()
    }

    #[test]
    fn no_reversion_reproduces_driver() {
        let y = driver(0.7, 512);
        let s = solve_fou2(0.0, &VolatilityFn::constant(1.0), 0.0, &y).unwrap();
        assert_eq!(s.x.values, y.values);
        assert!(s.drift.values.iter().all(|&d| d == 0.0));

        let sigma = VolatilityFn::affine(1.0, 0.5);
        let s = solve_fou2(0.0, &sigma, 2.0, &y).unwrap();
        let z = young_integral(&sigma.clone().into(), &y, &y.grid).unwrap();
        for (x, zz) in s.x.values.iter().zip(&z.values) {
            assert!((x - 2.0 - zz).abs() < 1e-12);
        }
        assert_eq!(s.z.values, z.values);
    }

    #[test]
    fn zero_volatility_is_exponential_decay() {
        let y = driver(0.6, 256);
        let s = solve_fou2(1.5, &VolatilityFn::constant(0.0), 3.0, &y).unwrap();
        for (t, x) in y.grid.points().iter().zip(&s.x.values) {
            assert!((x - 3.0 * (-1.5 * t).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn drift_increments_are_lipschitz() {
        let y = driver(0.7, 1024);
        let s = solve_fou2(1.0, &VolatilityFn::constant(1.0), 0.0, &y).unwrap();
        let xmax = s.x.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let delta = 1.0 / 1024.0;
        for w in s.drift.values.windows(2) {
            assert!((w[1] - w[0]).abs() <= xmax * delta * (1.0 + 1e-9));
        }
        assert_eq!(s.x.tag, PathTag::XSde);
        assert_eq!(s.drift.tag, PathTag::Drift);
        assert_eq!(s.x.provenance.theta, Some(1.0));
    }

    #[test]
    fn rejects_negative_theta() {
        let y = driver(0.7, 8);
        assert!(solve_fou2(-1.0, &VolatilityFn::constant(1.0), 0.0, &y).is_err());
    }
}
