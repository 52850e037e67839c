use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::cov::{build_cov_matrix, CovKind, CovMatrix, ProcessKind};
use super::kernel::{fbm_increment_cov, fgn_autocorrelation, y1_increment_autocov, BILINEAR_SUBDIV};
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::model::{time_change, HurstParam, SeedSpec, TimeGrid};

/// Largest covariance dimension factored densely.
pub const CHOLESKY_BUDGET: usize = 4096;

/// Default number of fine sub-steps per grid step on the time-change route.
pub const DEFAULT_REFINE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SampleMethod {
    Cholesky,
    Circulant,
    Timechange,
}

/// How `Y⁽¹⁾` is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Y1Route {
    /// Cholesky factor of the exact increment covariance (`H > ½`).
    ExactCov,
    /// fBm sampled exactly at the time-changed fine points `a_{s_j}`,
    /// then the midpoint Riemann–Stieltjes sum of `e^{−s} dB_{a_s}`.
    Timechange { refine: usize },
    /// Circulant embedding of the stationary increment autocovariance
    /// (uniform grids only).
    Circulant,
}

impl Default for Y1Route {
    fn default() -> Self {
        Y1Route::Circulant
    }
}

/// One realization of fBm or `Y⁽¹⁾`; `values[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub process: ProcessKind,
    pub h: HurstParam,
    pub method: SampleMethod,
    pub seed: SeedSpec,
}

fn standard_normals<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for &d in increments {
        acc += d;
        out.push(acc);
    }
    out
}

/// Exact Gaussian sampling from a factored covariance; factor once, draw
/// many paths.
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    factor: Cholesky,
    kind: CovKind,
    process: ProcessKind,
    h: HurstParam,
    grid: TimeGrid,
}

impl CholeskySampler {
    pub fn new(cov: &CovMatrix) -> Result<Self> {
        if cov.dim() > CHOLESKY_BUDGET {
            return Err(Error::Budget {
                what: "Cholesky factorization",
                size: cov.dim(),
                limit: CHOLESKY_BUDGET,
            });
        }
        Ok(Self {
            factor: Cholesky::factor(cov.data(), cov.dim())?,
            kind: cov.kind(),
            process: cov.process(),
            h: cov.hurst(),
            grid: cov.grid().clone(),
        })
    }

    pub fn sample(&self, seed: SeedSpec) -> GaussianPath {
        let mut rng = seed.rng();
        let z = standard_normals(&mut rng, self.factor.dim());
        let x = self.factor.mul_lower(&z);
        let values = match self.kind {
            CovKind::Increments => cumulative(&x),
            CovKind::Levels => x,
        };
        GaussianPath {
            grid: self.grid.clone(),
            values,
            process: self.process,
            h: self.h,
            method: SampleMethod::Cholesky,
            seed,
        }
    }
}

/// Draws one zero-mean Gaussian path with covariance `cov`. Level
/// covariances anchored at `t = 0` have a zero first row, so the first value
/// is exactly 0; increment covariances are cumulated from 0.
pub fn sample_cholesky(cov: &CovMatrix, seed: SeedSpec) -> Result<GaussianPath> {
    Ok(CholeskySampler::new(cov)?.sample(seed))
}

/// Davies–Harte circulant embedding of a stationary sequence.
#[derive(Clone)]
pub struct CirculantSampler {
    len: usize,
    /// `sqrt(λ_k / m)`
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("len", &self.len)
            .field("embedding", &self.scale.len())
            .finish()
    }
}

/// Negative eigenvalues down to this fraction of the largest are treated
/// as round-off and clipped to zero.
const EIGEN_ROUNDOFF: f64 = 1e-10;

impl CirculantSampler {
    /// `autocov` holds `γ(0..=len)`; the embedding has size `2·len`.
    pub fn new(autocov: &[f64]) -> Result<Self> {
        if autocov.len() < 2 {
            return Err(Error::invalid("autocov", "need at least lags 0 and 1"));
        }
        let len = autocov.len() - 1;
        let m = 2 * len;
        let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
        row.extend(autocov.iter().map(|&c| Complex::new(c, 0.0)));
        row.extend(autocov[1..len].iter().rev().map(|&c| Complex::new(c, 0.0)));
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let max = row.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
        let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        if min < -EIGEN_ROUNDOFF * max {
            return Err(Error::CirculantIndefinite { min_eigenvalue: min });
        }
        let scale = row.iter().map(|c| (c.re.max(0.0) / m as f64).sqrt()).collect();
        Ok(Self { len, scale, fft })
    }

    /// Number of stationary values produced per draw.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sample_sequence<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = self
            .scale
            .iter()
            .map(|&s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        buf[..self.len].iter().map(|c| c.re).collect()
    }
}

enum Engine {
    Cholesky(CholeskySampler),
    Circulant(CirculantSampler),
    Timechange {
        factor: Cholesky,
        weights: Vec<f64>,
        refine: usize,
    },
}

/// Reusable sampler for fBm or `Y⁽¹⁾` on a fixed grid.
pub struct PathSampler {
    engine: Engine,
    process: ProcessKind,
    h: HurstParam,
    grid: TimeGrid,
}

impl PathSampler {
    /// fBm via circulant embedding of fGn on a uniform grid, falling back to
    /// Cholesky (with a warning) if the embedding is not nonnegative definite.
    pub fn fbm_circulant(h: HurstParam, grid: &TimeGrid) -> Result<Self> {
        let mesh = grid.mesh()?;
        let scale = mesh.powf(2.0 * h.value());
        let autocov: Vec<f64> = (0..=grid.n())
            .map(|k| scale * fgn_autocorrelation(h, k as f64))
            .collect();
        Self::circulant_or_fallback(ProcessKind::Fbm, h, grid, &autocov)
    }

    pub fn fbm_cholesky(h: HurstParam, grid: &TimeGrid) -> Result<Self> {
        let cov = build_cov_matrix(ProcessKind::Fbm, h, grid, CovKind::Increments)?;
        Ok(Self::from_cholesky(CholeskySampler::new(&cov)?, ProcessKind::Fbm, h, grid))
    }

    pub fn y1(h: HurstParam, grid: &TimeGrid, route: Y1Route) -> Result<Self> {
        time_change(h, grid.horizon())?;
        match route {
            Y1Route::ExactCov => {
                if !h.kernel_regime_valid() {
                    return Err(Error::Regime(format!(
                        "exact-covariance route needs H > 1/2 (got H = {}); use the time-change or circulant route",
                        h.value()
                    )));
                }
                let cov = build_cov_matrix(ProcessKind::Y1, h, grid, CovKind::Increments)?;
                Ok(Self::from_cholesky(CholeskySampler::new(&cov)?, ProcessKind::Y1, h, grid))
            }
            Y1Route::Circulant => {
                let autocov = y1_increment_autocov(h, grid.mesh()?, grid.n() + 1, BILINEAR_SUBDIV)?;
                Self::circulant_or_fallback(ProcessKind::Y1, h, grid, &autocov)
            }
            Y1Route::Timechange { refine } => Self::timechange(h, grid, refine),
        }
    }

    fn from_cholesky(s: CholeskySampler, process: ProcessKind, h: HurstParam, grid: &TimeGrid) -> Self {
        Self {
            engine: Engine::Cholesky(s),
            process,
            h,
            grid: grid.clone(),
        }
    }

    fn circulant_or_fallback(process: ProcessKind, h: HurstParam, grid: &TimeGrid, autocov: &[f64]) -> Result<Self> {
        match CirculantSampler::new(autocov) {
            Ok(c) => Ok(Self {
                engine: Engine::Circulant(c),
                process,
                h,
                grid: grid.clone(),
            }),
            Err(Error::CirculantIndefinite { min_eigenvalue }) => {
                log::warn!(
                    "circulant embedding for {process:?} with H = {} is indefinite (min eigenvalue {min_eigenvalue:e}); falling back to Cholesky",
                    h.value()
                );
                let cov = build_cov_matrix(process, h, grid, CovKind::Increments)?;
                Ok(Self::from_cholesky(CholeskySampler::new(&cov)?, process, h, grid))
            }
            Err(e) => Err(e),
        }
    }

    fn timechange(h: HurstParam, grid: &TimeGrid, refine: usize) -> Result<Self> {
        if refine == 0 {
            return Err(Error::invalid("refine", "need at least one sub-step per grid step"));
        }
        let m = grid.n() * refine;
        if m > CHOLESKY_BUDGET {
            return Err(Error::Budget {
                what: "time-change route (grid steps × refine)",
                size: m,
                limit: CHOLESKY_BUDGET,
            });
        }
        let mut s = Vec::with_capacity(m + 1);
        for w in grid.points().windows(2) {
            for j in 0..refine {
                s.push(w[0] + (w[1] - w[0]) * j as f64 / refine as f64);
            }
        }
        s.push(grid.horizon());
        let a = s.iter().map(|&x| time_change(h, x)).collect::<Result<Vec<_>>>()?;
        let two_h = 2.0 * h.value();
        let mut cov = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                let c = fbm_increment_cov(two_h, a[i], a[i + 1], a[j], a[j + 1]);
                cov[i * m + j] = c;
                cov[j * m + i] = c;
            }
        }
        let weights = s.windows(2).map(|p| (-(0.5 * (p[0] + p[1]))).exp()).collect();
        Ok(Self {
            engine: Engine::Timechange {
                factor: Cholesky::factor(&cov, m)?,
                weights,
                refine,
            },
            process: ProcessKind::Y1,
            h,
            grid: grid.clone(),
        })
    }

    pub fn method(&self) -> SampleMethod {
        match self.engine {
            Engine::Cholesky(_) => SampleMethod::Cholesky,
            Engine::Circulant(_) => SampleMethod::Circulant,
            Engine::Timechange { .. } => SampleMethod::Timechange,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn sample(&self, seed: SeedSpec) -> GaussianPath {
        let (values, method) = match &self.engine {
            Engine::Cholesky(c) => return c.sample(seed),
            Engine::Circulant(c) => {
                let mut rng = seed.rng();
                (cumulative(&c.sample_sequence(&mut rng)), SampleMethod::Circulant)
            }
            Engine::Timechange {
                factor,
                weights,
                refine,
            } => {
                let mut rng = seed.rng();
                let db = factor.mul_lower(&standard_normals(&mut rng, factor.dim()));
                let mut values = Vec::with_capacity(self.grid.len());
                values.push(0.0);
                let mut acc = 0.0;
                for (k, (w, d)) in weights.iter().zip(&db).enumerate() {
                    acc += w * d;
                    if (k + 1) % refine == 0 {
                        values.push(acc);
                    }
                }
                (values, SampleMethod::Timechange)
            }
        };
        GaussianPath {
            grid: self.grid.clone(),
            values,
            process: self.process,
            h: self.h,
            method,
            seed,
        }
    }
}

/// Exact-in-law fBm on a uniform grid by circulant embedding.
pub fn sample_fbm_circulant(h: HurstParam, grid: &TimeGrid, seed: SeedSpec) -> Result<GaussianPath> {
    Ok(PathSampler::fbm_circulant(h, grid)?.sample(seed))
}

/// One path of `Y⁽¹⁾` by the requested route.
pub fn sample_y1(h: HurstParam, grid: &TimeGrid, seed: SeedSpec, route: Y1Route) -> Result<GaussianPath> {
    Ok(PathSampler::y1(h, grid, route)?.sample(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(x: f64) -> HurstParam {
        HurstParam::new(x).unwrap()
    }

    fn empirical_cov(paths: &[Vec<f64>], i: usize, j: usize) -> f64 {
        paths.iter().map(|p| p[i] * p[j]).sum::<f64>() / paths.len() as f64
    }

    #[test]
    fn paths_start_at_zero_and_are_reproducible() {
        let g = TimeGrid::uniform(1.0, 64).unwrap();
        let seed = SeedSpec::new(7, 3);
        for route in [Y1Route::Circulant, Y1Route::ExactCov, Y1Route::Timechange { refine: 4 }] {
            let a = sample_y1(h(0.7), &g, seed, route).unwrap();
            let b = sample_y1(h(0.7), &g, seed, route).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.values.len(), 65);
            assert_eq!(a.values[0], 0.0);
            let c = sample_y1(h(0.7), &g, seed.with_replication(4), route).unwrap();
            assert_ne!(a.values, c.values);
        }
    }

    #[test]
    fn circulant_fbm_has_exact_covariance() {
        let g = TimeGrid::uniform(1.0, 8).unwrap();
        for hv in [0.3, 0.5, 0.8] {
            let s = PathSampler::fbm_circulant(h(hv), &g).unwrap();
            assert_eq!(s.method(), SampleMethod::Circulant);
            let paths: Vec<_> = (0..20_000).map(|r| s.sample(SeedSpec::new(11, r)).values).collect();
            for (i, j) in [(8, 8), (4, 8), (2, 3)] {
                let (ti, tj) = (g.points()[i], g.points()[j]);
                let exact = fbm_cov(h(hv), ti, tj).unwrap();
                let emp = empirical_cov(&paths, i, j);
                assert!((emp - exact).abs() < 0.05 * exact.max(0.05), "H={hv} ({i},{j}) {emp} vs {exact}");
            }
        }
    }

    use super::super::kernel::fbm_cov;

    #[test]
    fn y1_routes_agree_in_variance() {
        let g = TimeGrid::uniform(1.0, 16).unwrap();
        let hv = h(0.6);
        let exact = 2.0 * super::super::kernel::variogram(hv, 1.0).unwrap();
        for route in [Y1Route::Circulant, Y1Route::ExactCov, Y1Route::Timechange { refine: 8 }] {
            let s = PathSampler::y1(hv, &g, route).unwrap();
            let var = (0..20_000)
                .map(|r| s.sample(SeedSpec::new(5, r)).values[16].powi(2))
                .sum::<f64>()
                / 20_000.0;
            assert!((var - exact).abs() < 0.04 * exact, "{route:?}: {var} vs {exact}");
        }
    }

    #[test]
    fn brownian_timechange_route_is_brownian() {
        let g = TimeGrid::uniform(2.0, 8).unwrap();
        let s = PathSampler::y1(h(0.5), &g, Y1Route::Timechange { refine: 8 }).unwrap();
        let paths: Vec<_> = (0..20_000).map(|r| s.sample(SeedSpec::new(9, r)).values).collect();
        assert!((empirical_cov(&paths, 8, 8) - 2.0).abs() < 0.08);
        assert!((empirical_cov(&paths, 4, 8) - 1.0).abs() < 0.05);
    }

    #[test]
    fn exact_route_refuses_low_hurst() {
        let g = TimeGrid::uniform(1.0, 8).unwrap();
        assert!(matches!(PathSampler::y1(h(0.4), &g, Y1Route::ExactCov), Err(Error::Regime(_))));
        assert!(PathSampler::y1(h(0.4), &g, Y1Route::Circulant).is_ok());
    }

    #[test]
    fn budgets_and_bad_inputs() {
        let big = TimeGrid::uniform(1.0, CHOLESKY_BUDGET + 1).unwrap();
        assert!(matches!(PathSampler::fbm_cholesky(h(0.6), &big), Err(Error::Budget { .. })));
        let g = TimeGrid::uniform(1.0, 512).unwrap();
        assert!(matches!(
            PathSampler::y1(h(0.6), &g, Y1Route::Timechange { refine: 16 }),
            Err(Error::Budget { .. })
        ));
        assert!(CirculantSampler::new(&[1.0]).is_err());
        assert!(matches!(
            CirculantSampler::new(&[1.0, 2.0, 1.0]),
            Err(Error::CirculantIndefinite { .. })
        ));
        let irregular = TimeGrid::from_points(vec![0.0, 0.3, 1.0]).unwrap();
        assert!(matches!(PathSampler::fbm_circulant(h(0.6), &irregular), Err(Error::NonUniformGrid(_))));
        let long = TimeGrid::uniform(1000.0, 8).unwrap();
        assert!(matches!(PathSampler::y1(h(0.6), &long, Y1Route::Circulant), Err(Error::Overflow(_))));
    }

    #[test]
    fn large_circulant_y1_is_cheap() {
        let g = TimeGrid::uniform(1.0, 1 << 14).unwrap();
        let s = PathSampler::y1(h(0.7), &g, Y1Route::Circulant).unwrap();
        assert_eq!(s.method(), SampleMethod::Circulant);
        let p = s.sample(SeedSpec::new(1, 0));
        assert!(p.values.iter().all(|v| v.is_finite()));
    }
}
