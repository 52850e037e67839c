use serde::{Deserialize, Serialize};

use super::kernel::{
    fbm_cov, fbm_increment_cov, variogram, y1_increment_autocov, RefinedCell, BILINEAR_SUBDIV,
};
use crate::error::{Error, Result};
use crate::model::{HurstParam, TimeGrid};

/// Which Gaussian process a covariance or path belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProcessKind {
    Fbm,
    Y1,
}

/// Levels `X_{t_i}` (including the degenerate `t = 0` point) or increments
/// `X_{t_i} − X_{t_{i−1}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovKind {
    Levels,
    Increments,
}

/// Dense symmetric covariance matrix with the spec that generated it.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    dim: usize,
    data: Vec<f64>,
    process: ProcessKind,
    kind: CovKind,
    h: HurstParam,
    grid: TimeGrid,
}

impl CovMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn process(&self) -> ProcessKind {
        self.process
    }

    pub fn kind(&self) -> CovKind {
        self.kind
    }

    pub fn hurst(&self) -> HurstParam {
        self.h
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Covariance of fBm or `Y⁽¹⁾` on `grid`.
///
/// `Y⁽¹⁾` increments on a uniform grid use the stationary autocovariance
/// (a Toeplitz matrix); on other grids they come from the variogram,
/// `E[ΔY_{[a,b]} ΔY_{[c,d]}] = v(|d−a|) + v(|c−b|) − v(|d−b|) − v(|c−a|)`.
/// For `H ≤ ½` every entry is a bilinear expansion over the time-changed fBm.
/// Level covariances are the two-dimensional prefix sums of the increment
/// covariances, with a zero first row and column for `t = 0`.
pub fn build_cov_matrix(process: ProcessKind, h: HurstParam, grid: &TimeGrid, kind: CovKind) -> Result<CovMatrix> {
    let n = grid.n();
    let pts = grid.points();
    let incr = match process {
        ProcessKind::Fbm => {
            if kind == CovKind::Levels {
                let m = grid.len();
                let mut data = vec![0.0; m * m];
                for i in 0..m {
                    for j in 0..=i {
                        let c = fbm_cov(h, pts[i], pts[j])?;
                        data[i * m + j] = c;
                        data[j * m + i] = c;
                    }
                }
                return Ok(CovMatrix {
                    dim: m,
                    data,
                    process,
                    kind,
                    h,
                    grid: grid.clone(),
                });
            }
            let two_h = 2.0 * h.value();
            symmetric_from(n, |i, j| fbm_increment_cov(two_h, pts[i], pts[i + 1], pts[j], pts[j + 1]))
        }
        ProcessKind::Y1 if grid.is_uniform() => {
            let gamma = y1_increment_autocov(h, grid.mesh()?, n, BILINEAR_SUBDIV)?;
            symmetric_from(n, |i, j| gamma[i.abs_diff(j)])
        }
        ProcessKind::Y1 if h.kernel_regime_valid() => {
            let v = |x: f64| variogram(h, x);
            let mut data = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let (a, b, c, d) = (pts[i], pts[i + 1], pts[j], pts[j + 1]);
                    let e = if i == j {
                        2.0 * v(b - a)?
                    } else {
                        v((d - a).abs())? + v((c - b).abs())? - v((d - b).abs())? - v((c - a).abs())?
                    };
                    data[i * n + j] = e;
                    data[j * n + i] = e;
                }
            }
            data
        }
        ProcessKind::Y1 => {
            let cells = pts
                .windows(2)
                .map(|w| RefinedCell::new(h, w[0], w[1], BILINEAR_SUBDIV))
                .collect::<Result<Vec<_>>>()?;
            let two_h = 2.0 * h.value();
            symmetric_from(n, |i, j| cells[i].cross(&cells[j], two_h))
        }
    };
    let (dim, data) = match kind {
        CovKind::Increments => (n, incr),
        CovKind::Levels => (n + 1, prefix_levels(&incr, n)),
    };
    Ok(CovMatrix {
        dim,
        data,
        process,
        kind,
        h,
        grid: grid.clone(),
    })
}

fn symmetric_from<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Vec<f64> {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let e = f(i, j);
            data[i * n + j] = e;
            data[j * n + i] = e;
        }
    }
    data
}

/// `Cov(X_{t_i}, X_{t_j}) = Σ_{k<i} Σ_{l<j} Cov(ΔX_k, ΔX_l)`.
fn prefix_levels(incr: &[f64], n: usize) -> Vec<f64> {
    let m = n + 1;
    let mut out = vec![0.0; m * m];
    for i in 1..m {
        for j in 1..m {
            out[i * m + j] = incr[(i - 1) * n + (j - 1)] + out[(i - 1) * m + j] + out[i * m + j - 1]
                - out[(i - 1) * m + j - 1];
        }
    }
    // restore exact symmetry lost to summation order
    for i in 0..m {
        for j in 0..i {
            let s = 0.5 * (out[i * m + j] + out[j * m + i]);
            out[i * m + j] = s;
            out[j * m + i] = s;
        }
    }
    out
}

/// Row-sum diagnostic of an increment covariance on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowSumDiagnostic {
    /// `max_j Σ_k |E(Δ_k Δ_j)|`
    pub row_sum: f64,
    /// `max_j E(Δ_j)² + δ^{1∧2H}`
    pub bound: f64,
    /// `row_sum / bound`, the constant the bound holds with.
    pub ratio: f64,
}

pub fn rowsum_diagnostic(cov: &CovMatrix) -> Result<RowSumDiagnostic> {
    if cov.kind != CovKind::Increments {
        return Err(Error::invalid("cov", "row-sum diagnostic needs an increment covariance"));
    }
    let mesh = cov.grid.mesh()?;
    let n = cov.dim;
    let row_sum = (0..n)
        .map(|j| (0..n).map(|k| cov.get(k, j).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let bound = cov.max_diag() + mesh.powf((2.0 * cov.h.value()).min(1.0));
    Ok(RowSumDiagnostic {
        row_sum,
        bound,
        ratio: row_sum / bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn h(x: f64) -> HurstParam {
        HurstParam::new(x).unwrap()
    }

    fn min_eigen(c: &CovMatrix) -> f64 {
        let m = DMatrix::from_row_slice(c.dim(), c.dim(), c.data());
        SymmetricEigen::new(m).eigenvalues.min()
    }

    #[test]
    fn brownian_level_cov_is_min() {
        let g = TimeGrid::from_points(vec![0.0, 1.0, 2.0]).unwrap();
        let c = build_cov_matrix(ProcessKind::Fbm, h(0.5), &g, CovKind::Levels).unwrap();
        assert!((c.get(1, 2) - 1.0).abs() < 1e-15);
        assert_eq!(c.get(0, 0), 0.0);
    }

    #[test]
    fn y1_uniform_increments_are_stationary() {
        let g = TimeGrid::uniform(1.0, 32).unwrap();
        let c = build_cov_matrix(ProcessKind::Y1, h(0.7), &g, CovKind::Increments).unwrap();
        let d0 = c.get(0, 0);
        for i in 0..c.dim() {
            assert!((c.get(i, i) - d0).abs() <= 1e-12 * d0);
        }
        assert_eq!(c.asymmetry(), 0.0);
    }

    #[test]
    fn y1_diagonal_matches_variogram_scaling() {
        let g = TimeGrid::uniform(1.0, 256).unwrap();
        let c = build_cov_matrix(ProcessKind::Y1, h(0.7), &g, CovKind::Increments).unwrap();
        let want = (1.0f64 / 256.0).powf(1.4);
        assert!((c.get(0, 0) / want - 1.0).abs() < 0.05);
    }

    #[test]
    fn y1_nonuniform_matches_uniform_route() {
        let hp = h(0.7);
        let u = TimeGrid::uniform(1.0, 8).unwrap();
        let a = build_cov_matrix(ProcessKind::Y1, hp, &u, CovKind::Levels).unwrap();
        let irregular = TimeGrid::from_points(vec![0.0, 0.1, 0.35, 0.4, 1.0]).unwrap();
        let b = build_cov_matrix(ProcessKind::Y1, hp, &irregular, CovKind::Levels).unwrap();
        let v = |t: f64| variogram(hp, t).unwrap();
        // E[Y_s Y_t] = v(s) + v(t) − v(|t − s|)
        let (s, t) = (0.35, 1.0);
        assert!((b.get(2, 4) - (v(s) + v(t) - v(t - s))).abs() < 1e-12);
        let (s, t) = (0.25, 0.75);
        assert!((a.get(2, 6) - (v(s) + v(t) - v(t - s))).abs() < 1e-12);
    }

    #[test]
    fn level_matrices_are_psd() {
        let g = TimeGrid::uniform(1.0, 16).unwrap();
        for &(p, hv) in &[(ProcessKind::Fbm, 0.3), (ProcessKind::Fbm, 0.75), (ProcessKind::Y1, 0.7), (ProcessKind::Y1, 0.4)] {
            let c = build_cov_matrix(p, h(hv), &g, CovKind::Levels).unwrap();
            assert!(c.asymmetry() <= 1e-12);
            let floor = -1e-8 * c.trace() / c.dim() as f64;
            assert!(min_eigen(&c) >= floor, "{p:?} H={hv}");
        }
    }

    #[test]
    fn y1_low_hurst_bilinear_matches_uniform_lag_route() {
        let hp = h(0.4);
        let g = TimeGrid::uniform(0.5, 4).unwrap();
        let irregular = TimeGrid::from_points(vec![0.0, 0.125, 0.25, 0.375, 0.5 + 1e-6]).unwrap();
        let a = build_cov_matrix(ProcessKind::Y1, hp, &g, CovKind::Increments).unwrap();
        let b = build_cov_matrix(ProcessKind::Y1, hp, &irregular, CovKind::Increments).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn rowsum_brownian() {
        let n = 20;
        let g = TimeGrid::uniform(1.0, n).unwrap();
        let c = build_cov_matrix(ProcessKind::Fbm, h(0.5), &g, CovKind::Increments).unwrap();
        let d = rowsum_diagnostic(&c).unwrap();
        assert!((d.row_sum - 1.0 / n as f64).abs() < 1e-15);
        let lv = build_cov_matrix(ProcessKind::Fbm, h(0.5), &g, CovKind::Levels).unwrap();
        assert!(rowsum_diagnostic(&lv).is_err());
    }

    #[test]
    fn rowsum_y1_stays_within_constant_of_bound() {
        // The diagnostic is O(1/n) like the bound, so the ratio neither grows
        // nor collapses; diagnostic·n^{2H} grows like n^{2H−1}.
        let hp = h(0.7);
        let mut ratios = Vec::new();
        let mut scaled = Vec::new();
        for &n in &[64usize, 128, 256] {
            let g = TimeGrid::uniform(1.0, n).unwrap();
            let c = build_cov_matrix(ProcessKind::Y1, hp, &g, CovKind::Increments).unwrap();
            let d = rowsum_diagnostic(&c).unwrap();
            ratios.push(d.ratio);
            scaled.push(d.row_sum * (n as f64).powf(1.4));
        }
        assert!(ratios.iter().all(|&r| r > 0.5 && r < 1.5), "{ratios:?}");
        assert!(scaled[2] > scaled[0], "{scaled:?}");
        let r_growth = ratios[2] / ratios[0];
        assert!(r_growth < 1.2);
    }

    #[test]
    fn rowsum_y1_vanishes() {
        let hp = h(0.6);
        let mut prev = f64::INFINITY;
        for &n in &[32usize, 64, 128, 256] {
            let g = TimeGrid::uniform(1.0, n).unwrap();
            let c = build_cov_matrix(ProcessKind::Y1, hp, &g, CovKind::Increments).unwrap();
            let d = rowsum_diagnostic(&c).unwrap().row_sum;
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 0.01);
    }
}
