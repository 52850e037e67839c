//! Covariances and exact samplers for fBm and the time-changed driver `Y⁽¹⁾`.

pub mod cov;
pub mod kernel;
pub mod sampler;

pub use cov::{build_cov_matrix, rowsum_diagnostic, CovKind, CovMatrix, ProcessKind, RowSumDiagnostic};
pub use kernel::{fbm_cov, fgn_autocorrelation, kernel_k, kernel_r, variogram, variogram_auto, variogram_bruteforce};
pub use sampler::{
    sample_cholesky, sample_fbm_circulant, sample_y1, CholeskySampler, CirculantSampler, GaussianPath, PathSampler,
    SampleMethod, Y1Route, CHOLESKY_BUDGET, DEFAULT_REFINE,
};
