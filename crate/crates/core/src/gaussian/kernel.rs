//! Covariance kernels of fBm and of `Y⁽¹⁾_t = ∫_0^t e^{-s} dB^H_{a_s}`.
//!
//! For `H > ½` the increments of `Y⁽¹⁾` have the stationary covariance
//! density `k_H(|u − v|)` with
//!
//! ```text
//! k_H(x) = H(2H−1) H^{2H−2} e^{−(1−H)x/H} |1 − e^{−x/H}|^{2H−2}
//! ```
//!
//! so the variogram is `v(t) = ∫_0^t (t − x) k_H(x) dx`. The `x^{2H−2}`
//! singularity at the origin is absorbed by the substitution
//! `y = x^{2H−1}`, after which the integrand is bounded. For `H ≤ ½` the
//! kernel is not integrable and every covariance is computed from the
//! bilinear expansion of the Riemann–Stieltjes sum over the time-changed fBm.

use crate::error::{Error, Result};
use crate::model::{time_change, HurstParam};
use crate::quad::{self, Tolerance};

/// `E[B_s B_t] = ½(s^{2H} + t^{2H} − |t − s|^{2H})`.
pub fn fbm_cov(h: HurstParam, s: f64, t: f64) -> Result<f64> {
    if !(s >= 0.0 && t >= 0.0) || !s.is_finite() || !t.is_finite() {
        return Err(Error::Domain(format!("fBm covariance needs finite s, t >= 0, got ({s}, {t})")));
    }
    let two_h = 2.0 * h.value();
    Ok(0.5 * (s.powf(two_h) + t.powf(two_h) - (t - s).abs().powf(two_h)))
}

/// `E[(B_b − B_a)(B_d − B_c)]`, written with differences only so that short
/// increments far from the origin do not cancel.
#[inline]
pub fn fbm_increment_cov(two_h: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    0.5 * ((d - a).abs().powf(two_h) + (c - b).abs().powf(two_h)
        - (d - b).abs().powf(two_h)
        - (c - a).abs().powf(two_h))
}

/// fGn autocovariance `ρ_H(k) = ½(|k+1|^{2H} + |k−1|^{2H} − 2|k|^{2H})`.
pub fn fgn_autocorrelation(h: HurstParam, k: f64) -> f64 {
    let two_h = 2.0 * h.value();
    0.5 * ((k + 1.0).abs().powf(two_h) + (k - 1.0).abs().powf(two_h) - 2.0 * k.abs().powf(two_h))
}

fn require_kernel_regime(h: HurstParam, what: &str) -> Result<()> {
    if h.kernel_regime_valid() {
        Ok(())
    } else {
        Err(Error::Regime(format!(
            "{what} is only defined for H > 1/2 (got H = {}); use the brute-force bilinear route",
            h.value()
        )))
    }
}

/// `H(2H−1)H^{2H−2}`
fn kernel_prefactor(h: f64) -> f64 {
    h * (2.0 * h - 1.0) * h.powf(2.0 * h - 2.0)
}

/// Covariance density `k_H(x)` of the increments of `Y⁽¹⁾`, `x > 0`.
pub fn kernel_k(h: HurstParam, x: f64) -> Result<f64> {
    require_kernel_regime(h, "kernel k_H")?;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("k_H needs x > 0, got {x}")));
    }
    let hv = h.value();
    Ok(kernel_prefactor(hv) * (-(1.0 - hv) * x / hv).exp() * (-(-x / hv).exp_m1()).powf(2.0 * hv - 2.0))
}

/// Symmetric kernel `r_H(u, v)`; evaluated from its own closed form with
/// `u − v` replaced by `|u − v|`, which makes it equal to `k_H(|u − v|)`.
pub fn kernel_r(h: HurstParam, u: f64, v: f64) -> Result<f64> {
    require_kernel_regime(h, "kernel r_H")?;
    if u == v {
        return Err(Error::Singular(u));
    }
    let hv = h.value();
    let d = (u - v).abs();
    let num = (-(1.0 - hv) * d / hv).exp();
    let den = (-(-d / hv).exp_m1()).powf(2.0 * (1.0 - hv));
    Ok(kernel_prefactor(hv) * num / den)
}

/// Regular part of `k_H`: `k_H(x) = H(2H−1) x^{2H−2} · smooth(x)`, with
/// `smooth(0) = 1`.
fn kernel_smooth_part(hv: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let u = x / hv;
    // ((1 − e^{−u}) / u)^{2H−2}, equal to 1 at u = 0
    let ratio = -(-u).exp_m1() / u;
    (-(1.0 - hv) * x / hv).exp() * ratio.powf(2.0 * hv - 2.0)
}

/// `∫_lo^hi w(x) k_H(x) dx`. When `lo = 0` the singular endpoint is
/// removed with `y = x^{2H−1}`: `x^{2H−2} dx = dy / (2H−1)`.
fn integrate_against_kernel<W: Fn(f64) -> f64>(hv: f64, lo: f64, hi: f64, w: W, scale: f64) -> f64 {
    let tol = Tolerance {
        abs: 1e-14 * scale,
        rel: 1e-13,
        max_depth: 50,
    };
    if lo == 0.0 {
        let p = 1.0 / (2.0 * hv - 1.0);
        let integrand = |y: f64| {
            let x = y.powf(p);
            w(x) * kernel_smooth_part(hv, x)
        };
        hv * quad::integrate(integrand, 0.0, hi.powf(2.0 * hv - 1.0), tol)
    } else {
        let pre = hv * (2.0 * hv - 1.0);
        let integrand = |x: f64| w(x) * pre * x.powf(2.0 * hv - 2.0) * kernel_smooth_part(hv, x);
        quad::integrate(integrand, lo, hi, tol)
    }
}

/// Variogram `v(t) = ½E(Y_{s+t} − Y_s)² = ∫_0^t (t − x) k_H(x) dx` by
/// singularity-removing quadrature. `v(0) = 0`. Only for `H > ½`; see
/// [`variogram_bruteforce`] otherwise.
pub fn variogram(h: HurstParam, t: f64) -> Result<f64> {
    require_kernel_regime(h, "variogram quadrature")?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("variogram needs finite t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let hv = h.value();
    Ok(integrate_against_kernel(hv, 0.0, t, |x| t - x, t.powf(2.0 * hv)))
}

/// Half the variance of the midpoint Riemann–Stieltjes sum
/// `Σ_i e^{−m_i}(B_{a_{s_i}} − B_{a_{s_{i−1}}})` over `subdiv` equal steps of
/// `[0, t]`, expanded bilinearly in fBm increment covariances. Valid for all
/// `H`; converges to `v(t)` as `subdiv → ∞`.
pub fn variogram_bruteforce(h: HurstParam, t: f64, subdiv: usize) -> Result<f64> {
    if subdiv < 2 {
        return Err(Error::invalid("subdiv", format!("need at least 2 subdivisions, got {subdiv}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("variogram needs finite t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let cell = RefinedCell::new(h, 0.0, t, subdiv)?;
    Ok(0.5 * cell.cross(&cell, 2.0 * h.value()))
}

/// Fine subdivision of one step `[lo, hi]` of the driver time axis, with
/// time-changed endpoints `a_{s_j}` and midpoint weights `e^{−m_j}`.
pub(crate) struct RefinedCell {
    a: Vec<f64>,
    w: Vec<f64>,
}

impl RefinedCell {
    pub(crate) fn new(h: HurstParam, lo: f64, hi: f64, subdiv: usize) -> Result<Self> {
        let s: Vec<f64> = (0..=subdiv)
            .map(|j| lo + (hi - lo) * j as f64 / subdiv as f64)
            .collect();
        let a = s.iter().map(|&x| time_change(h, x)).collect::<Result<Vec<_>>>()?;
        let w = s.windows(2).map(|p| (-(0.5 * (p[0] + p[1]))).exp()).collect();
        Ok(Self { a, w })
    }

    /// `Cov(Σ_i w_i ΔB_i, Σ_j w'_j ΔB'_j)` between two cells.
    pub(crate) fn cross(&self, other: &RefinedCell, two_h: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &wi) in self.w.iter().enumerate() {
            let (a0, a1) = (self.a[i], self.a[i + 1]);
            let mut row = 0.0;
            for (j, &wj) in other.w.iter().enumerate() {
                row += wj * fbm_increment_cov(two_h, a0, a1, other.a[j], other.a[j + 1]);
            }
            acc += wi * row;
        }
        acc
    }
}

/// Default number of bilinear sub-steps per grid step when `H ≤ ½`.
pub const BILINEAR_SUBDIV: usize = 32;

/// Autocovariance `γ(k) = E[ΔY_0 ΔY_k]` of `Y⁽¹⁾` increments over steps of
/// length `delta`, for lags `0..len`.
///
/// For `H > ½` each lag is the direct kernel integral
/// `∫ (δ − |x − kδ|)⁺ k_H(x) dx`, which keeps full relative precision even
/// where `γ(k)` is many orders of magnitude below `v(δ)`. For `H ≤ ½` each
/// lag is the bilinear cell-by-cell expansion with `subdiv` sub-steps.
pub fn y1_increment_autocov(h: HurstParam, delta: f64, len: usize, subdiv: usize) -> Result<Vec<f64>> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("step must be positive, got {delta}")));
    }
    if len == 0 {
        return Ok(Vec::new());
    }
    let hv = h.value();
    if h.kernel_regime_valid() {
        let scale = delta.powf(2.0 * hv);
        let mut out = Vec::with_capacity(len);
        out.push(2.0 * variogram(h, delta)?);
        for k in 1..len {
            let kd = k as f64 * delta;
            let lo = (k - 1) as f64 * delta;
            let hi = (k + 1) as f64 * delta;
            let rising = integrate_against_kernel(hv, lo, kd, |x| x - lo, scale);
            let falling = integrate_against_kernel(hv, kd, hi, |x| hi - x, scale);
            out.push(rising + falling);
        }
        Ok(out)
    } else {
        if subdiv < 2 {
            return Err(Error::invalid("subdiv", "need at least 2 subdivisions"));
        }
        time_change(h, len as f64 * delta)?;
        let two_h = 2.0 * hv;
        let first = RefinedCell::new(h, 0.0, delta, subdiv)?;
        (0..len)
            .map(|k| {
                let cell = RefinedCell::new(h, k as f64 * delta, (k + 1) as f64 * delta, subdiv)?;
                Ok(first.cross(&cell, two_h))
            })
            .collect()
    }
}

/// Variogram by the quadrature route when `H > ½`, otherwise by the
/// bilinear route with `subdiv` sub-steps. The flag reports which was used.
pub fn variogram_auto(h: HurstParam, t: f64, subdiv: usize) -> Result<(f64, bool)> {
    if h.kernel_regime_valid() {
        Ok((variogram(h, t)?, false))
    } else {
        Ok((variogram_bruteforce(h, t, subdiv)?, true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(x: f64) -> HurstParam {
        HurstParam::new(x).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn fbm_cov_examples() {
        assert!((fbm_cov(h(0.3), 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((fbm_cov(h(0.5), 1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((fbm_cov(h(0.75), 1.0, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(fbm_cov(h(0.6), 0.3, 0.9).unwrap(), fbm_cov(h(0.6), 0.9, 0.3).unwrap());
        assert!(fbm_cov(h(0.6), -1.0, 0.9).is_err());
        assert!(fbm_cov(h(0.6), f64::NAN, 0.9).is_err());
    }

    #[test]
    fn increment_cov_matches_level_expansion() {
        let hp = h(0.7);
        let (a, b, c, d) = (0.2, 0.5, 0.4, 1.3);
        let via_levels = fbm_cov(hp, b, d).unwrap() - fbm_cov(hp, b, c).unwrap() - fbm_cov(hp, a, d).unwrap()
            + fbm_cov(hp, a, c).unwrap();
        assert!((fbm_increment_cov(1.4, a, b, c, d) - via_levels).abs() < 1e-14);
    }

    #[test]
    fn kernel_k_examples() {
        // 40-digit oracle
        let k = kernel_k(h(0.75), 1.0).unwrap();
        assert!(rel(k, 0.361_558_082_865_486_58) < 1e-12);
        assert!(kernel_k(h(0.75), 60.0).unwrap() < 1e-5);
        let hv = 0.6;
        let c = hv * (2.0 * hv - 1.0);
        let ratio = kernel_k(h(hv), 0.01).unwrap() / (c * 0.01f64.powf(2.0 * hv - 2.0));
        assert!((0.95..=1.05).contains(&ratio));
        assert!(matches!(kernel_k(h(0.5), 1.0), Err(Error::Regime(_))));
        assert!(kernel_k(h(0.7), 0.0).is_err());
    }

    #[test]
    fn kernel_r_symmetry_and_consistency() {
        let hp = h(0.75);
        assert_eq!(kernel_r(hp, 2.0, 1.0).unwrap(), kernel_r(hp, 1.0, 2.0).unwrap());
        assert!(rel(kernel_r(hp, 2.0, 1.0).unwrap(), kernel_k(hp, 1.0).unwrap()) < 1e-14);
        assert!(matches!(kernel_r(h(0.6), 0.4, 0.4), Err(Error::Singular(_))));
        assert!(kernel_r(h(0.4), 0.4, 0.1).is_err());
    }

    /// Frozen values of `v(t)` from 40-digit mpmath quadrature.
    const V_ORACLE: [(f64, f64, f64); 10] = [
        (0.55, 1e-4, 0.000_019_905_358_527_257_909),
        (0.55, 1.0, 0.498_980_738_958_081_24),
        (0.6, 1e-3, 0.000_125_594_321_179_032_29),
        (0.6, 1e-1, 0.031_546_871_617_711_965),
        (0.7, 1e-4, 1.255_943_215_710_814_5e-6),
        (0.7, 1e-2, 0.000_792_446_318_763_666_29),
        (0.7, 1.0, 0.498_274_319_098_805_15),
        (0.8, 1e-3, 7.924_465_941_139_793e-6),
        (0.9, 1e-4, 3.154_786_722_357_04e-8),
        (0.9, 1.0, 0.499_307_876_385_383),
    ];

    #[test]
    fn variogram_matches_extended_precision() {
        for &(hv, t, want) in V_ORACLE.iter() {
            let got = variogram(h(hv), t).unwrap();
            assert!(rel(got, want) < 1e-8, "H={hv} t={t}: {got} vs {want}");
        }
        assert_eq!(variogram(h(0.6), 0.0).unwrap(), 0.0);
        assert!(matches!(variogram(h(0.5), 0.1), Err(Error::Regime(_))));
    }

    #[test]
    fn variogram_small_t_limit() {
        let hv = 0.7;
        let t: f64 = 1e-4;
        let ratio = variogram(h(hv), t).unwrap() / t.powf(2.0 * hv);
        assert!((ratio - 0.5).abs() < 0.02);
    }

    #[test]
    fn bruteforce_agrees_with_quadrature() {
        let hp = h(0.7);
        let q = variogram(hp, 0.01).unwrap();
        let b = variogram_bruteforce(hp, 0.01, 512).unwrap();
        assert!(rel(b, q) < 1e-4, "{b} vs {q}");
        assert_eq!(variogram_bruteforce(hp, 0.0, 8).unwrap(), 0.0);
        assert!(variogram_bruteforce(hp, 0.1, 1).is_err());
    }

    #[test]
    fn bruteforce_brownian_case() {
        // H = ½: Y⁽¹⁾ is a standard Brownian motion, v(t) = t/2
        for &t in &[1e-3, 1e-2, 0.1] {
            let b = variogram_bruteforce(h(0.5), t, 64).unwrap();
            assert!(rel(b / t, 0.5) < 1e-6);
        }
    }

    #[test]
    fn increment_autocov_is_second_difference_of_variogram() {
        let hp = h(0.7);
        let d = 1.0 / 16.0;
        let g = y1_increment_autocov(hp, d, 6, 0).unwrap();
        for k in 1..6 {
            let kd = k as f64 * d;
            let want = variogram(hp, kd + d).unwrap() + variogram(hp, kd - d).unwrap() - 2.0 * variogram(hp, kd).unwrap();
            assert!(rel(g[k], want) < 1e-7, "lag {k}: {} vs {want}", g[k]);
        }
        // frozen mpmath values at n = 64: γ(0), γ(1)
        let g = y1_increment_autocov(hp, 1.0 / 64.0, 2, 0).unwrap();
        assert!(rel(g[0], 0.002_960_381_388) < 1e-9);
        assert!(rel(g[1], 0.000_945_855_255_1) < 1e-9);
    }

    #[test]
    fn increment_autocov_low_hurst_uses_bilinear_route() {
        let g = y1_increment_autocov(h(0.5), 0.01, 4, 16).unwrap();
        assert!(rel(g[0], 0.01) < 1e-6);
        for &x in &g[1..] {
            assert!(x.abs() < 1e-14);
        }
        // H < ½: negatively correlated neighbours, like fGn
        let g = y1_increment_autocov(h(0.3), 0.01, 3, 32).unwrap();
        assert!(g[1] < 0.0);
        let want = fgn_autocorrelation(h(0.3), 1.0) * g[0];
        assert!(rel(g[1], want) < 0.05);
    }
}
