//! Validated domain types shared by every other module: the Hurst index,
//! sampling grids, seeding, volatility descriptors, and the exponential
//! time change `a_t = H e^{t/H}` underlying the second-kind fOU driver.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

/// Hurst index `H ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParam(f64);

impl HurstParam {
    /// Smallest index accepted from configuration files and flags.
    pub const CONFIG_MIN: f64 = 0.01;
    /// Largest index accepted from configuration files and flags.
    pub const CONFIG_MAX: f64 = 0.99;

    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::invalid("h", format!("Hurst index must lie in (0, 1), got {h}")));
        }
        Ok(Self(h))
    }

    /// Stricter constructor for user input: both kernels and the time
    /// change degenerate numerically near 0 and 1.
    pub fn from_config(h: f64) -> Result<Self> {
        if !(Self::CONFIG_MIN..=Self::CONFIG_MAX).contains(&h) {
            return Err(Error::invalid(
                "h",
                format!(
                    "Hurst index must lie in [{}, {}], got {h}",
                    Self::CONFIG_MIN,
                    Self::CONFIG_MAX
                ),
            ));
        }
        Self::new(h)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Positively correlated fBm increments.
    pub fn long_memory(self) -> bool {
        self.0 > 0.5
    }

    /// The kernels `k_H` and `r_H` are integrable only in this regime.
    pub fn kernel_regime_valid(self) -> bool {
        self.0 > 0.5
    }

    pub fn is_brownian(self) -> bool {
        self.0 == 0.5
    }
}

impl TryFrom<f64> for HurstParam {
    type Error = Error;
    fn try_from(h: f64) -> Result<Self> {
        Self::new(h)
    }
}

impl From<HurstParam> for f64 {
    fn from(h: HurstParam) -> f64 {
        h.0
    }
}

/// `a_t = H e^{t/H}`.
pub fn time_change(h: HurstParam, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time change needs t >= 0, got {t}")));
    }
    let a = h.0 * (t / h.0).exp();
    if !a.is_finite() {
        return Err(Error::Overflow(format!(
            "time change H·exp(t/H) overflows for H = {}, t = {t}",
            h.0
        )));
    }
    Ok(a)
}

/// Inverse of [`time_change`]: `H ln(v / H)` for `v ≥ H`.
pub fn inverse_time_change(h: HurstParam, v: f64) -> Result<f64> {
    if !(v >= h.0) || !v.is_finite() {
        return Err(Error::Domain(format!(
            "inverse time change needs v >= H = {}, got {v}",
            h.0
        )));
    }
    Ok(h.0 * (v / h.0).ln())
}

/// Ordered sampling times on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
    horizon: f64,
    uniform: bool,
}

/// Relative tolerance used to recognise a uniform grid read back from text.
const UNIFORM_TOL: f64 = 1e-9;

impl TimeGrid {
    /// `n + 1` equally spaced points `i·T/n`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid("t", format!("horizon must be positive, got {horizon}")));
        }
        if n == 0 {
            return Err(Error::invalid("n", "grid needs at least one subinterval"));
        }
        let nf = n as f64;
        let mut points: Vec<f64> = (0..=n).map(|i| i as f64 * horizon / nf).collect();
        points[n] = horizon;
        Ok(Self {
            points,
            horizon,
            uniform: true,
        })
    }

    /// Arbitrary grid; must start at 0 and increase strictly. The uniform
    /// flag is set when every point is within `1e-9·T` of `i·T/n`.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("grid", "need at least two points"));
        }
        if points[0] != 0.0 {
            return Err(Error::invalid("grid", format!("first point must be 0, got {}", points[0])));
        }
        if let Some(w) = points.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::invalid(
                "grid",
                format!("points must be strictly increasing ({} then {})", w[0], w[1]),
            ));
        }
        let horizon = *points.last().unwrap();
        let n = (points.len() - 1) as f64;
        let uniform = points
            .iter()
            .enumerate()
            .all(|(i, &p)| (p - i as f64 * horizon / n).abs() <= UNIFORM_TOL * horizon);
        Ok(Self {
            points,
            horizon,
            uniform,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Number of subintervals.
    pub fn n(&self) -> usize {
        self.points.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Step size of a uniform grid.
    pub fn mesh(&self) -> Result<f64> {
        self.require_uniform()?;
        Ok(self.horizon / self.n() as f64)
    }

    /// Sampling frequency `1 / mesh` of a uniform grid.
    pub fn frequency(&self) -> Result<f64> {
        self.require_uniform()?;
        Ok(self.n() as f64 / self.horizon)
    }

    pub fn require_uniform(&self) -> Result<()> {
        if self.uniform {
            Ok(())
        } else {
            Err(Error::NonUniformGrid(format!(
                "{} points on [0, {}] are not equally spaced",
                self.points.len(),
                self.horizon
            )))
        }
    }

    /// Largest step.
    pub fn max_step(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// Identity of one random stream: `(base_seed, replication_index)`.
///
/// The base seed is expanded with SplitMix64 into a 256-bit ChaCha20 key and
/// the replication index selects the ChaCha stream, so replications can be
/// drawn in any order or in parallel with identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub base_seed: u64,
    pub replication_index: u64,
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(base_seed: u64, replication_index: u64) -> Self {
        Self {
            base_seed,
            replication_index,
        }
    }

    /// Independent base seed for a named sub-experiment (e.g. one rung of an
    /// n-ladder); the replication index is kept.
    pub fn child(self, tag: u64) -> Self {
        Self {
            base_seed: splitmix64(self.base_seed ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))),
            replication_index: self.replication_index,
        }
    }

    pub fn with_replication(self, replication_index: u64) -> Self {
        Self {
            base_seed: self.base_seed,
            replication_index,
        }
    }

    pub fn rng(self) -> ChaCha20Rng {
        let mut key = [0u8; 32];
        let mut state = self.base_seed;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(self.replication_index);
        rng
    }
}

/// Deterministic volatility / integrand `σ_s` (or `u_s`) with its declared
/// Hölder order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VolatilityFn {
    Constant {
        value: f64,
    },
    /// `intercept + slope·s`
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `level + amplitude·sin(frequency·s + phase)`
    Sine {
        level: f64,
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
    /// `level + scale·|s − center|^exponent`, Hölder of order `exponent`.
    Power {
        level: f64,
        scale: f64,
        center: f64,
        exponent: f64,
    },
    /// Piecewise-linear interpolation of tabulated values; constant
    /// extrapolation outside the table.
    Tabulated {
        times: Vec<f64>,
        values: Vec<f64>,
        beta: f64,
    },
}

impl VolatilityFn {
    pub fn constant(value: f64) -> Self {
        VolatilityFn::Constant { value }
    }

    pub fn affine(intercept: f64, slope: f64) -> Self {
        VolatilityFn::Affine { intercept, slope }
    }

    /// Parses the compact CLI form: `const:C`, `affine:A,B`,
    /// `sine:LEVEL,AMP,FREQ,PHASE` or `power:LEVEL,SCALE,CENTER,EXP`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if rest.trim().is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid("sigma", format!("cannot parse `{x}` as a number")))
                })
                .collect::<Result<_>>()?
        };
        let want = |k: usize| -> Result<()> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::invalid(
                    "sigma",
                    format!("`{kind}` takes {k} parameter(s), got {}", nums.len()),
                ))
            }
        };
        let f = match kind.trim() {
            "const" | "constant" => {
                want(1)?;
                Self::constant(nums[0])
            }
            "affine" => {
                want(2)?;
                Self::affine(nums[0], nums[1])
            }
            "sine" => {
                want(4)?;
                VolatilityFn::Sine {
                    level: nums[0],
                    amplitude: nums[1],
                    frequency: nums[2],
                    phase: nums[3],
                }
            }
            "power" => {
                want(4)?;
                VolatilityFn::Power {
                    level: nums[0],
                    scale: nums[1],
                    center: nums[2],
                    exponent: nums[3],
                }
            }
            other => {
                return Err(Error::invalid(
                    "sigma",
                    format!("unknown volatility kind `{other}` (expected const, affine, sine or power)"),
                ))
            }
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite, got {x}")))
            }
        };
        match self {
            VolatilityFn::Constant { value } => finite("sigma", *value),
            VolatilityFn::Affine { intercept, slope } => {
                finite("sigma.intercept", *intercept)?;
                finite("sigma.slope", *slope)
            }
            VolatilityFn::Sine {
                level,
                amplitude,
                frequency,
                phase,
            } => {
                finite("sigma.level", *level)?;
                finite("sigma.amplitude", *amplitude)?;
                finite("sigma.frequency", *frequency)?;
                finite("sigma.phase", *phase)
            }
            VolatilityFn::Power {
                level,
                scale,
                center,
                exponent,
            } => {
                finite("sigma.level", *level)?;
                finite("sigma.scale", *scale)?;
                finite("sigma.center", *center)?;
                if !(*exponent > 0.0 && *exponent <= 1.0) {
                    return Err(Error::invalid(
                        "sigma.exponent",
                        format!("Hölder exponent must lie in (0, 1], got {exponent}"),
                    ));
                }
                Ok(())
            }
            VolatilityFn::Tabulated {
                times,
                values,
                beta,
            } => {
                if times.len() != values.len() || times.is_empty() {
                    return Err(Error::invalid(
                        "sigma.values",
                        "tabulated volatility needs equally many (nonzero) times and values",
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid("sigma.times", "times must be strictly increasing"));
                }
                if values.iter().chain(times.iter()).any(|x| !x.is_finite()) {
                    return Err(Error::invalid("sigma.values", "table entries must be finite"));
                }
                if !(*beta > 0.0 && *beta <= 1.0) {
                    return Err(Error::invalid(
                        "sigma.beta",
                        format!("declared Hölder order must lie in (0, 1], got {beta}"),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Declared Hölder order `β ∈ (0, 1]`.
    pub fn beta(&self) -> f64 {
        match self {
            VolatilityFn::Constant { .. } | VolatilityFn::Affine { .. } | VolatilityFn::Sine { .. } => 1.0,
            VolatilityFn::Power { exponent, .. } => *exponent,
            VolatilityFn::Tabulated { beta, .. } => *beta,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            VolatilityFn::Constant { value } => *value == 0.0,
            VolatilityFn::Affine { intercept, slope } => *intercept == 0.0 && *slope == 0.0,
            VolatilityFn::Sine { level, amplitude, .. } => *level == 0.0 && *amplitude == 0.0,
            VolatilityFn::Power { level, scale, .. } => *level == 0.0 && *scale == 0.0,
            VolatilityFn::Tabulated { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            VolatilityFn::Constant { value } => *value,
            VolatilityFn::Affine { intercept, slope } => intercept + slope * s,
            VolatilityFn::Sine {
                level,
                amplitude,
                frequency,
                phase,
            } => level + amplitude * (frequency * s + phase).sin(),
            VolatilityFn::Power {
                level,
                scale,
                center,
                exponent,
            } => level + scale * (s - center).abs().powf(*exponent),
            VolatilityFn::Tabulated { times, values, .. } => {
                if s <= times[0] {
                    return values[0];
                }
                let last = times.len() - 1;
                if s >= times[last] {
                    return values[last];
                }
                let j = times.partition_point(|&x| x <= s);
                let (t0, t1) = (times[j - 1], times[j]);
                let w = (s - t0) / (t1 - t0);
                values[j - 1] * (1.0 - w) + values[j] * w
            }
        }
    }

    /// `∫_0^t σ_s^{2k} ds` for `k ∈ {1, 2}`; closed form where available.
    fn integrated_even_power(&self, t: f64, k: i32) -> f64 {
        let p = 2 * k;
        match self {
            VolatilityFn::Constant { value } => value.powi(p) * t,
            VolatilityFn::Affine { intercept, slope } if *slope != 0.0 => {
                ((intercept + slope * t).powi(p + 1) - intercept.powi(p + 1)) / ((p + 1) as f64 * slope)
            }
            VolatilityFn::Affine { intercept, .. } => intercept.powi(p) * t,
            VolatilityFn::Power { center, .. } if *center > 0.0 && *center < t => {
                // split at the cusp
                let f = |s: f64| self.eval(s).powi(p);
                quad::integrate(f, 0.0, *center, Tolerance::default())
                    + quad::integrate(f, *center, t, Tolerance::default())
            }
            VolatilityFn::Tabulated { times, .. } => {
                let f = |s: f64| self.eval(s).powi(p);
                let mut knots = vec![0.0];
                knots.extend(times.iter().copied().filter(|&x| x > 0.0 && x < t));
                knots.push(t);
                knots
                    .windows(2)
                    .map(|w| quad::integrate(f, w[0], w[1], Tolerance::default()))
                    .sum()
            }
            _ => quad::integrate(|s| self.eval(s).powi(p), 0.0, t, Tolerance::default()),
        }
    }

    /// Integrated volatility `∫_0^t σ_s² ds`.
    pub fn integrated_variance(&self, t: f64) -> f64 {
        self.integrated_even_power(t, 1)
    }

    /// `∫_0^t σ_s⁴ ds`, the conditional-variance scale of the CLT limit.
    pub fn integrated_quartic(&self, t: f64) -> f64 {
        self.integrated_even_power(t, 2)
    }

    /// Short human-readable descriptor.
    pub fn describe(&self) -> String {
        match self {
            VolatilityFn::Constant { value } => format!("const:{value}"),
            VolatilityFn::Affine { intercept, slope } => format!("affine:{intercept},{slope}"),
            VolatilityFn::Sine {
                level,
                amplitude,
                frequency,
                phase,
            } => format!("sine:{level},{amplitude},{frequency},{phase}"),
            VolatilityFn::Power {
                level,
                scale,
                center,
                exponent,
            } => format!("power:{level},{scale},{center},{exponent}"),
            VolatilityFn::Tabulated { times, beta, .. } => {
                format!("tabulated:{} points,beta={beta}", times.len())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    fn h(x: f64) -> HurstParam {
        HurstParam::new(x).unwrap()
    }

    #[test]
    fn hurst_bounds() {
        assert!(HurstParam::new(0.0).is_err());
        assert!(HurstParam::new(1.0).is_err());
        assert!(HurstParam::new(f64::NAN).is_err());
        assert!(HurstParam::from_config(0.995).is_err());
        assert!(HurstParam::from_config(0.005).is_err());
        let p = HurstParam::from_config(0.7).unwrap();
        assert!(p.long_memory() && p.kernel_regime_valid());
        let q = h(0.5);
        assert!(!q.long_memory() && q.is_brownian());
        assert!(serde_json::from_str::<HurstParam>("1.2").is_err());
    }

    #[test]
    fn time_change_examples() {
        assert_eq!(time_change(h(0.5), 0.0).unwrap(), 0.5);
        assert!((time_change(h(0.999_999_999), 1.0).unwrap() - std::f64::consts::E).abs() < 1e-8);
        // extended-precision oracle: 0.7·e^{2/0.7} = 12.188195644329355...
        let a = time_change(h(0.7), 2.0).unwrap();
        assert!((a - 12.188_195_644_329_355).abs() < 1e-12 * a);
        assert!(time_change(h(0.01), 10.0).is_err());
        assert!(matches!(time_change(h(0.01), 10.0), Err(Error::Overflow(_))));
        assert!(time_change(h(0.5), -1.0).is_err());
    }

    #[test]
    fn inverse_time_change_examples() {
        assert_eq!(inverse_time_change(h(0.5), 0.5).unwrap(), 0.0);
        let t = inverse_time_change(h(0.7), 12.217).unwrap();
        assert!((t - 2.0).abs() < 0.01);
        assert!(inverse_time_change(h(0.7), 0.69).is_err());
    }

    #[test]
    fn round_trip_and_monotone() {
        for hi in 1..=9 {
            let hp = h(hi as f64 / 10.0);
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=100 {
                let t = k as f64 / 10.0;
                let a = time_change(hp, t).unwrap();
                assert!(a > prev);
                prev = a;
                let back = inverse_time_change(hp, a).unwrap();
                assert!((back - t).abs() < 1e-10, "H={} t={t} back={back}", hp.value());
            }
        }
    }

    #[test]
    fn uniform_grid() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        assert_eq!(g.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(g.is_uniform());
        assert_eq!(TimeGrid::uniform(2.0, 1).unwrap().points(), &[0.0, 2.0]);
        assert!(TimeGrid::uniform(1.0, 0).is_err());
        assert!(TimeGrid::uniform(0.0, 3).is_err());
        assert!(TimeGrid::uniform(-1.0, 3).is_err());
        let g = TimeGrid::uniform(3.0, 7).unwrap();
        for (i, &p) in g.points().iter().enumerate() {
            let exact = i as f64 * 3.0 / 7.0;
            assert!((p - exact).abs() <= exact * f64::EPSILON);
        }
    }

    #[test]
    fn grid_from_points() {
        assert!(TimeGrid::from_points(vec![0.0, 0.5, 0.4]).is_err());
        assert!(TimeGrid::from_points(vec![0.1, 0.5]).is_err());
        let g = TimeGrid::from_points(vec![0.0, 0.1, 0.5]).unwrap();
        assert!(!g.is_uniform());
        assert!(g.mesh().is_err());
        let g = TimeGrid::from_points(vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        assert!(g.is_uniform());
        assert_eq!(g.frequency().unwrap(), 4.0);
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        let a = SeedSpec::new(42, 3).rng().next_u64();
        let b = SeedSpec::new(42, 3).rng().next_u64();
        let c = SeedSpec::new(42, 4).rng().next_u64();
        let d = SeedSpec::new(43, 3).rng().next_u64();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_ne!(SeedSpec::new(42, 0).child(1), SeedSpec::new(42, 0).child(2));
    }

    #[test]
    fn volatility_parse_and_integrals() {
        let f = VolatilityFn::parse("affine:1,0.5").unwrap();
        // ∫_0^1 (1 + s/2)² ds = 1 + 1/2 + 1/12
        assert!((f.integrated_variance(1.0) - (1.0 + 0.5 + 1.0 / 12.0)).abs() < 1e-14);
        // ∫_0^1 (1 + s/2)^4 ds = (2/5)(1.5^5 − 1)
        assert!((f.integrated_quartic(1.0) - 0.4 * (1.5f64.powi(5) - 1.0)).abs() < 1e-13);
        let s = VolatilityFn::parse("sine:1,0.5,3,0.2").unwrap();
        let exact = |t: f64| {
            // ∫ (1 + 0.5 sin(3s + 0.2))² ds
            let w = 3.0;
            let ph = 0.2;
            t + (-(w * t + ph).cos() + ph.cos()) / w
                + 0.25 * (t / 2.0 - ((2.0 * (w * t + ph)).sin() - (2.0 * ph).sin()) / (4.0 * w))
        };
        assert!((s.integrated_variance(0.8) - exact(0.8)).abs() < 1e-11);
        let p = VolatilityFn::parse("power:1,1,0.5,0.5").unwrap();
        assert_eq!(p.beta(), 0.5);
        // ∫_0^1 (1 + |s − ½|^{1/2})² ds = 1 + 2·2·(2/3)(½)^{3/2} + 2·½·(½)²
        let exact = 1.0 + 4.0 * (2.0 / 3.0) * 0.5f64.powf(1.5) + 0.25;
        assert!((p.integrated_variance(1.0) - exact).abs() < 1e-9);
        assert!(VolatilityFn::parse("power:1,1,0.5,1.5").is_err());
        assert!(VolatilityFn::parse("wiggle:1").is_err());
        assert!(VolatilityFn::parse("affine:1").is_err());
        assert!(VolatilityFn::parse("const:0").unwrap().is_identically_zero());
    }

    #[test]
    fn tabulated_interpolates() {
        let f = VolatilityFn::Tabulated {
            times: vec![0.0, 1.0],
            values: vec![1.0, 2.0],
            beta: 1.0,
        };
        f.validate().unwrap();
        assert_eq!(f.eval(0.5), 1.5);
        assert_eq!(f.eval(3.0), 2.0);
        // same as affine 1 + s
        assert!((f.integrated_variance(1.0) - 7.0 / 3.0).abs() < 1e-12);
    }
}
