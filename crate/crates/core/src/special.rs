//! Riemann and Hurwitz zeta functions for real `s > 1`.

use crate::error::{Error, Result};

/// `B_{2j} / (2j)!` for j = 1..=8.
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3_617.0 / 10_670_622_842_880_000.0,
];

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (k + a)^{-s}` for `s > 1`, `a > 0`.
///
/// Direct summation of the first terms followed by the Euler–Maclaurin
/// tail. The head length grows until the last correction term used is below
/// `1e-15` relative, which bounds the truncation error of the tail.
pub fn hurwitz_zeta(s: f64, a: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::Domain(format!("zeta needs s > 1, got {s}")));
    }
    if !(a > 0.0) {
        return Err(Error::Domain(format!("Hurwitz zeta needs a > 0, got {a}")));
    }
    let mut head_len = 16usize;
    loop {
        let head: f64 = (0..head_len).map(|k| (a + k as f64).powf(-s)).sum();
        let x = a + head_len as f64;
        let mut tail = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
        // rising factorial s(s+1)…(s+2j-2) times x^{-s-2j+1}
        let mut rising = s;
        let mut xp = x.powf(-s - 1.0);
        let mut last = 0.0;
        for (j, &c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
            if j > 0 {
                rising *= (s + 2.0 * j as f64 - 1.0) * (s + 2.0 * j as f64);
                xp /= x * x;
            }
            last = c * rising * xp;
            tail += last;
        }
        let total = head + tail;
        if last.abs() <= 1e-15 * total.abs() || head_len > 1 << 20 {
            return Ok(total);
        }
        head_len *= 4;
    }
}

/// Riemann zeta `ζ(s)` for `s > 1`.
pub fn zeta(s: f64) -> Result<f64> {
    hurwitz_zeta(s, 1.0)
}
