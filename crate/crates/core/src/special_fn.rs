//! Gaussian tail function and the reflection-series kernels built on it.
//!
//! `phi(x) = 2/sqrt(2 pi) * int_x^inf exp(-r^2/2) dr`, i.e. twice the upper
//! standard-normal tail, so `phi(0) = 1` and `phi(-inf) = 2`. The two-barrier
//! series and the exit-time density are symmetric partial sums over the
//! reflection index `i`, truncated once both the newest index pair and an
//! analytic remainder bound fall below [`SeriesConfig::tol`].
//!
//! Sign convention: `sgn(i) = +1` for `i >= 0` and `-1` for `i < 0`. The
//! `i = 0` pair is the dominant contribution and enters with a plus sign.

use std::f64::consts::{FRAC_2_SQRT_PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, GcapError, Result};

/// `2 / sqrt(2 pi)`, the value of `-phi'(0)`.
pub const TWO_OVER_SQRT_2PI: f64 = FRAC_2_SQRT_PI / SQRT_2;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Truncation controls for the reflection series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    /// Absolute truncation tolerance.
    pub tol: f64,
    /// Largest reflection index `I` examined before giving up.
    pub max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_terms: 1_000_000,
        }
    }
}

impl SeriesConfig {
    pub fn new(tol: f64, max_terms: usize) -> Result<Self> {
        let cfg = Self { tol, max_terms };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tol(tol: f64) -> Result<Self> {
        Self::new(tol, Self::default().max_terms)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(GcapError::Validation(format!(
                "series tolerance must be positive and finite, got {}",
                self.tol
            )));
        }
        if self.max_terms < 1 {
            return Err(GcapError::Validation("max_terms must be at least 1".into()));
        }
        Ok(())
    }
}

/// A truncated series together with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Largest `|i|` included in the symmetric window.
    pub terms: usize,
    /// Remainder bound at the stopping index.
    pub remainder_bound: f64,
}

/// Twice the standard normal upper tail, without argument checks.
#[inline]
pub(crate) fn phi_unchecked(x: f64) -> f64 {
    libm::erfc(x / SQRT_2)
}

/// `phi(x) = 2/sqrt(2 pi) int_x^inf exp(-r^2/2) dr`.
pub fn phi(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(phi_unchecked(x))
}

/// `phi'(x) = -2/sqrt(2 pi) exp(-x^2/2)`.
pub fn phi_prime(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(-TWO_OVER_SQRT_2PI * (-0.5 * x * x).exp())
}

/// `phi''(x) = -x phi'(x)`.
pub fn phi_second(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(x * TWO_OVER_SQRT_2PI * (-0.5 * x * x).exp())
}

fn check_volatility(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(GcapError::Domain(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn check_barriers(b: f64, l: f64) -> Result<()> {
    ensure_finite("b", b)?;
    ensure_finite("l", l)?;
    if b >= 0.0 {
        return Err(GcapError::Domain(format!(
            "lower barrier b must be < 0, got {b}"
        )));
    }
    if l <= 0.0 {
        return Err(GcapError::Domain(format!(
            "upper barrier l must be > 0, got {l}"
        )));
    }
    Ok(())
}

/// Clamps `value` into `[lo, hi]` if it overshoots by less than `slack`.
pub(crate) fn clamp_with_slack(
    value: f64,
    lo: f64,
    hi: f64,
    slack: f64,
    what: &str,
) -> Result<f64> {
    if value < lo {
        if lo - value <= slack {
            Ok(lo)
        } else {
            Err(GcapError::Consistency(format!(
                "{what} = {value:e} falls below {lo} by more than {slack:e}"
            )))
        }
    } else if value > hi {
        if value - hi <= slack {
            Ok(hi)
        } else {
            Err(GcapError::Consistency(format!(
                "{what} = {value:e} exceeds {hi} by more than {slack:e}"
            )))
        }
    } else {
        Ok(value)
    }
}

/// Probability that `sigma_bar * W` started at 0 leaves `(b, l)` by time `t`,
/// as the signed reflection series
/// `sum_i sgn(i) [phi(|2i(l-b) - b| / s) + phi(|2i(l-b) + l| / s)]`, `s = sigma_bar sqrt(t)`.
pub fn two_barrier_series(
    b: f64,
    l: f64,
    t: f64,
    sigma_bar: f64,
    cfg: &SeriesConfig,
) -> Result<f64> {
    two_barrier_series_detailed(b, l, t, sigma_bar, cfg).map(|s| s.value)
}

/// [`two_barrier_series`] with the truncation index and remainder bound.
pub fn two_barrier_series_detailed(
    b: f64,
    l: f64,
    t: f64,
    sigma_bar: f64,
    cfg: &SeriesConfig,
) -> Result<SeriesValue> {
    check_barriers(b, l)?;
    check_volatility("t", t)?;
    check_volatility("sigma_bar", sigma_bar)?;
    cfg.validate()?;

    let width = l - b;
    let scale = sigma_bar * t.sqrt();
    let far = (-b).max(l);
    let term = |c: f64| phi_unchecked(c.abs() / scale);

    let mut sum = term(-b) + term(l);
    let mut bound = f64::INFINITY;
    for i in 1..=cfg.max_terms {
        let shift = 2.0 * i as f64 * width;
        let pair = (term(shift - b) + term(shift + l)) - (term(-shift - b) + term(-shift + l));
        sum += pair;
        // Every omitted argument is at least (2i - 1)(l - b) - max(-b, l).
        bound = 4.0 * phi_unchecked(((2 * i - 1) as f64 * width - far) / scale);
        if pair.abs() < cfg.tol && bound < cfg.tol {
            // Rounding across many O(1) terms can exceed tol when the
            // window is wide.
            let slack = cfg.tol.max(8.0 * i as f64 * f64::EPSILON);
            let value = clamp_with_slack(sum, 0.0, 1.0, slack, "two-barrier series")?;
            return Ok(SeriesValue {
                value,
                terms: i,
                remainder_bound: bound,
            });
        }
    }
    Err(GcapError::Convergence {
        partial_sum: sum,
        bound,
        terms: cfg.max_terms,
    })
}

/// Signed term `c exp(-c^2 / (2 v s)) / sqrt(2 pi v s^3)` with `v = sigma^2`,
/// evaluated in log space so tiny `s` neither overflows nor produces NaN.
#[inline]
fn density_term(c: f64, var: f64, s: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let log_mag =
        c.abs().ln() - c * c / (2.0 * var * s) - 1.5 * s.ln() - 0.5 * var.ln() - LN_SQRT_2PI;
    c.signum() * log_mag.exp()
}

/// Density at time `s` of the first exit of `x + sigma_bar * W` from `(b, l)`.
pub fn hitting_density(
    s: f64,
    x: f64,
    b: f64,
    l: f64,
    sigma_bar: f64,
    cfg: &SeriesConfig,
) -> Result<f64> {
    hitting_density_detailed(s, x, b, l, sigma_bar, cfg).map(|v| v.value)
}

/// [`hitting_density`] with truncation diagnostics.
pub fn hitting_density_detailed(
    s: f64,
    x: f64,
    b: f64,
    l: f64,
    sigma_bar: f64,
    cfg: &SeriesConfig,
) -> Result<SeriesValue> {
    ensure_finite("x", x)?;
    ensure_finite("b", b)?;
    ensure_finite("l", l)?;
    check_volatility("s", s)?;
    check_volatility("sigma_bar", sigma_bar)?;
    cfg.validate()?;
    if !(b < x && x < l) {
        return Err(GcapError::Domain(format!(
            "starting point x = {x} must lie strictly inside ({b}, {l})"
        )));
    }

    let var = sigma_bar * sigma_bar;
    let width = l - b;
    let lo_gap = x - b;
    let hi_gap = l - x;
    let log_prefactor = -sigma_bar.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 1.5 * s.ln();
    let spread = sigma_bar * s.sqrt();

    let mut sum = density_term(lo_gap, var, s) + density_term(hi_gap, var, s);
    let mut bound = f64::INFINITY;
    for i in 1..=cfg.max_terms {
        let shift = 2.0 * i as f64 * width;
        let pair = density_term(shift + lo_gap, var, s)
            + density_term(shift + hi_gap, var, s)
            + density_term(-shift + lo_gap, var, s)
            + density_term(-shift + hi_gap, var, s);
        sum += pair;

        // Omitted |c| are >= (2i + 1)(l - b) on four lattices of spacing
        // 2(l - b); past the mode of c exp(-c^2/2vs) each lattice sum is
        // at most its first term plus the integral of the tail.
        let c0 = (2 * i + 1) as f64 * width;
        if c0 >= spread {
            let log_bound = 4f64.ln() + log_prefactor + (c0 + var * s / (2.0 * width)).ln()
                - c0 * c0 / (2.0 * var * s);
            bound = log_bound.exp();
        }
        if pair.abs() < cfg.tol && bound < cfg.tol {
            let value = clamp_with_slack(sum, 0.0, f64::INFINITY, cfg.tol, "hitting density")?;
            return Ok(SeriesValue {
                value,
                terms: i,
                remainder_bound: bound,
            });
        }
    }
    Err(GcapError::Convergence {
        partial_sum: sum,
        bound,
        terms: cfg.max_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_landmarks() {
        assert_eq!(phi(0.0).unwrap(), 1.0);
        assert!(phi(40.0).unwrap() <= 1e-300);
        assert!((phi(-40.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(phi(f64::NAN).is_err());
        assert!(phi(f64::INFINITY).is_err());
        assert!((phi_prime(0.0).unwrap() + 0.797_884_560_802_865_4).abs() < 1e-15);
    }

    #[test]
    fn phi_second_identity() {
        for x in [0.5, 1.0, 3.0] {
            let r = phi_second(x).unwrap() + x * phi_prime(x).unwrap();
            assert!(r.abs() < 1e-12, "x={x} residual {r}");
        }
    }

    #[test]
    fn series_rejects_bad_barriers() {
        let cfg = SeriesConfig::default();
        assert!(matches!(
            two_barrier_series(0.0, 1.0, 1.0, 1.0, &cfg),
            Err(GcapError::Domain(_))
        ));
        assert!(matches!(
            two_barrier_series(-1.0, 0.0, 1.0, 1.0, &cfg),
            Err(GcapError::Domain(_))
        ));
        assert!(two_barrier_series(-1.0, 1.0, 0.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn series_cap_reports_partial_sum() {
        // A narrow corridor with a long horizon needs many reflections.
        let cfg = SeriesConfig::new(1e-12, 2).unwrap();
        match two_barrier_series(-0.01, 0.01, 1.0, 1.0, &cfg) {
            Err(GcapError::Convergence {
                terms,
                partial_sum,
                bound,
            }) => {
                assert_eq!(terms, 2);
                assert!(partial_sum.is_finite());
                assert!(bound > cfg.tol);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn far_barrier_reduces_to_single_tail() {
        let cfg = SeriesConfig::default();
        let v = two_barrier_series(-50.0, 1.0, 1.0, 1.0, &cfg).unwrap();
        assert!((v - phi(1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn density_domain() {
        let cfg = SeriesConfig::default();
        assert!(hitting_density(1.0, 1.0, -1.0, 1.0, 1.0, &cfg).is_err());
        assert!(hitting_density(0.0, 0.0, -1.0, 1.0, 1.0, &cfg).is_err());
        assert_eq!(
            hitting_density(1e-300, 0.0, -1.0, 1.0, 1.0, &cfg).unwrap(),
            0.0
        );
    }

    #[test]
    fn density_reflection_symmetry() {
        let cfg = SeriesConfig::default();
        for &(s, x, b, l) in &[
            (0.3, 0.2, -1.0, 1.5),
            (2.0, -0.7, -0.9, 0.4),
            (0.05, 0.0, -0.3, 0.3),
        ] {
            let a = hitting_density(s, x, b, l, 1.3, &cfg).unwrap();
            let m = hitting_density(s, -x, -l, -b, 1.3, &cfg).unwrap();
            assert!((a - m).abs() <= 1e-14 * a.abs().max(1.0), "{a} vs {m}");
        }
    }
}
