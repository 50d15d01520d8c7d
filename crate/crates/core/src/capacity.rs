//! Closed-form capacities `c({B_T in A})` for a G-Brownian motion whose
//! volatility ranges over `[0, sigma_bar]`.
//!
//! * `rho(A) = 0`: the capacity is 1.
//! * `A` on one side of the origin: `phi(rho(A) / (sigma_bar sqrt T))`.
//! * otherwise: the two-barrier exit probability for barriers
//!   `-rho(A-)` and `rho(A+)`.
//!
//! Every two-sided set is evaluated through the same two-point formula, so
//! `c({b, l}) = c((-inf, b] U [l, inf))` holds bit for bit.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::borel_set::{BorelSetSpec, CaseTag, SetClassification};
use crate::error::{ensure_finite, GcapError, Result};
use crate::special_fn::{
    phi_unchecked, two_barrier_series, two_barrier_series_detailed, SeriesConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityParams {
    pub sigma_bar: f64,
    pub sigma_under: f64,
    pub horizon_t: f64,
    pub series: SeriesConfig,
}

impl CapacityParams {
    pub fn new(
        sigma_bar: f64,
        sigma_under: f64,
        horizon_t: f64,
        series: SeriesConfig,
    ) -> Result<Self> {
        let p = Self {
            sigma_bar,
            sigma_under,
            horizon_t,
            series,
        };
        p.validate()?;
        Ok(p)
    }

    /// `sigma_under = 0` with the default series tolerance.
    pub fn degenerate(sigma_bar: f64, horizon_t: f64) -> Result<Self> {
        Self::new(sigma_bar, 0.0, horizon_t, SeriesConfig::default())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_bar > 0.0 && self.sigma_bar.is_finite()) {
            return Err(GcapError::Validation(format!(
                "sigma_bar must be positive and finite, got {}",
                self.sigma_bar
            )));
        }
        if !(self.sigma_under >= 0.0 && self.sigma_under <= self.sigma_bar) {
            return Err(GcapError::Validation(format!(
                "sigma_under must lie in [0, sigma_bar = {}], got {}",
                self.sigma_bar, self.sigma_under
            )));
        }
        if !(self.horizon_t > 0.0 && self.horizon_t.is_finite()) {
            return Err(GcapError::Validation(format!(
                "horizon T must be positive and finite, got {}",
                self.horizon_t
            )));
        }
        self.series.validate()
    }

    pub fn with_horizon(&self, horizon_t: f64) -> Result<Self> {
        Self::new(self.sigma_bar, self.sigma_under, horizon_t, self.series)
    }

    /// The nonlinearity `G(a) = (sigma_bar^2 a+ - sigma_under^2 a-) / 2`.
    #[inline]
    pub fn g(&self, a: f64) -> f64 {
        if a >= 0.0 {
            0.5 * self.sigma_bar * self.sigma_bar * a
        } else {
            0.5 * self.sigma_under * self.sigma_under * a
        }
    }

    fn require_degenerate(&self) -> Result<()> {
        self.validate()?;
        if self.sigma_under != 0.0 {
            return Err(GcapError::UnsupportedRegime(format!(
                "closed-form capacities need sigma_under = 0, got {}",
                self.sigma_under
            )));
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.sigma_bar * self.horizon_t.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityResult {
    pub value: f64,
    pub classification: SetClassification,
    /// Reflection index at which the series was truncated (two-sided sets only).
    pub truncation_terms: Option<usize>,
    /// Set when the input set was empty and 0 was returned by convention.
    pub empty_set: bool,
}

/// `c({B_T in A})` for a finite union of intervals and points.
pub fn capacity_of(spec: &BorelSetSpec, p: &CapacityParams) -> Result<CapacityResult> {
    p.require_degenerate()?;
    let classification = spec.classify()?;
    let mut truncation_terms = None;
    let value = match classification.case_tag {
        CaseTag::Empty => {
            warn!("capacity of the empty set requested; returning 0");
            0.0
        }
        CaseTag::FullIfRhoZero => 1.0,
        CaseTag::OneSided => phi_unchecked(classification.rho / p.scale()),
        CaseTag::TwoSided => {
            let s = two_barrier_series_detailed(
                -classification.rho_minus,
                classification.rho_plus,
                p.horizon_t,
                p.sigma_bar,
                &p.series,
            )?;
            truncation_terms = Some(s.terms);
            s.value
        }
    };
    Ok(CapacityResult {
        value,
        classification,
        truncation_terms,
        empty_set: classification.case_tag == CaseTag::Empty,
    })
}

/// `c({B_T = a}) = phi(|a| / (sigma_bar sqrt T))`.
pub fn capacity_point(a: f64, p: &CapacityParams) -> Result<f64> {
    p.require_degenerate()?;
    ensure_finite("a", a)?;
    Ok(phi_unchecked(a.abs() / p.scale()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayDirection {
    /// `{B_T >= |a|}`
    AtLeast,
    /// `{B_T <= -|a|}`
    AtMost,
}

/// `c({B_T >= |a|}) = c({B_T <= -|a|}) = phi(|a| / (sigma_bar sqrt T))`.
pub fn capacity_ray(a: f64, direction: RayDirection, p: &CapacityParams) -> Result<f64> {
    p.require_degenerate()?;
    ensure_finite("a", a)?;
    let spec = match direction {
        RayDirection::AtLeast => {
            BorelSetSpec::from_intervals(vec![crate::borel_set::Interval::ray_up(a.abs())?])
        }
        RayDirection::AtMost => {
            BorelSetSpec::from_intervals(vec![crate::borel_set::Interval::ray_down(-a.abs())?])
        }
    };
    capacity_of(&spec, p).map(|r| r.value)
}

/// The smoothed barrier function
///
/// `u_n(t, x) = sum_i sgn(i) [phi(|2i(l-b) + x - b| / s) + phi(|2i(l-b) + l - x| / s)]` on `(b, l)`,
/// `u_n(t, x) = phi(min(|b - x|, |l - x|) / s)` elsewhere,
///
/// with `s = sigma_bar sqrt(1/n + t)`. It solves the degenerate G-heat
/// equation and decreases to the indicator of `{b, l}` at `t = 0` as `n` grows.
pub fn u_n(n: u64, t: f64, x: f64, b: f64, l: f64, p: &CapacityParams) -> Result<f64> {
    p.require_degenerate()?;
    if n < 1 {
        return Err(GcapError::Domain("n must be at least 1".into()));
    }
    ensure_finite("x", x)?;
    ensure_finite("t", t)?;
    if t < 0.0 {
        return Err(GcapError::Domain(format!("t must be nonnegative, got {t}")));
    }
    if !(b < 0.0 && l > 0.0) {
        return Err(GcapError::Domain(format!(
            "barriers must satisfy b < 0 < l, got b = {b}, l = {l}"
        )));
    }
    let effective_t = 1.0 / n as f64 + t;
    if b < x && x < l {
        // On (b, l) the series is the exit probability from (b - x, l - x).
        two_barrier_series(b - x, l - x, effective_t, p.sigma_bar, &p.series)
    } else {
        let gap = (b - x).abs().min((l - x).abs());
        Ok(phi_unchecked(gap / (p.sigma_bar * effective_t.sqrt())))
    }
}
