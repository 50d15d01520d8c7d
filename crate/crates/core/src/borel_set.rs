//! Finite unions of intervals and isolated points on the real line.
//!
//! The terminal-event capacity depends on a set `A` only through
//! `rho(A) = inf |x|`, `rho(A+) = inf {x in A, x >= 0}` and
//! `rho(A-) = inf {-x : x in A, x <= 0}`. Endpoint openness is kept for
//! membership and merging but never changes an infimum.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{GcapError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        let iv = Self {
            lo,
            hi,
            lo_closed,
            hi_closed,
        };
        iv.validate()?;
        Ok(iv.canonical())
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false, false)
    }

    /// `[a, inf)`.
    pub fn ray_up(a: f64) -> Result<Self> {
        Self::new(a, f64::INFINITY, true, false)
    }

    /// `(-inf, a]`.
    pub fn ray_down(a: f64) -> Result<Self> {
        Self::new(f64::NEG_INFINITY, a, false, true)
    }

    fn validate(&self) -> Result<()> {
        if self.lo.is_nan() || self.hi.is_nan() {
            return Err(GcapError::Validation("interval endpoint is NaN".into()));
        }
        if self.lo == f64::INFINITY || self.hi == f64::NEG_INFINITY {
            return Err(GcapError::Validation(format!(
                "interval ({}, {}) has an endpoint on the wrong side of infinity",
                self.lo, self.hi
            )));
        }
        if self.lo > self.hi {
            return Err(GcapError::Validation(format!(
                "interval lower endpoint {} exceeds upper endpoint {}",
                self.lo, self.hi
            )));
        }
        if self.lo == self.hi && !(self.lo_closed && self.hi_closed) {
            return Err(GcapError::Validation(format!(
                "degenerate interval at {} must be closed on both sides",
                self.lo
            )));
        }
        Ok(())
    }

    // Infinite endpoints are never members.
    fn canonical(mut self) -> Self {
        if self.lo.is_infinite() {
            self.lo_closed = false;
        }
        if self.hi.is_infinite() {
            self.hi_closed = false;
        }
        self
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = x > self.lo || (self.lo_closed && x == self.lo);
        let below = x < self.hi || (self.hi_closed && x == self.hi);
        above && below
    }

    fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// A finite union of intervals and isolated points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BorelSetSpec {
    pub intervals: Vec<Interval>,
    pub points: Vec<f64>,
}

impl BorelSetSpec {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_points(points: &[f64]) -> Self {
        Self {
            intervals: Vec::new(),
            points: points.to_vec(),
        }
    }

    pub fn from_intervals(intervals: Vec<Interval>) -> Self {
        Self {
            intervals,
            points: Vec::new(),
        }
    }

    /// `(-inf, b] U [l, inf)`.
    pub fn outside(b: f64, l: f64) -> Result<Self> {
        Ok(Self::from_intervals(vec![
            Interval::ray_down(b)?,
            Interval::ray_up(l)?,
        ]))
    }

    pub fn with_points(mut self, points: &[f64]) -> Self {
        self.points.extend_from_slice(points);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty() && self.points.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.points.contains(&x) || self.intervals.iter().any(|iv| iv.contains(x))
    }

    /// Union as an unnormalized spec.
    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.intervals.extend_from_slice(&other.intervals);
        out.points.extend_from_slice(&other.points);
        out
    }

    pub fn validate(&self) -> Result<()> {
        for iv in &self.intervals {
            iv.validate()?;
        }
        for &p in &self.points {
            if !p.is_finite() {
                return Err(GcapError::Validation(format!(
                    "isolated point must be finite, got {p}"
                )));
            }
        }
        Ok(())
    }

    /// Sorted, pairwise-disjoint representation with every point outside
    /// all intervals. Idempotent.
    pub fn normalize(&self) -> Result<Self> {
        self.validate()?;
        let mut items: Vec<Interval> = self
            .intervals
            .iter()
            .map(|iv| iv.canonical())
            .chain(self.points.iter().map(|&p| Interval {
                lo: p,
                hi: p,
                lo_closed: true,
                hi_closed: true,
            }))
            .collect();
        // Closed lower endpoints sort first so a tie keeps the larger piece.
        items.sort_by(|a, b| match a.lo.total_cmp(&b.lo) {
            Ordering::Equal => b.lo_closed.cmp(&a.lo_closed),
            ord => ord,
        });

        let mut merged: Vec<Interval> = Vec::with_capacity(items.len());
        for next in items {
            if let Some(cur) = merged.last_mut() {
                let touches =
                    next.lo < cur.hi || (next.lo == cur.hi && (cur.hi_closed || next.lo_closed));
                if touches {
                    match next.hi.total_cmp(&cur.hi) {
                        Ordering::Greater => {
                            cur.hi = next.hi;
                            cur.hi_closed = next.hi_closed;
                        }
                        Ordering::Equal => cur.hi_closed |= next.hi_closed,
                        Ordering::Less => {}
                    }
                    continue;
                }
            }
            merged.push(next);
        }

        let (points, intervals): (Vec<_>, Vec<_>) =
            merged.into_iter().partition(Interval::is_point);
        Ok(Self {
            intervals,
            points: points.into_iter().map(|p| p.lo).collect(),
        })
    }

    pub fn classify(&self) -> Result<SetClassification> {
        self.validate()?;
        let mut rho_plus = f64::INFINITY;
        let mut rho_minus = f64::INFINITY;
        let mut has_neg = false;
        let mut has_pos = false;
        let mut nonempty = false;

        for iv in self.intervals.iter().map(|iv| iv.canonical()) {
            nonempty = true;
            has_neg |= iv.lo < 0.0;
            has_pos |= iv.hi > 0.0;
            if iv.hi > 0.0 || (iv.hi == 0.0 && iv.hi_closed) {
                rho_plus = rho_plus.min(iv.lo.max(0.0));
            }
            if iv.lo < 0.0 || (iv.lo == 0.0 && iv.lo_closed) {
                rho_minus = rho_minus.min((-iv.hi).max(0.0));
            }
        }
        for &p in &self.points {
            nonempty = true;
            has_neg |= p < 0.0;
            has_pos |= p > 0.0;
            if p >= 0.0 {
                rho_plus = rho_plus.min(p);
            }
            if p <= 0.0 {
                rho_minus = rho_minus.min(-p);
            }
        }

        if !nonempty {
            return Ok(SetClassification {
                case_tag: CaseTag::Empty,
                rho: f64::INFINITY,
                rho_plus,
                rho_minus,
                side: Side::None,
            });
        }
        let rho = rho_plus.min(rho_minus);
        let side = match (has_neg, has_pos) {
            (false, _) => Side::Nonneg,
            (true, false) => Side::Nonpos,
            (true, true) => Side::Mixed,
        };
        let case_tag = if rho == 0.0 {
            CaseTag::FullIfRhoZero
        } else if rho_plus.is_infinite() || rho_minus.is_infinite() {
            CaseTag::OneSided
        } else {
            CaseTag::TwoSided
        };
        Ok(SetClassification {
            case_tag,
            rho,
            rho_plus,
            rho_minus,
            side,
        })
    }

    /// Parses the CLI encoding
    /// `{"intervals": [[lo, hi, "closed|open", "closed|open"], ...], "points": [x, ...]}`
    /// where unbounded endpoints are the strings `"-inf"` / `"inf"`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| GcapError::Validation(format!("set JSON: {e}")))?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| GcapError::Validation("set JSON must be an object".into()))?;
        for key in obj.keys() {
            if key != "intervals" && key != "points" {
                return Err(GcapError::Validation(format!(
                    "unknown set JSON key '{key}'"
                )));
            }
        }
        let mut spec = Self::empty();
        if let Some(ivs) = obj.get("intervals") {
            let ivs = ivs
                .as_array()
                .ok_or_else(|| GcapError::Validation("'intervals' must be an array".into()))?;
            for entry in ivs {
                let parts = entry.as_array().filter(|a| a.len() == 4).ok_or_else(|| {
                    GcapError::Validation(format!("interval entry {entry} must have 4 elements"))
                })?;
                spec.intervals.push(Interval::new(
                    parse_endpoint(&parts[0])?,
                    parse_endpoint(&parts[1])?,
                    parse_closedness(&parts[2])?,
                    parse_closedness(&parts[3])?,
                )?);
            }
        }
        if let Some(pts) = obj.get("points") {
            let pts = pts
                .as_array()
                .ok_or_else(|| GcapError::Validation("'points' must be an array".into()))?;
            for p in pts {
                let x = p
                    .as_f64()
                    .ok_or_else(|| GcapError::Validation(format!("point {p} is not a number")))?;
                spec.points.push(x);
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Value {
        let closedness = |c: bool| if c { "closed" } else { "open" };
        json!({
            "intervals": self.intervals.iter().map(|iv| json!([
                endpoint_json(iv.lo),
                endpoint_json(iv.hi),
                closedness(iv.lo_closed),
                closedness(iv.hi_closed),
            ])).collect::<Vec<_>>(),
            "points": self.points,
        })
    }
}

fn parse_endpoint(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| GcapError::Validation(format!("endpoint {n} is not representable"))),
        Value::String(s) => match s.as_str() {
            "-inf" => Ok(f64::NEG_INFINITY),
            "inf" | "+inf" => Ok(f64::INFINITY),
            other => Err(GcapError::Validation(format!(
                "unknown endpoint sentinel '{other}'"
            ))),
        },
        other => Err(GcapError::Validation(format!(
            "endpoint {other} must be a number or \"-inf\"/\"inf\""
        ))),
    }
}

fn parse_closedness(v: &Value) -> Result<bool> {
    match v.as_str() {
        Some("closed") => Ok(true),
        Some("open") => Ok(false),
        _ => Err(GcapError::Validation(format!(
            "endpoint flag {v} must be \"closed\" or \"open\""
        ))),
    }
}

pub(crate) fn endpoint_json(x: f64) -> Value {
    if x == f64::INFINITY {
        json!("inf")
    } else if x == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!(x)
    }
}

fn serialize_extended<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    endpoint_json(*x).serialize(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaseTag {
    /// `rho(A) = 0`: the capacity is 1.
    FullIfRhoZero,
    /// `A` lies on one side of the origin and avoids it.
    OneSided,
    /// `A` has points on both sides and avoids a neighbourhood of the origin.
    TwoSided,
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Nonneg,
    Nonpos,
    Mixed,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetClassification {
    pub case_tag: CaseTag,
    #[serde(serialize_with = "serialize_extended")]
    pub rho: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub rho_plus: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub rho_minus: f64,
    pub side: Side,
}
