//! Bounded Lipschitz payoffs used by the experiments and the command line.

use std::fmt;
use std::str::FromStr;

use crate::capacity::{u_n, CapacityParams};
use crate::error::{GcapError, Result};

/// `h_n(x) = max(0, 1 - n |x - x0|)`: a tent of height 1 and half-width `1/n`.
pub fn tent(x0: f64, n: f64) -> impl Fn(f64) -> f64 + Copy + Send + Sync {
    move |x| (1.0 - n * (x - x0).abs()).max(0.0)
}

/// Continuous approximation of the indicator of `(-inf, b] U [l, inf)`:
/// 1 outside `(b, l)`, falling linearly to 0 within distance `1/k`.
/// Pointwise nonincreasing in `k`.
pub fn outside_ramp(b: f64, l: f64, k: f64) -> impl Fn(f64) -> f64 + Copy + Send + Sync {
    move |x| {
        if x <= b || x >= l {
            1.0
        } else {
            (1.0 - k * (x - b).min(l - x)).max(0.0)
        }
    }
}

/// Payoffs addressable by name from the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedPayoff {
    /// `const:C`
    Constant(f64),
    /// `neg-abs`: `-|x|`
    NegAbs,
    /// `clipped-square:CAP`: `min(x^2, CAP)`
    ClippedSquare(f64),
    /// `clip:LO:HI`: `x` clamped to `[LO, HI]`
    Clip(f64, f64),
    /// `tent:X0:N`
    Tent { x0: f64, n: f64 },
    /// `ramp-outside:B:L:K`
    RampOutside { b: f64, l: f64, k: f64 },
    /// `un:N:B:L`: the closed-form `u_n(0, .)`
    UnInitial { n: u64, b: f64, l: f64 },
}

impl NamedPayoff {
    pub fn eval(&self, x: f64, p: &CapacityParams) -> Result<f64> {
        Ok(match *self {
            NamedPayoff::Constant(c) => c,
            NamedPayoff::NegAbs => -x.abs(),
            NamedPayoff::ClippedSquare(cap) => (x * x).min(cap),
            NamedPayoff::Clip(lo, hi) => x.clamp(lo, hi),
            NamedPayoff::Tent { x0, n } => tent(x0, n)(x),
            NamedPayoff::RampOutside { b, l, k } => outside_ramp(b, l, k)(x),
            NamedPayoff::UnInitial { n, b, l } => u_n(n, 0.0, x, b, l, p)?,
        })
    }

    /// Interval outside of which the payoff is constant or of no interest,
    /// used to size padded grids.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            NamedPayoff::Constant(_) | NamedPayoff::NegAbs => (-1.0, 1.0),
            NamedPayoff::ClippedSquare(cap) => (-cap.sqrt(), cap.sqrt()),
            NamedPayoff::Clip(lo, hi) => (lo, hi),
            NamedPayoff::Tent { x0, n } => (x0 - 1.0 / n, x0 + 1.0 / n),
            NamedPayoff::RampOutside { b, l, .. } | NamedPayoff::UnInitial { b, l, .. } => (b, l),
        }
    }
}

impl fmt::Display for NamedPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedPayoff::Constant(c) => write!(f, "const:{c}"),
            NamedPayoff::NegAbs => write!(f, "neg-abs"),
            NamedPayoff::ClippedSquare(cap) => write!(f, "clipped-square:{cap}"),
            NamedPayoff::Clip(lo, hi) => write!(f, "clip:{lo}:{hi}"),
            NamedPayoff::Tent { x0, n } => write!(f, "tent:{x0}:{n}"),
            NamedPayoff::RampOutside { b, l, k } => write!(f, "ramp-outside:{b}:{l}:{k}"),
            NamedPayoff::UnInitial { n, b, l } => write!(f, "un:{n}:{b}:{l}"),
        }
    }
}

impl FromStr for NamedPayoff {
    type Err = GcapError;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<f64> = parts
            .map(|a| {
                a.trim().parse::<f64>().map_err(|_| {
                    GcapError::Validation(format!("payoff argument '{a}' is not a number"))
                })
            })
            .collect::<Result<_>>()?;
        let want = |k: usize| -> Result<()> {
            if args.len() == k {
                Ok(())
            } else {
                Err(GcapError::Validation(format!(
                    "payoff '{name}' takes {k} argument(s), got {}",
                    args.len()
                )))
            }
        };
        let payoff = match name {
            "const" => {
                want(1)?;
                NamedPayoff::Constant(args[0])
            }
            "neg-abs" => {
                want(0)?;
                NamedPayoff::NegAbs
            }
            "clipped-square" => {
                want(1)?;
                NamedPayoff::ClippedSquare(args[0])
            }
            "clip" => {
                want(2)?;
                NamedPayoff::Clip(args[0], args[1])
            }
            "tent" => {
                want(2)?;
                NamedPayoff::Tent {
                    x0: args[0],
                    n: args[1],
                }
            }
            "ramp-outside" => {
                want(3)?;
                NamedPayoff::RampOutside {
                    b: args[0],
                    l: args[1],
                    k: args[2],
                }
            }
            "un" => {
                want(3)?;
                if args[0] < 1.0 || args[0].fract() != 0.0 {
                    return Err(GcapError::Validation(format!(
                        "u_n index must be a positive integer, got {}",
                        args[0]
                    )));
                }
                NamedPayoff::UnInitial {
                    n: args[0] as u64,
                    b: args[1],
                    l: args[2],
                }
            }
            other => return Err(GcapError::Validation(format!("unknown payoff '{other}'"))),
        };
        if !args.iter().all(|a| a.is_finite()) {
            return Err(GcapError::Validation(
                "payoff arguments must be finite".into(),
            ));
        }
        match payoff {
            NamedPayoff::ClippedSquare(cap) if cap < 0.0 => Err(GcapError::Validation(
                "clipped-square cap must be nonnegative".into(),
            )),
            NamedPayoff::Clip(lo, hi) if lo > hi => {
                Err(GcapError::Validation("clip needs LO <= HI".into()))
            }
            NamedPayoff::Tent { n, .. } if n <= 0.0 => {
                Err(GcapError::Validation("tent needs N > 0".into()))
            }
            NamedPayoff::RampOutside { b, l, k } if !(b < l && k > 0.0) => Err(
                GcapError::Validation("ramp-outside needs B < L and K > 0".into()),
            ),
            _ => Ok(payoff),
        }
    }
}
