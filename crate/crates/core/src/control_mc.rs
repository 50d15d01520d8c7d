//! Monte Carlo over controlled martingales `X_t = int_0^t v_s dW_s` with
//! `v_s in [sigma_under, sigma_bar]`.
//!
//! Each path owns two generators keyed by `(seed, path index)`: one for the
//! Gaussian increments and one for bridge-crossing uniforms. Paths are
//! grouped in fixed-size blocks whose statistics are merged in block order,
//! so estimates are bit-identical for any thread count, and switching the
//! bridge correction on or off leaves the Gaussian increments unchanged.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::capacity::CapacityParams;
use crate::error::{GcapError, Result};

const BLOCK: u64 = 1024;

// Bridge crossing probabilities below exp(-40) are skipped.
const MAX_BRIDGE_EXPONENT: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: u64,
    pub dt: f64,
    pub seed: u64,
    pub bridge_correction: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 1_000_000,
            dt: 1e-4,
            seed: 20_240_501,
            bridge_correction: true,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 {
            return Err(GcapError::Validation("n_paths must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(GcapError::Validation(format!(
                "Monte Carlo dt must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// `v_s = sigma` throughout.
    Constant { sigma: f64 },
    /// `v_s = sigma_bar` until the first exit from `(b, l)`, then 0.
    BangBangBarrier { b: f64, l: f64 },
}

impl Strategy {
    pub fn validate(&self, p: &CapacityParams) -> Result<()> {
        match *self {
            Strategy::Constant { sigma } => {
                if !(sigma >= p.sigma_under && sigma <= p.sigma_bar) {
                    return Err(GcapError::Validation(format!(
                        "constant volatility {sigma} outside [{}, {}]",
                        p.sigma_under, p.sigma_bar
                    )));
                }
            }
            Strategy::BangBangBarrier { b, l } => {
                if !(b < 0.0 && l > 0.0 && b.is_finite() && l.is_finite()) {
                    return Err(GcapError::Validation(format!(
                        "bang-bang barriers must satisfy b < 0 < l, got b = {b}, l = {l}"
                    )));
                }
                if p.sigma_under != 0.0 {
                    return Err(GcapError::Validation(format!(
                        "bang-bang control switches to volatility 0, outside [{}, {}]",
                        p.sigma_under, p.sigma_bar
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
}

impl McEstimate {
    /// Result record `{mean, std_error, n_paths, seed, dt, strategy}`.
    pub fn record(&self, cfg: &McConfig, strategy: &Strategy) -> Value {
        json!({
            "mean": self.mean,
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "seed": cfg.seed,
            "dt": cfg.dt,
            "strategy": strategy,
        })
    }
}

/// Running (count, mean, M2) merged with Chan's pairwise update.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Moments { count, mean, m2 }
    }

    fn estimate(&self) -> McEstimate {
        let var = if self.count > 1 {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.count as f64).sqrt(),
            n_paths: self.count,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for substream `stream` of path `path`.
fn path_rng(seed: u64, path: u64, stream: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(splitmix64(
        seed ^ splitmix64(path.wrapping_mul(2).wrapping_add(stream)),
    ))
}

fn run_paths<F>(cfg: &McConfig, per_path: F) -> McEstimate
where
    F: Fn(u64) -> f64 + Sync,
{
    let blocks = cfg.n_paths.div_ceil(BLOCK);
    let partials: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut m = Moments::default();
            for path in blk * BLOCK..((blk + 1) * BLOCK).min(cfg.n_paths) {
                m.push(per_path(path));
            }
            m
        })
        .collect();
    partials
        .into_iter()
        .fold(Moments::default(), Moments::merge)
        .estimate()
}

#[derive(Debug, Clone, Copy)]
struct BarrierPath {
    b: f64,
    l: f64,
    sigma: f64,
    steps: usize,
    dt: f64,
    bridge: bool,
}

impl BarrierPath {
    /// Terminal value of the stopped path and whether a barrier was reached.
    fn run(&self, seed: u64, path: u64) -> (f64, bool) {
        let mut normals = path_rng(seed, path, 0);
        let mut uniforms = if self.bridge {
            Some(path_rng(seed, path, 1))
        } else {
            None
        };
        let sd = self.sigma * self.dt.sqrt();
        let scale = 2.0 / (sd * sd);
        let mut x = 0.0;
        for _ in 0..self.steps {
            let z: f64 = normals.sample(StandardNormal);
            let y = x + sd * z;
            if y >= self.l {
                return (self.l, true);
            }
            if y <= self.b {
                return (self.b, true);
            }
            if let Some(u_rng) = uniforms.as_mut() {
                let e_up = scale * (self.l - x) * (self.l - y);
                let e_dn = scale * (x - self.b) * (y - self.b);
                if e_up < MAX_BRIDGE_EXPONENT || e_dn < MAX_BRIDGE_EXPONENT {
                    let p_up = (-e_up).exp();
                    let p_dn = (-e_dn).exp();
                    let u: f64 = u_rng.random();
                    if u < p_up {
                        return (self.l, true);
                    }
                    if u < p_up + (1.0 - p_up) * p_dn {
                        return (self.b, true);
                    }
                }
            }
            x = y;
        }
        (x, false)
    }
}

fn euler_grid(horizon: f64, dt: f64) -> (usize, f64) {
    let steps = ((horizon / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (steps, horizon / steps as f64)
}

/// Probability that `sigma_bar W` leaves `(b, l)` before `p.horizon_t`,
/// estimated with the bang-bang control (paths frozen at the barrier).
pub fn simulate_hitting_probability(
    b: f64,
    l: f64,
    p: &CapacityParams,
    cfg: &McConfig,
) -> Result<McEstimate> {
    p.validate()?;
    cfg.validate()?;
    if !(b < 0.0 && l > 0.0 && b.is_finite() && l.is_finite()) {
        return Err(GcapError::Domain(format!(
            "barriers must satisfy b < 0 < l, got b = {b}, l = {l}"
        )));
    }
    let near = (-b).min(l) / p.sigma_bar;
    if cfg.dt > near * near / 100.0 {
        warn!(
            "Monte Carlo dt = {} is coarse relative to the nearest barrier ({}); expect discretization bias",
            cfg.dt,
            (-b).min(l)
        );
    }
    let (steps, dt) = euler_grid(p.horizon_t, cfg.dt);
    let path = BarrierPath {
        b,
        l,
        sigma: p.sigma_bar,
        steps,
        dt,
        bridge: cfg.bridge_correction,
    };
    Ok(run_paths(cfg, |i| {
        if path.run(cfg.seed, i).1 {
            1.0
        } else {
            0.0
        }
    }))
}

/// `E[payoff(X_horizon)]` under one admissible volatility strategy.
pub fn simulate_payoff<F>(
    strategy: &Strategy,
    payoff: F,
    horizon: f64,
    p: &CapacityParams,
    cfg: &McConfig,
) -> Result<McEstimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    p.validate()?;
    cfg.validate()?;
    strategy.validate(p)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(GcapError::Domain(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let est = match *strategy {
        Strategy::Constant { sigma } => {
            // The terminal law is exactly N(0, sigma^2 horizon).
            let sd = sigma * horizon.sqrt();
            run_paths(cfg, |i| {
                let z: f64 = path_rng(cfg.seed, i, 0).sample(StandardNormal);
                payoff(sd * z)
            })
        }
        Strategy::BangBangBarrier { b, l } => {
            let (steps, dt) = euler_grid(horizon, cfg.dt);
            let path = BarrierPath {
                b,
                l,
                sigma: p.sigma_bar,
                steps,
                dt,
                bridge: cfg.bridge_correction,
            };
            run_paths(cfg, |i| payoff(path.run(cfg.seed, i).0))
        }
    };
    Ok(est)
}
