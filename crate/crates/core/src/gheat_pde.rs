//! Explicit finite differences for the G-heat equation
//! `du/dt = G(d2u/dx2)`, `G(a) = (sigma_bar^2 a+ - sigma_under^2 a-) / 2`,
//! and the G-expectation of payoffs built from it.
//!
//! The update `u_j <- u_j + dt G(D2 u_j)` with the central second difference
//! is monotone whenever `sigma_bar^2 dt <= dx^2`, so the discrete solution
//! obeys comparison, stays inside the range of the initial data, and is
//! subadditive and positively homogeneous in the initial data up to
//! rounding. Constants are reproduced exactly.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::capacity::CapacityParams;
use crate::error::{ensure_finite, GcapError, Result};

/// Number of standard deviations of padding added around a payoff's support.
pub const PADDING_STD_DEVS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Boundary nodes keep their initial values.
    DirichletInitial,
    /// Boundary nodes are pinned to the given values at every level.
    DirichletFixed { left: f64, right: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
    pub boundary: Boundary,
    /// Time levels kept in a [`GridSolution`] (first and last included).
    pub snapshots: usize,
}

impl GridConfig {
    pub fn new(x_min: f64, x_max: f64, dx: f64, dt: f64, boundary: Boundary) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            dx,
            dt,
            boundary,
            snapshots: 11,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid on `[x_min, x_max]` with `dt = safety * dx^2 / sigma_bar^2`.
    pub fn stable(x_min: f64, x_max: f64, dx: f64, sigma_bar: f64, safety: f64) -> Result<Self> {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(GcapError::Config(format!(
                "safety factor must lie in (0, 1], got {safety}"
            )));
        }
        if !(sigma_bar > 0.0 && sigma_bar.is_finite()) {
            return Err(GcapError::Config(format!(
                "sigma_bar must be positive, got {sigma_bar}"
            )));
        }
        Self::new(
            x_min,
            x_max,
            dx,
            safety * dx * dx / (sigma_bar * sigma_bar),
            Boundary::DirichletInitial,
        )
    }

    /// Grid covering `[support_lo, support_hi]` (and the origin) padded by
    /// six standard deviations of `sigma_bar W_horizon`, with endpoints
    /// snapped outward to multiples of `dx` so the origin is a node.
    pub fn padded(
        support_lo: f64,
        support_hi: f64,
        sigma_bar: f64,
        horizon: f64,
        dx: f64,
        safety: f64,
    ) -> Result<Self> {
        ensure_finite("support_lo", support_lo)?;
        ensure_finite("support_hi", support_hi)?;
        ensure_finite("horizon", horizon)?;
        let pad = PADDING_STD_DEVS * sigma_bar * horizon.max(0.0).sqrt();
        let lo = support_lo.min(0.0) - pad;
        let hi = support_hi.max(0.0) + pad;
        let x_min = (lo / dx).floor().min(-1.0) * dx;
        let x_max = (hi / dx).ceil().max(1.0) * dx;
        Self::stable(x_min, x_max, dx, sigma_bar, safety)
    }

    pub fn with_snapshots(mut self, snapshots: usize) -> Self {
        self.snapshots = snapshots.max(2);
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("x_min", self.x_min),
            ("x_max", self.x_max),
            ("dx", self.dx),
            ("dt", self.dt),
        ] {
            if !v.is_finite() {
                return Err(GcapError::Config(format!("{name} must be finite, got {v}")));
            }
        }
        if !(self.x_min < 0.0 && 0.0 < self.x_max) {
            return Err(GcapError::Config(format!(
                "domain [{}, {}] must contain the origin in its interior",
                self.x_min, self.x_max
            )));
        }
        if !(self.dx > 0.0 && self.dt > 0.0) {
            return Err(GcapError::Config("dx and dt must be positive".into()));
        }
        if self.node_count() < 3 {
            return Err(GcapError::Config("grid needs at least 3 nodes".into()));
        }
        if let Boundary::DirichletFixed { left, right } = self.boundary {
            if !(left.is_finite() && right.is_finite()) {
                return Err(GcapError::Config(
                    "fixed boundary values must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        ((self.x_max - self.x_min) / self.dx).round() as usize + 1
    }

    /// Node coordinates. When `x_min` is an integer multiple of `dx` the
    /// nodes are exact multiples `k dx`, so the origin is hit exactly.
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.node_count();
        let k0 = self.x_min / self.dx;
        if (k0 - k0.round()).abs() < 1e-9 {
            let k0 = k0.round() as i64;
            (0..n).map(|j| (k0 + j as i64) as f64 * self.dx).collect()
        } else {
            (0..n).map(|j| self.x_min + j as f64 * self.dx).collect()
        }
    }

    /// Checks the monotonicity bound and returns `(steps, effective dt)`
    /// with `dt` shrunk so that `steps * dt = horizon`.
    pub fn time_steps(&self, horizon: f64, p: &CapacityParams) -> Result<(usize, f64)> {
        self.validate()?;
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(GcapError::Config(format!(
                "horizon must be nonnegative, got {horizon}"
            )));
        }
        let limit = self.dx * self.dx / (p.sigma_bar * p.sigma_bar);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(GcapError::Config(format!(
                "dt = {:e} violates the stability bound dx^2 / sigma_bar^2 = {limit:e}",
                self.dt
            )));
        }
        if horizon == 0.0 {
            return Ok((0, self.dt));
        }
        let steps = ((horizon / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok((steps, horizon / steps as f64))
    }
}

/// Numerical solution sampled at a subset of time levels.
#[derive(Debug, Clone, Serialize)]
pub struct GridSolution {
    pub config: GridConfig,
    /// Time step actually used.
    pub dt_used: f64,
    pub steps: usize,
    pub nodes: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[k][j] = u(times[k], nodes[j])`.
    pub values: Vec<Vec<f64>>,
}

impl GridSolution {
    pub fn final_values(&self) -> &[f64] {
        self.values.last().expect("solution has at least one level")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("solution has at least one level")
    }

    /// Linear interpolation of the final level at `x`.
    pub fn value_at(&self, x: f64) -> f64 {
        interpolate(&self.config, self.final_values(), x)
    }

    pub fn value_at_level(&self, level: usize, x: f64) -> f64 {
        interpolate(&self.config, &self.values[level], x)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,u")?;
        for (t, row) in self.times.iter().zip(&self.values) {
            for (x, u) in self.nodes.iter().zip(row) {
                writeln!(w, "{t},{x},{u}")?;
            }
        }
        Ok(())
    }

    pub fn summary_json(&self) -> Value {
        json!({
            "dx": self.config.dx,
            "dt": self.dt_used,
            "steps": self.steps,
            "x_min": self.config.x_min,
            "x_max": self.config.x_max,
            "times": self.times,
            "u_at_zero": (0..self.times.len()).map(|k| self.value_at_level(k, 0.0)).collect::<Vec<_>>(),
        })
    }
}

fn interpolate(g: &GridConfig, values: &[f64], x: f64) -> f64 {
    let n = values.len();
    let pos = ((x - g.x_min) / g.dx).clamp(0.0, (n - 1) as f64);
    let j = (pos.floor() as usize).min(n - 2);
    let w = pos - j as f64;
    if w == 0.0 {
        values[j]
    } else {
        (1.0 - w) * values[j] + w * values[j + 1]
    }
}

fn check_finite_level(level: &[f64], step: usize, time: f64) -> Result<()> {
    if level.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GcapError::Blowup { step, time })
    }
}

/// Runs the explicit scheme, calling `keep(step, level)` after every step.
fn march<F: FnMut(usize, &[f64]) -> Result<()>>(
    initial: &[f64],
    steps: usize,
    dt: f64,
    p: &CapacityParams,
    g: &GridConfig,
    mut keep: F,
) -> Result<Vec<f64>> {
    let n = initial.len();
    let mut cur = initial.to_vec();
    if let Boundary::DirichletFixed { left, right } = g.boundary {
        cur[0] = left;
        cur[n - 1] = right;
    }
    check_finite_level(&cur, 0, 0.0)?;
    let mut next = cur.clone();
    let inv_dx2 = dt / (g.dx * g.dx);
    let up = 0.5 * p.sigma_bar * p.sigma_bar * inv_dx2;
    let down = 0.5 * p.sigma_under * p.sigma_under * inv_dx2;

    for step in 1..=steps {
        for j in 1..n - 1 {
            let d = (cur[j - 1] + cur[j + 1]) - 2.0 * cur[j];
            next[j] = cur[j] + if d > 0.0 { up * d } else { down * d };
        }
        std::mem::swap(&mut cur, &mut next);
        if step % 64 == 0 || step == steps {
            check_finite_level(&cur, step, step as f64 * dt)?;
        }
        keep(step, &cur)?;
    }
    Ok(cur)
}

/// Solves the G-heat equation from nodal initial data up to `horizon`.
pub fn solve(
    initial: &[f64],
    horizon: f64,
    p: &CapacityParams,
    g: &GridConfig,
) -> Result<GridSolution> {
    p.validate()?;
    let (steps, dt) = g.time_steps(horizon, p)?;
    let nodes = g.nodes();
    if initial.len() != nodes.len() {
        return Err(GcapError::Validation(format!(
            "initial data has {} samples but the grid has {} nodes",
            initial.len(),
            nodes.len()
        )));
    }
    let levels = g.snapshots.max(2);
    let mut marks: Vec<usize> = (0..levels).map(|k| (k * steps) / (levels - 1)).collect();
    marks.dedup();

    let mut times = vec![0.0];
    let mut values = vec![initial.to_vec()];
    if let Boundary::DirichletFixed { left, right } = g.boundary {
        values[0][0] = left;
        *values[0].last_mut().expect("non-empty") = right;
    }
    let mut next_mark = 1;
    march(initial, steps, dt, p, g, |step, level| {
        if next_mark < marks.len() && step == marks[next_mark] {
            times.push(if step == steps {
                horizon
            } else {
                step as f64 * dt
            });
            values.push(level.to_vec());
            next_mark += 1;
        }
        Ok(())
    })?;
    Ok(GridSolution {
        config: *g,
        dt_used: dt,
        steps,
        nodes,
        times,
        values,
    })
}

/// [`solve`] with the initial data given as a function of `x`.
pub fn solve_fn<F: Fn(f64) -> f64>(
    initial: F,
    horizon: f64,
    p: &CapacityParams,
    g: &GridConfig,
) -> Result<GridSolution> {
    let data: Vec<f64> = g.nodes().into_iter().map(initial).collect();
    solve(&data, horizon, p, g)
}

/// `u(horizon, 0)` without retaining intermediate levels.
pub fn value_at_origin(
    initial: &[f64],
    horizon: f64,
    p: &CapacityParams,
    g: &GridConfig,
) -> Result<f64> {
    p.validate()?;
    let (steps, dt) = g.time_steps(horizon, p)?;
    if initial.len() != g.node_count() {
        return Err(GcapError::Validation(format!(
            "initial data has {} samples but the grid has {} nodes",
            initial.len(),
            g.node_count()
        )));
    }
    let last = march(initial, steps, dt, p, g, |_, _| Ok(()))?;
    Ok(interpolate(g, &last, 0.0))
}

/// `E^[payoff(B_t - B_s)] = u(t - s, 0)` where `u` starts from the payoff.
pub fn g_expectation_1step<F: Fn(f64) -> f64>(
    payoff: F,
    s: f64,
    t: f64,
    p: &CapacityParams,
    g: &GridConfig,
) -> Result<f64> {
    ensure_finite("s", s)?;
    ensure_finite("t", t)?;
    if !(s >= 0.0 && s < t) {
        return Err(GcapError::Domain(format!(
            "need 0 <= s < t, got s = {s}, t = {t}"
        )));
    }
    let data: Vec<f64> = g.nodes().into_iter().map(payoff).collect();
    value_at_origin(&data, t - s, p, g)
}

pub type MultiPayoff = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `phi(B_{t1}, B_{t2} - B_{t1}, ..., B_{tn} - B_{t(n-1)})` with declared bounds.
#[derive(Clone)]
pub struct PayoffSpec {
    pub time_points: Vec<f64>,
    pub func: MultiPayoff,
    pub lip_bound: f64,
    pub sup_bound: f64,
}

impl std::fmt::Debug for PayoffSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PayoffSpec")
            .field("time_points", &self.time_points)
            .field("lip_bound", &self.lip_bound)
            .field("sup_bound", &self.sup_bound)
            .finish_non_exhaustive()
    }
}

/// Largest number of time points handled by the tensor-grid recursion.
pub const MAX_MULTISTEP_POINTS: usize = 3;

impl PayoffSpec {
    pub fn new<F>(time_points: Vec<f64>, func: F, lip_bound: f64, sup_bound: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let spec = Self {
            time_points,
            func: Arc::new(func),
            lip_bound,
            sup_bound,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn arity(&self) -> usize {
        self.time_points.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_points.is_empty() {
            return Err(GcapError::Validation(
                "payoff needs at least one time point".into(),
            ));
        }
        let mut prev = 0.0;
        for &t in &self.time_points {
            if !(t.is_finite() && t > prev) {
                return Err(GcapError::Validation(format!(
                    "time points must satisfy 0 < t1 < ... < tn, got {:?}",
                    self.time_points
                )));
            }
            prev = t;
        }
        if !(self.lip_bound >= 0.0 && self.sup_bound >= 0.0) {
            return Err(GcapError::Validation(
                "payoff bounds must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Samples `samples` random arguments (and pairs) in `[-radius, radius]^n`
    /// and checks the declared sup and Lipschitz bounds.
    pub fn spot_check(&self, samples: usize, radius: f64, seed: u64) -> Result<()> {
        let n = self.arity();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for _ in 0..samples {
            for k in 0..n {
                a[k] = rng.random_range(-radius..=radius);
                b[k] = a[k] + rng.random_range(-1.0..=1.0);
            }
            let (fa, fb) = ((self.func)(&a), (self.func)(&b));
            if fa.abs() > self.sup_bound * (1.0 + 1e-12) + 1e-12 {
                return Err(GcapError::Validation(format!(
                    "payoff value {fa} at {a:?} exceeds declared sup bound {}",
                    self.sup_bound
                )));
            }
            let dist = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            if (fa - fb).abs() > self.lip_bound * dist * (1.0 + 1e-9) + 1e-12 {
                return Err(GcapError::Validation(format!(
                    "payoff difference {} over distance {dist} exceeds Lipschitz bound {}",
                    (fa - fb).abs(),
                    self.lip_bound
                )));
            }
        }
        Ok(())
    }
}

/// Uniform grid for the conditioning variables of the backward recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditioningGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nodes: usize,
}

impl ConditioningGrid {
    pub fn new(x_min: f64, x_max: f64, nodes: usize) -> Result<Self> {
        if !(x_min < x_max && x_min.is_finite() && x_max.is_finite()) || nodes < 2 {
            return Err(GcapError::Config(format!(
                "conditioning grid needs x_min < x_max and >= 2 nodes, got [{x_min}, {x_max}] with {nodes}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            nodes,
        })
    }

    fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nodes - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.nodes).map(|k| self.x_min + k as f64 * h).collect()
    }

    /// Piecewise-linear interpolation of `values`, constant beyond the ends.
    fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let pos = ((x - self.x_min) / self.step()).clamp(0.0, (self.nodes - 1) as f64);
        let j = (pos.floor() as usize).min(self.nodes - 2);
        let w = pos - j as f64;
        (1.0 - w) * values[j] + w * values[j + 1]
    }
}

/// G-expectation of a payoff of up to three increments by the backward
/// recursion `phi_{k-1}(x_1..x_{k-1}) = E^[phi_k(x_1..x_{k-1}, B_{t_k} - B_{t_{k-1}})]`.
///
/// Each stage runs one 1-d solve per node of the conditioning tensor grid;
/// the solves are independent and run in parallel, and their results are
/// collected in index order so the output does not depend on scheduling.
pub fn g_expectation_multistep(
    spec: &PayoffSpec,
    p: &CapacityParams,
    g: &GridConfig,
    cond: &ConditioningGrid,
) -> Result<f64> {
    spec.validate()?;
    let n = spec.arity();
    if n > MAX_MULTISTEP_POINTS {
        return Err(GcapError::UnsupportedSize(format!(
            "payoffs of at most {MAX_MULTISTEP_POINTS} time points are supported, got {n}"
        )));
    }
    let durations: Vec<f64> = spec
        .time_points
        .iter()
        .scan(0.0, |prev, &t| {
            let d = t - *prev;
            *prev = t;
            Some(d)
        })
        .collect();
    let nodes = g.nodes();
    let cpts = cond.points();
    let m = cond.nodes;

    // Innermost stage: the payoff itself in the last argument.
    let outer = m.pow((n - 1) as u32);
    let mut table: Vec<f64> = (0..outer)
        .into_par_iter()
        .map(|idx| {
            let mut args = tensor_point(idx, n - 1, &cpts);
            args.push(0.0);
            let data: Vec<f64> = nodes
                .iter()
                .map(|&y| {
                    args[n - 1] = y;
                    (spec.func)(&args)
                })
                .collect();
            value_at_origin(&data, durations[n - 1], p, g)
        })
        .collect::<Result<_>>()?;

    for k in (1..n).rev() {
        // `table` holds phi_k on the k-dimensional conditioning grid.
        let outer = m.pow((k - 1) as u32);
        table = (0..outer)
            .into_par_iter()
            .map(|idx| {
                let row = &table[idx * m..(idx + 1) * m];
                let data: Vec<f64> = nodes.iter().map(|&y| cond.interpolate(row, y)).collect();
                value_at_origin(&data, durations[k - 1], p, g)
            })
            .collect::<Result<_>>()?;
    }
    Ok(table[0])
}

fn tensor_point(mut idx: usize, dims: usize, pts: &[f64]) -> Vec<f64> {
    let m = pts.len();
    let mut out = vec![0.0; dims];
    for d in (0..dims).rev() {
        out[d] = pts[idx % m];
        idx /= m;
    }
    out
}

/// Rectangle `[t_lo, t_hi] x [x_lo, x_hi]` sampled on an `nt x nx` grid,
/// together with the x-lines where the tested function has kinks.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRegion {
    pub t_lo: f64,
    pub t_hi: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub nt: usize,
    pub nx: usize,
    pub kinks: Vec<f64>,
}

/// Largest `|du/dt - G(d2u/dx2)|` over the region, with central differences
/// of step `h` in both variables.
pub fn residual_check<F: Fn(f64, f64) -> Result<f64>>(
    u: F,
    region: &ResidualRegion,
    p: &CapacityParams,
    h: f64,
) -> Result<f64> {
    p.validate()?;
    let r = region;
    if !(h > 0.0 && h.is_finite()) {
        return Err(GcapError::Domain(format!(
            "difference step must be positive, got {h}"
        )));
    }
    if !(r.t_lo <= r.t_hi && r.x_lo <= r.x_hi) || r.nt < 1 || r.nx < 1 {
        return Err(GcapError::Domain("residual region is empty".into()));
    }
    if r.t_lo - h < 0.0 {
        return Err(GcapError::Domain(format!(
            "region starts at t = {} but the stencil reaches below t = 0",
            r.t_lo
        )));
    }
    if let Some(k) = r
        .kinks
        .iter()
        .find(|&&k| k >= r.x_lo - h && k <= r.x_hi + h)
    {
        return Err(GcapError::Domain(format!(
            "region [{}, {}] (stencil h = {h}) touches the kink line x = {k}",
            r.x_lo, r.x_hi
        )));
    }
    let lerp = |lo: f64, hi: f64, k: usize, n: usize| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    let mut worst: f64 = 0.0;
    for i in 0..r.nt {
        let t = lerp(r.t_lo, r.t_hi, i, r.nt);
        for j in 0..r.nx {
            let x = lerp(r.x_lo, r.x_hi, j, r.nx);
            let c = u(t, x)?;
            let ut = (u(t + h, x)? - u(t - h, x)?) / (2.0 * h);
            let uxx = ((u(t, x + h)? + u(t, x - h)?) - 2.0 * c) / (h * h);
            worst = worst.max((ut - p.g(uxx)).abs());
        }
    }
    Ok(worst)
}
