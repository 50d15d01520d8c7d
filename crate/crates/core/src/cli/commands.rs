//! Experiment drivers behind the `gcap` subcommands. Each returns a
//! [`RunReport`] whose checks name the oracle they compare against.

use serde_json::json;

use super::report::RunReport;
use crate::borel_set::BorelSetSpec;
use crate::capacity::{capacity_of, u_n, CapacityParams};
use crate::control_mc::{simulate_hitting_probability, simulate_payoff, McConfig, Strategy};
use crate::error::{GcapError, Result};
use crate::gheat_pde::{solve, value_at_origin, GridConfig, GridSolution};
use crate::payoffs::{outside_ramp, tent, NamedPayoff};
use crate::quad::{integrate, QuadOptions};
use crate::special_fn::{hitting_density, phi, two_barrier_series, two_barrier_series_detailed};

/// Default spatial step of the finite-difference grids.
pub const DEFAULT_DX: f64 = 5e-3;
/// Default `dt / (dx^2 / sigma_bar^2)`.
pub const DEFAULT_SAFETY: f64 = 0.9;
/// PDE against closed-form values.
pub const PDE_TOL: f64 = 5e-3;
/// Last term of the ramp sequence against the limiting capacity.
pub const RAMP_TOL: f64 = 1e-2;
/// Euler-discretization allowance added to `3 * std_error`.
pub const MC_BIAS_ALLOWANCE: f64 = 2e-3;
/// Density integral against the reflection series.
pub const DENSITY_TOL: f64 = 1e-8;
// Rounding slack for exact-in-theory monotonicity of discrete solutions.
const MONOTONE_SLACK: f64 = 1e-12;

/// Finite-difference options shared by the PDE-backed commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeOptions {
    pub dx: f64,
    /// Explicit time step; `None` picks `DEFAULT_SAFETY * dx^2 / sigma_bar^2`.
    pub dt: Option<f64>,
}

impl Default for PdeOptions {
    fn default() -> Self {
        Self {
            dx: DEFAULT_DX,
            dt: None,
        }
    }
}

impl PdeOptions {
    /// Grid covering `[lo, hi]` plus six standard deviations of padding.
    pub fn grid(&self, lo: f64, hi: f64, p: &CapacityParams, horizon: f64) -> Result<GridConfig> {
        let mut g = GridConfig::padded(lo, hi, p.sigma_bar, horizon, self.dx, DEFAULT_SAFETY)?;
        if let Some(dt) = self.dt {
            g.dt = dt;
        }
        Ok(g)
    }
}

fn params_inputs(report: &mut RunReport, p: &CapacityParams) {
    report
        .input("sigma_bar", p.sigma_bar)
        .input("sigma_under", p.sigma_under)
        .input("T", p.horizon_t)
        .input("tol", p.series.tol);
}

fn grid_inputs(report: &mut RunReport, g: &GridConfig) {
    report
        .input("dx", g.dx)
        .input("dt", g.dt)
        .input("x_min", g.x_min)
        .input("x_max", g.x_max);
}

fn sample(g: &GridConfig, f: impl Fn(f64) -> f64) -> Vec<f64> {
    g.nodes().into_iter().map(f).collect()
}

/// Classification and capacity of the set given in its JSON encoding.
pub fn cmd_capacity(set_json: &str, p: &CapacityParams) -> Result<RunReport> {
    let spec = BorelSetSpec::from_json_str(set_json)?.normalize()?;
    let result = capacity_of(&spec, p)?;
    let mut report = RunReport::new("capacity");
    report.input("set", spec.to_json());
    params_inputs(&mut report, p);
    let c = &result.classification;
    report
        .output(
            "case",
            serde_json::to_value(c.case_tag).expect("serializable"),
        )
        .output("side", serde_json::to_value(c.side).expect("serializable"))
        .output("rho", crate::borel_set::endpoint_json(c.rho))
        .output("rho_plus", crate::borel_set::endpoint_json(c.rho_plus))
        .output("rho_minus", crate::borel_set::endpoint_json(c.rho_minus))
        .output("capacity", result.value)
        .output("truncation_terms", json!(result.truncation_terms))
        .output("empty_set", result.empty_set);
    report.check_flag(
        "capacity_in_unit_interval",
        "capacity is a supremum of probabilities",
        (0.0..=1.0).contains(&result.value),
        result.value,
        1.0,
    );
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub b: f64,
    pub l: f64,
    pub params: CapacityParams,
    pub pde: PdeOptions,
    pub n_list: Vec<u64>,
    pub k_list: Vec<u64>,
    /// Bang-bang Monte Carlo stage; `None` skips it.
    pub mc: Option<McConfig>,
}

impl VerifyOptions {
    pub fn new(b: f64, l: f64, params: CapacityParams) -> Self {
        Self {
            b,
            l,
            params,
            pde: PdeOptions::default(),
            n_list: vec![1, 10, 100],
            k_list: vec![1, 2, 4, 8, 16, 32, 64],
            mc: Some(McConfig::default()),
        }
    }
}

/// Cross-validates the two-point capacity `c({B_T in {b, l}})` by the
/// reflection series, PDE solves from `u_n(0, .)`, PDE solves from ramps
/// decreasing to the indicator of `(-inf, b] U [l, inf)`, and bang-bang
/// Monte Carlo.
pub fn cmd_verify(opts: &VerifyOptions) -> Result<RunReport> {
    let (b, l, p) = (opts.b, opts.l, &opts.params);
    if !(b < 0.0 && l > 0.0) {
        return Err(GcapError::Validation(format!(
            "need b < 0 < l, got b = {b}, l = {l}"
        )));
    }
    p.validate()?;
    let t = p.horizon_t;
    let mut report = RunReport::new("verify");
    report.input("b", b).input("l", l);
    params_inputs(&mut report, p);

    let series = two_barrier_series_detailed(b, l, t, p.sigma_bar, &p.series)?;
    report
        .output("series", series.value)
        .output("series_terms", series.terms as u64);

    let g = opts.pde.grid(b - 1.0, l + 1.0, p, t)?;
    grid_inputs(&mut report, &g);

    let mut un_rows = Vec::new();
    for &n in &opts.n_list {
        let data: Vec<f64> = g
            .nodes()
            .into_iter()
            .map(|x| u_n(n, 0.0, x, b, l, p))
            .collect::<Result<_>>()?;
        let pde = value_at_origin(&data, t, p, &g)?;
        let closed = u_n(n, t, 0.0, b, l, p)?;
        report.check_le(
            &format!("pde_u_n_{n}"),
            "closed-form u_n(T, 0)",
            (pde - closed).abs(),
            PDE_TOL,
        );
        un_rows.push(json!({"n": n, "pde": pde, "closed_form": closed}));
    }
    report.output("u_n", un_rows);

    let mut ramp_values = Vec::new();
    for &k in &opts.k_list {
        let v = value_at_origin(&sample(&g, outside_ramp(b, l, k as f64)), t, p, &g)?;
        ramp_values.push(v);
    }
    if !ramp_values.is_empty() {
        let worst_rise = ramp_values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        report.check_le(
            "ramp_sequence_nonincreasing",
            "monotone convergence of G-expectations",
            worst_rise,
            MONOTONE_SLACK,
        );
        let last = *ramp_values.last().expect("non-empty");
        report.check_le(
            &format!("ramp_k{}_vs_series", opts.k_list.last().expect("non-empty")),
            "two-barrier reflection series",
            (last - series.value).abs(),
            RAMP_TOL,
        );
        report.output(
            "ramp",
            opts.k_list
                .iter()
                .zip(&ramp_values)
                .map(|(k, v)| json!({"k": k, "value": v}))
                .collect::<Vec<_>>(),
        );
    }

    if let Some(cfg) = &opts.mc {
        let mc = simulate_hitting_probability(b, l, p, cfg)?;
        report.check_le(
            "mc_bang_bang_vs_series",
            "two-barrier reflection series",
            (mc.mean - series.value).abs(),
            3.0 * mc.std_error + MC_BIAS_ALLOWANCE,
        );
        report.output("mc", mc.record(cfg, &Strategy::BangBangBarrier { b, l }));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoOptions {
    pub x0: f64,
    pub params: CapacityParams,
    pub pde: PdeOptions,
    pub n_list: Vec<u64>,
}

impl DemoOptions {
    pub fn new(x0: f64, params: CapacityParams) -> Self {
        Self {
            x0,
            params,
            pde: PdeOptions::default(),
            n_list: (0..=8).map(|k| 1u64 << k).collect(),
        }
    }
}

/// G-expectations of the tents `h_n` centred at `x0`. They decrease in `n`
/// but stay above `c({B_T = x0}) = phi(|x0| / (sigma_bar sqrt T)) > 0`,
/// although `h_n` shrinks to the indicator of a single point.
pub fn cmd_demo_nonqc(opts: &DemoOptions) -> Result<RunReport> {
    let (x0, p) = (opts.x0, &opts.params);
    p.validate()?;
    if !x0.is_finite() {
        return Err(GcapError::Validation(format!(
            "x0 must be finite, got {x0}"
        )));
    }
    if opts.n_list.is_empty() || opts.n_list.contains(&0) {
        return Err(GcapError::Validation(
            "n_list must be nonempty with n >= 1".into(),
        ));
    }
    let t = p.horizon_t;
    // Shrink dx so that x0 is a grid node.
    let mut pde = opts.pde;
    if x0 != 0.0 {
        pde.dx = x0.abs() / (x0.abs() / pde.dx - 1e-9).ceil();
    }
    let g = pde.grid(x0 - 1.0, x0 + 1.0, p, t)?;
    let limit = phi(x0.abs() / (p.sigma_bar * t.sqrt()))?;

    let mut report = RunReport::new("demo-nonqc");
    report.input("x0", x0).input("n_list", opts.n_list.clone());
    params_inputs(&mut report, p);
    grid_inputs(&mut report, &g);

    let values: Vec<f64> = opts
        .n_list
        .iter()
        .map(|&n| value_at_origin(&sample(&g, tent(x0, n as f64)), t, p, &g))
        .collect::<Result<_>>()?;
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    if x0 != 0.0 {
        let worst = steps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        report.check_flag(
            "strictly_decreasing",
            "monotone convergence of G-expectations",
            steps.iter().all(|&d| d < 0.0),
            if steps.is_empty() { 0.0 } else { worst },
            0.0,
        );
    } else {
        let worst = steps.iter().copied().fold(0.0, f64::max);
        report.check_le(
            "nonincreasing",
            "monotone convergence of G-expectations",
            worst,
            MONOTONE_SLACK,
        );
    }
    let last = *values.last().expect("non-empty");
    report.check_le(
        "final_vs_point_capacity",
        "phi(|x0| / (sigma_bar sqrt T))",
        (last - limit).abs(),
        PDE_TOL,
    );
    report
        .output(
            "sequence",
            opts.n_list
                .iter()
                .zip(&values)
                .map(|(n, v)| json!({"n": n, "value": v}))
                .collect::<Vec<_>>(),
        )
        .output("point_capacity", limit)
        .output("gap", last - limit)
        .output(
            "narrative",
            format!(
                "The tents h_n shrink to the indicator of {{{x0}}}, yet their G-expectations level off at \
                 c({{B_T = {x0}}}) = {limit:.6} instead of 0. A strictly positive limit means the indicator \
                 of a nontrivial set cannot be approximated in the G-expectation norm by continuous payoffs, \
                 so I_A(B_T) has no quasi-continuous version when sigma_under = 0."
            ),
        );
    Ok(report)
}

/// Solves the G-heat equation from a named payoff.
pub fn cmd_pde_solve(
    payoff: &NamedPayoff,
    p: &CapacityParams,
    pde: &PdeOptions,
) -> Result<(RunReport, GridSolution)> {
    p.validate()?;
    let t = p.horizon_t;
    let (lo, hi) = payoff.support();
    let g = pde.grid(lo, hi, p, t)?;
    let data: Vec<f64> = g
        .nodes()
        .into_iter()
        .map(|x| payoff.eval(x, p))
        .collect::<Result<_>>()?;
    let sol = solve(&data, t, p, &g)?;

    let mut report = RunReport::new("pde-solve");
    report.input("payoff", payoff.to_string());
    params_inputs(&mut report, p);
    grid_inputs(&mut report, &g);
    let (lo_v, hi_v) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let excursion = sol
        .final_values()
        .iter()
        .map(|&v| (lo_v - v).max(v - hi_v).max(0.0))
        .fold(0.0, f64::max);
    report.check_le(
        "within_initial_range",
        "discrete maximum principle",
        excursion,
        MONOTONE_SLACK,
    );
    report
        .output("u_T_0", sol.value_at(0.0))
        .output("initial_at_0", payoff.eval(0.0, p)?)
        .output("summary", sol.summary_json());
    Ok((report, sol))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McTarget {
    /// Exit probability of the bang-bang strategy's corridor.
    Hitting,
    Payoff(NamedPayoff),
}

/// Monte Carlo under one strategy, checked against the closed form (for
/// exit probabilities) or against the PDE G-expectation upper bound.
pub fn cmd_mc(
    strategy: &Strategy,
    target: &McTarget,
    p: &CapacityParams,
    mc: &McConfig,
    pde: &PdeOptions,
) -> Result<RunReport> {
    p.validate()?;
    strategy.validate(p)?;
    let mut report = RunReport::new("mc");
    report.input(
        "strategy",
        serde_json::to_value(strategy).expect("serializable"),
    );
    params_inputs(&mut report, p);
    report
        .input("paths", mc.n_paths)
        .input("seed", mc.seed)
        .input("dt_mc", mc.dt)
        .input("bridge", mc.bridge_correction);

    match *target {
        McTarget::Hitting => {
            let Strategy::BangBangBarrier { b, l } = *strategy else {
                return Err(GcapError::Validation(
                    "exit probabilities need a bang-bang strategy".into(),
                ));
            };
            let est = simulate_hitting_probability(b, l, p, mc)?;
            let series = two_barrier_series(b, l, p.horizon_t, p.sigma_bar, &p.series)?;
            report.input("target", "hitting");
            report.check_le(
                "mc_vs_series",
                "two-barrier reflection series",
                (est.mean - series).abs(),
                3.0 * est.std_error + MC_BIAS_ALLOWANCE,
            );
            report
                .output("estimate", est.record(mc, strategy))
                .output("series", series);
        }
        McTarget::Payoff(payoff) => {
            // Validate the payoff once up front so the closure cannot fail.
            payoff.eval(0.0, p)?;
            let est = simulate_payoff(
                strategy,
                |x| payoff.eval(x, p).unwrap_or(f64::NAN),
                p.horizon_t,
                p,
                mc,
            )?;
            let (lo, hi) = payoff.support();
            let g = pde.grid(lo, hi, p, p.horizon_t)?;
            let data: Vec<f64> = g
                .nodes()
                .into_iter()
                .map(|x| payoff.eval(x, p))
                .collect::<Result<_>>()?;
            let upper = value_at_origin(&data, p.horizon_t, p, &g)?;
            report.input("target", payoff.to_string());
            report.check_le(
                "below_g_expectation",
                "PDE G-expectation (supremum over strategies)",
                est.mean - upper,
                3.0 * est.std_error + PDE_TOL,
            );
            report
                .output("estimate", est.record(mc, strategy))
                .output("g_expectation", upper);
        }
    }
    Ok(report)
}

/// Exit-time density of `x + sigma_bar W` from `(b, l)` on `(0, T]`, and
/// its integral against the reflection series.
pub fn cmd_hitting_density(
    x: f64,
    b: f64,
    l: f64,
    p: &CapacityParams,
    samples: usize,
) -> Result<RunReport> {
    p.validate()?;
    if samples < 1 {
        return Err(GcapError::Validation("need at least one sample".into()));
    }
    let t = p.horizon_t;
    let cfg = p.series;
    // Evaluate once to surface domain errors before integrating.
    hitting_density(t, x, b, l, p.sigma_bar, &cfg)?;
    let grid: Vec<(f64, f64)> = (1..=samples)
        .map(|k| {
            let s = t * k as f64 / samples as f64;
            hitting_density(s, x, b, l, p.sigma_bar, &cfg).map(|d| (s, d))
        })
        .collect::<Result<_>>()?;
    let integral = integrate(
        |s| {
            if s <= 0.0 {
                0.0
            } else {
                hitting_density(s, x, b, l, p.sigma_bar, &cfg).unwrap_or(f64::NAN)
            }
        },
        0.0,
        t,
        QuadOptions::default(),
    )?;
    let series = two_barrier_series(b - x, l - x, t, p.sigma_bar, &cfg)?;

    let mut report = RunReport::new("hitting-density");
    report
        .input("x", x)
        .input("b", b)
        .input("l", l)
        .input("samples", samples as u64);
    params_inputs(&mut report, p);
    report.check_le(
        "integral_vs_series",
        "two-barrier reflection series from x",
        (integral.value - series).abs(),
        DENSITY_TOL,
    );
    report
        .output("integral", integral.value)
        .output("quadrature_error_estimate", integral.error_estimate)
        .output("series", series)
        .output(
            "density",
            grid.iter()
                .map(|(s, d)| json!({"s": s, "density": d}))
                .collect::<Vec<_>>(),
        );
    Ok(report)
}
