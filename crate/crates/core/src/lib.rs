//! G-capacities of terminal events `{B_T in A}` for a G-Brownian motion with
//! volatility uncertain in `[0, sigma_bar]`, with independent numerical
//! cross-checks.
//!
//! * [`special_fn`]: the Gaussian tail `phi`, the two-barrier reflection
//!   series and the exit-time density.
//! * [`borel_set`]: finite interval/point unions and their `rho` functionals.
//! * [`capacity`]: closed-form capacities and the smoothed solutions `u_n`.
//! * [`gheat_pde`]: explicit monotone scheme for the G-heat equation and
//!   the G-expectation of finite-time payoffs.
//! * [`control_mc`]: Monte Carlo over admissible volatility strategies.
//! * [`cli`]: the `gcap` command-line experiments.

pub mod borel_set;
pub mod capacity;
pub mod cli;
pub mod control_mc;
pub mod error;
pub mod gheat_pde;
pub mod payoffs;
pub mod quad;
pub mod special_fn;

pub use borel_set::{BorelSetSpec, CaseTag, Interval, SetClassification, Side};
pub use capacity::{
    capacity_of, capacity_point, capacity_ray, u_n, CapacityParams, CapacityResult, RayDirection,
};
pub use control_mc::{
    simulate_hitting_probability, simulate_payoff, McConfig, McEstimate, Strategy,
};
pub use error::{GcapError, Result};
pub use gheat_pde::{
    g_expectation_1step, g_expectation_multistep, residual_check, solve, solve_fn, Boundary,
    ConditioningGrid, GridConfig, GridSolution, PayoffSpec, ResidualRegion,
};
pub use special_fn::{
    hitting_density, phi, phi_prime, phi_second, two_barrier_series, SeriesConfig, SeriesValue,
};
