//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a reported check failed, 2 invalid input,
//! 3 numerical convergence failure.

mod commands;
mod report;

pub use commands::*;
pub use report::{Check, RunReport};

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::capacity::CapacityParams;
use crate::control_mc::{McConfig, Strategy};
use crate::error::{GcapError, Result};
use crate::payoffs::NamedPayoff;
use crate::special_fn::SeriesConfig;

#[derive(Debug, Parser)]
#[command(
    name = "gcap",
    version,
    about = "G-capacities under degenerate volatility uncertainty"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Upper volatility bound.
    #[arg(long = "sigma-bar", global = true, default_value_t = 1.0)]
    pub sigma_bar: f64,
    /// Lower volatility bound; closed forms need 0.
    #[arg(long = "sigma-under", global = true, default_value_t = 0.0)]
    pub sigma_under: f64,
    /// Horizon T.
    #[arg(long = "T", global = true, default_value_t = 1.0)]
    pub horizon: f64,
    /// Series truncation tolerance.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,
    /// Finite-difference spatial step.
    #[arg(long, global = true, default_value_t = DEFAULT_DX)]
    pub dx: f64,
    /// Finite-difference time step (default 0.9 dx^2 / sigma_bar^2).
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Monte Carlo path count.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub paths: u64,
    #[arg(long, global = true, default_value_t = McConfig::default().seed)]
    pub seed: u64,
    /// Monte Carlo Euler step.
    #[arg(long = "dt-mc", global = true, default_value_t = 1e-4)]
    pub dt_mc: f64,
    /// Brownian-bridge barrier correction (default on).
    #[arg(long, global = true, overrides_with = "no_bridge")]
    pub bridge: bool,
    #[arg(long = "no-bridge", global = true, overrides_with = "bridge")]
    pub no_bridge: bool,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    pub fn params(&self) -> Result<CapacityParams> {
        CapacityParams::new(
            self.sigma_bar,
            self.sigma_under,
            self.horizon,
            SeriesConfig::with_tol(self.tol)?,
        )
    }

    pub fn mc(&self) -> McConfig {
        McConfig {
            n_paths: self.paths,
            dt: self.dt_mc,
            seed: self.seed,
            bridge_correction: !self.no_bridge,
        }
    }

    pub fn pde(&self) -> PdeOptions {
        PdeOptions {
            dx: self.dx,
            dt: self.dt,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a set and compute c({B_T in A}).
    Capacity {
        /// Set JSON, or @path to read it from a file.
        #[arg(long)]
        set: String,
    },
    /// Cross-validate the two-point capacity by series, PDE and Monte Carlo.
    Verify {
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, allow_hyphen_values = true)]
        l: f64,
        #[arg(long = "n-list", value_delimiter = ',', default_values_t = [1u64, 10, 100])]
        n_list: Vec<u64>,
        #[arg(long = "k-list", value_delimiter = ',', default_values_t = [1u64, 2, 4, 8, 16, 32, 64])]
        k_list: Vec<u64>,
    },
    /// G-expectations of shrinking tents around x0.
    DemoNonqc {
        #[arg(long, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long = "n-list", value_delimiter = ',', default_values_t = [1u64, 2, 4, 8, 16, 32, 64, 128, 256])]
        n_list: Vec<u64>,
    },
    /// Solve the G-heat equation from a named payoff.
    PdeSolve {
        /// const:C | neg-abs | clipped-square:CAP | clip:LO:HI | tent:X0:N | ramp-outside:B:L:K | un:N:B:L
        #[arg(long, allow_hyphen_values = true)]
        payoff: String,
        /// Time levels kept in the CSV dump.
        #[arg(long, default_value_t = 11)]
        snapshots: usize,
    },
    /// Monte Carlo under one volatility strategy.
    Mc {
        /// constant:SIGMA | bang-bang:B:L
        #[arg(long, allow_hyphen_values = true)]
        strategy: String,
        /// Named payoff of the terminal value; omit for the exit probability.
        #[arg(long, allow_hyphen_values = true)]
        payoff: Option<String>,
    },
    /// Exit-time density from (b, l) and its integral over (0, T].
    HittingDensity {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, allow_hyphen_values = true)]
        l: f64,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

pub fn parse_strategy(s: &str) -> Result<Strategy> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| GcapError::Validation(format!("strategy argument '{t}' is not a number")))
    };
    match parts.as_slice() {
        ["constant", sigma] => Ok(Strategy::Constant { sigma: num(sigma)? }),
        ["bang-bang", b, l] => Ok(Strategy::BangBangBarrier {
            b: num(b)?,
            l: num(l)?,
        }),
        _ => Err(GcapError::Validation(format!(
            "strategy '{s}' must be constant:SIGMA or bang-bang:B:L"
        ))),
    }
}

/// What a command produced: a report, plus an optional grid dump.
pub struct Outcome {
    pub report: RunReport,
    pub grid_csv: Option<String>,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    let p = c.params()?;
    let report = match &cli.command {
        Command::Capacity { set } => {
            let text = match set.strip_prefix('@') {
                Some(path) => fs::read_to_string(path).map_err(|e| {
                    GcapError::Validation(format!("cannot read set file {path}: {e}"))
                })?,
                None => set.clone(),
            };
            cmd_capacity(&text, &p)?
        }
        Command::Verify {
            b,
            l,
            n_list,
            k_list,
        } => {
            let mut opts = VerifyOptions::new(*b, *l, p);
            opts.pde = c.pde();
            opts.mc = Some(c.mc());
            opts.n_list = n_list.clone();
            opts.k_list = k_list.clone();
            cmd_verify(&opts)?
        }
        Command::DemoNonqc { x0, n_list } => {
            let mut opts = DemoOptions::new(*x0, p);
            opts.pde = c.pde();
            opts.n_list = n_list.clone();
            cmd_demo_nonqc(&opts)?
        }
        Command::PdeSolve { payoff, snapshots } => {
            let payoff: NamedPayoff = payoff.parse()?;
            let mut pde = c.pde();
            pde.dx = c.dx;
            let (report, mut sol) = cmd_pde_solve(&payoff, &p, &pde)?;
            if c.output == OutputFormat::Csv {
                // Re-solve only if the caller asked for a different number of levels.
                if *snapshots != sol.config.snapshots {
                    let g = sol.config.with_snapshots(*snapshots);
                    let data = sol.values[0].clone();
                    sol = crate::gheat_pde::solve(&data, p.horizon_t, &p, &g)?;
                }
                let mut buf = Vec::new();
                sol.write_csv(&mut buf).expect("writing to memory");
                return Ok(Outcome {
                    report,
                    grid_csv: Some(String::from_utf8(buf).expect("utf-8")),
                });
            }
            report
        }
        Command::Mc { strategy, payoff } => {
            let strategy = parse_strategy(strategy)?;
            let target = match payoff {
                Some(s) => McTarget::Payoff(s.parse()?),
                None => McTarget::Hitting,
            };
            cmd_mc(&strategy, &target, &p, &c.mc(), &c.pde())?
        }
        Command::HittingDensity { x, b, l, samples } => {
            cmd_hitting_density(*x, *b, *l, &p, *samples)?
        }
    };
    Ok(Outcome {
        report,
        grid_csv: None,
    })
}

/// Parses arguments, runs the command, writes output and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            let text = match (cli.common.output, outcome.grid_csv) {
                (OutputFormat::Csv, Some(csv)) => csv,
                (OutputFormat::Csv, None) => outcome.report.to_csv(),
                (OutputFormat::Json, _) => {
                    serde_json::to_string_pretty(&outcome.report.to_json()).expect("serializable")
                        + "\n"
                }
            };
            let written = match &cli.common.out {
                Some(path) => fs::write(path, &text),
                None => std::io::stdout().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: cannot write output: {e}");
                return 2;
            }
            if outcome.report.all_passed() {
                0
            } else {
                eprintln!("check failed: {}", outcome.report.failing().join(", "));
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
