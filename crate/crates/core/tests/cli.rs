mod common;

use std::process::Command;

use common::{gaussian_expectation, phi_by_quadrature};
use gcap::capacity::CapacityParams;
use gcap::cli::{
    cmd_capacity, cmd_demo_nonqc, cmd_hitting_density, cmd_mc, cmd_pde_solve, main_with_args,
    parse_strategy, DemoOptions, McTarget, PdeOptions,
};
use gcap::control_mc::{McConfig, Strategy};
use gcap::payoffs::NamedPayoff;
use gcap::special_fn::{two_barrier_series, SeriesConfig};
use serde_json::Value;

fn unit() -> CapacityParams {
    CapacityParams::degenerate(1.0, 1.0).unwrap()
}

fn gcap(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gcap"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn capacity_examples() {
    let p = unit();
    let r = cmd_capacity(r#"{"points":[0.0]}"#, &p).unwrap();
    assert_eq!(r.outputs["capacity"], 1.0);
    assert_eq!(r.outputs["case"], "FULL_IF_RHO_ZERO");

    let r = cmd_capacity(
        r#"{"intervals":[["-inf",-1,"closed","closed"],[2,"inf","closed","closed"]]}"#,
        &p,
    )
    .unwrap();
    let series = two_barrier_series(-1.0, 2.0, 1.0, 1.0, &SeriesConfig::default()).unwrap();
    assert_eq!(r.outputs["capacity"], series);
    assert_eq!(r.outputs["case"], "TWO_SIDED");
    assert_eq!(r.outputs["rho_minus"], 1.0);
    assert_eq!(r.outputs["rho_plus"], 2.0);
    assert!(r.outputs["truncation_terms"].as_u64().unwrap() >= 1);

    let r = cmd_capacity(r#"{"intervals":[[0.5,3,"closed","closed"]]}"#, &p).unwrap();
    assert!((r.outputs["capacity"].as_f64().unwrap() - phi_by_quadrature(0.5)).abs() < 1e-12);
    assert_eq!(r.outputs["side"], "nonneg");
    assert!(r.all_passed());
}

#[test]
fn demo_examples() {
    let r = cmd_demo_nonqc(&DemoOptions::new(1.0, unit())).unwrap();
    assert!(r.check("strictly_decreasing").unwrap().passed);
    assert!(r.check("final_vs_point_capacity").unwrap().passed);
    assert!(r.outputs["narrative"]
        .as_str()
        .unwrap()
        .contains("quasi-continuous"));

    let mut at_zero = DemoOptions::new(0.0, unit());
    at_zero.n_list = vec![1, 4, 16, 64];
    let r = cmd_demo_nonqc(&at_zero).unwrap();
    assert!(r.all_passed(), "{:?}", r.failing());
    let seq = r.outputs["sequence"].as_array().unwrap();
    let last = seq.last().unwrap()["value"].as_f64().unwrap();
    assert!((last - 1.0).abs() < 5e-3);
}

#[test]
fn pde_solve_reports() {
    let p = unit();
    let (r, sol) = cmd_pde_solve(&NamedPayoff::Constant(2.0), &p, &PdeOptions::default()).unwrap();
    assert_eq!(r.outputs["u_T_0"], 2.0);
    assert!(sol.final_values().iter().all(|&v| v == 2.0));

    let (r, _) = cmd_pde_solve(
        &NamedPayoff::ClippedSquare(25.0),
        &p,
        &PdeOptions::default(),
    )
    .unwrap();
    let oracle = gaussian_expectation(|x| (x * x).min(25.0), 1.0, &[-5.0, 5.0]);
    assert!((r.outputs["u_T_0"].as_f64().unwrap() - oracle).abs() < 5e-3);
    assert!(r.all_passed());
}

#[test]
fn mc_and_density_reports() {
    let p = unit();
    let mc = McConfig {
        n_paths: 50_000,
        dt: 1e-3,
        ..McConfig::default()
    };
    let r = cmd_mc(
        &parse_strategy("bang-bang:-1:1").unwrap(),
        &McTarget::Hitting,
        &p,
        &mc,
        &PdeOptions::default(),
    )
    .unwrap();
    assert!(r.check("mc_vs_series").unwrap().passed);
    let r = cmd_mc(
        &Strategy::Constant { sigma: 1.0 },
        &McTarget::Payoff("clipped-square:25".parse().unwrap()),
        &p,
        &mc,
        &PdeOptions { dx: 0.01, dt: None },
    )
    .unwrap();
    assert!(r.check("below_g_expectation").unwrap().passed);
    assert!(cmd_mc(
        &Strategy::Constant { sigma: 1.0 },
        &McTarget::Hitting,
        &p,
        &mc,
        &PdeOptions::default()
    )
    .is_err());

    let r = cmd_hitting_density(0.0, -1.0, 1.0, &p, 10).unwrap();
    assert!(r.check("integral_vs_series").unwrap().passed);
    assert_eq!(r.outputs["density"].as_array().unwrap().len(), 10);
    assert!(cmd_hitting_density(2.0, -1.0, 1.0, &p, 10).is_err());
}

#[test]
fn strategy_parsing() {
    assert_eq!(
        parse_strategy("constant:0.5").unwrap(),
        Strategy::Constant { sigma: 0.5 }
    );
    assert_eq!(
        parse_strategy("bang-bang:-3:0.25").unwrap(),
        Strategy::BangBangBarrier { b: -3.0, l: 0.25 }
    );
    assert!(parse_strategy("bang-bang:1").is_err());
    assert!(parse_strategy("wobble:1").is_err());
}

#[test]
fn binary_json_output() {
    let (code, out, _) = gcap(&["capacity", "--set", r#"{"points":[-1,1]}"#]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["command"], "capacity");
    assert_eq!(v["outputs"]["case"], "TWO_SIDED");
    for c in v["checks"].as_array().unwrap() {
        assert!(c["oracle"].as_str().is_some_and(|s| !s.is_empty()));
    }
}

#[test]
fn binary_is_deterministic_and_writes_files() {
    let dir = std::env::temp_dir().join(format!("gcap-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("mc.json");
    let args = [
        "mc",
        "--strategy",
        "bang-bang:-1:1",
        "--paths",
        "20000",
        "--dt-mc",
        "1e-3",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(gcap(&args).0, 0);
    let first = std::fs::read_to_string(&out).unwrap();
    assert_eq!(gcap(&args).0, 0);
    assert_eq!(first, std::fs::read_to_string(&out).unwrap());

    let set = dir.join("set.json");
    std::fs::write(&set, r#"{"intervals":[[0.5,3,"closed","closed"]]}"#).unwrap();
    let (code, csv, _) = gcap(&[
        "capacity",
        "--set",
        &format!("@{}", set.display()),
        "--output",
        "csv",
    ]);
    assert_eq!(code, 0);
    assert!(csv.starts_with("section,key,value\n"));
    assert!(csv.contains("output,case,ONE_SIDED"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn binary_grid_csv() {
    let (code, csv, _) = gcap(&[
        "pde-solve",
        "--payoff",
        "tent:0.5:2",
        "--dx",
        "0.05",
        "--T",
        "0.5",
        "--snapshots",
        "3",
        "--output",
        "csv",
    ]);
    assert_eq!(code, 0);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,u"));
    let times: std::collections::BTreeSet<String> = lines
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(times.len(), 3);
}

#[test]
fn exit_codes() {
    // Validation errors.
    assert_eq!(gcap(&["capacity", "--set", "not json"]).0, 2);
    assert_eq!(
        gcap(&[
            "capacity",
            "--set",
            r#"{"points":[1]}"#,
            "--sigma-under",
            "0.5"
        ])
        .0,
        2
    );
    assert_eq!(gcap(&["verify", "--b", "1", "--l", "2"]).0, 2);
    assert_eq!(gcap(&["pde-solve", "--payoff", "wiggle"]).0, 2);
    assert_eq!(gcap(&["capacity"]).0, 2);
    // Series truncation cap hit before the tolerance.
    let (code, _, err) = gcap(&[
        "capacity",
        "--set",
        r#"{"points":[-0.001,0.001]}"#,
        "--T",
        "1e6",
        "--tol",
        "1e-300",
    ]);
    assert_eq!(code, 3, "{err}");
    // A failing check.
    let (code, _, err) = gcap(&["demo-nonqc", "--x0", "1", "--n-list", "1,2", "--dx", "0.05"]);
    assert_eq!(code, 1);
    assert!(err.contains("final_vs_point_capacity"));
    // In-process entry point agrees.
    assert_eq!(main_with_args(["gcap", "capacity", "--set", "{}"]), 0);
}
