mod common;

use common::gaussian_expectation;
use gcap::capacity::CapacityParams;
use gcap::control_mc::{simulate_hitting_probability, simulate_payoff, McConfig, Strategy};
use gcap::gheat_pde::{g_expectation_1step, GridConfig};
use gcap::payoffs::tent;
use gcap::special_fn::{phi, two_barrier_series, SeriesConfig};

fn unit() -> CapacityParams {
    CapacityParams::degenerate(1.0, 1.0).unwrap()
}

fn cfg(n_paths: u64, dt: f64, bridge: bool) -> McConfig {
    McConfig {
        n_paths,
        dt,
        seed: 99,
        bridge_correction: bridge,
    }
}

#[test]
fn deterministic_across_thread_counts() {
    let p = unit();
    let c = cfg(30_000, 1e-3, true);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_hitting_probability(-1.0, 1.0, &p, &c).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, simulate_hitting_probability(-1.0, 1.0, &p, &c).unwrap());
    let other = simulate_hitting_probability(-1.0, 1.0, &p, &McConfig { seed: 100, ..c }).unwrap();
    assert_ne!(a.mean, other.mean);
}

#[test]
fn tiny_horizon_never_hits() {
    let p = CapacityParams::degenerate(1.0, 1e-6).unwrap();
    let est = simulate_hitting_probability(-1.0, 1.0, &p, &cfg(10_000, 1e-4, true)).unwrap();
    assert_eq!(est.mean, 0.0);
    assert_eq!(est.std_error, 0.0);
}

#[test]
fn far_barrier_matches_one_sided() {
    let p = unit();
    let est = simulate_hitting_probability(-50.0, 1.0, &p, &cfg(200_000, 1e-3, true)).unwrap();
    let exact = phi(1.0).unwrap();
    assert!(
        (est.mean - exact).abs() <= 3.0 * est.std_error + 2e-3,
        "{est:?} vs {exact}"
    );
}

#[test]
fn bridge_reduces_bias() {
    let p = unit();
    let exact = two_barrier_series(-1.0, 1.0, 1.0, 1.0, &SeriesConfig::default()).unwrap();
    for &(dt, n) in &[(1e-2, 200_000u64), (1e-3, 200_000), (1e-4, 100_000)] {
        let with = simulate_hitting_probability(-1.0, 1.0, &p, &cfg(n, dt, true)).unwrap();
        let without = simulate_hitting_probability(-1.0, 1.0, &p, &cfg(n, dt, false)).unwrap();
        // Bridge sampling only adds crossings on the same Gaussian paths.
        assert!(with.mean >= without.mean);
        assert!(
            (with.mean - exact).abs() < (without.mean - exact).abs(),
            "dt = {dt}: {} / {} vs {exact}",
            with.mean,
            without.mean
        );
    }
}

#[test]
fn constant_controls() {
    let p = unit();
    let c = cfg(200_000, 1e-3, true);
    let f = |x: f64| (x * x).min(25.0);
    let frozen = simulate_payoff(&Strategy::Constant { sigma: 0.0 }, f, 1.0, &p, &c).unwrap();
    assert_eq!((frozen.mean, frozen.std_error), (0.0, 0.0));

    let full = simulate_payoff(&Strategy::Constant { sigma: 1.0 }, f, 1.0, &p, &c).unwrap();
    let oracle = gaussian_expectation(f, 1.0, &[-5.0, 5.0]);
    assert!(
        (full.mean - oracle).abs() <= 3.0 * full.std_error,
        "{full:?} vs {oracle}"
    );
    assert_eq!(full.n_paths, 200_000);
}

#[test]
fn strategies_validated() {
    let p = unit();
    let c = cfg(10, 1e-2, true);
    assert!(simulate_payoff(&Strategy::Constant { sigma: 1.5 }, |x| x, 1.0, &p, &c).is_err());
    let nondeg = CapacityParams::new(1.0, 0.3, 1.0, SeriesConfig::default()).unwrap();
    let bb = Strategy::BangBangBarrier { b: -1.0, l: 1.0 };
    assert!(simulate_payoff(&bb, |x| x, 1.0, &nondeg, &c).is_err());
    assert!(simulate_payoff(&Strategy::Constant { sigma: 0.1 }, |x| x, 1.0, &nondeg, &c).is_err());
    assert!(simulate_hitting_probability(0.5, 1.0, &p, &c).is_err());
    assert!(simulate_hitting_probability(-1.0, 1.0, &p, &McConfig { n_paths: 0, ..c }).is_err());
}

#[test]
fn estimates_stay_below_g_expectation() {
    let p = unit();
    let c = cfg(100_000, 1e-3, true);
    let g = GridConfig::padded(-5.0, 5.0, 1.0, 1.0, 5e-3, 0.9).unwrap();
    type Payoff = Box<dyn Fn(f64) -> f64 + Sync>;
    let payoffs: Vec<(&str, Payoff)> = vec![
        ("clipped square", Box::new(|x: f64| (x * x).min(25.0))),
        ("tent", Box::new(tent(1.0, 4.0))),
        ("neg abs", Box::new(|x: f64| -x.abs())),
        (
            "indicator-like",
            Box::new(|x: f64| (1.0 - 10.0 * (x.abs() - 1.0).abs()).max(0.0)),
        ),
    ];
    let strategies = [
        Strategy::Constant { sigma: 0.0 },
        Strategy::Constant { sigma: 0.5 },
        Strategy::Constant { sigma: 1.0 },
        Strategy::BangBangBarrier { b: -1.0, l: 1.0 },
        Strategy::BangBangBarrier { b: -0.5, l: 2.0 },
    ];
    for (name, f) in &payoffs {
        let upper = g_expectation_1step(f, 0.0, 1.0, &p, &g).unwrap();
        for s in &strategies {
            let est = simulate_payoff(s, f, 1.0, &p, &c).unwrap();
            assert!(
                est.mean <= upper + 3.0 * est.std_error + 5e-3,
                "{name} under {s:?}: {} > {upper}",
                est.mean
            );
        }
    }
}

#[test]
fn bang_bang_beats_constant_controls_on_two_point_event() {
    let p = unit();
    let c = cfg(100_000, 1e-3, true);
    let (b, l) = (-1.0, 1.0);
    let bb = simulate_hitting_probability(b, l, &p, &c).unwrap();
    let eps = 5e-3;
    let band = move |x: f64| {
        if (x - b).abs() <= eps || (x - l).abs() <= eps {
            1.0
        } else {
            0.0
        }
    };
    for sigma in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let est = simulate_payoff(&Strategy::Constant { sigma }, band, 1.0, &p, &c).unwrap();
        assert!(est.mean + 3.0 * est.std_error < bb.mean - 3.0 * bb.std_error);
    }
    // Frozen at the barrier, the terminal value itself lies in {b, l}.
    let at = move |x: f64| if x == b || x == l { 1.0 } else { 0.0 };
    let terminal = simulate_payoff(&Strategy::BangBangBarrier { b, l }, at, 1.0, &p, &c).unwrap();
    assert_eq!(terminal.mean, bb.mean);
}

#[test]
fn result_record_fields() {
    let p = unit();
    let c = cfg(1000, 1e-2, true);
    let s = Strategy::BangBangBarrier { b: -1.0, l: 1.0 };
    let est = simulate_hitting_probability(-1.0, 1.0, &p, &c).unwrap();
    let rec = est.record(&c, &s);
    for key in ["mean", "std_error", "n_paths", "seed", "dt", "strategy"] {
        assert!(rec.get(key).is_some(), "{key}");
    }
    assert_eq!(rec["strategy"]["kind"], "bang_bang_barrier");
}
