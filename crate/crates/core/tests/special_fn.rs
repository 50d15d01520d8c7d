mod common;

use common::{density_integral, phi_by_quadrature, survival_spectral};
use gcap::special_fn::{
    hitting_density, phi, phi_prime, phi_second, two_barrier_series, SeriesConfig,
};
use proptest::prelude::*;

#[test]
fn phi_matches_quadrature() {
    assert!((phi_by_quadrature(1.0) - 0.317_310_507_862_914_1).abs() < 1e-12);
    for &x in &[-3.0, -0.4, 0.0, 0.5, 1.0, 2.5, 6.0] {
        let q = phi_by_quadrature(x);
        assert!(
            (phi(x).unwrap() - q).abs() < 1e-13,
            "x = {x}: {} vs {q}",
            phi(x).unwrap()
        );
    }
}

#[test]
fn phi_prime_matches_central_difference() {
    let (x, h) = (0.7, 1e-5);
    let fd = (phi(x + h).unwrap() - phi(x - h).unwrap()) / (2.0 * h);
    assert!((phi_prime(x).unwrap() - fd).abs() < 1e-8);
}

#[test]
fn second_derivative_identity() {
    for &x in &[0.5, 1.0, 3.0] {
        let r = phi_second(x).unwrap() + x * phi_prime(x).unwrap();
        assert!(r.abs() < 1e-12);
    }
}

#[test]
fn phi_grid_invariants() {
    let mut prev = f64::INFINITY;
    for k in -80..=80 {
        let x = k as f64 * 0.1;
        let v = phi(x).unwrap();
        assert!(v < prev, "not strictly decreasing at {x}");
        prev = v;
        assert!((v + phi(-x).unwrap() - 2.0).abs() < 1e-15);
        if x >= 1.0 {
            assert!(v <= (-0.5 * x * x).exp());
        }
    }
}

#[test]
fn far_lower_barrier_reduces_to_one_sided() {
    let cfg = SeriesConfig::default();
    let v = two_barrier_series(-50.0, 1.0, 1.0, 1.0, &cfg).unwrap();
    assert!((v - phi(1.0).unwrap()).abs() < 1e-12);
}

#[test]
fn series_scaling_invariance() {
    let cfg = SeriesConfig::default();
    let lam: f64 = 2.5;
    for &(b, l, t, s) in &[
        (-1.0, 1.0, 1.0, 1.0),
        (-0.3, 2.0, 0.7, 1.4),
        (-3.0, 0.25, 2.0, 1.5),
    ] {
        let a = two_barrier_series(b, l, t, s, &cfg).unwrap();
        let c = two_barrier_series(lam * b, lam * l, lam * lam * t, s, &cfg).unwrap();
        assert!((a - c).abs() < 1e-14, "{a} vs {c}");
    }
}

#[test]
fn density_integrates_to_one() {
    for &(x, b, l, sigma) in &[
        (0.0, -1.0, 1.0, 1.0),
        (0.3, -0.5, 1.2, 0.8),
        (-2.0, -3.0, 0.25, 1.5),
    ] {
        let upper = 2.0 * (l - b) * (l - b) / (sigma * sigma);
        let total =
            density_integral(upper, x, b, l, sigma) + survival_spectral(upper, x, b, l, sigma);
        assert!(
            (total - 1.0).abs() < 1e-8,
            "({x}, {b}, {l}, {sigma}): {total}"
        );
    }
}

#[test]
fn density_integral_reproduces_series() {
    let cfg = SeriesConfig::default();
    let (b, l, sigma) = (-1.0, 1.0, 1.0);
    for &(x, t) in &[
        (0.0, 1.0),
        (0.5, 1.0),
        (-0.8, 0.3),
        (0.95, 2.0),
        (0.0, 0.05),
    ] {
        let integral = density_integral(t, x, b, l, sigma);
        let series = two_barrier_series(b - x, l - x, t, sigma, &cfg).unwrap();
        assert!(
            (integral - series).abs() < 1e-9,
            "x = {x}, t = {t}: {integral} vs {series}"
        );
    }
}

#[test]
fn density_nonnegative_on_grid() {
    let cfg = SeriesConfig::default();
    for i in 1..=40 {
        let s = i as f64 * 0.05;
        for j in 1..20 {
            let x = -1.0 + j as f64 * 0.1;
            assert!(hitting_density(s, x, -1.0, 1.0, 1.0, &cfg).unwrap() >= 0.0);
        }
    }
}

proptest! {
    #[test]
    fn series_monotone_and_bounded(
        b in -4.0f64..-0.05,
        l in 0.05f64..4.0,
        dl in 0.0f64..2.0,
        t in 0.05f64..4.0,
        dt in 0.0f64..2.0,
        sigma in 0.2f64..2.0,
    ) {
        let cfg = SeriesConfig::default();
        let v = two_barrier_series(b, l, t, sigma, &cfg).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        // Strictly below 1 whenever the survival probability is representable.
        if survival_spectral(t, 0.0, b, l, sigma) > 1e-14 {
            prop_assert!(v < 1.0);
        }
        let wider = two_barrier_series(b, l + dl, t, sigma, &cfg).unwrap();
        prop_assert!(wider <= v + 1e-12);
        let later = two_barrier_series(b, l, t + dt, sigma, &cfg).unwrap();
        prop_assert!(later >= v - 1e-12);
        let mirrored = two_barrier_series(-l, -b, t, sigma, &cfg).unwrap();
        prop_assert!((mirrored - v).abs() < 1e-14);
    }
}
