//! Independent reference values for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use gcap::quad::{integrate, QuadOptions};

pub fn tight() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_intervals: 20_000,
    }
}

/// `2/sqrt(2 pi) * int_x^inf exp(-r^2/2) dr` by direct quadrature.
pub fn phi_by_quadrature(x: f64) -> f64 {
    let k = 2.0 / (2.0 * PI).sqrt();
    let density = |r: f64| k * (-0.5 * r * r).exp();
    let hi = x.max(0.0) + 40.0;
    // Split at 0 and a few unit points so each piece is smooth and modest.
    let mut cuts = vec![x];
    for c in [-8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0] {
        if c > x && c < hi {
            cuts.push(c);
        }
    }
    cuts.push(hi);
    cuts.windows(2)
        .map(|w| integrate(density, w[0], w[1], tight()).unwrap().value)
        .sum()
}

/// `E[f(sd * Z)]` for standard normal `Z`, with extra break points
/// (in the `x` variable) where `f` has kinks.
pub fn gaussian_expectation(f: impl Fn(f64) -> f64, sd: f64, kinks: &[f64]) -> f64 {
    let weight = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    let mut cuts: Vec<f64> = vec![-14.0, 14.0];
    cuts.extend(kinks.iter().map(|k| k / sd).filter(|z| z.abs() < 14.0));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.windows(2)
        .map(|w| {
            integrate(|z| f(sd * z) * weight(z), w[0], w[1], tight())
                .unwrap()
                .value
        })
        .sum()
}

/// `P(exit time > s)` for `sigma W` started at `x` in `(b, l)`, from the
/// sine (eigenfunction) expansion. Converges fast for large `s`.
pub fn survival_spectral(s: f64, x: f64, b: f64, l: f64, sigma: f64) -> f64 {
    let width = l - b;
    let mut sum = 0.0;
    let mut k = 1u32;
    loop {
        let kf = k as f64;
        let decay = (-kf * kf * PI * PI * sigma * sigma * s / (2.0 * width * width)).exp();
        let term = 4.0 / (kf * PI) * (kf * PI * (x - b) / width).sin() * decay;
        sum += term;
        if decay < 1e-18 {
            break;
        }
        k += 2;
    }
    sum
}

/// `int_0^upper hitting_density ds` by adaptive quadrature on a log-spaced
/// partition (the density is very flat near 0 and peaked just after).
pub fn density_integral(upper: f64, x: f64, b: f64, l: f64, sigma: f64) -> f64 {
    let cfg = gcap::SeriesConfig::default();
    let f = |s: f64| gcap::hitting_density(s, x, b, l, sigma, &cfg).unwrap();
    let mut cuts = vec![0.0];
    let mut c = upper * 1e-6;
    while c < upper {
        cuts.push(c);
        c *= 4.0;
    }
    cuts.push(upper);
    cuts.windows(2)
        .map(|w| integrate(f, w[0], w[1], tight()).unwrap().value)
        .sum()
}

/// Bounded piecewise-linear function through `(knots[i], values[i])`,
/// constant outside the knot range; Lipschitz with constant
/// `max |slope|`.
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        let v = &self.values;
        if x <= k[0] {
            return v[0];
        }
        if x >= k[k.len() - 1] {
            return v[v.len() - 1];
        }
        let j = k.partition_point(|&a| a <= x) - 1;
        let w = (x - k[j]) / (k[j + 1] - k[j]);
        (1.0 - w) * v[j] + w * v[j + 1]
    }
}
