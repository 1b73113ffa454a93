//! Reference computations shared by the integration tests. Nothing here calls
//! into the library's numerics.

#![allow(dead_code)]

use std::f64::consts::PI;

/// `ln Gamma(x)` for `x > 0`: upward recurrence to `x >= 20`, then Stirling.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0);
    let mut shift = 0.0;
    let mut z = x;
    while z < 20.0 {
        shift += z.ln();
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series - shift
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub fn det2(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// `S = X X^T / n` for a `2 x n` data matrix given as two rows.
pub fn cov2(x: &[Vec<f64>; 2]) -> [[f64; 2]; 2] {
    let n = x[0].len() as f64;
    let dot = |a: &[f64], b: &[f64]| compensated_sum(a.iter().zip(b).map(|(u, v)| u * v)) / n;
    let off = dot(&x[0], &x[1]);
    [[dot(&x[0], &x[0]), off], [off, dot(&x[1], &x[1])]]
}

/// Closed-form `log p(X | alpha, Delta)` for `p = 2`, written out with explicit
/// determinants and `Gamma_2(a) = sqrt(pi) Gamma(a) Gamma(a - 1/2)`.
pub fn log_ml_2x2(s: [[f64; 2]; 2], n: usize, alpha: f64, delta: [[f64; 2]; 2]) -> f64 {
    let nf = n as f64;
    let c = alpha / (1.0 - alpha);
    let nu0 = c * nf + 3.0;
    let nu1 = nf / (1.0 - alpha) + 3.0;
    let lg2 = |a: f64| 0.5 * PI.ln() + ln_gamma(a) + ln_gamma(a - 0.5);
    let post = [
        [s[0][0] + c * delta[0][0], s[0][1] + c * delta[0][1]],
        [s[1][0] + c * delta[1][0], s[1][1] + c * delta[1][1]],
    ];
    let prior = [[c * delta[0][0], c * delta[0][1]], [c * delta[1][0], c * delta[1][1]]];
    compensated_sum([
        -nf * (nf * PI).ln(),
        lg2(nu1 / 2.0),
        -lg2(nu0 / 2.0),
        (nu0 / 2.0) * det2(prior).ln(),
        -(nu1 / 2.0) * det2(post).ln(),
    ])
}

/// Log of the mean of `exp(v)` over `values`.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + (compensated_sum(values.iter().map(|v| (v - max).exp())) / values.len() as f64).ln()
}
