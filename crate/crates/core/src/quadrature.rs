//! Gauss–Legendre rules and the two-chart disc quadrature used for
//! integrals over the whole plane.

use serde::{Deserialize, Serialize};

use crate::num::{pairwise_sum, Real};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n > 0, "need at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let two = T::lit(2.0);
    let half = n.div_ceil(2);
    for i in 0..half {
        let guess = (T::PI() * (T::count(i) + T::lit(0.75)) / (T::count(n) + T::lit(0.5))).cos();
        let mut x = guess;
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = two / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf = T::count(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::count(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Resolution of the polar tensor rule applied on each unit-disc chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes in the radial direction.
    pub radial: usize,
    /// Uniform nodes in the angular direction.
    pub angular: usize,
    /// Accepted relative error estimate.
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            radial: 200,
            angular: 200,
            rel_tol: 1e-10,
        }
    }
}

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
}

/// Integrates `g(r cos t, r sin t) r dr dt` over the unit disc with
/// Gauss–Legendre in `r` and the periodic trapezoid rule in `t`.
pub fn disc_integral<T: Real, F>(radial: usize, angular: usize, g: F) -> T
where
    F: Fn(T, T) -> T,
{
    let (x, w) = gauss_legendre::<T>(radial);
    let half = T::lit(0.5);
    let dt = T::lit(2.0) * T::PI() / T::count(angular);
    let ring_sums: Vec<T> = x
        .iter()
        .zip(&w)
        .map(|(&xi, &wi)| {
            let r = half * (xi + T::one());
            let ring: Vec<T> = (0..angular)
                .map(|j| {
                    let t = dt * T::count(j);
                    g(r * t.cos(), r * t.sin())
                })
                .collect();
            pairwise_sum(&ring) * dt * r * wi * half
        })
        .collect();
    pairwise_sum(&ring_sums)
}
