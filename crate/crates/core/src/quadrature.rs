//! Gauss-Legendre rules and composite integration over element lists.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 16;

/// Default points per y macro-element used by assembly.
pub const DEFAULT_ORDER: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<f64>,
    weights: Vec<f64>,
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl QuadratureRule {
    /// `n`-point Gauss-Legendre rule on `[-1, 1]`.
    pub fn gauss(n: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&n) {
            return Err(Error::QuadratureOrder(n));
        }
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Newton from the Chebyshev-like initial guess, converging to the i-th largest root.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            points[i] = -x;
            points[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            points[n / 2] = 0.0;
        }
        Ok(Self { points, weights })
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(p, w)| (mid + half * p, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Sum of mapped Gauss sums over `elements`.
pub fn integrate_elementwise(
    f: impl Fn(f64) -> f64,
    elements: &[(f64, f64)],
    rule: &QuadratureRule,
) -> Result<f64> {
    if elements.is_empty() {
        return Err(Error::EmptyElements);
    }
    Ok(elements
        .iter()
        .map(|&(a, b)| rule.integrate(a, b, &f))
        .sum())
}

/// `count` equal panels covering `[a, b]`.
pub fn uniform_panels(a: f64, b: f64, count: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / count as f64;
    (0..count)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = if k + 1 == count { b } else { lo + h };
            (lo, hi)
        })
        .collect()
}
