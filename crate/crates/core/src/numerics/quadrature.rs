//! Quadrature rules: the periodic trapezoid for angle integrals and
//! Gauss-Legendre for smooth integrals over bounded intervals.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use crate::error::{Error, Result};

/// Relative spacing error tolerated before a node set counts as non-uniform.
const UNIFORMITY_SLACK: f64 = 1e-12;

/// Nodes `start + j * period / count`, `j = 0..count`.
pub fn periodic_nodes(count: usize, period: f64) -> Vec<f64> {
    let h = period / count as f64;
    (0..count).map(|j| j as f64 * h).collect()
}

/// Equal-weight trapezoid sum over one period of a uniformly sampled
/// periodic function. Exact up to roundoff for trigonometric polynomials
/// whose degree is below the number of samples.
pub fn periodic_trapezoid<T>(values: &[T], period: f64) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    if values.is_empty() {
        return T::default();
    }
    let h = period / values.len() as f64;
    let sum = values.iter().fold(T::default(), |acc, &v| acc + v);
    sum * h
}

/// Periodic trapezoid with an explicit node list, which is validated to be
/// uniform and to cover exactly one period.
pub fn periodic_trapezoid_on<T>(nodes: &[f64], values: &[T], period: f64) -> Result<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    if nodes.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: nodes.len(),
            found: values.len(),
        });
    }
    if nodes.len() < 2 {
        return Err(Error::NonUniformGrid("need at least two nodes".into()));
    }
    let h = period / nodes.len() as f64;
    for (j, w) in nodes.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > UNIFORMITY_SLACK * period {
            return Err(Error::NonUniformGrid(format!(
                "spacing {} between nodes {j} and {} differs from period/count = {h}",
                w[1] - w[0],
                j + 1
            )));
        }
    }
    Ok(periodic_trapezoid(values, period))
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule with `panels` equal sub-intervals.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TWO_PI: f64 = 2.0 * PI;

    #[test]
    fn one_plus_cos_normalizes_with_eight_points() {
        let v: Vec<f64> = periodic_nodes(8, TWO_PI)
            .iter()
            .map(|q| (1.0 + q.cos()) / TWO_PI)
            .collect();
        assert!((periodic_trapezoid(&v, TWO_PI) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pure_fourier_mode_integrates_to_zero() {
        let v: Vec<Complex<f64>> = periodic_nodes(8, TWO_PI)
            .iter()
            .map(|&q| Complex::from_polar(1.0, q))
            .collect();
        assert!(periodic_trapezoid(&v, TWO_PI).norm() < 1e-14);
    }

    #[test]
    fn cos_squared_three_q() {
        let v: Vec<f64> = periodic_nodes(16, TWO_PI)
            .iter()
            .map(|q| (3.0 * q).cos().powi(2))
            .collect();
        assert!((periodic_trapezoid(&v, TWO_PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn random_band_limited_family_is_exact() {
        // a_0 + sum_{n=1}^{7} a_n cos(nQ) + b_n sin(nQ) integrates to 2 pi a_0
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..20 {
            let a: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = |q: f64| {
                a[0] + (1..8)
                    .map(|n| a[n] * (n as f64 * q).cos() + b[n] * (n as f64 * q).sin())
                    .sum::<f64>()
            };
            let v: Vec<f64> = periodic_nodes(16, TWO_PI).into_iter().map(f).collect();
            assert!((periodic_trapezoid(&v, TWO_PI) - TWO_PI * a[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn non_uniform_nodes_rejected() {
        let nodes = [0.0, 1.0, 3.0, 4.0];
        let vals = [1.0; 4];
        assert!(matches!(
            periodic_trapezoid_on(&nodes, &vals, TWO_PI),
            Err(Error::NonUniformGrid(_))
        ));
        let good = periodic_nodes(4, TWO_PI);
        assert!((periodic_trapezoid_on(&good, &vals, TWO_PI).unwrap() - TWO_PI).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        for n in [1usize, 2, 5, 8, 16, 33] {
            let gl = GaussLegendre::new(n);
            assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            // degree 2n-1 monomial on [0, 2]
            let deg = 2 * n - 1;
            let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
            let got = gl.integrate(0.0, 2.0, |x| x.powi(deg as i32));
            assert!(((got - exact) / exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn gauss_legendre_exponential() {
        let gl = GaussLegendre::new(12);
        let got = gl.integrate_composite(0.0, 30.0, 30, |k| (-k).exp());
        assert!((got - (1.0 - (-30f64).exp())).abs() < 1e-14);
    }
}
