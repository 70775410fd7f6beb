//! Phase-space probability densities and their action-angle images.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::chart::{CanonicalChart, HarmonicChart};
use crate::error::{Error, Result};

pub type PhaseFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type Sampler = Arc<dyn Fn(&mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// A probability density `rho_c(p, q)` on a `2N`-dimensional phase space.
#[derive(Clone)]
pub struct PhaseSpaceDensity {
    pub label: String,
    dim: usize,
    evaluate: PhaseFn,
    sampler: Option<Sampler>,
    /// Quadrature box: `N` momentum bounds followed by `N` position bounds.
    pub support: Vec<(f64, f64)>,
}

impl fmt::Debug for PhaseSpaceDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseSpaceDensity")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("has_sampler", &self.sampler.is_some())
            .field("support", &self.support)
            .finish()
    }
}

/// Box half-width in standard deviations for Gaussian supports.
const GAUSSIAN_REACH: f64 = 10.0;

impl PhaseSpaceDensity {
    pub fn from_parts(
        label: impl Into<String>,
        dim: usize,
        evaluate: PhaseFn,
        sampler: Option<Sampler>,
        support: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if support.len() != 2 * dim {
            return Err(Error::DimensionMismatch {
                expected: 2 * dim,
                found: support.len(),
            });
        }
        Ok(Self {
            label: label.into(),
            dim,
            evaluate,
            sampler,
            support,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn evaluate(&self, p: &[f64], q: &[f64]) -> f64 {
        (self.evaluate)(p, q)
    }

    pub fn evaluator(&self) -> PhaseFn {
        Arc::clone(&self.evaluate)
    }

    pub fn sampler(&self) -> Option<&Sampler> {
        self.sampler.as_ref()
    }

    /// Product of independent normals in every coordinate.
    pub fn gaussian(p0: &[f64], q0: &[f64], sigma_p: &[f64], sigma_q: &[f64]) -> Result<Self> {
        let n = p0.len();
        for v in [q0, sigma_p, sigma_q] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
        }
        for &s in sigma_p.iter().chain(sigma_q) {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::NonPositiveParameter {
                    name: "sigma",
                    value: s,
                });
            }
        }
        let (p0, q0, sp, sq) = (p0.to_vec(), q0.to_vec(), sigma_p.to_vec(), sigma_q.to_vec());
        let support = p0
            .iter()
            .zip(&sp)
            .chain(q0.iter().zip(&sq))
            .map(|(&c, &s)| (c - GAUSSIAN_REACH * s, c + GAUSSIAN_REACH * s))
            .collect();
        let (ep0, eq0, esp, esq) = (p0.clone(), q0.clone(), sp.clone(), sq.clone());
        let evaluate: PhaseFn = Arc::new(move |p: &[f64], q: &[f64]| {
            let mut out = 1.0;
            for i in 0..ep0.len() {
                out *= normal_pdf(p[i], ep0[i], esp[i]) * normal_pdf(q[i], eq0[i], esq[i]);
            }
            out
        });
        let sampler: Sampler = Arc::new(move |rng: &mut ChaCha8Rng| {
            let p = (0..p0.len())
                .map(|i| p0[i] + sp[i] * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let q = (0..q0.len())
                .map(|i| q0[i] + sq[i] * rng.sample::<f64, _>(StandardNormal))
                .collect();
            (p, q)
        });
        Self::from_parts("gaussian", n, evaluate, Some(sampler), support)
    }

    /// Canonical ensemble `exp(-H/T)/Z` of a separable harmonic oscillator.
    pub fn thermal(chart: &HarmonicChart, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::NonPositiveParameter {
                name: "temperature",
                value: temperature,
            });
        }
        let n = chart.dim();
        let sp: Vec<f64> = chart.modes.iter().map(|o| (o.mass * temperature).sqrt()).collect();
        let sq: Vec<f64> = chart
            .modes
            .iter()
            .map(|o| (temperature / (o.mass * o.omega * o.omega)).sqrt())
            .collect();
        let mut d = Self::gaussian(&vec![0.0; n], &vec![0.0; n], &sp, &sq)?;
        d.label = "thermal".into();
        Ok(d)
    }

    /// Uniform in angle and uniform in action over `[k0 - w/2, k0 + w/2)`
    /// for every degree of freedom: a regularized microcanonical shell.
    pub fn ring(chart: &HarmonicChart, k0: &[f64], width: f64) -> Result<Self> {
        let n = chart.dim();
        if k0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: k0.len(),
            });
        }
        if !(width > 0.0) {
            return Err(Error::NonPositiveParameter {
                name: "width",
                value: width,
            });
        }
        if k0.iter().any(|&k| k - 0.5 * width < chart.action_floor()) {
            return Err(Error::OutOfDomain(format!(
                "ring {k0:?} of width {width} reaches below the action floor"
            )));
        }
        let k0 = k0.to_vec();
        let height = (2.0 * PI * width).powi(n as i32).recip();
        let eval_chart = chart.clone();
        let ek0 = k0.clone();
        let evaluate: PhaseFn = Arc::new(move |p: &[f64], q: &[f64]| {
            let (k, _) = eval_chart.forward(p, q);
            let inside = k
                .iter()
                .zip(&ek0)
                .all(|(&ki, &c)| (c - 0.5 * width..c + 0.5 * width).contains(&ki));
            if inside {
                height
            } else {
                0.0
            }
        });
        let sample_chart = chart.clone();
        let sk0 = k0.clone();
        let sampler: Sampler = Arc::new(move |rng: &mut ChaCha8Rng| {
            let k: Vec<f64> = sk0
                .iter()
                .map(|&c| c + width * (rng.random::<f64>() - 0.5))
                .collect();
            let angle: Vec<f64> = (0..k.len()).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
            sample_chart.inverse(&k, &angle)
        });
        let support = chart
            .modes
            .iter()
            .zip(&k0)
            .map(|(o, &c)| {
                let pmax = (2.0 * o.mass * o.omega * (c + width)).sqrt();
                (-pmax, pmax)
            })
            .chain(chart.modes.iter().zip(&k0).map(|(o, &c)| {
                let qmax = (2.0 * (c + width) / (o.mass * o.omega)).sqrt();
                (-qmax, qmax)
            }))
            .collect();
        let mut d = Self::from_parts("ring", n, evaluate, Some(sampler), support)?;
        d.label = "ring".into();
        Ok(d)
    }

    /// Point mass at `(p0, q0)`. It has no density function (evaluates to
    /// zero) and is only usable through its sampler.
    pub fn point(p0: &[f64], q0: &[f64]) -> Result<Self> {
        if p0.len() != q0.len() {
            return Err(Error::DimensionMismatch {
                expected: p0.len(),
                found: q0.len(),
            });
        }
        let (p0, q0) = (p0.to_vec(), q0.to_vec());
        let support: Vec<(f64, f64)> = p0.iter().chain(&q0).map(|&c| (c, c)).collect();
        let sampler: Sampler = Arc::new(move |_: &mut ChaCha8Rng| (p0.clone(), q0.clone()));
        Self::from_parts("point", support_dim(&support), Arc::new(|_: &[f64], _: &[f64]| 0.0), Some(sampler), support)
    }

    /// Midpoint-rule integral over the support box with `points` nodes per
    /// axis.
    pub fn normalization(&self, points: usize) -> f64 {
        let axes: Vec<Vec<(f64, f64)>> = self
            .support
            .iter()
            .map(|&(lo, hi)| midpoint_nodes(lo, hi, points))
            .collect();
        let n = self.dim;
        let mut total = 0.0;
        for_each_tensor_node(&axes, |x, w| {
            total += w * self.evaluate(&x[..n], &x[n..]);
        });
        total
    }
}

fn support_dim(support: &[(f64, f64)]) -> usize {
    support.len() / 2
}

pub(crate) fn normal_pdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Midpoint nodes and weights on `[lo, hi]`.
pub fn midpoint_nodes(lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
    let h = (hi - lo) / points as f64;
    (0..points).map(|i| (lo + (i as f64 + 0.5) * h, h)).collect()
}

/// Visits the tensor product of per-axis `(node, weight)` lists.
pub fn for_each_tensor_node(axes: &[Vec<(f64, f64)>], mut f: impl FnMut(&[f64], f64)) {
    let dims = axes.len();
    if axes.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0usize; dims];
    let mut x = vec![0.0; dims];
    loop {
        let mut w = 1.0;
        for a in 0..dims {
            let (xa, wa) = axes[a][idx[a]];
            x[a] = xa;
            w *= wa;
        }
        f(&x, w);
        let mut a = dims;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// `rho'_c(K, Q)`, a density on action-angle space, `2 pi`-periodic in
/// every angle.
#[derive(Clone)]
pub struct ActionAngleDensity {
    pub label: String,
    dim: usize,
    evaluate: PhaseFn,
}

impl fmt::Debug for ActionAngleDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActionAngleDensity")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish()
    }
}

impl ActionAngleDensity {
    /// Wraps `f(K, Q)`; the caller guarantees periodicity in `Q`.
    pub fn from_fn(
        label: impl Into<String>,
        dim: usize,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            dim,
            evaluate: Arc::new(f),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn evaluate(&self, k: &[f64], angle: &[f64]) -> f64 {
        (self.evaluate)(k, angle)
    }

    /// `max |rho'(K, Q) - rho'(K, Q + 2 pi e_i)|` over the probes.
    pub fn periodicity_residual(&self, probes: &[(Vec<f64>, Vec<f64>)]) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, angle) in probes {
            let base = self.evaluate(k, angle);
            for i in 0..self.dim {
                let mut shifted = angle.clone();
                shifted[i] += 2.0 * PI;
                worst = worst.max((self.evaluate(k, &shifted) - base).abs());
            }
        }
        worst
    }
}

/// `rho'_c(K, Q) = rho_c(p(K, Q), q(K, Q))`. The chart is canonical, so no
/// Jacobian factor appears.
pub fn pushforward_density(
    rho_c: &PhaseSpaceDensity,
    chart: Arc<dyn CanonicalChart>,
) -> Result<ActionAngleDensity> {
    if chart.dim() != rho_c.dim() {
        return Err(Error::SupportOutsideChart(format!(
            "density has {} degrees of freedom, chart `{}` has {}",
            rho_c.dim(),
            chart.name(),
            chart.dim()
        )));
    }
    if !chart.covers(&rho_c.support) {
        return Err(Error::SupportOutsideChart(format!(
            "support {:?} leaves the domain of chart `{}`",
            rho_c.support,
            chart.name()
        )));
    }
    let f = rho_c.evaluator();
    Ok(ActionAngleDensity {
        label: rho_c.label.clone(),
        dim: rho_c.dim(),
        evaluate: Arc::new(move |k: &[f64], angle: &[f64]| {
            let (p, q) = chart.inverse(k, angle);
            f(&p, &q)
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_normalizes() {
        let g = PhaseSpaceDensity::gaussian(&[0.5], &[-1.0], &[0.7], &[1.3]).unwrap();
        assert!((g.normalization(400) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn thermal_widths() {
        let chart = HarmonicChart::new(&[(2.0, 3.0)]).unwrap();
        let t = PhaseSpaceDensity::thermal(&chart, 0.5).unwrap();
        // exp(-H/T)/Z with Z = 2 pi T / omega
        let (p, q): (f64, f64) = (0.4, -0.2);
        let h = p * p / 4.0 + 2.0 * 9.0 * q * q / 2.0;
        let want = (-h / 0.5).exp() * 3.0 / (2.0 * PI * 0.5);
        assert!((t.evaluate(&[p], &[q]) - want).abs() < 1e-14);
    }

    #[test]
    fn standard_gaussian_pushes_forward_to_exponential() {
        let chart = Arc::new(HarmonicChart::new(&[(1.0, 1.0)]).unwrap());
        let g = PhaseSpaceDensity::gaussian(&[0.0], &[0.0], &[1.0], &[1.0]).unwrap();
        let rp = pushforward_density(&g, chart).unwrap();
        for (k, angle) in [(0.3f64, 1.0), (2.0, 4.0), (5.5, 0.1)] {
            let want = (-k).exp() / (2.0 * PI);
            assert!((rp.evaluate(&[k], &[angle]) - want).abs() < 1e-15);
        }
        let probes = vec![(vec![1.0], vec![0.3]), (vec![0.2], vec![6.0])];
        assert!(rp.periodicity_residual(&probes) < 1e-15);
    }

    #[test]
    fn ring_is_uniform_on_its_shell() {
        let chart = HarmonicChart::new(&[(1.0, 1.0)]).unwrap();
        let r = PhaseSpaceDensity::ring(&chart, &[2.0], 0.1).unwrap();
        let (p, q) = chart.inverse(&[2.01], &[1.0]);
        assert!((r.evaluate(&p, &q) - 1.0 / (2.0 * PI * 0.1)).abs() < 1e-12);
        let (p, q) = chart.inverse(&[2.2], &[1.0]);
        assert_eq!(r.evaluate(&p, &q), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_support_error() {
        let chart = Arc::new(HarmonicChart::new(&[(1.0, 1.0), (1.0, 2.0)]).unwrap());
        let g = PhaseSpaceDensity::gaussian(&[0.0], &[0.0], &[1.0], &[1.0]).unwrap();
        assert!(matches!(pushforward_density(&g, chart), Err(Error::SupportOutsideChart(_))));
    }

    #[test]
    fn tensor_visits_every_node() {
        let axes = vec![midpoint_nodes(0.0, 1.0, 3), midpoint_nodes(0.0, 2.0, 4)];
        let mut count = 0;
        let mut area = 0.0;
        for_each_tensor_node(&axes, |_, w| {
            count += 1;
            area += w;
        });
        assert_eq!(count, 12);
        assert!((area - 2.0).abs() < 1e-15);
    }
}
