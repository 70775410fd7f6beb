//! Scalar phase-space maps: the observable `K_N(p, q)` and its conjugate
//! time `tau(p, q)`.

use std::fmt;
use std::sync::Arc;

use crate::classical::chart::{CanonicalChart, HarmonicChart, ACTION_FLOOR};
use crate::error::{Error, Result};
use crate::numerics::bracket::{gradient_fd, Gradient};
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::BracketMethod;

pub type ScalarFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64], &[f64]) -> Gradient + Send + Sync>;
pub type DomainFn = Arc<dyn Fn(&[f64], &[f64]) -> bool + Send + Sync>;

/// A real function on phase space with an optional analytic gradient and an
/// optional domain outside which it is singular or undefined.
#[derive(Clone)]
pub struct ScalarObservableMap {
    pub label: String,
    evaluate: ScalarFn,
    gradient: Option<GradientFn>,
    domain: Option<DomainFn>,
    /// Human-readable description of the domain.
    pub region: String,
}

impl fmt::Debug for ScalarObservableMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarObservableMap")
            .field("label", &self.label)
            .field("analytic_gradient", &self.gradient.is_some())
            .field("region", &self.region)
            .finish()
    }
}

impl ScalarObservableMap {
    pub fn new(label: impl Into<String>, f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            evaluate: Arc::new(f),
            gradient: None,
            domain: None,
            region: "all of phase space".into(),
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64], &[f64]) -> Gradient + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_domain(
        mut self,
        description: impl Into<String>,
        inside: impl Fn(&[f64], &[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.domain = Some(Arc::new(inside));
        self.region = description.into();
        self
    }

    pub fn evaluate(&self, p: &[f64], q: &[f64]) -> f64 {
        (self.evaluate)(p, q)
    }

    pub fn in_domain(&self, p: &[f64], q: &[f64]) -> bool {
        self.domain.as_ref().is_none_or(|d| d(p, q))
    }

    pub fn require_domain(&self, p: &[f64], q: &[f64]) -> Result<()> {
        if self.in_domain(p, q) {
            Ok(())
        } else {
            Err(Error::SingularPoint(format!(
                "`{}` at p = {p:?}, q = {q:?} (domain: {})",
                self.label, self.region
            )))
        }
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Analytic gradient when available, otherwise finite differences.
    pub fn gradient(&self, p: &[f64], q: &[f64], method: BracketMethod) -> Result<Gradient> {
        match &self.gradient {
            Some(g) => Ok(g(p, q)),
            None => gradient_fd(&*self.evaluate, p, q, method),
        }
    }

    /// `max |analytic - central difference|` over the probes; `None` when
    /// the map has no analytic gradient.
    pub fn gradient_consistency(&self, probes: &[(Vec<f64>, Vec<f64>)], step: f64) -> Result<Option<f64>> {
        let Some(g) = &self.gradient else {
            return Ok(None);
        };
        let mut worst: f64 = 0.0;
        for (p, q) in probes {
            self.require_domain(p, q)?;
            let (ap, aq) = g(p, q);
            let (np, nq) = gradient_fd(&*self.evaluate, p, q, BracketMethod::Central { step })?;
            for (a, n) in ap.iter().zip(&np).chain(aq.iter().zip(&nq)) {
                worst = worst.max((a - n).abs());
            }
        }
        Ok(Some(worst))
    }

    /// Same map with its value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let f = Arc::clone(&self.evaluate);
        let g = self.gradient.clone();
        Self {
            label: format!("{factor} * {}", self.label),
            evaluate: Arc::new(move |p, q| factor * f(p, q)),
            gradient: g.map(|g| -> GradientFn {
                Arc::new(move |p, q| {
                    let (gp, gq) = g(p, q);
                    (gp.iter().map(|x| factor * x).collect(), gq.iter().map(|x| factor * x).collect())
                })
            }),
            domain: self.domain.clone(),
            region: self.region.clone(),
        }
    }
}

/// An observable together with a conjugate time on a stated region.
#[derive(Debug, Clone)]
pub struct LevelSetSystem {
    pub name: String,
    pub observable: ScalarObservableMap,
    pub tau: ScalarObservableMap,
}

impl LevelSetSystem {
    /// `K = p^2 / 2m`, `tau = m q / p`, on the half-plane `p > margin`.
    pub fn free_particle(mass: f64, margin: f64) -> Result<Self> {
        positive("mass", mass)?;
        positive("margin", margin)?;
        let observable = ScalarObservableMap::new("K_N", move |p, _| 0.5 * p[0] * p[0] / mass)
            .with_gradient(move |p, _| (vec![p[0] / mass], vec![0.0]));
        let tau = ScalarObservableMap::new("tau", move |p, q| mass * q[0] / p[0])
            .with_gradient(move |p, q| (vec![-mass * q[0] / (p[0] * p[0])], vec![mass / p[0]]))
            .with_domain(format!("p > {margin}"), move |p, _| p[0] > margin);
        Ok(Self {
            name: "free_particle".into(),
            observable,
            tau,
        })
    }

    /// `H = p^2 / 2m + c q^4 / 4` with `tau = int_0^q m dx / p(x)` along the
    /// `p > 0` branch of the energy surface, on `p > margin`.
    pub fn quartic(mass: f64, coupling: f64, margin: f64) -> Result<Self> {
        positive("mass", mass)?;
        positive("coupling", coupling)?;
        positive("margin", margin)?;
        let observable = ScalarObservableMap::new("K_N", move |p, q| {
            0.5 * p[0] * p[0] / mass + 0.25 * coupling * q[0].powi(4)
        })
        .with_gradient(move |p, q| (vec![p[0] / mass], vec![coupling * q[0].powi(3)]));
        let rule = Arc::new(GaussLegendre::new(16));
        let tau = ScalarObservableMap::new("tau", move |p, q| quartic_time(&rule, mass, coupling, p[0], q[0]))
            .with_domain(format!("p > {margin}"), move |p, _| p[0] > margin);
        Ok(Self {
            name: "quartic".into(),
            observable,
            tau,
        })
    }

    /// `K = H = omega K_action`, `tau = Q / omega`, away from the angle cut
    /// (`Q` within `cut_margin` of `0` or `2 pi`) and the origin.
    pub fn harmonic(mass: f64, omega: f64, cut_margin: f64) -> Result<Self> {
        let chart = HarmonicChart::new(&[(mass, omega)])?;
        positive("cut_margin", cut_margin)?;
        let c1 = chart.clone();
        let observable = ScalarObservableMap::new("K_N", move |p, q| c1.energy(&c1.forward(p, q).0))
            .with_gradient(move |p, q| (vec![p[0] / mass], vec![mass * omega * omega * q[0]]));
        let c2 = chart.clone();
        let c3 = chart;
        let tau = ScalarObservableMap::new("tau", move |p, q| c2.forward(p, q).1[0] / omega).with_domain(
            format!("{cut_margin} < Q < 2 pi - {cut_margin}, K > 0"),
            move |p, q| {
                let (k, a) = c3.forward(p, q);
                k[0] > ACTION_FLOOR && a[0] > cut_margin && a[0] < std::f64::consts::TAU - cut_margin
            },
        );
        Ok(Self {
            name: "harmonic".into(),
            observable,
            tau,
        })
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

/// Panels of the substitution `x = q t`, graded geometrically toward
/// `t = 1` where the integrand is nearly singular for small `p`.
const GRADED_PANELS: u32 = 40;

/// `q int_0^1 m dt / sqrt(p^2 + m c q^4 (1 - t^4) / 2)`.
fn quartic_time(rule: &GaussLegendre, mass: f64, coupling: f64, p: f64, q: f64) -> f64 {
    let p2 = p * p;
    let q4 = q.powi(4);
    let integrand = |t: f64| {
        // 1 - t^4 = (1 - t)(1 + t)(1 + t^2), accurate near t = 1
        let s = 1.0 - t;
        mass / (p2 + 0.5 * mass * coupling * q4 * s * (1.0 + t) * (1.0 + t * t)).sqrt()
    };
    let mut total = 0.0;
    let mut lo = 0.0;
    for k in 1..=GRADED_PANELS {
        let hi = if k == GRADED_PANELS { 1.0 } else { 1.0 - 0.5f64.powi(k as i32) };
        total += rule.integrate(lo, hi, integrand);
        lo = hi;
    }
    q * total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_particle_gradients_agree() {
        let s = LevelSetSystem::free_particle(1.5, 0.1).unwrap();
        let probes = vec![(vec![0.7], vec![0.3]), (vec![2.0], vec![-1.0])];
        assert!(s.observable.gradient_consistency(&probes, 1e-5).unwrap().unwrap() < 1e-6);
        assert!(s.tau.gradient_consistency(&probes, 1e-5).unwrap().unwrap() < 1e-6);
    }

    #[test]
    fn tau_domain_is_enforced() {
        let s = LevelSetSystem::free_particle(1.0, 0.1).unwrap();
        assert!(matches!(s.tau.require_domain(&[0.05], &[1.0]), Err(Error::SingularPoint(_))));
        assert!(s.tau.require_domain(&[0.5], &[1.0]).is_ok());
    }

    #[test]
    fn quartic_time_small_q_is_free() {
        // for |q| -> 0 the potential is negligible and tau -> m q / p
        let s = LevelSetSystem::quartic(2.0, 1.0, 0.1).unwrap();
        let t = s.tau.evaluate(&[0.8], &[1e-3]);
        let free = 2.0 * 1e-3 / 0.8;
        assert!((t - free).abs() < 1e-11 * free);
    }

    #[test]
    fn quartic_time_matches_dense_quadrature() {
        // independent composite midpoint rule on the original variable
        let (m, c, p, q): (f64, f64, f64, f64) = (1.0, 1.0, 0.4, 1.3);
        let e = 0.5 * p * p / m + 0.25 * c * q.powi(4);
        let n = 2_000_000;
        let h = q / n as f64;
        let mid: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                m / (2.0 * m * (e - 0.25 * c * x.powi(4))).sqrt()
            })
            .sum::<f64>()
            * h;
        let s = LevelSetSystem::quartic(m, c, 0.1).unwrap();
        assert!((s.tau.evaluate(&[p], &[q]) - mid).abs() < 1e-9);
    }

    #[test]
    fn harmonic_energy() {
        let s = LevelSetSystem::harmonic(1.0, 2.0, 0.05).unwrap();
        let k = s.observable.evaluate(&[1.0], &[0.5]);
        assert!((k - (0.5 + 0.5 * 4.0 * 0.25)).abs() < 1e-15);
        assert!(!s.tau.in_domain(&[1.0], &[0.0]));
        assert!(s.tau.in_domain(&[-1.0], &[0.0]));
    }

    #[test]
    fn scaling_scales_gradient() {
        let s = LevelSetSystem::free_particle(1.0, 0.1).unwrap();
        let t2 = s.tau.scaled(2.0);
        let m = BracketMethod::Central { step: 1e-5 };
        let (gp, _) = t2.gradient(&[1.0], &[1.0], m).unwrap();
        assert_eq!(gp, vec![-2.0]);
    }
}
