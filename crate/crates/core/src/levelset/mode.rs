//! Level-set eigenfunctions `xi delta[K' - K(p, q)] e^{i lambda tau(p, q)}`.

use std::fmt;
use std::sync::Arc;

use super::maps::ScalarObservableMap;
use crate::classical::density::for_each_tensor_node;
use crate::error::{Error, Result};
use crate::numerics::bracket::bracket_from_gradients;
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::{poisson_bracket_with, BracketMethod, KernelKind, KernelSpec, C64};

pub type Probe = (Vec<f64>, Vec<f64>);

#[derive(Debug, Clone)]
pub struct LevelSetMode {
    pub observable: ScalarObservableMap,
    pub k_prime: f64,
    pub lambda: f64,
    pub tau: ScalarObservableMap,
    pub xi: f64,
    pub kernel: KernelSpec,
}

impl LevelSetMode {
    pub fn new(
        observable: ScalarObservableMap,
        tau: ScalarObservableMap,
        k_prime: f64,
        lambda: f64,
        xi: f64,
        kernel: KernelSpec,
    ) -> Result<Self> {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::NonPositiveParameter { name: "xi", value: xi });
        }
        if !(k_prime.is_finite() && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("K' = {k_prime}, lambda = {lambda}")));
        }
        Ok(Self {
            observable,
            k_prime,
            lambda,
            tau,
            xi,
            kernel,
        })
    }

    /// `xi w(K(p, q) - K')`, the regularized delta without its phase.
    pub fn envelope(&self, p: &[f64], q: &[f64]) -> f64 {
        self.xi * self.kernel.weight(self.observable.evaluate(p, q) - self.k_prime)
    }

    /// Full mode value. The phase is only evaluated where the envelope is
    /// nonzero, so `tau` may be singular off the level set band.
    pub fn value(&self, p: &[f64], q: &[f64]) -> C64 {
        let env = self.envelope(p, q);
        if env == 0.0 || self.lambda == 0.0 {
            return C64::new(env, 0.0);
        }
        C64::from_polar(env, self.lambda * self.tau.evaluate(p, q))
    }
}

/// `max |{tau, K} - 1|` over the probes. Analytic gradients are used when
/// both maps carry them.
pub fn conjugate_time_check(
    tau: &ScalarObservableMap,
    observable: &ScalarObservableMap,
    probes: &[Probe],
    method: BracketMethod,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (p, q) in probes {
        tau.require_domain(p, q)?;
        observable.require_domain(p, q)?;
        let b = bracket_from_gradients(&tau.gradient(p, q, method)?, &observable.gradient(p, q, method)?);
        worst = worst.max((b - 1.0).abs());
    }
    Ok(worst)
}

/// A smooth test function with a box (momenta then positions) outside of
/// which it is treated as zero.
#[derive(Clone)]
pub struct TestFunction {
    pub label: String,
    evaluate: Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
    pub support: Vec<(f64, f64)>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("support", &self.support)
            .finish()
    }
}

impl TestFunction {
    pub fn new(
        label: impl Into<String>,
        support: Vec<(f64, f64)>,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            evaluate: Arc::new(f),
            support,
        }
    }

    /// Product Gaussian centered at `(p0, q0)` with width `sigma`, cut at
    /// eight widths.
    pub fn gaussian_bump(p0: &[f64], q0: &[f64], sigma: f64) -> Self {
        let center: Vec<f64> = p0.iter().chain(q0).copied().collect();
        let support = center.iter().map(|&c| (c - 8.0 * sigma, c + 8.0 * sigma)).collect();
        Self::new("gaussian_bump", support, move |p, q| {
            let r2: f64 = p
                .iter()
                .chain(q)
                .zip(&center)
                .map(|(x, c)| (x - c) * (x - c))
                .sum();
            (-0.5 * r2 / (sigma * sigma)).exp()
        })
    }

    pub fn zero(support: Vec<(f64, f64)>) -> Self {
        Self::new("zero", support, |_, _| 0.0)
    }

    pub fn evaluate(&self, p: &[f64], q: &[f64]) -> f64 {
        (self.evaluate)(p, q)
    }
}

/// Node layout for level-set integrals over a test function's box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakQuadrature {
    /// Composite panels per axis.
    pub panels: usize,
    /// Gauss-Legendre nodes per panel.
    pub nodes: usize,
}

impl Default for WeakQuadrature {
    fn default() -> Self {
        Self { panels: 32, nodes: 12 }
    }
}

impl WeakQuadrature {
    pub fn doubled(self) -> Self {
        Self {
            panels: 2 * self.panels,
            nodes: self.nodes,
        }
    }
}

/// Samples of the domain predicate on a lattice covering the box,
/// boundary included.
fn box_inside_domain(map: &ScalarObservableMap, support: &[(f64, f64)]) -> bool {
    const SIDE: usize = 17;
    let n = support.len() / 2;
    let axes: Vec<Vec<(f64, f64)>> = support
        .iter()
        .map(|&(lo, hi)| (0..SIDE).map(|i| (lo + (hi - lo) * i as f64 / (SIDE - 1) as f64, 1.0)).collect())
        .collect();
    let mut ok = true;
    for_each_tensor_node(&axes, |x, _| ok &= map.in_domain(&x[..n], &x[n..]));
    ok
}

/// Points in `[lo, hi]` where `g` crosses `level`, located by scanning and
/// bisection.
fn crossings(g: impl Fn(f64) -> f64, level: f64, lo: f64, hi: f64) -> Vec<f64> {
    const SCAN: usize = 512;
    let mut out = Vec::new();
    let h = (hi - lo) / SCAN as f64;
    let mut a = lo;
    let mut ga = g(a) - level;
    for i in 1..=SCAN {
        let b = if i == SCAN { hi } else { lo + i as f64 * h };
        let gb = g(b) - level;
        if ga == 0.0 {
            out.push(a);
        } else if ga * gb < 0.0 {
            let (mut x0, mut x1, mut g0) = (a, b, ga);
            for _ in 0..200 {
                let mid = 0.5 * (x0 + x1);
                if mid <= x0 || mid >= x1 {
                    break;
                }
                let gm = g(mid) - level;
                if (gm < 0.0) == (g0 < 0.0) {
                    x0 = mid;
                    g0 = gm;
                } else {
                    x1 = mid;
                }
            }
            out.push(0.5 * (x0 + x1));
        }
        a = b;
        ga = gb;
    }
    out
}

/// Composite Gauss-Legendre nodes on `[lo, hi]` with extra breakpoints.
fn split_nodes(rule: &GaussLegendre, lo: f64, hi: f64, panels: usize, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut edges: Vec<f64> = (0..=panels).map(|i| lo + (hi - lo) * i as f64 / panels as f64).collect();
    edges.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    edges.windows(2).flat_map(|w| rule.on_interval(w[0], w[1]).collect::<Vec<_>>()).collect()
}

/// `int g dp dq` over the test function's box, where `g` carries the mode's
/// regularized delta. The first momentum axis is split wherever `K` crosses
/// a bin edge, so the indicator is integrated exactly, or a whole multiple
/// of the Gaussian width.
fn integrate_over_box(
    mode: &LevelSetMode,
    support: &[(f64, f64)],
    quad: WeakQuadrature,
    g: &dyn Fn(&[f64], &[f64]) -> C64,
) -> C64 {
    let n = support.len() / 2;
    let rule = GaussLegendre::new(quad.nodes);
    let outer: Vec<Vec<(f64, f64)>> = support[1..]
        .iter()
        .map(|&(lo, hi)| split_nodes(&rule, lo, hi, quad.panels, &[]))
        .collect();
    let (plo, phi) = support[0];
    let edges: Vec<f64> = match mode.kernel.kind {
        KernelKind::Bin => {
            let h = 0.5 * mode.kernel.width;
            vec![mode.k_prime - h, mode.k_prime + h]
        }
        // resolve the Gaussian on unit-width slices of its own scale
        KernelKind::Gaussian => (-8..=8).map(|j| mode.k_prime + j as f64 * mode.kernel.width).collect(),
    };
    let mut total = C64::new(0.0, 0.0);
    let mut x = vec![0.0; 2 * n];
    for_each_tensor_node(&outer, |rest, w_rest| {
        x[1..].copy_from_slice(rest);
        let along = |p0: f64| {
            let mut y = x.clone();
            y[0] = p0;
            mode.observable.evaluate(&y[..n], &y[n..])
        };
        let breaks: Vec<f64> = edges.iter().flat_map(|&e| crossings(along, e, plo, phi)).collect();
        for (p0, w) in split_nodes(&rule, plo, phi, quad.panels, &breaks) {
            x[0] = p0;
            total += g(&x[..n], &x[n..]) * (w * w_rest);
        }
    });
    total
}

/// `|int mode i{K, f} dp dq + lambda int mode f dp dq|`.
pub fn weak_eigen_residual(
    mode: &LevelSetMode,
    test_fn: &TestFunction,
    quad: WeakQuadrature,
    method: BracketMethod,
) -> Result<f64> {
    if mode.lambda != 0.0 && !box_inside_domain(&mode.tau, &test_fn.support) {
        return Err(Error::SingularSupport(format!(
            "support {:?} of `{}` leaves the domain of `{}` ({})",
            test_fn.support, test_fn.label, mode.tau.label, mode.tau.region
        )));
    }
    let k = |p: &[f64], q: &[f64]| mode.observable.evaluate(p, q);
    let f = |p: &[f64], q: &[f64]| test_fn.evaluate(p, q);
    let integrand = |p: &[f64], q: &[f64]| -> C64 {
        let m = mode.value(p, q);
        if m == C64::new(0.0, 0.0) {
            return m;
        }
        let bracket = poisson_bracket_with(&k, &f, p, q, method).unwrap_or(f64::NAN);
        m * (C64::new(0.0, bracket) + mode.lambda * test_fn.evaluate(p, q))
    };
    let total = integrate_over_box(mode, &test_fn.support, quad, &integrand);
    if !(total.re.is_finite() && total.im.is_finite()) {
        return Err(Error::EvaluationFailure(format!("weak residual integrand of `{}`", test_fn.label)));
    }
    Ok(total.norm())
}

/// `int mode f dp dq`, used to confirm a weak check is not vacuous.
pub fn mode_overlap(mode: &LevelSetMode, test_fn: &TestFunction, quad: WeakQuadrature) -> C64 {
    integrate_over_box(mode, &test_fn.support, quad, &|p, q| mode.value(p, q) * test_fn.evaluate(p, q))
}

/// `max |K(p, q) - K'| |mode(p, q)| / (xi * kernel peak)` over the probes.
/// At most `w/2` for a bin of width `w`, and `sigma e^{-1/2}` for a
/// Gaussian of width `sigma`.
pub fn multiplicative_eigen_check(mode: &LevelSetMode, probes: &[Probe]) -> f64 {
    let peak = mode.xi * mode.kernel.peak();
    probes
        .iter()
        .map(|(p, q)| {
            let offset = mode.observable.evaluate(p, q) - mode.k_prime;
            offset.abs() * mode.envelope(p, q) / peak
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::chart::sample_probes;
    use crate::levelset::maps::LevelSetSystem;
    use crate::numerics::bracket::DEFAULT_STEP;

    const RICH: BracketMethod = BracketMethod::Richardson { step: DEFAULT_STEP };

    fn free_mode(lambda: f64, kernel: KernelSpec) -> LevelSetMode {
        let s = LevelSetSystem::free_particle(1.0, 0.2).unwrap();
        LevelSetMode::new(s.observable, s.tau, 1.0, lambda, 1.0, kernel).unwrap()
    }

    #[test]
    fn free_particle_conjugacy() {
        let s = LevelSetSystem::free_particle(1.0, 0.2).unwrap();
        let probes = sample_probes(&[(0.3, 3.0), (-2.0, 2.0)], 30, 1, |_, _| true);
        assert!(conjugate_time_check(&s.tau, &s.observable, &probes, RICH).unwrap() <= 1e-8);
        let doubled = s.tau.scaled(2.0);
        let r = conjugate_time_check(&doubled, &s.observable, &probes, RICH).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conjugacy_rejects_singular_probe() {
        let s = LevelSetSystem::free_particle(1.0, 0.2).unwrap();
        let probes = vec![(vec![0.0], vec![1.0])];
        assert!(matches!(
            conjugate_time_check(&s.tau, &s.observable, &probes, RICH),
            Err(Error::SingularPoint(_))
        ));
    }

    #[test]
    fn quartic_and_harmonic_conjugacy() {
        let q = LevelSetSystem::quartic(1.0, 1.0, 0.2).unwrap();
        let probes = sample_probes(&[(0.3, 3.0), (-2.0, 2.0)], 30, 2, |_, _| true);
        assert!(conjugate_time_check(&q.tau, &q.observable, &probes, RICH).unwrap() <= 1e-8);
        let h = LevelSetSystem::harmonic(1.3, 0.7, 0.05).unwrap();
        let tau = h.tau.clone();
        let probes = sample_probes(&[(-3.0, 3.0), (-3.0, 3.0)], 30, 3, move |p, q| {
            tau.in_domain(p, q) && p[0] * p[0] + q[0] * q[0] > 0.25
        });
        assert!(conjugate_time_check(&h.tau, &h.observable, &probes, RICH).unwrap() <= 1e-8);
    }

    #[test]
    fn zero_mode_weak_relation() {
        let f = TestFunction::gaussian_bump(&[1.2], &[0.3], 0.4);
        for kernel in [KernelSpec::bin(0.1).unwrap(), KernelSpec::gaussian(0.05).unwrap()] {
            let mode = free_mode(0.0, kernel);
            let r = weak_eigen_residual(&mode, &f, WeakQuadrature::default(), RICH).unwrap();
            assert!(r <= 1e-6, "{r}");
            assert!(mode_overlap(&mode, &f, WeakQuadrature::default()).norm() > 1e-2);
        }
    }

    #[test]
    fn unit_lambda_weak_relation() {
        let f = TestFunction::gaussian_bump(&[1.5], &[0.0], 0.15);
        let mode = free_mode(1.0, KernelSpec::bin(0.1).unwrap());
        let quad = WeakQuadrature::default();
        let r = weak_eigen_residual(&mode, &f, quad, RICH).unwrap();
        let fine = weak_eigen_residual(&mode, &f, quad.doubled(), RICH).unwrap();
        assert!(r <= 1e-5 && fine <= 1e-5, "{r} {fine}");
        assert!(mode_overlap(&mode, &f, quad).norm() > 1e-2);
        // a wrong eigenvalue leaves a visible residual
        let mut wrong = mode.clone();
        wrong.lambda = 2.0;
        wrong.tau = mode.tau.scaled(0.5);
        assert!(weak_eigen_residual(&wrong, &f, quad, RICH).unwrap() > 1e-3);
    }

    #[test]
    fn zero_test_function() {
        let mode = free_mode(1.0, KernelSpec::bin(0.1).unwrap());
        let f = TestFunction::zero(vec![(0.5, 2.0), (-1.0, 1.0)]);
        assert_eq!(weak_eigen_residual(&mode, &f, WeakQuadrature::default(), RICH).unwrap(), 0.0);
    }

    #[test]
    fn singular_support_is_rejected() {
        let mode = free_mode(1.0, KernelSpec::bin(0.1).unwrap());
        let f = TestFunction::gaussian_bump(&[0.5], &[0.0], 0.2);
        assert!(matches!(
            weak_eigen_residual(&mode, &f, WeakQuadrature::default(), RICH),
            Err(Error::SingularSupport(_))
        ));
    }

    #[test]
    fn multiplicative_bounds() {
        let probes: Vec<Probe> = (0..2001)
            .map(|i| (vec![2.0f64.sqrt() + 0.5 * (i as f64 / 2000.0 - 0.5)], vec![0.1]))
            .collect();
        let bin = free_mode(0.0, KernelSpec::bin(0.1).unwrap());
        assert!(multiplicative_eigen_check(&bin, &probes) <= 0.05);
        let g = free_mode(0.0, KernelSpec::gaussian(0.03).unwrap());
        let r = multiplicative_eigen_check(&g, &probes);
        assert!(r <= 2.0 * 0.03);
        assert!((r - 0.03 * (-0.5f64).exp()).abs() < 1e-4);
        // K = p^2 / 2 = K' exactly
        let on_set = vec![(vec![2.0f64.sqrt()], vec![0.7])];
        assert!(multiplicative_eigen_check(&g, &on_set) < 1e-15);
    }

    #[test]
    fn crossings_found() {
        let c = crossings(|x| x * x, 0.25, -1.0, 1.0);
        assert_eq!(c.len(), 2);
        assert!((c[0] + 0.5).abs() < 1e-14 && (c[1] - 0.5).abs() < 1e-14);
    }
}
