//! Canonical action-angle charts and their validity checks.

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::{BracketMethod, SeededStream};

/// Actions at or below this value have no well-defined angle.
pub const ACTION_FLOOR: f64 = 1e-8;

pub type Probe = (Vec<f64>, Vec<f64>);

/// A canonical map `(p, q) <-> (K, Q)` with `Q` on `[0, 2 pi)^N`.
pub trait CanonicalChart: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn name(&self) -> String;
    /// `(p, q) -> (K, Q)`.
    fn forward(&self, p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>);
    /// `(K, Q) -> (p, q)`.
    fn inverse(&self, k: &[f64], angle: &[f64]) -> (Vec<f64>, Vec<f64>);
    fn action_floor(&self) -> f64 {
        ACTION_FLOOR
    }
    /// Whether the phase-space box (momenta then positions) lies inside the
    /// chart's domain.
    fn covers(&self, _support: &[(f64, f64)]) -> bool {
        true
    }
    /// Start of the generating-function path.
    fn base_point(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
    /// `p(q, K)` on the branch the generating function follows, or `None`
    /// when `q` is past a turning point.
    fn branch_momentum(&self, _q: &[f64], _k: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Oscillator {
    pub mass: f64,
    pub omega: f64,
}

impl Oscillator {
    fn m_omega(&self) -> f64 {
        self.mass * self.omega
    }
}

/// Separable harmonic oscillator, `H = sum_i omega_i K_i`.
///
/// `q = sqrt(2K / m w) sin Q`, `p = sqrt(2 m w K) cos Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicChart {
    pub modes: Vec<Oscillator>,
}

impl HarmonicChart {
    /// One `(mass, omega)` pair per degree of freedom.
    pub fn new(modes: &[(f64, f64)]) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidParameter("a chart needs at least one degree of freedom".into()));
        }
        for &(m, w) in modes {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::NonPositiveParameter { name: "mass", value: m });
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::NonPositiveParameter { name: "omega", value: w });
            }
        }
        Ok(Self {
            modes: modes.iter().map(|&(mass, omega)| Oscillator { mass, omega }).collect(),
        })
    }

    pub fn energy(&self, k: &[f64]) -> f64 {
        self.modes.iter().zip(k).map(|(o, &ki)| o.omega * ki).sum()
    }

    /// Closed-form type-2 generating function from `q = 0` on the `p > 0`
    /// branch: `S = (m w / 2) [q sqrt(A^2 - q^2) + A^2 asin(q / A)]`,
    /// `A^2 = 2K / m w`.
    pub fn generating_function(&self, q: &[f64], k: &[f64]) -> Option<f64> {
        let mut s = 0.0;
        for ((o, &qi), &ki) in self.modes.iter().zip(q).zip(k) {
            let a2 = 2.0 * ki / o.m_omega();
            if qi * qi > a2 {
                return None;
            }
            let a = a2.sqrt();
            s += 0.5 * o.m_omega() * (qi * (a2 - qi * qi).sqrt() + a2 * (qi / a).asin());
        }
        Some(s)
    }
}

pub fn make_harmonic_chart(mass: f64, omega: f64) -> Result<HarmonicChart> {
    HarmonicChart::new(&[(mass, omega)])
}

pub(crate) fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Difference of two angles mapped to `(-pi, pi]`.
pub fn angle_delta(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

impl CanonicalChart for HarmonicChart {
    fn dim(&self) -> usize {
        self.modes.len()
    }

    fn name(&self) -> String {
        "harmonic".into()
    }

    fn forward(&self, p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut k = Vec::with_capacity(self.dim());
        let mut angle = Vec::with_capacity(self.dim());
        for ((o, &pi), &qi) in self.modes.iter().zip(p).zip(q) {
            let mw = o.m_omega();
            k.push(0.5 * pi * pi / mw + 0.5 * mw * qi * qi);
            angle.push(wrap_angle((mw * qi).atan2(pi)));
        }
        (k, angle)
    }

    fn inverse(&self, k: &[f64], angle: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut p = Vec::with_capacity(self.dim());
        let mut q = Vec::with_capacity(self.dim());
        for ((o, &ki), &a) in self.modes.iter().zip(k).zip(angle) {
            let mw = o.m_omega();
            let (s, c) = a.sin_cos();
            p.push((2.0 * mw * ki).sqrt() * c);
            q.push((2.0 * ki / mw).sqrt() * s);
        }
        (p, q)
    }

    fn branch_momentum(&self, q: &[f64], k: &[f64]) -> Option<Vec<f64>> {
        self.modes
            .iter()
            .zip(q)
            .zip(k)
            .map(|((o, &qi), &ki)| {
                let mw = o.m_omega();
                let arg = 2.0 * mw * ki - mw * mw * qi * qi;
                (arg > 0.0).then(|| arg.sqrt())
            })
            .collect()
    }
}

const S_PANELS: usize = 8;
const S_NODES: usize = 16;

/// `S(q, K) = int p . dq` along the straight path from the base point,
/// integrated with composite Gauss-Legendre.
fn path_action(chart: &dyn CanonicalChart, rule: &GaussLegendre, q: &[f64], k: &[f64]) -> Option<f64> {
    chart.branch_momentum(q, k)?;
    let q0 = chart.base_point();
    let dq: Vec<f64> = q.iter().zip(&q0).map(|(a, b)| a - b).collect();
    let mut total = 0.0;
    let h = 1.0 / S_PANELS as f64;
    for panel in 0..S_PANELS {
        let (a, b) = (panel as f64 * h, (panel + 1) as f64 * h);
        for (t, w) in rule.on_interval(a, b) {
            let x: Vec<f64> = q0.iter().zip(&dq).map(|(b0, d)| b0 + t * d).collect();
            let p = chart.branch_momentum(&x, k)?;
            total += w * p.iter().zip(&dq).map(|(pi, d)| pi * d).sum::<f64>();
        }
    }
    Some(total)
}

/// `Q = dS/dK` by finite differences in each action, wrapped to `[0, 2 pi)`.
///
/// The step is relative: `h_i = step * K_i`.
pub fn angle_from_generating_function(
    chart: &dyn CanonicalChart,
    q: &[f64],
    k: &[f64],
    method: BracketMethod,
) -> Result<Vec<f64>> {
    let n = chart.dim();
    if q.len() != n || k.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: q.len().min(k.len()),
        });
    }
    let floor = chart.action_floor();
    if let Some(&bad) = k.iter().find(|&&ki| !(ki > floor)) {
        return Err(Error::OutOfDomain(format!("action {bad} is at or below the floor {floor}")));
    }
    let rule = GaussLegendre::new(S_NODES);
    if path_action(chart, &rule, q, k).is_none() {
        return Err(Error::OutOfDomain(format!("q = {q:?} lies past a turning point for K = {k:?}")));
    }
    let (step, richardson) = match method {
        BracketMethod::Central { step } => (step, false),
        BracketMethod::Richardson { step } => (step, true),
    };
    let mut angle = Vec::with_capacity(n);
    for i in 0..n {
        let h = step * k[i];
        if k[i] - h <= floor {
            return Err(Error::OutOfDomain(format!("stencil for K_{} reaches the action floor", i + 1)));
        }
        let derivative = |h: f64| -> Result<f64> {
            let eval = |delta: f64| {
                let mut kk = k.to_vec();
                kk[i] += delta;
                path_action(chart, &rule, q, &kk).ok_or_else(|| Error::BranchAmbiguity {
                    q: q.to_vec(),
                    k: kk.clone(),
                })
            };
            Ok((eval(h)? - eval(-h)?) / (2.0 * h))
        };
        let d = if richardson {
            (4.0 * derivative(0.5 * h)? - derivative(h)?) / 3.0
        } else {
            derivative(h)?
        };
        angle.push(wrap_angle(d));
    }
    Ok(angle)
}

/// `max |inverse(forward(p, q)) - (p, q)|` over the probes.
pub fn round_trip_residual(chart: &dyn CanonicalChart, probes: &[Probe]) -> f64 {
    probes
        .iter()
        .map(|(p, q)| {
            let (k, a) = chart.forward(p, q);
            let (p2, q2) = chart.inverse(&k, &a);
            p.iter()
                .zip(&p2)
                .chain(q.iter().zip(&q2))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Finite-difference Jacobian `d(K, Q) / d(p, q)`. Rows are `K_1..K_N,
/// Q_1..Q_N`; columns are `p_1..p_N, q_1..q_N`. Angle differences are taken
/// across the branch cut.
pub fn chart_jacobian(chart: &dyn CanonicalChart, p: &[f64], q: &[f64], method: BracketMethod) -> DMatrix<f64> {
    let n = chart.dim();
    let base: Vec<f64> = p.iter().chain(q).copied().collect();
    let (step, richardson) = match method {
        BracketMethod::Central { step } => (step, false),
        BracketMethod::Richardson { step } => (step, true),
    };
    let eval = |x: &[f64]| chart.forward(&x[..n], &x[n..]);
    let column = |a: usize, h: f64| -> Vec<f64> {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[a] += h;
        minus[a] -= h;
        let (kp, ap) = eval(&plus);
        let (km, am) = eval(&minus);
        kp.iter()
            .zip(&km)
            .map(|(x, y)| (x - y) / (2.0 * h))
            .chain(ap.iter().zip(&am).map(|(x, y)| angle_delta(*x, *y) / (2.0 * h)))
            .collect()
    };
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..2 * n {
        let h = step * base[a].abs().max(1.0);
        let col = if richardson {
            column(a, 0.5 * h)
                .iter()
                .zip(column(a, h))
                .map(|(fine, coarse)| (4.0 * fine - coarse) / 3.0)
                .collect()
        } else {
            column(a, h)
        };
        for (r, v) in col.into_iter().enumerate() {
            j[(r, a)] = v;
        }
    }
    j
}

/// `max |det J - 1|` over the probes.
pub fn jacobian_residual(chart: &dyn CanonicalChart, probes: &[Probe], method: BracketMethod) -> f64 {
    probes
        .iter()
        .map(|(p, q)| (chart_jacobian(chart, p, q, method).determinant() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Worst deviation from `{Q_i, K_j} = delta_ij`, `{Q_i, Q_j} = 0` and
/// `{K_i, K_j} = 0` over the probes.
pub fn conjugacy_residual(chart: &dyn CanonicalChart, probes: &[Probe], method: BracketMethod) -> f64 {
    let n = chart.dim();
    let mut worst: f64 = 0.0;
    for (p, q) in probes {
        let j = chart_jacobian(chart, p, q, method);
        // rows 0..n are K, n..2n are Q; columns 0..n are p, n..2n are q
        let bracket = |a: usize, b: usize| -> f64 {
            (0..n)
                .map(|s| j[(a, n + s)] * j[(b, s)] - j[(a, s)] * j[(b, n + s)])
                .sum()
        };
        for i in 0..n {
            for l in 0..n {
                let delta = if i == l { 1.0 } else { 0.0 };
                worst = worst
                    .max((bracket(n + i, l) - delta).abs())
                    .max(bracket(n + i, n + l).abs())
                    .max(bracket(i, l).abs());
            }
        }
    }
    worst
}

/// `count` phase-space points drawn uniformly from `bounds` (momenta then
/// positions) and kept when `accept` holds.
pub fn sample_probes(
    bounds: &[(f64, f64)],
    count: usize,
    seed: u64,
    accept: impl Fn(&[f64], &[f64]) -> bool,
) -> Vec<Probe> {
    let n = bounds.len() / 2;
    let stream = SeededStream::new(seed);
    let mut out = Vec::with_capacity(count);
    let mut i = 0u64;
    while out.len() < count {
        let mut rng = stream.substream(i);
        i += 1;
        let x: Vec<f64> = bounds.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect();
        if accept(&x[..n], &x[n..]) {
            out.push((x[..n].to_vec(), x[n..].to_vec()));
        }
    }
    out
}
