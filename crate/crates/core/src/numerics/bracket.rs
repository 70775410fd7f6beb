//! Finite-difference Poisson brackets.
//!
//! Sign convention used everywhere in the crate:
//! `{A, B} = sum_i dA/dq_i dB/dp_i - dA/dp_i dB/dq_i`, so `{q, p} = 1` and
//! `dA/dt = {A, H}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-4;

/// How derivatives inside a bracket are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BracketMethod {
    /// Second-order central differences.
    Central { step: f64 },
    /// Central differences at `h` and `h/2` combined to fourth order.
    Richardson { step: f64 },
}

impl Default for BracketMethod {
    fn default() -> Self {
        BracketMethod::Central { step: DEFAULT_STEP }
    }
}

impl BracketMethod {
    pub fn step(&self) -> f64 {
        match *self {
            BracketMethod::Central { step } | BracketMethod::Richardson { step } => step,
        }
    }
}

/// Phase-space gradient `(df/dp, df/dq)`.
pub type Gradient = (Vec<f64>, Vec<f64>);

fn checked(f: &dyn Fn(&[f64], &[f64]) -> f64, p: &[f64], q: &[f64]) -> Result<f64> {
    let v = f(p, q);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::EvaluationFailure(format!("p = {p:?}, q = {q:?}")))
    }
}

fn central(
    f: &dyn Fn(&[f64], &[f64]) -> f64,
    p: &[f64],
    q: &[f64],
    axis: usize,
    along_q: bool,
    h: f64,
) -> Result<f64> {
    let mut pp = p.to_vec();
    let mut qq = q.to_vec();
    let slot = if along_q { &mut qq[axis] } else { &mut pp[axis] };
    let x0 = *slot;
    *slot = x0 + h;
    let plus = checked(f, &pp, &qq)?;
    let slot = if along_q { &mut qq[axis] } else { &mut pp[axis] };
    *slot = x0 - h;
    let minus = checked(f, &pp, &qq)?;
    Ok((plus - minus) / (2.0 * h))
}

/// Gradient of `f` at `(p, q)`.
pub fn gradient_fd(
    f: &dyn Fn(&[f64], &[f64]) -> f64,
    p: &[f64],
    q: &[f64],
    method: BracketMethod,
) -> Result<Gradient> {
    let n = p.len();
    let mut dp = vec![0.0; n];
    let mut dq = vec![0.0; n];
    for i in 0..n {
        for (along_q, out) in [(false, &mut dp[i]), (true, &mut dq[i])] {
            *out = match method {
                BracketMethod::Central { step } => central(f, p, q, i, along_q, step)?,
                BracketMethod::Richardson { step } => {
                    let coarse = central(f, p, q, i, along_q, step)?;
                    let fine = central(f, p, q, i, along_q, 0.5 * step)?;
                    (4.0 * fine - coarse) / 3.0
                }
            };
        }
    }
    Ok((dp, dq))
}

/// Bracket from two gradients.
pub fn bracket_from_gradients(a: &Gradient, b: &Gradient) -> f64 {
    let (ap, aq) = a;
    let (bp, bq) = b;
    (0..ap.len()).map(|i| aq[i] * bp[i] - ap[i] * bq[i]).sum()
}

/// `{f, g}` at `(p, q)` with central differences of the given step.
pub fn poisson_bracket_fd(
    f: &dyn Fn(&[f64], &[f64]) -> f64,
    g: &dyn Fn(&[f64], &[f64]) -> f64,
    p: &[f64],
    q: &[f64],
    step: f64,
) -> Result<f64> {
    poisson_bracket_with(f, g, p, q, BracketMethod::Central { step })
}

pub fn poisson_bracket_with(
    f: &dyn Fn(&[f64], &[f64]) -> f64,
    g: &dyn Fn(&[f64], &[f64]) -> f64,
    p: &[f64],
    q: &[f64],
    method: BracketMethod,
) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    let gf = gradient_fd(f, p, q, method)?;
    let gg = gradient_fd(g, p, q, method)?;
    Ok(bracket_from_gradients(&gf, &gg))
}
