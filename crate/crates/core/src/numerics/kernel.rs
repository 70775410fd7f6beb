//! Regularizations of the Dirac delta used for improper eigendistributions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Indicator of a width-`w` cell divided by `w`.
    Bin,
    /// Normal density with standard deviation `w`.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub width: f64,
}

impl KernelSpec {
    pub fn bin(width: f64) -> Result<Self> {
        Self::new(KernelKind::Bin, width)
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(KernelKind::Gaussian, sigma)
    }

    pub fn new(kind: KernelKind, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::NonPositiveParameter {
                name: "kernel width",
                value: width,
            });
        }
        Ok(Self { kind, width })
    }

    /// Kernel value at `offset = x - center`. The bin kernel owns the
    /// half-open cell `[-w/2, w/2)`.
    pub fn weight(&self, offset: f64) -> f64 {
        match self.kind {
            KernelKind::Bin => {
                let h = 0.5 * self.width;
                if (-h..h).contains(&offset) {
                    1.0 / self.width
                } else {
                    0.0
                }
            }
            KernelKind::Gaussian => {
                let z = offset / self.width;
                (-0.5 * z * z).exp() / (self.width * (2.0 * PI).sqrt())
            }
        }
    }

    pub fn peak(&self) -> f64 {
        self.weight(0.0)
    }

    /// Half-width of the interval outside which the kernel is treated as zero.
    pub fn reach(&self) -> f64 {
        match self.kind {
            KernelKind::Bin => 0.5 * self.width,
            KernelKind::Gaussian => 9.0 * self.width,
        }
    }
}
