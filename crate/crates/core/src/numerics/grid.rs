use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One axis of a tensor grid.
///
/// For a binned (non-periodic) axis `count` is the number of equal bins on
/// `[min, max)`. For a periodic axis `count` is the number of equally spaced
/// nodes on `[min, max)` and `max - min` must be exactly one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub periodic: bool,
}

impl Axis {
    pub fn bins(min: f64, max: f64, count: usize) -> Self {
        Self {
            min,
            max,
            count,
            periodic: false,
        }
    }

    pub fn angle(count: usize) -> Self {
        Self {
            min: 0.0,
            max: 2.0 * PI,
            count,
            periodic: true,
        }
    }

    pub fn width(&self) -> f64 {
        (self.max - self.min) / self.count as f64
    }

    /// Bin center, or node position for periodic axes.
    pub fn center(&self, i: usize) -> f64 {
        if self.periodic {
            self.min + i as f64 * self.width()
        } else {
            self.min + (i as f64 + 0.5) * self.width()
        }
    }

    pub fn lower_edge(&self, i: usize) -> f64 {
        self.min + i as f64 * self.width()
    }

    pub fn upper_edge(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + (i + 1) as f64 * self.width()
        }
    }

    /// Half-open bin lookup: bin `i` owns `[lower_edge(i), upper_edge(i))`.
    /// Every point of `[min, max)` lands in exactly one bin.
    pub fn bin_index(&self, x: f64) -> Option<usize> {
        if !(x >= self.min && x < self.max) {
            return None;
        }
        let mut i = ((x - self.min) / self.width()).floor() as usize;
        i = i.min(self.count - 1);
        // guard against floor() landing one bin off at an edge
        if x < self.lower_edge(i) {
            i -= 1;
        } else if i + 1 < self.count && x >= self.lower_edge(i + 1) {
            i += 1;
        }
        Some(i)
    }

    fn validate(&self, path: &str) -> Result<()> {
        if self.count < 2 {
            return Err(Error::schema(format!("{path}.count"), "need at least 2"));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.max > self.min) {
            return Err(Error::schema(path, "need finite min < max"));
        }
        if self.periodic && ((self.max - self.min) - 2.0 * PI).abs() > 1e-12 {
            return Err(Error::schema(path, "periodic axis must span exactly 2 pi"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        let grid = Self { axes };
        grid.validate("grid")?;
        Ok(grid)
    }

    /// Single binned axis.
    pub fn uniform_bins(min: f64, max: f64, count: usize) -> Result<Self> {
        Self::new(vec![Axis::bins(min, max, count)])
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::schema(path, "grid needs at least one axis"));
        }
        for (i, axis) in self.axes.iter().enumerate() {
            axis.validate(&format!("{path}.axes[{i}]"))?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::width).product()
    }

    /// Row-major multi-index of a flat cell index (last axis fastest).
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (slot, axis) in idx.iter_mut().zip(&self.axes).rev() {
            *slot = flat % axis.count;
            flat /= axis.count;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, axis)| acc * axis.count + i)
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, axis)| axis.center(i))
            .collect()
    }

    /// Per-axis `(lower, upper)` edges of a cell.
    pub fn cell_bounds(&self, flat: usize) -> Vec<(f64, f64)> {
        self.unravel(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, axis)| (axis.lower_edge(i), axis.upper_edge(i)))
            .collect()
    }

    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.axes.len() {
            return None;
        }
        let mut flat = 0;
        for (axis, &xi) in self.axes.iter().zip(x) {
            flat = flat * axis.count + axis.bin_index(xi)?;
        }
        Some(flat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn centers_and_widths() {
        let a = Axis::bins(0.0, 1.0, 4);
        assert_eq!(a.width(), 0.25);
        assert_eq!(a.center(0), 0.125);
        assert_eq!(a.bin_index(0.25), Some(1));
        assert_eq!(a.bin_index(1.0), None);
        assert_eq!(a.bin_index(-1e-300), None);
        let q = Axis::angle(8);
        assert_eq!(q.center(0), 0.0);
    }

    #[test]
    fn rejects_degenerate_axes() {
        assert!(GridSpec::uniform_bins(0.0, 1.0, 1).is_err());
        assert!(GridSpec::uniform_bins(1.0, 1.0, 4).is_err());
        assert!(GridSpec::new(vec![Axis {
            min: 0.0,
            max: 3.0,
            count: 4,
            periodic: true
        }])
        .is_err());
    }

    #[test]
    fn ravel_unravel_two_axes() {
        let g = GridSpec::new(vec![Axis::bins(0.0, 1.0, 3), Axis::bins(0.0, 2.0, 5)]).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.ravel(&g.unravel(flat)), flat);
        }
        assert_eq!(g.locate(&[0.5, 1.9]), Some(g.ravel(&[1, 4])));
    }

    proptest! {
        // every point of [min, max) lies in exactly one bin, and inside its edges
        #[test]
        fn bins_partition_the_axis(min in -10.0f64..10.0, span in 0.1f64..50.0, count in 2usize..200, t in 0.0f64..1.0) {
            let axis = Axis::bins(min, min + span, count);
            let x = min + t * span;
            prop_assume!(x < axis.max);
            let i = axis.bin_index(x).unwrap();
            prop_assert!(axis.lower_edge(i) <= x && x < axis.upper_edge(i));
            let owners = (0..count).filter(|&j| axis.lower_edge(j) <= x && x < axis.upper_edge(j)).count();
            prop_assert_eq!(owners, 1);
        }
    }
}
