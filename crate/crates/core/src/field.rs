use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::{Error, Result};

/// Nodal values on a [`Grid`] at a time stamp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawField")]
pub struct Field {
    grid: Grid,
    time: f64,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawField {
    grid: Grid,
    time: f64,
    values: Vec<f64>,
}

impl TryFrom<RawField> for Field {
    type Error = Error;
    fn try_from(raw: RawField) -> Result<Self> {
        Field::new(raw.grid, raw.values, raw.time)
    }
}

impl Field {
    /// Values cover every node including the end nodes.
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if !time.is_finite() {
            return Err(Error::Domain(format!("time must be finite (t = {time})")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("value at node {i} is not finite")));
        }
        Ok(Self { grid, time, values })
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, time, values }
    }

    pub fn zeros(grid: Grid, time: f64) -> Self {
        Self { grid, time, values: alloc::vec![0.0; grid.len()] }
    }

    /// Samples `g` at every node position.
    pub fn from_fn(grid: Grid, time: f64, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(g).collect(), time)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Interior values, aligned with [`Grid::coords`].
    pub fn interior(&self) -> &[f64] {
        &self.values[1..=self.grid.n()]
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_parts(self.grid, self.values.iter().map(|v| c * v).collect(), self.time)
    }

    /// Zeroes the Dirichlet nodes.
    pub fn enforce_dirichlet(&mut self) {
        for i in 0..self.values.len() {
            if self.grid.is_dirichlet(i) {
                self.values[i] = 0.0;
            }
        }
    }

    pub fn has_dirichlet_zeros(&self) -> bool {
        (0..self.values.len()).all(|i| !self.grid.is_dirichlet(i) || self.values[i] == 0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest adjacent difference quotient.
    pub fn lipschitz_estimate(&self) -> f64 {
        let h = self.grid.h();
        self.values.windows(2).fold(0.0, |m, w| m.max((w[1] - w[0]).abs() / h))
    }

    /// Largest difference quotient on faces touching a Dirichlet node.
    pub fn boundary_quotient(&self) -> f64 {
        let h = self.grid.h();
        let last = self.grid.n() + 1;
        let right = (self.values[last] - self.values[last - 1]).abs() / h;
        if self.grid.is_radial() {
            right
        } else {
            right.max((self.values[1] - self.values[0]).abs() / h)
        }
    }

    pub(crate) fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `max_i |self_i − other_i|`.
    pub fn distance(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Linear interpolation at position `x` (radial grids take `x = r`).
    pub fn interpolate(&self, x: f64) -> f64 {
        let g = &self.grid;
        let x0 = g.node(0);
        let s = (x - x0) / g.h();
        if s <= 0.0 {
            return self.values[0];
        }
        let last = g.n() + 1;
        let k = libm::floor(s) as usize;
        if k >= last {
            return self.values[last];
        }
        let xl = g.node(k);
        let xr = g.node(k + 1);
        let w = ((x - xl) / (xr - xl)).clamp(0.0, 1.0);
        (1.0 - w) * self.values[k] + w * self.values[k + 1]
    }
}

pub fn sup_norm(field: &Field) -> f64 {
    field.sup_norm()
}

pub fn lipschitz_estimate(field: &Field) -> f64 {
    field.lipschitz_estimate()
}
