use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math::{pow, sphere_area};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GridKind {
    Interval {
        a: f64,
        b: f64,
    },
    /// Radial coordinate `r ∈ [0, radius]` of a ball in R^dim.
    RadialBall {
        radius: f64,
        dim: usize,
    },
}

/// Uniform mesh with `n` interior nodes plus two end nodes.
///
/// Intervals store `a, a + h, …, b`. Radial grids store `0, h, …, R`: node 0
/// is the symmetry node at the origin and the last node carries the Dirichlet
/// value. [`Grid::coords`] lists the `n` interior positions only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct Grid {
    kind: GridKind,
    n: usize,
    #[serde(skip_deserializing)]
    h: f64,
}

#[derive(Deserialize)]
struct RawGrid {
    kind: GridKind,
    n: usize,
}

impl TryFrom<RawGrid> for Grid {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid::new(raw.kind, raw.n)
    }
}

impl Grid {
    pub fn new(kind: GridKind, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("n ≥ 3 required (n = {n})")));
        }
        let extent = match kind {
            GridKind::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite()) || b <= a {
                    return Err(Error::Domain(format!("interval ({a}, {b}) is empty")));
                }
                b - a
            }
            GridKind::RadialBall { radius, dim } => {
                if !radius.is_finite() || radius <= 0.0 {
                    return Err(Error::Domain(format!("radius must be positive (R = {radius})")));
                }
                if dim == 0 {
                    return Err(Error::Domain("ball dimension ≥ 1 required".into()));
                }
                radius
            }
        };
        Ok(Self { kind, n, h: extent / (n as f64 + 1.0) })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total node count, `n + 2`.
    pub fn len(&self) -> usize {
        self.n + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.kind, GridKind::RadialBall { .. })
    }

    /// Spatial dimension of the domain.
    pub fn dim(&self) -> usize {
        match self.kind {
            GridKind::Interval { .. } => 1,
            GridKind::RadialBall { dim, .. } => dim,
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        let last = self.n + 1;
        match self.kind {
            GridKind::Interval { a, b } => {
                if i == last {
                    b
                } else {
                    a + i as f64 * self.h
                }
            }
            GridKind::RadialBall { radius, .. } => {
                if i == last {
                    radius
                } else {
                    i as f64 * self.h
                }
            }
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Interior node positions.
    pub fn coords(&self) -> Vec<f64> {
        (1..=self.n).map(|i| self.node(i)).collect()
    }

    /// Nodes carrying the homogeneous Dirichlet value.
    pub fn is_dirichlet(&self, i: usize) -> bool {
        match self.kind {
            GridKind::Interval { .. } => i == 0 || i == self.n + 1,
            GridKind::RadialBall { .. } => i == self.n + 1,
        }
    }

    /// Nodes where the evolution equation is imposed.
    pub fn active_range(&self) -> core::ops::Range<usize> {
        match self.kind {
            GridKind::Interval { .. } => 1..self.n + 1,
            GridKind::RadialBall { .. } => 0..self.n + 1,
        }
    }

    pub fn nearest_index(&self, x: f64) -> usize {
        let origin = self.node(0);
        let k = libm::round((x - origin) / self.h);
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.n + 1)
        }
    }

    /// Center of the domain (the origin for balls).
    pub fn center(&self) -> f64 {
        match self.kind {
            GridKind::Interval { a, b } => 0.5 * (a + b),
            GridKind::RadialBall { .. } => 0.0,
        }
    }

    /// Half-extent: radius of the domain.
    pub fn radius(&self) -> f64 {
        match self.kind {
            GridKind::Interval { a, b } => 0.5 * (b - a),
            GridKind::RadialBall { radius, .. } => radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius()
    }

    /// Distance from the center for node `i`.
    pub fn radial_distance(&self, i: usize) -> f64 {
        match self.kind {
            GridKind::Interval { .. } => (self.node(i) - self.center()).abs(),
            GridKind::RadialBall { .. } => self.node(i),
        }
    }

    /// Lebesgue measure |Ω|.
    pub fn measure(&self) -> f64 {
        match self.kind {
            GridKind::Interval { a, b } => b - a,
            GridKind::RadialBall { radius, dim } => sphere_area(dim) * pow(radius, dim as f64) / dim as f64,
        }
    }

    /// Trapezoid weights for `∫_Ω g dx` from nodal values; radial grids
    /// include the `|S^{N−1}| r^{N−1}` Jacobian.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let h = self.h;
        let last = self.n + 1;
        match self.kind {
            GridKind::Interval { .. } => {
                (0..self.len()).map(|i| if i == 0 || i == last { 0.5 * h } else { h }).collect()
            }
            GridKind::RadialBall { dim, .. } => {
                let area = sphere_area(dim);
                let e = dim as f64 - 1.0;
                (0..self.len())
                    .map(|i| {
                        let jac = if dim == 1 { 1.0 } else { pow(self.node(i), e) };
                        let w = if i == 0 || i == last { 0.5 * h } else { h };
                        area * jac * w
                    })
                    .collect()
            }
        }
    }

    /// Weights for `∫_Ω G(∇u) dx` from face values `G(D_{i+½})`, midpoint rule.
    pub fn face_weights(&self) -> Vec<f64> {
        let h = self.h;
        match self.kind {
            GridKind::Interval { .. } => alloc::vec![h; self.n + 1],
            GridKind::RadialBall { dim, .. } => {
                let area = sphere_area(dim);
                let e = dim as f64 - 1.0;
                (0..=self.n)
                    .map(|i| {
                        let rf = 0.5 * (self.node(i) + self.node(i + 1));
                        area * pow(rf, e) * h
                    })
                    .collect()
            }
        }
    }

    /// Same geometry at a different resolution.
    pub fn refined(&self, n: usize) -> Result<Self> {
        Self::new(self.kind, n)
    }
}

pub fn make_grid(kind: GridKind, n: usize) -> Result<Grid> {
    Grid::new(kind, n)
}
