use alloc::format;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute slack used when deciding whether `q` sits exactly on `p − 1` or `p`.
const EXPONENT_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `q = p − 1`.
    Giant,
    /// `p − 1 < q ≤ p`.
    PLaplacianLimit,
    /// `q > p`.
    Super,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct Params {
    p: f64,
    q: f64,
    dim: usize,
}

#[derive(Deserialize)]
struct RawParams {
    p: f64,
    q: f64,
    dim: usize,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        Params::new(raw.p, raw.q, raw.dim)
    }
}

impl Params {
    pub fn new(p: f64, q: f64, dim: usize) -> Result<Self> {
        if !p.is_finite() || !q.is_finite() {
            return Err(Error::Domain(format!("exponents must be finite (p = {p}, q = {q})")));
        }
        if p <= 2.0 {
            return Err(Error::Domain(format!("p > 2 required (p = {p})")));
        }
        if q < p - 1.0 - EXPONENT_EPS {
            return Err(Error::Domain(format!("q ≥ p − 1 required (p = {p}, q = {q})")));
        }
        if dim == 0 {
            return Err(Error::Domain("dim ≥ 1 required".into()));
        }
        // Snap q onto p − 1 so that downstream `q − p + 1` is exactly zero.
        let q = if (q - (p - 1.0)).abs() <= EXPONENT_EPS { p - 1.0 } else { q };
        Ok(Self { p, q, dim })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regime(&self) -> Regime {
        if self.q == self.p - 1.0 {
            Regime::Giant
        } else if self.q <= self.p + EXPONENT_EPS {
            Regime::PLaplacianLimit
        } else {
            Regime::Super
        }
    }

    /// `1/(p − 2)`, the algebraic decay rate of `‖u(t)‖_∞`.
    pub fn decay_rate(&self) -> f64 {
        1.0 / (self.p - 2.0)
    }

    /// Copy with a different source exponent.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        Self::new(self.p, q, self.dim)
    }

    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(self.p, self.q, dim)
    }

    pub(crate) fn is_q_equal_p(&self) -> bool {
        (self.q - self.p).abs() <= EXPONENT_EPS
    }
}

pub fn make_params(p: f64, q: f64, dim: usize) -> Result<Params> {
    Params::new(p, q, dim)
}
