//! Numerics for the degenerate parabolic equation
//!
//! ```text
//! ∂t u − Δp u = |∇u|^q   in (0,∞) × Ω,     u = 0 on ∂Ω,
//! ```
//!
//! with `p > 2` and `q ≥ p − 1`, on symmetric intervals and radially
//! symmetric balls. The crate carries the discrete operators, an explicit
//! monotone time stepper in physical and self-similar variables, the
//! separate-variables profiles, the closed-form supersolution catalog and
//! post-processing diagnostics. It is `no_std` (with `alloc`); file formats,
//! the command line and thread pools live in `fg-lab`.

#![cfg_attr(not(test), no_std)]
// Stencil code indexes neighbours explicitly.
#![allow(clippy::needless_range_loop)]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod barriers;
pub mod diagnostics;
mod error;
pub mod evolve;
pub mod field;
pub mod grid;
mod math;
pub mod operators;
pub mod params;
pub mod profiles;

pub use error::{Error, Result};
pub use field::{lipschitz_estimate, sup_norm, Field};
pub use grid::{make_grid, Grid, GridKind};
pub use params::{make_params, Params, Regime};

pub mod prelude {
    pub use crate::barriers::{BarrierKind, BarrierSpec};
    pub use crate::evolve::{EvolveConfig, Trajectory};
    pub use crate::operators::{HamiltonianScheme, SchemeConfig};
    pub use crate::profiles::{Profile, ProfileKind, ShootingConfig};
    pub use crate::{Error, Field, Grid, GridKind, Params, Regime, Result};
}
