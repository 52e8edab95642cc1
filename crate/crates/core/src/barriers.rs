//! Closed-form supersolutions and boundary barriers, with residual-sign
//! certification on a grid and pointwise domination checks along
//! trajectories.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::evolve::Trajectory;
use crate::math::{exp, pow, sqrt};
use crate::operators::{Kernel, SchemeConfig};
use crate::params::{Params, Regime};
use crate::profiles::{Profile, ProfileKind};
use crate::{Error, Field, Grid, Result};

const E: f64 = core::f64::consts::E;
/// Relative slack when re-checking equalities and caps.
const CHECK_RTOL: f64 = 1e-12;
/// Fraction of the δ caps used by the boundary barriers.
pub const DELTA_MARGIN: f64 = 0.9;
/// Fraction of the γ cap used by the power-of-profile barrier.
pub const GAMMA_MARGIN: f64 = 0.99;
/// Residuals above `−RESIDUAL_FLOOR·scale` count as zero during calibration.
pub const RESIDUAL_FLOOR: f64 = 1e-6;
/// Stored violations per report; the count is always exact.
const MAX_LISTED: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    GlobalExp,
    GlobalPower,
    BoundaryExp,
    BoundaryExpTransformed,
    PowerOfProfile,
    GiantMultiple,
}

impl BarrierKind {
    pub const ALL: [BarrierKind; 6] = [
        BarrierKind::GlobalExp,
        BarrierKind::GlobalPower,
        BarrierKind::BoundaryExp,
        BarrierKind::BoundaryExpTransformed,
        BarrierKind::PowerOfProfile,
        BarrierKind::GiantMultiple,
    ];

    fn is_radial(self) -> bool {
        matches!(self, BarrierKind::PowerOfProfile | BarrierKind::GiantMultiple)
    }
}

/// Interval `(center − radius, center + radius)` or the ball `B(0, radius)` in R^dim.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub center: f64,
    pub radius: f64,
    pub dim: usize,
    pub radial: bool,
}

impl Domain {
    pub fn of(grid: &Grid) -> Self {
        Self { center: grid.center(), radius: grid.radius(), dim: grid.dim(), radial: grid.is_radial() }
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    /// Enclosure `(x₀, R₀)`: `x₀` one diameter from the center along the first
    /// axis, `R₀ = diameter + radius`.
    pub fn enclosure(&self) -> (f64, f64) {
        (self.diameter(), self.diameter() + self.radius)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
enum Constants {
    GlobalExp {
        a: f64,
        big_r: f64,
        r0: f64,
        x0: f64,
        u0_sup: f64,
        c1: f64,
    },
    GlobalPower {
        a: f64,
        big_r: f64,
        r0: f64,
        x0: f64,
        delta: f64,
        u0_sup: f64,
        c1: f64,
    },
    Boundary {
        a: f64,
        m: f64,
        delta: f64,
        r_omega: f64,
        /// Boundary point and exterior center, as offsets from the domain center along e₁.
        x_b: f64,
        y0: f64,
        t0: f64,
        c1: f64,
        u0_sup: f64,
        l1: f64,
    },
    PowerOfProfile {
        a: f64,
        delta: f64,
        gamma: f64,
        beta: f64,
        b: f64,
        f_sup: f64,
    },
    GiantMultiple {
        grad: f64,
        g: f64,
    },
}

impl Constants {
    fn entries(&self) -> Vec<(&'static str, f64)> {
        use Constants::*;
        match *self {
            GlobalExp { a, big_r, r0, x0, u0_sup, c1 } => {
                alloc::vec![("A", a), ("R", big_r), ("R0", r0), ("x0", x0), ("u0_sup", u0_sup), ("C1", c1)]
            }
            GlobalPower { a, big_r, r0, x0, delta, u0_sup, c1 } => alloc::vec![
                ("A", a),
                ("R", big_r),
                ("R0", r0),
                ("x0", x0),
                ("delta", delta),
                ("u0_sup", u0_sup),
                ("C1", c1)
            ],
            Boundary { a, m, delta, r_omega, x_b, y0, t0, c1, u0_sup, l1 } => alloc::vec![
                ("A", a),
                ("M", m),
                ("delta", delta),
                ("R_Omega", r_omega),
                ("x_b", x_b),
                ("y0", y0),
                ("t0", t0),
                ("C1", c1),
                ("u0_sup", u0_sup),
                ("L1", l1)
            ],
            PowerOfProfile { a, delta, gamma, beta, b, f_sup } => {
                alloc::vec![("A", a), ("delta", delta), ("gamma", gamma), ("beta", beta), ("B", b), ("f_sup", f_sup)]
            }
            GiantMultiple { grad, g } => alloc::vec![("grad_sup", grad), ("G", g)],
        }
    }

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        use Constants::*;
        Some(match (self, name) {
            (GlobalExp { a, .. } | GlobalPower { a, .. } | Boundary { a, .. } | PowerOfProfile { a, .. }, "A") => a,
            (GlobalExp { big_r, .. } | GlobalPower { big_r, .. }, "R") => big_r,
            (GlobalExp { r0, .. } | GlobalPower { r0, .. }, "R0") => r0,
            (GlobalExp { x0, .. } | GlobalPower { x0, .. }, "x0") => x0,
            (GlobalExp { u0_sup, .. } | GlobalPower { u0_sup, .. } | Boundary { u0_sup, .. }, "u0_sup") => u0_sup,
            (GlobalExp { c1, .. } | GlobalPower { c1, .. } | Boundary { c1, .. }, "C1") => c1,
            (GlobalPower { delta, .. } | Boundary { delta, .. } | PowerOfProfile { delta, .. }, "delta") => delta,
            (Boundary { m, .. }, "M") => m,
            (Boundary { r_omega, .. }, "R_Omega") => r_omega,
            (Boundary { x_b, .. }, "x_b") => x_b,
            (Boundary { y0, .. }, "y0") => y0,
            (Boundary { t0, .. }, "t0") => t0,
            (Boundary { l1, .. }, "L1") => l1,
            (PowerOfProfile { gamma, .. }, "gamma") => gamma,
            (PowerOfProfile { beta, .. }, "beta") => beta,
            (PowerOfProfile { b, .. }, "B") => b,
            (PowerOfProfile { f_sup, .. }, "f_sup") => f_sup,
            (GiantMultiple { grad, .. }, "grad_sup") => grad,
            (GiantMultiple { g, .. }, "G") => g,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    kind: BarrierKind,
    params: Params,
    domain: Domain,
    constants: Constants,
    /// Profile values for the profile-based kinds.
    profile: Option<Field>,
}

fn sigma(p: f64, big_r: f64, r: f64) -> f64 {
    let k = p / (p - 1.0);
    (p - 1.0) / p * (exp(k * big_r) - exp(k * r))
}

fn phi(p: f64, big_r: f64, r: f64) -> f64 {
    let k = p / (p - 1.0);
    (p - 1.0) / p * (pow(big_r, k) - pow(r, k))
}

fn exp_first_entry(p: f64, big_r: f64) -> f64 {
    pow(exp(p * big_r / (p - 1.0)) / ((p - 1.0) * (p - 2.0)), 1.0 / (p - 2.0))
}

fn power_constants(p: f64, q: f64, n: f64, r0: f64, u0_sup: f64) -> (f64, f64, f64) {
    let a = pow(n / (2.0 * pow(r0, q / (p - 1.0))), 1.0 / (q - p + 1.0));
    let big_r = pow(pow(r0, p / (p - 1.0)) + p * u0_sup / ((p - 1.0) * a), (p - 1.0) / p);
    let delta = n * (p - 2.0) * pow(a, p - 2.0) / (2.0 * pow(big_r, p / (p - 1.0)));
    (a, big_r, delta)
}

fn boundary_m(p: f64, u0_sup: f64, transformed: bool) -> f64 {
    let k = pow(2.0, 1.0 / (p - 2.0));
    let top = if transformed { exp(u0_sup / (p - 1.0)) } else { u0_sup };
    k * top / (k - 1.0)
}

fn boundary_a(p: f64, m: f64, c1: f64, transformed: bool) -> f64 {
    if transformed {
        let third = E * c1 / ((p - 1.0) * (E - 1.0)) * exp(c1 / (p - 1.0));
        1.0f64.max(m).max(third)
    } else {
        let third = pow(4.0 * exp(p - 1.0) / (p - 2.0), 1.0 / (p - 2.0));
        m.max(E * c1 / (E - 1.0)).max(third)
    }
}

fn boundary_delta_cap(p: f64, q: f64, n: usize, r_omega: f64, a: f64, transformed: bool) -> f64 {
    let curv = if n > 1 { (p - 2.0) * r_omega / (n as f64 - 1.0) } else { f64::INFINITY };
    let third = if transformed {
        pow((p - 2.0) / (2.0 * exp(p - 1.0)), 1.0 / p) * pow(3.0 / (p - 1.0), -(p - 2.0) / p)
    } else {
        pow(1.0 / (2.0 * pow(a, q - p + 1.0)), 1.0 / (p - q))
    };
    1.0f64.min(curv).min(third)
}

fn gamma_cap(p: f64, beta: f64, b: f64, f_sup: f64) -> f64 {
    ((p - 2.0) / (p - 1.0)).min(beta).min(1.0 / (b * pow(f_sup, beta)))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CHECK_RTOL * a.abs().max(b.abs()).max(1e-300)
}

fn need(ok: bool, constraint: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("barrier constraint violated: {constraint}")))
    }
}

fn check_sup(u0_sup: f64) -> Result<()> {
    need(u0_sup.is_finite() && u0_sup >= 0.0, "‖u0‖_∞ must be finite and nonnegative")
}

/// `S(t,x) = A(1+t)^{−1/(p−2)} σ(|x − x₀|)`, `σ(r) = (p−1)/p (e^{pR/(p−1)} − e^{pr/(p−1)})`,
/// for `q = p − 1`. `A` takes the larger of the two lower bounds.
pub fn make_global_exp(params: &Params, domain: &Domain, u0_sup: f64) -> Result<BarrierSpec> {
    if params.regime() != Regime::Giant {
        return Err(Error::Regime("the exponential global barrier needs q = p − 1".into()));
    }
    check_sup(u0_sup)?;
    let p = params.p();
    let (x0, r0) = domain.enclosure();
    let big_r = 2.0 * r0;
    let a = exp_first_entry(p, big_r).max(u0_sup / sigma(p, big_r, r0));
    let c1 = a * sigma(p, big_r, 0.0);
    Ok(BarrierSpec {
        kind: BarrierKind::GlobalExp,
        params: *params,
        domain: *domain,
        constants: Constants::GlobalExp { a, big_r, r0, x0, u0_sup, c1 },
        profile: None,
    })
}

/// `S(t,x) = A(1+δt)^{−1/(p−2)} φ(|x − x₀|)`, `φ(r) = (p−1)/p (R^{p/(p−1)} − r^{p/(p−1)})`,
/// for `q > p − 1`.
pub fn make_global_power(params: &Params, domain: &Domain, u0_sup: f64) -> Result<BarrierSpec> {
    if params.regime() == Regime::Giant {
        return Err(Error::Regime("the power global barrier needs q > p − 1".into()));
    }
    check_sup(u0_sup)?;
    let (p, q) = (params.p(), params.q());
    let (x0, r0) = domain.enclosure();
    let (a, big_r, delta) = power_constants(p, q, domain.dim as f64, r0, u0_sup);
    let c1 = a * phi(p, big_r, 0.0);
    Ok(BarrierSpec {
        kind: BarrierKind::GlobalPower,
        params: *params,
        domain: *domain,
        constants: Constants::GlobalPower { a, big_r, r0, x0, delta, u0_sup, c1 },
        profile: None,
    })
}

/// Boundary barrier at the boundary point `boundary_point` (an interval end,
/// or the radius of a ball, meaning the point `R e₁`). `q < p` gives the
/// direct form, `q = p` the form for `h = e^{u/(p−1)} − 1`.
pub fn make_boundary_barrier(
    params: &Params,
    domain: &Domain,
    boundary_point: f64,
    t0: f64,
    c1: f64,
    u0_sup: f64,
) -> Result<BarrierSpec> {
    let (p, q) = (params.p(), params.q());
    if params.regime() == Regime::Super {
        return Err(Error::Regime("boundary barriers need p − 1 ≤ q ≤ p".into()));
    }
    need(t0 >= 1.0, "t0 ≥ 1")?;
    need(c1.is_finite() && c1 > 0.0, "C1 > 0")?;
    check_sup(u0_sup)?;
    let x_b = if domain.radial { boundary_point } else { boundary_point - domain.center };
    need((x_b.abs() - domain.radius).abs() <= 1e-12 * domain.radius, "boundary point on ∂Ω")?;
    let transformed = params.is_q_equal_p();
    let r_omega = domain.radius;
    let y0 = x_b + r_omega * x_b.signum();
    let m = boundary_m(p, u0_sup, transformed);
    let a = boundary_a(p, m, c1, transformed);
    let cap = boundary_delta_cap(p, q, domain.dim, r_omega, a, transformed);
    let delta = DELTA_MARGIN * cap;
    need(delta < domain.radius, "Ω_δ nonempty")?;
    let l1 = if transformed { (2.0 * c1).max((p - 1.0) * a) / delta } else { (2.0 * c1).max(a) / delta };
    Ok(BarrierSpec {
        kind: if transformed { BarrierKind::BoundaryExpTransformed } else { BarrierKind::BoundaryExp },
        params: *params,
        domain: *domain,
        constants: Constants::Boundary { a, m, delta, r_omega, x_b, y0, t0, c1, u0_sup, l1 },
        profile: None,
    })
}

/// `Σ(t,x) = A f(x)^γ / (γ(1+δt)^{1/(p−2)})`, dominating `u₀ ≤ B f^β`.
pub fn make_power_of_profile(params: &Params, profile: &Profile, beta: f64, b: f64) -> Result<BarrierSpec> {
    if params.regime() != Regime::PLaplacianLimit {
        return Err(Error::Regime("the power-of-profile barrier needs p − 1 < q ≤ p".into()));
    }
    need(beta > 0.0 && beta <= 1.0, "β ∈ (0, 1]")?;
    need(b > 0.0 && b.is_finite(), "B > 0")?;
    check_profile(params, profile)?;
    let p = params.p();
    let f_sup = profile.sup_norm();
    let gamma = GAMMA_MARGIN * gamma_cap(p, beta, b, f_sup);
    let a = pow(f_sup, -gamma);
    let delta = gamma * pow(f_sup, -(p - 2.0));
    Ok(BarrierSpec {
        kind: BarrierKind::PowerOfProfile,
        params: *params,
        domain: Domain::of(profile.grid()),
        constants: Constants::PowerOfProfile { a, delta, gamma, beta, b, f_sup },
        profile: Some(profile.field().clone()),
    })
}

/// `𝓕(t,x) = f(x)/(‖∇f‖_∞^{p−2} + t)^{1/(p−2)}`.
pub fn make_giant_multiple(params: &Params, profile: &Profile) -> Result<BarrierSpec> {
    if params.regime() == Regime::Giant {
        return Err(Error::Regime("the giant multiple needs q > p − 1".into()));
    }
    check_profile(params, profile)?;
    let grad = profile.grad_sup_norm();
    need(grad > 0.0 && grad.is_finite(), "‖∇f‖_∞ > 0")?;
    Ok(BarrierSpec {
        kind: BarrierKind::GiantMultiple,
        params: *params,
        domain: Domain::of(profile.grid()),
        constants: Constants::GiantMultiple { grad, g: pow(grad, params.p() - 2.0) },
        profile: Some(profile.field().clone()),
    })
}

fn check_profile(params: &Params, profile: &Profile) -> Result<()> {
    need(profile.kind() == ProfileKind::WithSource, "profile must solve the equation with source")?;
    need(profile.p() == params.p(), "profile built for the same p")?;
    need(profile.sup_norm() > 0.0, "profile must be positive")
}

/// `h = e^{u/(p−1)} − 1`.
pub fn transformed_value(u: f64, p: f64) -> f64 {
    libm::expm1(u / (p - 1.0))
}

/// `u/(p−1) ≤ h ≤ e^{u/(p−1)} u/(p−1)` for `u ≥ 0`.
pub fn transform_chain_holds(u: f64, p: f64) -> bool {
    let h = transformed_value(u, p);
    let lo = u / (p - 1.0);
    let hi = exp(u / (p - 1.0)) * lo;
    let tol = 1e-15 * hi.max(1.0);
    lo <= h + tol && h <= hi + tol
}

impl BarrierSpec {
    pub fn kind(&self) -> BarrierKind {
        self.kind
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn constants(&self) -> BTreeMap<String, f64> {
        self.constants.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.entries().into_iter().find(|(k, _)| *k == name).map(|(_, v)| v)
    }

    /// Copy with one constant overwritten and no re-validation; used to build
    /// deliberately broken specs.
    pub fn with_constant(&self, name: &str, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match out.constants.slot(name) {
            Some(slot) => {
                *slot = value;
                Ok(out)
            }
            None => Err(Error::Domain(format!("{:?} has no constant named {name}", self.kind))),
        }
    }

    /// Decay constant `C₁` of `u ≤ C₁(1+t)^{−1/(p−2)}` for the global kinds.
    pub fn decay_constant(&self) -> Option<f64> {
        match self.constants {
            Constants::GlobalExp { c1, .. } | Constants::GlobalPower { c1, .. } => Some(c1),
            _ => None,
        }
    }

    /// `L₁` of the boundary Lipschitz bound for the boundary kinds.
    pub fn boundary_lipschitz(&self) -> Option<f64> {
        match self.constants {
            Constants::Boundary { l1, .. } => Some(l1),
            _ => None,
        }
    }

    /// Time window `[0, t_max]` (unbounded for the global and profile kinds).
    pub fn time_window(&self) -> f64 {
        match self.constants {
            Constants::Boundary { t0, .. } => t0,
            _ => f64::INFINITY,
        }
    }

    /// Closed-form value at `(t, x)` with `x ∈ R^dim`.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64> {
        if x.len() != self.domain.dim {
            return Err(Error::DimensionMismatch { expected: self.domain.dim, found: x.len() });
        }
        if !(t >= 0.0) || t > self.time_window() {
            return Err(Error::OutOfWindow { t });
        }
        let mut rel: Vec<f64> = x.to_vec();
        if !self.domain.radial {
            rel[0] -= self.domain.center;
        }
        let norm = |v: &[f64]| sqrt(v.iter().map(|c| c * c).sum());
        match self.constants {
            Constants::GlobalExp { x0, .. } | Constants::GlobalPower { x0, .. } => {
                rel[0] -= x0;
                Ok(self.value_at(t, norm(&rel)))
            }
            Constants::Boundary { y0, r_omega, delta, .. } => {
                let inside = norm(&rel) <= self.domain.radius * (1.0 + 1e-12);
                rel[0] -= y0;
                let d = norm(&rel) - r_omega;
                if !inside || d < -1e-12 || d > delta * (1.0 + 1e-12) {
                    return Err(Error::OutOfWindow { t });
                }
                Ok(self.value_at(t, d.max(0.0)))
            }
            Constants::PowerOfProfile { .. } | Constants::GiantMultiple { .. } => {
                let s = if self.domain.radial { norm(&rel) } else { x[0] };
                Ok(self.value_at(t, s))
            }
        }
    }

    /// Value and time derivative from the kind's scalar argument: distance to
    /// `x₀` (global), distance to the exterior sphere (boundary), or the
    /// profile coordinate.
    fn value_and_rate(&self, t: f64, arg: f64) -> (f64, f64) {
        let p = self.params.p();
        let k = 1.0 / (p - 2.0);
        match self.constants {
            Constants::GlobalExp { a, big_r, .. } => {
                let s = a * pow(1.0 + t, -k) * sigma(p, big_r, arg);
                (s, -k * s / (1.0 + t))
            }
            Constants::GlobalPower { a, big_r, delta, .. } => {
                let s = a * pow(1.0 + delta * t, -k) * phi(p, big_r, arg);
                (s, -k * delta * s / (1.0 + delta * t))
            }
            Constants::Boundary { a, m, delta, t0, .. } => {
                let bracket = a * (-libm::expm1(-arg / delta)) + m;
                let decay = pow(1.0 + t, -k);
                let s = decay * bracket - m * pow(1.0 + t0, -k);
                (s, -k * decay / (1.0 + t) * bracket)
            }
            Constants::PowerOfProfile { a, delta, gamma, .. } => {
                let f = self.profile_value(arg);
                let s = a * pow(f, gamma) / (gamma * pow(1.0 + delta * t, k));
                (s, -k * delta * s / (1.0 + delta * t))
            }
            Constants::GiantMultiple { g, .. } => {
                let s = self.profile_value(arg) / pow(g + t, k);
                (s, -k * s / (g + t))
            }
        }
    }

    fn value_at(&self, t: f64, arg: f64) -> f64 {
        self.value_and_rate(t, arg).0
    }

    fn profile_value(&self, x: f64) -> f64 {
        self.profile.as_ref().map_or(0.0, |f| f.interpolate(x).max(0.0))
    }

    /// Scalar argument at node `i`. On radial grids the non-radial kinds use
    /// the point of the sphere `|x| = r_i` where the barrier is smallest.
    fn node_arg(&self, grid: &Grid, i: usize) -> f64 {
        let x = grid.node(i);
        let rel = if grid.is_radial() { x } else { x - self.domain.center };
        match self.constants {
            Constants::GlobalExp { x0, .. } | Constants::GlobalPower { x0, .. } => {
                if grid.is_radial() {
                    rel + x0
                } else {
                    (rel - x0).abs()
                }
            }
            Constants::Boundary { y0, r_omega, .. } => {
                if grid.is_radial() {
                    (y0.abs() - rel) - r_omega
                } else {
                    (rel - y0).abs() - r_omega
                }
            }
            _ => x,
        }
    }

    fn in_region(&self, grid: &Grid, i: usize) -> bool {
        match self.constants {
            Constants::Boundary { delta, .. } => {
                let d = self.node_arg(grid, i);
                d > 0.0 && d < delta
            }
            _ => true,
        }
    }

    fn compatible(&self, grid: &Grid) -> Result<()> {
        if Domain::of(grid) != self.domain {
            return Err(Error::GridMismatch);
        }
        if let Some(f) = &self.profile {
            if f.grid() != grid {
                return Err(Error::GridMismatch);
            }
        }
        Ok(())
    }

    /// Nodal values of the barrier at time `t` (no window check).
    pub fn sample(&self, grid: &Grid, t: f64) -> Result<Field> {
        self.compatible(grid)?;
        let values = (0..grid.len()).map(|i| self.value_at(t, self.node_arg(grid, i))).collect();
        Ok(Field::from_parts(*grid, values, t))
    }
}

pub fn eval_barrier(spec: &BarrierSpec, t: f64, x: &[f64]) -> Result<f64> {
    spec.eval(t, x)
}

/// Re-checks the constructor constraints; fails on any tampered constant.
pub fn validate(spec: &BarrierSpec) -> Result<()> {
    let pr = &spec.params;
    let (p, q) = (pr.p(), pr.q());
    let (x0_expected, r0_expected) = spec.domain.enclosure();
    match spec.constants {
        Constants::GlobalExp { a, big_r, r0, x0, u0_sup, c1 } => {
            need(pr.regime() == Regime::Giant, "q = p − 1")?;
            need(x0.abs() > spec.domain.radius, "x₀ outside Ω̄")?;
            need(r0 >= x0.abs() + spec.domain.radius, "Ω ⊂ B(x₀, R₀)")?;
            need(big_r > r0, "R > R₀")?;
            let lower = exp_first_entry(p, big_r).max(u0_sup / sigma(p, big_r, r0));
            need(a >= lower * (1.0 - CHECK_RTOL), "(c2) lower bound on A")?;
            need(close(c1, a * sigma(p, big_r, 0.0)), "C₁ = A σ(0)")
        }
        Constants::GlobalPower { a, big_r, r0, x0, delta, u0_sup, c1 } => {
            need(pr.regime() != Regime::Giant, "q > p − 1")?;
            need(close(x0, x0_expected) && close(r0, r0_expected), "enclosure (x₀, R₀)")?;
            let (ea, er, ed) = power_constants(p, q, spec.domain.dim as f64, r0, u0_sup);
            need(close(a, ea), "A formula")?;
            need(close(big_r, er), "R formula")?;
            need(close(delta, ed), "δ formula")?;
            need(close(c1, a * phi(p, big_r, 0.0)), "C₁ = A φ(0)")
        }
        Constants::Boundary { a, m, delta, r_omega, x_b, y0, t0, c1, u0_sup, l1 } => {
            let transformed = spec.kind == BarrierKind::BoundaryExpTransformed;
            need(pr.regime() != Regime::Super, "p − 1 ≤ q ≤ p")?;
            need(transformed == pr.is_q_equal_p(), "transformed form exactly when q = p")?;
            need(t0 >= 1.0, "t₀ ≥ 1")?;
            need(r_omega > 0.0 && close((y0 - x_b).abs(), r_omega), "|x₀ − y₀| = R_Ω")?;
            let tag = if transformed { "(c9)" } else { "(c4)" };
            need(close(m, boundary_m(p, u0_sup, transformed)), tag)?;
            need(a >= boundary_a(p, m, c1, transformed) * (1.0 - CHECK_RTOL), tag)?;
            let cap = boundary_delta_cap(p, q, spec.domain.dim, r_omega, a, transformed);
            let tag = if transformed { "(c10)" } else { "(c5)" };
            need(delta > 0.0 && delta < cap && delta < spec.domain.radius, tag)?;
            let want = if transformed { (2.0 * c1).max((p - 1.0) * a) } else { (2.0 * c1).max(a) } / delta;
            need(close(l1, want), "L₁ = max{2C₁, A}/δ")
        }
        Constants::PowerOfProfile { a, delta, gamma, beta, b, f_sup } => {
            need(pr.regime() == Regime::PLaplacianLimit, "p − 1 < q ≤ p")?;
            let observed = spec.profile.as_ref().map_or(0.0, Field::sup_norm);
            need(close(f_sup, observed), "‖f‖_∞ of the stored profile")?;
            need(beta > 0.0 && beta <= 1.0 && b > 0.0, "β ∈ (0,1], B > 0")?;
            need(gamma > 0.0 && gamma < 1.0, "γ ∈ (0, 1)")?;
            need(gamma <= gamma_cap(p, beta, b, f_sup) * (1.0 + CHECK_RTOL), "(e3)")?;
            need(close(a, pow(f_sup, -gamma)), "A = ‖f‖_∞^{−γ}")?;
            need(close(delta, gamma * pow(f_sup, -(p - 2.0))), "δ = γ‖f‖_∞^{−(p−2)}")
        }
        Constants::GiantMultiple { grad, g } => {
            need(pr.regime() != Regime::Giant, "q > p − 1")?;
            need(grad > 0.0, "‖∇f‖_∞ > 0")?;
            need(close(g, pow(grad, p - 2.0)), "G = ‖∇f‖_∞^{p−2}")
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub t: f64,
    pub node: usize,
    pub x: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub kind: BarrierKind,
    pub constants: BTreeMap<String, f64>,
    pub n: usize,
    pub h: f64,
    pub times: Vec<f64>,
    /// Times skipped for lying outside the validity window.
    pub skipped_times: Vec<f64>,
    pub nodes_checked: usize,
    pub min_residual: f64,
    pub argmin: Option<ResidualPoint>,
    /// Natural size of the residual terms (`max |∂_t S|` over the checked set).
    pub scale: f64,
    pub c_cal: f64,
    /// `c_cal·h + RESIDUAL_FLOOR·scale`.
    pub tolerance: f64,
    pub violation_count: usize,
    pub violations: Vec<ResidualPoint>,
    pub passed: bool,
}

/// Discrete residual of the barrier at every `(t, node)` of the validity
/// region; passes when no residual is below `−tolerance`.
pub fn certify_supersolution(
    spec: &BarrierSpec,
    grid: &Grid,
    times: &[f64],
    scheme: &SchemeConfig,
    c_cal: f64,
) -> Result<CertificationReport> {
    if grid.is_radial() && !spec.kind.is_radial() {
        return Err(Error::Unsupported(format!(
            "{:?} is not radially symmetric; certify it on an interval",
            spec.kind
        )));
    }
    spec.compatible(grid)?;
    need(c_cal >= 0.0, "c_cal ≥ 0")?;
    let p = spec.params.p();
    let transformed = spec.kind == BarrierKind::BoundaryExpTransformed;
    let mut kernel = Kernel::new(grid, p, spec.params.q(), scheme.hamiltonian);
    let mut residuals: Vec<ResidualPoint> = Vec::new();
    let mut skipped = Vec::new();
    let mut scale: f64 = 0.0;
    let mut used_times = Vec::new();
    for &t in times {
        if !(t >= 0.0) || t > spec.time_window() {
            skipped.push(t);
            continue;
        }
        used_times.push(t);
        let mut s = Vec::with_capacity(grid.len());
        let mut st = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let (v, r) = spec.value_and_rate(t, spec.node_arg(grid, i));
            s.push(v);
            st.push(r);
        }
        kernel.load(&s);
        for i in grid.active_range() {
            if !spec.in_region(grid, i) {
                continue;
            }
            let res = if transformed {
                pow((1.0 + s[i]) / (p - 1.0), p - 2.0) * st[i] - kernel.laplacian_at(i)
            } else {
                st[i] - kernel.laplacian_at(i) - kernel.hamiltonian_at(i)
            };
            scale = scale.max(st[i].abs());
            residuals.push(ResidualPoint { t, node: i, x: grid.node(i), residual: res });
        }
    }
    let tolerance = c_cal * grid.h() + RESIDUAL_FLOOR * scale;
    let mut min_residual = f64::INFINITY;
    let mut argmin = None;
    let mut violations = Vec::new();
    let mut violation_count = 0;
    for rp in &residuals {
        if rp.residual < min_residual {
            min_residual = rp.residual;
            argmin = Some(*rp);
        }
        if rp.residual < -tolerance {
            violation_count += 1;
            if violations.len() < MAX_LISTED {
                violations.push(*rp);
            }
        }
    }
    Ok(CertificationReport {
        kind: spec.kind,
        constants: spec.constants(),
        n: grid.n(),
        h: grid.h(),
        times: used_times,
        skipped_times: skipped,
        nodes_checked: residuals.len(),
        min_residual,
        argmin,
        scale,
        c_cal,
        tolerance,
        violation_count,
        violations,
        passed: violation_count == 0 && !residuals.is_empty(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub kind: BarrierKind,
    pub h: Vec<f64>,
    pub min_residuals: Vec<f64>,
    /// `max(0, −min_residual − floor)/h` per grid.
    pub c_values: Vec<f64>,
    /// Successive ratios of `c_values`, each floored at `RESIDUAL_FLOOR·scale/h`;
    /// 1 when both are zero.
    pub ratios: Vec<f64>,
    /// Twice the largest per-grid constant.
    pub c_cal: f64,
    pub stable: bool,
}

/// Per-grid constants `C_k` from uncalibrated certification runs, their
/// refinement ratios, and the calibrated `C_cal = 2 max_k C_k`.
pub fn calibrate(
    grids: &[Grid],
    build: impl Fn(&Grid) -> Result<BarrierSpec>,
    times: &[f64],
    scheme: &SchemeConfig,
) -> Result<Calibration> {
    if grids.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, found: grids.len() });
    }
    let mut kind = None;
    let (mut hs, mut mins, mut cs, mut floors) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for g in grids {
        let spec = build(g)?;
        kind = Some(spec.kind);
        let rep = certify_supersolution(&spec, g, times, scheme, 0.0)?;
        let floor = RESIDUAL_FLOOR * rep.scale;
        hs.push(g.h());
        mins.push(rep.min_residual);
        cs.push((-rep.min_residual - floor).max(0.0) / g.h());
        floors.push(floor / g.h());
    }
    // Two exact supersolutions (both constants zero) have ratio 1; otherwise
    // each constant is floored so that a single zero does not divide.
    let ratios: Vec<f64> =
        (1..cs.len())
            .map(|k| {
                if cs[k] == 0.0 && cs[k - 1] == 0.0 {
                    1.0
                } else {
                    cs[k].max(floors[k]) / cs[k - 1].max(floors[k - 1])
                }
            })
            .collect();
    let stable = ratios.iter().all(|r| (0.5..=2.0).contains(r));
    let c_cal = 2.0 * cs.iter().fold(0.0_f64, |m, c| m.max(*c));
    Ok(Calibration {
        kind: kind.expect("at least two grids"),
        h: hs,
        min_residuals: mins,
        c_values: cs,
        ratios,
        c_cal,
        stable,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub node: usize,
    pub x: f64,
    pub u: f64,
    pub barrier: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub kind: BarrierKind,
    pub constants: BTreeMap<String, f64>,
    pub snapshots_checked: usize,
    pub nodes_checked: usize,
    /// `max (u − S)` over the checked set; negative when strictly dominated.
    pub max_excess: f64,
    pub violation_count: usize,
    pub violations: Vec<Violation>,
    pub relative_tolerance: f64,
}

impl DominationReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Relative slack in nodewise comparisons.
pub const COMPARISON_RTOL: f64 = 1e-12;

/// `u ≤ S` at every node of every snapshot inside the barrier's window.
pub fn check_domination(traj: &Trajectory, spec: &BarrierSpec) -> Result<DominationReport> {
    if traj.rescaled {
        return Err(Error::Unsupported("domination is checked in physical time".into()));
    }
    let grid = *traj.grid();
    spec.compatible(&grid)?;
    let mut report = DominationReport {
        kind: spec.kind,
        constants: spec.constants(),
        snapshots_checked: 0,
        nodes_checked: 0,
        max_excess: f64::NEG_INFINITY,
        violation_count: 0,
        violations: Vec::new(),
        relative_tolerance: COMPARISON_RTOL,
    };
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let t = snap.time();
        if t > spec.time_window() {
            continue;
        }
        report.snapshots_checked += 1;
        for i in 0..grid.len() {
            if !grid.is_dirichlet(i) && !spec.in_region(&grid, i) {
                continue;
            }
            if grid.is_dirichlet(i) && matches!(spec.constants, Constants::Boundary { .. }) {
                continue;
            }
            let s = spec.value_at(t, spec.node_arg(&grid, i));
            let u = snap.values()[i];
            report.nodes_checked += 1;
            report.max_excess = report.max_excess.max(u - s);
            if u > s + COMPARISON_RTOL * s.abs().max(u.abs()) {
                if k == 0 {
                    return Err(Error::PreconditionFailed(format!(
                        "initial data exceeds the barrier at x = {} ({u} > {s})",
                        grid.node(i)
                    )));
                }
                report.violation_count += 1;
                if report.violations.len() < MAX_LISTED {
                    report.violations.push(Violation { t, node: i, x: grid.node(i), u, barrier: s });
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridKind};

    fn unit() -> Domain {
        Domain::of(&make_grid(GridKind::Interval { a: -1.0, b: 1.0 }, 10).unwrap())
    }

    #[test]
    fn enclosure_of_unit_interval() {
        assert_eq!(unit().enclosure(), (2.0, 3.0));
    }

    #[test]
    fn sigma_and_phi_vanish_at_r() {
        assert_eq!(sigma(3.0, 6.0, 6.0), 0.0);
        assert_eq!(phi(3.0, 6.0, 6.0), 0.0);
        for k in 0..50 {
            let r = 6.0 * k as f64 / 50.0;
            assert!(sigma(3.0, 6.0, r + 0.1) < sigma(3.0, 6.0, r));
        }
    }

    #[test]
    fn boundary_m_example() {
        assert_eq!(boundary_m(3.0, 1.0, false), 2.0);
    }

    #[test]
    fn chain_c7() {
        for k in 0..=1000 {
            assert!(transform_chain_holds(10.0 * k as f64 / 1000.0, 3.0));
        }
    }

    #[test]
    fn boundary_barrier_vanishes_at_its_point() {
        let pr = Params::new(3.0, 2.0, 1).unwrap();
        let spec = make_boundary_barrier(&pr, &unit(), 1.0, 2.0, 5.0, 1.0).unwrap();
        assert!(spec.eval(2.0, &[1.0]).unwrap().abs() < 1e-12);
        assert!(matches!(spec.eval(2.5, &[1.0]), Err(Error::OutOfWindow { .. })));
        assert!(matches!(spec.eval(1.0, &[0.0]), Err(Error::OutOfWindow { .. })));
        validate(&spec).unwrap();
        assert!(validate(&spec.with_constant("delta", 0.6).unwrap()).is_err());
    }

    #[test]
    fn regime_gates() {
        let d = unit();
        assert!(matches!(make_global_exp(&Params::new(3.0, 2.5, 1).unwrap(), &d, 1.0), Err(Error::Regime(_))));
        assert!(matches!(make_global_power(&Params::new(3.0, 2.0, 1).unwrap(), &d, 1.0), Err(Error::Regime(_))));
        assert!(matches!(
            make_boundary_barrier(&Params::new(3.0, 4.0, 1).unwrap(), &d, 1.0, 1.0, 1.0, 1.0),
            Err(Error::Regime(_))
        ));
        let tr = make_boundary_barrier(&Params::new(3.0, 3.0, 1).unwrap(), &d, -1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(tr.kind(), BarrierKind::BoundaryExpTransformed);
    }
}
