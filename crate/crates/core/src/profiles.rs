//! Separate-variables profiles: `f` solving `−Δ_p f − |∇f|^{p−1} − f/(p−2) = 0`
//! and `f₀` solving `−Δ_p f₀ − f₀/(p−2) = 0`, both positive with zero
//! Dirichlet data.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::evolve::{evolve_rescaled_with, EventKind, EvolveConfig, RescaledSource};
use crate::math::{pow, Pow};
use crate::operators::{discrete_residual, HamiltonianScheme, Kernel, SchemeConfig};
use crate::params::{Params, Regime};
use crate::{Error, Field, Grid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `f`, with the `|∇f|^{p−1}` term.
    WithSource,
    /// `f₀`, pure p-Laplacian.
    Pure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMethod {
    Shooting,
    Marching,
    Supplied,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    field: Field,
    kind: ProfileKind,
    method: ProfileMethod,
    p: f64,
    sup_norm: f64,
    grad_sup_norm: f64,
    lipschitz_const: f64,
}

impl Profile {
    /// Wraps nodal values. `grad_sup_norm` defaults to the discrete
    /// Lipschitz constant.
    pub fn from_field(field: Field, kind: ProfileKind, p: f64, grad_sup_norm: Option<f64>) -> Result<Self> {
        if !(p > 2.0) {
            return Err(Error::Domain(format!("p > 2 required (p = {p})")));
        }
        if !field.has_dirichlet_zeros() {
            return Err(Error::Domain("profile must vanish on the boundary".into()));
        }
        if field.values().iter().any(|v| *v < 0.0) {
            return Err(Error::Domain("profile must be nonnegative".into()));
        }
        let lip = field.lipschitz_estimate();
        Ok(Self::assemble(field.with_time(0.0), kind, ProfileMethod::Supplied, p, grad_sup_norm.unwrap_or(lip)))
    }

    fn assemble(field: Field, kind: ProfileKind, method: ProfileMethod, p: f64, grad: f64) -> Self {
        Self {
            sup_norm: field.sup_norm(),
            lipschitz_const: field.lipschitz_estimate(),
            grad_sup_norm: grad,
            field,
            kind,
            method,
            p,
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn method(&self) -> ProfileMethod {
        self.method
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `‖∇f‖_∞`: the ODE slope maximum for shot profiles, the discrete
    /// Lipschitz constant otherwise.
    pub fn grad_sup_norm(&self) -> f64 {
        self.grad_sup_norm
    }

    pub fn lipschitz_const(&self) -> f64 {
        self.lipschitz_const
    }

    pub fn is_positive_inside(&self) -> bool {
        let g = self.grid();
        (0..g.len()).all(|i| g.is_dirichlet(i) || self.field.values()[i] > 0.0)
    }

    /// Copy with perturbed nodal values, for fault-injection checks.
    pub fn perturbed(&self, offset: f64) -> Self {
        let mut f = self.field.clone();
        let g = *f.grid();
        let values: Vec<f64> = f.values().iter().map(|v| v + offset).collect();
        f = Field::from_parts(g, values, 0.0);
        f.enforce_dirichlet();
        Self::assemble(f, self.kind, self.method, self.p, self.grad_sup_norm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootingConfig {
    /// Bracket on `f(center)`. `None` starts from `(1e−6, 10·diameter)` and
    /// widens it until it straddles; an explicit bracket is used as given.
    pub center_value_bracket: Option<(f64, f64)>,
    /// Relative width at which bisection stops.
    pub bisection_tol: f64,
    /// RK4 step; `None` means `h/10`.
    pub ode_step: Option<f64>,
    pub max_iter: u32,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self { center_value_bracket: None, bisection_tol: 1e-13, ode_step: None, max_iter: 200 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Shot {
    /// `f` reached zero before the boundary.
    Under,
    /// `f` still positive at the boundary.
    Over,
}

struct Shooter {
    p: f64,
    dim: f64,
    source: bool,
    radius: f64,
    steps: usize,
    inv: Pow,
}

impl Shooter {
    /// Right-hand side of `f' = sgn(w)|w|^{1/(p−1)}`,
    /// `w' = −σ|w| − f/(p−2) − (N−1)w/r` (σ = 1 with source).
    #[inline]
    fn rhs(&self, r: f64, f: f64, w: f64) -> (f64, f64) {
        let fp = self.inv.signed(w);
        let lin = f / (self.p - 2.0);
        let wp = if r == 0.0 {
            // w ≈ w'(0) r and (N−1)w/r → (N−1)w'(0).
            -lin / self.dim
        } else {
            let src = if self.source { w.abs() } else { 0.0 };
            -src - lin - (self.dim - 1.0) * w / r
        };
        (fp, wp)
    }

    fn step_size(&self) -> f64 {
        self.radius / self.steps as f64
    }

    /// Integrates from the center; `record` receives `(r, f, f')` per step.
    fn integrate(&self, a: f64, mut record: Option<&mut Vec<(f64, f64, f64)>>) -> Shot {
        let hs = self.step_size();
        let (mut f, mut w) = (a, 0.0);
        if let Some(rec) = record.as_deref_mut() {
            rec.push((0.0, f, 0.0));
        }
        let mut under = false;
        for k in 0..self.steps {
            let r = k as f64 * hs;
            let (k1f, k1w) = self.rhs(r, f, w);
            let (k2f, k2w) = self.rhs(r + 0.5 * hs, f + 0.5 * hs * k1f, w + 0.5 * hs * k1w);
            let (k3f, k3w) = self.rhs(r + 0.5 * hs, f + 0.5 * hs * k2f, w + 0.5 * hs * k2w);
            let (k4f, k4w) = self.rhs(r + hs, f + hs * k3f, w + hs * k3w);
            f += hs / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
            w += hs / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            let r_next = if k + 1 == self.steps { self.radius } else { (k + 1) as f64 * hs };
            match record.as_deref_mut() {
                Some(rec) => rec.push((r_next, f, self.inv.signed(w))),
                None => {
                    if f <= 0.0 {
                        return Shot::Under;
                    }
                }
            }
            if f <= 0.0 {
                under = true;
            }
        }
        if under || f <= 0.0 {
            Shot::Under
        } else {
            Shot::Over
        }
    }
}

fn shoot(params: &Params, grid: &Grid, cfg: &ShootingConfig, kind: ProfileKind) -> Result<Profile> {
    if !(cfg.bisection_tol > 0.0) || cfg.max_iter == 0 {
        return Err(Error::Domain("shooting tolerances must be positive".into()));
    }
    let radius = grid.radius();
    let hs = cfg.ode_step.unwrap_or(grid.h() / 10.0);
    if !(hs > 0.0) {
        return Err(Error::Domain("ode_step must be positive".into()));
    }
    let p = params.p();
    let sh = Shooter {
        p,
        dim: grid.dim() as f64,
        source: kind == ProfileKind::WithSource,
        radius,
        steps: libm::ceil(radius / hs).max(1.0) as usize,
        inv: Pow::new(1.0 / (p - 1.0)),
    };

    let (mut lo, mut hi) = match cfg.center_value_bracket {
        Some((lo, hi)) => {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::Domain(format!("bracket ({lo}, {hi}) must be ordered and positive")));
            }
            if sh.integrate(lo, None) != Shot::Under || sh.integrate(hi, None) != Shot::Over {
                return Err(Error::Bracket { lo, hi });
            }
            (lo, hi)
        }
        None => {
            let (mut lo, mut hi) = (1e-6, 10.0 * grid.diameter());
            let mut tries = 0;
            while sh.integrate(lo, None) != Shot::Under {
                lo /= 10.0;
                tries += 1;
                if tries > 30 {
                    return Err(Error::Bracket { lo, hi });
                }
            }
            while sh.integrate(hi, None) != Shot::Over {
                hi *= 10.0;
                tries += 1;
                if tries > 60 {
                    return Err(Error::Bracket { lo, hi });
                }
            }
            (lo, hi)
        }
    };

    let mut iters = 0;
    while hi - lo > cfg.bisection_tol * hi {
        if iters >= cfg.max_iter {
            return Err(Error::NonConvergence { what: "center-value bisection", iterations: iters as u64 });
        }
        let mid = 0.5 * (lo + hi);
        match sh.integrate(mid, None) {
            Shot::Under => lo = mid,
            Shot::Over => hi = mid,
        }
        iters += 1;
    }

    let a = 0.5 * (lo + hi);
    let mut traj = Vec::with_capacity(sh.steps + 1);
    sh.integrate(a, Some(&mut traj));
    let step = sh.step_size();
    let sample = |rho: f64| -> f64 {
        let k = libm::floor(rho / step) as usize;
        if k >= sh.steps {
            return traj[sh.steps].1.max(0.0);
        }
        let (r0, f0, d0) = traj[k];
        let (r1, f1, d1) = traj[k + 1];
        let dr = r1 - r0;
        let s = ((rho - r0) / dr).clamp(0.0, 1.0);
        let (s2, s3) = (s * s, s * s * s);
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * f0
            + (s3 - 2.0 * s2 + s) * dr * d0
            + (-2.0 * s3 + 3.0 * s2) * f1
            + (s3 - s2) * dr * d1;
        v.max(0.0)
    };
    let values: Vec<f64> =
        (0..grid.len()).map(|i| if grid.is_dirichlet(i) { 0.0 } else { sample(grid.radial_distance(i)) }).collect();
    let grad = traj.iter().fold(0.0_f64, |m, e| m.max(e.2.abs()));
    let field = Field::new(*grid, values, 0.0)?;
    Ok(Profile::assemble(field, kind, ProfileMethod::Shooting, p, grad))
}

/// `f` by shooting on the center value. Only `p` and the grid geometry enter.
pub fn shoot_profile_f(params: &Params, grid: &Grid, cfg: &ShootingConfig) -> Result<Profile> {
    shoot(params, grid, cfg, ProfileKind::WithSource)
}

/// `f₀` by shooting on the center value.
pub fn shoot_profile_f0(params: &Params, grid: &Grid, cfg: &ShootingConfig) -> Result<Profile> {
    shoot(params, grid, cfg, ProfileKind::Pure)
}

/// Positive bump `0.5·R·(1 − ρ²/R²)` used as the default marching guess.
pub fn default_guess(grid: &Grid) -> Field {
    let r = grid.radius();
    let values = (0..grid.len())
        .map(|i| {
            if grid.is_dirichlet(i) {
                0.0
            } else {
                let s = grid.radial_distance(i) / r;
                0.5 * r * (1.0 - s * s)
            }
        })
        .collect();
    Field::from_parts(*grid, values, 0.0)
}

/// Steady state of the rescaled flow from [`default_guess`]. `evolve_cfg.t_end`
/// is the final `s`; the `rescaled` flag is ignored.
pub fn march_profile(
    params: &Params,
    grid: &Grid,
    kind: ProfileKind,
    evolve_cfg: &EvolveConfig,
    scheme: &SchemeConfig,
) -> Result<Profile> {
    march_profile_from(&default_guess(grid), params, kind, evolve_cfg, scheme)
}

pub fn march_profile_from(
    v0: &Field,
    params: &Params,
    kind: ProfileKind,
    evolve_cfg: &EvolveConfig,
    scheme: &SchemeConfig,
) -> Result<Profile> {
    let grid = v0.grid();
    if !(0..grid.len()).all(|i| grid.is_dirichlet(i) || v0.values()[i] > 0.0) {
        return Err(Error::Domain("marching guess must be positive inside".into()));
    }
    let source = match kind {
        ProfileKind::WithSource => RescaledSource::Frozen,
        ProfileKind::Pure => RescaledSource::Absent,
    };
    let cfg = EvolveConfig { rescaled: true, ..*evolve_cfg };
    let v0 = v0.clone().with_time(0.0);
    let tr = evolve_rescaled_with(&v0, params, &cfg, scheme, source)?;
    if tr.first_event(EventKind::SteadyState).is_none() {
        return Err(Error::NonConvergence { what: "rescaled marching", iterations: tr.steps });
    }
    let field = tr.final_state().clone().with_time(0.0);
    let grad = field.lipschitz_estimate();
    Ok(Profile::assemble(field, kind, ProfileMethod::Marching, params.p(), grad))
}

/// Discrete stationary residual `−Δ_p^h f − σĤ_{p−1}(f) − f/(p−2)` at active
/// nodes (σ = 1 for `f`, 0 for `f₀`).
pub fn stationary_residual(profile: &Profile, scheme: &SchemeConfig) -> Result<Field> {
    let grid = *profile.grid();
    let p = profile.p();
    let mut k = Kernel::new(&grid, p, p - 1.0, scheme.hamiltonian);
    k.load(profile.field().values());
    let sigma = if profile.kind() == ProfileKind::WithSource { 1.0 } else { 0.0 };
    let u = profile.field().values();
    let mut out = alloc::vec![0.0; grid.len()];
    for i in grid.active_range() {
        out[i] = -k.laplacian_at(i) - sigma * k.hamiltonian_at(i) - u[i] / (p - 2.0);
    }
    Ok(Field::from_parts(grid, out, 0.0))
}

/// Discrete residual of the evolution equation at `u_∞(t) = t^{−1/(p−2)} f`.
pub fn giant_residual(profile: &Profile, params: &Params, t: f64, scheme: &SchemeConfig) -> Result<Field> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t > 0 required (t = {t})")));
    }
    if params.regime() != Regime::Giant {
        return Err(Error::Regime(String::from("the friendly giant needs q = p − 1")));
    }
    let a = params.decay_rate();
    let u = profile.field().scaled(pow(t, -a)).with_time(t);
    let du = profile.field().scaled(-a * pow(t, -a - 1.0)).with_time(t);
    discrete_residual(&u, &du, params, scheme)
}

/// Default marching scheme: second order for the frozen source term.
pub fn marching_scheme() -> SchemeConfig {
    SchemeConfig::with_hamiltonian(HamiltonianScheme::FaceAverage)
}
