//! Explicit monotone time stepping in physical time `t` and in the
//! self-similar variables `s = ln t`, `v = t^{1/(p−2)} u`.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math::{exp, ln, pow};
use crate::operators::{HamiltonianScheme, Kernel, SchemeConfig};
use crate::params::Params;
use crate::{Error, Field, Grid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveConfig {
    /// Fraction of the CFL bound. Values above 0.5 void the monotonicity guarantee.
    pub cfl_safety: f64,
    /// Final time (final `s` for rescaled runs).
    pub t_end: f64,
    pub dt_min: f64,
    /// Blowup guard on the largest difference quotient.
    pub grad_cap: f64,
    pub record_every: f64,
    pub rescaled: bool,
    /// Rescaled runs stop once `‖∂_s v‖_∞` falls below this.
    pub steady_tol: f64,
    pub allow_zero_initial: bool,
    /// Lipschitz constant for the boundary-loss monitor (physical runs, `t ≥ 1`).
    pub boundary_lipschitz: Option<f64>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            cfl_safety: 0.45,
            t_end: 1.0,
            dt_min: 1e-14,
            grad_cap: 1e4,
            record_every: 0.1,
            rescaled: false,
            steady_tol: 1e-8,
            allow_zero_initial: false,
            boundary_lipschitz: None,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Domain(format!("evolve config: {what}")));
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad("cfl_safety must lie in (0, 1]");
        }
        if !(self.dt_min > 0.0) {
            return bad("dt_min must be positive");
        }
        if !(self.grad_cap > 0.0) {
            return bad("grad_cap must be positive");
        }
        if !(self.record_every > 0.0 && self.record_every.is_finite()) {
            return bad("record_every must be positive");
        }
        if !self.t_end.is_finite() {
            return bad("t_end must be finite");
        }
        if !(self.steady_tol > 0.0) {
            return bad("steady_tol must be positive");
        }
        if let Some(l) = self.boundary_lipschitz {
            if !(l > 0.0) {
                return bad("boundary_lipschitz must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    BoundaryLoss,
    BlowupGuard,
    SteadyState,
}

impl EventKind {
    pub fn is_terminal(self) -> bool {
        !matches!(self, EventKind::BoundaryLoss)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Largest difference quotient (guard, boundary loss) or `‖∂_s v‖_∞` (steady state).
    pub magnitude: f64,
    /// Node at the left end of the arg-max face.
    pub node: usize,
    pub coord: f64,
}

/// How the gradient term enters the rescaled equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaledSource {
    /// `e^{−(q−p+1)s/(p−2)} |∇v|^q`.
    #[default]
    Physical,
    /// `|∇v|^{p−1}` with unit prefactor, whatever `q` is.
    Frozen,
    /// No gradient term.
    Absent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: Params,
    pub rescaled: bool,
    pub snapshots: Vec<Field>,
    pub events: Vec<Event>,
    pub steps: u64,
}

impl Trajectory {
    pub fn final_state(&self) -> &Field {
        self.snapshots.last().expect("trajectories hold at least the initial state")
    }

    pub fn initial_state(&self) -> &Field {
        &self.snapshots[0]
    }

    pub fn terminal_event(&self) -> Option<&Event> {
        self.events.iter().find(|e| e.kind.is_terminal())
    }

    pub fn first_event(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(Field::time).collect()
    }

    pub fn grid(&self) -> &Grid {
        self.snapshots[0].grid()
    }
}

/// `e^{−(q−p+1)s/(p−2)}`; exactly 1 when `q = p − 1`.
pub fn source_prefactor(params: &Params, s: f64) -> f64 {
    let e = params.q() - params.p() + 1.0;
    if e == 0.0 {
        1.0
    } else {
        exp(-e * s / (params.p() - 2.0))
    }
}

/// `v(s) = t^{1/(p−2)} u(t)` with `s = ln t`.
pub fn rescale_to_v(field: &Field, p: f64) -> Result<Field> {
    let t = field.time();
    if !(t > 0.0) {
        return Err(Error::Domain(format!("rescaling needs t > 0 (t = {t})")));
    }
    if !(p > 2.0) {
        return Err(Error::Domain(format!("p > 2 required (p = {p})")));
    }
    let c = pow(t, 1.0 / (p - 2.0));
    Ok(field.scaled(c).with_time(ln(t)))
}

/// Inverse of [`rescale_to_v`]: the field's time is read as `s`.
pub fn rescale_from_v(field: &Field, p: f64) -> Result<Field> {
    if !(p > 2.0) {
        return Err(Error::Domain(format!("p > 2 required (p = {p})")));
    }
    let t = exp(field.time());
    let c = pow(t, -1.0 / (p - 2.0));
    Ok(field.scaled(c).with_time(t))
}

#[derive(Clone, Copy, Debug)]
enum Mode {
    Physical,
    Rescaled(RescaledSource),
}

struct Stepper {
    kernel: Kernel,
    lap: Vec<f64>,
    ham: Vec<f64>,
    rate: Vec<f64>,
    mode: Mode,
    params: Params,
    cfl: f64,
}

impl Stepper {
    fn new(grid: &Grid, params: &Params, scheme: &SchemeConfig, mode: Mode, cfl: f64) -> Self {
        let q = match mode {
            Mode::Rescaled(RescaledSource::Frozen) => params.p() - 1.0,
            _ => params.q(),
        };
        let len = grid.len();
        Self {
            kernel: Kernel::new(grid, params.p(), q, scheme.hamiltonian),
            lap: alloc::vec![0.0; len],
            ham: alloc::vec![0.0; len],
            rate: alloc::vec![0.0; len],
            mode,
            params: *params,
            cfl,
        }
    }

    fn prefactor(&self, time: f64) -> f64 {
        match self.mode {
            Mode::Physical | Mode::Rescaled(RescaledSource::Frozen) => 1.0,
            Mode::Rescaled(RescaledSource::Absent) => 0.0,
            Mode::Rescaled(RescaledSource::Physical) => source_prefactor(&self.params, time),
        }
    }

    /// Fills `rate`; returns `(max |D|, source prefactor)`.
    fn eval(&mut self, u: &[f64], time: f64) -> (f64, f64) {
        let m = self.kernel.eval(u, &mut self.lap, &mut self.ham);
        let c = self.prefactor(time);
        let linear = match self.mode {
            Mode::Physical => 0.0,
            Mode::Rescaled(_) => 1.0 / (self.params.p() - 2.0),
        };
        let s = &self.kernel.stencil;
        self.rate.iter_mut().for_each(|v| *v = 0.0);
        for i in s.first..=s.last {
            self.rate[i] = self.lap[i] + c * self.ham[i] + linear * u[i];
        }
        (m, c)
    }

    /// CFL step; infinite when neither bound constrains.
    fn stable_dt(&self, m: f64, c: f64) -> f64 {
        let p = self.kernel.p();
        let q = self.kernel.q();
        let h = self.kernel.stencil.h;
        let mut dt = f64::INFINITY;
        if m > 0.0 {
            let diff = (p - 1.0) * pow(m, p - 2.0) * self.kernel.stencil.kappa;
            dt = dt.min(h * h / diff);
            if c > 0.0 {
                dt = dt.min(h / (c * q * pow(m, q - 1.0)));
            }
        }
        self.cfl * dt
    }

    fn check_monotone(&self, m: f64, time: f64) -> Result<()> {
        if self.kernel.scheme() != HamiltonianScheme::FaceAverage {
            return Ok(());
        }
        if matches!(self.mode, Mode::Rescaled(RescaledSource::Absent)) {
            return Ok(());
        }
        let bound = self.kernel.monotone_slope_bound();
        if m > bound {
            return Err(Error::SchemeNotMonotone { time, max_slope: m, bound });
        }
        Ok(())
    }

    fn argmax_face(&self) -> usize {
        let s = self.kernel.slopes();
        let mut k = 0;
        for j in 1..s.len() {
            if s[j].abs() > s[k].abs() {
                k = j;
            }
        }
        k
    }

    fn rate_sup(&self) -> f64 {
        self.rate.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn validate_initial(u0: &Field, cfg: &EvolveConfig) -> Result<()> {
    if let Some(i) = u0.values().iter().position(|v| *v < 0.0) {
        return Err(Error::Domain(format!("initial data must be nonnegative (node {i})")));
    }
    if !u0.has_dirichlet_zeros() {
        return Err(Error::Domain("initial data must vanish on the boundary".into()));
    }
    if !cfg.allow_zero_initial && u0.values().iter().all(|v| *v == 0.0) {
        return Err(Error::Domain("initial data is identically zero (set allow_zero_initial to permit)".into()));
    }
    Ok(())
}

/// CFL-admissible step for `field` in physical time; infinite for a
/// constant field.
pub fn stable_dt(field: &Field, params: &Params, cfg: &EvolveConfig, scheme: &SchemeConfig) -> f64 {
    let mut st = Stepper::new(field.grid(), params, scheme, Mode::Physical, cfg.cfl_safety);
    let (m, c) = st.eval(field.values(), field.time());
    st.stable_dt(m, c)
}

/// One explicit Euler step of the physical equation with a given `dt`.
pub fn step_with_dt(field: &Field, params: &Params, scheme: &SchemeConfig, dt: f64) -> Result<Field> {
    let mut st = Stepper::new(field.grid(), params, scheme, Mode::Physical, 1.0);
    let (m, _) = st.eval(field.values(), field.time());
    st.check_monotone(m, field.time())?;
    let mut values = field.values().to_vec();
    for (v, r) in values.iter_mut().zip(&st.rate) {
        *v += dt * r;
    }
    finish_step(field.grid(), values, field.time() + dt)
}

fn finish_step(grid: &Grid, values: Vec<f64>, time: f64) -> Result<Field> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { time });
    }
    let mut f = Field::from_parts(*grid, values, time);
    f.enforce_dirichlet();
    Ok(f)
}

/// One CFL-limited step. A constant field is unconstrained and advances by
/// `record_every`. With `cfg.rescaled` the physical-prefactor rescaled
/// equation is stepped instead.
pub fn step(field: &Field, params: &Params, cfg: &EvolveConfig, scheme: &SchemeConfig) -> Result<(Field, f64)> {
    cfg.validate()?;
    let mode = if cfg.rescaled { Mode::Rescaled(RescaledSource::Physical) } else { Mode::Physical };
    let mut st = Stepper::new(field.grid(), params, scheme, mode, cfg.cfl_safety);
    let (m, c) = st.eval(field.values(), field.time());
    st.check_monotone(m, field.time())?;
    let mut dt = st.stable_dt(m, c);
    if !dt.is_finite() {
        dt = cfg.record_every;
    }
    if dt < cfg.dt_min {
        return Err(Error::StepTooSmall { time: field.time(), dt, max_slope: m });
    }
    let mut values = field.values().to_vec();
    for (v, r) in values.iter_mut().zip(&st.rate) {
        *v += dt * r;
    }
    Ok((finish_step(field.grid(), values, field.time() + dt)?, dt))
}

/// Integrates the physical equation (or the rescaled one when
/// `cfg.rescaled`) from `u0` to `cfg.t_end` or a terminal event.
pub fn evolve(u0: &Field, params: &Params, cfg: &EvolveConfig, scheme: &SchemeConfig) -> Result<Trajectory> {
    let mode = if cfg.rescaled { Mode::Rescaled(RescaledSource::Physical) } else { Mode::Physical };
    Ok(run(core::slice::from_ref(u0), params, cfg, scheme, mode)?.remove(0))
}

/// Integrates the rescaled system from `v0`, whose time stamp is read as `s`.
pub fn evolve_rescaled(v0: &Field, params: &Params, cfg: &EvolveConfig, scheme: &SchemeConfig) -> Result<Trajectory> {
    evolve_rescaled_with(v0, params, cfg, scheme, RescaledSource::Physical)
}

pub fn evolve_rescaled_with(
    v0: &Field,
    params: &Params,
    cfg: &EvolveConfig,
    scheme: &SchemeConfig,
    source: RescaledSource,
) -> Result<Trajectory> {
    Ok(run(core::slice::from_ref(v0), params, cfg, scheme, Mode::Rescaled(source))?.remove(0))
}

/// Evolves several initial data in lockstep with a shared step (the
/// minimum of the members' CFL steps), so that discrete comparison can be
/// checked snapshot by snapshot. A guard event in any member stops all.
pub fn evolve_ensemble(
    initial: &[Field],
    params: &Params,
    cfg: &EvolveConfig,
    scheme: &SchemeConfig,
) -> Result<Vec<Trajectory>> {
    let mode = if cfg.rescaled { Mode::Rescaled(RescaledSource::Physical) } else { Mode::Physical };
    run(initial, params, cfg, scheme, mode)
}

fn run(
    initial: &[Field],
    params: &Params,
    cfg: &EvolveConfig,
    scheme: &SchemeConfig,
    mode: Mode,
) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    let first = initial.first().ok_or(Error::InsufficientData { needed: 1, found: 0 })?;
    let grid = *first.grid();
    let t0 = first.time();
    for u in initial {
        u.same_grid(first)?;
        if u.time() != t0 {
            return Err(Error::Domain("ensemble members must share the start time".into()));
        }
        validate_initial(u, cfg)?;
    }
    if cfg.t_end < t0 {
        return Err(Error::Domain(format!("t_end = {} precedes the start time {t0}", cfg.t_end)));
    }
    let rescaled = matches!(mode, Mode::Rescaled(_));
    let mut steppers: Vec<Stepper> =
        initial.iter().map(|_| Stepper::new(&grid, params, scheme, mode, cfg.cfl_safety)).collect();
    let mut states: Vec<Vec<f64>> = initial.iter().map(|u| u.values().to_vec()).collect();
    let mut trajs: Vec<Trajectory> = initial
        .iter()
        .map(|u| Trajectory {
            params: *params,
            rescaled,
            snapshots: alloc::vec![u.clone()],
            events: Vec::new(),
            steps: 0,
        })
        .collect();
    let mut boundary_flagged = alloc::vec![false; initial.len()];
    let scale = cfg.t_end.abs().max(t0.abs()).max(1.0);
    let tiny = 1e-13 * scale;
    let mut records: u64 = 0;
    let mut next_rec = t0 + cfg.record_every;
    let mut t = t0;
    let mut slopes = alloc::vec![0.0; initial.len()];

    while t < cfg.t_end - tiny {
        let mut dt = f64::INFINITY;
        let mut guard = false;
        for (j, st) in steppers.iter_mut().enumerate() {
            let (m, c) = st.eval(&states[j], t);
            slopes[j] = m;
            if m > cfg.grad_cap {
                let k = st.argmax_face();
                trajs[j].events.push(Event {
                    time: t,
                    kind: EventKind::BlowupGuard,
                    magnitude: m,
                    node: k,
                    coord: 0.5 * (grid.node(k) + grid.node(k + 1)),
                });
                guard = true;
                continue;
            }
            st.check_monotone(m, t)?;
            dt = dt.min(st.stable_dt(m, c));
        }
        if guard {
            break;
        }
        if rescaled && steppers.iter().all(|st| st.rate_sup() < cfg.steady_tol) {
            for (j, st) in steppers.iter().enumerate() {
                trajs[j].events.push(Event {
                    time: t,
                    kind: EventKind::SteadyState,
                    magnitude: st.rate_sup(),
                    node: 0,
                    coord: grid.node(0),
                });
            }
            break;
        }
        if !dt.is_finite() {
            dt = cfg.record_every;
        }
        if dt < cfg.dt_min {
            let m = slopes.iter().fold(0.0_f64, |a, b| a.max(*b));
            return Err(Error::StepTooSmall { time: t, dt, max_slope: m });
        }
        let target = next_rec.min(cfg.t_end);
        let t_new = if t + dt >= target - tiny {
            dt = target - t;
            target
        } else {
            t + dt
        };
        for (j, st) in steppers.iter().enumerate() {
            let u = &mut states[j];
            for (v, r) in u.iter_mut().zip(&st.rate) {
                *v += dt * r;
            }
            for i in 0..u.len() {
                if grid.is_dirichlet(i) {
                    u[i] = 0.0;
                }
                if !u[i].is_finite() {
                    return Err(Error::NonFinite { time: t_new });
                }
            }
            trajs[j].steps += 1;
        }
        t = t_new;

        if let (Mode::Physical, Some(l1)) = (mode, cfg.boundary_lipschitz) {
            if t >= 1.0 {
                let limit = 2.0 * l1 * pow(1.0 + t, -params.decay_rate());
                for j in 0..states.len() {
                    if boundary_flagged[j] {
                        continue;
                    }
                    let f = Field::from_parts(grid, states[j].clone(), t);
                    let bq = f.boundary_quotient();
                    if bq > limit {
                        boundary_flagged[j] = true;
                        let last = grid.n() + 1;
                        trajs[j].events.push(Event {
                            time: t,
                            kind: EventKind::BoundaryLoss,
                            magnitude: bq,
                            node: last - 1,
                            coord: grid.node(last),
                        });
                    }
                }
            }
        }

        if t == next_rec || t >= cfg.t_end - tiny {
            for (j, u) in states.iter().enumerate() {
                trajs[j].snapshots.push(Field::from_parts(grid, u.clone(), t));
            }
            if t == next_rec {
                records += 1;
                next_rec = t0 + (records + 1) as f64 * cfg.record_every;
            }
        }
    }

    for (j, u) in states.into_iter().enumerate() {
        let tr = &mut trajs[j];
        if tr.final_state().time() < t {
            tr.snapshots.push(Field::from_parts(grid, u, t));
        }
    }
    Ok(trajs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridKind};

    fn setup(n: usize) -> (Grid, Params) {
        (make_grid(GridKind::Interval { a: -1.0, b: 1.0 }, n).unwrap(), Params::new(3.0, 2.0, 1).unwrap())
    }

    fn bump(g: Grid, amp: f64) -> Field {
        let mut f = Field::from_fn(g, 0.0, |x| amp * (1.0 - x * x)).unwrap();
        f.enforce_dirichlet();
        f
    }

    #[test]
    fn zero_field_is_a_fixed_point() {
        let (g, pr) = setup(10);
        let cfg = EvolveConfig { allow_zero_initial: true, ..Default::default() };
        let (next, dt) = step(&Field::zeros(g, 0.0), &pr, &cfg, &SchemeConfig::default()).unwrap();
        assert!(next.values().iter().all(|v| *v == 0.0));
        assert_eq!(dt, cfg.record_every);
        assert!(stable_dt(&Field::zeros(g, 0.0), &pr, &cfg, &SchemeConfig::default()).is_infinite());
    }

    #[test]
    fn zero_initial_rejected_by_default() {
        let (g, pr) = setup(10);
        let r = evolve(&Field::zeros(g, 0.0), &pr, &EvolveConfig::default(), &SchemeConfig::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn prefactor_is_one_for_giant() {
        let pr = Params::new(3.0, 2.0, 1).unwrap();
        for s in [-3.0, 0.0, 1.0, 50.0] {
            assert_eq!(source_prefactor(&pr, s), 1.0);
        }
        let sup = Params::new(3.0, 2.5, 1).unwrap();
        assert!((source_prefactor(&sup, 2.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rescaling_round_trip() {
        let (g, _) = setup(20);
        let u = bump(g, 0.7).with_time(7.3);
        let v = rescale_to_v(&u, 3.0).unwrap();
        assert!((v.time() - 7.3f64.ln()).abs() < 1e-15);
        let back = rescale_from_v(&v, 3.0).unwrap();
        assert!((back.time() - 7.3).abs() < 1e-12);
        assert!(back.distance(&u).unwrap() < 1e-14);
        let one = rescale_to_v(&u.clone().with_time(1.0), 3.0).unwrap();
        assert_eq!(one.time(), 0.0);
        assert_eq!(one.values(), u.values());
        assert!(rescale_to_v(&u.with_time(0.0), 3.0).is_err());
    }

    #[test]
    fn snapshots_strictly_increasing_and_boundary_exact() {
        let (g, pr) = setup(30);
        let cfg = EvolveConfig { t_end: 2.0, record_every: 0.25, ..Default::default() };
        let tr = evolve(&bump(g, 1.0), &pr, &cfg, &SchemeConfig::default()).unwrap();
        let ts = tr.times();
        assert_eq!(ts.len(), 9);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*ts.last().unwrap(), 2.0);
        for s in &tr.snapshots {
            assert!(s.has_dirichlet_zeros());
            assert!(s.values().iter().all(|v| *v >= 0.0));
        }
        assert!(tr.events.is_empty());
    }

    #[test]
    fn face_average_rejects_steep_data() {
        let (g, _) = setup(50);
        let pr = Params::new(3.0, 4.0, 1).unwrap();
        let scheme = SchemeConfig::with_hamiltonian(HamiltonianScheme::FaceAverage);
        let r = evolve(&bump(g, 50.0), &pr, &EvolveConfig::default(), &scheme);
        assert!(matches!(r, Err(Error::SchemeNotMonotone { .. })));
    }
}
