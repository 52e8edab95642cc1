//! Experiment logic shared by the commands and the acceptance suite. Pure
//! with respect to the file system; parallel loops keep input order.

use std::f64::consts::PI;

use fg_core::barriers::*;
use fg_core::diagnostics::{blowup_energy, fit_decay, profile_distance, BlowupReport, DecayFit};
use fg_core::evolve::{evolve, EventKind, EvolveConfig, Trajectory};
use fg_core::operators::{discrete_p_laplacian, hamiltonian_source, SchemeConfig};
use fg_core::profiles::*;
use fg_core::{Field, Grid, Params, Regime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{InitialKind, ProfileSource, RunConfig};
use crate::error::LabError;
use crate::io::read_initial;

/// `f` for `params.p()` on `grid` (the source exponent is `p − 1` whatever
/// `params.q()` is).
pub fn profile_f(cfg: &RunConfig, params: &Params, grid: &Grid) -> Result<Profile, LabError> {
    let giant = params.with_q(params.p() - 1.0)?;
    Ok(match cfg.profile_source {
        ProfileSource::Shooting => shoot_profile_f(&giant, grid, &ShootingConfig::default())?,
        ProfileSource::Marching => {
            march_profile(&giant, grid, ProfileKind::WithSource, &cfg.march_config(), &cfg.scheme())?
        }
    })
}

/// The limit profile for the regime: `f` when `q = p − 1`, `f₀` otherwise.
pub fn limit_profile(params: &Params, grid: &Grid) -> Result<Profile, LabError> {
    let sc = ShootingConfig::default();
    Ok(match params.regime() {
        Regime::Giant => shoot_profile_f(params, grid, &sc)?,
        _ => shoot_profile_f0(params, grid, &sc)?,
    })
}

fn sin2_bump(grid: &Grid, k: u32) -> Field {
    let len = grid.len();
    let values = (0..len)
        .map(|i| {
            if grid.is_dirichlet(i) {
                return 0.0;
            }
            let xi = if grid.is_radial() {
                (grid.radius() - grid.node(i)) / (2.0 * grid.radius())
            } else {
                i as f64 / (len - 1) as f64
            };
            (k as f64 * PI * xi).sin().powi(2)
        })
        .collect();
    Field::new(*grid, values, 0.0).expect("finite values")
}

/// Initial data described by the config, before noise.
pub fn initial_data(cfg: &RunConfig, params: &Params, grid: &Grid) -> Result<Field, LabError> {
    let c = cfg.amplitude;
    let mut u = match cfg.initial {
        InitialKind::ProfileMultiple => {
            let f = profile_f(cfg, params, grid)?;
            f.field().scaled(c / f.grad_sup_norm())
        }
        InitialKind::ProfileNormalized => {
            let f = profile_f(cfg, params, grid)?;
            f.field().scaled(c / f.sup_norm())
        }
        InitialKind::Bump => sin2_bump(grid, cfg.bump_k).scaled(c),
        InitialKind::Tent => {
            let values =
                (0..grid.len()).map(|i| c * (1.0 - grid.radial_distance(i) / grid.radius()).max(0.0)).collect();
            Field::new(*grid, values, 0.0).map_err(LabError::config)?
        }
        InitialKind::File => {
            let path = cfg.initial_file.as_deref().expect("checked by RunConfig");
            read_initial(path, grid)?.scaled(c)
        }
    };
    if cfg.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let values: Vec<f64> =
            u.values().iter().map(|v| v * (1.0 + cfg.noise * rng.random_range(-1.0..=1.0))).collect();
        u = Field::new(*grid, values, 0.0).map_err(LabError::config)?;
    }
    u.enforce_dirichlet();
    Ok(u)
}

// ---------------------------------------------------------------- barriers

/// How a catalog entry is deliberately broken for the sanity inversion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Corruption {
    Scale { constant: &'static str, factor: f64 },
    Set { constant: &'static str, value: f64 },
}

impl Corruption {
    pub fn apply(&self, spec: &BarrierSpec) -> Result<BarrierSpec, LabError> {
        Ok(match *self {
            Corruption::Scale { constant, factor } => {
                let v = spec.constant(constant).expect("catalog names existing constants");
                spec.with_constant(constant, v * factor)?
            }
            Corruption::Set { constant, value } => spec.with_constant(constant, value)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub kind: BarrierKind,
    /// Source exponent used for this kind.
    pub q: f64,
    pub corruption: Corruption,
}

/// `‖u₀‖_∞` assumed by the data-dependent constructors.
pub const CATALOG_U0_SUP: f64 = 1.0;
/// Validity time `t₀` of the boundary barriers.
pub const BOUNDARY_T0: f64 = 1.0;
pub const LONG_TIMES: [f64; 5] = [0.0, 0.1, 1.0, 10.0, 100.0];
pub const WINDOW_TIMES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// One entry per kind, each at an exponent inside its admissible range.
pub fn barrier_catalog(p: f64) -> Vec<CatalogEntry> {
    use BarrierKind::*;
    use Corruption::*;
    vec![
        CatalogEntry { kind: GlobalExp, q: p - 1.0, corruption: Scale { constant: "A", factor: 0.01 } },
        CatalogEntry { kind: GlobalPower, q: p - 0.5, corruption: Scale { constant: "delta", factor: 4.0 } },
        CatalogEntry { kind: BoundaryExp, q: p - 1.0, corruption: Set { constant: "A", value: 1.0 } },
        CatalogEntry { kind: BoundaryExpTransformed, q: p, corruption: Scale { constant: "A", factor: 0.1 } },
        CatalogEntry { kind: PowerOfProfile, q: p - 0.5, corruption: Scale { constant: "delta", factor: 4.0 } },
        CatalogEntry { kind: GiantMultiple, q: p + 1.0, corruption: Scale { constant: "G", factor: 0.25 } },
    ]
}

pub fn needs_profile(kind: BarrierKind) -> bool {
    matches!(kind, BarrierKind::PowerOfProfile | BarrierKind::GiantMultiple)
}

pub fn certification_times(kind: BarrierKind) -> &'static [f64] {
    match kind {
        BarrierKind::BoundaryExp | BarrierKind::BoundaryExpTransformed => &WINDOW_TIMES,
        _ => &LONG_TIMES,
    }
}

/// Builds the catalog barrier on `grid`; the profile kinds need the discrete
/// profile `f` of the same grid.
pub fn build_barrier(
    entry: &CatalogEntry,
    p: f64,
    grid: &Grid,
    profile: Option<&Profile>,
) -> fg_core::Result<BarrierSpec> {
    let params = Params::new(p, entry.q, grid.dim())?;
    let dom = Domain::of(grid);
    let u0 = CATALOG_U0_SUP;
    let missing = || fg_core::Error::PreconditionFailed("profile barrier without a profile".into());
    match entry.kind {
        BarrierKind::GlobalExp => make_global_exp(&params, &dom, u0),
        BarrierKind::GlobalPower => make_global_power(&params, &dom, u0),
        BarrierKind::BoundaryExp => {
            let c1 = make_global_exp(&params, &dom, u0)?.decay_constant().expect("global kind");
            make_boundary_barrier(&params, &dom, grid.node(grid.len() - 1), BOUNDARY_T0, c1, u0)
        }
        BarrierKind::BoundaryExpTransformed => {
            let c1 = make_global_power(&params, &dom, u0)?.decay_constant().expect("global kind");
            make_boundary_barrier(&params, &dom, grid.node(grid.len() - 1), BOUNDARY_T0, c1, u0)
        }
        BarrierKind::PowerOfProfile => make_power_of_profile(&params, profile.ok_or_else(missing)?, 1.0, 1.0),
        BarrierKind::GiantMultiple => make_giant_multiple(&params, profile.ok_or_else(missing)?),
    }
}

/// Discrete `f` (rescaled-flow steady state with the run's scheme), the
/// profile that makes the profile barriers exact discrete supersolutions.
pub fn discrete_profile(cfg: &RunConfig, p: f64, grid: &Grid) -> Result<Profile, LabError> {
    let params = Params::new(p, p - 1.0, grid.dim())?;
    Ok(march_profile(&params, grid, ProfileKind::WithSource, &cfg.march_config(), &cfg.scheme())?)
}

#[derive(Clone, Debug, Serialize)]
pub struct KindVerification {
    pub entry: CatalogEntry,
    pub calibration: Calibration,
    pub reports: Vec<CertificationReport>,
    pub corrupted: CertificationReport,
    /// The validator's verdict on the corrupted spec.
    pub corrupted_validates: bool,
    pub domination: DominationReport,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkippedKind {
    pub kind: BarrierKind,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogVerification {
    pub p: f64,
    pub ns: Vec<usize>,
    pub kinds: Vec<KindVerification>,
    pub skipped: Vec<SkippedKind>,
    pub passed: bool,
}

/// Initial data dominated by the catalog barrier of `entry`.
fn domination_data(entry: &CatalogEntry, grid: &Grid, profile: Option<&Profile>) -> Field {
    match (entry.kind, profile) {
        (BarrierKind::PowerOfProfile, Some(f)) => f.field().clone(),
        (BarrierKind::GiantMultiple, Some(f)) => f.field().scaled(0.9 / f.grad_sup_norm()),
        _ => sin2_bump(grid, 1).scaled(CATALOG_U0_SUP),
    }
}

fn verify_kind(
    cfg: &RunConfig,
    entry: &CatalogEntry,
    grids: &[Grid],
    profiles: &[Option<Profile>],
) -> Result<KindVerification, LabError> {
    let sc = cfg.scheme();
    let times = certification_times(entry.kind);
    let at = |g: &Grid| grids.iter().position(|x| x == g).expect("grid from the list");
    let build = |g: &Grid| build_barrier(entry, cfg.p, g, profiles[at(g)].as_ref());
    let calibration = calibrate(grids, build, times, &sc)?;
    let mut reports = Vec::with_capacity(grids.len());
    for g in grids {
        reports.push(certify_supersolution(&build(g)?, g, times, &sc, calibration.c_cal)?);
    }
    let mid = grids.len() / 2;
    let spec = build(&grids[mid])?;
    let bad = entry.corruption.apply(&spec)?;
    let corrupted = certify_supersolution(&bad, &grids[mid], times, &sc, calibration.c_cal)?;
    let corrupted_validates = validate(&bad).is_ok();

    let params = *spec.params();
    let u0 = domination_data(entry, &grids[mid], profiles[mid].as_ref());
    let t_end = if spec.time_window().is_finite() { spec.time_window() } else { 10.0 };
    let ev = EvolveConfig { t_end, record_every: t_end / 20.0, ..cfg.evolve_config() };
    let ev = EvolveConfig { rescaled: false, boundary_lipschitz: None, ..ev };
    let traj = evolve(&u0, &params, &ev, &sc)?;
    let domination = check_domination(&traj, &spec)?;

    let passed = calibration.stable
        && reports.iter().all(|r| r.passed)
        && !corrupted.passed
        && !corrupted_validates
        && domination.passed();
    Ok(KindVerification { entry: *entry, calibration, reports, corrupted, corrupted_validates, domination, passed })
}

/// Certification, calibration, corrupted-case inversion and a domination run
/// for every catalog kind the configured domain supports.
pub fn verify_catalog(cfg: &RunConfig) -> Result<CatalogVerification, LabError> {
    let grids: Vec<Grid> = cfg.ns.iter().map(|&n| cfg.grid_with(n)).collect::<Result<_, _>>()?;
    let catalog = barrier_catalog(cfg.p);
    let radial = grids[0].is_radial();
    let profiles: Vec<Option<Profile>> =
        grids.par_iter().map(|g| discrete_profile(cfg, cfg.p, g).map(Some)).collect::<Result<_, _>>()?;
    let (run, skip): (Vec<_>, Vec<_>) = catalog.into_iter().partition(|e| !radial || needs_profile(e.kind));
    let kinds: Vec<KindVerification> =
        run.par_iter().map(|e| verify_kind(cfg, e, &grids, &profiles)).collect::<Result<_, _>>()?;
    let skipped = skip
        .into_iter()
        .map(|e| SkippedKind { kind: e.kind, reason: "not radially symmetric; certified on intervals only".into() })
        .collect();
    let passed = kinds.iter().all(|k| k.passed);
    Ok(CatalogVerification { p: cfg.p, ns: cfg.ns.clone(), kinds, skipped, passed })
}

// ------------------------------------------------------------- convergence

#[derive(Clone, Debug, Serialize)]
pub struct OrderRow {
    pub quantity: String,
    pub n: Vec<usize>,
    pub h: Vec<f64>,
    pub error: Vec<f64>,
    /// `ln(e_{k−1}/e_k)/ln(h_{k−1}/h_k)`.
    pub orders: Vec<f64>,
}

fn order_row(quantity: &str, grids: &[Grid], error: Vec<f64>) -> OrderRow {
    let h: Vec<f64> = grids.iter().map(Grid::h).collect();
    let orders = (1..error.len()).map(|k| (error[k - 1] / error[k]).ln() / (h[k - 1] / h[k]).ln()).collect();
    OrderRow { quantity: quantity.into(), n: grids.iter().map(Grid::n).collect(), h, error, orders }
}

/// Smooth test function and its exact `Δ_p` and `|∇u|^q` at node `i`.
fn smooth_case(grid: &Grid, p: f64, q: f64, i: usize) -> (f64, f64, f64) {
    let r = grid.radius();
    if grid.is_radial() {
        let k = PI / (2.0 * r);
        let x = grid.node(i);
        let (u, du, d2u) = ((k * x).cos(), -k * (k * x).sin(), -k * k * (k * x).cos());
        let n = grid.dim() as f64;
        let w = du.abs().powf(p - 2.0) * du;
        let dw = (p - 1.0) * du.abs().powf(p - 2.0) * d2u;
        let lap = if x == 0.0 { 0.0 } else { dw + (n - 1.0) * w / x };
        (u, lap, du.abs().powf(q))
    } else {
        let a = grid.node(0);
        let k = PI / (2.0 * r);
        let x = grid.node(i) - a;
        let (u, du, d2u) = ((k * x).sin(), k * (k * x).cos(), -k * k * (k * x).sin());
        let lap = (p - 1.0) * du.abs().powf(p - 2.0) * d2u;
        (u, lap, du.abs().powf(q))
    }
}

fn operator_errors(grid: &Grid, params: &Params, sc: &SchemeConfig) -> fg_core::Result<(f64, f64)> {
    let (p, q) = (params.p(), params.q());
    let values: Vec<f64> = (0..grid.len()).map(|i| smooth_case(grid, p, q, i).0).collect();
    let u = Field::new(*grid, values, 0.0)?;
    let lap = discrete_p_laplacian(&u, p)?;
    let ham = hamiltonian_source(&u, q, sc)?;
    let (mut el, mut eh) = (0.0_f64, 0.0_f64);
    for i in grid.active_range() {
        let (_, l, h) = smooth_case(grid, p, q, i);
        el = el.max((lap.values()[i] - l).abs());
        eh = eh.max((ham.values()[i] - h).abs());
    }
    Ok((el, eh))
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRow {
    pub n: usize,
    pub final_time: f64,
    pub steps: u64,
    pub events: Vec<fg_core::evolve::Event>,
    pub final_sup_norm: f64,
    /// `‖t^{1/(p−2)}u − profile‖_∞/‖profile‖_∞` at the final snapshot.
    pub relative_profile_distance: f64,
    pub decay_fit: Option<DecayFit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub operators: Vec<OrderRow>,
    pub runs: Vec<RunRow>,
    /// Successive differences of the rescaled final states (interpolated to
    /// the coarser grid) and their orders.
    pub solution: OrderRow,
}

/// The configured run repeated on every `ns` grid, plus operator
/// consistency orders on a smooth field.
pub fn convergence_study(cfg: &RunConfig) -> Result<ConvergenceStudy, LabError> {
    let params = cfg.params()?;
    let sc = cfg.scheme();
    let grids: Vec<Grid> = cfg.ns.iter().map(|&n| cfg.grid_with(n)).collect::<Result<_, _>>()?;
    let mut lap_err = Vec::new();
    let mut ham_err = Vec::new();
    for g in &grids {
        let (l, h) = operator_errors(g, &params, &sc)?;
        lap_err.push(l);
        ham_err.push(h);
    }
    let mut operators = vec![order_row("p_laplacian", &grids, lap_err), order_row("hamiltonian", &grids, ham_err)];
    if params.regime() == Regime::Giant {
        let res: Vec<f64> = grids
            .iter()
            .map(|g| {
                let f = shoot_profile_f(&params, g, &ShootingConfig::default())?;
                Ok(giant_residual(&f, &params, 1.0, &sc)?.sup_norm())
            })
            .collect::<Result<_, LabError>>()?;
        operators.push(order_row("friendly_giant_residual", &grids, res));
    }

    let ev = cfg.evolve_config();
    let runs: Vec<(RunRow, Field)> = grids
        .par_iter()
        .map(|g| -> Result<(RunRow, Field), LabError> {
            let u0 = initial_data(cfg, &params, g)?;
            let traj = evolve(&u0, &params, &ev, &sc)?;
            let prof = limit_profile(&params, g)?;
            let last = traj.final_state();
            let dist = if traj.rescaled || last.time() > 0.0 {
                profile_distance(&traj, &prof)?.last().map_or(f64::NAN, |d| d.1) / prof.sup_norm()
            } else {
                f64::NAN
            };
            let decay_fit = if traj.rescaled { None } else { fit_decay(&traj, cfg.fit_window).ok() };
            let scaled = if traj.rescaled || last.time() == 0.0 {
                last.clone()
            } else {
                last.scaled(last.time().powf(params.decay_rate()))
            };
            let row = RunRow {
                n: g.n(),
                final_time: last.time(),
                steps: traj.steps,
                events: traj.events.clone(),
                final_sup_norm: last.sup_norm(),
                relative_profile_distance: dist,
                decay_fit,
            };
            Ok((row, scaled))
        })
        .collect::<Result<_, _>>()?;
    let diffs: Vec<f64> = (1..runs.len())
        .map(|k| {
            let (coarse, fine) = (&runs[k - 1].1, &runs[k].1);
            let g = coarse.grid();
            (0..g.len()).map(|i| (coarse.values()[i] - fine.interpolate(g.node(i))).abs()).fold(0.0, f64::max)
        })
        .collect();
    let solution = order_row("rescaled_final_state_difference", &grids[1..], diffs);
    Ok(ConvergenceStudy { operators, runs: runs.into_iter().map(|r| r.0).collect(), solution })
}

// ------------------------------------------------------------------ blowup

#[derive(Clone, Debug, Serialize)]
pub struct AmplitudeOutcome {
    pub amplitude: f64,
    pub initial_sup_norm: f64,
    pub blowup: bool,
    pub guard_time: Option<f64>,
    /// Arg-max coordinate of the guard event.
    pub guard_coord: Option<f64>,
    pub final_time: f64,
    pub steps: u64,
    /// Energy diagnostics; for blowup runs from a rerun recorded at `t*/200`.
    pub energy: BlowupReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowupScan {
    pub amplitudes: Vec<AmplitudeOutcome>,
    /// Smallest scanned amplitude that hit the guard.
    pub transition_amplitude: Option<f64>,
    pub profile_grad_sup_norm: f64,
}

pub const BLOWUP_RECORD_SAMPLES: f64 = 200.0;

/// Runs `c·f/‖∇f‖_∞` to `t_end` and, if the guard fires at `t*`, reruns
/// with snapshots every `t*/200` for the energy diagnostics.
pub fn blowup_run(
    cfg: &RunConfig,
    params: &Params,
    f: &Profile,
    c: f64,
) -> Result<(AmplitudeOutcome, Trajectory), LabError> {
    let sc = cfg.scheme();
    let u0 = f.field().scaled(c / f.grad_sup_norm());
    let ev = EvolveConfig { rescaled: false, ..cfg.evolve_config() };
    let first = evolve(&u0, params, &ev, &sc)?;
    let guard = first.first_event(EventKind::BlowupGuard).copied();
    let traj = match guard {
        Some(e) => evolve(&u0, params, &EvolveConfig { record_every: e.time / BLOWUP_RECORD_SAMPLES, ..ev }, &sc)?,
        None => first,
    };
    let energy = blowup_energy(&traj, params)?;
    let guard = traj.first_event(EventKind::BlowupGuard).copied();
    Ok((
        AmplitudeOutcome {
            amplitude: c,
            initial_sup_norm: u0.sup_norm(),
            blowup: guard.is_some(),
            guard_time: guard.map(|e| e.time),
            guard_coord: guard.map(|e| e.coord),
            final_time: traj.final_state().time(),
            steps: traj.steps,
            energy,
        },
        traj,
    ))
}

pub fn blowup_scan(cfg: &RunConfig) -> Result<(BlowupScan, Vec<Trajectory>), LabError> {
    let params = cfg.params()?;
    if params.regime() != Regime::Super {
        return Err(LabError::Config { kind: "RegimeError", message: "blowup-scan needs q > p".into() });
    }
    let grid = cfg.grid()?;
    let f = shoot_profile_f(&params, &grid, &ShootingConfig::default())?;
    let out: Vec<(AmplitudeOutcome, Trajectory)> =
        cfg.amplitudes.par_iter().map(|&c| blowup_run(cfg, &params, &f, c)).collect::<Result<_, _>>()?;
    let transition = out
        .iter()
        .filter(|o| o.0.blowup)
        .map(|o| o.0.amplitude)
        .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.min(c))));
    let (amplitudes, trajs) = out.into_iter().unzip();
    Ok((BlowupScan { amplitudes, transition_amplitude: transition, profile_grad_sup_norm: f.grad_sup_norm() }, trajs))
}
