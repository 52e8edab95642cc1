//! The five subcommands. Each writes its artifacts and a manifest into the
//! output directory; a failed verification is reported after the files are
//! written.

use std::path::Path;

use fg_core::evolve::evolve;
use fg_core::profiles::*;
use fg_core::Params;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::LabError;
use crate::experiments::{self, ConvergenceStudy};
use crate::io::{ArtifactEntry, Artifacts, Snapshot};

/// Below this many interior points the `profile` command skips the
/// shoot/march cross-validation and says so in the header.
pub const CROSSVAL_MIN_N: usize = 50;

/// Files written by a command and, for exit status 4, what did not pass.
#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<ArtifactEntry>,
    pub failure: Option<String>,
}

impl Outcome {
    pub fn into_result(self) -> Result<Vec<ArtifactEntry>, LabError> {
        match self.failure {
            Some(msg) => Err(LabError::Verification(msg)),
            None => Ok(self.artifacts),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a, R: Serialize> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a RunConfig,
    result: R,
}

fn finish<R: Serialize>(
    art: Artifacts,
    command: &str,
    cfg: &RunConfig,
    result: R,
    failure: Option<String>,
) -> Result<Outcome, LabError> {
    let manifest = Manifest { command, version: env!("CARGO_PKG_VERSION"), seed: cfg.seed, config: cfg, result };
    Ok(Outcome { artifacts: art.finish(&manifest)?, failure })
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome, LabError> {
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let scheme = cfg.scheme();
    let ev = cfg.evolve_config();
    let u0 = experiments::initial_data(cfg, &params, &grid)?;
    let traj = evolve(&u0, &params, &ev, &scheme)?;

    let mut art = Artifacts::create(out, &cfg.hash())?;
    art.json("initial.json", &Snapshot::of(&u0, &params))?;
    art.json("final.json", &Snapshot::of(traj.final_state(), &params))?;
    art.trajectory_csv("trajectory.csv", &traj)?;
    art.summary_csv("summary.csv", &traj)?;

    #[derive(Serialize)]
    struct Result<'a> {
        params: Params,
        grid: fg_core::Grid,
        regime: fg_core::Regime,
        scheme: fg_core::operators::SchemeConfig,
        evolve: fg_core::evolve::EvolveConfig,
        steps: u64,
        snapshots: usize,
        final_time: f64,
        final_sup_norm: f64,
        events: &'a [fg_core::evolve::Event],
    }
    let result = Result {
        params,
        grid,
        regime: params.regime(),
        scheme,
        evolve: ev,
        steps: traj.steps,
        snapshots: traj.snapshots.len(),
        final_time: traj.final_state().time(),
        final_sup_norm: traj.final_state().sup_norm(),
        events: &traj.events,
    };
    finish(art, "simulate", cfg, result, None)
}

#[derive(Serialize)]
struct ProfileHeader {
    p: f64,
    kind: ProfileKind,
    method: ProfileMethod,
    domain: fg_core::Grid,
    sup_norm: f64,
    grad_sup_norm: f64,
    lipschitz_const: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

impl ProfileHeader {
    fn of(f: &Profile, warning: Option<String>) -> Self {
        Self {
            p: f.p(),
            kind: f.kind(),
            method: f.method(),
            domain: *f.grid(),
            sup_norm: f.sup_norm(),
            grad_sup_norm: f.grad_sup_norm(),
            lipschitz_const: f.lipschitz_const(),
            warning,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossValidation {
    pub kind: ProfileKind,
    /// `‖shot − marched‖_∞/‖shot‖_∞`.
    pub relative_difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Shoots `f` and `f₀` and cross-validates both against marching.
pub fn profile(cfg: &RunConfig, out: &Path) -> Result<Outcome, LabError> {
    let grid = cfg.grid()?;
    let params = Params::new(cfg.p, cfg.p - 1.0, grid.dim()).map_err(LabError::config)?;
    let sc = ShootingConfig::default();
    let f = shoot_profile_f(&params, &grid, &sc)?;
    let f0 = shoot_profile_f0(&params, &grid, &sc)?;

    let coarse = grid.n() < CROSSVAL_MIN_N;
    let warning = coarse
        .then(|| format!("coarse grid (n = {} < {CROSSVAL_MIN_N}): shoot/march cross-validation skipped", grid.n()));
    let mut checks = Vec::new();
    if !coarse {
        let mc = cfg.march_config();
        let ms = marching_scheme();
        let (mf, mf0) = rayon::join(
            || march_profile(&params, &grid, ProfileKind::WithSource, &mc, &ms),
            || march_profile(&params, &grid, ProfileKind::Pure, &mc, &ms),
        );
        for (shot, marched) in [(&f, mf?), (&f0, mf0?)] {
            let marched = marched.perturbed(cfg.profile_offset);
            let rel = shot.field().distance(marched.field())? / shot.sup_norm();
            checks.push(CrossValidation {
                kind: shot.kind(),
                relative_difference: rel,
                tolerance: cfg.crossval_tol,
                passed: rel <= cfg.crossval_tol,
            });
        }
    }

    let mut art = Artifacts::create(out, &cfg.hash())?;
    art.field_csv("profile_f.csv", f.field())?;
    art.field_csv("profile_f0.csv", f0.field())?;
    art.json("profile_f.json", &ProfileHeader::of(&f, warning.clone()))?;
    art.json("profile_f0.json", &ProfileHeader::of(&f0, warning.clone()))?;
    let failure = checks.iter().find(|c| !c.passed).map(|c| {
        format!(
            "{:?} profile: shoot/march difference {:.3e} exceeds {:.1e}",
            c.kind, c.relative_difference, c.tolerance
        )
    });
    #[derive(Serialize)]
    struct Result {
        cross_validation: Vec<CrossValidation>,
        warning: Option<String>,
    }
    finish(art, "profile", cfg, Result { cross_validation: checks, warning }, failure)
}

pub fn verify_barriers(cfg: &RunConfig, out: &Path) -> Result<Outcome, LabError> {
    let v = experiments::verify_catalog(cfg)?;
    let mut art = Artifacts::create(out, &cfg.hash())?;
    art.json("barriers.json", &v)?;
    let rows = v.kinds.iter().flat_map(|k| {
        k.reports.iter().map(move |r| {
            (
                format!("{:?}", r.kind),
                k.entry.q,
                r.n,
                r.h,
                r.min_residual,
                r.scale,
                r.c_cal,
                r.violation_count,
                r.passed,
            )
        })
    });
    art.csv(
        "certification.csv",
        &["kind", "q", "n", "h", "min_residual", "scale", "c_cal", "violations", "passed"],
        rows,
    )?;
    let failed: Vec<String> = v.kinds.iter().filter(|k| !k.passed).map(|k| format!("{:?}", k.entry.kind)).collect();
    let failure = (!failed.is_empty()).then(|| format!("barrier verification failed for {}", failed.join(", ")));
    #[derive(Serialize)]
    struct Result {
        passed: bool,
        kinds: Vec<(fg_core::barriers::BarrierKind, bool)>,
    }
    let result = Result { passed: v.passed, kinds: v.kinds.iter().map(|k| (k.entry.kind, k.passed)).collect() };
    finish(art, "verify-barriers", cfg, result, failure)
}

pub fn convergence_study(cfg: &RunConfig, out: &Path) -> Result<Outcome, LabError> {
    let study: ConvergenceStudy = experiments::convergence_study(cfg)?;
    let mut art = Artifacts::create(out, &cfg.hash())?;
    art.json("convergence.json", &study)?;
    let rows = study.operators.iter().chain([&study.solution]).flat_map(|row| {
        (0..row.n.len()).map(move |k| {
            let order = if k == 0 { None } else { Some(row.orders[k - 1]) };
            (row.quantity.clone(), row.n[k], row.h[k], row.error[k], order)
        })
    });
    art.csv("orders.csv", &["quantity", "n", "h", "error", "order"], rows)?;
    #[derive(Serialize)]
    struct Result {
        min_orders: Vec<(String, f64)>,
    }
    let min_orders = study
        .operators
        .iter()
        .chain([&study.solution])
        .map(|r| (r.quantity.clone(), r.orders.iter().copied().fold(f64::INFINITY, f64::min)))
        .collect();
    finish(art, "convergence-study", cfg, Result { min_orders }, None)
}

pub fn blowup_scan(cfg: &RunConfig, out: &Path) -> Result<Outcome, LabError> {
    let (scan, _) = experiments::blowup_scan(cfg)?;
    let mut art = Artifacts::create(out, &cfg.hash())?;
    art.json("blowup.json", &scan)?;
    let rows = scan
        .amplitudes
        .iter()
        .map(|o| (o.amplitude, o.blowup, o.guard_time, o.energy.fraction_passing, o.energy.ode_blowup_time));
    art.csv("scan.csv", &["amplitude", "blowup", "guard_time", "fraction_passing", "ode_blowup_time"], rows)?;
    for (k, o) in scan.amplitudes.iter().enumerate() {
        let rows = o.energy.energy_series.iter().zip(&o.energy.lower_bound_check).map(|(&(t, e), &ok)| (t, e, ok));
        art.csv(&format!("energy_{k}.csv"), &["time", "energy", "lower_bound_holds"], rows)?;
    }
    #[derive(Serialize)]
    struct Result {
        transition_amplitude: Option<f64>,
    }
    finish(art, "blowup-scan", cfg, Result { transition_amplitude: scan.transition_amplitude }, None)
}
