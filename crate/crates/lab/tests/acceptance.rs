//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary so the lines always reach the console; exits nonzero when a
//! criterion outside `KNOWN_RED` fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use fg_core::barriers::*;
use fg_core::diagnostics::{fit_decay, profile_distance};
use fg_core::evolve::{evolve, evolve_ensemble, EventKind, EvolveConfig, Trajectory};
use fg_core::operators::{discrete_p_laplacian, SchemeConfig};
use fg_core::profiles::*;
use fg_core::{Field, Grid, Params, Regime};
use fg_lab::experiments::{self, discrete_profile};
use fg_lab::RunConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const N: usize = 200;
const T_END: f64 = 1000.0;
const RECORD: f64 = 10.0;
const FIT_WINDOW: (f64, f64) = (100.0, 1000.0);

const CROSSVAL_TOL: f64 = 1e-3;
const DISTANCE_TOL: f64 = 0.05;
const INDEPENDENCE_TOL: f64 = 0.01;
const EXPONENT_TOL: f64 = 0.05;
const ENERGY_FRACTION: f64 = 0.9;
const BLOWUP_HORIZON: f64 = 10.0;
/// The gradient guard used for blowup runs; see the README.
const BLOWUP_GRAD_CAP: f64 = 50.0;
const PAIRS_PER_REGIME: usize = 100;
/// Covariance error relative to the size of the discrete p-Laplacian term,
/// the largest summand that cancels in the residual. Rounding in `powf`
/// and the `1/h` flux divergence leaves about 1e-11; a wrong scaling
/// exponent would show up at order one.
const COVARIANCE_TOL: f64 = 1e-10;

/// Criteria whose failure is analysed and expected; they still print FAIL.
const KNOWN_RED: &[u32] = &[10];

struct Line {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn base_cfg(p: f64, q: f64) -> RunConfig {
    RunConfig { p, q, n: N, ..RunConfig::default() }
}

fn interval(n: usize) -> Grid {
    base_cfg(3.0, 2.0).grid_with(n).unwrap()
}

fn shoot_f(p: f64, grid: &Grid) -> Profile {
    shoot_profile_f(&Params::new(p, p - 1.0, 1).unwrap(), grid, &ShootingConfig::default()).unwrap()
}

fn bump(grid: &Grid) -> Field {
    let cfg = RunConfig { n: grid.n(), ..RunConfig::default() };
    let params = cfg.params().unwrap();
    experiments::initial_data(&cfg, &params, grid).unwrap()
}

fn physical(t_end: f64, record_every: f64) -> EvolveConfig {
    EvolveConfig { t_end, record_every, ..EvolveConfig::default() }
}

// ------------------------------------------------------------ criterion 1

fn criterion_1() -> Line {
    let grid = interval(N);
    let mut worst: f64 = 0.0;
    let mut ordered = true;
    let mut notes = Vec::new();
    let rows: Vec<_> = [2.5, 3.0, 4.0]
        .par_iter()
        .map(|&p| {
            let params = Params::new(p, p - 1.0, 1).unwrap();
            let sc = ShootingConfig::default();
            let mc = base_cfg(p, p - 1.0).march_config();
            let ms = marching_scheme();
            let f = shoot_profile_f(&params, &grid, &sc).unwrap();
            let f0 = shoot_profile_f0(&params, &grid, &sc).unwrap();
            let mf = march_profile(&params, &grid, ProfileKind::WithSource, &mc, &ms).unwrap();
            let mf0 = march_profile(&params, &grid, ProfileKind::Pure, &mc, &ms).unwrap();
            let rf = f.field().distance(mf.field()).unwrap() / f.sup_norm();
            let rf0 = f0.field().distance(mf0.field()).unwrap() / f0.sup_norm();
            let above = grid.active_range().all(|i| f.field().values()[i] > f0.field().values()[i]);
            (p, rf, rf0, above)
        })
        .collect();
    for (p, rf, rf0, above) in rows {
        worst = worst.max(rf).max(rf0);
        ordered &= above;
        notes.push(format!("p={p}: f {rf:.1e}, f0 {rf0:.1e}"));
    }
    Line {
        id: 1,
        title: "profile cross-validation",
        pass: worst < CROSSVAL_TOL && ordered,
        detail: format!("{}; f > f0 inside: {ordered} (tol {CROSSVAL_TOL:.0e})", notes.join("; ")),
    }
}

// ------------------------------------------------------- criteria 2, 3, 5, 8

struct LongRun {
    label: &'static str,
    traj: Trajectory,
    distance: f64,
    exponent: f64,
}

struct Case {
    p: f64,
    q: f64,
    runs: Vec<LongRun>,
    /// `‖v₁ − v₂‖_∞/‖profile‖_∞` at the final time.
    independence: f64,
    l1: f64,
    boundary_ratio: f64,
    lip_early: f64,
    lip_late: f64,
    monitor_fired: bool,
}

/// `L₁` of the catalog boundary barrier for data with sup `u0_sup`.
fn catalog_l1(params: &Params, grid: &Grid, u0_sup: f64) -> f64 {
    let dom = Domain::of(grid);
    let global = if params.regime() == Regime::Giant {
        make_global_exp(params, &dom, u0_sup)
    } else {
        make_global_power(params, &dom, u0_sup)
    }
    .unwrap();
    let c1 = global.decay_constant().unwrap();
    make_boundary_barrier(params, &dom, grid.node(grid.len() - 1), 1.0, c1, u0_sup)
        .unwrap()
        .boundary_lipschitz()
        .unwrap()
}

fn long_case(p: f64, q: f64) -> Case {
    let grid = interval(N);
    let params = Params::new(p, q, 1).unwrap();
    let a = params.decay_rate();
    let prof = experiments::limit_profile(&params, &grid).unwrap();
    let f = shoot_f(p, &grid);
    let data = [("0.5 f/|f|", f.field().scaled(0.5 / f.sup_norm())), ("sin^2 bump", bump(&grid))];
    let l1 = data.iter().map(|(_, u)| catalog_l1(&params, &grid, u.sup_norm())).fold(f64::INFINITY, f64::min);
    let ev = EvolveConfig { boundary_lipschitz: Some(l1), ..physical(T_END, RECORD) };
    let runs: Vec<LongRun> = data
        .par_iter()
        .map(|(label, u0)| {
            let traj = evolve(u0, &params, &ev, &SchemeConfig::default()).unwrap();
            let distance = profile_distance(&traj, &prof).unwrap().last().unwrap().1 / prof.sup_norm();
            let exponent = fit_decay(&traj, FIT_WINDOW).unwrap().exponent;
            LongRun { label, traj, distance, exponent }
        })
        .collect();
    let rescaled = |t: &Trajectory| {
        let s = t.final_state();
        s.scaled(s.time().powf(a))
    };
    let independence = rescaled(&runs[0].traj).distance(&rescaled(&runs[1].traj)).unwrap() / prof.sup_norm();
    let (mut boundary_ratio, mut lip_early, mut lip_late) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut monitor_fired = false;
    for r in &runs {
        monitor_fired |= r.traj.first_event(EventKind::BoundaryLoss).is_some();
        for s in r.traj.snapshots.iter().filter(|s| s.time() >= 1.0) {
            let w = (1.0 + s.time()).powf(a);
            boundary_ratio = boundary_ratio.max(s.boundary_quotient() * w / l1);
            let lip = s.lipschitz_estimate() * w;
            if s.time() <= 10.0 {
                lip_early = lip_early.max(lip);
            } else {
                lip_late = lip_late.max(lip);
            }
        }
    }
    Case { p, q, runs, independence, l1, boundary_ratio, lip_early, lip_late, monitor_fired }
}

fn convergence_line(id: u32, title: &'static str, cases: &[&Case]) -> Line {
    let mut pass = true;
    let mut notes = Vec::new();
    for c in cases {
        let d = c.runs.iter().map(|r| r.distance).fold(0.0, f64::max);
        pass &= d < DISTANCE_TOL && c.independence < INDEPENDENCE_TOL;
        notes.push(format!("(p,q)=({},{}): distance {d:.1e}, independence {:.1e}", c.p, c.q, c.independence));
    }
    Line { id, title, pass, detail: format!("{} (tol {DISTANCE_TOL}, {INDEPENDENCE_TOL})", notes.join("; ")) }
}

// ------------------------------------------------------------ criterion 4

struct SmallData {
    traj: Trajectory,
    distance: f64,
    exponent: f64,
    domination: DominationReport,
}

fn small_data_run() -> SmallData {
    let grid = interval(N);
    let params = Params::new(3.0, 4.0, 1).unwrap();
    let fh = discrete_profile(&base_cfg(3.0, 4.0), 3.0, &grid).unwrap();
    let u0 = fh.field().scaled(0.9 / fh.grad_sup_norm());
    let traj = evolve(&u0, &params, &physical(T_END, RECORD), &SchemeConfig::default()).unwrap();
    let f0 = experiments::limit_profile(&params, &grid).unwrap();
    let distance = profile_distance(&traj, &f0).unwrap().last().unwrap().1 / f0.sup_norm();
    let exponent = fit_decay(&traj, FIT_WINDOW).unwrap().exponent;
    let spec = make_giant_multiple(&params, &fh).unwrap();
    let domination = check_domination(&traj, &spec).unwrap();
    SmallData { traj, distance, exponent, domination }
}

fn criterion_4(s: &SmallData) -> Line {
    let guard = s.traj.terminal_event().is_some();
    let reached = s.traj.final_state().time() >= T_END;
    Line {
        id: 4,
        title: "small-data super regime",
        pass: reached && !guard && s.distance < DISTANCE_TOL && s.domination.violation_count == 0,
        detail: format!(
            "(3,4) 0.9 f/|grad f|: reached t={} , distance {:.1e}, domination violations {} of {} nodes",
            s.traj.final_state().time(),
            s.distance,
            s.domination.violation_count,
            s.domination.nodes_checked
        ),
    }
}

fn criterion_5(cases: &[Case], small: &SmallData) -> Line {
    let mut pass = true;
    let mut notes = Vec::new();
    for c in cases {
        let want = -1.0 / (c.p - 2.0);
        for r in &c.runs {
            pass &= ((r.exponent - want) / want).abs() <= EXPONENT_TOL;
            notes.push(format!("({},{}) {}: {:.4}", c.p, c.q, r.label, r.exponent));
        }
    }
    pass &= (small.exponent + 1.0).abs() <= EXPONENT_TOL;
    notes.push(format!("(3,4): {:.4}", small.exponent));
    Line { id: 5, title: "decay exponent", pass, detail: format!("{} (expect -1 ± 5%)", notes.join("; ")) }
}

fn criterion_8(cases: &[Case]) -> Line {
    let mut pass = true;
    let mut notes = Vec::new();
    for c in cases {
        // Uniform bound: the rescaled Lipschitz constant after t = 10 stays
        // within twice its maximum over [1, 10].
        let ok = c.boundary_ratio <= 1.0 && !c.monitor_fired && c.lip_late <= 2.0 * c.lip_early;
        pass &= ok;
        notes.push(format!(
            "({},{}): max bq(1+t)^a/L1 {:.1e} (L1 {:.3e}), lip(1+t)^a {:.3} then {:.3}, monitor {}",
            c.p,
            c.q,
            c.boundary_ratio,
            c.l1,
            c.lip_early,
            c.lip_late,
            if c.monitor_fired { "fired" } else { "silent" }
        ));
    }
    Line { id: 8, title: "boundary Lipschitz", pass, detail: notes.join("; ") }
}

// ------------------------------------------------------------ criterion 6

fn criterion_6() -> Line {
    let cfg = RunConfig { ns: vec![100, 200, 400], ..base_cfg(3.0, 2.0) };
    let v = experiments::verify_catalog(&cfg).unwrap();
    let notes: Vec<String> = v
        .kinds
        .iter()
        .map(|k| {
            let mins: Vec<String> = k.reports.iter().map(|r| format!("{:.1e}", r.min_residual)).collect();
            format!(
                "{:?}: min residual [{}], C_cal {:.2e}, stable {}, corrupted {}",
                k.entry.kind,
                mins.join(", "),
                k.calibration.c_cal,
                k.calibration.stable,
                if k.corrupted.passed { "PASSED (bad)" } else { "fails" }
            )
        })
        .collect();
    let certified =
        v.kinds.iter().all(|k| k.calibration.stable && k.reports.iter().all(|r| r.passed) && !k.corrupted.passed);
    Line { id: 6, title: "barrier certification", pass: certified && v.kinds.len() == 6, detail: notes.join("; ") }
}

// ------------------------------------------------------------ criterion 7

/// Smooth random datum `v` and `u = s·v` with `s ∈ [0.05, 1]`.
fn random_pair(grid: &Grid, rng: &mut ChaCha8Rng, target_lip: Option<f64>) -> (Field, Field) {
    let len = grid.len();
    let xi = |i: usize| i as f64 / (len - 1) as f64;
    let modes: Vec<(f64, f64)> = (1..=4).map(|k| (rng.random_range(0.0..1.0), k as f64)).collect();
    let (a0, a1, j, phase): (f64, f64, f64, f64) =
        (rng.random_range(0.05..0.5), 0.0, rng.random_range(1..=3) as f64, rng.random_range(0.0..std::f64::consts::PI));
    let a1 = rng.random_range(0.0..(1.0 - a0)) + a1;
    let amp = rng.random_range(0.1..5.0);
    let mut v: Vec<f64> = (0..len)
        .map(|i| {
            let s: f64 = modes.iter().map(|(c, k)| c * (k * std::f64::consts::PI * xi(i)).sin().powi(2)).sum();
            s + 0.1 * (std::f64::consts::PI * xi(i)).sin().powi(2)
        })
        .collect();
    v[0] = 0.0;
    v[len - 1] = 0.0;
    let mut v = Field::new(*grid, v, 0.0).unwrap();
    v = match target_lip {
        Some(l) => v.scaled(l * rng.random_range(0.2..1.0) / v.lipschitz_estimate()),
        None => v.scaled(amp / v.sup_norm()),
    };
    let u: Vec<f64> = (0..len)
        .map(|i| v.values()[i] * (a0 + a1 * (j * std::f64::consts::PI * xi(i) + phase).sin().powi(2)))
        .collect();
    (Field::new(*grid, u, 0.0).unwrap(), v)
}

fn ordering_violations(lo: &Trajectory, hi: &Trajectory) -> (usize, usize) {
    let mut bad = 0;
    let mut checked = 0;
    for (a, b) in lo.snapshots.iter().zip(&hi.snapshots) {
        let tol = COMPARISON_RTOL * b.sup_norm();
        for (x, y) in a.values().iter().zip(b.values()) {
            checked += 1;
            if x - y > tol {
                bad += 1;
            }
        }
    }
    (bad, checked)
}

fn comparison_regime(q: f64, seed: u64, small: bool) -> (usize, usize, usize, Vec<Trajectory>) {
    let grid = interval(N);
    let params = Params::new(3.0, q, 1).unwrap();
    let fgrad = shoot_f(3.0, &grid).grad_sup_norm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Field, Field)> =
        (0..PAIRS_PER_REGIME).map(|_| random_pair(&grid, &mut rng, small.then_some(0.5 * fgrad))).collect();
    let ev = physical(1.0, 0.05);
    let results: Vec<(usize, usize, bool, Vec<Trajectory>)> = pairs
        .par_iter()
        .map(|(u, v)| {
            let tr = evolve_ensemble(&[u.clone(), v.clone()], &params, &ev, &SchemeConfig::default()).unwrap();
            let (bad, checked) = ordering_violations(&tr[0], &tr[1]);
            (bad, checked, tr[0].terminal_event().is_some(), tr)
        })
        .collect();
    let guards = results.iter().filter(|r| r.2).count();
    let bad = results.iter().map(|r| r.0).sum();
    let checked = results.iter().map(|r| r.1).sum();
    let first = results.into_iter().next().map(|r| r.3).unwrap();
    (bad, checked, guards, first)
}

fn criterion_7() -> (Line, Vec<Trajectory>) {
    let mut pass = true;
    let mut notes = Vec::new();
    let mut sample = Vec::new();
    for (q, seed, small) in [(2.0, 1, false), (2.5, 2, false), (4.0, 3, true)] {
        let (bad, checked, guards, first) = comparison_regime(q, seed, small);
        pass &= bad == 0 && guards == 0;
        notes.push(format!("q={q}: {bad} violations in {checked} node checks, {guards} guard stops"));
        if sample.is_empty() {
            sample = first;
        }
    }
    let line = Line {
        id: 7,
        title: "discrete comparison",
        pass,
        detail: format!("{} pairs per regime; {}", PAIRS_PER_REGIME, notes.join("; ")),
    };
    (line, sample)
}

// ------------------------------------------------------------ criterion 9

fn criterion_9(small: &SmallData) -> (Line, Trajectory) {
    let grid = interval(N);
    let params = Params::new(3.0, 4.0, 1).unwrap();
    let f = shoot_profile_f(&params, &grid, &ShootingConfig::default()).unwrap();
    let cfg = RunConfig { t_end: BLOWUP_HORIZON, grad_cap: BLOWUP_GRAD_CAP, record_every: 0.01, ..base_cfg(3.0, 4.0) };
    let (out, traj) = experiments::blowup_run(&cfg, &params, &f, 10.0).unwrap();
    let t_star = out.guard_time.unwrap_or(f64::INFINITY);
    let series: Vec<(f64, f64)> =
        out.energy.energy_series.iter().copied().filter(|&(t, _)| t >= 0.5 * t_star - 1e-15).collect();
    let increasing = series.len() >= 2 && series.windows(2).all(|w| w[1].1 > w[0].1);
    let small_guard = small.traj.first_event(EventKind::BlowupGuard).is_some();
    let pass = t_star < BLOWUP_HORIZON && increasing && out.energy.fraction_passing >= ENERGY_FRACTION && !small_guard;
    let line = Line {
        id: 9,
        title: "gradient blowup",
        pass,
        detail: format!(
            "10 f/|grad f|: guard at t*={t_star:.3e} (x={:?}), energy increasing on [t*/2,t*] over {} samples: {increasing}, lower bound holds on {:.1}% (need {}%), small data guard: {small_guard}",
            out.guard_coord,
            series.len(),
            100.0 * out.energy.fraction_passing,
            100.0 * ENERGY_FRACTION
        ),
    };
    (line, traj)
}

// ----------------------------------------------------------- criterion 10

fn criterion_10() -> Line {
    let params = Params::new(3.0, 2.0, 1).unwrap();
    let sc = SchemeConfig::default();
    let ns = [100, 200, 400];
    let mut errs = Vec::new();
    let mut cov: f64 = 0.0;
    for &n in &ns {
        let grid = interval(n);
        let f = shoot_f(3.0, &grid);
        let r1 = giant_residual(&f, &params, 1.0, &sc).unwrap();
        errs.push(r1.sup_norm());
        let a = params.decay_rate();
        for t in [0.5, 2.0, 10.0] {
            let rt = giant_residual(&f, &params, t, &sc).unwrap();
            let want = r1.scaled(t.powf(-(a + 1.0)));
            let terms = discrete_p_laplacian(&f.field().scaled(t.powf(-a)), 3.0).unwrap().sup_norm();
            cov = cov.max(rt.distance(&want).unwrap() / terms);
        }
    }
    let orders: Vec<f64> = (1..ns.len())
        .map(|k| (errs[k - 1] / errs[k]).ln() / (interval(ns[k - 1]).h() / interval(ns[k]).h()).ln())
        .collect();
    let pass = orders.iter().all(|&o| o >= 1.0) && cov <= COVARIANCE_TOL;
    Line {
        id: 10,
        title: "friendly-giant residual",
        pass,
        detail: format!(
            "max residual {:?} at n={ns:?}, observed orders {:?} (need >= 1); covariance error {cov:.1e} of the p-Laplacian term (tol {COVARIANCE_TOL:.0e})",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>()
        ),
    }
}

// ----------------------------------------------------------- criterion 11

fn cli_run(args: &[&str], out: &Path) {
    let status =
        Command::new(env!("CARGO_BIN_EXE_fg")).args(args).arg("--out").arg(out).output().expect("fg runs").status;
    assert!(status.success(), "fg {args:?} failed");
}

fn same_dirs(a: &Path, b: &Path) -> (bool, usize) {
    let mut names: Vec<_> = fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let same = names.iter().all(|n| fs::read(a.join(n)).ok() == fs::read(b.join(n)).ok())
        && fs::read_dir(b).unwrap().count() == names.len();
    (same, names.len())
}

fn criterion_11(ensemble: &[Trajectory], blowup: &Trajectory) -> Line {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 2] = [
        &[
            "simulate",
            "--set",
            "initial=\"profile_normalized\"",
            "--set",
            "amplitude=0.5",
            "--set",
            "t_end=1000",
            "--set",
            "record_every=10",
            "--set",
            "noise=0.05",
            "--set",
            "seed=11",
        ],
        &[
            "blowup-scan",
            "--set",
            "q=4",
            "--set",
            "amplitudes=[10.0]",
            "--set",
            "grad_cap=50",
            "--set",
            "t_end=10",
            "--set",
            "record_every=0.01",
        ],
    ];
    let mut pass = true;
    let mut files = 0;
    for (k, args) in runs.iter().enumerate() {
        let (a, b) = (dir.path().join(format!("{k}a")), dir.path().join(format!("{k}b")));
        cli_run(args, &a);
        cli_run(args, &b);
        let (same, n) = same_dirs(&a, &b);
        pass &= same;
        files += n;
    }
    // In-process reruns compare bit patterns of every snapshot.
    let grid = interval(N);
    let params4 = Params::new(3.0, 4.0, 1).unwrap();
    let f = shoot_profile_f(&params4, &grid, &ShootingConfig::default()).unwrap();
    let cfg = RunConfig { t_end: BLOWUP_HORIZON, grad_cap: BLOWUP_GRAD_CAP, record_every: 0.01, ..base_cfg(3.0, 4.0) };
    let (_, again) = experiments::blowup_run(&cfg, &params4, &f, 10.0).unwrap();
    let bits = |t: &Trajectory| -> Vec<u64> {
        t.snapshots.iter().flat_map(|s| s.values().iter().map(|v| v.to_bits())).collect()
    };
    pass &= bits(&again) == bits(blowup);
    let (u, v) = (ensemble[0].initial_state().clone(), ensemble[1].initial_state().clone());
    let rerun = evolve_ensemble(&[u, v], &ensemble[0].params, &physical(1.0, 0.05), &SchemeConfig::default()).unwrap();
    pass &= rerun.iter().zip(ensemble).all(|(x, y)| bits(x) == bits(y));
    Line {
        id: 11,
        title: "determinism",
        pass,
        detail: format!(
            "{files} CLI artifacts byte-identical across reruns: {pass}; blowup and ensemble reruns bitwise equal"
        ),
    }
}

fn main() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let timed = |name: &str, t: Instant| eprintln!("  [{name} done in {:.1}s]", t.elapsed().as_secs_f64());

    let t = Instant::now();
    lines.push(criterion_1());
    timed("1", t);

    let t = Instant::now();
    let cases: Vec<Case> = [(3.0, 2.0), (3.0, 2.5), (3.0, 3.0)].iter().map(|&(p, q)| long_case(p, q)).collect();
    let small = small_data_run();
    timed("2-5, 8", t);
    lines.push(convergence_line(2, "giant convergence", &[&cases[0]]));
    lines.push(convergence_line(3, "p-Laplacian-limit convergence", &[&cases[1], &cases[2]]));
    lines.push(criterion_4(&small));
    lines.push(criterion_5(&cases, &small));

    let t = Instant::now();
    lines.push(criterion_6());
    timed("6", t);

    let t = Instant::now();
    let (line7, ensemble) = criterion_7();
    lines.push(line7);
    timed("7", t);

    lines.push(criterion_8(&cases));

    let t = Instant::now();
    let (line9, blowup) = criterion_9(&small);
    lines.push(line9);
    lines.push(criterion_10());
    timed("9-10", t);

    let t = Instant::now();
    lines.push(criterion_11(&ensemble, &blowup));
    timed("11", t);

    lines.sort_by_key(|l| l.id);
    println!();
    for l in &lines {
        let verdict = if l.pass { "PASS" } else { "FAIL" };
        let note = if !l.pass && KNOWN_RED.contains(&l.id) { " [known red]" } else { "" };
        println!("criterion {:>2} {verdict}{note}  {}: {}", l.id, l.title, l.detail);
    }
    let unexpected: Vec<u32> = lines.iter().filter(|l| !l.pass && !KNOWN_RED.contains(&l.id)).map(|l| l.id).collect();
    let passed = lines.iter().filter(|l| l.pass).count();
    println!("\n{passed}/{} criteria pass ({:.0}s)", lines.len(), start.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
