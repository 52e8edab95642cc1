use fg_core::barriers::*;
use fg_core::evolve::{evolve, EvolveConfig};
use fg_core::operators::SchemeConfig;
use fg_core::*;

fn grid(n: usize) -> Grid {
    make_grid(GridKind::Interval { a: -1.0, b: 1.0 }, n).unwrap()
}

fn bump(g: Grid) -> Field {
    let mut u = Field::from_fn(g, 0.0, |x| (std::f64::consts::FRAC_PI_2 * x).cos().powi(2)).unwrap();
    u.enforce_dirichlet();
    u
}

const TIMES: [f64; 5] = [0.0, 0.1, 1.0, 10.0, 100.0];

#[test]
fn global_exp_certifies_and_its_corruption_does_not() {
    let g = grid(100);
    let params = Params::new(3.0, 2.0, 1).unwrap();
    let spec = make_global_exp(&params, &Domain::of(&g), 1.0).unwrap();
    validate(&spec).unwrap();
    let sc = SchemeConfig::default();
    let rep = certify_supersolution(&spec, &g, &TIMES, &sc, 0.0).unwrap();
    assert!(rep.passed, "{}", rep.min_residual);
    let a = spec.constant("A").unwrap();
    let half = spec.with_constant("A", a / 2.0).unwrap();
    assert!(validate(&half).is_err());
    let bad = spec.with_constant("A", a / 100.0).unwrap();
    assert!(!certify_supersolution(&bad, &g, &TIMES, &sc, 0.0).unwrap().passed);
}

#[test]
fn global_barriers_dominate_their_trajectories() {
    let g = grid(80);
    let u0 = bump(g);
    let cfg = EvolveConfig { t_end: 5.0, record_every: 0.5, ..Default::default() };
    let sc = SchemeConfig::default();
    for (q, exp_kind) in [(2.0, true), (2.5, false)] {
        let params = Params::new(3.0, q, 1).unwrap();
        let spec = if exp_kind {
            make_global_exp(&params, &Domain::of(&g), u0.sup_norm()).unwrap()
        } else {
            make_global_power(&params, &Domain::of(&g), u0.sup_norm()).unwrap()
        };
        let tr = evolve(&u0, &params, &cfg, &sc).unwrap();
        let rep = check_domination(&tr, &spec).unwrap();
        assert!(rep.passed(), "{:?}", rep.violations.first());
        let c1 = spec.decay_constant().unwrap();
        for s in &tr.snapshots {
            assert!(s.sup_norm() * (1.0 + s.time()) <= c1);
        }
    }
}

#[test]
fn domination_precondition_is_checked() {
    let g = grid(40);
    let params = Params::new(3.0, 2.5, 1).unwrap();
    let spec = make_global_power(&params, &Domain::of(&g), 0.1).unwrap();
    let u0 = bump(g).scaled(100.0);
    let tr = evolve(
        &u0,
        &params,
        &EvolveConfig { t_end: 0.01, record_every: 0.01, ..Default::default() },
        &SchemeConfig::default(),
    )
    .unwrap();
    assert!(matches!(check_domination(&tr, &spec), Err(Error::PreconditionFailed(_))));
}

#[test]
fn boundary_barriers_respect_their_window_and_tampering() {
    let g = grid(100);
    let dom = Domain::of(&g);
    let p3 = Params::new(3.0, 3.0, 1).unwrap();
    let c1 = make_global_power(&p3, &dom, 1.0).unwrap().decay_constant().unwrap();
    let spec = make_boundary_barrier(&p3, &dom, 1.0, 1.0, c1, 1.0).unwrap();
    assert_eq!(spec.kind(), BarrierKind::BoundaryExpTransformed);
    validate(&spec).unwrap();
    assert!(matches!(spec.eval(1.5, &[0.9]), Err(Error::OutOfWindow { .. })));
    assert!(spec.eval(1.0, &[1.0]).unwrap().abs() < 1e-12);
    assert!(spec.eval(0.5, &[1.0]).unwrap() > 0.0);
    let delta = spec.constant("delta").unwrap();
    assert!(validate(&spec.with_constant("delta", 2.0 * delta).unwrap()).is_err());
    let rep = certify_supersolution(&spec, &g, &[0.0, 0.5, 1.0, 2.0], &SchemeConfig::default(), 0.0).unwrap();
    assert!(rep.passed);
    assert_eq!(rep.skipped_times, vec![2.0]);
}

#[test]
fn transform_chain_holds_on_samples() {
    for k in 0..200 {
        let u = k as f64 * 0.05;
        assert!(transform_chain_holds(u, 3.0) && transform_chain_holds(u, 4.5));
    }
}

#[test]
fn radial_grids_reject_interval_kinds() {
    let g = make_grid(GridKind::RadialBall { radius: 1.0, dim: 2 }, 40).unwrap();
    let params = Params::new(3.0, 2.0, 2).unwrap();
    let spec = make_global_exp(&params, &Domain::of(&g), 1.0).unwrap();
    assert!(matches!(
        certify_supersolution(&spec, &g, &[0.0], &SchemeConfig::default(), 0.0),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn reports_serialize() {
    let g = grid(30);
    let params = Params::new(3.0, 2.0, 1).unwrap();
    let spec = make_global_exp(&params, &Domain::of(&g), 1.0).unwrap();
    let rep = certify_supersolution(&spec, &g, &[0.0, 1.0], &SchemeConfig::default(), 0.0).unwrap();
    let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
    for key in ["kind", "constants", "min_residual", "violations", "tolerance"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}
