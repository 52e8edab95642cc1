//! Post-processing of trajectories: decay fits, distance to a profile, the
//! `‖u‖_{r+1}^{r+1}` blowup functional and the weak-form identity.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::evolve::{EventKind, Trajectory};
use crate::math::{exp, ln, pow, Pow};
use crate::params::{Params, Regime};
use crate::profiles::Profile;
use crate::{Error, Field, Grid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Least-squares line through `(ln t, ln y)` for samples with `t` in the window.
pub fn fit_power_law(samples: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> =
        samples.iter().filter(|(t, _)| *t >= window.0 && *t <= window.1 && *t > 0.0).map(|&(t, y)| (t, y)).collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientData { needed: 5, found: pts.len() });
    }
    if pts.iter().any(|(_, y)| !(*y > 0.0)) {
        return Err(Error::Domain("power-law fit needs positive values".into()));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|(t, _)| ln(*t)).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, y)| ln(*y)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData { needed: 2, found: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(DecayFit { exponent: slope, intercept, r_squared, window, samples: pts.len() })
}

/// Decay exponent of `‖u(t)‖_∞` over `window`.
pub fn fit_decay(traj: &Trajectory, window: (f64, f64)) -> Result<DecayFit> {
    if traj.rescaled {
        return Err(Error::Unsupported("decay fits need physical time".into()));
    }
    let samples: Vec<(f64, f64)> = traj.snapshots.iter().map(|s| (s.time(), s.sup_norm())).collect();
    fit_power_law(&samples, window)
}

/// `‖t^{1/(p−2)} u(t) − f‖_∞` per snapshot (`‖v(s) − f‖_∞` for rescaled runs).
pub fn profile_distance(traj: &Trajectory, profile: &Profile) -> Result<Vec<(f64, f64)>> {
    let a = traj.params.decay_rate();
    traj.snapshots
        .iter()
        .map(|s| {
            s.same_grid(profile.field())?;
            let c = if traj.rescaled { 1.0 } else { pow(s.time(), a) };
            let d = s.values().iter().zip(profile.field().values()).fold(0.0_f64, |m, (u, f)| m.max((c * u - f).abs()));
            Ok((s.time(), d))
        })
        .collect()
}

/// `∫_Ω |u|^e dx` by the trapezoid rule.
pub fn lp_integral(field: &Field, e: f64) -> f64 {
    let w = field.grid().quadrature_weights();
    let pw = Pow::new(e);
    field.values().iter().zip(&w).map(|(u, w)| w * pw.of(u.abs())).sum()
}

/// `(1/p) ∫_Ω |∇u|^p dx` with face slopes.
pub fn p_dirichlet_energy(field: &Field, p: f64) -> f64 {
    let w = field.grid().face_weights();
    let h = field.grid().h();
    let pw = Pow::new(p);
    field.values().windows(2).zip(&w).map(|(u, w)| w * pw.of(((u[1] - u[0]) / h).abs())).sum::<f64>() / p
}

/// Smallest Rayleigh quotient `Σ_f w_f |D_f w|^q / Σ_i m_i |w_i|^q` over
/// grid functions vanishing at the Dirichlet nodes, with the face and
/// trapezoid weights of the grid. Computed by inverse iteration on the
/// discrete q-Laplacian; each solve integrates the flux exactly.
pub fn poincare_constant(grid: &Grid, q: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::Domain(format!("q > 1 required (q = {q})")));
    }
    let m = grid.quadrature_weights();
    let wf = grid.face_weights();
    let h = grid.h();
    let len = grid.len();
    let qm1 = Pow::new(q - 1.0);
    let inv = Pow::new(1.0 / (q - 1.0));
    let pq = Pow::new(q);
    let rayleigh = |w: &[f64]| -> f64 {
        let num: f64 = w.windows(2).zip(&wf).map(|(u, f)| f * pq.of(((u[1] - u[0]) / h).abs())).sum();
        let den: f64 = w.iter().zip(&m).map(|(u, m)| m * pq.of(u.abs())).sum();
        num / den
    };
    // Nodal balance: a_{i−½}Φ_{i−½} − a_{i+½}Φ_{i+½} = h·m_i·g_i with a_f = w_f/h.
    let solve = |g: &[f64]| -> Vec<f64> {
        let mut cum = alloc::vec![0.0; len - 1];
        let integrate = |phi_first: f64, cum: &mut Vec<f64>| {
            let mut acc = phi_first;
            for k in 0..len - 1 {
                if k > 0 || grid.is_radial() {
                    acc -= m[k] * g[k];
                }
                cum[k] = acc;
            }
        };
        let slopes = |cum: &[f64]| -> Vec<f64> { cum.iter().zip(&wf).map(|(c, f)| inv.signed(c * h / f)).collect() };
        let build = |d: &[f64]| -> Vec<f64> {
            let mut w = alloc::vec![0.0; len];
            for k in (0..len - 1).rev() {
                w[k] = w[k + 1] - h * d[k];
            }
            w
        };
        if grid.is_radial() {
            integrate(0.0, &mut cum);
            return build(&slopes(&cum));
        }
        // Interval: choose the inflow flux so that w also vanishes at the left end.
        let total: f64 = g.iter().zip(&m).map(|(g, m)| (g * m).abs()).sum::<f64>() + 1e-300;
        let (mut lo, mut hi) = (-2.0 * total, 2.0 * total);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            integrate(mid, &mut cum);
            let w = build(&slopes(&cum));
            if w[0] > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * total {
                break;
            }
        }
        integrate(0.5 * (lo + hi), &mut cum);
        let mut w = build(&slopes(&cum));
        w[0] = 0.0;
        w
    };
    let mut w: Vec<f64> = (0..len)
        .map(|i| if grid.is_dirichlet(i) { 0.0 } else { 1.0 - (grid.radial_distance(i) / grid.radius()).powi(2) })
        .collect();
    let mut lambda = rayleigh(&w);
    for it in 0..2000 {
        let g: Vec<f64> = w.iter().map(|v| qm1.signed(*v)).collect();
        let mut next = solve(&g);
        let s = next.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NonConvergence { what: "Poincaré inverse iteration", iterations: it });
        }
        next.iter_mut().for_each(|v| *v /= s);
        let l = rayleigh(&next);
        w = next;
        if (l - lambda).abs() <= 1e-12 * l {
            return Ok(l);
        }
        lambda = l;
    }
    Err(Error::NonConvergence { what: "Poincaré inverse iteration", iterations: 2000 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    /// `r = q/(q − p)`.
    pub r: f64,
    /// Discrete q-Poincaré constant of the grid.
    pub poincare: f64,
    /// `κ₁'` and `κ₂'` of `d/dt E ≥ κ₁' E^{(r+q)/(r+1)} − κ₂'`, `E = ‖u‖_{r+1}^{r+1}`.
    pub kappa1: f64,
    pub kappa2: f64,
    pub energy_series: Vec<(f64, f64)>,
    /// Per consecutive snapshot pair: difference quotient ≥ bound at the left end.
    pub lower_bound_check: Vec<bool>,
    pub fraction_passing: f64,
    /// Time of the guard event, if any.
    pub blowup_time_estimate: Option<f64>,
    /// Blowup time of the comparison ODE from the first energy value (an
    /// upper bound when the inequality holds); not asserted.
    pub ode_blowup_time: Option<f64>,
}

/// `(κ₁', κ₂', λ_q)` for `E' ≥ κ₁' E^{(r+q)/(r+1)} − κ₂'`.
pub fn blowup_constants(params: &Params, grid: &Grid) -> Result<(f64, f64, f64)> {
    if params.regime() != Regime::Super {
        return Err(Error::Regime("the blowup functional needs q > p".into()));
    }
    let (p, q) = (params.p(), params.q());
    let r = q / (q - p);
    let lambda = poincare_constant(grid, q)?;
    let omega = grid.measure();
    let k1 = (q - p) / q * pow((q - p) / (q - p + 1.0), q) * lambda;
    let k2 = pow(q / (q - p), p / (q - p)) * omega;
    let k1p = (r + 1.0) * k1 * pow(omega, -(q - 1.0) / (r + 1.0));
    let k2p = (r + 1.0) * k2;
    Ok((k1p, k2p, lambda))
}

fn ode_blowup_time(e0: f64, k1: f64, k2: f64, m: f64) -> Option<f64> {
    let rate = |y: f64| k1 * pow(y, m) - k2;
    if !(e0 > 0.0) || rate(e0) <= 0.0 {
        return None;
    }
    // ∫_{E0}^{∞} dy/(k1 y^m − k2) in log variables, then the pure-power tail.
    let (y_lo, y_hi) = (ln(e0), ln(e0) + 60.0);
    let steps = 6000;
    let dz = (y_hi - y_lo) / steps as f64;
    let mut total = 0.0;
    for k in 0..steps {
        let z = y_lo + (k as f64 + 0.5) * dz;
        let y = exp(z);
        total += y / rate(y) * dz;
    }
    let top = exp(y_hi);
    total += pow(top, 1.0 - m) / (k1 * (m - 1.0));
    Some(total)
}

pub fn blowup_energy(traj: &Trajectory, params: &Params) -> Result<BlowupReport> {
    if params.regime() != Regime::Super {
        return Err(Error::Regime("the blowup functional needs q > p".into()));
    }
    let (p, q) = (params.p(), params.q());
    let r = q / (q - p);
    let (k1, k2, lambda) = blowup_constants(params, traj.grid())?;
    let m = (r + q) / (r + 1.0);
    let series: Vec<(f64, f64)> = traj.snapshots.iter().map(|s| (s.time(), lp_integral(s, r + 1.0))).collect();
    let checks: Vec<bool> = series
        .windows(2)
        .map(|w| {
            let quotient = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            quotient >= k1 * pow(w[0].1, m) - k2
        })
        .collect();
    let fraction =
        if checks.is_empty() { 1.0 } else { checks.iter().filter(|c| **c).count() as f64 / checks.len() as f64 };
    let guard = traj.first_event(EventKind::BlowupGuard).map(|e| e.time);
    let ode = series.first().and_then(|(_, e0)| ode_blowup_time(*e0, k1, k2, m));
    Ok(BlowupReport {
        r,
        poincare: lambda,
        kappa1: k1,
        kappa2: k2,
        energy_series: series,
        lower_bound_check: checks,
        fraction_passing: fraction,
        blowup_time_estimate: guard,
        ode_blowup_time: ode,
    })
}

/// Spatial right-hand side of the weak identity,
/// `∫ (−|∇u|^{p−2}∇u·∇ψ + |∇u|^q ψ)`, with face quadrature.
pub fn weak_rhs(u: &Field, psi: &Field, p: f64, q: f64) -> f64 {
    let w = u.grid().face_weights();
    let h = u.grid().h();
    let flux = Pow::new(p - 2.0);
    let src = Pow::new(q);
    let (uv, pv) = (u.values(), psi.values());
    let mut total = 0.0;
    for k in 0..w.len() {
        let d = (uv[k + 1] - uv[k]) / h;
        let dpsi = (pv[k + 1] - pv[k]) / h;
        let psi_bar = 0.5 * (pv[k] + pv[k + 1]);
        total += w[k] * (-flux.of(d.abs()) * d * dpsi + src.of(d.abs()) * psi_bar);
    }
    total
}

/// `∫ u ψ` by the trapezoid rule.
pub fn weak_lhs(u: &Field, psi: &Field) -> f64 {
    let w = u.grid().quadrature_weights();
    u.values().iter().zip(psi.values()).zip(&w).map(|((a, b), w)| a * b * w).sum()
}

/// Per adjacent snapshot pair, `|Δ∫uψ/Δt − trapezoid_t(∫ …)|`, stamped at
/// the interval midpoint.
pub fn weak_form_residual(traj: &Trajectory, params: &Params, test_fn: &Field) -> Result<Vec<(f64, f64)>> {
    if traj.rescaled {
        return Err(Error::Unsupported("the weak identity is checked in physical time".into()));
    }
    if !test_fn.has_dirichlet_zeros() {
        return Err(Error::Domain("test function must vanish on the boundary".into()));
    }
    let (p, q) = (params.p(), params.q());
    let mut out = Vec::with_capacity(traj.snapshots.len().saturating_sub(1));
    for pair in traj.snapshots.windows(2) {
        pair[0].same_grid(test_fn)?;
        let dt = pair[1].time() - pair[0].time();
        let lhs = (weak_lhs(&pair[1], test_fn) - weak_lhs(&pair[0], test_fn)) / dt;
        let rhs = 0.5 * (weak_rhs(&pair[0], test_fn, p, q) + weak_rhs(&pair[1], test_fn, p, q));
        out.push((0.5 * (pair[0].time() + pair[1].time()), (lhs - rhs).abs()));
    }
    Ok(out)
}
