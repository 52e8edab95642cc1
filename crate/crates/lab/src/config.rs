//! Run configuration: a flat TOML table, `--set key=value` overrides, and a
//! content hash over the resolved values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fg_core::evolve::EvolveConfig;
use fg_core::operators::{HamiltonianScheme, SchemeConfig};
use fg_core::{make_grid, Grid, GridKind, Params};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainShape {
    Interval,
    Ball,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// `amplitude · f/‖∇f‖_∞`.
    ProfileMultiple,
    /// `amplitude · f/‖f‖_∞`.
    ProfileNormalized,
    /// `amplitude · sin²(k π ξ)`, ξ the normalized distance from the left end
    /// (from the sphere `|x| = R` on balls, scaled by `1/(2R)`).
    Bump,
    /// `amplitude · (1 − |x − c|/R)`.
    Tent,
    /// JSON snapshot or `coord,value` CSV at `initial_file`.
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    Shooting,
    /// Steady state of the rescaled flow with the run's Hamiltonian scheme.
    Marching,
}

/// Every key is optional in the file; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    pub q: f64,
    pub dim: usize,
    pub domain: DomainShape,
    pub a: f64,
    pub b: f64,
    pub radius: f64,
    pub n: usize,

    pub hamiltonian: HamiltonianScheme,
    pub degenerate_cutoff: f64,

    pub cfl_safety: f64,
    pub t_end: f64,
    pub dt_min: f64,
    pub grad_cap: f64,
    pub record_every: f64,
    pub rescaled: bool,
    pub steady_tol: f64,
    /// Arms the boundary-loss monitor with this Lipschitz constant.
    pub boundary_lipschitz: Option<f64>,

    pub initial: InitialKind,
    pub amplitude: f64,
    pub bump_k: u32,
    pub initial_file: Option<PathBuf>,
    pub profile_source: ProfileSource,
    /// Multiplicative noise `1 + noise·ξ`, ξ uniform in [−1, 1], drawn from `seed`.
    pub noise: f64,
    pub seed: u64,

    /// Final `s` of profile marching.
    pub march_s_end: f64,
    /// Relative shoot/march tolerance of the `profile` command.
    pub crossval_tol: f64,
    /// Offset added to the marched profile before cross-validation (fault injection).
    pub profile_offset: f64,

    /// Interior point counts of refinement studies.
    pub ns: Vec<usize>,
    pub fit_window: (f64, f64),
    /// Multiples of `f/‖∇f‖_∞` for the blowup scan.
    pub amplitudes: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ev = EvolveConfig::default();
        Self {
            p: 3.0,
            q: 2.0,
            dim: 1,
            domain: DomainShape::Interval,
            a: -1.0,
            b: 1.0,
            radius: 1.0,
            n: 200,
            hamiltonian: HamiltonianScheme::Godunov,
            degenerate_cutoff: 0.0,
            cfl_safety: ev.cfl_safety,
            t_end: ev.t_end,
            dt_min: ev.dt_min,
            grad_cap: ev.grad_cap,
            record_every: ev.record_every,
            rescaled: ev.rescaled,
            steady_tol: ev.steady_tol,
            boundary_lipschitz: None,
            initial: InitialKind::Bump,
            amplitude: 1.0,
            bump_k: 1,
            initial_file: None,
            profile_source: ProfileSource::Shooting,
            noise: 0.0,
            seed: 0,
            march_s_end: 400.0,
            crossval_tol: 1e-3,
            profile_offset: 0.0,
            ns: vec![100, 200, 400],
            fit_window: (100.0, 1000.0),
            amplitudes: vec![0.5, 1.0, 2.0, 5.0, 10.0],
        }
    }
}

fn config_err(msg: impl Into<String>) -> LabError {
    LabError::Config { kind: "ConfigError", message: msg.into() }
}

/// `value` as TOML when it parses as one, otherwise as a bare string.
fn parse_value(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.to_owned())),
        Err(_) => toml::Value::String(value.to_owned()),
    }
}

impl RunConfig {
    /// Parses `text` and applies `KEY=VALUE` overrides in order.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, LabError> {
        let mut table: toml::Table = text.parse().map_err(|e| config_err(format!("{e}")))?;
        for (k, v) in table.iter() {
            if v.is_table() {
                return Err(config_err(format!("nested table `{k}`: the config is a flat key-value file")));
            }
        }
        for ov in overrides {
            let (k, v) = ov.split_once('=').ok_or_else(|| config_err(format!("override `{ov}` is not KEY=VALUE")))?;
            table.insert(k.trim().to_owned(), parse_value(v.trim()));
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| config_err(e.message().to_owned()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, LabError> {
        let text = match path {
            Some(p) => {
                std::fs::read_to_string(p).map_err(|e| config_err(format!("cannot read {}: {e}", p.display())))?
            }
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    fn check(&self) -> Result<(), LabError> {
        self.params()?;
        self.grid()?;
        self.evolve_config().validate().map_err(LabError::config)?;
        if self.initial == InitialKind::File && self.initial_file.is_none() {
            return Err(config_err("initial = \"file\" needs initial_file"));
        }
        if !(self.noise >= 0.0 && self.noise < 1.0) {
            return Err(config_err("noise must lie in [0, 1)"));
        }
        if self.ns.len() < 2 || self.ns.iter().any(|&n| n < 3) {
            return Err(config_err("ns needs at least two grids with n ≥ 3"));
        }
        if !(self.fit_window.0 < self.fit_window.1) {
            return Err(config_err("fit_window must be increasing"));
        }
        if self.amplitudes.is_empty() || self.amplitudes.iter().any(|c| !(*c > 0.0)) {
            return Err(config_err("amplitudes must be positive"));
        }
        if !(self.crossval_tol > 0.0) || !(self.march_s_end > 0.0) {
            return Err(config_err("crossval_tol and march_s_end must be positive"));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<Params, LabError> {
        let dim = match self.domain {
            DomainShape::Interval => 1,
            DomainShape::Ball => self.dim,
        };
        Params::new(self.p, self.q, dim).map_err(LabError::config)
    }

    pub fn grid_kind(&self) -> GridKind {
        match self.domain {
            DomainShape::Interval => GridKind::Interval { a: self.a, b: self.b },
            DomainShape::Ball => GridKind::RadialBall { radius: self.radius, dim: self.dim },
        }
    }

    pub fn grid(&self) -> Result<Grid, LabError> {
        self.grid_with(self.n)
    }

    pub fn grid_with(&self, n: usize) -> Result<Grid, LabError> {
        make_grid(self.grid_kind(), n).map_err(LabError::config)
    }

    pub fn scheme(&self) -> SchemeConfig {
        SchemeConfig {
            hamiltonian: self.hamiltonian,
            degenerate_cutoff: self.degenerate_cutoff,
            ..SchemeConfig::default()
        }
    }

    pub fn evolve_config(&self) -> EvolveConfig {
        EvolveConfig {
            cfl_safety: self.cfl_safety,
            t_end: self.t_end,
            dt_min: self.dt_min,
            grad_cap: self.grad_cap,
            record_every: self.record_every,
            rescaled: self.rescaled,
            steady_tol: self.steady_tol,
            allow_zero_initial: false,
            boundary_lipschitz: self.boundary_lipschitz,
        }
    }

    /// Marching configuration (rescaled, to `march_s_end`).
    pub fn march_config(&self) -> EvolveConfig {
        EvolveConfig { t_end: self.march_s_end, record_every: 10.0, rescaled: true, ..self.evolve_config() }
    }

    /// Flat map of the resolved values, as embedded in manifests.
    pub fn to_map(&self) -> BTreeMap<String, serde_json::Value> {
        match serde_json::to_value(self).expect("config serializes") {
            serde_json::Value::Object(m) => m.into_iter().collect(),
            _ => unreachable!("RunConfig is a struct"),
        }
    }

    /// SHA-256 over the canonical JSON of the resolved config (sorted keys).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&self.to_map()).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
