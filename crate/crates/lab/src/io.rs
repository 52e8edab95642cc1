//! File formats. Every artifact carries the run's config hash: JSON files as
//! a `config_hash` field, CSV files as a leading `# config_hash: …` comment.

use std::fs;
use std::path::{Path, PathBuf};

use fg_core::evolve::Trajectory;
use fg_core::{Field, Grid, Params};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::LabError;

/// Checkpoint format of a single field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub params: Params,
    pub grid: Grid,
    pub time: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn of(field: &Field, params: &Params) -> Self {
        Self { params: *params, grid: *field.grid(), time: field.time(), values: field.values().to_vec() }
    }

    pub fn into_field(self) -> Result<Field, LabError> {
        Field::new(self.grid, self.values, self.time).map_err(LabError::config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Output directory bound to one config hash.
pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    written: Vec<ArtifactEntry>,
}

impl Artifacts {
    pub fn create(dir: &Path, hash: &str) -> Result<Self, LabError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), hash: hash.to_owned(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), LabError> {
        fs::write(self.dir.join(name), &bytes)?;
        self.written.push(ArtifactEntry {
            name: name.to_owned(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Pretty JSON with `config_hash` inserted at the top level.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), LabError> {
        let bytes = json_bytes(value, &self.hash)?;
        self.put(name, bytes)
    }

    /// CSV with a header row; rows are serialized field by field.
    pub fn csv<R: Serialize>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) -> Result<(), LabError> {
        let mut out = format!("# config_hash: {}\n", self.hash).into_bytes();
        {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
            w.write_record(header)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        self.put(name, out)
    }

    pub fn field_csv(&mut self, name: &str, field: &Field) -> Result<(), LabError> {
        let g = *field.grid();
        self.csv(name, &["coord", "value"], (0..g.len()).map(|i| (g.node(i), field.values()[i])))
    }

    /// Long format `time, coord, value`.
    pub fn trajectory_csv(&mut self, name: &str, traj: &Trajectory) -> Result<(), LabError> {
        let g = *traj.grid();
        let rows = traj.snapshots.iter().flat_map(|s| (0..g.len()).map(move |i| (s.time(), g.node(i), s.values()[i])));
        self.csv(name, &["time", "coord", "value"], rows)
    }

    /// `time, sup_norm, lipschitz_estimate, energy`, the energy being
    /// `(1/p)∫|∇u|^p`.
    pub fn summary_csv(&mut self, name: &str, traj: &Trajectory) -> Result<(), LabError> {
        let p = traj.params.p();
        let rows = traj
            .snapshots
            .iter()
            .map(|s| (s.time(), s.sup_norm(), s.lipschitz_estimate(), fg_core::diagnostics::p_dirichlet_energy(s, p)));
        self.csv(name, &["time", "sup_norm", "lipschitz_estimate", "energy"], rows)
    }

    /// Writes `manifest.json` listing every artifact with its digest.
    pub fn finish<T: Serialize>(mut self, manifest: &T) -> Result<Vec<ArtifactEntry>, LabError> {
        let mut value = serde_json::to_value(manifest)?;
        if let serde_json::Value::Object(m) = &mut value {
            m.insert("artifacts".into(), serde_json::to_value(&self.written)?);
        }
        let bytes = json_bytes(&value, &self.hash)?;
        self.put("manifest.json", bytes)?;
        Ok(self.written)
    }
}

fn json_bytes<T: Serialize>(value: &T, hash: &str) -> Result<Vec<u8>, LabError> {
    let mut v = serde_json::to_value(value)?;
    if let serde_json::Value::Object(m) = &mut v {
        m.insert("config_hash".into(), serde_json::Value::String(hash.to_owned()));
    }
    let mut bytes = serde_json::to_vec_pretty(&v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Reads initial data for `grid` from a JSON snapshot (`.json`) or a
/// `coord,value` CSV whose coordinates must match the grid nodes.
pub fn read_initial(path: &Path, grid: &Grid) -> Result<Field, LabError> {
    let bad = |msg: String| LabError::Config { kind: "ConfigError", message: format!("{}: {msg}", path.display()) };
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    let field = if is_json {
        let snap: Snapshot = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if snap.grid != *grid {
            return Err(bad("snapshot grid differs from the configured grid".into()));
        }
        snap.into_field()?
    } else {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let mut values = Vec::new();
        for (i, rec) in r.deserialize::<(f64, f64)>().enumerate() {
            let (x, v) = rec.map_err(|e| bad(e.to_string()))?;
            if i >= grid.len() || (x - grid.node(i)).abs() > 1e-9 * grid.h().max(1.0) {
                return Err(bad(format!("row {i}: coordinate {x} is not grid node {i}")));
            }
            values.push(v);
        }
        Field::new(*grid, values, 0.0).map_err(LabError::config)?
    };
    Ok(field.with_time(0.0))
}
