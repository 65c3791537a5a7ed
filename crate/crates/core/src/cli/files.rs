use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::counterexample::{BlockPlacement, InstanceRecord};
use crate::error::{Error, Result};
use crate::interval_sets::AnySet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub config_digest: String,
    pub instance: InstanceRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetFile {
    pub config_digest: Option<String>,
    pub set: AnySet<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementFile {
    pub config_digest: String,
    pub placements: Vec<BlockPlacement>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SetFileOrBare {
    Wrapped(SetFile),
    Bare(AnySet<f64>),
}

pub fn instance_path(dir: &Path, n: u32) -> PathBuf {
    dir.join(format!("instance_n{n}.json"))
}

pub fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V> {
    let file = File::open(path).map_err(|source| Error::Open { path: path.display().to_string(), source })?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// A set file, either wrapped with a digest or a bare set.
pub fn read_set(path: &Path) -> Result<AnySet<f64>> {
    Ok(match read_json::<SetFileOrBare>(path)? {
        SetFileOrBare::Wrapped(f) => f.set,
        SetFileOrBare::Bare(s) => s,
    })
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
