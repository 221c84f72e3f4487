//! Binary cache for prepared datasets: magic, version byte, row/col counts,
//! row-major little-endian f64 features, then one label byte per row.
//!
//! Feature names are not part of the format; reloaded datasets carry
//! generated names (`f0`, `f1`, ...), which is all the model path needs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dataset::{FlowDataset, FlowSchema, Provenance};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FNDS";
const VERSION: u8 = 1;

/// Writes a prepared dataset to `path`.
pub fn write_cache(ds: &FlowDataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(ds.n_rows() as u64).to_le_bytes())?;
    w.write_all(&(ds.n_features() as u64).to_le_bytes())?;
    for &v in ds.features() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(ds.labels())?;
    w.flush()?;
    Ok(())
}

fn corrupt(reason: impl Into<String>) -> Error {
    Error::CorruptFile {
        what: "dataset cache",
        reason: reason.into(),
    }
}

/// Reads a prepared dataset back, attaching the given silo name and tag.
pub fn read_cache(path: &Path, silo: &str, tag: &str) -> Result<FlowDataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| corrupt("truncated header"))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)?;
    if version[0] != VERSION {
        return Err(corrupt(format!("unsupported version {}", version[0])));
    }
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let rows = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u64buf)?;
    let cols = u64::from_le_bytes(u64buf) as usize;

    let mut features = Vec::with_capacity(rows * cols);
    let mut f64buf = [0u8; 8];
    for _ in 0..rows * cols {
        r.read_exact(&mut f64buf).map_err(|_| corrupt("truncated features"))?;
        features.push(f64::from_le_bytes(f64buf));
    }
    let mut labels = vec![0u8; rows];
    r.read_exact(&mut labels).map_err(|_| corrupt("truncated labels"))?;

    FlowDataset::new(
        features,
        cols,
        labels,
        FlowSchema {
            feature_names: (0..cols).map(|j| format!("f{j}")).collect(),
            identifier_columns: vec![],
            label_column: "label".into(),
            excluded_columns: vec![],
        },
        Provenance {
            silo: silo.to_string(),
            tag: tag.to_string(),
            dropped_columns: vec![],
            flags: vec![],
        },
    )
}
