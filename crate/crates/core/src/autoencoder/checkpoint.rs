//! Checkpoint encoding: shape manifest header followed by the flat parameter
//! vector as little-endian f64. The same bytes serve as the on-disk format
//! and as the federated wire payload, so round digests are computed over it.

use std::fs;
use std::path::Path;

use crate::autoencoder::{flat_len, AeParams, LayerShape};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FNAE";
const VERSION: u8 = 1;

/// Serializes parameters to the wire/checkpoint byte layout.
pub fn to_wire_bytes(params: &AeParams) -> Vec<u8> {
    let manifest = params.manifest();
    let flat = params.flat();
    let mut bytes = Vec::with_capacity(13 + manifest.len() * 16 + 8 + flat.len() * 8);
    bytes.extend_from_slice(MAGIC);
    bytes.push(VERSION);
    bytes.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
    for shape in manifest {
        bytes.extend_from_slice(&(shape.rows as u64).to_le_bytes());
        bytes.extend_from_slice(&(shape.cols as u64).to_le_bytes());
    }
    bytes.extend_from_slice(&(flat.len() as u64).to_le_bytes());
    for &v in flat {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

fn corrupt(reason: impl Into<String>) -> Error {
    Error::CorruptFile {
        what: "autoencoder checkpoint",
        reason: reason.into(),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(corrupt("truncated"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses the wire/checkpoint byte layout back into parameters.
pub fn from_wire_bytes(bytes: &[u8]) -> Result<AeParams> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = c.take(1)?[0];
    if version != VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let n_layers = c.u64()? as usize;
    if n_layers == 0 || n_layers > 1024 {
        return Err(corrupt("implausible layer count"));
    }
    let mut manifest = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let rows = c.u64()? as usize;
        let cols = c.u64()? as usize;
        manifest.push(LayerShape { rows, cols });
    }
    let len = c.u64()? as usize;
    if len != flat_len(&manifest) {
        return Err(corrupt("flat length disagrees with manifest"));
    }
    let mut flat = Vec::with_capacity(len);
    for _ in 0..len {
        flat.push(c.f64()?);
    }
    if c.pos != bytes.len() {
        return Err(corrupt("trailing bytes"));
    }
    AeParams::from_flat(manifest, flat)
}

pub fn save_checkpoint(params: &AeParams, path: &Path) -> Result<()> {
    fs::write(path, to_wire_bytes(params))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<AeParams> {
    from_wire_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::{init_params, AeArchitecture};

    #[test]
    fn wire_round_trip_is_bit_exact() {
        let p = init_params(&AeArchitecture::new(7).unwrap(), 42);
        let back = from_wire_bytes(&to_wire_bytes(&p)).unwrap();
        assert_eq!(back.flat(), p.flat());
        assert_eq!(back.manifest(), p.manifest());
    }

    #[test]
    fn file_round_trip() {
        let p = init_params(&AeArchitecture::new(3).unwrap(), 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ae");
        save_checkpoint(&p, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap().flat(), p.flat());
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let p = init_params(&AeArchitecture::new(3).unwrap(), 1);
        let bytes = to_wire_bytes(&p);
        assert!(matches!(
            from_wire_bytes(&bytes[..bytes.len() - 3]),
            Err(Error::CorruptFile { .. })
        ));
    }
}
