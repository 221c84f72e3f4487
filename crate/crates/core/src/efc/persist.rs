//! Binary persistence for fitted EFC models; round-trips bit-exactly.

use std::fs;
use std::path::Path;

use crate::efc::discretize::Discretizer;
use crate::efc::model::{EfcModel, PairTensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FNEF";
const VERSION: u8 = 1;

fn corrupt(reason: impl Into<String>) -> Error {
    Error::CorruptFile {
        what: "efc model",
        reason: reason.into(),
    }
}

fn push_f64s(bytes: &mut Vec<u8>, values: &[f64]) {
    for &v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
}

/// Writes Q, alpha, quantile, cutoff, bin edges, fields and couplings.
pub fn save_efc(model: &EfcModel, path: &Path) -> Result<()> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.push(VERSION);
    bytes.extend_from_slice(&(model.discretizer.q_bins() as u64).to_le_bytes());
    push_f64s(&mut bytes, &[model.alpha, model.quantile, model.cutoff]);
    let n = model.n_features();
    bytes.extend_from_slice(&(n as u64).to_le_bytes());
    for i in 0..n {
        let edges = model.discretizer.edges(i);
        bytes.extend_from_slice(&(edges.len() as u64).to_le_bytes());
        push_f64s(&mut bytes, edges);
    }
    for field in &model.fields {
        push_f64s(&mut bytes, field);
    }
    bytes.extend_from_slice(&(model.couplings.data().len() as u64).to_le_bytes());
    push_f64s(&mut bytes, model.couplings.data());
    fs::write(path, bytes)?;
    Ok(())
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

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Reads a model written by [`save_efc`].
pub fn load_efc(path: &Path) -> Result<EfcModel> {
    let bytes = fs::read(path)?;
    let mut c = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if c.take(4)? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = c.take(1)?[0];
    if version != VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let q_bins = c.u64()? as usize;
    let alpha = c.f64()?;
    let quantile = c.f64()?;
    let cutoff = c.f64()?;
    let n = c.u64()? as usize;
    if n == 0 || n > 1 << 20 {
        return Err(corrupt("implausible feature count"));
    }
    let mut edges = Vec::with_capacity(n);
    for _ in 0..n {
        let len = c.u64()? as usize;
        edges.push(c.f64s(len)?);
    }
    let bins: Vec<usize> = edges.iter().map(|e| e.len() + 1).collect();
    let mut fields = Vec::with_capacity(n);
    for &b in &bins {
        fields.push(c.f64s(b)?);
    }
    let coupling_len = c.u64()? as usize;
    let expected: usize = {
        let mut total = 0;
        for i in 0..n {
            for j in i + 1..n {
                total += (bins[i] - 1) * (bins[j] - 1);
            }
        }
        total
    };
    if coupling_len != expected {
        return Err(corrupt("coupling buffer length disagrees with bin edges"));
    }
    let data = c.f64s(coupling_len)?;
    if c.pos != bytes.len() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(EfcModel {
        discretizer: Discretizer::from_edges(edges, q_bins),
        fields,
        couplings: PairTensor::from_parts(bins, data),
        cutoff,
        quantile,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_dataset;
    use crate::efc::{fit_efc, EfcConfig};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let features: Vec<f64> = (0..300 * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let ds = test_dataset(features, 3, vec![0; 300]);
        let model = fit_efc(
            &ds,
            &EfcConfig {
                q_bins: 4,
                ..Default::default()
            },
        )
        .unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.efc");
        save_efc(&model, &path).unwrap();
        let back = load_efc(&path).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.efc");
        fs::write(&path, b"FNEFxxxx").unwrap();
        assert!(matches!(load_efc(&path), Err(Error::CorruptFile { .. })));
    }
}
