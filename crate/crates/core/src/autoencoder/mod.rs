//! Dense deep autoencoder with a fixed funnel (input -> 32:16:8 -> 4 ->
//! 8:16:32 -> input), ReLU hidden activations and a sigmoid output layer.
//!
//! Parameters live in one flat `f64` vector described by a per-layer shape
//! manifest (weights row-major, then biases, layer by layer), so federated
//! aggregation can treat a model as a plain vector.

mod checkpoint;
mod train;

pub use checkpoint::{from_wire_bytes, load_checkpoint, save_checkpoint, to_wire_bytes};
pub use train::{train_epochs, AdamState, TrainConfig};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden widths between the variable-size input and output layers.
pub const HIDDEN_WIDTHS: [usize; 7] = [32, 16, 8, 4, 8, 16, 32];

/// Shape of one dense layer: `rows` outputs, `cols` inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub rows: usize,
    pub cols: usize,
}

impl LayerShape {
    pub fn param_count(&self) -> usize {
        self.rows * self.cols + self.rows
    }
}

/// The architecture is fully determined by the input dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AeArchitecture {
    pub input_dim: usize,
}

impl AeArchitecture {
    pub fn new(input_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidParameter {
                name: "input_dim",
                reason: "must be at least 1".into(),
            });
        }
        Ok(Self { input_dim })
    }

    /// The eight dense layers, in forward order.
    pub fn layer_shapes(&self) -> Vec<LayerShape> {
        let mut shapes = Vec::with_capacity(HIDDEN_WIDTHS.len() + 1);
        let mut prev = self.input_dim;
        for &w in &HIDDEN_WIDTHS {
            shapes.push(LayerShape { rows: w, cols: prev });
            prev = w;
        }
        shapes.push(LayerShape {
            rows: self.input_dim,
            cols: prev,
        });
        shapes
    }
}

/// Flat parameter vector plus its layer-shape manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct AeParams {
    flat: Vec<f64>,
    manifest: Vec<LayerShape>,
}

/// Total flat length for a manifest.
pub fn flat_len(manifest: &[LayerShape]) -> usize {
    manifest.iter().map(LayerShape::param_count).sum()
}

impl AeParams {
    /// Wraps a flat vector under a manifest, checking length and that
    /// consecutive layers are dimensionally compatible.
    pub fn from_flat(manifest: Vec<LayerShape>, flat: Vec<f64>) -> Result<Self> {
        if manifest.is_empty() {
            return Err(Error::InvalidParameter {
                name: "manifest",
                reason: "no layers".into(),
            });
        }
        for pair in manifest.windows(2) {
            if pair[1].cols != pair[0].rows {
                return Err(Error::InvalidParameter {
                    name: "manifest",
                    reason: format!(
                        "layer output {} feeds layer input {}",
                        pair[0].rows, pair[1].cols
                    ),
                });
            }
        }
        let expected = flat_len(&manifest);
        if flat.len() != expected {
            return Err(Error::BadParameterLength {
                expected,
                got: flat.len(),
            });
        }
        Ok(Self { flat, manifest })
    }

    pub fn manifest(&self) -> &[LayerShape] {
        &self.manifest
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn input_dim(&self) -> usize {
        self.manifest[0].cols
    }

    /// Flat copy of all parameters, layers in manifest order, weights before
    /// biases within each layer.
    pub fn get_parameters(&self) -> Vec<f64> {
        self.flat.clone()
    }

    /// New parameter set with the same manifest and the given flat vector.
    pub fn set_parameters(&self, flat: Vec<f64>) -> Result<Self> {
        Self::from_flat(self.manifest.clone(), flat)
    }
}

/// Glorot-uniform weights, zero biases, deterministic under the seed.
pub fn init_params(arch: &AeArchitecture, seed: u64) -> AeParams {
    let manifest = arch.layer_shapes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat = Vec::with_capacity(flat_len(&manifest));
    for shape in &manifest {
        let limit = (6.0 / (shape.cols + shape.rows) as f64).sqrt();
        for _ in 0..shape.rows * shape.cols {
            flat.push(rng.gen_range(-limit..=limit));
        }
        flat.extend(std::iter::repeat(0.0).take(shape.rows));
    }
    AeParams { flat, manifest }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Runs one row through the network, writing each layer's activation into
/// `activations[l + 1]` (`activations[0]` is the input itself).
fn forward_row(manifest: &[LayerShape], flat: &[f64], activations: &mut [Vec<f64>]) {
    let last = manifest.len() - 1;
    let mut offset = 0;
    for (l, shape) in manifest.iter().enumerate() {
        let (input, output) = {
            let (head, tail) = activations.split_at_mut(l + 1);
            (&head[l], &mut tail[0])
        };
        let weights = &flat[offset..offset + shape.rows * shape.cols];
        let biases = &flat[offset + shape.rows * shape.cols..offset + shape.param_count()];
        for r in 0..shape.rows {
            let mut z = biases[r];
            let w_row = &weights[r * shape.cols..(r + 1) * shape.cols];
            for (w, a) in w_row.iter().zip(input.iter()) {
                z += w * a;
            }
            output[r] = if l == last { sigmoid(z) } else { z.max(0.0) };
        }
        offset += shape.param_count();
    }
}

fn activation_buffers(manifest: &[LayerShape]) -> Vec<Vec<f64>> {
    let mut buffers = Vec::with_capacity(manifest.len() + 1);
    buffers.push(vec![0.0; manifest[0].cols]);
    for shape in manifest {
        buffers.push(vec![0.0; shape.rows]);
    }
    buffers
}

/// Reconstructs a row-major batch. Output has the same shape as the input.
pub fn forward(params: &AeParams, batch: &[f64], n_features: usize) -> Result<Vec<f64>> {
    if n_features != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            got: n_features,
        });
    }
    if n_features == 0 || batch.len() % n_features != 0 {
        return Err(Error::InvalidParameter {
            name: "batch",
            reason: "buffer length not a multiple of the feature count".into(),
        });
    }
    let mut activations = activation_buffers(&params.manifest);
    let mut out = Vec::with_capacity(batch.len());
    for row in batch.chunks_exact(n_features) {
        activations[0].copy_from_slice(row);
        forward_row(&params.manifest, &params.flat, &mut activations);
        out.extend_from_slice(activations.last().unwrap());
    }
    Ok(out)
}

/// Mean over all elements of the squared reconstruction error.
pub fn mse_loss(x: &[f64], x_hat: &[f64]) -> f64 {
    assert_eq!(x.len(), x_hat.len(), "mse_loss shape mismatch");
    if x.is_empty() {
        return 0.0;
    }
    let sq: f64 = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    sq / x.len() as f64
}

/// Per-row mean absolute reconstruction error, the anomaly score.
pub fn mae_per_sample(x: &[f64], x_hat: &[f64], n_features: usize) -> Vec<f64> {
    assert_eq!(x.len(), x_hat.len(), "mae_per_sample shape mismatch");
    x.chunks_exact(n_features)
        .zip(x_hat.chunks_exact(n_features))
        .map(|(row, rec)| {
            row.iter()
                .zip(rec)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / n_features as f64
        })
        .collect()
}

/// Mean-squared reconstruction loss of a batch and its exact gradient with
/// respect to the flat parameter vector.
pub(crate) fn loss_and_gradient(
    manifest: &[LayerShape],
    flat: &[f64],
    batch: &[f64],
    n_features: usize,
) -> (f64, Vec<f64>) {
    let n_rows = batch.len() / n_features;
    debug_assert!(n_rows > 0);
    let scale = 2.0 / (n_rows * n_features) as f64;

    let mut grad = vec![0.0; flat.len()];
    let mut activations = activation_buffers(manifest);
    let mut delta: Vec<f64> = Vec::new();
    let mut delta_prev: Vec<f64> = Vec::new();
    let mut total_sq = 0.0;

    // per-layer flat offsets
    let mut offsets = Vec::with_capacity(manifest.len());
    let mut off = 0;
    for shape in manifest {
        offsets.push(off);
        off += shape.param_count();
    }

    for row in batch.chunks_exact(n_features) {
        activations[0].copy_from_slice(row);
        forward_row(manifest, flat, &mut activations);

        // output delta: d(mse)/dz for the sigmoid layer
        let out = activations.last().unwrap();
        delta.clear();
        for (a, &x) in out.iter().zip(row) {
            let r = a - x;
            total_sq += r * r;
            delta.push(scale * r * a * (1.0 - a));
        }

        for l in (0..manifest.len()).rev() {
            let shape = &manifest[l];
            let off = offsets[l];
            let weights = &flat[off..off + shape.rows * shape.cols];
            let input = &activations[l];

            for r in 0..shape.rows {
                let d = delta[r];
                let g_row = &mut grad[off + r * shape.cols..off + (r + 1) * shape.cols];
                for (g, a) in g_row.iter_mut().zip(input.iter()) {
                    *g += d * a;
                }
                grad[off + shape.rows * shape.cols + r] += d;
            }

            if l > 0 {
                // delta for the previous (ReLU) layer
                delta_prev.clear();
                delta_prev.resize(shape.cols, 0.0);
                for r in 0..shape.rows {
                    let d = delta[r];
                    let w_row = &weights[r * shape.cols..(r + 1) * shape.cols];
                    for (dp, w) in delta_prev.iter_mut().zip(w_row) {
                        *dp += w * d;
                    }
                }
                for (dp, &a) in delta_prev.iter_mut().zip(input.iter()) {
                    if a <= 0.0 {
                        *dp = 0.0;
                    }
                }
                std::mem::swap(&mut delta, &mut delta_prev);
            }
        }
    }

    (total_sq / (n_rows * n_features) as f64, grad)
}

/// Exact gradient of `mse_loss(batch, forward(batch))` w.r.t. the flat
/// parameters.
pub fn gradient(params: &AeParams, batch: &[f64], n_features: usize) -> Result<Vec<f64>> {
    if n_features != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            got: n_features,
        });
    }
    if batch.is_empty() || batch.len() % n_features != 0 {
        return Err(Error::InvalidParameter {
            name: "batch",
            reason: "empty or ragged batch".into(),
        });
    }
    Ok(loss_and_gradient(&params.manifest, &params.flat, batch, n_features).1)
}
