//! Quantile discretization of continuous flow features into ordinal bins.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature ordered bin edges. A value maps to bin `k` (1-based) when it
/// lies in `(edge[k-2], edge[k-1]]`, with the open ends on either side; every
/// real value lands in exactly one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    edges: Vec<Vec<f64>>,
    q_bins: usize,
}

impl Discretizer {
    pub(crate) fn from_edges(edges: Vec<Vec<f64>>, q_bins: usize) -> Self {
        Self { edges, q_bins }
    }

    pub fn n_features(&self) -> usize {
        self.edges.len()
    }

    /// Requested bin count.
    pub fn q_bins(&self) -> usize {
        self.q_bins
    }

    /// Effective bin count for one feature; duplicate quantile edges collapse,
    /// so this may be below the requested count (1 for a constant feature).
    pub fn bins(&self, feature: usize) -> usize {
        self.edges[feature].len() + 1
    }

    pub fn edges(&self, feature: usize) -> &[f64] {
        &self.edges[feature]
    }

    /// 1-based bin of a value.
    pub fn bin(&self, feature: usize, value: f64) -> usize {
        self.edges[feature].partition_point(|&e| e < value) + 1
    }

    /// Discretizes one row into per-feature bins.
    pub fn discretize_row(&self, row: &[f64], out: &mut Vec<usize>) {
        out.clear();
        for (i, &v) in row.iter().enumerate() {
            out.push(self.bin(i, v));
        }
    }
}

/// Places bin edges at the empirical k/Q quantiles (nearest rank) of each
/// column. Edges equal to the column maximum or to the previous edge are
/// dropped, so constant columns end up with a single bin.
pub fn fit_discretizer(features: &[f64], n_features: usize, q_bins: usize) -> Result<Discretizer> {
    if q_bins < 2 {
        return Err(Error::InvalidParameter {
            name: "q_bins",
            reason: "need at least 2 bins".into(),
        });
    }
    if features.is_empty() || n_features == 0 {
        return Err(Error::EmptyDataset);
    }
    let rows = features.len() / n_features;
    let mut edges = Vec::with_capacity(n_features);
    let mut column = Vec::with_capacity(rows);
    for j in 0..n_features {
        column.clear();
        column.extend((0..rows).map(|i| features[i * n_features + j]));
        column.sort_by(|a, b| a.partial_cmp(b).expect("non-finite feature value"));
        let col_max = *column.last().unwrap();
        // an edge at the column maximum separates nothing; substitute the
        // largest strictly smaller value so a non-constant column never
        // collapses to one bin (heavily skewed two-valued columns otherwise
        // would)
        let below_max = column[..column.partition_point(|&v| v < col_max)]
            .last()
            .copied();
        let mut col_edges: Vec<f64> = Vec::with_capacity(q_bins - 1);
        for k in 1..q_bins {
            // nearest-rank quantile at k/Q
            let rank = (k * rows).div_ceil(q_bins);
            let mut edge = column[rank.saturating_sub(1)];
            if edge >= col_max {
                match below_max {
                    Some(v) => edge = v,
                    None => continue, // constant column
                }
            }
            if col_edges.last() != Some(&edge) {
                col_edges.push(edge);
            }
        }
        edges.push(col_edges);
    }
    Ok(Discretizer::from_edges(edges, q_bins))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_bins_split_near_the_median() {
        let col: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let d = fit_discretizer(&col, 1, 2).unwrap();
        assert_eq!(d.bins(0), 2);
        let edge = d.edges(0)[0];
        assert!((edge - 49.5).abs() <= 0.5, "edge {edge}");
        assert_eq!(d.bin(0, 10.0), 1);
        assert_eq!(d.bin(0, 90.0), 2);
    }

    #[test]
    fn constant_column_collapses_to_one_bin() {
        let col = vec![5.0; 40];
        let d = fit_discretizer(&col, 1, 4).unwrap();
        assert_eq!(d.bins(0), 1);
        for v in [4.0, 5.0, 6.0] {
            assert_eq!(d.bin(0, v), 1);
        }
    }

    #[test]
    fn uniform_sample_fills_quartiles_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let train: Vec<f64> = (0..4000).map(|_| rng.gen_range(0.0..1.0)).collect();
        let d = fit_discretizer(&train, 1, 4).unwrap();
        assert_eq!(d.bins(0), 4);

        let fresh: Vec<f64> = (0..4000).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut counts = [0usize; 4];
        for v in fresh {
            counts[d.bin(0, v) - 1] += 1;
        }
        for c in counts {
            let share = c as f64 / 4000.0;
            assert!((share - 0.25).abs() < 0.05, "share {share}");
        }
    }

    #[test]
    fn every_value_maps_to_exactly_one_bin() {
        let col = vec![1.0, 2.0, 2.0, 3.0, 4.0, 10.0];
        let d = fit_discretizer(&col, 1, 3).unwrap();
        for v in [-1e9, 1.0, 2.0, 2.5, 4.0, 10.0, 1e9] {
            let b = d.bin(0, v);
            assert!((1..=d.bins(0)).contains(&b), "value {v} -> bin {b}");
        }
    }

    #[test]
    fn rejects_empty_and_degenerate_q() {
        assert!(fit_discretizer(&[], 1, 4).is_err());
        assert!(fit_discretizer(&[1.0], 1, 1).is_err());
    }
}
