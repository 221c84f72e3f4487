//! Mean-field inverse-Potts model over discretized flows.
//!
//! Single-site and pairwise bin frequencies are estimated from benign
//! training flows with a pseudocount blend, couplings come from the negative
//! of the regularized inverse of the centered pairwise-covariance matrix
//! (built over all bins but the last of each feature, which acts as the
//! gauge), and local fields follow from the mean-field self-consistency
//! relation against that reference bin. A flow's energy is the negated sum
//! of its couplings and fields; benign traffic concentrates at low energy
//! and the cutoff sits at a quantile of the training energies.

use nalgebra::DMatrix;

use crate::dataset::FlowDataset;
use crate::efc::discretize::{fit_discretizer, Discretizer};
use crate::efc::EfcConfig;
use crate::error::{Error, Result};
use crate::stats::nearest_rank_quantile;

/// Pairwise couplings e_ij(a, b), stored once per unordered feature pair so
/// the symmetry e_ij(a, b) = e_ji(b, a) holds exactly by construction.
/// Couplings touching a feature's last (reference) bin are zero.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PairTensor {
    n_features: usize,
    bins: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl PairTensor {
    fn zeros(bins: &[usize]) -> Self {
        let n = bins.len();
        let mut offsets = Vec::with_capacity(n * (n - 1) / 2);
        let mut len = 0;
        for i in 0..n {
            for j in i + 1..n {
                offsets.push(len);
                len += (bins[i] - 1) * (bins[j] - 1);
            }
        }
        Self {
            n_features: n,
            bins: bins.to_vec(),
            offsets,
            data: vec![0.0; len],
        }
    }

    pub(crate) fn from_parts(bins: Vec<usize>, data: Vec<f64>) -> Self {
        let mut t = Self::zeros(&bins);
        assert_eq!(t.data.len(), data.len(), "coupling buffer length mismatch");
        t.data = data;
        t
    }

    pub(crate) fn data(&self) -> &[f64] {
        &self.data
    }

    fn pair_offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        self.offsets[i * self.n_features - i * (i + 1) / 2 + (j - i - 1)]
    }

    fn set(&mut self, i: usize, a: usize, j: usize, b: usize, value: f64) {
        debug_assert!(i < j && a < self.bins[i] && b < self.bins[j]);
        let off = self.pair_offset(i, j);
        self.data[off + (a - 1) * (self.bins[j] - 1) + (b - 1)] = value;
    }

    /// Coupling for features `i`, `j` at 1-based bins `a`, `b`.
    pub(crate) fn get(&self, i: usize, a: usize, j: usize, b: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        if i > j {
            return self.get(j, b, i, a);
        }
        if a == self.bins[i] || b == self.bins[j] {
            return 0.0; // reference-bin gauge
        }
        let off = self.pair_offset(i, j);
        self.data[off + (a - 1) * (self.bins[j] - 1) + (b - 1)]
    }
}

/// Fitted Energy Flow Classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct EfcModel {
    pub(crate) discretizer: Discretizer,
    /// h_i(a) indexed `[feature][bin - 1]`; the last bin is the gauge zero.
    pub(crate) fields: Vec<Vec<f64>>,
    pub(crate) couplings: PairTensor,
    pub cutoff: f64,
    pub quantile: f64,
    pub alpha: f64,
}

impl EfcModel {
    pub fn n_features(&self) -> usize {
        self.discretizer.n_features()
    }

    pub fn discretizer(&self) -> &Discretizer {
        &self.discretizer
    }

    /// Coupling accessor used by tests and persistence; bins are 1-based.
    pub fn coupling(&self, i: usize, a: usize, j: usize, b: usize) -> f64 {
        self.couplings.get(i, a, j, b)
    }

    pub fn field(&self, i: usize, a: usize) -> f64 {
        self.fields[i][a - 1]
    }

    /// Energies of every row of a dataset.
    pub fn energies(&self, ds: &FlowDataset) -> Result<Vec<f64>> {
        ds.rows().map(|row| energy_of_row(self, row)).collect()
    }
}

fn energy_of_row(model: &EfcModel, row: &[f64]) -> Result<f64> {
    if row.len() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: row.len(),
        });
    }
    let mut bins = Vec::with_capacity(row.len());
    model.discretizer.discretize_row(row, &mut bins);
    let n = row.len();
    let mut h = 0.0;
    for i in 0..n {
        h -= model.fields[i][bins[i] - 1];
        for j in i + 1..n {
            h -= model.couplings.get(i, bins[i], j, bins[j]);
        }
    }
    Ok(h)
}

/// Energy of a single flow under the model.
pub fn energy(model: &EfcModel, row: &[f64]) -> Result<f64> {
    energy_of_row(model, row)
}

/// Binary predictions for a dataset: 1 (malicious) iff energy is strictly
/// above the cutoff.
pub fn predict(model: &EfcModel, ds: &FlowDataset) -> Result<Vec<u8>> {
    if ds.n_features() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: ds.n_features(),
        });
    }
    Ok(model
        .energies(ds)?
        .into_iter()
        .map(|e| u8::from(e > model.cutoff))
        .collect())
}

/// Fits the inverse-Potts model on benign training flows and places the
/// cutoff at the configured quantile of their energies.
pub fn fit_efc(benign_train: &FlowDataset, cfg: &EfcConfig) -> Result<EfcModel> {
    if benign_train.labels().iter().any(|&l| l != 0) {
        return Err(Error::InvalidParameter {
            name: "benign_train",
            reason: "contains attack rows; fit the EFC on benign flows only".into(),
        });
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("{} outside (0, 1)", cfg.alpha),
        });
    }
    if !(cfg.quantile > 0.0 && cfg.quantile < 1.0) {
        return Err(Error::InvalidParameter {
            name: "quantile",
            reason: format!("{} outside (0, 1)", cfg.quantile),
        });
    }
    let rows = benign_train.n_rows();
    let needed = 10 * cfg.q_bins;
    if rows < needed {
        return Err(Error::TooFewRows { needed, got: rows });
    }

    let n = benign_train.n_features();
    let discretizer = fit_discretizer(benign_train.features(), n, cfg.q_bins)?;
    let bins: Vec<usize> = (0..n).map(|i| discretizer.bins(i)).collect();

    // discretize the whole training set once
    let mut row_bins: Vec<usize> = Vec::with_capacity(rows * n);
    let mut scratch = Vec::with_capacity(n);
    for row in benign_train.rows() {
        discretizer.discretize_row(row, &mut scratch);
        row_bins.extend_from_slice(&scratch);
    }

    // single-site frequencies with the pseudocount blend
    let alpha = cfg.alpha;
    let mut singles: Vec<Vec<f64>> = bins.iter().map(|&q| vec![0.0; q]).collect();
    for r in 0..rows {
        for i in 0..n {
            singles[i][row_bins[r * n + i] - 1] += 1.0;
        }
    }
    for (i, counts) in singles.iter_mut().enumerate() {
        let q = bins[i] as f64;
        for c in counts.iter_mut() {
            *c = (1.0 - alpha) * (*c / rows as f64) + alpha / q;
        }
    }

    // pairwise frequencies, full Q_i x Q_j per pair
    let n_pairs = n * (n - 1) / 2;
    let mut pair_counts: Vec<Vec<f64>> = Vec::with_capacity(n_pairs);
    for i in 0..n {
        for j in i + 1..n {
            pair_counts.push(vec![0.0; bins[i] * bins[j]]);
        }
    }
    let pair_index = |i: usize, j: usize| i * n - i * (i + 1) / 2 + (j - i - 1);
    for r in 0..rows {
        let rb = &row_bins[r * n..(r + 1) * n];
        for i in 0..n {
            for j in i + 1..n {
                pair_counts[pair_index(i, j)][(rb[i] - 1) * bins[j] + (rb[j] - 1)] += 1.0;
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let qq = (bins[i] * bins[j]) as f64;
            for c in pair_counts[pair_index(i, j)].iter_mut() {
                *c = (1.0 - alpha) * (*c / rows as f64) + alpha / qq;
            }
        }
    }

    // centered covariance over every bin except each feature's last
    let reduced: Vec<usize> = bins.iter().map(|&q| q - 1).collect();
    let dim: usize = reduced.iter().sum();
    let mut feature_base = Vec::with_capacity(n);
    let mut acc = 0;
    for &r in &reduced {
        feature_base.push(acc);
        acc += r;
    }

    let mut couplings = PairTensor::zeros(&bins);
    let mut fields: Vec<Vec<f64>> = bins.iter().map(|&q| vec![0.0; q]).collect();

    if dim > 0 {
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            for a in 1..bins[i] {
                let row_idx = feature_base[i] + a - 1;
                for j in 0..n {
                    for b in 1..bins[j] {
                        let col_idx = feature_base[j] + b - 1;
                        let joint = if i == j {
                            if a == b {
                                singles[i][a - 1]
                            } else {
                                0.0
                            }
                        } else if i < j {
                            pair_counts[pair_index(i, j)][(a - 1) * bins[j] + (b - 1)]
                        } else {
                            pair_counts[pair_index(j, i)][(b - 1) * bins[i] + (a - 1)]
                        };
                        cov[(row_idx, col_idx)] = joint - singles[i][a - 1] * singles[j][b - 1];
                    }
                }
            }
        }
        for k in 0..dim {
            cov[(k, k)] += cfg.ridge;
        }

        let inverse = cov.try_inverse().ok_or(Error::SingularCovariance)?;

        for i in 0..n {
            for j in i + 1..n {
                for a in 1..bins[i] {
                    for b in 1..bins[j] {
                        let v = -inverse[(feature_base[i] + a - 1, feature_base[j] + b - 1)];
                        couplings.set(i, a, j, b, v);
                    }
                }
            }
        }

        // self-consistent local fields against the reference bin
        for i in 0..n {
            let f_ref = singles[i][bins[i] - 1];
            for a in 1..bins[i] {
                let mut h = (singles[i][a - 1] / f_ref).ln();
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    for b in 1..bins[j] {
                        h -= couplings.get(i, a, j, b) * singles[j][b - 1];
                    }
                }
                fields[i][a - 1] = h;
            }
        }
    }

    let mut model = EfcModel {
        discretizer,
        fields,
        couplings,
        cutoff: 0.0,
        quantile: cfg.quantile,
        alpha,
    };
    let train_energies = model.energies(benign_train)?;
    model.cutoff = nearest_rank_quantile(&train_energies, cfg.quantile);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_dataset;
    use crate::efc::EfcConfig;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(q_bins: usize, alpha: f64) -> EfcConfig {
        EfcConfig {
            q_bins,
            alpha,
            quantile: 0.95,
            ridge: 1e-6,
        }
    }

    fn benign(features: Vec<f64>, n: usize) -> FlowDataset {
        let rows = features.len() / n;
        test_dataset(features, n, vec![0; rows])
    }

    /// Independent uniform features.
    fn independent_sample(rows: usize, n: usize, seed: u64) -> FlowDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        benign((0..rows * n).map(|_| rng.gen_range(0.0..1.0)).collect(), n)
    }

    fn max_abs_coupling(model: &EfcModel) -> f64 {
        let n = model.n_features();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                for a in 1..=model.discretizer.bins(i) {
                    for b in 1..=model.discretizer.bins(j) {
                        worst = worst.max(model.coupling(i, a, j, b).abs());
                    }
                }
            }
        }
        worst
    }

    #[test]
    fn zero_model_scores_zero_energy() {
        let ds = independent_sample(30, 2, 0);
        let mut model = fit_efc(&independent_sample(200, 2, 1), &cfg(2, 0.5)).unwrap();
        model.fields.iter_mut().flatten().for_each(|h| *h = 0.0);
        model.couplings.data.iter_mut().for_each(|e| *e = 0.0);
        for row in ds.rows() {
            assert_eq!(energy(&model, row).unwrap(), 0.0);
        }
    }

    #[test]
    fn independent_features_have_near_zero_couplings() {
        let alpha = 0.05;
        let model = fit_efc(&independent_sample(2000, 2, 7), &cfg(2, alpha)).unwrap();
        let worst = max_abs_coupling(&model);
        assert!(worst < 10.0 * alpha, "max coupling {worst}");
    }

    #[test]
    fn larger_pseudocount_shrinks_couplings() {
        let sample = independent_sample(1500, 3, 13);
        let loose = fit_efc(&sample, &cfg(2, 0.05)).unwrap();
        let tight = fit_efc(&sample, &cfg(2, 0.5)).unwrap();
        assert!(max_abs_coupling(&tight) < max_abs_coupling(&loose));
    }

    #[test]
    fn correlated_features_couple_harder_than_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rows = 1500;
        // perfectly correlated pair of binary-valued features
        let mut correlated = Vec::with_capacity(rows * 2);
        for _ in 0..rows {
            let v = if rng.gen_bool(0.5) { 0.9 } else { 0.1 };
            correlated.extend_from_slice(&[v, v]);
        }
        let corr_model = fit_efc(&benign(correlated, 2), &cfg(2, 0.1)).unwrap();
        let indep_model = fit_efc(&independent_sample(rows, 2, 18), &cfg(2, 0.1)).unwrap();
        assert!(max_abs_coupling(&corr_model) > max_abs_coupling(&indep_model));
    }

    #[test]
    fn coupling_symmetry_is_exact() {
        let model = fit_efc(&independent_sample(500, 4, 23), &cfg(3, 0.3)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for a in 1..=model.discretizer.bins(i) {
                    for b in 1..=model.discretizer.bins(j) {
                        assert_eq!(model.coupling(i, a, j, b), model.coupling(j, b, i, a));
                    }
                }
            }
        }
    }

    #[test]
    fn cutoff_is_the_nearest_rank_quantile() {
        // 100 distinct-energy rows at q = 0.95: exactly 5 strictly above
        let train = independent_sample(100, 6, 29);
        let model = fit_efc(&train, &cfg(8, 0.5)).unwrap();
        let energies = model.energies(&train).unwrap();
        let above = energies.iter().filter(|&&e| e > model.cutoff).count();
        assert_eq!(above, 5);
    }

    #[test]
    fn fit_is_deterministic() {
        let train = independent_sample(400, 3, 31);
        let a = fit_efc(&train, &cfg(4, 0.5)).unwrap();
        let b = fit_efc(&train, &cfg(4, 0.5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fresh_benign_sample_mostly_scores_under_the_cutoff() {
        let model = fit_efc(&independent_sample(1500, 4, 37), &cfg(4, 0.5)).unwrap();
        let fresh = independent_sample(1500, 4, 38);
        let energies = model.energies(&fresh).unwrap();
        let below = energies.iter().filter(|&&e| e <= model.cutoff).count() as f64;
        let frac = below / 1500.0;
        assert!((frac - 0.95).abs() < 0.04, "fraction below cutoff {frac}");
    }

    #[test]
    fn energy_ignores_within_bin_changes() {
        let train = independent_sample(300, 2, 41);
        let model = fit_efc(&train, &cfg(2, 0.5)).unwrap();
        let edge = model.discretizer.edges(0)[0];
        let base = [edge - 0.05, 0.5];
        let nudged = [edge - 0.01, 0.5]; // same bin, different value
        assert_eq!(
            energy(&model, &base).unwrap(),
            energy(&model, &nudged).unwrap()
        );
    }

    #[test]
    fn predictions_follow_the_strict_cutoff_rule() {
        // 6 features x 8 bins keeps training energies distinct
        let train = independent_sample(300, 6, 43);
        let model = fit_efc(&train, &cfg(8, 0.5)).unwrap();
        let preds = predict(&model, &train).unwrap();
        let energies = model.energies(&train).unwrap();
        for (p, e) in preds.iter().zip(&energies) {
            assert_eq!(*p, u8::from(*e > model.cutoff));
        }
        // mean prediction on the fitting set is about 1 - q
        let rate = preds.iter().map(|&p| p as f64).sum::<f64>() / preds.len() as f64;
        assert!(rate <= 0.05 + 1e-12 && rate >= 0.05 - 1.0 / 300.0 - 1e-12, "rate {rate}");
    }

    #[test]
    fn rejects_attack_rows_and_thin_data() {
        let mixed = test_dataset(vec![0.1; 40], 2, {
            let mut l = vec![0u8; 20];
            l[3] = 1;
            l
        });
        assert!(matches!(
            fit_efc(&mixed, &cfg(2, 0.5)),
            Err(Error::InvalidParameter { .. })
        ));
        let thin = independent_sample(15, 2, 47);
        assert!(matches!(
            fit_efc(&thin, &cfg(2, 0.5)),
            Err(Error::TooFewRows { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let model = fit_efc(&independent_sample(200, 2, 53), &cfg(2, 0.5)).unwrap();
        assert!(matches!(
            energy(&model, &[0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
