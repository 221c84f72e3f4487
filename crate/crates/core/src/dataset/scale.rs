//! Per-feature min-max scaling, fit on the whole silo before any split.

use serde::{Deserialize, Serialize};

use crate::dataset::FlowDataset;
use crate::error::{Error, Result};

/// Per-feature minimum and maximum in original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub feature_names: Vec<String>,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

/// Fits min/max over every row of the silo.
pub fn fit_minmax(ds: &FlowDataset) -> Result<ScalerParams> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let m = ds.n_features();
    let mut mins = vec![f64::INFINITY; m];
    let mut maxs = vec![f64::NEG_INFINITY; m];
    for row in ds.rows() {
        for (j, &v) in row.iter().enumerate() {
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    Ok(ScalerParams {
        feature_names: ds.schema.feature_names.clone(),
        mins,
        maxs,
    })
}

/// Maps every value to (v - min) / (max - min), clamped to [0, 1]. Constant
/// features map to 0: they carry no information and this avoids a 0/0.
pub fn apply_minmax(ds: &FlowDataset, sc: &ScalerParams) -> Result<FlowDataset> {
    if sc.mins.len() != ds.n_features() {
        return Err(Error::SchemaMismatch(format!(
            "scaler fitted on {} features, dataset has {}",
            sc.mins.len(),
            ds.n_features()
        )));
    }
    if sc.feature_names != ds.schema.feature_names {
        return Err(Error::SchemaMismatch(
            "scaler feature names do not match the dataset schema".into(),
        ));
    }
    let m = ds.n_features();
    let mut scaled = Vec::with_capacity(ds.features().len());
    for row in ds.rows() {
        for j in 0..m {
            let range = sc.maxs[j] - sc.mins[j];
            let v = if range == 0.0 {
                0.0
            } else {
                ((row[j] - sc.mins[j]) / range).clamp(0.0, 1.0)
            };
            scaled.push(v);
        }
    }
    FlowDataset::new(
        scaled,
        m,
        ds.labels().to_vec(),
        ds.schema.clone(),
        ds.provenance.clone(),
    )
}
