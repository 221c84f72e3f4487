//! CSV ingestion: turns a flow CSV into a [`FlowDataset`], moving identifier
//! and excluded columns out of the feature matrix.

use std::path::Path;

use crate::dataset::{FlowDataset, FlowSchema, Provenance};
use crate::error::{Error, Result};

/// Loads a header-carrying CSV under the given schema.
///
/// Feature names left empty in the schema are inferred from the header:
/// every column that is not an identifier, not excluded and not the label.
/// Identifier and excluded columns present in the header are dropped from
/// the feature matrix and recorded in the provenance.
pub fn load_csv(path: &Path, schema: &FlowSchema) -> Result<FlowDataset> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let find = |name: &str| header.iter().position(|h| h == name);

    let label_idx = find(&schema.label_column)
        .ok_or_else(|| Error::MissingColumn(schema.label_column.clone()))?;

    // explicitly listed features must exist; identifier/excluded names are a
    // drop-list and only matter when present
    for name in &schema.feature_names {
        if find(name).is_none() {
            return Err(Error::MissingColumn(name.clone()));
        }
    }

    let non_feature = |name: &String| {
        schema.identifier_columns.contains(name)
            || schema.excluded_columns.contains(name)
            || *name == schema.label_column
    };
    let feature_names: Vec<String> = if schema.feature_names.is_empty() {
        header.iter().filter(|h| !non_feature(h)).cloned().collect()
    } else {
        if let Some(clash) = schema.feature_names.iter().find(|f| non_feature(f)) {
            return Err(Error::SchemaMismatch(format!(
                "column `{clash}` is listed both as a feature and as identifier/excluded/label"
            )));
        }
        schema.feature_names.clone()
    };
    let feature_idx: Vec<usize> = feature_names
        .iter()
        .map(|n| find(n).expect("presence checked above"))
        .collect();

    let dropped: Vec<String> = header
        .iter()
        .filter(|h| {
            schema.identifier_columns.contains(h) || schema.excluded_columns.contains(h)
        })
        .cloned()
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_no + 1; // 1-based data row for error messages
        for (&idx, name) in feature_idx.iter().zip(&feature_names) {
            let cell = record.get(idx).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonNumericCell {
                    row,
                    column: name.clone(),
                    value: cell.to_string(),
                });
            }
            features.push(value);
        }
        let label_cell = record.get(label_idx).unwrap_or("").trim();
        let label = match label_cell.parse::<f64>() {
            Ok(v) if v == 0.0 => 0u8,
            Ok(v) if v == 1.0 => 1u8,
            _ => {
                return Err(Error::InvalidLabel {
                    row,
                    value: label_cell.to_string(),
                })
            }
        };
        labels.push(label);
    }

    let silo = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let resolved = FlowSchema {
        feature_names,
        identifier_columns: schema.identifier_columns.clone(),
        label_column: schema.label_column.clone(),
        excluded_columns: schema.excluded_columns.clone(),
    };
    FlowDataset::new(
        features,
        resolved.feature_names.len(),
        labels,
        resolved,
        Provenance {
            silo,
            tag: String::new(),
            dropped_columns: dropped,
            flags: Vec::new(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn schema() -> FlowSchema {
        FlowSchema {
            feature_names: vec![],
            identifier_columns: vec!["IPV4_SRC_ADDR".into()],
            label_column: "Label".into(),
            excluded_columns: vec!["Attack".into()],
        }
    }

    #[test]
    fn parses_features_and_labels() {
        let f = write_csv("a,b,Label\n1.0,2.0,0\n3.5,4.5,1\n5.0,6.0,0\n");
        let ds = load_csv(f.path(), &schema()).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.row(1), &[3.5, 4.5]);
        assert_eq!(ds.labels(), &[0, 1, 0]);
    }

    #[test]
    fn identifier_column_moves_to_provenance() {
        let f = write_csv("IPV4_SRC_ADDR,a,Label\n10,1.0,0\n11,2.0,1\n");
        let ds = load_csv(f.path(), &schema()).unwrap();
        assert_eq!(ds.schema.feature_names, vec!["a".to_string()]);
        assert_eq!(ds.n_features(), 1);
        assert!(ds
            .provenance
            .dropped_columns
            .contains(&"IPV4_SRC_ADDR".to_string()));
    }

    #[test]
    fn bad_label_names_the_row() {
        let f = write_csv("a,Label\n1.0,0\n2.0,2\n");
        match load_csv(f.path(), &schema()) {
            Err(Error::InvalidLabel { row, value }) => {
                assert_eq!(row, 2);
                assert_eq!(value, "2");
            }
            other => panic!("expected InvalidLabel, got {other:?}"),
        }
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        let f = write_csv("a,b,Label\n1.0,x,0\n");
        match load_csv(f.path(), &schema()) {
            Err(Error::NonNumericCell { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "b");
            }
            other => panic!("expected NonNumericCell, got {other:?}"),
        }
    }

    #[test]
    fn missing_label_column_is_a_schema_error() {
        let f = write_csv("a,b\n1.0,2.0\n");
        match load_csv(f.path(), &schema()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "Label"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }
}
