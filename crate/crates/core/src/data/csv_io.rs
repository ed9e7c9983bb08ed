use super::{DataError, Dataset};
use ndarray::{Array1, Array2};
use std::path::Path;

/// Column roles when reading or writing a dataset as CSV.
#[derive(Clone, Debug)]
pub struct CsvColumns<'a> {
    pub label: &'a str,
    /// Subtype ground truth; empty cells mean "no subtype".
    pub subtype: Option<&'a str>,
}

impl Default for CsvColumns<'_> {
    fn default() -> Self {
        Self { label: "y", subtype: Some("subtype") }
    }
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64, DataError> {
    let value: f64 = cell.trim().parse().map_err(|_| DataError::Parse {
        row,
        column: column.to_string(),
        value: cell.to_string(),
    })?;
    if !value.is_finite() {
        return Err(DataError::NonFinite { row, column: column.to_string(), value: cell.to_string() });
    }
    Ok(value)
}

/// Reads a headered, comma-separated file. Every column other than the label
/// and subtype columns becomes a feature, in file order. Row indices in
/// errors are 1-based data rows (the header is row 0).
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, subtype_column: Option<&str>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => DataError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        },
        _ => DataError::Csv(e),
    })?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let label_idx = find(label_column)?;
    let subtype_idx = subtype_column.map(find).transpose()?;
    let feature_idx: Vec<usize> = (0..headers.len()).filter(|&i| i != label_idx && Some(i) != subtype_idx).collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut subtypes = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        for &j in &feature_idx {
            values.push(parse_cell(&record[j], row, &headers[j])?);
        }
        labels.push(parse_cell(&record[label_idx], row, label_column)?);
        if let Some(j) = subtype_idx {
            let cell = record[j].trim();
            subtypes.push(if cell.is_empty() {
                None
            } else {
                Some(cell.parse::<usize>().map_err(|_| DataError::Parse {
                    row,
                    column: headers[j].clone(),
                    value: cell.to_string(),
                })?)
            });
        }
    }
    let n = labels.len();
    let features = Array2::from_shape_vec((n, feature_idx.len()), values).map_err(|e| DataError::Invalid(e.to_string()))?;
    let names = feature_idx.iter().map(|&j| headers[j].clone()).collect();
    Dataset::new(features, Array1::from(labels), subtype_idx.map(|_| subtypes), Some(names))
}

/// Writes features, then the label column, then the subtype column when the
/// dataset carries one. Floats use the shortest representation that parses
/// back to the same value.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>, columns: &CsvColumns<'_>) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path)?;
    let d = dataset.n_features();
    let mut header: Vec<String> = match &dataset.feature_names {
        Some(names) => names.clone(),
        None => (1..=d).map(|j| format!("x{j}")).collect(),
    };
    header.push(columns.label.to_string());
    let subtype = dataset.subtype_truth.as_ref().zip(columns.subtype);
    if let Some((_, name)) = subtype {
        header.push(name.to_string());
    }
    writer.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..dataset.n_samples() {
        record.clear();
        record.extend(dataset.features.row(i).iter().map(|v| v.to_string()));
        record.push(dataset.labels[i].to_string());
        if let Some((truth, _)) = subtype {
            record.push(truth[i].map(|s| s.to_string()).unwrap_or_default());
        }
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_three_rows() {
        let f = write_tmp("x1,x2,y\n0.5,1,-1\n2,3,1\n-1.5,0,1\n");
        let d = load_csv(f.path(), "y", None).unwrap();
        assert_eq!((d.n_samples(), d.n_features()), (3, 2));
        assert_eq!(d.labels.to_vec(), vec![-1.0, 1.0, 1.0]);
        assert_eq!(d.feature_names.unwrap(), vec!["x1", "x2"]);
    }

    #[test]
    fn label_column_can_sit_anywhere() {
        let f = write_tmp("y,a,subtype,b\n1,1,0,2\n-1,3,,4\n");
        let d = load_csv(f.path(), "y", Some("subtype")).unwrap();
        assert_eq!(d.features.row(1).to_vec(), vec![3.0, 4.0]);
        assert_eq!(d.subtype_truth.unwrap(), vec![Some(0), None]);
    }

    #[test]
    fn nan_cell_is_reported_at_its_position() {
        let f = write_tmp("x1,x2,y\n0,1,1\n2,NaN,-1\n");
        match load_csv(f.path(), "y", None).unwrap_err() {
            DataError::NonFinite { row, column, .. } => assert_eq!((row, column.as_str()), (2, "x2")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn garbage_cell_is_a_parse_error() {
        let f = write_tmp("x1,y\nabc,1\n");
        assert!(matches!(load_csv(f.path(), "y", None).unwrap_err(), DataError::Parse { row: 1, .. }));
    }

    #[test]
    fn missing_label_column_is_named() {
        let f = write_tmp("x1,x2\n0,1\n");
        match load_csv(f.path(), "label", None).unwrap_err() {
            DataError::MissingColumn(name) => assert_eq!(name, "label"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
