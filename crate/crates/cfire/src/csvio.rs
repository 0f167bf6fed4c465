//! CSV datasets, class-id columns and logits tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use cfire_core::{ClassId, Dataset, LookupOracle};

use crate::error::{CliError, Result};

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::data(path, e.to_string())
}

/// Reads a header-first numeric CSV. With `label_column`, that column becomes
/// the labels: integer values are used as class ids, anything else is mapped
/// to ids by sorted distinct value.
pub fn load_csv(path: &Path, label_column: Option<&str>) -> Result<Dataset> {
    let mut rdr = reader(path)?;
    let headers: Vec<String> =
        rdr.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_owned).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(CliError::data(path, "empty file"));
    }
    let mut seen = BTreeSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(CliError::data(path, format!("duplicate column name `{h}`")));
        }
    }
    let label_idx = match label_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CliError::data(path, format!("no column named `{name}`")))?,
        ),
        None => None,
    };

    let mut samples = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let mut x = Vec::with_capacity(headers.len());
        for (col, cell) in record.iter().enumerate() {
            if Some(col) == label_idx {
                raw_labels.push(cell.to_owned());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                CliError::data(
                    path,
                    format!("row {}, column `{}`: `{cell}` is not a number", row + 1, headers[col]),
                )
            })?;
            if !v.is_finite() {
                return Err(CliError::data(
                    path,
                    format!("row {}, column `{}`: non-finite value", row + 1, headers[col]),
                ));
            }
            x.push(v);
        }
        samples.push(x);
    }
    if samples.is_empty() {
        return Err(CliError::data(path, "no data rows"));
    }
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let labels = label_idx.map(|_| encode_labels(&raw_labels));
    Dataset::new(samples, labels, names).map_err(|e| CliError::data(path, e.to_string()))
}

fn encode_labels(raw: &[String]) -> Vec<ClassId> {
    if let Ok(ids) = raw.iter().map(|s| s.parse::<ClassId>()).collect::<Result<Vec<_>, _>>() {
        return ids;
    }
    let ids: BTreeMap<&str, ClassId> = raw
        .iter()
        .map(String::as_str)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    raw.iter().map(|s| ids[s.as_str()]).collect()
}

/// Writes the features, then the labels (if any) as a `label` column.
pub fn write_csv(path: &Path, ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header: Vec<&str> = ds.feature_names().iter().map(String::as_str).collect();
    if ds.labels().is_some() {
        header.push("label");
    }
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (i, x) in ds.samples().iter().enumerate() {
        let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
        if let Some(labels) = ds.labels() {
            row.push(labels[i].to_string());
        }
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One integer class id per row, header `class` or similar.
pub fn load_class_ids(path: &Path) -> Result<Vec<ClassId>> {
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != 1 {
            return Err(CliError::data(path, format!("row {}: expected one column", row + 1)));
        }
        out.push(record[0].parse().map_err(|_| {
            CliError::data(path, format!("row {}: `{}` is not a class id", row + 1, &record[0]))
        })?);
    }
    Ok(out)
}

/// One column per class.
pub fn load_logits(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let values = record
            .iter()
            .map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| CliError::data(path, format!("row {}: invalid logit", row + 1)))?;
        out.push(values);
    }
    Ok(out)
}

/// A black box that replays recorded predictions (and optionally logits)
/// for the rows of `samples_path`.
pub fn load_prediction_oracle(
    samples_path: &Path,
    predictions_path: &Path,
    logits_path: Option<&Path>,
) -> Result<(Dataset, LookupOracle)> {
    let samples = load_csv(samples_path, None)?;
    let predictions = load_class_ids(predictions_path)?;
    let logits = logits_path.map(load_logits).transpose()?;
    let oracle = LookupOracle::new(&samples, predictions, logits)
        .map_err(|e| CliError::data(predictions_path, e.to_string()))?;
    Ok((samples, oracle))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cfire_core::BlackBox;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn with_and_without_label() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "a,b,y\n1,2,0\n3,4,1\n5,6,0\n");
        let ds = load_csv(&p, Some("y")).unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.labels(), Some(&[0, 1, 0][..]));
        let ds = load_csv(&p, None).unwrap();
        assert_eq!(ds.dim(), 3);
        assert!(ds.labels().is_none());
    }

    #[test]
    fn parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "bad.csv", "a,b\n1,2\n3,abc\n");
        let msg = load_csv(&p, None).unwrap_err().to_string();
        assert!(msg.contains("row 2") && msg.contains("`b`"), "{msg}");
        let p = write(&dir, "dup.csv", "a,a\n1,2\n");
        assert!(load_csv(&p, None).is_err());
        let p = write(&dir, "empty.csv", "");
        assert!(load_csv(&p, None).is_err());
        assert!(load_csv(&dir.path().join("missing.csv"), None).is_err());
    }

    #[test]
    fn string_labels_are_encoded() {
        assert_eq!(encode_labels(&["b".into(), "a".into(), "b".into()]), vec![1, 0, 1]);
    }

    #[test]
    fn oracle_replays_table() {
        let dir = tempfile::tempdir().unwrap();
        let mut samples = String::from("u,v\n");
        let mut preds = String::from("class\n");
        for i in 0..100 {
            samples.push_str(&format!("{},{}\n", i, i * i % 7));
            preds.push_str(&format!("{}\n", i % 3));
        }
        let sp = write(&dir, "s.csv", &samples);
        let pp = write(&dir, "p.csv", &preds);
        let (ds, oracle) = load_prediction_oracle(&sp, &pp, None).unwrap();
        for (i, x) in ds.samples().iter().enumerate() {
            assert_eq!(oracle.predict(x).unwrap(), i % 3);
        }
        let short = write(&dir, "short.csv", "class\n0\n");
        assert!(load_prediction_oracle(&sp, &short, None).is_err());
    }
}
