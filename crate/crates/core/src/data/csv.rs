use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{FeatureMatrix, LabeledFeatureSet};
use crate::error::{Error, Result};

/// Loads a headerless, unquoted numeric CSV.
///
/// When `label_column` is given that column holds non-negative integer class
/// ids and is excluded from the features; otherwise every row gets label 0.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<usize>) -> Result<LabeledFeatureSet> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    parse_csv(&text, label_column)
}

pub(crate) fn parse_csv(text: &str, label_column: Option<usize>) -> Result<LabeledFeatureSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .quoting(false)
        .from_reader(text.as_bytes());

    let mut width = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        match width {
            None => {
                if let Some(col) = label_column {
                    if col >= record.len() {
                        return Err(Error::Csv {
                            line,
                            message: format!("label column {col} out of range"),
                        });
                    }
                }
                width = Some(record.len());
            }
            Some(w) if w != record.len() => {
                return Err(Error::Csv {
                    line,
                    message: format!("ragged row: expected {w} fields, found {}", record.len()),
                })
            }
            Some(_) => {}
        }
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if Some(j) == label_column {
                let label = cell.parse::<usize>().map_err(|_| Error::Csv {
                    line,
                    message: format!("label '{cell}' is not a non-negative integer"),
                })?;
                labels.push(label);
            } else {
                let v = cell.parse::<f64>().map_err(|_| Error::Csv {
                    line,
                    message: format!("'{cell}' is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: values.len() / width.unwrap().max(1) });
                }
                values.push(v);
            }
        }
    }

    let width = width.ok_or_else(|| Error::Empty("CSV has no rows".into()))?;
    let cols = width - usize::from(label_column.is_some());
    if cols == 0 {
        return Err(Error::Empty("CSV has no feature columns".into()));
    }
    let rows = values.len() / cols;
    let features = FeatureMatrix::new(rows, cols, values)?;
    match label_column {
        Some(_) => LabeledFeatureSet::new(features, labels),
        None => Ok(LabeledFeatureSet::unlabeled(features)),
    }
}

/// Parses one non-negative integer label per line (sidecar label files).
pub fn parse_label_lines(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<usize>().map_err(|_| Error::Csv {
                line: i + 1,
                message: format!("label '{}' is not a non-negative integer", l.trim()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_label_default() {
        let set = parse_csv("1.0,2.0\n3.0,4.0", None).unwrap();
        assert_eq!(set.features().as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(set.labels(), &[0, 0]);
        assert_eq!(set.n_classes(), 1);
    }

    #[test]
    fn label_column_is_split_off() {
        let set = parse_csv("1.0,2.0,1\n3.0,4.0,0", Some(2)).unwrap();
        assert_eq!(set.features().as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(set.labels(), &[1, 0]);
        assert_eq!(set.n_classes(), 2);
    }

    #[test]
    fn crlf_line_endings() {
        let set = parse_csv("1,2\r\n3,4\r\n", None).unwrap();
        assert_eq!(set.features().rows(), 2);
        assert_eq!(set.features().row(1), &[3.0, 4.0]);
    }

    #[test]
    fn ragged_row_reports_line_two() {
        let err = parse_csv("1.0\n2.0,3.0", None).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn non_numeric_and_empty() {
        assert!(matches!(parse_csv("1.0,abc", None), Err(Error::Csv { line: 1, .. })));
        assert!(matches!(parse_csv("", None), Err(Error::Empty(_))));
        assert!(matches!(parse_csv("1.0,-1", Some(1)), Err(Error::Csv { .. })));
    }

    #[test]
    fn sidecar_labels() {
        assert_eq!(parse_label_lines("0\n2\r\n1\n").unwrap(), vec![0, 2, 1]);
        assert!(parse_label_lines("0\nx\n").is_err());
    }
}
