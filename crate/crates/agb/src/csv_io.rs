//! Numeric CSV datasets: a mandatory header row, comma separators and
//! decimal reals in every cell.

use std::path::Path;

use agb_core::data::{Dataset, Matrix, Task};

use crate::write::atomic_write;
use crate::{Error, Result};

/// Loads `path`, using `target_column` as the targets and every other column,
/// in header order, as features.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str, task: Task) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path, target_column, task)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

struct Table {
    headers: Vec<String>,
    values: Vec<f64>,
    rows: usize,
}

fn read_table(bytes: &[u8], path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        rows += 1;
        for (c, cell) in record.iter().enumerate() {
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::NonNumeric {
                    path: path.to_path_buf(),
                    row: rows,
                    column: headers[c].clone(),
                    value: cell.to_owned(),
                })?;
            values.push(v);
        }
    }
    Ok(Table {
        headers,
        values,
        rows,
    })
}

fn find_column(table: &Table, path: &Path, column: &str) -> Result<Option<usize>> {
    let mut matches = table
        .headers
        .iter()
        .enumerate()
        .filter(|(_, h)| *h == column);
    match (matches.next(), matches.next()) {
        (Some((i, _)), None) => Ok(Some(i)),
        (None, _) => Ok(None),
        (Some(_), Some(_)) => Err(Error::TargetColumn {
            path: path.to_path_buf(),
            column: column.to_owned(),
            problem: "appears more than once",
        }),
    }
}

/// Splits a table into the features and, if `column` is given, that column.
fn take_column(
    table: Table,
    path: &Path,
    column: Option<usize>,
) -> Result<(Matrix, Vec<String>, Vec<f64>)> {
    let d = table.headers.len() - usize::from(column.is_some());
    if d == 0 {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: "no feature columns".into(),
        });
    }
    let names = table
        .headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != column)
        .map(|(_, h)| h.clone())
        .collect();
    let width = table.headers.len();
    let mut features = Vec::with_capacity(table.rows * d);
    let mut taken = Vec::with_capacity(table.rows);
    for row in table.values.chunks(width) {
        for (c, &v) in row.iter().enumerate() {
            if Some(c) == column {
                taken.push(v);
            } else {
                features.push(v);
            }
        }
    }
    Ok((Matrix::from_vec(table.rows, d, features)?, names, taken))
}

fn parse_csv(bytes: &[u8], path: &Path, target_column: &str, task: Task) -> Result<Dataset> {
    let table = read_table(bytes, path)?;
    let target = find_column(&table, path, target_column)?.ok_or_else(|| Error::TargetColumn {
        path: path.to_path_buf(),
        column: target_column.to_owned(),
        problem: "is missing from the header",
    })?;
    let (features, names, targets) = take_column(table, path, Some(target))?;
    Ok(Dataset::new(features, targets, task, names)?)
}

/// Loads the feature columns of `path` for prediction. A column named
/// `drop_column`, if present, is left out.
pub fn load_features(
    path: impl AsRef<Path>,
    drop_column: Option<&str>,
) -> Result<(Matrix, Vec<String>)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let table = read_table(&bytes, path)?;
    let drop = match drop_column {
        Some(c) => find_column(&table, path, c)?,
        None => None,
    };
    if table.rows == 0 {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    let (features, names, _) = take_column(table, path, drop)?;
    Ok((features, names))
}

/// Renders a dataset as CSV with the features followed by `target_column`.
pub fn to_csv_string(ds: &Dataset, target_column: &str) -> String {
    let mut out = String::new();
    for name in ds.feature_names() {
        out.push_str(name);
        out.push(',');
    }
    out.push_str(target_column);
    out.push('\n');
    for (row, y) in ds.features().iter_rows().zip(ds.targets()) {
        for v in row {
            out.push_str(&v.to_string());
            out.push(',');
        }
        out.push_str(&y.to_string());
        out.push('\n');
    }
    out
}

/// Writes a dataset that [`load_csv`] reads back unchanged.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>, target_column: &str) -> Result<()> {
    atomic_write(path.as_ref(), to_csv_string(ds, target_column).as_bytes())
}
