//! Aligned columnar samples and their per-column summaries.

use std::io::Read;

use serde::Serialize;
use thiserror::Error;

use crate::expr::is_identifier;
use crate::moments;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("line {line}: expected {expected} cells, found {found}")]
    RaggedRows {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column `{column}`: cannot parse {token:?} as a number")]
    NonNumericCell {
        line: u64,
        column: String,
        token: String,
    },
    #[error("line {line}, column `{column}`: value is not finite")]
    NonFiniteValue { line: u64, column: String },
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("invalid column name {0:?}")]
    InvalidColumnName(String),
    #[error("column `{name}` has {found} rows, expected {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("delimiter must be a single ASCII byte, got {0:?}")]
    BadDelimiter(char),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Named, equal-length columns of finite reals. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    n_rows: usize,
}

impl Dataset {
    /// Builds a dataset, enforcing the column invariants. Column order is kept.
    pub fn new<I, S>(columns: I) -> Result<Dataset, DataError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut names: Vec<String> = Vec::new();
        let mut data = Vec::new();
        for (name, values) in columns {
            let name = name.into();
            if !is_identifier(&name) {
                return Err(DataError::InvalidColumnName(name));
            }
            if names.contains(&name) {
                return Err(DataError::DuplicateColumn(name));
            }
            if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFiniteValue {
                    line: row as u64 + 1,
                    column: name,
                });
            }
            names.push(name);
            data.push(values);
        }
        let n_rows = data.first().map_or(0, Vec::len);
        if n_rows == 0 {
            return Err(DataError::EmptyInput);
        }
        for (name, values) in names.iter().zip(&data) {
            if values.len() != n_rows {
                return Err(DataError::LengthMismatch {
                    name: name.clone(),
                    expected: n_rows,
                    found: values.len(),
                });
            }
        }
        Ok(Dataset {
            names,
            columns: data,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.columns.iter().map(Vec::as_slice))
    }

    pub fn column_stats(&self, name: &str) -> Result<MarginalStats, DataError> {
        let values = self
            .column(name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_owned()))?;
        Ok(MarginalStats::of(values).expect("columns are nonempty"))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            header: true,
        }
    }
}

/// Reads delimited numeric text. Quoting is not interpreted; a header row,
/// when enabled, names the columns, otherwise they are `c1..ck`. Blank lines
/// are skipped. Reported line numbers are 1-based.
pub fn load_csv<R: Read>(reader: R, options: CsvOptions) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .quoting(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut names: Option<Vec<String>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, csv::Position::line);
        if names.is_none() {
            let header: Vec<String> = if options.header {
                record.iter().map(str::to_owned).collect()
            } else {
                (1..=record.len()).map(|i| format!("c{i}")).collect()
            };
            for (i, name) in header.iter().enumerate() {
                if !is_identifier(name) {
                    return Err(DataError::InvalidColumnName(name.clone()));
                }
                if header[..i].contains(name) {
                    return Err(DataError::DuplicateColumn(name.clone()));
                }
            }
            columns = vec![Vec::new(); header.len()];
            names = Some(header);
            if options.header {
                continue;
            }
        }
        let names = names.as_ref().expect("header set above");
        if record.len() != names.len() {
            return Err(DataError::RaggedRows {
                line,
                expected: names.len(),
                found: record.len(),
            });
        }
        for ((cell, name), column) in record.iter().zip(names).zip(columns.iter_mut()) {
            let value: f64 = cell.parse().map_err(|_| DataError::NonNumericCell {
                line,
                column: name.clone(),
                token: cell.to_owned(),
            })?;
            if !value.is_finite() {
                return Err(DataError::NonFiniteValue {
                    line,
                    column: name.clone(),
                });
            }
            column.push(value);
        }
    }
    let names = names.ok_or(DataError::EmptyInput)?;
    Dataset::new(names.into_iter().zip(columns))
}

/// Per-column summary. `variance` needs two values; `mode` needs a repeat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalStats {
    pub n: usize,
    pub mean: f64,
    pub variance: Option<f64>,
    pub median: f64,
    pub mode: Option<f64>,
    pub min: f64,
    pub max: f64,
}

impl MarginalStats {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<MarginalStats> {
        let sorted = moments::sorted(values);
        let mean = moments::mean_sorted(&sorted)?;
        Some(MarginalStats {
            n: sorted.len(),
            mean,
            variance: moments::variance_sorted(&sorted, mean),
            median: moments::median_sorted(&sorted)?,
            mode: moments::mode_sorted(&sorted),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}
