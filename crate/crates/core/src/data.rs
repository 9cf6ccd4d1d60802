//! Tabular data model and CSV ingestion.
//!
//! A [`DataMatrix`] is a dense row-major grid of `f64` with a parallel
//! observedness grid. Unobserved cells hold `NaN` as a sentinel; every
//! accessor that hands out values checks observedness first.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{MibError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    observed: Vec<bool>,
    column_names: Vec<String>,
    target_col: Option<usize>,
}

impl DataMatrix {
    /// Builds a matrix from row-major cells, `None` marking a missing value.
    pub fn from_cells(
        column_names: Vec<String>,
        rows: &[Vec<Option<f64>>],
        target_col: Option<usize>,
    ) -> Result<Self> {
        let n_cols = column_names.len();
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        let mut observed = Vec::with_capacity(rows.len() * n_cols);
        for row in rows {
            MibError::check_dim(n_cols, row.len())?;
            for cell in row {
                match cell {
                    Some(v) => {
                        values.push(*v);
                        observed.push(true);
                    }
                    None => {
                        values.push(f64::NAN);
                        observed.push(false);
                    }
                }
            }
        }
        Self::from_parts(rows.len(), column_names, values, observed, target_col)
    }

    /// Builds a fully observed matrix from row-major values.
    pub fn from_dense(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        let names = (0..n_cols).map(|j| format!("x{j}")).collect();
        let observed = vec![true; values.len()];
        Self::from_parts(n_rows, names, values, observed, None)
    }

    pub fn from_parts(
        n_rows: usize,
        column_names: Vec<String>,
        mut values: Vec<f64>,
        observed: Vec<bool>,
        target_col: Option<usize>,
    ) -> Result<Self> {
        let n_cols = column_names.len();
        if n_rows == 0 {
            return Err(MibError::Empty("matrix has no rows".into()));
        }
        if n_cols == 0 {
            return Err(MibError::Empty("matrix has no columns".into()));
        }
        MibError::check_dim(n_rows * n_cols, values.len())?;
        MibError::check_dim(n_rows * n_cols, observed.len())?;
        if let Some(t) = target_col {
            if t >= n_cols {
                return Err(MibError::invalid(format!(
                    "target column {t} out of range for {n_cols} columns"
                )));
            }
            if n_cols < 2 {
                return Err(MibError::invalid(
                    "a designated target needs at least one feature column",
                ));
            }
        }
        for (v, &o) in values.iter_mut().zip(&observed) {
            if !o {
                *v = f64::NAN;
            }
        }
        Ok(DataMatrix {
            n_rows,
            n_cols,
            values,
            observed,
            column_names,
            target_col,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn target_col(&self) -> Option<usize> {
        self.target_col
    }

    pub fn set_target_col(&mut self, target_col: Option<usize>) -> Result<()> {
        if let Some(t) = target_col {
            if t >= self.n_cols || self.n_cols < 2 {
                return Err(MibError::invalid(format!("target column {t} out of range")));
            }
        }
        self.target_col = target_col;
        Ok(())
    }

    #[inline]
    fn idx(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        row * self.n_cols + col
    }

    #[inline]
    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.observed[self.idx(row, col)]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = self.idx(row, col);
        self.observed[i].then(|| self.values[i])
    }

    /// Value of an observed cell. Panics on a missing cell.
    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        let i = self.idx(row, col);
        assert!(self.observed[i], "read of unobserved cell ({row}, {col})");
        self.values[i]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        let i = self.idx(row, col);
        self.values[i] = v;
        self.observed[i] = true;
    }

    #[inline]
    pub fn set_missing(&mut self, row: usize, col: usize) {
        let i = self.idx(row, col);
        self.values[i] = f64::NAN;
        self.observed[i] = false;
    }

    /// Raw row slice; unobserved positions hold `NaN`.
    pub fn row_values(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn row_observed(&self, row: usize) -> &[bool] {
        &self.observed[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn observed_mask(&self) -> &[bool] {
        &self.observed
    }

    /// Observed values of one column, in row order.
    pub fn observed_column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).filter_map(|i| self.get(i, col)).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.observed.iter().all(|&o| o)
    }

    pub fn n_missing(&self) -> usize {
        self.observed.iter().filter(|&&o| !o).count()
    }

    /// Row-major positions of every unobserved cell.
    pub fn missing_cells(&self) -> Vec<(usize, usize)> {
        self.observed
            .iter()
            .enumerate()
            .filter(|(_, &o)| !o)
            .map(|(i, _)| (i / self.n_cols, i % self.n_cols))
            .collect()
    }

    /// Copy of the selected rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols);
        let mut observed = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            values.extend_from_slice(self.row_values(r));
            observed.extend_from_slice(self.row_observed(r));
        }
        Self::from_parts(
            rows.len(),
            self.column_names.clone(),
            values,
            observed,
            self.target_col,
        )
    }

    /// Row-major values of a complete matrix.
    pub fn complete_values(&self) -> Result<&[f64]> {
        if !self.is_complete() {
            return Err(MibError::invalid("matrix still has missing cells"));
        }
        Ok(&self.values)
    }

    /// Feature rows (every column except the target) and the target vector.
    pub fn split_target(&self) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let t = self
            .target_col
            .ok_or_else(|| MibError::invalid("no target column designated"))?;
        let values = self.complete_values()?;
        let mut x = Vec::with_capacity(self.n_rows);
        let mut y = Vec::with_capacity(self.n_rows);
        for row in values.chunks(self.n_cols) {
            x.push(
                row.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != t)
                    .map(|(_, &v)| v)
                    .collect(),
            );
            y.push(row[t]);
        }
        Ok((x, y))
    }
}

/// Reads a CSV file: header first, empty field = missing.
/// Lines starting with `#` before or between records are skipped.
pub fn load_csv(path: impl AsRef<Path>, target_name: Option<&str>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| MibError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_csv(&text, target_name)
}

pub fn parse_csv(text: &str, target_name: Option<&str>) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if names.len() < 2 {
        return Err(MibError::Format(format!(
            "need at least 2 columns, found {}",
            names.len()
        )));
    }
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(names.len());
        for (j, field) in record.iter().enumerate() {
            if field.is_empty() {
                row.push(None);
            } else {
                let v: f64 = field.parse().map_err(|_| MibError::Parse {
                    row: r + 1,
                    column: names[j].clone(),
                    value: field.to_string(),
                })?;
                row.push(Some(v));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MibError::Empty("no data rows".into()));
    }
    let target_col = match target_name {
        Some(t) => Some(
            names
                .iter()
                .position(|n| n == t)
                .ok_or_else(|| MibError::UnknownTarget(t.to_string()))?,
        ),
        None => None,
    };
    DataMatrix::from_cells(names, &rows, target_col)
}

/// Writes a matrix as CSV. Missing cells become empty fields; numbers use
/// the shortest representation that parses back to the same `f64`.
/// `comment`, if given, is emitted as a leading `# ...` line.
pub fn write_csv<W: Write>(m: &DataMatrix, mut out: W, comment: Option<&str>) -> Result<()> {
    let io = |source| MibError::Io {
        path: "<output>".into(),
        source,
    };
    if let Some(c) = comment {
        writeln!(out, "# {c}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(m.column_names())?;
    let mut fields = Vec::with_capacity(m.n_cols());
    for i in 0..m.n_rows() {
        fields.clear();
        for j in 0..m.n_cols() {
            fields.push(m.get(i, j).map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&fields)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

pub fn save_csv(m: &DataMatrix, path: impl AsRef<Path>, comment: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|source| MibError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(m, std::io::BufWriter::new(f), comment)
}
