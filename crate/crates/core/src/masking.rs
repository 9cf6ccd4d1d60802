//! MCAR masking with recorded ground truth.
//!
//! Each maskable cell (observed in the source, and outside the target column
//! when the target is excluded) consumes exactly one uniform draw from
//! `Stream::new(seed)`, visited in row-major order, and is hidden when the
//! draw is below `rate`. Cells that were never observed consume no draw.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::data::DataMatrix;
use crate::error::{MibError, Result};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskedCell {
    pub row: usize,
    pub col: usize,
    pub truth: f64,
}

/// Artificially hidden cells of an `n_rows x n_cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    n_rows: usize,
    n_cols: usize,
    hidden: Vec<bool>,
    cells: Vec<MaskedCell>,
    pub seed: u64,
    pub rate: f64,
}

impl Mask {
    /// Builds a mask from explicit cells; they are re-sorted row-major.
    pub fn from_cells(
        n_rows: usize,
        n_cols: usize,
        mut cells: Vec<MaskedCell>,
        seed: u64,
        rate: f64,
    ) -> Result<Self> {
        cells.sort_by_key(|c| (c.row, c.col));
        let mut hidden = vec![false; n_rows * n_cols];
        for c in &cells {
            if c.row >= n_rows || c.col >= n_cols {
                return Err(MibError::invalid(format!(
                    "masked cell ({}, {}) outside {n_rows}x{n_cols}",
                    c.row, c.col
                )));
            }
            let i = c.row * n_cols + c.col;
            if hidden[i] {
                return Err(MibError::invalid(format!(
                    "masked cell ({}, {}) listed twice",
                    c.row, c.col
                )));
            }
            if !c.truth.is_finite() {
                return Err(MibError::NonFinite(format!("truth at ({}, {})", c.row, c.col)));
            }
            hidden[i] = true;
        }
        Ok(Mask {
            n_rows,
            n_cols,
            hidden,
            cells,
            seed,
            rate,
        })
    }

    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        Mask {
            n_rows,
            n_cols,
            hidden: vec![false; n_rows * n_cols],
            cells: Vec::new(),
            seed: 0,
            rate: 0.0,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn is_hidden(&self, row: usize, col: usize) -> bool {
        self.hidden[row * self.n_cols + col]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Hidden cells in row-major order.
    pub fn cells(&self) -> &[MaskedCell] {
        &self.cells
    }

    /// Hidden-cell count per column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_cols];
        for c in &self.cells {
            counts[c.col] += 1;
        }
        counts
    }

    /// Writes the `row,col,truth` sidecar with a leading seed/rate comment.
    pub fn write_sidecar<W: Write>(&self, mut out: W, extra: Option<&str>) -> Result<()> {
        let io = |source| MibError::Io {
            path: "<mask sidecar>".into(),
            source,
        };
        let mut header = format!(
            "# seed={} rate={} shape={}x{}",
            self.seed, self.rate, self.n_rows, self.n_cols
        );
        if let Some(e) = extra {
            header.push(' ');
            header.push_str(e);
        }
        writeln!(out, "{header}").map_err(io)?;
        writeln!(out, "row,col,truth").map_err(io)?;
        for c in &self.cells {
            writeln!(out, "{},{},{}", c.row, c.col, c.truth).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn read_sidecar(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|source| MibError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut seed = 0;
        let mut rate = f64::NAN;
        let mut shape = None;
        let mut cells = Vec::new();
        let mut seen_header = false;
        for (lineno, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|source| MibError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for tok in meta.split_whitespace() {
                    match tok.split_once('=') {
                        Some(("seed", v)) => seed = parse_num(v, lineno)?,
                        Some(("rate", v)) => rate = parse_num(v, lineno)?,
                        Some(("shape", v)) => {
                            let (r, c) = v.split_once('x').ok_or_else(|| bad_line(lineno))?;
                            shape = Some((parse_num(r, lineno)?, parse_num(c, lineno)?));
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !seen_header {
                if line != "row,col,truth" {
                    return Err(MibError::Format(format!(
                        "mask sidecar line {}: expected header 'row,col,truth'",
                        lineno + 1
                    )));
                }
                seen_header = true;
                continue;
            }
            let mut parts = line.split(',');
            let (Some(r), Some(c), Some(t), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad_line(lineno));
            };
            cells.push(MaskedCell {
                row: parse_num(r, lineno)?,
                col: parse_num(c, lineno)?,
                truth: parse_num(t, lineno)?,
            });
        }
        let (n_rows, n_cols) = shape.ok_or_else(|| {
            MibError::Format("mask sidecar lacks a 'shape=RxC' header entry".into())
        })?;
        Mask::from_cells(n_rows, n_cols, cells, seed, rate)
    }
}

fn bad_line(lineno: usize) -> MibError {
    MibError::Format(format!("mask sidecar line {} is malformed", lineno + 1))
}

fn parse_num<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T> {
    s.trim().parse().map_err(|_| bad_line(lineno))
}

/// Hides each maskable cell independently with probability `rate`.
pub fn apply_mcar_mask(
    m: &DataMatrix,
    rate: f64,
    seed: u64,
    exclude_target: bool,
) -> Result<(DataMatrix, Mask)> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(MibError::invalid(format!("mask rate {rate} outside [0, 1]")));
    }
    let skip_col = if exclude_target { m.target_col() } else { None };
    let mut stream = Stream::new(seed);
    let mut masked = m.clone();
    let mut cells = Vec::new();
    let mut hidden = vec![false; m.n_rows() * m.n_cols()];
    for i in 0..m.n_rows() {
        for j in 0..m.n_cols() {
            if Some(j) == skip_col {
                continue;
            }
            let Some(v) = m.get(i, j) else { continue };
            if stream.uniform() < rate {
                masked.set_missing(i, j);
                hidden[i * m.n_cols() + j] = true;
                cells.push(MaskedCell {
                    row: i,
                    col: j,
                    truth: v,
                });
            }
        }
    }
    let mask = Mask {
        n_rows: m.n_rows(),
        n_cols: m.n_cols(),
        hidden,
        cells,
        seed,
        rate,
    };
    Ok((masked, mask))
}

/// Row-major list of (row, col, truth) for every hidden cell.
pub fn masked_positions(mask: &Mask) -> Vec<(usize, usize, f64)> {
    mask.cells.iter().map(|c| (c.row, c.col, c.truth)).collect()
}
