//! k-nearest-neighbour imputation with a rescaled partial distance.
//!
//! The distance between a query row and a training row uses only the set `S`
//! of coordinates observed in both: `sqrt(d / |S| * Σ_{j∈S} (a_j − b_j)²)`.
//! Rows sharing no observed coordinate are ineligible. For a missing cell in
//! column `c`, candidates are training rows with `c` observed; the `k` closest
//! (ties to the lower row index) are averaged without weights, summing in
//! ascending row order. With no candidate the column mean is used.

use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{MibError, Result};

use super::column_means;
use super::spec::parse_value;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

impl KnnParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(MibError::invalid("knn: k must be >= 1"));
        }
        Ok(())
    }

    pub(crate) fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "k" => self.k = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub(crate) fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![("k", self.k.to_string())]
    }
}

#[derive(Debug, Clone)]
pub struct KnnImputer {
    k: usize,
    train: DataMatrix,
    col_means: Vec<f64>,
}

impl KnnImputer {
    pub fn fit(params: &KnnParams, train: &DataMatrix) -> Result<Self> {
        params.validate()?;
        Ok(KnnImputer {
            k: params.k,
            train: train.clone(),
            col_means: column_means(train),
        })
    }

    /// Partial distances from row `row` of `m` to every training row.
    fn distances(&self, m: &DataMatrix, row: usize) -> Vec<Option<f64>> {
        let d = m.n_cols();
        let q_vals = m.row_values(row);
        let q_obs = m.row_observed(row);
        (0..self.train.n_rows())
            .map(|t| {
                let t_vals = self.train.row_values(t);
                let t_obs = self.train.row_observed(t);
                let mut shared = 0usize;
                let mut acc = 0.0;
                for j in 0..d {
                    if q_obs[j] && t_obs[j] {
                        let diff = q_vals[j] - t_vals[j];
                        acc += diff * diff;
                        shared += 1;
                    }
                }
                (shared > 0).then(|| (d as f64 / shared as f64 * acc).sqrt())
            })
            .collect()
    }

    fn estimate(&self, dist: &[Option<f64>], col: usize) -> f64 {
        let mut candidates: Vec<(f64, usize)> = dist
            .iter()
            .enumerate()
            .filter_map(|(t, d)| match d {
                Some(d) if self.train.is_observed(t, col) => Some((*d, t)),
                _ => None,
            })
            .collect();
        if candidates.is_empty() {
            return self.col_means[col];
        }
        let k = self.k.min(candidates.len());
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut chosen: Vec<usize> = candidates[..k].iter().map(|c| c.1).collect();
        chosen.sort_unstable();
        chosen.iter().map(|&t| self.train.value(t, col)).sum::<f64>() / k as f64
    }

    pub fn transform(&self, m: &DataMatrix) -> DataMatrix {
        let rows_with_gaps: Vec<usize> =
            (0..m.n_rows()).filter(|&i| m.row_observed(i).contains(&false)).collect();
        let fills: Vec<Vec<(usize, f64)>> = rows_with_gaps
            .par_iter()
            .map(|&i| {
                let dist = self.distances(m, i);
                (0..m.n_cols())
                    .filter(|&j| !m.is_observed(i, j))
                    .map(|j| (j, self.estimate(&dist, j)))
                    .collect()
            })
            .collect();
        let mut out = m.clone();
        for (&i, row) in rows_with_gaps.iter().zip(fills) {
            for (j, v) in row {
                out.set(i, j, v);
            }
        }
        out
    }
}

/// Estimate for one missing cell `(row, col)` of `m`.
pub fn knn_impute_cell(f: &KnnImputer, m: &DataMatrix, row: usize, col: usize) -> f64 {
    f.estimate(&f.distances(m, row), col)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[Option<f64>]]) -> DataMatrix {
        let d = rows[0].len();
        let names = (0..d).map(|j| format!("c{j}")).collect();
        let rows: Vec<Vec<Option<f64>>> = rows.iter().map(|r| r.to_vec()).collect();
        DataMatrix::from_cells(names, &rows, None).unwrap()
    }

    #[test]
    fn nearest_row_wins() {
        let train = matrix(&[&[Some(0.0), Some(0.0), Some(1.0)], &[Some(10.0), Some(10.0), Some(9.0)]]);
        let f = KnnImputer::fit(&KnnParams { k: 1 }, &train).unwrap();
        let q = matrix(&[&[Some(1.0), Some(1.0), None]]);
        assert_eq!(knn_impute_cell(&f, &q, 0, 2), 1.0);
        assert_eq!(f.transform(&q).value(0, 2), 1.0);
    }

    #[test]
    fn equidistant_pair_is_averaged() {
        let train = matrix(&[&[Some(-1.0), Some(1.0)], &[Some(1.0), Some(3.0)]]);
        let f = KnnImputer::fit(&KnnParams { k: 2 }, &train).unwrap();
        let q = matrix(&[&[Some(0.0), None]]);
        assert_eq!(knn_impute_cell(&f, &q, 0, 1), 2.0);
    }

    #[test]
    fn rescaling_penalizes_few_shared_coordinates() {
        // row 0 shares one coordinate at distance 1: sqrt(3/1 * 1) = 1.73
        // row 1 shares two coordinates at distance 1 each: sqrt(3/2 * 2) = 1.73, tie -> row 0
        // row 2 shares two coordinates, total 1.5: sqrt(3/2 * 1.5) = 1.5 -> nearest
        let train = matrix(&[
            &[Some(1.0), None, Some(100.0)],
            &[Some(1.0), Some(1.0), Some(200.0)],
            &[Some(1.0), Some(0.70710678118654757), Some(300.0)],
        ]);
        let f = KnnImputer::fit(&KnnParams { k: 1 }, &train).unwrap();
        let q = matrix(&[&[Some(0.0), Some(0.0), None]]);
        assert_eq!(knn_impute_cell(&f, &q, 0, 2), 300.0);
    }

    #[test]
    fn no_eligible_neighbour_uses_column_mean() {
        let train = matrix(&[&[Some(1.0), None], &[None, Some(4.0)], &[None, Some(6.0)]]);
        let f = KnnImputer::fit(&KnnParams { k: 2 }, &train).unwrap();
        // query shares no observed coordinate with rows 1 and 2
        let q = matrix(&[&[Some(0.0), None]]);
        assert_eq!(knn_impute_cell(&f, &q, 0, 1), 5.0);
    }

    #[test]
    fn fewer_candidates_than_k() {
        let train = matrix(&[&[Some(0.0), Some(2.0)], &[Some(5.0), None], &[Some(9.0), Some(4.0)]]);
        let f = KnnImputer::fit(&KnnParams { k: 10 }, &train).unwrap();
        let q = matrix(&[&[Some(0.0), None]]);
        assert_eq!(knn_impute_cell(&f, &q, 0, 1), 3.0);
    }
}
