//! Marginal empirical CDFs and the rank standardization to Pareto scale.
//!
//! Each feature `j` gets the strict-inequality empirical CDF
//! `F_j(x) = #{i : X_i^j < x} / n`, and a point `x` is sent to
//! `v_j = 1 / (1 - F_j(x_j))`. Points at or above a training maximum have
//! `F_j = 1`; their coordinate is clamped to `cap = 2n`, which ranks them
//! above every training point (the largest training value maps to `n`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

/// Per-feature sorted copies of the training columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalRanker {
    sorted_columns: Vec<Vec<f64>>,
}

/// Standardized coordinates, each in `[1, cap]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedPoint(pub Vec<f64>);

impl StandardizedPoint {
    /// Sup-norm radius.
    pub fn radius(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl MarginalRanker {
    pub fn fit(data: &FeatureMatrix) -> Self {
        let sorted_columns = (0..data.d())
            .into_par_iter()
            .map(|j| {
                let mut col = data.column(j);
                col.sort_unstable_by(f64::total_cmp);
                col
            })
            .collect();
        Self { sorted_columns }
    }

    /// Fits the margins and standardizes the training rows in one pass. Ranks
    /// come from the sort itself, so this avoids a binary search per entry.
    pub fn fit_training(data: &FeatureMatrix) -> (Self, Vec<StandardizedPoint>) {
        let n = data.n();
        let (sorted_columns, standardized): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (0..data.d())
            .into_par_iter()
            .map(|j| {
                let mut pairs: Vec<(f64, usize)> =
                    data.rows().map(|row| row[j]).zip(0..n).collect();
                pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                let mut v = vec![0.0; n];
                let mut below = 0;
                for (pos, &(x, i)) in pairs.iter().enumerate() {
                    // first of a tie block: everything before it is strictly smaller
                    if pos > 0 && pairs[pos - 1].0 != x {
                        below = pos;
                    }
                    v[i] = n as f64 / (n - below) as f64;
                }
                (pairs.into_iter().map(|(x, _)| x).collect(), v)
            })
            .unzip();
        let points = (0..n)
            .map(|i| StandardizedPoint(standardized.iter().map(|col| col[i]).collect()))
            .collect();
        (Self { sorted_columns }, points)
    }

    /// Rebuilds a ranker from stored columns, checking shape and order.
    pub fn from_sorted_columns(sorted_columns: Vec<Vec<f64>>) -> Result<Self> {
        let n = sorted_columns.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::input("ranker needs at least one non-empty column"));
        }
        for (j, col) in sorted_columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::input(format!(
                    "column {} has length {}, expected {n}",
                    j + 1,
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) || col.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::input(format!(
                    "column {} is not a sorted finite column",
                    j + 1
                )));
            }
        }
        Ok(Self { sorted_columns })
    }

    pub fn n(&self) -> usize {
        self.sorted_columns[0].len()
    }

    pub fn d(&self) -> usize {
        self.sorted_columns.len()
    }

    pub fn cap(&self) -> f64 {
        2.0 * self.n() as f64
    }

    pub fn sorted_column(&self, j: usize) -> &[f64] {
        &self.sorted_columns[j]
    }

    pub fn sorted_columns(&self) -> &[Vec<f64>] {
        &self.sorted_columns
    }

    /// Number of training values of feature `j` strictly below `x`.
    pub fn count_below(&self, j: usize, x: f64) -> usize {
        self.sorted_columns[j].partition_point(|&v| v < x)
    }

    pub fn empirical_cdf(&self, j: usize, x: f64) -> f64 {
        self.count_below(j, x) as f64 / self.n() as f64
    }

    /// `1 / (1 - F_j(x))`, evaluated as `n / (n - count_below)` so that
    /// distinct training values map exactly onto `n / (n - r + 1)`.
    fn standardize_coord(&self, j: usize, x: f64) -> f64 {
        let n = self.n();
        let below = self.count_below(j, x);
        if below == n {
            self.cap()
        } else {
            n as f64 / (n - below) as f64
        }
    }

    pub fn standardize(&self, x: &[f64]) -> Result<StandardizedPoint> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: x.len(),
            });
        }
        Ok(StandardizedPoint(
            x.iter()
                .enumerate()
                .map(|(j, &v)| self.standardize_coord(j, v))
                .collect(),
        ))
    }

    /// Standardizes every row of `data` with this ranker's CDFs.
    pub fn standardize_all(&self, data: &FeatureMatrix) -> Result<Vec<StandardizedPoint>> {
        if data.d() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: data.d(),
            });
        }
        data.rows()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|row| self.standardize(row))
            .collect()
    }
}

/// Fits the margins on `data` and standardizes its own rows.
pub fn standardize_training(data: &FeatureMatrix) -> Vec<StandardizedPoint> {
    MarginalRanker::fit_training(data).1
}
