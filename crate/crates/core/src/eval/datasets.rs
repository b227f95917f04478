//! Preprocessing recipes for the public anomaly-detection benchmarks.
//!
//! Every raw source is a comma-separated file with a header row; columns are
//! located by position. Column maps:
//!
//! | recipe        | raw columns | features                                   | labels                                    |
//! |---------------|-------------|--------------------------------------------|-------------------------------------------|
//! | `shuttle`     | 10          | columns 1–9                                | class 1 normal, others anomalous, class 4 dropped |
//! | `forestcover` | 55          | columns 1–54                               | class 2 normal, class 4 anomalous, others dropped |
//! | `sf`          | 42 (KDD'99) | duration, service, src_bytes, dst_bytes    | rows with `logged_in = 1`; label `normal.` vs any attack |
//! | `http`        | 42 (KDD'99) | duration, src_bytes, dst_bytes             | `sf` rows whose service is `http`          |
//! | `sa`          | 42 (KDD'99) | all 41 attributes                          | every normal row plus 1% of attack rows, sampled uniformly |
//!
//! Categorical KDD attributes (protocol_type, service, flag) are coded by the
//! position of their value in the sorted list of distinct values. The rank
//! transform only sees the order of those codes.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

const KDD_COLUMNS: usize = 42;
const KDD_PROTOCOL: usize = 1;
const KDD_SERVICE: usize = 2;
const KDD_FLAG: usize = 3;
const KDD_LOGGED_IN: usize = 11;
const KDD_LABEL: usize = 41;

/// Fraction of attack rows kept by the `sa` recipe.
pub const SA_ANOMALY_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recipe {
    Shuttle,
    Forestcover,
    Http,
    Sf,
    Sa,
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "shuttle" => Ok(Recipe::Shuttle),
            "forestcover" | "covtype" => Ok(Recipe::Forestcover),
            "http" => Ok(Recipe::Http),
            "sf" => Ok(Recipe::Sf),
            "sa" => Ok(Recipe::Sa),
            _ => Err(Error::param(format!(
                "unknown recipe '{s}' (shuttle | forestcover | http | sf | sa)"
            ))),
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Recipe::Shuttle => "shuttle",
            Recipe::Forestcover => "forestcover",
            Recipe::Http => "http",
            Recipe::Sf => "sf",
            Recipe::Sa => "sa",
        })
    }
}

/// Features with one anomaly flag per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: FeatureMatrix,
    pub labels: Vec<bool>,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != features.n() {
            return Err(Error::input(format!(
                "{} labels for {} rows",
                labels.len(),
                features.n()
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn anomalies(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn anomaly_rate(&self) -> f64 {
        self.anomalies() as f64 / self.n() as f64
    }
}

struct RawTable {
    rows: Vec<Vec<String>>,
}

fn read_raw<R: Read>(sources: Vec<R>, width: usize, recipe: Recipe) -> Result<RawTable> {
    if sources.is_empty() {
        return Err(Error::input(format!("recipe '{recipe}' needs at least one raw file")));
    }
    let mut rows = Vec::new();
    for (f, source) in sources.into_iter().enumerate() {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(source);
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != width {
                return Err(Error::input(format!(
                    "recipe '{recipe}': file {} data row {} has {} columns, expected {width}",
                    f + 1,
                    i + 1,
                    record.len()
                )));
            }
            rows.push(record.iter().map(str::to_owned).collect());
        }
    }
    Ok(RawTable { rows })
}

fn number(field: &str, row: usize, col: usize) -> Result<f64> {
    field.parse::<f64>().map_err(|_| {
        Error::input(format!(
            "data row {}, column {}: '{field}' is not numeric",
            row + 1,
            col + 1
        ))
    })
}

fn class_label(field: &str, row: usize, col: usize) -> Result<i64> {
    let v = number(field, row, col)?;
    if v.fract() != 0.0 {
        return Err(Error::input(format!(
            "data row {}, column {}: class '{field}' is not an integer",
            row + 1,
            col + 1
        )));
    }
    Ok(v as i64)
}

/// Numeric features in `columns`, class in the last column, mapped through
/// `classify` (`None` drops the row).
fn numeric_with_class(
    table: &RawTable,
    n_features: usize,
    classify: impl Fn(i64) -> Option<bool>,
) -> Result<LabeledDataset> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let class = class_label(&row[n_features], i, n_features)?;
        let Some(anomaly) = classify(class) else {
            continue;
        };
        for (j, field) in row[..n_features].iter().enumerate() {
            values.push(number(field, i, j)?);
        }
        labels.push(anomaly);
    }
    let n = labels.len();
    LabeledDataset::new(FeatureMatrix::new(values, n, n_features)?, labels)
}

fn is_normal_kdd(label: &str) -> bool {
    label.trim_end_matches('.') == "normal"
}

/// Codes each distinct value of a categorical column by its sorted position.
fn category_codes(table: &RawTable, rows: &[usize], col: usize) -> impl Fn(&str) -> f64 {
    let mut values: Vec<String> = rows.iter().map(|&i| table.rows[i][col].clone()).collect();
    values.sort();
    values.dedup();
    move |v: &str| values.binary_search_by(|x| x.as_str().cmp(v)).unwrap_or(0) as f64
}

fn kdd_select(
    table: &RawTable,
    rows: &[usize],
    columns: &[usize],
    categorical: &[usize],
) -> Result<LabeledDataset> {
    let coders: Vec<(usize, Box<dyn Fn(&str) -> f64>)> = categorical
        .iter()
        .map(|&c| (c, Box::new(category_codes(table, rows, c)) as Box<dyn Fn(&str) -> f64>))
        .collect();
    let mut values = Vec::with_capacity(rows.len() * columns.len());
    let mut labels = Vec::with_capacity(rows.len());
    for &i in rows {
        let row = &table.rows[i];
        for &c in columns {
            let v = match coders.iter().find(|(cc, _)| *cc == c) {
                Some((_, code)) => code(&row[c]),
                None => number(&row[c], i, c)?,
            };
            values.push(v);
        }
        labels.push(!is_normal_kdd(&row[KDD_LABEL]));
    }
    LabeledDataset::new(FeatureMatrix::new(values, rows.len(), columns.len())?, labels)
}

fn logged_in_rows(table: &RawTable) -> Result<Vec<usize>> {
    let mut rows = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        if number(&row[KDD_LOGGED_IN], i, KDD_LOGGED_IN)? > 0.0 {
            rows.push(i);
        }
    }
    Ok(rows)
}

/// Builds the labeled dataset for `recipe` from its raw files. `rng` is only
/// consumed by the `sa` anomaly subsampling.
pub fn preprocess<R: Read, G: Rng + ?Sized>(
    recipe: Recipe,
    sources: Vec<R>,
    rng: &mut G,
) -> Result<LabeledDataset> {
    let ds = match recipe {
        Recipe::Shuttle => {
            let table = read_raw(sources, 10, recipe)?;
            numeric_with_class(&table, 9, |c| match c {
                4 => None,
                1 => Some(false),
                _ => Some(true),
            })?
        }
        Recipe::Forestcover => {
            let table = read_raw(sources, 55, recipe)?;
            numeric_with_class(&table, 54, |c| match c {
                2 => Some(false),
                4 => Some(true),
                _ => None,
            })?
        }
        Recipe::Sf => {
            let table = read_raw(sources, KDD_COLUMNS, recipe)?;
            let rows = logged_in_rows(&table)?;
            kdd_select(&table, &rows, &[0, KDD_SERVICE, 4, 5], &[KDD_SERVICE])?
        }
        Recipe::Http => {
            let table = read_raw(sources, KDD_COLUMNS, recipe)?;
            let rows: Vec<usize> = logged_in_rows(&table)?
                .into_iter()
                .filter(|&i| table.rows[i][KDD_SERVICE] == "http")
                .collect();
            kdd_select(&table, &rows, &[0, 4, 5], &[])?
        }
        Recipe::Sa => {
            let table = read_raw(sources, KDD_COLUMNS, recipe)?;
            let (normal, mut attacks): (Vec<usize>, Vec<usize>) =
                (0..table.rows.len()).partition(|&i| is_normal_kdd(&table.rows[i][KDD_LABEL]));
            attacks.shuffle(rng);
            let keep = (attacks.len() as f64 * SA_ANOMALY_FRACTION).round() as usize;
            attacks.truncate(keep);
            let mut rows = normal;
            rows.extend(attacks);
            rows.sort_unstable();
            let columns: Vec<usize> = (0..KDD_LABEL).collect();
            kdd_select(&table, &rows, &columns, &[KDD_PROTOCOL, KDD_SERVICE, KDD_FLAG])?
        }
    };
    Ok(ds)
}
