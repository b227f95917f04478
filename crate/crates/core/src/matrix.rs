//! Dense row-major sample storage and CSV ingestion.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// An `n × d` sample of finite reals, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    n: usize,
    d: usize,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major values. Rejects empty shapes and any
    /// NaN or infinite entry.
    pub fn new(values: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::input(format!("empty matrix ({n} x {d})")));
        }
        if values.len() != n * d {
            return Err(Error::input(format!(
                "expected {} values for a {n} x {d} matrix, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite value {} at row {}, column {}",
                values[pos],
                pos / d,
                pos % d
            )));
        }
        Ok(Self { values, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::input(format!(
                "row {i} has {} values, expected {d}",
                rows[i].len()
            )));
        }
        Self::new(rows.concat(), rows.len(), d)
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let d = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::input("columns have unequal lengths"));
        }
        let mut values = Vec::with_capacity(n * d);
        for i in 0..n {
            values.extend(columns.iter().map(|c| c[i]));
        }
        Self::new(values, n, d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self::new(values, indices.len(), self.d)
    }

    /// Applies `f(j, x)` to every entry of column `j`.
    pub fn map_columns(&self, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(pos, &x)| f(pos % self.d, x))
            .collect();
        Self::new(values, self.n, self.d)
    }

    /// Reads a comma-separated file whose first row is a header. Every field
    /// must parse as a finite real.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let d = rdr.headers()?.len();
        let mut values = Vec::new();
        let mut n = 0;
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != d {
                return Err(Error::input(format!(
                    "data row {} has {} fields, header has {d}",
                    i + 1,
                    record.len()
                )));
            }
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::input(format!(
                        "data row {}, column {}: '{field}' is not a number",
                        i + 1,
                        j + 1
                    ))
                })?;
                values.push(v);
            }
            n += 1;
        }
        Self::new(values, n, d)
    }

    /// Writes a header `x1,...,xd` followed by one line per row. Reals use the
    /// shortest representation that round-trips.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record((1..=self.d).map(|j| format!("x{j}")))?;
        for row in self.rows() {
            wtr.write_record(row.iter().map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}
