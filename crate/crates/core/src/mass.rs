//! Empirical exponent measure on ε-thickened rectangles.
//!
//! An extreme standardized point (sup-norm at least `n/k`) is charged to the
//! feature subset `α = {j : v_j > ε·n/k}`; `M̂(α)` is the number of points
//! charged to `α` divided by `k`. Only subsets that receive at least one point
//! are stored, so the representation stays proportional to the number of
//! extremes rather than to `2^d`.
//!
//! Also provides the order-statistic functionals `l_n` (empirical stable tail
//! dependence function) and `g_{n,α,β}` over rectangles, which count the same
//! events from the raw data without going through the standardization.

use std::collections::{BTreeMap, HashMap};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::rank::{MarginalRanker, StandardizedPoint};
use crate::subset::{FeatureSubset, MAX_FEATURES};

/// Checks `1 <= k <= n` and `0 < epsilon < 1`.
pub fn check_params(n: usize, k: usize, epsilon: f64) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::param(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    Ok(())
}

/// `epsilon <= k/n` puts the membership cut `ε·n/k` at or below 1, the
/// smallest standardized value: every extreme point lands in the full subset.
pub fn is_degenerate_regime(n: usize, k: usize, epsilon: f64) -> bool {
    epsilon <= k as f64 / n as f64
}

/// Sub-cone of an extreme point, or `None` when `max_j v_j < n/k`.
pub fn assign_rectangle(
    v: &StandardizedPoint,
    n: usize,
    k: usize,
    epsilon: f64,
) -> Option<FeatureSubset> {
    let radial = n as f64 / k as f64;
    if v.radius() < radial {
        return None;
    }
    Some(subset_above(v.coords(), epsilon * radial))
}

/// `{j : v_j > cut}`.
pub(crate) fn subset_above(coords: &[f64], cut: f64) -> FeatureSubset {
    let mut alpha = FeatureSubset::EMPTY;
    for (j, &v) in coords.iter().enumerate() {
        if v > cut {
            alpha.insert(j);
        }
    }
    alpha
}

/// Threshold applied by [`SparseAngularRepresentation::apply_threshold`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// Proportion of the average positive mass.
    pub p: f64,
    /// Resulting absolute cut; masses strictly below it were dropped.
    pub value: f64,
}

/// Sparse map `α -> M̂(α)` together with the estimation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RepresentationDoc", into = "RepresentationDoc")]
pub struct SparseAngularRepresentation {
    n: usize,
    k: usize,
    d: usize,
    epsilon: f64,
    threshold: Option<Threshold>,
    masses: HashMap<FeatureSubset, f64>,
}

impl SparseAngularRepresentation {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn threshold(&self) -> Option<Threshold> {
        self.threshold
    }

    pub fn is_thresholded(&self) -> bool {
        self.threshold.is_some()
    }

    /// `M̂(α)`, zero for subsets that carry no mass.
    pub fn mass(&self, alpha: FeatureSubset) -> f64 {
        self.masses.get(&alpha).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.sorted_entries().iter().map(|(_, m)| m).sum()
    }

    /// Number of extreme points behind the stored masses (`Σ k·M̂(α)`).
    pub fn charged_points(&self) -> usize {
        self.masses
            .values()
            .map(|m| (m * self.k as f64).round() as usize)
            .sum()
    }

    /// Entries ordered by their sorted 1-based index lists.
    pub fn sorted_entries(&self) -> Vec<(FeatureSubset, f64)> {
        let mut entries: Vec<_> = self.masses.iter().map(|(&a, &m)| (a, m)).collect();
        entries.sort_by_key(|(a, _)| a.to_one_based());
        entries
    }

    pub fn subsets(&self) -> Vec<FeatureSubset> {
        self.sorted_entries().into_iter().map(|(a, _)| a).collect()
    }

    /// Drops every `M̂(α)` strictly below `p` times the average positive mass.
    ///
    /// The cut is computed once from the raw estimate and recorded, so applying
    /// the same `p` to an already thresholded representation is a no-op.
    /// A different `p` on a thresholded representation is rejected.
    pub fn apply_threshold(&self, p: f64) -> Result<Self> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::param(format!("threshold proportion p = {p} must be >= 0")));
        }
        if let Some(t) = self.threshold {
            if t.p == p {
                return Ok(self.clone());
            }
            return Err(Error::param(format!(
                "representation already thresholded with p = {}",
                t.p
            )));
        }
        let value = if self.masses.is_empty() {
            0.0
        } else {
            p * self.total_mass() / self.masses.len() as f64
        };
        let masses = self
            .masses
            .iter()
            .filter(|(_, &m)| m >= value)
            .map(|(&a, &m)| (a, m))
            .collect();
        Ok(Self {
            threshold: Some(Threshold { p, value }),
            masses,
            ..self.clone()
        })
    }

    /// Total mass per sub-cone dimension `|α|`.
    pub fn dimension_histogram(&self) -> BTreeMap<usize, f64> {
        let mut hist = BTreeMap::new();
        for (alpha, m) in self.sorted_entries() {
            *hist.entry(alpha.len()).or_insert(0.0) += m;
        }
        hist
    }
}

/// Computes `M̂(α) = μ_n(R_α^ε)` for every subset hit by an extreme point.
///
/// `points` are the standardized training rows, so `n = points.len()`.
pub fn estimate_masses(
    points: &[StandardizedPoint],
    k: usize,
    epsilon: f64,
) -> Result<SparseAngularRepresentation> {
    let n = points.len();
    check_params(n, k, epsilon)?;
    let d = points[0].coords().len();
    if d == 0 || d > MAX_FEATURES {
        return Err(Error::input(format!(
            "feature count {d} outside 1..={MAX_FEATURES}"
        )));
    }
    if let Some(i) = points.iter().position(|p| p.coords().len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: points[i].coords().len(),
        });
    }
    if is_degenerate_regime(n, k, epsilon) {
        warn!(
            "epsilon = {epsilon} <= k/n = {}: every extreme point falls in the full sub-cone",
            k as f64 / n as f64
        );
    }

    let counts = points
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<FeatureSubset, usize>, v| {
            if let Some(alpha) = assign_rectangle(v, n, k, epsilon) {
                *acc.entry(alpha).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (alpha, c) in b {
                *a.entry(alpha).or_insert(0) += c;
            }
            a
        });

    let masses = counts
        .into_iter()
        .map(|(alpha, c)| (alpha, c as f64 / k as f64))
        .collect();
    Ok(SparseAngularRepresentation {
        n,
        k,
        d,
        epsilon,
        threshold: None,
        masses,
    })
}

/// Order-statistic tail counts on a fixed sample.
///
/// For a level `x_j`, the marginal event is `X_i^j >= X^j_(n - ⌊k x_j⌋ + 1)`.
/// When `⌊k x_j⌋ = 0` the order statistic is taken as `+∞`: the event
/// `X >= +∞` is empty and `X < +∞` always holds.
pub struct TailCounter<'a> {
    data: &'a FeatureMatrix,
    ranker: MarginalRanker,
}

impl<'a> TailCounter<'a> {
    pub fn new(data: &'a FeatureMatrix) -> Self {
        Self {
            data,
            ranker: MarginalRanker::fit(data),
        }
    }

    fn order_levels(&self, k: usize, x: &[f64], what: &str) -> Result<Vec<f64>> {
        let n = self.data.n();
        if x.len() != self.data.d() {
            return Err(Error::DimensionMismatch {
                expected: self.data.d(),
                got: x.len(),
            });
        }
        x.iter()
            .enumerate()
            .map(|(j, &xj)| {
                if !(xj >= 0.0 && xj.is_finite()) {
                    return Err(Error::param(format!("{what}[{}] = {xj} must be >= 0", j + 1)));
                }
                let count = (k as f64 * xj).floor() as usize;
                if count > n {
                    return Err(Error::param(format!(
                        "floor(k * {what}[{}]) = {count} exceeds n = {n}",
                        j + 1
                    )));
                }
                Ok(if count == 0 {
                    f64::INFINITY
                } else {
                    self.ranker.sorted_column(j)[n - count]
                })
            })
            .collect()
    }

    /// `l_n(x) = (1/k) #{i : ∃j, X_i^j >= X^j_(n-⌊k x_j⌋+1)}`.
    pub fn stdf(&self, k: usize, x: &[f64]) -> Result<f64> {
        check_k(self.data.n(), k)?;
        let levels = self.order_levels(k, x, "x")?;
        let hits = self
            .data
            .rows()
            .filter(|row| row.iter().zip(&levels).any(|(v, t)| v >= t))
            .count();
        Ok(hits as f64 / k as f64)
    }

    /// `g_{n,α,β}(x, z)`: rows at or above the `x`-levels on every `j ∈ α`
    /// and strictly below the `z`-levels on every `j ∈ β`.
    pub fn g(
        &self,
        k: usize,
        x: &[f64],
        z: &[f64],
        alpha: FeatureSubset,
        beta: FeatureSubset,
    ) -> Result<f64> {
        check_k(self.data.n(), k)?;
        let d = self.data.d();
        if alpha.is_empty() {
            return Err(Error::param("alpha must be nonempty"));
        }
        if alpha.span() > d || beta.span() > d {
            return Err(Error::param(format!("subset index beyond d = {d}")));
        }
        let lower = self.order_levels(k, x, "x")?;
        let upper = self.order_levels(k, z, "z")?;
        let hits = self
            .data
            .rows()
            .filter(|row| {
                alpha.indices().all(|j| row[j] >= lower[j])
                    && beta.indices().all(|j| row[j] < upper[j])
            })
            .count();
        Ok(hits as f64 / k as f64)
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::param(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    Ok(())
}

pub fn empirical_stdf(data: &FeatureMatrix, k: usize, x: &[f64]) -> Result<f64> {
    TailCounter::new(data).stdf(k, x)
}

pub fn empirical_g(
    data: &FeatureMatrix,
    k: usize,
    x: &[f64],
    z: &[f64],
    alpha: FeatureSubset,
    beta: FeatureSubset,
) -> Result<f64> {
    TailCounter::new(data).g(k, x, z, alpha, beta)
}

#[derive(Serialize, Deserialize)]
struct MassEntry {
    subset: FeatureSubset,
    mass: f64,
}

#[derive(Serialize, Deserialize)]
struct RepresentationDoc {
    n: usize,
    k: usize,
    d: usize,
    epsilon: f64,
    p: Option<f64>,
    threshold: Option<f64>,
    masses: Vec<MassEntry>,
}

impl From<SparseAngularRepresentation> for RepresentationDoc {
    fn from(rep: SparseAngularRepresentation) -> Self {
        RepresentationDoc {
            n: rep.n,
            k: rep.k,
            d: rep.d,
            epsilon: rep.epsilon,
            p: rep.threshold.map(|t| t.p),
            threshold: rep.threshold.map(|t| t.value),
            masses: rep
                .sorted_entries()
                .into_iter()
                .map(|(subset, mass)| MassEntry { subset, mass })
                .collect(),
        }
    }
}

impl TryFrom<RepresentationDoc> for SparseAngularRepresentation {
    type Error = String;

    fn try_from(doc: RepresentationDoc) -> std::result::Result<Self, String> {
        check_params(doc.n, doc.k, doc.epsilon).map_err(|e| e.to_string())?;
        if doc.d == 0 || doc.d > MAX_FEATURES {
            return Err(format!("feature count {} outside 1..={MAX_FEATURES}", doc.d));
        }
        let threshold = match (doc.p, doc.threshold) {
            (Some(p), Some(value)) => Some(Threshold { p, value }),
            (None, None) => None,
            _ => return Err("'p' and 'threshold' must be given together".into()),
        };
        let mut masses = HashMap::with_capacity(doc.masses.len());
        for MassEntry { subset, mass } in doc.masses {
            if subset.is_empty() || subset.span() > doc.d {
                return Err(format!("subset {subset:?} invalid for d = {}", doc.d));
            }
            if !(mass > 0.0 && mass.is_finite()) {
                return Err(format!("mass {mass} of subset [{subset}] must be positive"));
            }
            if masses.insert(subset, mass).is_some() {
                return Err(format!("subset [{subset}] listed twice"));
            }
        }
        Ok(Self {
            n: doc.n,
            k: doc.k,
            d: doc.d,
            epsilon: doc.epsilon,
            threshold,
            masses,
        })
    }
}
