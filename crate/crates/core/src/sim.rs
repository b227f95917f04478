//! Multivariate asymmetric logistic max-stable model.
//!
//! The joint CDF is
//!
//! ```text
//! G(x) = exp{ -Σ_m ( Σ_{j ∈ α_m} (A_j x_j)^(-1/w_m) )^(w_m) },   A_j = #{m : j ∈ α_m}
//! ```
//!
//! with unit-Fréchet margins. Each block `α_m` is a symmetric logistic
//! vector `Z_{m,j} = (S_m / E_{m,j})^(w_m)` built from a positive stable
//! `S_m` (Laplace transform `exp(-t^w)`) and independent unit exponentials;
//! the output is `X_j = max_{m ∋ j} Z_{m,j} / A_j`.

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::model::{DamexModel, DamexParams};
use crate::subset::{FeatureSubset, MAX_FEATURES};

/// Dependence parameter used for every block unless stated otherwise.
pub const DEFAULT_DEPENDENCE: f64 = 0.1;

/// Seeded stream for run `index` of an experiment with base seed `seed`.
pub fn run_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index))
}

/// Ground-truth dependence structure: charged subsets and their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDoc", into = "SpecDoc")]
pub struct LogisticSpec {
    d: usize,
    subsets: Vec<FeatureSubset>,
    weights: Vec<f64>,
    multiplicity: Vec<usize>,
}

impl LogisticSpec {
    pub fn new(d: usize, subsets: Vec<FeatureSubset>, weights: Vec<f64>) -> Result<Self> {
        if d == 0 || d > MAX_FEATURES {
            return Err(Error::param(format!("d = {d} outside 1..={MAX_FEATURES}")));
        }
        if subsets.is_empty() || subsets.len() != weights.len() {
            return Err(Error::param("need one weight per subset and at least one subset"));
        }
        let mut seen = HashSet::new();
        for s in &subsets {
            if s.is_empty() || s.span() > d {
                return Err(Error::param(format!("subset [{s}] invalid for d = {d}")));
            }
            if !seen.insert(*s) {
                return Err(Error::param(format!("subset [{s}] listed twice")));
            }
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && **w <= 1.0)) {
            return Err(Error::param(format!("dependence parameter {w} outside (0, 1]")));
        }
        let multiplicity: Vec<usize> = (0..d)
            .map(|j| subsets.iter().filter(|s| s.contains(j)).count())
            .collect();
        if let Some(j) = multiplicity.iter().position(|&a| a == 0) {
            return Err(Error::param(format!("feature {} belongs to no subset", j + 1)));
        }
        Ok(Self {
            d,
            subsets,
            weights,
            multiplicity,
        })
    }

    /// All blocks share the dependence parameter `w`.
    pub fn uniform(d: usize, subsets: Vec<FeatureSubset>, w: f64) -> Result<Self> {
        let weights = vec![w; subsets.len()];
        Self::new(d, subsets, weights)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn subsets(&self) -> &[FeatureSubset] {
        &self.subsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `A_j`: number of subsets containing feature `j`.
    pub fn multiplicity(&self, j: usize) -> usize {
        self.multiplicity[j]
    }

    /// Mass of the limit exponent measure on each sub-cone, restricted to
    /// `{‖v‖∞ >= 1}`. A block with `w < 1` charges its own cone with
    /// `(Σ_{j∈α} A_j^(-1/w))^w`; a block with `w = 1` is independent and
    /// spreads `1/A_j` onto each singleton.
    pub fn true_masses(&self) -> Vec<(FeatureSubset, f64)> {
        let mut out: Vec<(FeatureSubset, f64)> = Vec::new();
        let mut add = |s: FeatureSubset, m: f64| match out.iter_mut().find(|(a, _)| *a == s) {
            Some(entry) => entry.1 += m,
            None => out.push((s, m)),
        };
        for (s, &w) in self.subsets.iter().zip(&self.weights) {
            if w < 1.0 {
                let inner: f64 = s
                    .indices()
                    .map(|j| (self.multiplicity[j] as f64).powf(-1.0 / w))
                    .sum();
                add(*s, inner.powf(w));
            } else {
                for j in s.indices() {
                    add(FeatureSubset::singleton(j), 1.0 / self.multiplicity[j] as f64);
                }
            }
        }
        out.sort_by_key(|(a, _)| a.to_one_based());
        out
    }
}

/// Draws `count` distinct nonempty subsets of `{1..d}` uniformly without
/// replacement, with dependence parameter `w` on each.
///
/// Features left uncovered are each added to a uniformly chosen drawn subset.
/// No duplicate can arise: the augmented subset is the only one holding the
/// added feature.
pub fn random_support<R: Rng + ?Sized>(
    d: usize,
    count: usize,
    w: f64,
    rng: &mut R,
) -> Result<LogisticSpec> {
    if d == 0 || d > MAX_FEATURES {
        return Err(Error::param(format!("d = {d} outside 1..={MAX_FEATURES}")));
    }
    let available = if d == MAX_FEATURES {
        u64::MAX
    } else {
        (1u64 << d) - 1
    };
    if count == 0 || count as u64 > available {
        return Err(Error::param(format!(
            "cannot draw K = {count} distinct nonempty subsets of {d} features"
        )));
    }
    let mut subsets: Vec<FeatureSubset> = if d <= 20 {
        index::sample(rng, available as usize, count)
            .into_iter()
            .map(|i| FeatureSubset::from_bits(i as u64 + 1))
            .collect()
    } else {
        let mut seen = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let bits = rng.random::<u64>() & available;
            if bits != 0 && seen.insert(bits) {
                out.push(FeatureSubset::from_bits(bits));
            }
        }
        out
    };
    let covered = subsets
        .iter()
        .fold(FeatureSubset::EMPTY, |acc, s| acc.union(*s));
    for j in covered.complement(d).indices() {
        let m = rng.random_range(0..subsets.len());
        subsets[m].insert(j);
    }
    LogisticSpec::uniform(d, subsets, w)
}

/// Logarithm of a positive stable variable with Laplace transform
/// `exp(-t^w)`, by Kanter's representation
/// `S = sin(wU) sin((1-w)U)^((1-w)/w) / (sin(U)^(1/w) E^((1-w)/w))`,
/// `U ~ Uniform(0, π)`, `E ~ Exp(1)`.
pub fn ln_positive_stable<R: Rng + ?Sized>(w: f64, rng: &mut R) -> Result<f64> {
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::param(format!("stable index w = {w} must lie in (0, 1)")));
    }
    Ok(ln_positive_stable_unchecked(w, rng))
}

fn ln_positive_stable_unchecked<R: Rng + ?Sized>(w: f64, rng: &mut R) -> f64 {
    // open interval: U = 0 would give sin(U) = 0
    let u = loop {
        let u = rng.random::<f64>() * PI;
        if u > 0.0 {
            break u;
        }
    };
    let e: f64 = rng.sample(Exp1);
    let b = (1.0 - w) / w;
    (w * u).sin().ln() + b * ((1.0 - w) * u).sin().ln() - u.sin().ln() / w - b * e.ln()
}

pub fn positive_stable<R: Rng + ?Sized>(w: f64, rng: &mut R) -> Result<f64> {
    ln_positive_stable(w, rng).map(f64::exp)
}

/// One draw from `G`, written into `out` (length `d`).
fn sample_row<R: Rng + ?Sized>(spec: &LogisticSpec, rng: &mut R, out: &mut [f64]) {
    out.fill(0.0);
    for (s, &w) in spec.subsets.iter().zip(&spec.weights) {
        let ln_s = if w < 1.0 {
            ln_positive_stable_unchecked(w, rng)
        } else {
            0.0
        };
        for j in s.indices() {
            let e: f64 = rng.sample(Exp1);
            let z = (w * (ln_s - e.ln())).exp() / spec.multiplicity[j] as f64;
            if z > out[j] {
                out[j] = z;
            }
        }
    }
}

/// `n` i.i.d. draws from `G`.
pub fn sample<R: Rng + ?Sized>(spec: &LogisticSpec, n: usize, rng: &mut R) -> Result<FeatureMatrix> {
    let mut values = vec![0.0; n * spec.d];
    for row in values.chunks_exact_mut(spec.d) {
        sample_row(spec, rng, row);
    }
    FeatureMatrix::new(values, n, spec.d)
}

/// Direct evaluation of `G(x)`. Coordinates may be `+∞`.
pub fn glog_cdf(spec: &LogisticSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.d {
        return Err(Error::DimensionMismatch {
            expected: spec.d,
            got: x.len(),
        });
    }
    if let Some(v) = x.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::param(format!("CDF argument {v} must be positive")));
    }
    let exponent: f64 = spec
        .subsets
        .iter()
        .zip(&spec.weights)
        .map(|(s, &w)| {
            let inner: f64 = s
                .indices()
                .map(|j| (spec.multiplicity[j] as f64 * x[j]).powf(-1.0 / w))
                .sum();
            inner.powf(w)
        })
        .sum();
    Ok((-exponent).exp())
}

/// One support-recovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRun {
    pub seed: u64,
    pub truth: Vec<FeatureSubset>,
    pub estimated: Vec<FeatureSubset>,
    /// `|D △ D̂|`.
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct RecoveryReport {
    #[serde(rename = "K")]
    pub num_subsets: usize,
    pub n: usize,
    pub d: usize,
    pub w: f64,
    pub runs: usize,
    pub params: DamexParams,
    pub errors: Vec<usize>,
    pub mean_errors: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub details: Vec<RecoveryRun>,
}

/// Settings for [`support_recovery`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryConfig {
    pub d: usize,
    pub num_subsets: usize,
    pub n: usize,
    pub runs: usize,
    pub w: f64,
    pub seed: u64,
}

/// Number of subsets in exactly one of the two families.
pub fn symmetric_difference(a: &[FeatureSubset], b: &[FeatureSubset]) -> usize {
    let a: HashSet<_> = a.iter().collect();
    let b: HashSet<_> = b.iter().collect();
    a.symmetric_difference(&b).count()
}

fn recovery_run(cfg: &RecoveryConfig, params: DamexParams, run: usize) -> Result<RecoveryRun> {
    let mut rng = run_rng(cfg.seed, run as u64);
    let spec = random_support(cfg.d, cfg.num_subsets, cfg.w, &mut rng)?;
    let data = sample(&spec, cfg.n, &mut rng)?;
    let model = DamexModel::fit(&data, params)?;
    let mut truth = spec.subsets().to_vec();
    truth.sort_by_key(|s| s.to_one_based());
    let estimated = model.representation().subsets();
    Ok(RecoveryRun {
        seed: cfg.seed.wrapping_add(run as u64),
        errors: symmetric_difference(&truth, &estimated),
        truth,
        estimated,
    })
}

/// Repeats: draw a random support, simulate, fit, compare charged subsets
/// with the truth. Run `i` uses seed `seed + i`, so the report does not
/// depend on scheduling.
pub fn support_recovery(cfg: &RecoveryConfig, params: DamexParams) -> Result<RecoveryReport> {
    if cfg.runs == 0 {
        return Err(Error::param("runs must be positive"));
    }
    params.resolve(cfg.n)?;
    let details: Vec<RecoveryRun> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| recovery_run(cfg, params, run))
        .collect::<Result<_>>()?;
    let errors: Vec<usize> = details.iter().map(|r| r.errors).collect();
    let mean_errors = errors.iter().sum::<usize>() as f64 / cfg.runs as f64;
    Ok(RecoveryReport {
        num_subsets: cfg.num_subsets,
        n: cfg.n,
        d: cfg.d,
        w: cfg.w,
        runs: cfg.runs,
        params,
        errors,
        mean_errors,
        details,
    })
}

#[derive(Serialize, Deserialize)]
struct SpecDoc {
    d: usize,
    subsets: Vec<FeatureSubset>,
    weights: Vec<f64>,
}

impl From<LogisticSpec> for SpecDoc {
    fn from(spec: LogisticSpec) -> Self {
        SpecDoc {
            d: spec.d,
            subsets: spec.subsets,
            weights: spec.weights,
        }
    }
}

impl TryFrom<SpecDoc> for LogisticSpec {
    type Error = Error;

    fn try_from(doc: SpecDoc) -> Result<Self> {
        LogisticSpec::new(doc.d, doc.subsets, doc.weights)
    }
}
