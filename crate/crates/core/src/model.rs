//! The DAMEX fit-then-score pipeline and model persistence.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::mass::{self, estimate_masses, SparseAngularRepresentation};
use crate::matrix::FeatureMatrix;
use crate::rank::MarginalRanker;
use crate::subset::{FeatureSubset, MAX_FEATURES};

/// Model file format written by [`DamexModel::save`].
pub const MODEL_VERSION: u64 = 1;

/// Number of extremes `k`: fixed, or `⌊√n⌋` resolved at fit time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KChoice {
    #[default]
    Auto,
    Fixed(usize),
}

impl KChoice {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            KChoice::Auto => (n as f64).sqrt().floor() as usize,
            KChoice::Fixed(k) => k,
        }
    }
}

impl fmt::Display for KChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KChoice::Auto => f.write_str("auto"),
            KChoice::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for KChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(KChoice::Auto);
        }
        s.parse()
            .map(KChoice::Fixed)
            .map_err(|_| Error::param(format!("k must be a positive integer or 'auto', got '{s}'")))
    }
}

impl Serialize for KChoice {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KChoice::Auto => serializer.serialize_str("auto"),
            KChoice::Fixed(k) => serializer.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for KChoice {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Fixed(usize),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Fixed(k) => Ok(KChoice::Fixed(k)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// How a new point is matched to a sub-cone when scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipMode {
    /// `α(x) = {j : v_j > ε·‖v‖∞}`: the rectangle rescaled to the point's own
    /// radius, so every point gets a nonempty subset.
    #[default]
    SelfScaledCone,
    /// The training rule: `α(x) = {j : v_j > ε·n/k}` when `‖v‖∞ >= n/k`,
    /// otherwise no subset and a zero score.
    FixedScaleRectangle,
}

impl FromStr for MembershipMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "self-scaled-cone" | "cone" => Ok(MembershipMode::SelfScaledCone),
            "fixed-scale-rectangle" | "rectangle" => Ok(MembershipMode::FixedScaleRectangle),
            _ => Err(Error::param(format!(
                "unknown membership mode '{s}' (self-scaled-cone | fixed-scale-rectangle)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamexParams {
    pub k: KChoice,
    pub epsilon: f64,
    pub p: f64,
    #[serde(default)]
    pub membership_mode: MembershipMode,
}

impl Default for DamexParams {
    fn default() -> Self {
        Self {
            k: KChoice::Auto,
            epsilon: 0.01,
            p: 0.1,
            membership_mode: MembershipMode::SelfScaledCone,
        }
    }
}

impl DamexParams {
    pub fn with_k(self, k: KChoice) -> Self {
        Self { k, ..self }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn with_p(self, p: f64) -> Self {
        Self { p, ..self }
    }

    pub fn with_mode(self, membership_mode: MembershipMode) -> Self {
        Self {
            membership_mode,
            ..self
        }
    }

    /// Resolves `k` for a training set of size `n` and checks all ranges.
    pub fn resolve(&self, n: usize) -> Result<usize> {
        let k = self.k.resolve(n);
        mass::check_params(n, k, self.epsilon)?;
        if !(self.p >= 0.0 && self.p.is_finite()) {
            return Err(Error::param(format!("p = {} must be >= 0", self.p)));
        }
        Ok(k)
    }
}

/// Score of one observation. Lower scores are more abnormal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRecord {
    pub row: usize,
    pub score: f64,
    /// `‖T̂(x)‖∞`.
    pub radius: f64,
    /// Matched sub-cone; `None` only below the radial threshold in
    /// fixed-scale mode.
    pub subset: Option<FeatureSubset>,
}

/// A fitted scorer: training margins plus the thresholded representation.
#[derive(Debug, Clone, PartialEq)]
pub struct DamexModel {
    ranker: MarginalRanker,
    representation: SparseAngularRepresentation,
    params: DamexParams,
}

impl DamexModel {
    /// Runs the four steps: fit margins, standardize the training rows,
    /// estimate sub-cone masses, threshold them.
    pub fn fit(data: &FeatureMatrix, params: DamexParams) -> Result<Self> {
        if data.d() > MAX_FEATURES {
            return Err(Error::input(format!(
                "{} features exceed the {MAX_FEATURES}-feature limit",
                data.d()
            )));
        }
        let k = params.resolve(data.n())?;
        let (ranker, points) = MarginalRanker::fit_training(data);
        let raw = estimate_masses(&points, k, params.epsilon)?;
        let representation = raw.apply_threshold(params.p)?;
        Ok(Self {
            ranker,
            representation,
            params,
        })
    }

    pub fn ranker(&self) -> &MarginalRanker {
        &self.ranker
    }

    pub fn representation(&self) -> &SparseAngularRepresentation {
        &self.representation
    }

    pub fn params(&self) -> &DamexParams {
        &self.params
    }

    pub fn n_train(&self) -> usize {
        self.ranker.n()
    }

    pub fn d(&self) -> usize {
        self.ranker.d()
    }

    /// Sub-cone a point is matched to, with its radius.
    pub fn locate(&self, x: &[f64]) -> Result<(Option<FeatureSubset>, f64)> {
        let v = self.ranker.standardize(x)?;
        let r = v.radius();
        let eps = self.params.epsilon;
        let alpha = match self.params.membership_mode {
            MembershipMode::SelfScaledCone => Some(mass::subset_above(v.coords(), eps * r)),
            MembershipMode::FixedScaleRectangle => {
                mass::assign_rectangle(&v, self.n_train(), self.representation.k(), eps)
            }
        };
        Ok((alpha, r))
    }

    /// `s_n(x) = M̂(α(x)) / ‖T̂(x)‖∞`.
    pub fn score(&self, x: &[f64]) -> Result<ScoreRecord> {
        let (subset, radius) = self.locate(x)?;
        let score = subset.map_or(0.0, |a| self.representation.mass(a) / radius);
        Ok(ScoreRecord {
            row: 0,
            score,
            radius,
            subset,
        })
    }

    /// Scores every row, preserving order.
    pub fn score_batch(&self, data: &FeatureMatrix) -> Result<Vec<ScoreRecord>> {
        if data.d() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: data.d(),
            });
        }
        data.rows()
            .collect::<Vec<_>>()
            .par_iter()
            .enumerate()
            .map(|(row, x)| self.score(x).map(|rec| ScoreRecord { row, ..rec }))
            .collect()
    }

    /// Like [`score_batch`](Self::score_batch) for loose rows; an empty slice
    /// gives an empty result.
    pub fn score_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<ScoreRecord>> {
        rows.par_iter()
            .enumerate()
            .map(|(row, x)| self.score(x).map(|rec| ScoreRecord { row, ..rec }))
            .collect()
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        let doc = ModelDoc {
            version: MODEL_VERSION,
            params: self.params,
            ranker: self.ranker.clone(),
            representation: self.representation.clone(),
        };
        serde_json::to_writer(writer, &doc).map_err(|e| match e.io_error_kind() {
            Some(kind) => Error::Io(std::io::Error::new(kind, e.to_string())),
            None => Error::input(e.to_string()),
        })
    }

    /// Reads a model document. Either the whole model loads or an error is
    /// returned; unknown versions are rejected before the body is parsed.
    pub fn load<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_error)?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(MODEL_VERSION) => {}
            Some(found) => {
                return Err(Error::Version {
                    found,
                    supported: MODEL_VERSION,
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    column: 1,
                    message: "missing integer 'version' field".into(),
                })
            }
        }
        // Re-parse from text so errors carry a location.
        let doc: ModelDoc = serde_json::from_str(&text).map_err(parse_error)?;
        let ranker = MarginalRanker::from_sorted_columns(doc.ranker.sorted_columns().to_vec())?;
        let rep = doc.representation;
        if rep.n() != ranker.n() || rep.d() != ranker.d() {
            return Err(Error::input(format!(
                "representation is for n = {}, d = {} but ranker has n = {}, d = {}",
                rep.n(),
                rep.d(),
                ranker.n(),
                ranker.d()
            )));
        }
        if !rep.is_thresholded() {
            return Err(Error::input("stored representation is not thresholded"));
        }
        if rep.epsilon() != doc.params.epsilon {
            return Err(Error::input("representation epsilon differs from params"));
        }
        Ok(Self {
            ranker,
            representation: rep,
            params: doc.params,
        })
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    version: u64,
    params: DamexParams,
    ranker: MarginalRanker,
    representation: SparseAngularRepresentation,
}
