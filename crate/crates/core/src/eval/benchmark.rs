//! Extreme-region evaluation: train on normal data, score a held-out test
//! set, keep only test points whose standardized radius exceeds `√n_train`,
//! and compute AUCs there.

use std::collections::HashMap;
use std::io::Read;

use log::warn;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::datasets::LabeledDataset;
use super::metrics::{pr_auc, roc_auc};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::model::{DamexModel, DamexParams};
use crate::sim::run_rng;

/// Flags rows with `‖T̂(x)‖∞ > √n_train`.
pub fn extreme_mask(model: &DamexModel, data: &FeatureMatrix) -> Result<Vec<bool>> {
    let cut = (model.n_train() as f64).sqrt();
    let points = model.ranker().standardize_all(data)?;
    Ok(points.iter().map(|v| v.radius() > cut).collect())
}

/// Externally computed abnormality scores keyed by dataset row index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaselineScores(HashMap<usize, f64>);

impl BaselineScores {
    /// Reads `row_index,abnormality_score` lines after a header row.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut scores = HashMap::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let parse_err = || Error::input(format!("baseline row {}: expected 'row_index,abnormality_score'", i + 1));
            if record.len() != 2 {
                return Err(parse_err());
            }
            let row: usize = record[0].parse().map_err(|_| parse_err())?;
            let score: f64 = record[1].parse().map_err(|_| parse_err())?;
            if score.is_nan() {
                return Err(parse_err());
            }
            if scores.insert(row, score).is_some() {
                return Err(Error::input(format!("baseline lists row {row} twice")));
            }
        }
        Ok(Self(scores))
    }

    pub fn get(&self, row: usize) -> Option<f64> {
        self.0.get(&row).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkConfig {
    pub runs: usize,
    pub seed: u64,
    /// Share of normal rows used for training; the rest join the test set.
    pub train_fraction: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            runs: 20,
            seed: 0,
            train_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucPair {
    pub roc_auc: f64,
    pub pr_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_extreme: usize,
    pub anomalies_extreme: usize,
    /// `None` when the extreme region is empty or holds a single class.
    pub damex: Option<AucPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<AucPair>,
}

/// Averages over the non-degenerate runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub runs: usize,
    pub degenerate_runs: usize,
    pub params: DamexParams,
    pub train_fraction: f64,
    pub n_test: f64,
    pub n_extreme: f64,
    pub anomaly_rate_extreme: f64,
    pub roc_auc: f64,
    pub pr_auc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<AucPair>,
    pub per_run: Vec<RunResult>,
}

fn aucs(scores: &[f64], labels: &[bool]) -> Option<AucPair> {
    Some(AucPair {
        roc_auc: roc_auc(scores, labels).ok()?,
        pr_auc: pr_auc(scores, labels).ok()?,
    })
}

fn one_run(
    data: &LabeledDataset,
    params: DamexParams,
    cfg: &BenchmarkConfig,
    baseline: Option<&BaselineScores>,
    run: usize,
) -> Result<RunResult> {
    let mut rng = run_rng(cfg.seed, run as u64);
    let (mut normal, anomalies): (Vec<usize>, Vec<usize>) =
        (0..data.n()).partition(|&i| !data.labels[i]);
    normal.shuffle(&mut rng);
    let n_train = ((normal.len() as f64 * cfg.train_fraction).round() as usize).max(1);
    if n_train >= normal.len() {
        return Err(Error::param("train fraction leaves no normal rows for testing"));
    }
    let mut train = normal[..n_train].to_vec();
    train.sort_unstable();
    let mut test: Vec<usize> = normal[n_train..].iter().chain(&anomalies).copied().collect();
    test.sort_unstable();

    let model = DamexModel::fit(&data.features.select_rows(&train)?, params)?;
    let test_x = data.features.select_rows(&test)?;
    let mask = extreme_mask(&model, &test_x)?;
    let records = model.score_batch(&test_x)?;

    let extreme: Vec<usize> = (0..test.len()).filter(|&t| mask[t]).collect();
    let labels: Vec<bool> = extreme.iter().map(|&t| data.labels[test[t]]).collect();
    // metrics want higher = more abnormal
    let scores: Vec<f64> = extreme.iter().map(|&t| -records[t].score).collect();
    let damex = aucs(&scores, &labels);
    if damex.is_none() {
        warn!(
            "run {run}: extreme region has {} points ({} anomalies); excluded",
            extreme.len(),
            labels.iter().filter(|&&l| l).count()
        );
    }

    let baseline = match baseline {
        Some(b) => {
            let scores = extreme
                .iter()
                .map(|&t| {
                    b.get(test[t]).ok_or_else(|| {
                        Error::input(format!("baseline has no score for row {}", test[t]))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            aucs(&scores, &labels)
        }
        None => None,
    };

    Ok(RunResult {
        run,
        n_train,
        n_test: test.len(),
        n_extreme: extreme.len(),
        anomalies_extreme: labels.iter().filter(|&&l| l).count(),
        damex,
        baseline,
    })
}

/// Repeats the random split/fit/evaluate cycle `cfg.runs` times; run `i`
/// draws its split from seed `cfg.seed + i`.
pub fn run_benchmark(
    data: &LabeledDataset,
    params: DamexParams,
    cfg: &BenchmarkConfig,
    baseline: Option<&BaselineScores>,
) -> Result<EvalReport> {
    if cfg.runs == 0 {
        return Err(Error::param("runs must be positive"));
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::param(format!(
            "train fraction {} must lie in (0, 1)",
            cfg.train_fraction
        )));
    }
    let anomalies = data.anomalies();
    if anomalies == 0 || anomalies == data.n() {
        return Err(Error::UndefinedMetric(
            "dataset needs both normal and anomalous rows".into(),
        ));
    }
    let per_run: Vec<RunResult> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| one_run(data, params, cfg, baseline, run))
        .collect::<Result<_>>()?;

    let valid: Vec<&RunResult> = per_run.iter().filter(|r| r.damex.is_some()).collect();
    if valid.is_empty() {
        return Err(Error::UndefinedMetric(
            "every run had a degenerate extreme region".into(),
        ));
    }
    let mean = |f: &dyn Fn(&RunResult) -> f64| valid.iter().map(|r| f(r)).sum::<f64>() / valid.len() as f64;
    let damex = |r: &RunResult| r.damex.expect("filtered");

    let with_baseline: Vec<AucPair> = valid.iter().filter_map(|r| r.baseline).collect();
    let baseline = (!with_baseline.is_empty()).then(|| AucPair {
        roc_auc: with_baseline.iter().map(|a| a.roc_auc).sum::<f64>() / with_baseline.len() as f64,
        pr_auc: with_baseline.iter().map(|a| a.pr_auc).sum::<f64>() / with_baseline.len() as f64,
    });

    Ok(EvalReport {
        runs: cfg.runs,
        degenerate_runs: cfg.runs - valid.len(),
        params,
        train_fraction: cfg.train_fraction,
        n_test: mean(&|r| r.n_test as f64),
        n_extreme: mean(&|r| r.n_extreme as f64),
        anomaly_rate_extreme: mean(&|r| r.anomalies_extreme as f64 / r.n_extreme as f64),
        roc_auc: mean(&|r| damex(r).roc_auc),
        pr_auc: mean(&|r| damex(r).pr_auc),
        baseline,
        per_run,
    })
}
