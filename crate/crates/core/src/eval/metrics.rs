//! Ranking metrics over abnormality scores (higher = more abnormal).
//!
//! DAMEX scores run the other way, so callers pass `-s_n`. Both metrics
//! treat tied scores as one block, which matters here: rank-based scores tie
//! a lot.

use crate::error::{Error, Result};

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::input(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::input(format!("score {s} is not comparable")));
    }
    Ok(())
}

/// Indices ordered by decreasing score.
fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Consecutive runs of equal score in `order`.
fn tie_blocks<'a>(scores: &'a [f64], order: &'a [usize]) -> impl Iterator<Item = &'a [usize]> {
    order.chunk_by(move |&a, &b| scores[a] == scores[b])
}

/// Mann–Whitney AUC: the probability that a random anomaly outscores a
/// random normal point, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedMetric(
            "ROC AUC needs at least one anomaly and one normal point".into(),
        ));
    }
    // Twice the U statistic, kept integral: each positive collects 2 per
    // negative strictly below it and 1 per tied negative.
    let mut doubled_u = 0u64;
    let mut negatives_below = negatives;
    for block in tie_blocks(scores, &descending_order(scores)) {
        let pos = block.iter().filter(|&&i| labels[i]).count() as u64;
        let neg = block.len() as u64 - pos;
        negatives_below -= neg;
        doubled_u += pos * (2 * negatives_below + neg);
    }
    Ok(doubled_u as f64 / (2 * positives * negatives) as f64)
}

/// Average precision `Σ (R_k - R_{k-1}) P_k`, sweeping thresholds from the
/// most abnormal score down; each tie block is one threshold.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::UndefinedMetric(
            "average precision needs at least one anomaly".into(),
        ));
    }
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut ap = 0.0;
    for block in tie_blocks(scores, &descending_order(scores)) {
        let gained = block.iter().filter(|&&i| labels[i]).count();
        tp += gained;
        seen += block.len();
        if gained > 0 {
            ap += average_precision_term(gained, positives, tp, seen);
        }
    }
    Ok(ap)
}

/// Recall gain times precision at one threshold.
#[inline]
pub(crate) fn average_precision_term(gained: usize, positives: usize, tp: usize, seen: usize) -> f64 {
    (gained as f64 / positives as f64) * (tp as f64 / seen as f64)
}

/// ROC curve points `(fpr, tpr)` from the most abnormal threshold down,
/// starting at `(0, 0)`.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<(f64, f64)>> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedMetric("ROC curve needs both classes".into()));
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut curve = vec![(0.0, 0.0)];
    for block in tie_blocks(scores, &descending_order(scores)) {
        let pos = block.iter().filter(|&&i| labels[i]).count();
        tp += pos;
        fp += block.len() - pos;
        curve.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    Ok(curve)
}
