//! Ranking metrics for binary scores.

use crate::error::{Error, Result};

fn check(scores: &[f64], labels: &[f64]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "scores vs labels",
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("NaN score".into()));
    }
    let mut pos = 0;
    for &y in labels {
        if y == 1.0 {
            pos += 1;
        } else if y != -1.0 {
            return Err(Error::InvalidLabels(format!("metric label {y} is not +-1")));
        }
    }
    Ok((pos, labels.len() - pos))
}

/// Area under the ROC curve in Mann–Whitney form: the probability that a
/// random positive outscores a random negative, ties counting 1/2.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric(
            "ROC needs at least one positive and one negative".into(),
        ));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Walk groups of tied scores in ascending order; each positive beats
    // every negative below its group and ties with those inside it.
    let mut wins = 0.0;
    let mut neg_below = 0usize;
    let mut g = 0;
    while g < idx.len() {
        let mut end = g;
        while end < idx.len() && scores[idx[end]] == scores[idx[g]] {
            end += 1;
        }
        let (mut p, mut q) = (0usize, 0usize);
        for &i in &idx[g..end] {
            if labels[i] == 1.0 {
                p += 1;
            } else {
                q += 1;
            }
        }
        wins += p as f64 * (neg_below as f64 + 0.5 * q as f64);
        neg_below += q;
        g = end;
    }
    Ok(wins / (pos as f64 * neg as f64))
}

/// Precision-recall break-even point: the precision of the `n₊`
/// highest-scoring examples, `n₊` being the number of positives. Tied
/// scores keep their input order.
pub fn prbep(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    if pos == 0 {
        return Err(Error::Metric("PRBEP needs at least one positive".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let hits = idx[..pos].iter().filter(|&&i| labels[i] == 1.0).count();
    Ok(hits as f64 / pos as f64)
}

/// Fraction of examples with `sign(score) == label`, counting a zero score
/// as +1.
pub fn accuracy(scores: &[f64], labels: &[f64]) -> Result<f64> {
    check(scores, labels)?;
    if scores.is_empty() {
        return Err(Error::Metric("accuracy of an empty set".into()));
    }
    let hits = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &y)| (if s >= 0.0 { 1.0 } else { -1.0 }) == y)
        .count();
    Ok(hits as f64 / scores.len() as f64)
}

/// Fraction of predicted classes equal to the true ones.
pub fn class_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "predictions vs labels",
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Metric("accuracy of an empty set".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}
