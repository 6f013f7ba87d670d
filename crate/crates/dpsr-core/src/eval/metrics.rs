//! Rating and ranking metrics.
//!
//! Ranking metrics take the test items of each user as (predicted, true)
//! pairs listed in ascending item order. Items are ranked by predicted
//! rating descending with ties resolved toward the earlier (smaller-index)
//! item via a stable sort; relevance is binary at the given threshold.
//! Precision@k divides by k even when a user has fewer than k test items,
//! and NDCG of a user with no relevant items is 0.

use crate::error::{Error, Result};

/// Per-cell metric record for one experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub rmse: f64,
    pub mae: f64,
    pub precision_at_10: f64,
    pub ndcg_at_10: f64,
}

fn check_paired(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::Metric("empty prediction vector".to_string()));
    }
    if pred.len() != truth.len() {
        return Err(Error::Metric(format!(
            "length mismatch: {} predictions vs {} truths",
            pred.len(),
            truth.len()
        )));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_paired(pred, truth)?;
    let se: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((se / pred.len() as f64).sqrt())
}

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_paired(pred, truth)?;
    let ae: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum();
    Ok(ae / pred.len() as f64)
}

/// Rank one user's test items by predicted rating descending (stable, so
/// ties keep ascending item order) and return the true ratings in rank order.
fn ranked_truths(items: &[(f64, f64)]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[b].0.partial_cmp(&items[a].0).unwrap());
    order.into_iter().map(|idx| items[idx].1).collect()
}

/// Mean over users of the fraction of the top-k ranked test items that are
/// relevant (true rating >= threshold). Users without test items are
/// skipped; if none qualify this is a metric error.
pub fn precision_at_k(
    per_user_test_items: &[Vec<(f64, f64)>],
    k: usize,
    relevance_threshold: f64,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::Metric("k must be >= 1".to_string()));
    }
    let mut total = 0.0;
    let mut users = 0usize;
    for items in per_user_test_items {
        if items.is_empty() {
            continue;
        }
        let ranked = ranked_truths(items);
        let hits = ranked
            .iter()
            .take(k)
            .filter(|t| **t >= relevance_threshold)
            .count();
        total += hits as f64 / k as f64;
        users += 1;
    }
    if users == 0 {
        return Err(Error::Metric("no users with test items".to_string()));
    }
    Ok(total / users as f64)
}

/// Mean over users of DCG@k / IDCG@k with binary gains at the threshold;
/// users whose ideal gain is zero contribute 0.
pub fn ndcg_at_k(
    per_user_test_items: &[Vec<(f64, f64)>],
    k: usize,
    relevance_threshold: f64,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::Metric("k must be >= 1".to_string()));
    }
    let discounted = |gains: &[f64]| -> f64 {
        gains
            .iter()
            .take(k)
            .enumerate()
            .map(|(rank, g)| g / ((rank + 2) as f64).log2())
            .sum()
    };
    let mut total = 0.0;
    let mut users = 0usize;
    for items in per_user_test_items {
        if items.is_empty() {
            continue;
        }
        let gains: Vec<f64> = ranked_truths(items)
            .iter()
            .map(|t| if *t >= relevance_threshold { 1.0 } else { 0.0 })
            .collect();
        let mut ideal = gains.clone();
        ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let idcg = discounted(&ideal);
        total += if idcg > 0.0 {
            discounted(&gains) / idcg
        } else {
            0.0
        };
        users += 1;
    }
    if users == 0 {
        return Err(Error::Metric("no users with test items".to_string()));
    }
    Ok(total / users as f64)
}
