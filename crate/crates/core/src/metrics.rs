//! Error metrics and ROC analysis of thresholded regression outputs.

use serde::{Deserialize, Serialize};

use crate::data::PointWeights;
use crate::error::{Error, Result};

fn check_pair(predictions: &[f64], targets: &[f64]) -> Result<()> {
    if predictions.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if !predictions.iter().chain(targets).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("metric input"));
    }
    Ok(())
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_pair(predictions, targets)?;
    let sse = compensated_sum(predictions.iter().zip(targets).map(|(p, y)| (y - p) * (y - p)));
    Ok(sse / predictions.len() as f64)
}

pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    mse(predictions, targets).map(f64::sqrt)
}

/// RMSE with each residual scaled by its point weight before squaring.
pub fn wrmse(predictions: &[f64], targets: &[f64], beta: &PointWeights) -> Result<f64> {
    check_pair(predictions, targets)?;
    if beta.len() != targets.len() {
        return Err(Error::DimensionMismatch(format!("{} point weights for {} targets", beta.len(), targets.len())));
    }
    let sse = compensated_sum(predictions.iter().zip(targets).zip(beta.as_slice()).map(|((p, y), b)| {
        let e = b * (y - p);
        e * e
    }));
    Ok((sse / predictions.len() as f64).sqrt())
}

/// Activity labels: `value >= threshold`.
pub fn labels_from_threshold(values: &[f64], threshold: f64) -> Vec<bool> {
    values.iter().map(|&v| v >= threshold).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are classified positive; `+inf` for the origin.
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoudenPoint {
    pub threshold: f64,
    pub j: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// From `(0, 0)` to `(1, 1)` with thresholds descending.
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub youden: YoudenPoint,
}

/// Threshold sweep over the distinct scores; tied scores form one (possibly
/// diagonal) step and the AUC is the trapezoidal area.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite("ROC scores"));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Degenerate("ROC needs both positive and negative labels".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: f64::INFINITY }];
    // J = (tp * negatives - fp * positives) / (positives * negatives), compared
    // on the integer numerator so rounding cannot decide ties
    let j_numerator = |tp: usize, fp: usize| (tp * negatives) as i128 - (fp * positives) as i128;
    let mut best = (0i128, 0usize);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut k = 0;
    while k < order.len() {
        let threshold = scores[order[k]];
        while k < order.len() && scores[order[k]] == threshold {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let prev = *points.last().expect("origin present");
        let p = RocPoint { fpr: fp as f64 / negatives as f64, tpr: tp as f64 / positives as f64, threshold };
        auc += (p.fpr - prev.fpr) * (p.tpr + prev.tpr) * 0.5;
        points.push(p);
        // ties in J go to the lower threshold, i.e. the later point
        let num = j_numerator(tp, fp);
        if num >= best.0 {
            best = (num, points.len() - 1);
        }
    }

    let at = points[best.1];
    let youden = YoudenPoint {
        threshold: at.threshold,
        j: best.0 as f64 / (positives * negatives) as f64,
        fpr: at.fpr,
        tpr: at.tpr,
    };

    Ok(RocCurve { points, auc, youden })
}
