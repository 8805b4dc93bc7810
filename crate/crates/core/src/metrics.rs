//! Binary classification metrics and actual-vs-predicted statistics.
//!
//! Class 1 is the positive class throughout. Metrics with a vanishing
//! denominator (sensitivity with no positives, Pearson r on a constant
//! series, Gini on a single-class split) are reported as *undefined* —
//! `None` plus an entry in the report's `flags` — never silently coerced
//! to zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("input sequences must not be empty")]
    Empty,
    #[error("labels must be 0 or 1, found {0}")]
    BadLabel(u8),
    #[error("scores must be finite")]
    NonFiniteScore,
    #[error("confusion counts sum to zero")]
    EmptyCounts,
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
}

/// Confusion matrix counts with class 1 as positive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    /// Tallies counts from parallel actual/predicted label sequences.
    pub fn from_labels(actual: &[u8], predicted: &[u8]) -> Result<Self, MetricsError> {
        if actual.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch(actual.len(), predicted.len()));
        }
        if actual.is_empty() {
            return Err(MetricsError::Empty);
        }
        let mut counts = ConfusionCounts::default();
        for (&a, &p) in actual.iter().zip(predicted) {
            if a > 1 {
                return Err(MetricsError::BadLabel(a));
            }
            if p > 1 {
                return Err(MetricsError::BadLabel(p));
            }
            match (a, p) {
                (1, 1) => counts.tp += 1,
                (0, 0) => counts.tn += 1,
                (0, 1) => counts.fp += 1,
                (1, 0) => counts.fn_ += 1,
                _ => unreachable!(),
            }
        }
        Ok(counts)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    /// `100 · (TP + TN) / N`.
    pub fn accuracy(&self) -> Result<f64, MetricsError> {
        if self.total() == 0 {
            return Err(MetricsError::EmptyCounts);
        }
        Ok(100.0 * (self.tp + self.tn) as f64 / self.total() as f64)
    }

    /// True positive rate `TP / (TP + FN)`; undefined without positives.
    pub fn sensitivity(&self) -> Option<f64> {
        let p = self.positives();
        (p > 0).then(|| self.tp as f64 / p as f64)
    }

    /// True negative rate `TN / (TN + FP)`; undefined without negatives.
    pub fn specificity(&self) -> Option<f64> {
        let n = self.negatives();
        (n > 0).then(|| self.tn as f64 / n as f64)
    }
}

/// Area under the ROC curve by the rank (Mann–Whitney) formulation, ties
/// counted as ½. Undefined unless both classes are present.
pub fn auc(actual: &[u8], scores: &[f64]) -> Result<Option<f64>, MetricsError> {
    if actual.len() != scores.len() {
        return Err(MetricsError::LengthMismatch(actual.len(), scores.len()));
    }
    if actual.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&bad) = actual.iter().find(|&&a| a > 1) {
        return Err(MetricsError::BadLabel(bad));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore);
    }
    let positives = actual.iter().filter(|&&a| a == 1).count();
    let negatives = actual.len() - positives;
    if positives == 0 || negatives == 0 {
        return Ok(None);
    }

    // average ranks over tie groups, 1-based
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }

    let rank_sum_pos: f64 = actual
        .iter()
        .zip(&ranks)
        .filter(|(&a, _)| a == 1)
        .map(|(_, &r)| r)
        .sum();
    let p = positives as f64;
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(Some(u / (p * negatives as f64)))
}

/// Gini coefficient of score separation, `2·AUC − 1`.
pub fn gini(actual: &[u8], scores: &[f64]) -> Result<Option<f64>, MetricsError> {
    Ok(auc(actual, scores)?.map(|a| 2.0 * a - 1.0))
}

/// Taylor-diagram statistics for an actual/predicted pair of series:
/// population standard deviations, Pearson correlation and the centered
/// RMS difference. They satisfy `cRMSD² = σ_a² + σ_p² − 2σ_aσ_p·r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorStats {
    pub stddev_actual: f64,
    pub stddev_predicted: f64,
    /// Undefined (and flagged) when either series is constant.
    pub pearson_r: Option<f64>,
    pub centered_rmsd: f64,
}

pub fn taylor_stats(actual: &[f64], predicted: &[f64]) -> Result<TaylorStats, MetricsError> {
    if actual.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.len() < 2 {
        return Err(MetricsError::TooFewPoints(actual.len()));
    }
    if actual
        .iter()
        .chain(predicted)
        .any(|v| !v.is_finite())
    {
        return Err(MetricsError::NonFiniteScore);
    }
    let n = actual.len() as f64;
    let mean_a: f64 = actual.iter().sum::<f64>() / n;
    let mean_p: f64 = predicted.iter().sum::<f64>() / n;
    let mut var_a = 0.0;
    let mut var_p = 0.0;
    let mut cov = 0.0;
    let mut sq_diff = 0.0;
    for (&a, &p) in actual.iter().zip(predicted) {
        let da = a - mean_a;
        let dp = p - mean_p;
        var_a += da * da;
        var_p += dp * dp;
        cov += da * dp;
        sq_diff += (da - dp) * (da - dp);
    }
    let stddev_actual = (var_a / n).sqrt();
    let stddev_predicted = (var_p / n).sqrt();
    let denom = stddev_actual * stddev_predicted;
    let pearson_r = (denom > 0.0).then(|| (cov / n) / denom);
    Ok(TaylorStats {
        stddev_actual,
        stddev_predicted,
        pearson_r,
        centered_rmsd: (sq_diff / n).sqrt(),
    })
}

/// One evaluated sample: what it was, what the model scored, what it got.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub actual: u8,
    pub score: f64,
    pub predicted: u8,
}

/// Full evaluation of a model on one split. The Taylor statistics compare
/// the binary actual series against the continuous scores (not the
/// thresholded labels); undefined metrics are listed in `flags`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub counts: ConfusionCounts,
    /// Mean squared score-vs-label difference on this split.
    pub cost: f64,
    /// Percentage in `[0, 100]`.
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub gini: Option<f64>,
    /// Absent when the split has fewer than two samples.
    pub taylor: Option<TaylorStats>,
    pub per_sample: Vec<SampleOutcome>,
    pub flags: Vec<String>,
}

impl EvalReport {
    pub fn new(actual: &[u8], scores: &[f64], predicted: &[u8]) -> Result<Self, MetricsError> {
        if actual.len() != scores.len() {
            return Err(MetricsError::LengthMismatch(actual.len(), scores.len()));
        }
        let counts = ConfusionCounts::from_labels(actual, predicted)?;
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(MetricsError::NonFiniteScore);
        }
        let cost = actual
            .iter()
            .zip(scores)
            .map(|(&a, &m)| (m - f64::from(a)) * (m - f64::from(a)))
            .sum::<f64>()
            / actual.len() as f64;
        let accuracy = counts.accuracy()?;
        let sensitivity = counts.sensitivity();
        let specificity = counts.specificity();
        let gini = gini(actual, scores)?;
        let actual_f: Vec<f64> = actual.iter().map(|&a| f64::from(a)).collect();
        let taylor = if actual.len() >= 2 {
            Some(taylor_stats(&actual_f, scores)?)
        } else {
            None
        };

        let mut flags = Vec::new();
        if sensitivity.is_none() {
            flags.push("sensitivity undefined: no positive samples".to_string());
        }
        if specificity.is_none() {
            flags.push("specificity undefined: no negative samples".to_string());
        }
        if gini.is_none() {
            flags.push("gini undefined: only one class present".to_string());
        }
        match &taylor {
            Some(t) if t.pearson_r.is_none() => {
                flags.push("pearson_r undefined: constant series".to_string());
            }
            None => flags.push("taylor undefined: fewer than two samples".to_string()),
            _ => {}
        }

        let per_sample = actual
            .iter()
            .zip(scores)
            .zip(predicted)
            .enumerate()
            .map(|(index, ((&actual, &score), &predicted))| SampleOutcome {
                index,
                actual,
                score,
                predicted,
            })
            .collect();

        Ok(Self {
            counts,
            cost,
            accuracy,
            sensitivity,
            specificity,
            gini,
            taylor,
            per_sample,
            flags,
        })
    }

    /// Flat per-sample table for external plotting, one row per sample.
    pub fn per_sample_csv(&self) -> String {
        let mut out = String::from("index,actual,score,predicted\n");
        for s in &self.per_sample {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.index, s.actual, s.score, s.predicted
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
