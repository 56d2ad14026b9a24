//! Scene-level recall, class-balanced recall, discriminatory power and
//! per-class prediction distributions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{class_frequencies, ClassFrequencies, TripletSample};
use crate::error::{FgplError, Result};
use crate::lattice::{row_normalize, ConfusionCounts, RowStochastic};
use crate::model::{predict_scores, Classifier};

/// A ground-truth triplet together with the model's top-1 predicate for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedTriplet {
    pub scene_id: usize,
    pub subject_id: usize,
    pub object_id: usize,
    pub label: usize,
    pub predicted: usize,
    pub confidence: f64,
}

impl PredictedTriplet {
    pub fn is_correct(&self) -> bool {
        self.label == self.predicted
    }
}

pub fn predict_corpus(model: &Classifier, samples: &[TripletSample]) -> Result<Vec<PredictedTriplet>> {
    samples
        .par_iter()
        .map(|s| {
            let scores = predict_scores(model, s)?;
            Ok(PredictedTriplet {
                scene_id: s.scene_id,
                subject_id: s.subject_id,
                object_id: s.object_id,
                label: s.label,
                predicted: scores.top1,
                confidence: scores.confidence(),
            })
        })
        .collect()
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(FgplError::validation("K must be >= 1"));
    }
    Ok(())
}

/// For each scene, marks which of its triplets survive the top-`k` cut by
/// confidence (ties keep the earlier triplet). Returned in input order.
fn kept_in_top_k(preds: &[PredictedTriplet], k: usize) -> Vec<bool> {
    let mut scenes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (idx, p) in preds.iter().enumerate() {
        scenes.entry(p.scene_id).or_default().push(idx);
    }
    let mut kept = vec![false; preds.len()];
    for mut members in scenes.into_values() {
        members.sort_by(|&a, &b| {
            preds[b]
                .confidence
                .total_cmp(&preds[a].confidence)
                .then(a.cmp(&b))
        });
        for &idx in members.iter().take(k) {
            kept[idx] = true;
        }
    }
    kept
}

/// Fraction of ground-truth triplets whose own prediction is both correct and
/// among the `k` most confident predictions of its scene, pooled over scenes.
pub fn recall_at_k(preds: &[PredictedTriplet], k: usize) -> Result<f64> {
    check_k(k)?;
    if preds.is_empty() {
        return Ok(0.0);
    }
    let kept = kept_in_top_k(preds, k);
    let hits = preds
        .iter()
        .zip(&kept)
        .filter(|(p, &keep)| keep && p.is_correct())
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Per-class recall at `k`; `None` for classes without test triplets.
pub fn per_class_recall_at_k(
    preds: &[PredictedTriplet],
    k: usize,
    num_classes: usize,
) -> Result<Vec<Option<f64>>> {
    check_k(k)?;
    let kept = kept_in_top_k(preds, k);
    let mut hits = vec![0usize; num_classes];
    let mut totals = vec![0usize; num_classes];
    for (p, &keep) in preds.iter().zip(&kept) {
        if p.label >= num_classes {
            return Err(FgplError::validation(format!(
                "label {} out of range for C={num_classes}",
                p.label
            )));
        }
        totals[p.label] += 1;
        if keep && p.is_correct() {
            hits[p.label] += 1;
        }
    }
    Ok(hits
        .iter()
        .zip(&totals)
        .map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64))
        .collect())
}

fn mean_present(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Macro average of per-class recall over classes present in the test set.
pub fn mean_recall_at_k(
    preds: &[PredictedTriplet],
    k: usize,
    num_classes: usize,
) -> Result<(f64, Vec<Option<f64>>)> {
    let per_class = per_class_recall_at_k(preds, k, num_classes)?;
    let mean = mean_present(per_class.iter().copied()).unwrap_or(0.0);
    Ok((mean, per_class))
}

/// Head/body/tail partition by descending training frequency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSplit {
    pub head: Vec<usize>,
    pub body: Vec<usize>,
    pub tail: Vec<usize>,
}

impl GroupSplit {
    /// `(ceil(C/3), ceil((C - ceil(C/3))/2), rest)`, except for the
    /// 50-predicate setting which uses the published `(16, 17, 17)`.
    pub fn default_sizes(num_classes: usize) -> (usize, usize, usize) {
        if num_classes == 50 {
            return (16, 17, 17);
        }
        let head = num_classes.div_ceil(3);
        let body = (num_classes - head).div_ceil(2);
        (head, body, num_classes - head - body)
    }

    pub fn from_frequencies(
        frequencies: &ClassFrequencies,
        sizes: Option<(usize, usize, usize)>,
    ) -> Result<Self> {
        let c = frequencies.num_classes();
        let (h, b, t) = sizes.unwrap_or_else(|| Self::default_sizes(c));
        if h + b + t != c {
            return Err(FgplError::validation(format!(
                "group sizes ({h}, {b}, {t}) do not add up to C={c}"
            )));
        }
        let order = frequencies.rank_order();
        Ok(GroupSplit {
            head: order[..h].to_vec(),
            body: order[h..h + b].to_vec(),
            tail: order[h + b..].to_vec(),
        })
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.head.len(), self.body.len(), self.tail.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRecall {
    pub head: Option<f64>,
    pub body: Option<f64>,
    pub tail: Option<f64>,
}

pub fn group_mean_recall(per_class: &[Option<f64>], split: &GroupSplit) -> GroupRecall {
    let avg = |ids: &[usize]| mean_present(ids.iter().map(|&i| per_class.get(i).copied().flatten()));
    GroupRecall {
        head: avg(&split.head),
        body: avg(&split.body),
        tail: avg(&split.tail),
    }
}

/// Discriminatory power at `k`, in percent: the mean over present classes of
/// `s'_ii` minus the mean of the `k` largest off-diagonal entries of row `i`.
pub fn dp_at_k(s_prime: &RowStochastic, k: usize) -> Result<f64> {
    let c = s_prime.num_classes;
    if k == 0 || k + 1 > c {
        return Err(FgplError::validation(format!(
            "DP@k needs 1 <= k <= C - 1, got k={k} with C={c}"
        )));
    }
    let mut total = 0.0;
    let mut rows = 0usize;
    for i in (0..c).filter(|&i| s_prime.present[i]) {
        let diag = s_prime.get(i, i);
        let gap: f64 = s_prime
            .top_off_diagonal(i, k)
            .into_iter()
            .map(|j| diag - s_prime.get(i, j))
            .sum();
        total += gap / k as f64;
        rows += 1;
    }
    if rows == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * (total / rows as f64).clamp(-1.0, 1.0))
}

/// One ring of the prediction-distribution chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingRecord {
    pub gt_class: usize,
    pub correct: f64,
    /// `(class, share)` of the strongest confusers, descending.
    pub confusers: Vec<(usize, f64)>,
    pub other: f64,
}

impl RingRecord {
    /// `(slice label, proportion)` rows in display order.
    pub fn slices(&self) -> Vec<(String, f64)> {
        let mut out = vec![("self".to_string(), self.correct)];
        out.extend(self.confusers.iter().map(|&(j, p)| (format!("class_{j}"), p)));
        out.push(("other".to_string(), self.other));
        out
    }
}

pub fn prediction_distribution(s_prime: &RowStochastic, class: usize, k: usize) -> Result<RingRecord> {
    let c = s_prime.num_classes;
    if class >= c {
        return Err(FgplError::validation(format!(
            "class {class} out of range for C={c}"
        )));
    }
    let correct = s_prime.get(class, class);
    let confusers: Vec<(usize, f64)> = s_prime
        .top_off_diagonal(class, k)
        .into_iter()
        .map(|j| (j, s_prime.get(class, j)))
        .collect();
    let named: f64 = correct + confusers.iter().map(|(_, p)| p).sum::<f64>();
    let row_total: f64 = s_prime.row(class).iter().sum();
    Ok(RingRecord {
        gt_class: class,
        correct,
        confusers,
        other: (row_total - named).max(0.0),
    })
}

/// Row-normalized test-set confusion `S'`, built through the same
/// normalization path as the predicate lattice.
pub fn test_confusion(preds: &[PredictedTriplet], num_classes: usize) -> Result<RowStochastic> {
    let mut counts = ConfusionCounts::zeros(num_classes);
    let mut n = vec![0usize; num_classes];
    for p in preds {
        if p.label >= num_classes || p.predicted >= num_classes {
            return Err(FgplError::validation(format!(
                "prediction ({} -> {}) out of range for C={num_classes}",
                p.label, p.predicted
            )));
        }
        counts.add(p.label, p.predicted);
        n[p.label] += 1;
    }
    row_normalize(&counts, &ClassFrequencies { counts: n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    /// Per-scene prediction budgets for R@K and mR@K.
    pub recall_ks: Vec<usize>,
    pub dp_ks: Vec<usize>,
    /// Confusers listed per ring record.
    pub ring_neighbors: usize,
    /// Head/body/tail sizes; defaults to thirds (16/17/17 at C=50).
    pub group_sizes: Option<(usize, usize, usize)>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            recall_ks: vec![20, 50, 100],
            dp_ks: vec![1, 5, 10],
            ring_neighbors: 3,
            group_sizes: None,
        }
    }
}

impl MetricConfig {
    pub fn violations(&self, num_classes: usize) -> Vec<String> {
        let mut v = Vec::new();
        if self.recall_ks.contains(&0) {
            v.push("recall_ks entries must be >= 1".to_string());
        }
        if self.dp_ks.iter().any(|&k| k == 0 || k + 1 > num_classes) {
            v.push(format!("dp_ks entries must lie in [1, {}]", num_classes.saturating_sub(1)));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub num_test_samples: usize,
    pub r_at_k: BTreeMap<usize, f64>,
    pub mr_at_k: BTreeMap<usize, f64>,
    pub per_class_recall: BTreeMap<usize, Vec<Option<f64>>>,
    pub group_mr: BTreeMap<usize, GroupRecall>,
    pub dp_at_k: BTreeMap<usize, f64>,
    pub split: GroupSplit,
    pub confusion_prime: RowStochastic,
    pub rings: Vec<RingRecord>,
}

/// Scores `model` on `test`. Group membership follows the training-set
/// frequencies in `train_frequencies`.
pub fn evaluate(
    model: &Classifier,
    test: &[TripletSample],
    train_frequencies: &ClassFrequencies,
    config: &MetricConfig,
) -> Result<EvalReport> {
    let c = model.num_classes();
    if train_frequencies.num_classes() != c {
        return Err(FgplError::validation(format!(
            "model has C={c}, training frequencies have C={}",
            train_frequencies.num_classes()
        )));
    }
    let v = config.violations(c);
    if !v.is_empty() {
        return Err(FgplError::validation(v.join("; ")));
    }
    let preds = predict_corpus(model, test)?;
    let split = GroupSplit::from_frequencies(train_frequencies, config.group_sizes)?;

    let mut r_at_k = BTreeMap::new();
    let mut mr_at_k = BTreeMap::new();
    let mut per_class_recall = BTreeMap::new();
    let mut group_mr = BTreeMap::new();
    for &k in &config.recall_ks {
        r_at_k.insert(k, recall_at_k(&preds, k)?);
        let (mr, per_class) = mean_recall_at_k(&preds, k, c)?;
        mr_at_k.insert(k, mr);
        group_mr.insert(k, group_mean_recall(&per_class, &split));
        per_class_recall.insert(k, per_class);
    }

    let confusion_prime = test_confusion(&preds, c)?;
    let mut dp = BTreeMap::new();
    for &k in &config.dp_ks {
        dp.insert(k, dp_at_k(&confusion_prime, k)?);
    }
    let ring_k = config.ring_neighbors.min(c.saturating_sub(1));
    let present = class_frequencies(test, c);
    let rings = (0..c)
        .filter(|&i| present.counts[i] > 0)
        .map(|i| prediction_distribution(&confusion_prime, i, ring_k))
        .collect::<Result<Vec<_>>>()?;

    Ok(EvalReport {
        num_test_samples: test.len(),
        r_at_k,
        mr_at_k,
        per_class_recall,
        group_mr,
        dp_at_k: dp,
        split,
        confusion_prime,
        rings,
    })
}
