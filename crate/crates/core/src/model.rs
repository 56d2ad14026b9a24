//! Linear predicate classifier with a frequency-prior logit bias and its
//! mini-batch SGD trainer.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{CorpusMeta, TripletSample};
use crate::error::{FgplError, Result};
use crate::losses::Objective;

/// Smoothed `Pr(predicate | subject, object)` table, `O x O x C`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyPrior {
    pub num_objects: usize,
    pub num_classes: usize,
    probs: Vec<f64>,
}

impl FrequencyPrior {
    pub fn row(&self, subject: usize, object: usize) -> &[f64] {
        let start = (subject * self.num_objects + object) * self.num_classes;
        &self.probs[start..start + self.num_classes]
    }

    fn log_table(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.ln()).collect()
    }
}

/// Laplace-smoothed triplet frequencies:
/// `(count(s, r, o) + eps) / (sum_r count(s, r, o) + C * eps)`.
pub fn build_frequency_prior(
    samples: &[TripletSample],
    meta: CorpusMeta,
    smoothing: f64,
) -> Result<FrequencyPrior> {
    if !(smoothing.is_finite() && smoothing > 0.0) {
        return Err(FgplError::validation(format!(
            "prior smoothing must be positive, got {smoothing}"
        )));
    }
    if samples.is_empty() {
        return Err(FgplError::validation(
            "cannot build a frequency prior from an empty training set",
        ));
    }
    let (o, c) = (meta.num_objects, meta.num_classes);
    let mut counts = vec![0u64; o * o * c];
    for s in samples {
        meta.validate_sample(s)?;
        counts[(s.subject_id * o + s.object_id) * c + s.label] += 1;
    }
    let mut probs = vec![0.0; o * o * c];
    for (row_counts, row_probs) in counts.chunks(c).zip(probs.chunks_mut(c)) {
        let total: u64 = row_counts.iter().sum();
        let denom = total as f64 + c as f64 * smoothing;
        for (p, &n) in row_probs.iter_mut().zip(row_counts) {
            *p = (n as f64 + smoothing) / denom;
        }
    }
    Ok(FrequencyPrior {
        num_objects: o,
        num_classes: c,
        probs,
    })
}

/// `eta = W x + b (+ log prior(. | s, o))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub meta: CorpusMeta,
    /// Row-major `C x D`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Row-major `O x O x C` log-probabilities; held fixed during training.
    pub log_prior: Option<Vec<f64>>,
}

impl Classifier {
    /// Zero bias and weights drawn uniformly from `[-0.01, 0.01)`.
    pub fn new(meta: CorpusMeta, prior: Option<&FrequencyPrior>, seed: u64) -> Result<Self> {
        if let Some(p) = prior {
            if p.num_classes != meta.num_classes || p.num_objects != meta.num_objects {
                return Err(FgplError::validation(format!(
                    "prior has C={} O={}, corpus has C={} O={}",
                    p.num_classes, p.num_objects, meta.num_classes, meta.num_objects
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..meta.num_classes * meta.feature_dim)
            .map(|_| rng.random_range(-0.01..0.01))
            .collect();
        Ok(Classifier {
            meta,
            weights,
            bias: vec![0.0; meta.num_classes],
            log_prior: prior.map(FrequencyPrior::log_table),
        })
    }

    /// All-zero parameters, optionally with a prior bias.
    pub fn zeros(meta: CorpusMeta, prior: Option<&FrequencyPrior>) -> Self {
        Classifier {
            meta,
            weights: vec![0.0; meta.num_classes * meta.feature_dim],
            bias: vec![0.0; meta.num_classes],
            log_prior: prior.map(FrequencyPrior::log_table),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.meta.num_classes
    }

    fn check(&self, sample: &TripletSample) -> Result<()> {
        if sample.features.len() != self.meta.feature_dim {
            return Err(FgplError::validation(format!(
                "sample has D={} but model expects D={}",
                sample.features.len(),
                self.meta.feature_dim
            )));
        }
        if self.log_prior.is_some()
            && (sample.subject_id >= self.meta.num_objects
                || sample.object_id >= self.meta.num_objects)
        {
            return Err(FgplError::validation(format!(
                "context ({}, {}) outside the model's O={}",
                sample.subject_id, sample.object_id, self.meta.num_objects
            )));
        }
        Ok(())
    }

    fn logits_into(&self, sample: &TripletSample, out: &mut [f64]) {
        let d = self.meta.feature_dim;
        let c = self.meta.num_classes;
        for (k, eta) in out.iter_mut().enumerate() {
            let row = &self.weights[k * d..(k + 1) * d];
            *eta = self.bias[k]
                + row
                    .iter()
                    .zip(&sample.features)
                    .map(|(w, x)| w * x)
                    .sum::<f64>();
        }
        if let Some(table) = &self.log_prior {
            let start = (sample.subject_id * self.meta.num_objects + sample.object_id) * c;
            for (eta, lp) in out.iter_mut().zip(&table[start..start + c]) {
                *eta += lp;
            }
        }
    }

    pub fn params_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

pub fn forward_logits(model: &Classifier, sample: &TripletSample) -> Result<Vec<f64>> {
    model.check(sample)?;
    let mut eta = vec![0.0; model.num_classes()];
    model.logits_into(sample, &mut eta);
    Ok(eta)
}

/// Max-shifted softmax.
pub fn softmax(eta: &[f64]) -> Vec<f64> {
    let max = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = eta.iter().map(|e| (e - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub top1: usize,
    pub probs: Vec<f64>,
}

impl Scores {
    pub fn confidence(&self) -> f64 {
        self.probs[self.top1]
    }
}

pub fn scores_from_logits(eta: &[f64]) -> Scores {
    let probs = softmax(eta);
    Scores {
        top1: argmax(&probs),
        probs,
    }
}

pub fn predict_scores(model: &Classifier, sample: &TripletSample) -> Result<Scores> {
    Ok(scores_from_logits(&forward_logits(model, sample)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 16,
            epochs: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            v.push(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            v.push("batch_size must be >= 1".to_string());
        }
        v
    }
}

/// Shuffled mini-batch SGD at a fixed learning rate. Gradients of each batch
/// are summed in sample order and then averaged, so the result is a pure
/// function of `(samples, init, config, objective)`.
pub fn train(
    samples: &[TripletSample],
    init: Classifier,
    config: &TrainConfig,
    objective: &Objective,
) -> Result<Classifier> {
    let v = config.violations();
    if !v.is_empty() {
        return Err(FgplError::Config(v.join("; ")));
    }
    if objective.num_classes() != init.num_classes() {
        return Err(FgplError::validation(format!(
            "loss is defined over C={} classes, model has C={}",
            objective.num_classes(),
            init.num_classes()
        )));
    }
    for s in samples {
        init.check(s)?;
        if s.label >= init.num_classes() {
            return Err(FgplError::validation(format!(
                "label {} out of range for C={}",
                s.label,
                init.num_classes()
            )));
        }
    }

    let mut model = init;
    let c = model.meta.num_classes;
    let d = model.meta.feature_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut eta = vec![0.0; c];
    let mut grad_w = vec![0.0; c * d];
    let mut grad_b = vec![0.0; c];

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            grad_b.iter_mut().for_each(|g| *g = 0.0);
            for &idx in batch {
                let sample = &samples[idx];
                model.logits_into(sample, &mut eta);
                let out = objective.loss_grad(&eta, sample.label)?;
                for (k, &g) in out.grad.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    grad_b[k] += g;
                    for (gw, x) in grad_w[k * d..(k + 1) * d].iter_mut().zip(&sample.features) {
                        *gw += g * x;
                    }
                }
            }
            let step = config.learning_rate / batch.len() as f64;
            for (w, g) in model.weights.iter_mut().zip(&grad_w) {
                *w -= step * g;
            }
            for (b, g) in model.bias.iter_mut().zip(&grad_b) {
                *b -= step * g;
            }
        }
        if !model.params_finite() {
            return Err(FgplError::Numeric(format!(
                "parameters diverged during epoch {epoch}"
            )));
        }
    }
    Ok(model)
}

pub fn model_to_string(model: &Classifier) -> String {
    let m = model.meta;
    let mut out = format!(
        "# C={} D={} O={} has_prior={}\n",
        m.num_classes,
        m.feature_dim,
        m.num_objects,
        u8::from(model.log_prior.is_some())
    );
    let push_rows = |out: &mut String, values: &[f64], width: usize| {
        for row in values.chunks(width.max(1)) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
    };
    out.push_str("weights\n");
    push_rows(&mut out, &model.weights, m.feature_dim);
    out.push_str("bias\n");
    push_rows(&mut out, &model.bias, m.num_classes);
    if let Some(table) = &model.log_prior {
        out.push_str("prior\n");
        push_rows(&mut out, table, m.num_classes);
    }
    out.push_str("end\n");
    out
}

struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineReader<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or_else(|| FgplError::parse(0, "unexpected end of file"))
    }

    fn expect(&mut self, tag: &str) -> Result<()> {
        let (line, text) = self.next_line()?;
        if text != tag {
            return Err(FgplError::parse(line, format!("expected `{tag}`, found `{text}`")));
        }
        Ok(())
    }

    fn reals(&mut self, rows: usize, width: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(rows * width);
        for _ in 0..rows {
            let (line, text) = self.next_line()?;
            let row = text
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| FgplError::parse(line, format!("`{v}` is not a real number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != width {
                return Err(FgplError::parse(
                    line,
                    format!("expected {width} values, found {}", row.len()),
                ));
            }
            out.extend(row);
        }
        Ok(out)
    }
}

pub(crate) fn header_fields(line: &str, lineno: usize) -> Result<Vec<(&str, usize)>> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| FgplError::parse(lineno, "missing `#` header line"))?;
    body.split_whitespace()
        .map(|tok| {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| FgplError::parse(lineno, format!("malformed header token `{tok}`")))?;
            let v = v
                .parse::<usize>()
                .map_err(|_| FgplError::parse(lineno, format!("`{v}` is not an integer")))?;
            Ok((k, v))
        })
        .collect()
}

pub(crate) fn header_value(fields: &[(&str, usize)], key: &str, lineno: usize) -> Result<usize> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| FgplError::parse(lineno, format!("header is missing `{key}`")))
}

pub fn model_from_str(text: &str) -> Result<Classifier> {
    let mut reader = LineReader {
        lines: text.lines().enumerate(),
    };
    let (lineno, header) = reader.next_line()?;
    let fields = header_fields(header, lineno)?;
    let meta = CorpusMeta {
        num_classes: header_value(&fields, "C", lineno)?,
        feature_dim: header_value(&fields, "D", lineno)?,
        num_objects: header_value(&fields, "O", lineno)?,
    };
    let has_prior = header_value(&fields, "has_prior", lineno)? == 1;
    reader.expect("weights")?;
    let weights = reader.reals(meta.num_classes, meta.feature_dim)?;
    reader.expect("bias")?;
    let bias = reader.reals(1, meta.num_classes)?;
    let log_prior = if has_prior {
        reader.expect("prior")?;
        Some(reader.reals(meta.num_objects * meta.num_objects, meta.num_classes)?)
    } else {
        None
    };
    reader.expect("end")?;
    let model = Classifier {
        meta,
        weights,
        bias,
        log_prior,
    };
    if !model.params_finite() {
        return Err(FgplError::Numeric("model file holds non-finite parameters".into()));
    }
    Ok(model)
}

pub fn save_model(model: &Classifier, path: &Path) -> Result<()> {
    fs::write(path, model_to_string(model)).map_err(|e| FgplError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Classifier> {
    let text = fs::read_to_string(path).map_err(|e| FgplError::io(path, e))?;
    model_from_str(&text)
}
