//! End-to-end runs: corpus, biased baseline, lattice, correlation-aware
//! training and evaluation, driven by one serializable [`RunConfig`].

use serde::{Deserialize, Serialize};

use crate::dataset::{class_frequencies, generate_corpus, mix_seed, ClassFrequencies, Corpus, GeneratorSpec};
use crate::error::{FgplError, Result};
use crate::lattice::{collect_biased_predictions, normalize_confusion, PredicateLattice};
use crate::losses::{LossConfig, LossKind, Objective};
use crate::metrics::{evaluate, EvalReport, MetricConfig};
use crate::model::{self, build_frequency_prior, Classifier, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; generator and trainer seeds are derived from it.
    pub seed: u64,
    pub generator: GeneratorSpec,
    pub prior_smoothing: f64,
    pub baseline: TrainConfig,
    pub fgpl: TrainConfig,
    pub loss_kind: LossKind,
    pub loss: LossConfig,
    pub metrics: MetricConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            generator: GeneratorSpec::default(),
            prior_smoothing: 1.0,
            baseline: TrainConfig::default(),
            fgpl: TrainConfig::default(),
            loss_kind: LossKind::CdlEdl,
            loss: LossConfig::default(),
            metrics: MetricConfig::default(),
        }
    }
}

impl RunConfig {
    /// Copies of the config with every derived seed filled in from `seed`.
    pub fn resolved(&self) -> RunConfig {
        let mut out = self.clone();
        out.generator.seed = self.seed;
        out.baseline.seed = mix_seed(self.seed, 1);
        out.fgpl.seed = mix_seed(self.seed, 2);
        out
    }

    pub fn with_seed(&self, seed: u64) -> RunConfig {
        RunConfig {
            seed,
            ..self.clone()
        }
        .resolved()
    }

    /// Every violated field across all sections.
    pub fn violations(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .generator
            .violations()
            .into_iter()
            .map(|m| format!("generator: {m}"))
            .collect();
        if !(self.prior_smoothing.is_finite() && self.prior_smoothing > 0.0) {
            v.push(format!(
                "prior_smoothing must be positive, got {}",
                self.prior_smoothing
            ));
        }
        v.extend(self.baseline.violations().into_iter().map(|m| format!("baseline: {m}")));
        v.extend(self.fgpl.violations().into_iter().map(|m| format!("fgpl: {m}")));
        v.extend(self.loss.violations().into_iter().map(|m| format!("loss: {m}")));
        v.extend(
            self.metrics
                .violations(self.generator.num_classes)
                .into_iter()
                .map(|m| format!("metrics: {m}")),
        );
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(FgplError::validation(format!(
                "{} invalid field(s): {}",
                v.len(),
                v.join("; ")
            )))
        }
    }
}

/// Training-set frequencies, rejecting classes that never occur.
pub fn training_frequencies(train: &Corpus) -> Result<ClassFrequencies> {
    let f = class_frequencies(&train.samples, train.meta.num_classes);
    f.ensure_positive()?;
    Ok(f)
}

/// Fresh classifier carrying the frequency prior of `train`.
pub fn initial_model(train: &Corpus, smoothing: f64, seed: u64) -> Result<Classifier> {
    let prior = build_frequency_prior(&train.samples, train.meta, smoothing)?;
    Classifier::new(train.meta, Some(&prior), mix_seed(seed, 0x1417))
}

/// Trains `kind` from scratch on `train`.
pub fn train_method(
    train: &Corpus,
    kind: LossKind,
    loss: &LossConfig,
    lattice: Option<&PredicateLattice>,
    smoothing: f64,
    config: &TrainConfig,
) -> Result<Classifier> {
    let frequencies = training_frequencies(train)?;
    let objective = Objective::new(kind, loss, lattice, &frequencies)?;
    let init = initial_model(train, smoothing, config.seed)?;
    model::train(&train.samples, init, config, &objective)
}

/// The plain cross-entropy model whose mistakes seed the lattice.
pub fn train_baseline(train: &Corpus, config: &RunConfig) -> Result<Classifier> {
    train_method(
        train,
        LossKind::Ce,
        &config.loss,
        None,
        config.prior_smoothing,
        &config.baseline,
    )
}

pub fn build_lattice(
    baseline: &Classifier,
    train: &Corpus,
    max_neighbors: usize,
) -> Result<PredicateLattice> {
    let counts = collect_biased_predictions(baseline, &train.samples)?;
    normalize_confusion(&counts, &training_frequencies(train)?, max_neighbors)
}

/// Trains the configured correlation-aware objective against `lattice`.
pub fn train_fgpl(
    train: &Corpus,
    lattice: &PredicateLattice,
    config: &RunConfig,
) -> Result<Classifier> {
    train_method(
        train,
        config.loss_kind,
        &config.loss,
        Some(lattice),
        config.prior_smoothing,
        &config.fgpl,
    )
}

/// Evaluation of a model on `test` with groups taken from `train`.
pub fn evaluate_model(
    model: &Classifier,
    train: &Corpus,
    test: &Corpus,
    metrics: &MetricConfig,
) -> Result<EvalReport> {
    if test.meta != model.meta && !test.samples.is_empty() {
        return Err(FgplError::validation(format!(
            "model expects C={} O={} D={}, test corpus has C={} O={} D={}",
            model.meta.num_classes,
            model.meta.num_objects,
            model.meta.feature_dim,
            test.meta.num_classes,
            test.meta.num_objects,
            test.meta.feature_dim
        )));
    }
    evaluate(model, &test.samples, &training_frequencies(train)?, metrics)
}

/// One row of the method comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub report: EvalReport,
}

/// Everything produced by one in-process run.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub baseline: Classifier,
    pub lattice: PredicateLattice,
    pub rows: Vec<MethodResult>,
}

/// CE baseline, frequency-only re-weighting and the configured
/// correlation-aware objective, all evaluated on `test`.
pub fn compare_methods(train: &Corpus, test: &Corpus, config: &RunConfig) -> Result<Comparison> {
    let baseline = train_baseline(train, config)?;
    let lattice = build_lattice(&baseline, train, config.loss.max_neighbors)?;
    let reweight = train_method(
        train,
        LossKind::Reweight,
        &config.loss,
        None,
        config.prior_smoothing,
        &config.fgpl,
    )?;
    let fgpl = train_fgpl(train, &lattice, config)?;
    let rows = [("ce", &baseline), ("reweight", &reweight), (config.loss_kind.name(), &fgpl)]
        .into_iter()
        .map(|(name, model)| {
            Ok(MethodResult {
                method: name.to_string(),
                report: evaluate_model(model, train, test, &config.metrics)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        baseline,
        lattice,
        rows,
    })
}

/// Generates the corpus for `config` and runs [`compare_methods`] on it.
pub fn run_seed(config: &RunConfig) -> Result<(Corpus, Corpus, Comparison)> {
    let config = config.resolved();
    config.validate()?;
    let (train, test) = generate_corpus(&config.generator)?;
    let comparison = compare_methods(&train, &test, &config)?;
    Ok((train, test, comparison))
}
