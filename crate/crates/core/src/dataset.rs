//! Synthetic long-tailed triplet corpora.
//!
//! Every sample is a `(subject, predicate, object)` triplet carrying a feature
//! vector that stands in for the visual evidence of the pair. Predicate labels
//! follow a Zipf law over class rank (class 0 is the most frequent), features
//! are unit-covariance Gaussians around a per-class mean, and selected class
//! pairs have their means pulled together so that a linear classifier
//! confuses them at a controllable rate.
//!
//! Corpora are persisted as a line-delimited text format:
//!
//! ```text
//! # C=<classes> O=<objects> D=<feature dim>
//! scene_id,subject_id,object_id,label,f_1,...,f_D
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FgplError, Result};

/// One labeled relation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletSample {
    pub scene_id: usize,
    pub subject_id: usize,
    pub object_id: usize,
    pub features: Vec<f64>,
    pub label: usize,
}

/// Dimensions shared by a corpus and every model trained on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub num_classes: usize,
    pub num_objects: usize,
    pub feature_dim: usize,
}

impl CorpusMeta {
    pub fn validate_sample(&self, sample: &TripletSample) -> Result<()> {
        if sample.label >= self.num_classes {
            return Err(FgplError::validation(format!(
                "label {} out of range for C={}",
                sample.label, self.num_classes
            )));
        }
        if sample.subject_id >= self.num_objects || sample.object_id >= self.num_objects {
            return Err(FgplError::validation(format!(
                "context ({}, {}) out of range for O={}",
                sample.subject_id, sample.object_id, self.num_objects
            )));
        }
        if sample.features.len() != self.feature_dim {
            return Err(FgplError::validation(format!(
                "feature vector has {} entries, expected D={}",
                sample.features.len(),
                self.feature_dim
            )));
        }
        if sample.features.iter().any(|f| !f.is_finite()) {
            return Err(FgplError::validation("non-finite feature value"));
        }
        Ok(())
    }
}

/// A list of samples together with the dimensions they were drawn under.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub meta: CorpusMeta,
    pub samples: Vec<TripletSample>,
}

/// A pair of predicate classes whose feature distributions are blended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusablePair {
    pub first: usize,
    pub second: usize,
    /// 0 leaves the two means untouched, 1 makes them coincide.
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub num_classes: usize,
    pub num_objects: usize,
    pub feature_dim: usize,
    pub num_scenes: usize,
    pub scene_size: usize,
    pub zipf_exponent: f64,
    pub confusable_pairs: Vec<ConfusablePair>,
    /// Expected Euclidean norm of a class mean.
    pub class_separation: f64,
    /// Number of preferred (subject, object) contexts per class.
    pub contexts_per_class: usize,
    /// Probability that a sample uses one of its class's preferred contexts.
    pub context_affinity: f64,
    /// Fraction of scenes routed to the test split.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        // Rarer class first: the pair is expected to show up as a neighbor of
        // the first class once a biased baseline has been trained.
        let planted = [
            (5, 0, 0.85),
            (9, 1, 0.85),
            (14, 2, 0.85),
            (20, 3, 0.85),
            (27, 4, 0.85),
            (33, 6, 0.85),
            (41, 8, 0.85),
            (47, 11, 0.85),
            (38, 17, 0.8),
            (44, 24, 0.8),
        ];
        GeneratorSpec {
            num_classes: 50,
            num_objects: 12,
            feature_dim: 24,
            num_scenes: 500,
            scene_size: 80,
            zipf_exponent: 1.5,
            confusable_pairs: planted
                .iter()
                .map(|&(first, second, overlap)| ConfusablePair {
                    first,
                    second,
                    overlap,
                })
                .collect(),
            class_separation: 4.0,
            contexts_per_class: 3,
            context_affinity: 0.8,
            test_fraction: 0.3,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn meta(&self) -> CorpusMeta {
        CorpusMeta {
            num_classes: self.num_classes,
            num_objects: self.num_objects,
            feature_dim: self.feature_dim,
        }
    }

    /// Every violated constraint, in field order.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.num_classes == 0 {
            v.push("num_classes must be >= 1".to_string());
        }
        if self.num_objects == 0 {
            v.push("num_objects must be >= 1".to_string());
        }
        if self.feature_dim == 0 {
            v.push("feature_dim must be >= 1".to_string());
        }
        if self.num_scenes == 0 {
            v.push("num_scenes must be >= 1".to_string());
        }
        if self.scene_size == 0 {
            v.push("scene_size must be >= 1".to_string());
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent > 0.0) {
            v.push(format!(
                "zipf_exponent must be positive and finite, got {}",
                self.zipf_exponent
            ));
        }
        for (k, pair) in self.confusable_pairs.iter().enumerate() {
            if pair.first >= self.num_classes || pair.second >= self.num_classes {
                v.push(format!(
                    "confusable_pairs[{k}] references a class outside [0, {})",
                    self.num_classes
                ));
            }
            if pair.first == pair.second {
                v.push(format!("confusable_pairs[{k}] must join two distinct classes"));
            }
            if !(0.0..=1.0).contains(&pair.overlap) {
                v.push(format!(
                    "confusable_pairs[{k}].overlap must lie in [0, 1], got {}",
                    pair.overlap
                ));
            }
        }
        if !(self.class_separation.is_finite() && self.class_separation >= 0.0) {
            v.push("class_separation must be finite and non-negative".to_string());
        }
        if self.contexts_per_class == 0 {
            v.push("contexts_per_class must be >= 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.context_affinity) {
            v.push("context_affinity must lie in [0, 1]".to_string());
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            v.push("test_fraction must lie in [0, 1)".to_string());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(FgplError::validation(format!(
                "invalid generator spec: {}",
                v.join("; ")
            )))
        }
    }

    /// Class marginals proportional to `(rank + 1)^-s`.
    pub fn class_probabilities(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.num_classes)
            .map(|c| ((c + 1) as f64).powf(-self.zipf_exponent))
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }

    /// Class-conditional feature means after blending the confusable pairs.
    pub fn class_means(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let scale = self.class_separation / (self.feature_dim as f64).sqrt();
        let mut means: Vec<Vec<f64>> = (0..self.num_classes)
            .map(|_| {
                (0..self.feature_dim)
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        for pair in &self.confusable_pairs {
            // Contract toward the midpoint so full overlap is exact.
            let keep = 1.0 - pair.overlap;
            let (a, b) = (means[pair.first].clone(), means[pair.second].clone());
            for d in 0..self.feature_dim {
                let mid = 0.5 * (a[d] + b[d]);
                means[pair.first][d] = mid + keep * (a[d] - mid);
                means[pair.second][d] = mid + keep * (b[d] - mid);
            }
        }
        means
    }

    /// Preferred `(subject, object)` contexts per class; confusable pairs
    /// share the union of their sets.
    pub fn class_contexts(&self) -> Vec<Vec<(usize, usize)>> {
        // Separate stream from the means so the two can evolve independently.
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, u64::MAX));
        let mut contexts: Vec<Vec<(usize, usize)>> = (0..self.num_classes)
            .map(|_| {
                let mut set: Vec<(usize, usize)> = (0..self.contexts_per_class)
                    .map(|_| {
                        (
                            rng.random_range(0..self.num_objects),
                            rng.random_range(0..self.num_objects),
                        )
                    })
                    .collect();
                set.sort_unstable();
                set.dedup();
                set
            })
            .collect();
        for pair in &self.confusable_pairs {
            let mut joined = contexts[pair.first].clone();
            joined.extend_from_slice(&contexts[pair.second]);
            joined.sort_unstable();
            joined.dedup();
            contexts[pair.first] = joined.clone();
            contexts[pair.second] = joined;
        }
        contexts
    }
}

/// SplitMix64 finalizer over `(seed, stream)`.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws a train/test pair of corpora. Scenes are generated independently
/// from per-scene sub-seeds, so the result does not depend on thread count.
pub fn generate_corpus(spec: &GeneratorSpec) -> Result<(Corpus, Corpus)> {
    spec.validate()?;
    let meta = spec.meta();
    let means = spec.class_means();
    let contexts = spec.class_contexts();
    let classes = WeightedIndex::new(spec.class_probabilities())
        .map_err(|e| FgplError::validation(format!("class distribution: {e}")))?;

    let scenes: Vec<(bool, Vec<TripletSample>)> = (0..spec.num_scenes)
        .into_par_iter()
        .map(|scene_id| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, scene_id as u64));
            let is_test = rng.random::<f64>() < spec.test_fraction;
            let samples = (0..spec.scene_size)
                .map(|_| {
                    let label = classes.sample(&mut rng);
                    let (subject_id, object_id) = if rng.random::<f64>() < spec.context_affinity
                    {
                        let preferred = &contexts[label];
                        preferred[rng.random_range(0..preferred.len())]
                    } else {
                        (
                            rng.random_range(0..spec.num_objects),
                            rng.random_range(0..spec.num_objects),
                        )
                    };
                    let features = means[label]
                        .iter()
                        .map(|m| m + rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    TripletSample {
                        scene_id,
                        subject_id,
                        object_id,
                        features,
                        label,
                    }
                })
                .collect();
            (is_test, samples)
        })
        .collect();

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (is_test, samples) in scenes {
        if is_test {
            test.extend(samples);
        } else {
            train.extend(samples);
        }
    }
    Ok((
        Corpus {
            meta,
            samples: train,
        },
        Corpus {
            meta,
            samples: test,
        },
    ))
}

/// Per-class sample counts `n_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFrequencies {
    pub counts: Vec<usize>,
}

impl ClassFrequencies {
    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Loss weighting divides by `n_i`; a class without samples is unusable.
    pub fn ensure_positive(&self) -> Result<()> {
        let missing: Vec<String> = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n == 0)
            .map(|(i, _)| i.to_string())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(FgplError::validation(format!(
                "classes with zero training samples: {}",
                missing.join(", ")
            )))
        }
    }

    /// Class ids by descending count, ascending id on ties.
    pub fn rank_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.counts.len()).collect();
        order.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]).then(a.cmp(&b)));
        order
    }
}

pub fn class_frequencies(samples: &[TripletSample], num_classes: usize) -> ClassFrequencies {
    let mut counts = vec![0usize; num_classes];
    for s in samples {
        counts[s.label] += 1;
    }
    ClassFrequencies { counts }
}

pub fn corpus_to_string(corpus: &Corpus) -> String {
    let meta = corpus.meta;
    let mut out = format!(
        "# C={} O={} D={}\n",
        meta.num_classes, meta.num_objects, meta.feature_dim
    );
    for s in &corpus.samples {
        let _ = write!(
            out,
            "{},{},{},{}",
            s.scene_id, s.subject_id, s.object_id, s.label
        );
        for f in &s.features {
            // Display for f64 is the shortest decimal string that round-trips.
            let _ = write!(out, ",{f}");
        }
        out.push('\n');
    }
    out
}

fn parse_header(line: &str) -> Result<CorpusMeta> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| FgplError::parse(1, "missing `# C=.. O=.. D=..` header"))?;
    let (mut c, mut o, mut d) = (None, None, None);
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| FgplError::parse(1, format!("malformed header token `{token}`")))?;
        let value: usize = value
            .parse()
            .map_err(|_| FgplError::parse(1, format!("header value `{value}` is not an integer")))?;
        match key {
            "C" => c = Some(value),
            "O" => o = Some(value),
            "D" => d = Some(value),
            other => return Err(FgplError::parse(1, format!("unknown header key `{other}`"))),
        }
    }
    match (c, o, d) {
        (Some(num_classes), Some(num_objects), Some(feature_dim)) => Ok(CorpusMeta {
            num_classes,
            num_objects,
            feature_dim,
        }),
        _ => Err(FgplError::parse(1, "header must define C, O and D")),
    }
}

fn parse_index(field: &str, name: &str, line: usize) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| FgplError::parse(line, format!("{name} `{field}` is not a non-negative integer")))
}

/// Parses corpus text. An empty input is an empty corpus with zero dimensions.
pub fn corpus_from_str(text: &str) -> Result<Corpus> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Ok(Corpus {
            meta: CorpusMeta {
                num_classes: 0,
                num_objects: 0,
                feature_dim: 0,
            },
            samples: Vec::new(),
        });
    };
    let meta = parse_header(header.trim())?;
    let mut samples = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let fields: Vec<&str> = raw.trim().split(',').collect();
        if fields.len() != 4 + meta.feature_dim {
            return Err(FgplError::parse(
                line,
                format!(
                    "expected {} fields, found {}",
                    4 + meta.feature_dim,
                    fields.len()
                ),
            ));
        }
        let features = fields[4..]
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| FgplError::parse(line, format!("feature `{f}` is not a real number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let sample = TripletSample {
            scene_id: parse_index(fields[0], "scene_id", line)?,
            subject_id: parse_index(fields[1], "subject_id", line)?,
            object_id: parse_index(fields[2], "object_id", line)?,
            label: parse_index(fields[3], "label", line)?,
            features,
        };
        meta.validate_sample(&sample).map_err(|e| match e {
            FgplError::Validation(msg) => FgplError::Validation(format!("line {line}: {msg}")),
            other => other,
        })?;
        samples.push(sample);
    }
    Ok(Corpus { meta, samples })
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    fs::write(path, corpus_to_string(corpus)).map_err(|e| FgplError::io(path, e))
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let text = fs::read_to_string(path).map_err(|e| FgplError::io(path, e))?;
    corpus_from_str(&text)
}
