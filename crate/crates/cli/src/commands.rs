//! Command implementations. Each returns the text to print on success.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fgpl_core::dataset::{corpus_from_str, corpus_to_string, generate_corpus, Corpus};
use fgpl_core::lattice::{lattice_from_str, lattice_to_string, PredicateLattice};
use fgpl_core::losses::LossKind;
use fgpl_core::metrics::predict_corpus;
use fgpl_core::model::{model_from_str, model_to_string, Classifier};
use fgpl_core::pipeline::{
    build_lattice, compare_methods, evaluate_model, train_baseline, train_fgpl, training_frequencies, RunConfig,
};
use fgpl_core::{FgplError, Result};
use serde::Serialize;

use crate::artifacts::{
    compare_csv, compare_table, metrics_csv, read_text, rings_csv, summary_line, to_json, write_text, FileDigest,
    Manifest, TOOL, VERSION,
};
use crate::{Cli, Command, Common};

/// Prefixes errors raised while decoding `path` with the path itself.
fn in_file(path: &Path, err: FgplError) -> FgplError {
    let at = path.display();
    match err {
        FgplError::Parse { line, message } => FgplError::Parse {
            line,
            message: format!("{at}: {message}"),
        },
        FgplError::Validation(m) => FgplError::Validation(format!("{at}: {m}")),
        other => other,
    }
}

/// Config file, then flag overrides, then derived seeds.
pub fn resolve_config(common: &Common, loss: Option<LossKind>) -> Result<(RunConfig, Option<FileDigest>)> {
    let (mut config, digest) = match &common.config {
        Some(path) => {
            let (text, digest) = read_text(path)?;
            let config: RunConfig = toml::from_str(&text)
                .map_err(|e| FgplError::Config(format!("{}: {e}", path.display())))?;
            (config, Some(digest))
        }
        None => (RunConfig::default(), None),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(kind) = loss {
        config.loss_kind = kind;
    }
    let config = config.resolved();
    config.validate()?;
    Ok((config, digest))
}

struct Session {
    command: &'static str,
    out: PathBuf,
    config: RunConfig,
    inputs: BTreeMap<&'static str, FileDigest>,
    outputs: BTreeMap<&'static str, FileDigest>,
    log: Vec<String>,
}

impl Session {
    fn new(command: &'static str, common: &Common, loss: Option<LossKind>) -> Result<Self> {
        let (config, config_digest) = resolve_config(common, loss)?;
        let mut inputs = BTreeMap::new();
        if let Some(d) = config_digest {
            inputs.insert("config", d);
        }
        Ok(Session {
            command,
            out: common.out.clone(),
            config,
            inputs,
            outputs: BTreeMap::new(),
            log: Vec::new(),
        })
    }

    fn input_path(&self, given: &Option<PathBuf>, default_name: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out.join(default_name))
    }

    fn load_corpus(&mut self, role: &'static str, path: &Path) -> Result<Corpus> {
        let (text, digest) = read_text(path)?;
        self.inputs.insert(role, digest);
        corpus_from_str(&text).map_err(|e| in_file(path, e))
    }

    fn load_model(&mut self, role: &'static str, path: &Path) -> Result<Classifier> {
        let (text, digest) = read_text(path)?;
        self.inputs.insert(role, digest);
        model_from_str(&text).map_err(|e| in_file(path, e))
    }

    fn load_lattice(&mut self, path: &Path) -> Result<PredicateLattice> {
        let (text, digest) = read_text(path)?;
        self.inputs.insert("lattice", digest);
        lattice_from_str(&text).map_err(|e| in_file(path, e))
    }

    fn write(&mut self, role: &'static str, name: &str, text: &str) -> Result<()> {
        let path = self.out.join(name);
        let digest = write_text(&path, text)?;
        self.outputs.insert(role, digest);
        self.log.push(format!("wrote {}", path.display()));
        Ok(())
    }

    /// Writes the manifest last so it can list the other outputs.
    fn finish<T: Serialize>(mut self, name: &str, result: T) -> Result<String> {
        let manifest = Manifest {
            tool: TOOL,
            version: VERSION,
            command: self.command,
            config: &self.config,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            result,
        };
        let text = to_json(&manifest)?;
        let path = self.out.join(name);
        write_text(&path, &text)?;
        self.log.push(format!("wrote {}", path.display()));
        Ok(self.log.join("\n"))
    }
}

fn check_same_meta(model: &Classifier, corpus: &Corpus, role: &str) -> Result<()> {
    if !corpus.samples.is_empty() && model.meta != corpus.meta {
        let (m, c) = (model.meta, corpus.meta);
        return Err(FgplError::validation(format!(
            "model expects C={} O={} D={}, {role} corpus has C={} O={} D={}",
            m.num_classes, m.num_objects, m.feature_dim, c.num_classes, c.num_objects, c.feature_dim
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct GenResult {
    train_samples: usize,
    test_samples: usize,
    train_class_counts: Vec<usize>,
}

fn cmd_gen(common: &Common) -> Result<String> {
    let mut s = Session::new("gen", common, None)?;
    let (train, test) = generate_corpus(&s.config.generator)?;
    s.write("train", "train.csv", &corpus_to_string(&train))?;
    s.write("test", "test.csv", &corpus_to_string(&test))?;
    let counts = fgpl_core::dataset::class_frequencies(&train.samples, train.meta.num_classes).counts;
    s.finish(
        "gen.json",
        GenResult {
            train_samples: train.samples.len(),
            test_samples: test.samples.len(),
            train_class_counts: counts,
        },
    )
}

#[derive(Serialize)]
struct TrainResult {
    loss_kind: LossKind,
    epochs: usize,
    train_accuracy: f64,
}

fn train_accuracy(model: &Classifier, train: &Corpus) -> Result<f64> {
    if train.samples.is_empty() {
        return Ok(0.0);
    }
    let preds = predict_corpus(model, &train.samples)?;
    let hits = preds.iter().filter(|p| p.is_correct()).count();
    Ok(hits as f64 / preds.len() as f64)
}

fn cmd_train_baseline(common: &Common, train: &Option<PathBuf>) -> Result<String> {
    let mut s = Session::new("train-baseline", common, None)?;
    let train_path = s.input_path(train, "train.csv");
    let train = s.load_corpus("train", &train_path)?;
    let model = train_baseline(&train, &s.config)?;
    s.write("model", "baseline.model", &model_to_string(&model))?;
    let result = TrainResult {
        loss_kind: LossKind::Ce,
        epochs: s.config.baseline.epochs,
        train_accuracy: train_accuracy(&model, &train)?,
    };
    s.finish("baseline.json", result)
}

#[derive(Serialize)]
struct LatticeResult {
    max_neighbors: usize,
    diagonal: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
}

fn cmd_build_lattice(common: &Common, train: &Option<PathBuf>, model: &Option<PathBuf>) -> Result<String> {
    let mut s = Session::new("build-lattice", common, None)?;
    let train_path = s.input_path(train, "train.csv");
    let model_path = s.input_path(model, "baseline.model");
    let train = s.load_corpus("train", &train_path)?;
    let model = s.load_model("model", &model_path)?;
    check_same_meta(&model, &train, "training")?;
    let lattice = build_lattice(&model, &train, s.config.loss.max_neighbors)?;
    s.write("lattice", "lattice.txt", &lattice_to_string(&lattice))?;
    let result = LatticeResult {
        max_neighbors: lattice.max_neighbors,
        diagonal: (0..lattice.num_classes()).map(|i| lattice.s.get(i, i)).collect(),
        neighbors: lattice.neighbors.clone(),
    };
    s.finish("lattice.json", result)
}

fn cmd_train_fgpl(
    common: &Common,
    train: &Option<PathBuf>,
    lattice: &Option<PathBuf>,
    loss: Option<LossKind>,
) -> Result<String> {
    let mut s = Session::new("train-fgpl", common, loss)?;
    let train_path = s.input_path(train, "train.csv");
    let lattice_path = s.input_path(lattice, "lattice.txt");
    let train = s.load_corpus("train", &train_path)?;
    let lattice = s.load_lattice(&lattice_path)?;
    if lattice.max_neighbors != s.config.loss.max_neighbors {
        return Err(FgplError::Config(format!(
            "{} was built with M={}, the loss config asks for M={}",
            lattice_path.display(),
            lattice.max_neighbors,
            s.config.loss.max_neighbors
        )));
    }
    if lattice.num_classes() != train.meta.num_classes {
        return Err(FgplError::validation(format!(
            "lattice has C={}, training corpus has C={}",
            lattice.num_classes(),
            train.meta.num_classes
        )));
    }
    if lattice.n != training_frequencies(&train)? {
        return Err(FgplError::validation(format!(
            "{} was built from a different training corpus",
            lattice_path.display()
        )));
    }
    let model = train_fgpl(&train, &lattice, &s.config)?;
    s.write("model", "fgpl.model", &model_to_string(&model))?;
    let result = TrainResult {
        loss_kind: s.config.loss_kind,
        epochs: s.config.fgpl.epochs,
        train_accuracy: train_accuracy(&model, &train)?,
    };
    s.finish("fgpl.json", result)
}

fn cmd_eval(
    common: &Common,
    model: &Option<PathBuf>,
    train: &Option<PathBuf>,
    test: &Option<PathBuf>,
) -> Result<String> {
    let mut s = Session::new("eval", common, None)?;
    let model_path = s.input_path(model, "fgpl.model");
    let train_path = s.input_path(train, "train.csv");
    let test_path = s.input_path(test, "test.csv");
    let model = s.load_model("model", &model_path)?;
    let train = s.load_corpus("train", &train_path)?;
    let test = s.load_corpus("test", &test_path)?;
    check_same_meta(&model, &train, "training")?;
    let report = evaluate_model(&model, &train, &test, &s.config.metrics)?;
    let stem = model_path
        .file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string());
    s.write("metrics", &format!("{stem}.metrics.csv"), &metrics_csv(&report))?;
    s.write("rings", &format!("{stem}.rings.csv"), &rings_csv(&report))?;
    let line = summary_line(&stem, &report);
    let mut text = s.finish(&format!("{stem}.report.json"), report)?;
    text.push('\n');
    text.push_str(&line);
    Ok(text)
}

#[derive(Serialize)]
struct CompareResult<'a> {
    lattice_neighbors: &'a [Vec<usize>],
    rows: &'a [fgpl_core::pipeline::MethodResult],
}

fn cmd_compare(
    common: &Common,
    train: &Option<PathBuf>,
    test: &Option<PathBuf>,
    loss: Option<LossKind>,
) -> Result<String> {
    let mut s = Session::new("compare", common, loss)?;
    let train_path = s.input_path(train, "train.csv");
    let test_path = s.input_path(test, "test.csv");
    let train = s.load_corpus("train", &train_path)?;
    let test = s.load_corpus("test", &test_path)?;
    let comparison = compare_methods(&train, &test, &s.config)?;
    let table = compare_table(&comparison.rows);
    s.write("table", "compare.txt", &table)?;
    s.write("csv", "compare.csv", &compare_csv(&comparison.rows))?;
    let result = CompareResult {
        lattice_neighbors: &comparison.lattice.neighbors,
        rows: &comparison.rows,
    };
    let mut text = s.finish("compare.json", result)?;
    text.push('\n');
    text.push_str(table.trim_end());
    Ok(text)
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Gen { common } => cmd_gen(common),
        Command::TrainBaseline { common, train } => cmd_train_baseline(common, train),
        Command::BuildLattice { common, train, model } => cmd_build_lattice(common, train, model),
        Command::TrainFgpl {
            common,
            train,
            lattice,
            loss,
        } => cmd_train_fgpl(common, train, lattice, *loss),
        Command::Eval {
            common,
            model,
            train,
            test,
        } => cmd_eval(common, model, train, test),
        Command::Compare {
            common,
            train,
            test,
            loss,
        } => cmd_compare(common, train, test, *loss),
    }
}
