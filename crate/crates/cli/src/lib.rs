//! Command-line front end for the fgpl pipeline.
//!
//! Every command reads its inputs from files, writes its artifacts into
//! `--out`, and records the tool version, resolved configuration and input
//! hashes next to them. Inputs default to the artifact names written by the
//! earlier commands in the same directory, so
//!
//! ```text
//! fgpl gen && fgpl train-baseline && fgpl build-lattice && fgpl train-fgpl && fgpl eval
//! ```
//!
//! runs the whole pipeline in `./out`.

pub mod artifacts;
pub mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fgpl_core::losses::LossKind;
use fgpl_core::FgplError;

pub use commands::run;

#[derive(Debug, Parser)]
#[command(name = "fgpl", version, about = "Fine-grained predicate learning on synthetic long-tailed data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command. Flags override values from `--config`.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration; omitted sections take their defaults.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed; generator and trainer seeds are derived from it.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Directory for artifacts, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate train and test corpora.
    Gen {
        #[command(flatten)]
        common: Common,
    },
    /// Train the cross-entropy baseline whose mistakes seed the lattice.
    TrainBaseline {
        #[command(flatten)]
        common: Common,
        /// Training corpus [default: <out>/train.csv]
        #[arg(long, value_name = "PATH")]
        train: Option<PathBuf>,
    },
    /// Build the predicate lattice from the baseline's training-set predictions.
    BuildLattice {
        #[command(flatten)]
        common: Common,
        /// Training corpus [default: <out>/train.csv]
        #[arg(long, value_name = "PATH")]
        train: Option<PathBuf>,
        /// Baseline model [default: <out>/baseline.model]
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Train with the correlation-aware objective.
    TrainFgpl {
        #[command(flatten)]
        common: Common,
        /// Training corpus [default: <out>/train.csv]
        #[arg(long, value_name = "PATH")]
        train: Option<PathBuf>,
        /// Predicate lattice [default: <out>/lattice.txt]
        #[arg(long, value_name = "PATH")]
        lattice: Option<PathBuf>,
        /// Objective: ce, reweight, cdl or cdl-edl (alias fgpl).
        #[arg(long, value_parser = parse_loss)]
        loss: Option<LossKind>,
    },
    /// Evaluate a model on the test corpus.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Model to score [default: <out>/fgpl.model]
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        /// Training corpus, for head/body/tail groups [default: <out>/train.csv]
        #[arg(long, value_name = "PATH")]
        train: Option<PathBuf>,
        /// Test corpus [default: <out>/test.csv]
        #[arg(long, value_name = "PATH")]
        test: Option<PathBuf>,
    },
    /// Train and evaluate CE, re-weighting and the configured objective side by side.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Training corpus [default: <out>/train.csv]
        #[arg(long, value_name = "PATH")]
        train: Option<PathBuf>,
        /// Test corpus [default: <out>/test.csv]
        #[arg(long, value_name = "PATH")]
        test: Option<PathBuf>,
        /// Objective for the third row.
        #[arg(long, value_parser = parse_loss)]
        loss: Option<LossKind>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen { .. } => "gen",
            Command::TrainBaseline { .. } => "train-baseline",
            Command::BuildLattice { .. } => "build-lattice",
            Command::TrainFgpl { .. } => "train-fgpl",
            Command::Eval { .. } => "eval",
            Command::Compare { .. } => "compare",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Gen { common }
            | Command::TrainBaseline { common, .. }
            | Command::BuildLattice { common, .. }
            | Command::TrainFgpl { common, .. }
            | Command::Eval { common, .. }
            | Command::Compare { common, .. } => common,
        }
    }
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    s.parse().map_err(|e: FgplError| e.to_string())
}

/// Process exit status for a failed command.
pub fn exit_code(err: &FgplError) -> i32 {
    match err {
        FgplError::Io { .. } => 3,
        FgplError::Numeric(_) => 4,
        FgplError::Validation(_) | FgplError::Parse { .. } | FgplError::Config(_) | FgplError::Domain(_) => 2,
    }
}

/// Machine-readable error record written to stderr.
pub fn error_record(command: Option<&str>, kind: &str, message: &str, code: i32) -> String {
    serde_json::json!({
        "error": {
            "command": command,
            "kind": kind,
            "message": message,
            "exit_code": code,
        }
    })
    .to_string()
}
