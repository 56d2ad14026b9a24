//! Fine-grained predicate learning on synthetic long-tailed relation data.
//!
//! The crate builds a predicate lattice from the mistakes of a biased
//! cross-entropy baseline and uses it to drive two losses: a re-weighted
//! softmax whose negative-class weights depend on both class frequency and
//! pairwise confusion, and a per-sample margin loss over each class's most
//! confused neighbors. Evaluation covers scene-level recall, mean recall,
//! head/body/tail group recall and discriminatory power.
//!
//! ```text
//! dataset  ->  model (CE baseline)  ->  lattice  ->  losses  ->  model  ->  metrics
//! ```

pub mod dataset;
pub mod error;
pub mod lattice;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod pipeline;

pub use error::{FgplError, Result};
