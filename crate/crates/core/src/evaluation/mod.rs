//! Rubric scores for evaluated reports and strategies, and the summary
//! statistics behind their box plots.

mod rubric;
mod stats;
mod store;

use std::path::PathBuf;

use thiserror::Error;

pub use rubric::{Criterion, CriterionScale, Rubric, RubricTarget, System, MAX_SCORE};
pub use stats::{compare_systems, summarize, Comparison, FiveNumberSummary, SystemSummary};
pub use store::{Recorded, ScoreRecord, ScoreStore};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("score {0} outside 0..=5")]
    OutOfRange(i64),
    #[error("invalid score record: {0}")]
    InvalidRecord(String),
    #[error(
        "{location}/{system}/{criterion} run {run_index} already recorded with value {stored}"
    )]
    DuplicateKey {
        location: String,
        system: System,
        criterion: Criterion,
        run_index: u32,
        stored: u8,
    },
    #[error("cannot summarize an empty list")]
    EmptyInput,
    #[error("no scores for {system} on {criterion} at {location:?}")]
    NoData {
        location: String,
        system: System,
        criterion: Criterion,
    },
    #[error("score file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("score file {path:?}: {message}")]
    Io { path: PathBuf, message: String },
}

/// Published rubric scores for Roßtal and Erlangen, five runs per series.
pub const PUBLISHED_SCORES_CSV: &str = include_str!("../../fixtures/published_scores.csv");

impl ScoreStore {
    pub fn published() -> Self {
        Self::from_csv(PUBLISHED_SCORES_CSV.as_bytes()).expect("shipped score fixture is valid")
    }
}
