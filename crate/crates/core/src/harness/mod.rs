//! Adversary strategies, the trial driver, reports and scenario files.

mod adversary;
mod blindness;
mod file;
mod report;
mod trials;

use thiserror::Error;

use crate::multiclient::ScenarioError;

pub use adversary::{Adversary, AdversaryStrategy, PauliChoice, StrategyKind, Target};
pub use blindness::{blindness_check, blindness_distance, server_view, ServerView};
pub use file::{parse_scenario, parse_scenario_str, parse_target, ScenarioFile};
pub use report::{parse_machine, three_sigma, wilson_interval, Report, StrategyRow};
pub use trials::{
    bound_variant, bounds, classify, epsilons, run_trial, run_trials, trial_seed, Overrides, TrialClass, TrialRecord,
    CORRUPTION_THRESHOLD,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{field}: {source}")]
    Validation { field: String, source: ScenarioError },
    #[error("size profiles differ:\n{a}\nvs\n{b}")]
    SizeProfile { a: String, b: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl HarnessError {
    /// 1 for input problems, 2 for internal invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Invariant(_) => 2,
            _ => 1,
        }
    }
}
