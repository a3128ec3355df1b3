use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adversary::AdversaryStrategy;
use super::file::{parse_backend, ScenarioFile};
use super::report::{Report, StrategyRow};
use super::HarnessError;
use crate::acframe::derive_seed;
use crate::authcode::epsilon_q_sec;
use crate::dqc::Backend;
use crate::multiclient::{
    error_bound, two_client_bound, BoundVariant, ClientResult, Protocol, ProtocolConfig, RunOutcome, Scenario, Shape,
};
use crate::qsim::{trace_distance, DensityMatrix};

/// Command-line overrides of the `[run]` section.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub backend: Option<String>,
    pub traps: Option<usize>,
    pub rebroadcast: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, file: &ScenarioFile) -> Result<ScenarioFile, HarnessError> {
        let mut f = file.clone();
        if let Some(s) = self.seed {
            f.seed = s;
        }
        if let Some(t) = self.trials {
            f.trials = t;
        }
        if let Some(t) = self.traps {
            if t == 0 || t > 3 {
                return Err(HarnessError::Parse { line: 0, message: format!("--traps {t}: must be between 1 and 3") });
            }
            f.config.traps = t;
            if let Backend::CliffordAuth { .. } = f.config.backend {
                f.config.backend = Backend::CliffordAuth { traps: t };
            }
        }
        if let Some(b) = &self.backend {
            f.config.backend = parse_backend(b, f.config.traps).ok_or_else(|| HarnessError::Parse {
                line: 0,
                message: format!("--backend {b}: use ideal or clifford-auth"),
            })?;
        }
        if let Some(r) = self.rebroadcast {
            f.config.rebroadcast = r;
        }
        Ok(f)
    }
}

/// How one trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialClass {
    Abort,
    /// Accepted, and the honesty test on the joint output failed.
    Corrupted,
    Accepted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub class: TrialClass,
    pub attacks: usize,
}

pub fn bound_variant(protocol: Protocol) -> BoundVariant {
    if protocol.is_resident() {
        BoundVariant::Protocol3
    } else {
        BoundVariant::Protocol1
    }
}

/// `(eps_bv, eps_qsec, eps_bb)` for a configuration.
pub fn epsilons(config: &ProtocolConfig) -> (f64, f64, f64) {
    let session = config.backend.epsilon();
    (session, epsilon_q_sec(config.traps), session)
}

/// The general bound and, for a two-client chain, the dedicated two-client value.
pub fn bounds(
    scenario: &Scenario,
    protocol: Protocol,
    config: &ProtocolConfig,
) -> Result<(f64, Option<f64>), HarnessError> {
    let (bv, qs, bb) = epsilons(config);
    let variant = bound_variant(protocol);
    let general = error_bound(scenario.n(), scenario.m(), bv, qs, bb, variant)
        .map_err(|e| HarnessError::Invariant(e.to_string()))?;
    let two = match scenario.shape() {
        Shape::Chain => {
            Some(two_client_bound(bv, qs, bb, variant).map_err(|e| HarnessError::Invariant(e.to_string()))?)
        }
        Shape::Wired => None,
    };
    Ok((general, two))
}

/// Accepted outputs further than this from the honest joint output count as corrupted.
pub const CORRUPTION_THRESHOLD: f64 = 1e-6;

/// Sorts a finished run. An accepted run whose joint output, client order,
/// lies more than [`CORRUPTION_THRESHOLD`] in trace distance from the honest
/// one is undetected corruption.
pub fn classify(
    outcome: &RunOutcome,
    scenario: &Scenario,
    expected: &DensityMatrix,
    rebroadcast: bool,
) -> Result<TrialClass, HarnessError> {
    let widths = scenario.final_widths();
    if outcome.aborted() {
        if rebroadcast {
            for (i, w) in widths.iter().enumerate() {
                if *w > 0 && outcome.results[i] != ClientResult::Err {
                    return Err(HarnessError::Invariant(format!("abort left client {} without ERR", i + 1)));
                }
            }
        }
        return Ok(TrialClass::Abort);
    }
    for (i, w) in widths.iter().enumerate() {
        let ok = match &outcome.results[i] {
            ClientResult::Output(q) => q.len() == *w,
            ClientResult::Empty => *w == 0,
            ClientResult::Err => false,
        };
        if !ok {
            return Err(HarnessError::Invariant(format!(
                "client {} result does not match its output width {w}",
                i + 1
            )));
        }
    }
    let qubits = outcome.output_qubits();
    if qubits.is_empty() {
        return Ok(TrialClass::Accepted);
    }
    let rho = outcome.substrate.partial_trace(&qubits).map_err(|e| HarnessError::Invariant(e.to_string()))?;
    let d = trace_distance(&rho, expected).map_err(|e| HarnessError::Invariant(e.to_string()))?;
    Ok(if d > CORRUPTION_THRESHOLD { TrialClass::Corrupted } else { TrialClass::Accepted })
}

/// One seeded trial of `strategy`.
pub fn run_trial(
    file: &ScenarioFile,
    strategy: &AdversaryStrategy,
    expected: &DensityMatrix,
    seed: u64,
) -> Result<TrialRecord, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut server = strategy.server(file.config.traps);
    let outcome = file
        .protocol
        .run(&file.scenario, file.config, &mut server, &mut rng)
        .map_err(|e| HarnessError::Invariant(format!("trial with seed {seed}: {e}")))?;
    let class = classify(&outcome, &file.scenario, expected, file.config.rebroadcast)?;
    Ok(TrialRecord { class, attacks: server.attacks() })
}

/// Seed of trial `i` of strategy `s`: `derive_seed(derive_seed(master, s), i)`.
pub fn trial_seed(master: u64, strategy: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(master, strategy as u64), trial as u64)
}

/// Runs every strategy of the file for its trial count and aggregates.
pub fn run_trials(file: &ScenarioFile, overrides: &Overrides) -> Result<Report, HarnessError> {
    let file = overrides.apply(file)?;
    let expected = file.scenario.expected_joint().map_err(|e| HarnessError::Invariant(e.to_string()))?;
    let (general, two) = bounds(&file.scenario, file.protocol, &file.config)?;
    let mut report = Report::header(&file, general, two);
    for (s, strategy) in file.strategies.iter().enumerate() {
        let started = Instant::now();
        let records = (0..file.trials)
            .into_par_iter()
            .map(|i| run_trial(&file, strategy, &expected, trial_seed(file.seed, s, i)))
            .collect::<Result<Vec<_>, _>>()?;
        let elapsed = started.elapsed().as_secs_f64();
        let count = |c: TrialClass| records.iter().filter(|r| r.class == c).count();
        let mut row = StrategyRow {
            name: strategy.name.clone(),
            trials: file.trials,
            aborts: count(TrialClass::Abort),
            corrupted: count(TrialClass::Corrupted),
            accepted: count(TrialClass::Accepted),
            attacks: records.iter().map(|r| r.attacks).sum(),
            mean_wall_us: if file.trials == 0 { 0.0 } else { 1e6 * elapsed / file.trials as f64 },
            ..StrategyRow::default()
        };
        row.finish(general, two);
        report.rows.push(row);
    }
    Ok(report)
}
