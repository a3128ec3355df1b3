use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::file::ScenarioFile;
use super::HarnessError;
use crate::acframe::World;
use crate::authcode::key_average;
use crate::dqc::{AttackPoint, Backend, DqcError, Server, Verdict};
use crate::multiclient::{Protocol, ProtocolConfig, Scenario};
use crate::qsim::{trace_distance, DensityMatrix, QubitId};

/// Honest server that keeps the key-averaged state of every block it handles.
struct ViewRecorder {
    traps: usize,
    snapshots: Vec<(AttackPoint, DensityMatrix)>,
}

impl Server for ViewRecorder {
    fn session(&mut self, _: &mut World<'_>, _: AttackPoint, _: Option<&[QubitId]>) -> Result<Verdict, DqcError> {
        Ok(Verdict::Proceed)
    }

    fn transit(&mut self, world: &mut World<'_>, point: AttackPoint, block: &[QubitId]) -> Result<Verdict, DqcError> {
        let mut rho = world.substrate.partial_trace(block)?;
        let t = self.traps;
        let m = block.len() / (1 + t);
        for j in 0..m {
            let group: Vec<usize> = std::iter::once(j).chain((0..t).map(|k| m + j * t + k)).collect();
            rho = key_average(&rho, &group)?;
        }
        self.snapshots.push((point, rho));
        Ok(Verdict::Proceed)
    }
}

/// What the server holds after an honest run: the size-only leak records in
/// order, and per block handled the state averaged over all keys.
#[derive(Debug, Clone)]
pub struct ServerView {
    pub leaks: Vec<String>,
    pub snapshots: Vec<(AttackPoint, DensityMatrix)>,
}

pub fn server_view(protocol: Protocol, scenario: &Scenario) -> Result<ServerView, HarnessError> {
    let config = ProtocolConfig { backend: Backend::Ideal, traps: 1, rebroadcast: true };
    let mut recorder = ViewRecorder { traps: config.traps, snapshots: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let outcome =
        protocol.run(scenario, config, &mut recorder, &mut rng).map_err(|e| HarnessError::Invariant(e.to_string()))?;
    if outcome.aborted() {
        return Err(HarnessError::Invariant("honest run aborted".into()));
    }
    let leaks = outcome
        .transcript
        .records()
        .iter()
        .filter(|r| r.kind == "leak")
        .map(|r| format!("{} {}", r.dst, r.digest))
        .collect();
    Ok(ServerView { leaks, snapshots: recorder.snapshots })
}

/// Trace distance between the server views of two honest runs with the
/// same size profile; 1 if their classical parts differ.
pub fn blindness_distance(protocol: Protocol, a: &Scenario, b: &Scenario) -> Result<f64, HarnessError> {
    let (pa, pb) = (a.size_profile(), b.size_profile());
    if pa != pb {
        return Err(HarnessError::SizeProfile { a: pa.to_string(), b: pb.to_string() });
    }
    let (va, vb) = (server_view(protocol, a)?, server_view(protocol, b)?);
    let points = |v: &ServerView| v.snapshots.iter().map(|s| s.0).collect::<Vec<_>>();
    if va.leaks != vb.leaks || points(&va) != points(&vb) {
        return Ok(1.0);
    }
    let mut worst: f64 = 0.0;
    for ((_, x), (_, y)) in va.snapshots.iter().zip(&vb.snapshots) {
        if x.dim() != y.dim() {
            return Ok(1.0);
        }
        worst = worst.max(trace_distance(x, y).map_err(|e| HarnessError::Invariant(e.to_string()))?);
    }
    Ok(worst)
}

/// [`blindness_distance`] on two scenario files written for the same protocol.
pub fn blindness_check(a: &ScenarioFile, b: &ScenarioFile) -> Result<f64, HarnessError> {
    if a.protocol != b.protocol {
        return Err(HarnessError::SizeProfile {
            a: format!("protocol {}", a.protocol.number()),
            b: format!("protocol {}", b.protocol.number()),
        });
    }
    blindness_distance(a.protocol, &a.scenario, &b.scenario)
}
