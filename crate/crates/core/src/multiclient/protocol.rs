use std::collections::BTreeMap;

use thiserror::Error;

use super::scenario::{Scenario, ScenarioError, Shape};
use crate::acframe::{FrameError, InterfaceId, KeyMaterial, LeakRecord, PartyLabel, Payload, Transcript, World};
use crate::authcode::{AuthError, AuthKey, EncodedBlock, ProductKey};
use crate::dqc::{
    bb1_run, bb2_run, bb_run, bvdqc_run, AttackPoint, Backend, BbOutcome, DqcError, DqcSession, FinalResult, Server,
    Verdict,
};
use crate::qsim::{Circuit, Coins, DensityMatrix, Owner, QsimError, QubitId, Substrate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Dqc(#[from] DqcError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Auth(#[from] AuthError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("missing key for {0}")]
    MissingKey(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolConfig {
    pub backend: Backend,
    /// Traps per qubit of the codes protecting common qubits.
    pub traps: usize,
    /// Whether a client receiving `e=1` forwards it to everybody else before aborting.
    pub rebroadcast: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { backend: Backend::Ideal, traps: 1, rebroadcast: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Protocol {
    P1,
    P2,
    P3,
    P4,
}

impl Protocol {
    pub fn from_number(k: u8) -> Option<Self> {
        match k {
            1 => Some(Protocol::P1),
            2 => Some(Protocol::P2),
            3 => Some(Protocol::P3),
            4 => Some(Protocol::P4),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Protocol::P1 => 1,
            Protocol::P2 => 2,
            Protocol::P3 => 3,
            Protocol::P4 => 4,
        }
    }

    /// Protocols 3 and 4 keep blocks on the server between rounds.
    pub fn is_resident(self) -> bool {
        matches!(self, Protocol::P3 | Protocol::P4)
    }

    pub fn is_two_client(self) -> bool {
        matches!(self, Protocol::P2 | Protocol::P4)
    }

    pub fn run(
        self,
        scenario: &Scenario,
        config: ProtocolConfig,
        server: &mut dyn Server,
        coins: &mut dyn Coins,
    ) -> Result<RunOutcome, ProtocolError> {
        match self {
            Protocol::P1 => protocol1_run(scenario, config, server, coins),
            Protocol::P2 => protocol2_run(scenario, config, server, coins),
            Protocol::P3 => protocol3_run(scenario, config, server, coins),
            Protocol::P4 => protocol4_run(scenario, config, server, coins),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortKind {
    /// A delegation returned ERR.
    Verification,
    /// An authenticated block failed its trap check or never arrived.
    Authentication,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbortInfo {
    pub client: usize,
    pub round: usize,
    pub kind: AbortKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClientResult {
    Output(Vec<QubitId>),
    Err,
    /// The client has no final register.
    Empty,
}

pub struct RunOutcome {
    pub results: Vec<ClientResult>,
    pub abort: Option<AbortInfo>,
    pub transcript: Transcript,
    pub substrate: Substrate,
}

impl RunOutcome {
    pub fn aborted(&self) -> bool {
        self.abort.is_some()
    }

    /// Reduced state of client `i` (1-based), if it produced one.
    pub fn output_state(&self, i: usize) -> Result<Option<DensityMatrix>, QsimError> {
        match &self.results[i - 1] {
            ClientResult::Output(q) => self.substrate.partial_trace(q).map(Some),
            _ => Ok(None),
        }
    }

    /// Every output register, client order.
    pub fn output_qubits(&self) -> Vec<QubitId> {
        self.results
            .iter()
            .flat_map(|r| match r {
                ClientResult::Output(q) => q.clone(),
                _ => Vec::new(),
            })
            .collect()
    }
}

/// A register position: the message qubit plus, for an authenticated common
/// qubit, its traps and key.
#[derive(Debug, Clone)]
struct Slot {
    qubit: QubitId,
    auth: Option<(Vec<QubitId>, AuthKey)>,
}

/// `V_i^(h)` on the block `message ++ incoming traps ++ outgoing traps`:
/// decode every authenticated incoming position, run `u`, encode the
/// outgoing labels. `incoming` lists `(position, key)` in trap order,
/// `outgoing` lists `(label, key)` in trap order.
pub fn build_round_unitary(
    u: &Circuit,
    incoming: &[(usize, AuthKey)],
    outgoing: &[(usize, AuthKey)],
    traps: usize,
) -> Result<Circuit, ProtocolError> {
    let w = u.width();
    let width = w + traps * (incoming.len() + outgoing.len());
    let mut v = Circuit::new(width);
    let group = |pos: usize, k: usize| -> Vec<usize> {
        std::iter::once(pos).chain((0..traps).map(|r| w + k * traps + r)).collect()
    };
    for (k, (pos, key)) in incoming.iter().enumerate() {
        if key.t() != traps || key.m() != 1 {
            return Err(ProtocolError::MissingKey(format!("incoming position {pos}")));
        }
        v.push_dense(key.clifford().matrix().adjoint(), group(*pos, k))?;
    }
    v.append_mapped(u, &(0..w).collect::<Vec<_>>())?;
    for (k, (label, key)) in outgoing.iter().enumerate() {
        if key.t() != traps || key.m() != 1 {
            return Err(ProtocolError::MissingKey(format!("outgoing label {label}")));
        }
        v.push_dense(key.clifford().matrix().clone(), group(*label, incoming.len() + k))?;
    }
    Ok(v)
}

struct Run<'w, 'c> {
    world: &'w mut World<'c>,
    config: ProtocolConfig,
    n: usize,
}

impl Run<'_, '_> {
    fn send(&mut self, from: PartyLabel, to: PartyLabel, payload: &Payload) -> Result<(), ProtocolError> {
        self.world.record(&from.to_string(), &to.to_string(), &InterfaceId::new(to, "q"), payload)?;
        Ok(())
    }

    /// A classical message over the authenticated channel: the length leaks to E.
    fn send_classical(&mut self, from: usize, to: usize, payload: Payload) -> Result<(), ProtocolError> {
        let length = match &payload {
            Payload::Bits(b) => b.len(),
            Payload::Key(KeyMaterial::Auth(k)) => k.m(),
            _ => 1,
        };
        let leak = Payload::Leak(LeakRecord::Channel { length, sent: true });
        self.world.record("Cauth.leak", "E", &InterfaceId::new(PartyLabel::E, "leak"), &leak)?;
        self.send(PartyLabel::Client(from), PartyLabel::Client(to), &payload)
    }

    /// Broadcast of `e=1` and global abort. Every live qubit is thrown away.
    fn abort(&mut self, info: AbortInfo) -> Result<RunStatus, ProtocolError> {
        for j in (1..=self.n).filter(|&j| j != info.client) {
            self.send_classical(info.client, j, Payload::Bits(vec![true]))?;
        }
        if self.config.rebroadcast {
            for j in (1..=self.n).filter(|&j| j != info.client) {
                for k in (1..=self.n).filter(|&k| k != j) {
                    self.send_classical(j, k, Payload::Bits(vec![true]))?;
                }
            }
        }
        let live = self.world.substrate.qubits();
        self.world.substrate.discard(&live)?;
        Ok(RunStatus::Aborted(info))
    }
}

enum RunStatus {
    Finished(Vec<ClientResult>),
    Aborted(AbortInfo),
}

fn finish(world: World<'_>, n: usize, status: RunStatus) -> RunOutcome {
    let (substrate, transcript) = world.into_parts();
    let (results, abort) = match status {
        RunStatus::Finished(r) => (r, None),
        RunStatus::Aborted(info) => (vec![ClientResult::Err; n], Some(info)),
    };
    RunOutcome { results, abort, transcript, substrate }
}

/// Algorithm 1: per round and client one BV-DQC of `V_i^(h)`; common qubits
/// travel authenticated under pre-agreed keys through the server.
pub fn protocol1_run(
    scenario: &Scenario,
    config: ProtocolConfig,
    server: &mut dyn Server,
    coins: &mut dyn Coins,
) -> Result<RunOutcome, ProtocolError> {
    let (substrate, inputs) = scenario.prepare()?;
    let mut world = World::new(substrate, coins);
    let n = scenario.n();
    let status = {
        let mut run = Run { world: &mut world, config, n };
        p1_rounds(&mut run, scenario, inputs, server)?
    };
    Ok(finish(world, n, status))
}

fn p1_rounds(
    run: &mut Run<'_, '_>,
    scenario: &Scenario,
    inputs: Vec<Vec<QubitId>>,
    server: &mut dyn Server,
) -> Result<RunStatus, ProtocolError> {
    let wiring = scenario.wiring();
    let (n, m, t) = (wiring.n(), wiring.m(), run.config.traps);
    let mut keys: BTreeMap<(usize, usize, usize), ProductKey> = BTreeMap::new();
    for (h, i, j, labels) in wiring.entries() {
        if i != j {
            let key = ProductKey::generate(labels.len(), t, run.world.coins)?;
            let payload = Payload::Key(KeyMaterial::Auth(key.clone()));
            for c in [i, j] {
                run.world.record("K", &format!("C{c}"), &InterfaceId::new(PartyLabel::Client(c), "key"), &payload)?;
            }
            keys.insert((h, i, j), key);
        }
    }
    let mut regs: Vec<Vec<Slot>> =
        inputs.into_iter().map(|r| r.into_iter().map(|q| Slot { qubit: q, auth: None }).collect()).collect();
    let mut finals = vec![ClientResult::Empty; n];
    for h in 1..=m {
        let mut routed: BTreeMap<(usize, usize, usize), Slot> = BTreeMap::new();
        for i in 1..=n {
            let reg = std::mem::take(&mut regs[i - 1]);
            if reg.is_empty() {
                continue;
            }
            let mut block: Vec<QubitId> = reg.iter().map(|s| s.qubit).collect();
            let mut incoming = Vec::new();
            let mut incoming_traps = Vec::new();
            for (pos, s) in reg.iter().enumerate() {
                if let Some((traps, key)) = &s.auth {
                    incoming.push((pos, key.clone()));
                    incoming_traps.extend_from_slice(traps);
                }
            }
            block.extend_from_slice(&incoming_traps);
            let mut outgoing = Vec::new();
            let mut out_traps: BTreeMap<usize, Vec<QubitId>> = BTreeMap::new();
            if h < m {
                for j in (1..=n).filter(|&j| j != i) {
                    let Some(key) = keys.get(&(h, i, j)) else { continue };
                    for (r, &label) in wiring.get(h, i, j).iter().enumerate() {
                        let traps = run.world.substrate.allocate_zeros(t, Owner::Client(i))?;
                        block.extend_from_slice(&traps);
                        out_traps.insert(label, traps);
                        outgoing.push((label, key.keys()[r].clone()));
                    }
                }
            }
            let u = &scenario.circuits()[i - 1][h - 1];
            let v = build_round_unitary(u, &incoming, &outgoing, t)?;
            let session = DqcSession { client: i, round: h, register: &block, program: &v };
            if bvdqc_run(run.world, session, run.config.backend, server)?.result.is_none() {
                return run.abort(AbortInfo { client: i, round: h, kind: AbortKind::Verification });
            }
            if !incoming_traps.is_empty() {
                let ok = run.world.substrate.measure_all_zero(&incoming_traps, run.world.coins)?;
                run.world.substrate.discard(&incoming_traps)?;
                if !ok {
                    return run.abort(AbortInfo { client: i, round: h, kind: AbortKind::Authentication });
                }
            }
            if h == m {
                finals[i - 1] = ClientResult::Output(reg.iter().map(|s| s.qubit).collect());
                continue;
            }
            for j in 1..=n {
                let labels = wiring.get(h, i, j);
                if labels.is_empty() {
                    continue;
                }
                let mut wire_qubits = Vec::new();
                for (r, &label) in labels.iter().enumerate() {
                    let q = reg[label].qubit;
                    let auth = if i == j {
                        None
                    } else {
                        let traps = out_traps.remove(&label).expect("allocated above");
                        wire_qubits.push(q);
                        wire_qubits.extend_from_slice(&traps);
                        Some((traps, keys[&(h, i, j)].keys()[r].clone()))
                    };
                    routed.insert((j, i, label), Slot { qubit: q, auth });
                }
                if i != j {
                    run.send(PartyLabel::Client(i), PartyLabel::S, &Payload::Qubits(wire_qubits.clone()))?;
                    if server.transit(run.world, AttackPoint::Transfer { round: h, from: i, to: j }, &wire_qubits)?
                        == Verdict::Abort
                    {
                        return run.abort(AbortInfo { client: j, round: h + 1, kind: AbortKind::Authentication });
                    }
                    run.send(PartyLabel::S, PartyLabel::Client(j), &Payload::Qubits(wire_qubits))?;
                }
            }
        }
        if h < m {
            for j in 1..=n {
                regs[j - 1] = wiring
                    .incoming(h, j)
                    .into_iter()
                    .map(|(i, l)| routed.remove(&(j, i, l)).expect("routed"))
                    .collect();
            }
        }
    }
    Ok(RunStatus::Finished(finals))
}

/// Algorithm 2: the two-client chain run as Algorithm 1 on its two-round wiring.
pub fn protocol2_run(
    scenario: &Scenario,
    config: ProtocolConfig,
    server: &mut dyn Server,
    coins: &mut dyn Coins,
) -> Result<RunOutcome, ProtocolError> {
    require_chain(scenario)?;
    protocol1_run(scenario, config, server, coins)
}

/// Algorithm 4: the two-client chain run as Algorithm 3.
pub fn protocol4_run(
    scenario: &Scenario,
    config: ProtocolConfig,
    server: &mut dyn Server,
    coins: &mut dyn Coins,
) -> Result<RunOutcome, ProtocolError> {
    require_chain(scenario)?;
    protocol3_run(scenario, config, server, coins)
}

fn require_chain(scenario: &Scenario) -> Result<(), ProtocolError> {
    if scenario.shape() != Shape::Chain {
        return Err(ScenarioError::Shape("the two-client protocols need a chain scenario".into()).into());
    }
    Ok(())
}

/// Algorithm 3: BB1 in the first round, BB in middle rounds, BB2 in the
/// last; blocks stay on the server and only keys travel between clients.
pub fn protocol3_run(
    scenario: &Scenario,
    config: ProtocolConfig,
    server: &mut dyn Server,
    coins: &mut dyn Coins,
) -> Result<RunOutcome, ProtocolError> {
    let (substrate, inputs) = scenario.prepare()?;
    let mut world = World::new(substrate, coins);
    let n = scenario.n();
    let status = {
        let mut run = Run { world: &mut world, config, n };
        p3_rounds(&mut run, scenario, inputs, server)?
    };
    Ok(finish(world, n, status))
}

fn final_status(
    run: &mut Run<'_, '_>,
    i: usize,
    round: usize,
    res: FinalResult,
    finals: &mut [ClientResult],
) -> Result<Option<RunStatus>, ProtocolError> {
    Ok(match res {
        FinalResult::Output(q) => {
            finals[i - 1] = ClientResult::Output(q);
            None
        }
        FinalResult::Verification => Some(run.abort(AbortInfo { client: i, round, kind: AbortKind::Verification })?),
        FinalResult::Authentication => {
            Some(run.abort(AbortInfo { client: i, round, kind: AbortKind::Authentication })?)
        }
    })
}

fn p3_rounds(
    run: &mut Run<'_, '_>,
    scenario: &Scenario,
    inputs: Vec<Vec<QubitId>>,
    server: &mut dyn Server,
) -> Result<RunStatus, ProtocolError> {
    let wiring = scenario.wiring();
    let (n, m, t) = (wiring.n(), wiring.m(), run.config.traps);
    let backend = run.config.backend;
    let mut finals = vec![ClientResult::Empty; n];
    // (receiver, sender, label) -> single-qubit block and its key.
    let mut resident: BTreeMap<(usize, usize, usize), (EncodedBlock, ProductKey)> = BTreeMap::new();
    for h in 1..=m {
        for i in 1..=n {
            let u = &scenario.circuits()[i - 1][h - 1];
            let out: BbOutcome = if h == 1 {
                let reg = &inputs[i - 1];
                if reg.is_empty() {
                    continue;
                }
                let Some(out) = bb1_run(run.world, i, 1, reg, u, t, backend, server)? else {
                    return run.abort(AbortInfo { client: i, round: 1, kind: AbortKind::Verification });
                };
                if m == 1 {
                    let id = Circuit::new(reg.len());
                    let res = bb2_run(run.world, i, 2, out.block, &out.key, &id, backend, server)?;
                    if let Some(status) = final_status(run, i, 1, res, &mut finals)? {
                        return Ok(status);
                    }
                    continue;
                }
                out
            } else {
                let parts: Vec<(EncodedBlock, ProductKey)> = wiring
                    .incoming(h - 1, i)
                    .into_iter()
                    .map(|(s, l)| resident.remove(&(i, s, l)).expect("resident block"))
                    .collect();
                if parts.is_empty() {
                    continue;
                }
                let block = EncodedBlock::concat(&parts.iter().map(|p| p.0.clone()).collect::<Vec<_>>());
                let key = ProductKey::concat(&parts.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
                if h == m {
                    let res = bb2_run(run.world, i, h, block, &key, u, backend, server)?;
                    if let Some(status) = final_status(run, i, h, res, &mut finals)? {
                        return Ok(status);
                    }
                    continue;
                }
                match bb_run(run.world, i, h, block, &key, u, backend, server)? {
                    Some(out) => out,
                    None => return run.abort(AbortInfo { client: i, round: h, kind: AbortKind::Verification }),
                }
            };
            for j in 1..=n {
                let labels = wiring.get(h, i, j);
                if labels.is_empty() {
                    continue;
                }
                if j != i {
                    run.send_classical(i, j, Payload::Key(KeyMaterial::Auth(out.key.select(labels))))?;
                }
                for &l in labels {
                    resident.insert((j, i, l), (out.block.select(&[l]), out.key.select(&[l])));
                }
            }
        }
        if h < m {
            for (from, to) in (1..=n).flat_map(|i| (1..=n).map(move |j| (i, j))) {
                let labels = wiring.get(h, from, to);
                if labels.is_empty() {
                    continue;
                }
                let qs: Vec<QubitId> = labels.iter().flat_map(|&l| resident[&(to, from, l)].0.qubits()).collect();
                if server.transit(run.world, AttackPoint::Transfer { round: h, from, to }, &qs)? == Verdict::Abort {
                    return run.abort(AbortInfo { client: to, round: h + 1, kind: AbortKind::Verification });
                }
            }
        }
    }
    Ok(RunStatus::Finished(finals))
}
