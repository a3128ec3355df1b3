//! Single-client delegation sessions.
//!
//! [`bvdqc_run`] is one blind verifiable delegation; [`bb1_run`], [`bb_run`]
//! and [`bb2_run`] are the re-keying roles that keep authenticated blocks
//! on the server between rounds. Each comes in two backends: the ideal
//! resource model and a concrete Clifford trap-code instantiation in which
//! the server holds the encoded block and receives the conjugated
//! instruction in the clear.

use std::fmt;

use thiserror::Error;

use crate::acframe::{
    Emission, FrameError, InterfaceId, KeyMaterial, LeakRecord, PartyLabel, Payload, SbbModel, SbvModel, System, World,
};
use crate::authcode::{epsilon_q_sec, AuthError, AuthVerdict, EncodedBlock, ProductKey};
use crate::qsim::{Circuit, QsimError, QubitId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// The ideal resources themselves; error 0 by construction.
    Ideal,
    /// Per-qubit Clifford trap code with `traps` traps per qubit.
    CliffordAuth { traps: usize },
}

impl Backend {
    /// `epsilon^bv`, which is also `epsilon^bb` for this backend.
    pub fn epsilon(self) -> f64 {
        match self {
            Backend::Ideal => 0.0,
            Backend::CliffordAuth { traps } => epsilon_q_sec(traps),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Backend::Ideal => "ideal",
            Backend::CliffordAuth { .. } => "clifford-auth",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A place where the server or the channel gets to act.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttackPoint {
    /// The delegation session of `client` in `round`.
    Session { client: usize, round: usize },
    /// Common qubits of round `round` on their way from `from` to `to`, or
    /// resting on the server between rounds.
    Transfer { round: usize, from: usize, to: usize },
    /// A freshly encoded input travelling to the server.
    Upload { client: usize },
    /// A final encoded block travelling back to its client.
    Download { client: usize },
}

impl fmt::Display for AttackPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AttackPoint::Session { client, round } => write!(f, "session c{client} r{round}"),
            AttackPoint::Transfer { round, from, to } => write!(f, "transfer r{round} c{from} c{to}"),
            AttackPoint::Upload { client } => write!(f, "upload c{client}"),
            AttackPoint::Download { client } => write!(f, "download c{client}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Proceed,
    /// Withhold the qubits or, on an ideal resource, set its `f` bit.
    Abort,
}

/// The dishonest side of every session and channel.
pub trait Server {
    /// Called once per session. `block` is the server-held encoded block on
    /// the concrete backend, after the instruction has been applied; `None`
    /// on the ideal backend, where the only lever is the `f` bit.
    fn session(
        &mut self,
        world: &mut World<'_>,
        point: AttackPoint,
        block: Option<&[QubitId]>,
    ) -> Result<Verdict, DqcError>;

    /// Called for every encoded block passing through the server or a channel.
    fn transit(&mut self, world: &mut World<'_>, point: AttackPoint, block: &[QubitId]) -> Result<Verdict, DqcError>;
}

/// Follows the protocol.
#[derive(Debug, Clone, Copy, Default)]
pub struct HonestServer;

impl Server for HonestServer {
    fn session(&mut self, _: &mut World<'_>, _: AttackPoint, _: Option<&[QubitId]>) -> Result<Verdict, DqcError> {
        Ok(Verdict::Proceed)
    }

    fn transit(&mut self, _: &mut World<'_>, _: AttackPoint, _: &[QubitId]) -> Result<Verdict, DqcError> {
        Ok(Verdict::Proceed)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DqcError {
    #[error("malformed session: {0}")]
    Malformed(String),
    #[error("key covers {expected} qubits but the block has {got}")]
    KeyMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Auth(#[from] AuthError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// One delegation: `program` on `register`, owned by `client`.
#[derive(Debug, Clone, Copy)]
pub struct DqcSession<'a> {
    pub client: usize,
    pub round: usize,
    pub register: &'a [QubitId],
    pub program: &'a Circuit,
}

impl DqcSession<'_> {
    fn point(&self) -> AttackPoint {
        AttackPoint::Session { client: self.client, round: self.round }
    }

    fn label(&self) -> PartyLabel {
        PartyLabel::Client(self.client)
    }

    fn leak(&self) -> LeakRecord {
        LeakRecord::Delegation { qubits: self.register.len(), gate_count: self.program.gate_count(), round: self.round }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqcOutcome {
    /// Output register, or `None` for ERR.
    pub result: Option<Vec<QubitId>>,
    pub leak: LeakRecord,
}

/// An authenticated block at the server together with the key its client holds.
#[derive(Debug, Clone, PartialEq)]
pub struct BbOutcome {
    pub block: EncodedBlock,
    pub key: ProductKey,
}

/// How a final round ended.
#[derive(Debug, Clone, PartialEq)]
pub enum FinalResult {
    Output(Vec<QubitId>),
    /// The delegation itself failed.
    Verification,
    /// The downloaded block did not decode.
    Authentication,
}

/// `C (P ⊗ I) C'^dagger` in factored form on a `m(1+t)`-qubit block ordered
/// `message ++ traps`: undo `old` group by group, run `program` on the
/// message, apply `new`.
pub fn rekey_circuit(old: &ProductKey, program: &Circuit, new: &ProductKey) -> Result<Circuit, DqcError> {
    let (m, t) = (old.m(), old.t());
    if new.m() != m || new.t() != t || program.width() != m {
        return Err(DqcError::KeyMismatch { expected: m, got: program.width() });
    }
    let group = |j: usize| -> Vec<usize> { std::iter::once(j).chain((0..t).map(|k| m + j * t + k)).collect() };
    let mut c = Circuit::new(m * (1 + t));
    for (j, k) in old.keys().iter().enumerate() {
        c.push_dense(k.clifford().matrix().adjoint(), group(j))?;
    }
    c.append_mapped(program, &(0..m).collect::<Vec<_>>())?;
    for (j, k) in new.keys().iter().enumerate() {
        c.push_dense(k.clifford().matrix().clone(), group(j))?;
    }
    Ok(c)
}

/// Hands `payload` to `model` on `port`, logging it and every emission.
fn feed(
    world: &mut World<'_>,
    model: &mut dyn System,
    from: &str,
    port: &InterfaceId,
    payload: Payload,
) -> Result<Vec<Emission>, DqcError> {
    let name = model.name();
    world.record(from, &format!("{name}:{port}"), port, &payload)?;
    let out = model.receive(world, port, payload)?;
    for e in &out {
        world.record(&format!("{name}:{}", e.port), &e.port.label.to_string(), &e.port, &e.payload)?;
    }
    Ok(out)
}

fn client_output(out: Vec<Emission>, io: &InterfaceId) -> Option<Payload> {
    out.into_iter().filter(|e| &e.port == io).map(|e| e.payload).next()
}

fn log(world: &mut World<'_>, from: PartyLabel, to: PartyLabel, payload: &Payload) -> Result<(), DqcError> {
    world.record(&from.to_string(), &to.to_string(), &InterfaceId::new(to, "q"), payload)?;
    Ok(())
}

/// One BV-DQC session. On success the output occupies the input register.
pub fn bvdqc_run(
    world: &mut World<'_>,
    session: DqcSession<'_>,
    backend: Backend,
    server: &mut dyn Server,
) -> Result<DqcOutcome, DqcError> {
    if session.program.width() != session.register.len() {
        return Err(DqcError::Malformed(format!(
            "{}-qubit program on a {}-qubit register",
            session.program.width(),
            session.register.len()
        )));
    }
    let label = session.label();
    let leak = session.leak();
    let result = match backend {
        Backend::Ideal => {
            let mut model = SbvModel::for_client(label, session.round);
            let io = InterfaceId::new(label, "io");
            let job = Payload::Job { circuits: vec![session.program.clone()], qubits: session.register.to_vec() };
            feed(world, &mut model, &label.to_string(), &io, job)?;
            let f = server.session(world, session.point(), None)? == Verdict::Abort;
            let out = feed(world, &mut model, "S", &InterfaceId::new(PartyLabel::S, "f"), Payload::Control(f))?;
            match client_output(out, &io) {
                Some(Payload::Qubits(q)) => Some(q),
                _ => None,
            }
        }
        Backend::CliffordAuth { traps } => {
            let key = ProductKey::generate(session.register.len(), traps, world.coins)?;
            let block = key.encode(&mut world.substrate, session.register)?;
            let qs = block.qubits();
            let instruction = rekey_circuit(&key, session.program, &key)?;
            log(world, label, PartyLabel::S, &Payload::Qubits(qs.clone()))?;
            log(world, label, PartyLabel::S, &Payload::Program(instruction.clone()))?;
            instruction.apply(&mut world.substrate, &qs)?;
            if server.session(world, session.point(), Some(&qs))? == Verdict::Abort {
                world.substrate.discard(&qs)?;
                log(world, PartyLabel::S, label, &Payload::Err)?;
                None
            } else {
                log(world, PartyLabel::S, label, &Payload::Qubits(qs))?;
                match key.decode(&mut world.substrate, &block, world.coins)? {
                    AuthVerdict::Accepted { message } => Some(message),
                    AuthVerdict::Rejected => None,
                }
            }
        }
    };
    Ok(DqcOutcome { result, leak })
}

/// BB1: encode `register` under a fresh key, upload it, then run [`bb_run`].
/// `None` is ERR at the client.
#[allow(clippy::too_many_arguments)]
pub fn bb1_run(
    world: &mut World<'_>,
    client: usize,
    round: usize,
    register: &[QubitId],
    program: &Circuit,
    traps: usize,
    backend: Backend,
    server: &mut dyn Server,
) -> Result<Option<BbOutcome>, DqcError> {
    let label = PartyLabel::Client(client);
    let k0 = ProductKey::generate(register.len(), traps, world.coins)?;
    let block = k0.encode(&mut world.substrate, register)?;
    let qs = block.qubits();
    log(world, label, PartyLabel::S, &Payload::Qubits(qs.clone()))?;
    if server.transit(world, AttackPoint::Upload { client }, &qs)? == Verdict::Abort {
        world.substrate.discard(&qs)?;
        return Ok(None);
    }
    bb_run(world, client, round, block, &k0, program, backend, server)
}

/// BB: turns `E_{k'} rho` at the server into `E_k U rho` with a fresh `k`
/// at the client. `None` is ERR at the client.
#[allow(clippy::too_many_arguments)]
pub fn bb_run(
    world: &mut World<'_>,
    client: usize,
    round: usize,
    block: EncodedBlock,
    key: &ProductKey,
    program: &Circuit,
    backend: Backend,
    server: &mut dyn Server,
) -> Result<Option<BbOutcome>, DqcError> {
    let (m, t) = (key.m(), key.t());
    if block.message.len() != m || block.traps.len() != m * t {
        return Err(DqcError::KeyMismatch { expected: m * (1 + t), got: block.len() });
    }
    if program.width() != m {
        return Err(DqcError::Malformed(format!("{}-qubit program on a {m}-qubit block", program.width())));
    }
    let label = PartyLabel::Client(client);
    let point = AttackPoint::Session { client, round };
    match backend {
        Backend::Ideal => {
            let mut model = SbbModel::for_client(label, round, t);
            let io = InterfaceId::new(label, "io");
            let me = label.to_string();
            feed(world, &mut model, &me, &io, Payload::Program(program.clone()))?;
            feed(world, &mut model, &me, &io, Payload::Key(KeyMaterial::Auth(key.clone())))?;
            feed(world, &mut model, "S", &InterfaceId::new(PartyLabel::S, "in"), Payload::Qubits(block.qubits()))?;
            let f = server.session(world, point, None)? == Verdict::Abort;
            let out = feed(world, &mut model, "S", &InterfaceId::new(PartyLabel::S, "f"), Payload::Control(f))?;
            let mut fresh = None;
            let mut qubits = None;
            for e in out {
                match e.payload {
                    Payload::Key(KeyMaterial::Auth(k)) if e.port == io => fresh = Some(k),
                    Payload::Qubits(q) if e.port.label == PartyLabel::S => qubits = Some(q),
                    _ => {}
                }
            }
            Ok(match (fresh, qubits) {
                (Some(key), Some(q)) => {
                    Some(BbOutcome { block: EncodedBlock { message: q[..m].to_vec(), traps: q[m..].to_vec() }, key })
                }
                _ => None,
            })
        }
        Backend::CliffordAuth { .. } => {
            let fresh = ProductKey::generate(m, t, world.coins)?;
            let instruction = rekey_circuit(key, program, &fresh)?;
            let qs = block.qubits();
            log(world, label, PartyLabel::S, &Payload::Program(instruction.clone()))?;
            instruction.apply(&mut world.substrate, &qs)?;
            if server.session(world, point, Some(&qs))? == Verdict::Abort {
                world.substrate.discard(&qs)?;
                log(world, PartyLabel::S, label, &Payload::Err)?;
                return Ok(None);
            }
            Ok(Some(BbOutcome { block, key: fresh }))
        }
    }
}

/// BB2: [`bb_run`], download, decode.
#[allow(clippy::too_many_arguments)]
pub fn bb2_run(
    world: &mut World<'_>,
    client: usize,
    round: usize,
    block: EncodedBlock,
    key: &ProductKey,
    program: &Circuit,
    backend: Backend,
    server: &mut dyn Server,
) -> Result<FinalResult, DqcError> {
    let Some(out) = bb_run(world, client, round, block, key, program, backend, server)? else {
        return Ok(FinalResult::Verification);
    };
    download(world, client, out, server)
}

/// Sends a server-held block home and decodes it.
pub fn download(
    world: &mut World<'_>,
    client: usize,
    out: BbOutcome,
    server: &mut dyn Server,
) -> Result<FinalResult, DqcError> {
    let qs = out.block.qubits();
    if server.transit(world, AttackPoint::Download { client }, &qs)? == Verdict::Abort {
        world.substrate.discard(&qs)?;
        return Ok(FinalResult::Authentication);
    }
    log(world, PartyLabel::S, PartyLabel::Client(client), &Payload::Qubits(qs))?;
    Ok(match out.key.decode(&mut world.substrate, &out.block, world.coins)? {
        AuthVerdict::Accepted { message } => FinalResult::Output(message),
        AuthVerdict::Rejected => FinalResult::Authentication,
    })
}
