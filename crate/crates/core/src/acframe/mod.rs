//! Executable abstract-cryptography runtime.
//!
//! A [`System`] is a box with named interfaces that reacts to payloads
//! arriving on them. Resources and converters are both systems; [`compose`]
//! wires converters onto resources, covers dishonest interfaces with
//! [`Filter`]s and yields another system, so compositions nest. Everything
//! runs on one [`World`]: the shared substrate, the coin source and the
//! transcript.

mod advantage;
mod compose;
mod models;

use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::authcode::{AuthError, PauliKey, ProductKey};
use crate::qsim::{Circuit, Coins, Owner, QsimError, QubitId, Substrate};

pub use advantage::{
    derive_seed, exact_advantage, joint_output, mc_advantage, Branching, DistinguisherInput, Factory, JointOutput,
    Responder, Strategy,
};
pub use compose::{compose, parallel, run_system, Composed, Filter, FilterSetting};
pub use models::{
    AuthCChannel, AuthDecoder, AuthEncoder, ChannelSimulator, InsecureQChannel, KeyResource, KeySpec, PostProcess,
    SbbModel, SbvModel, SecureQChannel, SnbvModel, UnitaryMixture, Wire,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartyLabel {
    C,
    Client(usize),
    S,
    E,
    A,
    B,
    /// The distinguisher, outside every system.
    D,
}

impl PartyLabel {
    /// Ledger owner of qubits that cross an interface with this label.
    pub fn owner(self) -> Owner {
        match self {
            PartyLabel::C | PartyLabel::A => Owner::Client(0),
            PartyLabel::B => Owner::Client(1),
            PartyLabel::Client(i) => Owner::Client(i),
            PartyLabel::S => Owner::Server,
            PartyLabel::E => Owner::Channel,
            PartyLabel::D => Owner::Reference,
        }
    }

    pub fn is_dishonest(self) -> bool {
        matches!(self, PartyLabel::S | PartyLabel::E)
    }
}

impl fmt::Display for PartyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyLabel::C => write!(f, "C"),
            PartyLabel::Client(i) => write!(f, "C{i}"),
            PartyLabel::S => write!(f, "S"),
            PartyLabel::E => write!(f, "E"),
            PartyLabel::A => write!(f, "A"),
            PartyLabel::B => write!(f, "B"),
            PartyLabel::D => write!(f, "D"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InterfaceId {
    pub label: PartyLabel,
    pub port: String,
}

impl InterfaceId {
    pub fn new(label: PartyLabel, port: &str) -> Self {
        Self { label, port: port.to_string() }
    }
}

impl fmt::Display for InterfaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.label, self.port)
    }
}

/// Size-only information a resource may hand to the dishonest side. The
/// variants have no field that could carry key bits, gate identities or
/// input data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LeakRecord {
    Delegation { qubits: usize, gate_count: usize, round: usize },
    Channel { length: usize, sent: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum KeyMaterial {
    Pad(PauliKey),
    Auth(ProductKey),
}

impl KeyMaterial {
    fn describe(&self) -> String {
        match self {
            KeyMaterial::Pad(k) => k.bits().iter().map(|&b| if b { '1' } else { '0' }).collect(),
            KeyMaterial::Auth(k) => format!("auth[{}]", k.describe()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Bits(Vec<bool>),
    Qubits(Vec<QubitId>),
    Control(bool),
    Key(KeyMaterial),
    Leak(LeakRecord),
    /// A delegated computation: one circuit per round plus the input register.
    Job {
        circuits: Vec<Circuit>,
        qubits: Vec<QubitId>,
    },
    Program(Circuit),
    /// The out-of-band error marker.
    Err,
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Bits(_) => "bits",
            Payload::Qubits(_) => "qubits",
            Payload::Control(_) => "control",
            Payload::Key(_) => "key",
            Payload::Leak(_) => "leak",
            Payload::Job { .. } => "job",
            Payload::Program(_) => "program",
            Payload::Err => "err",
        }
    }

    pub fn qubits(&self) -> &[QubitId] {
        match self {
            Payload::Qubits(q) | Payload::Job { qubits: q, .. } => q,
            _ => &[],
        }
    }

    /// The classical content as seen by a distinguisher; quantum payloads
    /// contribute only their length.
    pub fn classical_label(&self) -> String {
        match self {
            Payload::Bits(b) => format!("bits:{}", b.iter().map(|&x| if x { '1' } else { '0' }).collect::<String>()),
            Payload::Qubits(q) => format!("qubits[{}]", q.len()),
            Payload::Control(b) => format!("control:{}", u8::from(*b)),
            Payload::Key(k) => format!("key:{}", k.describe()),
            Payload::Leak(l) => format!("leak:{l:?}"),
            Payload::Job { circuits, qubits } => format!("job[{}x{}]", circuits.len(), qubits.len()),
            Payload::Program(c) => format!("program[{}]", c.gate_count()),
            Payload::Err => "ERR".to_string(),
        }
    }

    fn canonical(&self) -> String {
        match self {
            Payload::Qubits(q) => format!("qubits:{}", join_ids(q)),
            Payload::Job { circuits, qubits } => format!("job:{}:{circuits:?}", join_ids(qubits)),
            Payload::Program(c) => format!("program:{c:?}"),
            other => other.classical_label(),
        }
    }

    /// Short stable hash of the payload, for transcripts.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn join_ids(q: &[QubitId]) -> String {
    q.iter().map(|id| id.0.to_string()).collect::<Vec<_>>().join(",")
}

/// A payload crossing an interface, as seen from outside a system.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub step: u64,
    pub src: InterfaceId,
    pub dst: InterfaceId,
    pub payload: Payload,
}

/// What a system emits: a payload on one of its own ports.
#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub port: InterfaceId,
    pub payload: Payload,
}

impl Emission {
    pub fn new(port: InterfaceId, payload: Payload) -> Self {
        Self { port, payload }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptRecord {
    pub step: u64,
    pub src: String,
    pub dst: String,
    pub kind: &'static str,
    pub digest: String,
}

impl fmt::Display for TranscriptRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} {}", self.step, self.src, self.dst, self.kind, self.digest)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// One line per envelope: `step source destination kind digest`.
    pub fn dump(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }

    /// Every record leaving a `leak` port must be a leak record.
    pub fn check_leak_schema(&self) -> Result<(), FrameError> {
        for r in &self.records {
            if r.src.ends_with(".leak") && r.kind != "leak" {
                return Err(FrameError::LeakSchema(r.to_string()));
            }
        }
        Ok(())
    }
}

/// Shared state of one run.
pub struct World<'c> {
    pub substrate: Substrate,
    pub coins: &'c mut dyn Coins,
    transcript: Transcript,
    step: u64,
}

impl<'c> World<'c> {
    pub fn new(substrate: Substrate, coins: &'c mut dyn Coins) -> Self {
        Self { substrate, coins, transcript: Transcript::default(), step: 0 }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_parts(self) -> (Substrate, Transcript) {
        (self.substrate, self.transcript)
    }

    /// Logs a payload moving from `src` to `dst` and hands any qubits it
    /// carries to the destination party.
    pub fn record(&mut self, src: &str, dst: &str, to: &InterfaceId, payload: &Payload) -> Result<u64, FrameError> {
        let qs = payload.qubits();
        if !qs.is_empty() {
            self.substrate.transfer(qs, to.label.owner())?;
        }
        self.step += 1;
        self.transcript.records.push(TranscriptRecord {
            step: self.step,
            src: src.to_string(),
            dst: dst.to_string(),
            kind: payload.kind(),
            digest: payload.digest(),
        });
        Ok(self.step)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("port {0} is not bound to any resource interface")]
    DanglingPort(InterfaceId),
    #[error("interface {0} bound twice")]
    DoubleBinding(InterfaceId),
    #[error("interface {0} declared twice")]
    DuplicateInterface(InterfaceId),
    #[error("systems expose different interfaces")]
    SignatureMismatch,
    #[error("{0} accepts no input")]
    NotAnInput(InterfaceId),
    #[error("unexpected {kind} payload on {port}")]
    UnexpectedPayload { port: InterfaceId, kind: &'static str },
    #[error("delivery on {0} without a prior send")]
    NothingToDeliver(InterfaceId),
    #[error("second key request on {0}")]
    DoubleRequest(InterfaceId),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("key covers {expected} qubits but the block has {got}")]
    KeyMismatch { expected: usize, got: usize },
    #[error("at least {min} trials required, got {got}")]
    TooFewTrials { min: usize, got: usize },
    #[error("leak port emitted a non-leak payload: {0}")]
    LeakSchema(String),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Auth(#[from] AuthError),
}

/// A box with interfaces. Converters additionally declare inside ports,
/// which [`compose`] binds to resource interfaces of the same name.
pub trait System {
    fn name(&self) -> String;

    /// Interfaces reachable from outside.
    fn interfaces(&self) -> Vec<InterfaceId>;

    fn inside_ports(&self) -> Vec<InterfaceId> {
        Vec::new()
    }

    /// Name of the innermost system owning `port`, for transcripts.
    fn endpoint(&self, _port: &InterfaceId) -> String {
        self.name()
    }

    fn start(&mut self, _world: &mut World<'_>) -> Result<Vec<Emission>, FrameError> {
        Ok(Vec::new())
    }

    fn receive(
        &mut self,
        world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError>;
}

pub(crate) fn unexpected(port: &InterfaceId, payload: &Payload) -> FrameError {
    FrameError::UnexpectedPayload { port: port.clone(), kind: payload.kind() }
}
