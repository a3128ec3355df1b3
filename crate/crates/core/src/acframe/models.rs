use std::collections::BTreeSet;

use super::{
    unexpected, Emission, FrameError, InterfaceId, KeyMaterial, LeakRecord, PartyLabel, Payload, System, World,
};
use crate::authcode::{AuthVerdict, EncodedBlock, PauliKey, ProductKey, MAX_SAMPLED_BLOCK};
use crate::multiclient::Wiring;
use crate::qsim::{Circuit, Mat, QubitId};

fn iface(label: PartyLabel, port: &str) -> InterfaceId {
    InterfaceId::new(label, port)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeySpec {
    /// One-time pad on `m` qubits.
    Pad { m: usize },
    /// Qubit-wise trap code on `m` qubits with `t` traps each.
    Auth { m: usize, t: usize },
}

/// `K`: the same uniform key at A and B on request; E is inert.
pub struct KeyResource {
    spec: KeySpec,
    key: Option<KeyMaterial>,
    served: BTreeSet<PartyLabel>,
}

impl KeyResource {
    pub fn new(spec: KeySpec) -> Result<Self, FrameError> {
        if let KeySpec::Auth { t, .. } = spec {
            if 1 + t > MAX_SAMPLED_BLOCK {
                return Err(crate::authcode::AuthError::SizeOverflow { m: 1, t, limit: MAX_SAMPLED_BLOCK }.into());
            }
        }
        Ok(Self { spec, key: None, served: BTreeSet::new() })
    }
}

impl System for KeyResource {
    fn name(&self) -> String {
        "K".into()
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        [PartyLabel::A, PartyLabel::B, PartyLabel::E].iter().map(|&l| iface(l, "key")).collect()
    }

    fn receive(
        &mut self,
        world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        if port.label == PartyLabel::E {
            return Ok(Vec::new());
        }
        if !matches!(payload, Payload::Control(_)) {
            return Err(unexpected(port, &payload));
        }
        if !self.served.insert(port.label) {
            return Err(FrameError::DoubleRequest(port.clone()));
        }
        if self.key.is_none() {
            self.key = Some(match self.spec {
                KeySpec::Pad { m } => KeyMaterial::Pad(PauliKey::random(m, world.coins)),
                KeySpec::Auth { m, t } => KeyMaterial::Auth(ProductKey::generate(m, t, world.coins)?),
            });
        }
        Ok(vec![Emission::new(port.clone(), Payload::Key(self.key.clone().expect("set above")))])
    }
}

/// `C^q-insec`: whatever A sends goes to E; whatever E sends on goes to B.
#[derive(Default)]
pub struct InsecureQChannel {
    in_flight: usize,
}

impl InsecureQChannel {
    pub fn new() -> Self {
        Self::default()
    }
}

impl System for InsecureQChannel {
    fn name(&self) -> String {
        "Cq-insec".into()
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        [PartyLabel::A, PartyLabel::B, PartyLabel::E].iter().map(|&l| iface(l, "q")).collect()
    }

    fn receive(
        &mut self,
        _world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        let Payload::Qubits(_) = payload else {
            return Err(unexpected(port, &payload));
        };
        match port.label {
            PartyLabel::A => {
                self.in_flight += 1;
                Ok(vec![Emission::new(iface(PartyLabel::E, "q"), payload)])
            }
            PartyLabel::E => {
                if self.in_flight == 0 {
                    return Err(FrameError::NothingToDeliver(port.clone()));
                }
                self.in_flight -= 1;
                Ok(vec![Emission::new(iface(PartyLabel::B, "q"), payload)])
            }
            _ => Err(FrameError::NotAnInput(port.clone())),
        }
    }
}

/// `C^c-auth`: classical bits from A reach B unmodified; E learns the length.
#[derive(Default)]
pub struct AuthCChannel;

impl System for AuthCChannel {
    fn name(&self) -> String {
        "Cc-auth".into()
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        [PartyLabel::A, PartyLabel::B, PartyLabel::E].iter().map(|&l| iface(l, "c")).collect()
    }

    fn receive(
        &mut self,
        _world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        if port.label != PartyLabel::A {
            return Err(FrameError::NotAnInput(port.clone()));
        }
        let Payload::Bits(bits) = &payload else {
            return Err(unexpected(port, &payload));
        };
        let leak = LeakRecord::Channel { length: bits.len(), sent: true };
        Ok(vec![
            Emission::new(iface(PartyLabel::E, "c"), Payload::Leak(leak)),
            Emission::new(iface(PartyLabel::B, "c"), payload),
        ])
    }
}

/// `C^q-sec`: leaks the length, then delivers or replaces with ERR per `f`.
/// Its client ports carry the names of the encoder and decoder outside ports.
#[derive(Default)]
pub struct SecureQChannel {
    message: Option<Vec<QubitId>>,
    f: Option<bool>,
}

impl SecureQChannel {
    pub fn new() -> Self {
        Self::default()
    }

    fn settle(&mut self, world: &mut World<'_>) -> Result<Vec<Emission>, FrameError> {
        let (Some(_), Some(f)) = (&self.message, self.f) else {
            return Ok(Vec::new());
        };
        let msg = self.message.take().expect("checked");
        let out = if f {
            world.substrate.discard(&msg)?;
            Payload::Err
        } else {
            Payload::Qubits(msg)
        };
        Ok(vec![Emission::new(iface(PartyLabel::B, "msg"), out)])
    }
}

impl System for SecureQChannel {
    fn name(&self) -> String {
        "Cq-sec".into()
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        vec![
            iface(PartyLabel::A, "msg"),
            iface(PartyLabel::B, "msg"),
            iface(PartyLabel::E, "f"),
            iface(PartyLabel::E, "leak"),
        ]
    }

    fn receive(
        &mut self,
        world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        match (port.label, port.port.as_str(), payload) {
            (PartyLabel::A, "msg", Payload::Qubits(q)) => {
                let leak = LeakRecord::Channel { length: q.len(), sent: true };
                self.message = Some(q);
                let mut out = vec![Emission::new(iface(PartyLabel::E, "leak"), Payload::Leak(leak))];
                out.extend(self.settle(world)?);
                Ok(out)
            }
            (PartyLabel::E, "f", Payload::Control(f)) => {
                self.f = Some(f);
                self.settle(world)
            }
            (_, _, p) => Err(unexpected(port, &p)),
        }
    }
}

/// `S^bv`: applies the client's circuit, or returns ERR when the server sets `f`.
pub struct SbvModel {
    round: usize,
    job: Option<(Circuit, Vec<QubitId>)>,
    f: Option<bool>,
    client: PartyLabel,
}

impl SbvModel {
    pub fn new(round: usize) -> Self {
        Self::for_client(PartyLabel::C, round)
    }

    pub fn for_client(client: PartyLabel, round: usize) -> Self {
        Self { round, job: None, f: None, client }
    }

    fn settle(&mut self, world: &mut World<'_>) -> Result<Vec<Emission>, FrameError> {
        let (Some(_), Some(f)) = (&self.job, self.f) else {
            return Ok(Vec::new());
        };
        let (circuit, qubits) = self.job.take().expect("checked");
        let out = if f {
            world.substrate.discard(&qubits)?;
            Payload::Err
        } else {
            circuit.apply(&mut world.substrate, &qubits)?;
            Payload::Qubits(qubits)
        };
        Ok(vec![Emission::new(iface(self.client, "io"), out)])
    }
}

impl System for SbvModel {
    fn name(&self) -> String {
        "Sbv".into()
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        vec![iface(self.client, "io"), iface(PartyLabel::S, "leak"), iface(PartyLabel::S, "f")]
    }

    fn receive(
        &mut self,
        world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        match payload {
            Payload::Job { mut circuits, qubits } if port.label == self.client => {
                if circuits.len() != 1 || circuits[0].width() != qubits.len() {
                    return Err(FrameError::MalformedInput(format!(
                        "expected one circuit on {} qubits, got {} circuit(s)",
                        qubits.len(),
                        circuits.len()
                    )));
                }
                let circuit = circuits.remove(0);
                let leak = LeakRecord::Delegation {
                    qubits: qubits.len(),
                    gate_count: circuit.gate_count(),
                    round: self.round,
                };
                self.job = Some((circuit, qubits));
                let mut out = vec![Emission::new(iface(PartyLabel::S, "leak"), Payload::Leak(leak))];
                out.extend(self.settle(world)?);
                Ok(out)
            }
            Payload::Control(f) if port.label == PartyLabel::S && port.port == "f" => {
                self.f = Some(f);
                self.settle(world)
            }
            p => Err(unexpected(port, &p)),
        }
    }
}

/// `S^bb`: takes `U` and `k'` from the client and `E_{k'} rho` from the
/// server; outputs `E_k U rho` at the server and the fresh `k` at the client.
pub struct SbbModel {
    round: usize,
    traps: usize,
    client: PartyLabel,
    program: Option<Circuit>,
    key: Option<ProductKey>,
    block: Option<Vec<QubitId>>,
    f: Option<bool>,
    leaked: bool,
}

impl SbbModel {
    pub fn new(round: usize, traps: usize) -> Self {
        Self::for_client(PartyLabel::C, round, traps)
    }

    pub fn for_client(client: PartyLabel, round: usize, traps: usize) -> Self {
        Self { round, traps, client, program: None, key: None, block: None, f: None, leaked: false }
    }

    fn settle(&mut self, world: &mut World<'_>) -> Result<Vec<Emission>, FrameError> {
        let mut out = Vec::new();
        let (Some(u), Some(k), Some(block)) = (&self.program, &self.key, &self.block) else {
            return Ok(out);
        };
        let m = k.m();
        if block.len() != m * (1 + k.t()) || u.width() != m || k.t() != self.traps {
            return Err(FrameError::KeyMismatch { expected: m * (1 + k.t()), got: block.len() });
        }
        if !self.leaked {
            self.leaked = true;
            let leak = LeakRecord::Delegation { qubits: m, gate_count: u.gate_count(), round: self.round };
            out.push(Emission::new(iface(PartyLabel::S, "leak"), Payload::Leak(leak)));
        }
        let Some(f) = self.f else {
            return Ok(out);
        };
        let (u, k, block) =
            (self.program.take().expect("set"), self.key.take().expect("set"), self.block.take().expect("set"));
        if f {
            world.substrate.discard(&block)?;
            out.push(Emission::new(iface(self.client, "io"), Payload::Err));
            return Ok(out);
        }
        let encoded = EncodedBlock { message: block[..m].to_vec(), traps: block[m..].to_vec() };
        match k.decode(&mut world.substrate, &encoded, world.coins)? {
            AuthVerdict::Rejected => out.push(Emission::new(iface(self.client, "io"), Payload::Err)),
            AuthVerdict::Accepted { message } => {
                u.apply(&mut world.substrate, &message)?;
                let fresh = ProductKey::generate(m, self.traps, world.coins)?;
                let next = fresh.encode(&mut world.substrate, &message)?;
                out.push(Emission::new(iface(self.client, "io"), Payload::Key(KeyMaterial::Auth(fresh))));
                out.push(Emission::new(iface(PartyLabel::S, "out"), Payload::Qubits(next.qubits())));
            }
        }
        Ok(out)
    }
}

impl System for SbbModel {
    fn name(&self) -> String {
        "Sbb".into()
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        vec![
            iface(self.client, "io"),
            iface(PartyLabel::S, "in"),
            iface(PartyLabel::S, "out"),
            iface(PartyLabel::S, "leak"),
            iface(PartyLabel::S, "f"),
        ]
    }

    fn receive(
        &mut self,
        world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        match (port.label, port.port.as_str(), payload) {
            (l, "io", Payload::Program(u)) if l == self.client => self.program = Some(u),
            (l, "io", Payload::Key(KeyMaterial::Auth(k))) if l == self.client => self.key = Some(k),
            (PartyLabel::S, "in", Payload::Qubits(q)) => self.block = Some(q),
            (PartyLabel::S, "f", Payload::Control(f)) => self.f = Some(f),
            (_, _, p) => return Err(unexpected(port, &p)),
        }
        self.settle(world)
    }
}

/// `S^n-bv`: evaluates the wired multi-client computation directly and
/// hands each client its slice of the output, or ERR everywhere when `f` is set.
pub struct SnbvModel {
    wiring: Wiring,
    jobs: Vec<Option<(Vec<Circuit>, Vec<QubitId>)>>,
    f: Option<bool>,
    leaked: bool,
}

impl SnbvModel {
    pub fn new(wiring: Wiring) -> Self {
        let n = wiring.n();
        Self { wiring, jobs: vec![None; n], f: None, leaked: false }
    }

    fn settle(&mut self, world: &mut World<'_>) -> Result<Vec<Emission>, FrameError> {
        let mut out = Vec::new();
        if self.jobs.iter().any(Option::is_none) {
            return Ok(out);
        }
        let circuits: Vec<Vec<Circuit>> = self.jobs.iter().map(|j| j.as_ref().expect("checked").0.clone()).collect();
        if !self.leaked {
            self.leaked = true;
            for rounds in &circuits {
                for (h, c) in rounds.iter().enumerate() {
                    let leak = LeakRecord::Delegation { qubits: c.width(), gate_count: c.gate_count(), round: h + 1 };
                    out.push(Emission::new(iface(PartyLabel::S, "leak"), Payload::Leak(leak)));
                }
            }
        }
        let Some(f) = self.f else {
            return Ok(out);
        };
        let jobs: Vec<(Vec<Circuit>, Vec<QubitId>)> =
            self.jobs.iter_mut().map(|j| j.take().expect("checked")).collect();
        let inputs: Vec<Vec<QubitId>> = jobs.iter().map(|j| j.1.clone()).collect();
        let finals =
            if f { None } else { Some(self.wiring.evaluate(&mut world.substrate, &circuits, inputs.clone())?) };
        let expecting = self.wiring.final_widths(&circuits);
        match finals {
            Some(regs) => {
                for (i, reg) in regs.into_iter().enumerate() {
                    if !reg.is_empty() {
                        out.push(Emission::new(iface(PartyLabel::Client(i + 1), "io"), Payload::Qubits(reg)));
                    }
                }
            }
            None => {
                let all: Vec<QubitId> = inputs.concat();
                world.substrate.discard(&all)?;
                for (i, w) in expecting.iter().enumerate() {
                    if *w > 0 {
                        out.push(Emission::new(iface(PartyLabel::Client(i + 1), "io"), Payload::Err));
                    }
                }
            }
        }
        Ok(out)
    }
}

impl System for SnbvModel {
    fn name(&self) -> String {
        format!("S{}-bv", self.wiring.n())
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        let mut v: Vec<InterfaceId> = (1..=self.wiring.n()).map(|i| iface(PartyLabel::Client(i), "io")).collect();
        v.push(iface(PartyLabel::S, "leak"));
        v.push(iface(PartyLabel::S, "f"));
        v
    }

    fn receive(
        &mut self,
        world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        match (port.label, payload) {
            (PartyLabel::Client(i), Payload::Job { circuits, qubits }) if (1..=self.wiring.n()).contains(&i) => {
                if circuits.len() != self.wiring.m() {
                    return Err(FrameError::MalformedInput(format!(
                        "client {i} sent {} circuits, expected {}",
                        circuits.len(),
                        self.wiring.m()
                    )));
                }
                self.jobs[i - 1] = Some((circuits, qubits));
                if self.jobs.iter().all(Option::is_some) {
                    let circuits: Vec<Vec<Circuit>> =
                        self.jobs.iter().map(|j| j.as_ref().expect("all").0.clone()).collect();
                    let widths: Vec<usize> = self.jobs.iter().map(|j| j.as_ref().expect("all").1.len()).collect();
                    self.wiring
                        .check_widths(&circuits, &widths)
                        .map_err(|e| FrameError::MalformedInput(e.to_string()))?;
                }
            }
            (PartyLabel::S, Payload::Control(f)) if port.port == "f" => self.f = Some(f),
            (_, p) => return Err(unexpected(port, &p)),
        }
        self.settle(world)
    }
}

/// `pi^e`: requests the shared key, authenticates the message and sends it
/// into the channel.
pub struct AuthEncoder {
    label: PartyLabel,
    key: Option<ProductKey>,
    pending: Option<Vec<QubitId>>,
}

impl AuthEncoder {
    pub fn new(label: PartyLabel) -> Self {
        Self { label, key: None, pending: None }
    }

    fn flush(&mut self, world: &mut World<'_>) -> Result<Vec<Emission>, FrameError> {
        let (Some(k), Some(_)) = (&self.key, &self.pending) else {
            return Ok(Vec::new());
        };
        let msg = self.pending.take().expect("checked");
        if msg.len() != k.m() {
            return Err(FrameError::KeyMismatch { expected: k.m(), got: msg.len() });
        }
        let block = k.encode(&mut world.substrate, &msg)?;
        Ok(vec![Emission::new(iface(self.label, "q"), Payload::Qubits(block.qubits()))])
    }
}

impl System for AuthEncoder {
    fn name(&self) -> String {
        format!("enc{}", self.label)
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        vec![iface(self.label, "msg")]
    }

    fn inside_ports(&self) -> Vec<InterfaceId> {
        vec![iface(self.label, "key"), iface(self.label, "q")]
    }

    fn start(&mut self, _world: &mut World<'_>) -> Result<Vec<Emission>, FrameError> {
        Ok(vec![Emission::new(iface(self.label, "key"), Payload::Control(true))])
    }

    fn receive(
        &mut self,
        world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        match (port.port.as_str(), payload) {
            ("key", Payload::Key(KeyMaterial::Auth(k))) => self.key = Some(k),
            ("msg", Payload::Qubits(q)) => self.pending = Some(q),
            (_, p) => return Err(unexpected(port, &p)),
        }
        self.flush(world)
    }
}

/// `pi^d`: requests the shared key and verifies what comes out of the channel.
pub struct AuthDecoder {
    label: PartyLabel,
    key: Option<ProductKey>,
    pending: Option<Vec<QubitId>>,
}

impl AuthDecoder {
    pub fn new(label: PartyLabel) -> Self {
        Self { label, key: None, pending: None }
    }

    fn flush(&mut self, world: &mut World<'_>) -> Result<Vec<Emission>, FrameError> {
        let (Some(k), Some(_)) = (&self.key, &self.pending) else {
            return Ok(Vec::new());
        };
        let q = self.pending.take().expect("checked");
        let m = k.m();
        if q.len() != m * (1 + k.t()) {
            return Err(FrameError::KeyMismatch { expected: m * (1 + k.t()), got: q.len() });
        }
        let block = EncodedBlock { message: q[..m].to_vec(), traps: q[m..].to_vec() };
        let out = match k.decode(&mut world.substrate, &block, world.coins)? {
            AuthVerdict::Accepted { message } => Payload::Qubits(message),
            AuthVerdict::Rejected => Payload::Err,
        };
        Ok(vec![Emission::new(iface(self.label, "msg"), out)])
    }
}

impl System for AuthDecoder {
    fn name(&self) -> String {
        format!("dec{}", self.label)
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        vec![iface(self.label, "msg")]
    }

    fn inside_ports(&self) -> Vec<InterfaceId> {
        vec![iface(self.label, "key"), iface(self.label, "q")]
    }

    fn start(&mut self, _world: &mut World<'_>) -> Result<Vec<Emission>, FrameError> {
        Ok(vec![Emission::new(iface(self.label, "key"), Payload::Control(true))])
    }

    fn receive(
        &mut self,
        world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        match (port.port.as_str(), payload) {
            ("key", Payload::Key(KeyMaterial::Auth(k))) => self.key = Some(k),
            ("q", Payload::Qubits(q)) => self.pending = Some(q),
            (_, p) => return Err(unexpected(port, &p)),
        }
        self.flush(world)
    }
}

/// Simulator for the constructed secure channel: on the length leak it
/// encodes that many |0> under its own key and shows them at `E.q`; whatever
/// comes back is decoded and the verdict becomes `f`.
pub struct ChannelSimulator {
    traps: usize,
    key: Option<ProductKey>,
    dummy: Vec<QubitId>,
}

impl ChannelSimulator {
    pub fn new(traps: usize) -> Self {
        Self { traps, key: None, dummy: Vec::new() }
    }
}

impl System for ChannelSimulator {
    fn name(&self) -> String {
        "simE".into()
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        vec![iface(PartyLabel::E, "q"), iface(PartyLabel::E, "key")]
    }

    fn inside_ports(&self) -> Vec<InterfaceId> {
        vec![iface(PartyLabel::E, "f"), iface(PartyLabel::E, "leak")]
    }

    fn receive(
        &mut self,
        world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        match (port.port.as_str(), payload) {
            ("key", _) => Ok(Vec::new()),
            ("leak", Payload::Leak(LeakRecord::Channel { length, .. })) => {
                let key = ProductKey::generate(length, self.traps, world.coins)?;
                self.dummy = world.substrate.allocate_zeros(length, crate::qsim::Owner::Channel)?;
                let block = key.encode(&mut world.substrate, &self.dummy)?;
                self.key = Some(key);
                Ok(vec![Emission::new(iface(PartyLabel::E, "q"), Payload::Qubits(block.qubits()))])
            }
            ("q", Payload::Qubits(q)) => {
                let key = self.key.take().ok_or_else(|| FrameError::NothingToDeliver(port.clone()))?;
                let m = key.m();
                if q.len() != m * (1 + key.t()) {
                    return Err(FrameError::KeyMismatch { expected: m * (1 + key.t()), got: q.len() });
                }
                let block = EncodedBlock { message: q[..m].to_vec(), traps: q[m..].to_vec() };
                let verdict = key.decode(&mut world.substrate, &block, world.coins)?;
                if let AuthVerdict::Accepted { message } = verdict {
                    world.substrate.discard(&message)?;
                    return Ok(vec![Emission::new(iface(PartyLabel::E, "f"), Payload::Control(false))]);
                }
                Ok(vec![Emission::new(iface(PartyLabel::E, "f"), Payload::Control(true))])
            }
            (_, p) => Err(unexpected(port, &p)),
        }
    }
}

/// A one-shot quantum channel: qubits arriving at `input` leave at
/// `output` after a unitary drawn with the given weights, or are replaced
/// by ERR with weight `err_weight`.
pub struct UnitaryMixture {
    name: String,
    input: InterfaceId,
    output: InterfaceId,
    branches: Vec<(f64, Mat)>,
    err_weight: f64,
}

impl UnitaryMixture {
    pub fn new(
        name: &str,
        input: InterfaceId,
        output: InterfaceId,
        branches: Vec<(f64, Mat)>,
        err_weight: f64,
    ) -> Self {
        Self { name: name.to_string(), input, output, branches, err_weight }
    }
}

impl System for UnitaryMixture {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        vec![self.input.clone(), self.output.clone()]
    }

    fn receive(
        &mut self,
        world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        if port != &self.input {
            return Err(FrameError::NotAnInput(port.clone()));
        }
        let out = transform(world, payload, &self.branches, self.err_weight).map_err(|p| unexpected(port, &p))??;
        Ok(vec![Emission::new(self.output.clone(), out)])
    }
}

type Transformed = Result<Payload, FrameError>;

fn transform(
    world: &mut World<'_>,
    payload: Payload,
    branches: &[(f64, Mat)],
    err_weight: f64,
) -> Result<Transformed, Payload> {
    let q = match payload {
        Payload::Qubits(q) => q,
        Payload::Err => return Ok(Ok(Payload::Err)),
        other => return Err(other),
    };
    let mut weights: Vec<f64> = branches.iter().map(|b| b.0).collect();
    weights.push(err_weight);
    let k = world.coins.weighted(&weights);
    let run = |world: &mut World<'_>| -> Transformed {
        if k == branches.len() {
            world.substrate.discard(&q)?;
            return Ok(Payload::Err);
        }
        world.substrate.apply_unitary(&branches[k].1, &q)?;
        Ok(Payload::Qubits(q))
    };
    Ok(run(world))
}

/// Converter that post-processes one resource output: it takes what the
/// resource emits on `inside` and re-emits it on `outside` after a
/// [`UnitaryMixture`]-style random unitary or ERR.
pub struct PostProcess {
    inside: InterfaceId,
    outside: InterfaceId,
    branches: Vec<(f64, Mat)>,
    err_weight: f64,
}

impl PostProcess {
    pub fn new(inside: InterfaceId, outside: InterfaceId, branches: Vec<(f64, Mat)>, err_weight: f64) -> Self {
        Self { inside, outside, branches, err_weight }
    }
}

impl System for PostProcess {
    fn name(&self) -> String {
        format!("post{}", self.inside)
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        vec![self.outside.clone()]
    }

    fn inside_ports(&self) -> Vec<InterfaceId> {
        vec![self.inside.clone()]
    }

    fn receive(
        &mut self,
        world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        if port != &self.inside {
            return Err(FrameError::NotAnInput(port.clone()));
        }
        let out = transform(world, payload, &self.branches, self.err_weight).map_err(|p| unexpected(port, &p))??;
        Ok(vec![Emission::new(self.outside.clone(), out)])
    }
}

/// Converter joining two resource interfaces: whatever leaves `from` enters `to`.
pub struct Wire {
    from: InterfaceId,
    to: InterfaceId,
}

impl Wire {
    pub fn new(from: InterfaceId, to: InterfaceId) -> Self {
        Self { from, to }
    }
}

impl System for Wire {
    fn name(&self) -> String {
        format!("wire{}", self.from)
    }

    fn interfaces(&self) -> Vec<InterfaceId> {
        Vec::new()
    }

    fn inside_ports(&self) -> Vec<InterfaceId> {
        vec![self.from.clone(), self.to.clone()]
    }

    fn receive(
        &mut self,
        _world: &mut World<'_>,
        port: &InterfaceId,
        payload: Payload,
    ) -> Result<Vec<Emission>, FrameError> {
        if port != &self.from {
            return Err(FrameError::NotAnInput(port.clone()));
        }
        Ok(vec![Emission::new(self.to.clone(), payload)])
    }
}
