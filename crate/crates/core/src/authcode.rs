//! Quantum one-time pad and the Clifford trap authentication code.
//!
//! `E_k` appends `t` trap qubits in |0> and applies a secret Clifford `C_k`
//! to message plus traps. `D_k` undoes `C_k` and accepts iff every trap reads
//! 0. Any Pauli attack on the block is twirled by `C_k` into a uniformly
//! random non-identity Pauli, which is what makes the security error exactly
//! computable by enumerating the Clifford group.

use std::sync::OnceLock;

use thiserror::Error;

use crate::qsim::{
    enumerate_clifford, sample_clifford, sample_clifford_walk, CliffordElement, Coins, DensityMatrix, Mat, Owner,
    PauliString, QsimError, QubitId, Substrate, C64,
};

/// Largest `m + t` for which keys come from the enumerated group.
pub const MAX_ENUMERATED_BLOCK: usize = 2;
/// Largest `m + t` for sampled keys.
pub const MAX_SAMPLED_BLOCK: usize = 4;
const WALK_LAYERS_PER_QUBIT: usize = 12;

/// Security error of the (m=1, t=1) code against Pauli attacks: every one of
/// the 15 non-identity attacks gives `p_detect = 8/15`, `p_harmless = 1/15`.
/// Pinned from [`exact_detection_probability`] and regression tested.
pub const EPSILON_Q_SEC_1_1: f64 = 6.0 / 15.0;
pub const P_DETECT_1_1: f64 = 8.0 / 15.0;
pub const P_HARMLESS_1_1: f64 = 1.0 / 15.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuthError {
    #[error("block of {m}+{t} qubits exceeds the {limit}-qubit limit for this key mode")]
    SizeOverflow { m: usize, t: usize, limit: usize },
    #[error("size mismatch: key expects {expected} qubits, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("one-time pad key must have {expected} bits, got {got}")]
    KeyLength { expected: usize, got: usize },
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// A 2m-bit one-time pad key: bit `2j` is the X mask and bit `2j+1` the Z mask of qubit `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliKey {
    m: usize,
    bits: Vec<bool>,
}

impl PauliKey {
    pub fn new(m: usize, bits: Vec<bool>) -> Result<Self, AuthError> {
        if bits.len() != 2 * m {
            return Err(AuthError::KeyLength { expected: 2 * m, got: bits.len() });
        }
        Ok(Self { m, bits })
    }

    pub fn random(m: usize, coins: &mut (impl Coins + ?Sized)) -> Self {
        Self { m, bits: (0..2 * m).map(|_| coins.uniform(2) == 1).collect() }
    }

    /// All `4^m` keys.
    pub fn all(m: usize) -> impl Iterator<Item = PauliKey> {
        (0..1usize << (2 * m)).map(move |k| PauliKey { m, bits: (0..2 * m).map(|b| (k >> b) & 1 == 1).collect() })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// `prod_j X^{x_j} Z^{z_j}` up to phase.
    pub fn pauli(&self) -> PauliString {
        let x: Vec<bool> = self.bits.iter().step_by(2).copied().collect();
        let z: Vec<bool> = self.bits.iter().skip(1).step_by(2).copied().collect();
        PauliString::from_xz(&x, &z)
    }
}

pub fn otp_encrypt(state: &DensityMatrix, key: &PauliKey) -> Result<DensityMatrix, AuthError> {
    if state.n_qubits() != key.m {
        return Err(AuthError::SizeMismatch { expected: key.m, got: state.n_qubits() });
    }
    Ok(state.conjugated(&key.pauli().matrix()))
}

/// Paulis are self-inverse up to phase, so decryption is the same map.
pub fn otp_decrypt(state: &DensityMatrix, key: &PauliKey) -> Result<DensityMatrix, AuthError> {
    otp_encrypt(state, key)
}

/// One-time pad applied in place to substrate qubits.
pub fn otp_apply(s: &mut Substrate, qubits: &[QubitId], key: &PauliKey) -> Result<(), AuthError> {
    if qubits.len() != key.m {
        return Err(AuthError::SizeMismatch { expected: key.m, got: qubits.len() });
    }
    s.apply_pauli(&key.pauli(), qubits)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyMode {
    /// Uniform over the enumerated Clifford group (`m + t <= 2`).
    Enumerated,
    /// Random-walk sampled Clifford (`m + t <= 4`).
    Sampled,
}

/// Key of the trap code: `t` traps and a Clifford on `m + t` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct AuthKey {
    m: usize,
    t: usize,
    clifford: CliffordElement,
}

impl AuthKey {
    pub fn from_clifford(m: usize, t: usize, clifford: CliffordElement) -> Result<Self, AuthError> {
        if clifford.n_qubits() != m + t {
            return Err(AuthError::SizeMismatch { expected: m + t, got: clifford.n_qubits() });
        }
        Ok(Self { m, t, clifford })
    }

    pub fn identity(m: usize, t: usize) -> Self {
        Self { m, t, clifford: CliffordElement::identity(m + t) }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn clifford(&self) -> &CliffordElement {
        &self.clifford
    }

    pub fn block_size(&self) -> usize {
        self.m + self.t
    }
}

pub fn auth_keygen(m: usize, t: usize, coins: &mut (impl Coins + ?Sized), mode: KeyMode) -> Result<AuthKey, AuthError> {
    let n = m + t;
    let limit = match mode {
        KeyMode::Enumerated => MAX_ENUMERATED_BLOCK,
        KeyMode::Sampled => MAX_SAMPLED_BLOCK,
    };
    if n == 0 || n > limit {
        return Err(AuthError::SizeOverflow { m, t, limit });
    }
    let clifford = if n <= MAX_ENUMERATED_BLOCK {
        sample_clifford(n, coins)?
    } else {
        sample_clifford_walk(n, WALK_LAYERS_PER_QUBIT * n, coins)?
    };
    Ok(AuthKey { m, t, clifford })
}

/// Key mode a block of `m + t` qubits needs.
pub fn mode_for(m: usize, t: usize) -> KeyMode {
    if m + t <= MAX_ENUMERATED_BLOCK {
        KeyMode::Enumerated
    } else {
        KeyMode::Sampled
    }
}

/// `E_k`: appends the traps (owned like the first message qubit) and applies
/// the key Clifford. Returns the block as `message ++ traps`.
pub fn auth_encode(s: &mut Substrate, message: &[QubitId], key: &AuthKey) -> Result<Vec<QubitId>, AuthError> {
    if message.len() != key.m {
        return Err(AuthError::SizeMismatch { expected: key.m, got: message.len() });
    }
    let owner = match message.first() {
        Some(&q) => s.owner(q)?,
        None => Owner::Channel,
    };
    let traps = s.allocate_zeros(key.t, owner)?;
    let block: Vec<QubitId> = message.iter().chain(&traps).copied().collect();
    s.apply_unitary(key.clifford.matrix(), &block)?;
    Ok(block)
}

/// Outcome of `D_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthVerdict {
    /// Traps all read 0; the message qubits are still in the substrate.
    Accepted { message: Vec<QubitId> },
    /// The error marker. The message qubits have been discarded.
    Rejected,
}

impl AuthVerdict {
    pub fn accepted(&self) -> bool {
        matches!(self, AuthVerdict::Accepted { .. })
    }

    /// Reduced state of the payload, or `None` for the error marker.
    pub fn payload(&self, s: &Substrate) -> Result<Option<DensityMatrix>, QsimError> {
        match self {
            AuthVerdict::Accepted { message } => s.partial_trace(message).map(Some),
            AuthVerdict::Rejected => Ok(None),
        }
    }
}

/// `D_k`: inverse Clifford, trap readout, and cleanup. Traps are always
/// released; on rejection the message goes with them.
pub fn auth_decode(
    s: &mut Substrate,
    block: &[QubitId],
    key: &AuthKey,
    coins: &mut (impl Coins + ?Sized),
) -> Result<AuthVerdict, AuthError> {
    if block.len() != key.block_size() {
        return Err(AuthError::SizeMismatch { expected: key.block_size(), got: block.len() });
    }
    s.apply_unitary(&key.clifford.matrix().adjoint(), block)?;
    let (message, traps) = block.split_at(key.m);
    let ok = s.measure_all_zero(traps, coins)?;
    s.discard(traps)?;
    if ok {
        Ok(AuthVerdict::Accepted { message: message.to_vec() })
    } else {
        s.discard(message)?;
        Ok(AuthVerdict::Rejected)
    }
}

/// An adversarial operation on an authenticated block.
#[derive(Debug, Clone, PartialEq)]
pub enum Attack {
    Pauli(PauliString),
    Unitary(Mat),
}

impl Attack {
    pub fn matrix(&self) -> Mat {
        match self {
            Attack::Pauli(p) => p.matrix(),
            Attack::Unitary(u) => u.clone(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Attack::Pauli(p) => p.len(),
            Attack::Unitary(u) => u.nrows().trailing_zeros() as usize,
        }
    }

    pub fn apply(&self, s: &mut Substrate, block: &[QubitId]) -> Result<(), QsimError> {
        match self {
            Attack::Pauli(p) => s.apply_pauli(p, block),
            Attack::Unitary(u) => s.apply_unitary(u, block),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionStats {
    pub p_detect: f64,
    pub p_harmless: f64,
}

impl DetectionStats {
    /// Weight of "accepted but the message was changed".
    pub fn epsilon(&self) -> f64 {
        (1.0 - self.p_detect - self.p_harmless).max(0.0)
    }
}

/// Exact key-averaged behaviour of `D_k . attack . E_k`.
///
/// The message is probed maximally entangled with an `m`-qubit reference, so
/// `p_harmless` is the weight of the accepted branch that acts as the
/// identity on the message (entanglement fidelity) rather than on a few
/// chosen input states.
pub fn exact_detection_probability(m: usize, t: usize, attack: &Attack) -> Result<DetectionStats, AuthError> {
    let n = m + t;
    if n > MAX_ENUMERATED_BLOCK || m == 0 {
        return Err(AuthError::SizeOverflow { m, t, limit: MAX_ENUMERATED_BLOCK });
    }
    if attack.n_qubits() != n {
        return Err(AuthError::SizeMismatch { expected: n, got: attack.n_qubits() });
    }
    let probe = entangled_probe(m, t);
    let block: Vec<usize> = (m..m + n).collect();
    let a = attack.matrix();
    let mut avg = Mat::zeros(probe.dim(), probe.dim());
    let group = enumerate_clifford(n)?;
    for c in group {
        let mut rho = probe.clone();
        rho.conjugate_positions(c.matrix(), &block);
        rho.conjugate_positions(&a, &block);
        rho.conjugate_positions(&c.matrix().adjoint(), &block);
        avg += rho.matrix();
    }
    avg /= C64::from(group.len() as f64);

    let dim = probe.dim();
    let trap_mask = (1usize << t) - 1;
    let mut p_accept = 0.0;
    for i in (0..dim).filter(|i| i & trap_mask == 0) {
        p_accept += avg[(i, i)].re;
    }
    // <probe| avg |probe>; the probe is pure
    let psi = probe_vector(m, t);
    let p_harmless = (psi.adjoint() * &avg * &psi)[(0, 0)].re;
    Ok(DetectionStats { p_detect: 1.0 - p_accept, p_harmless })
}

fn probe_vector(m: usize, t: usize) -> nalgebra::DVector<C64> {
    let dm = 1usize << m;
    let dim = 1usize << (2 * m + t);
    let amp = C64::from(1.0 / (dm as f64).sqrt());
    let mut v = nalgebra::DVector::from_element(dim, C64::from(0.0));
    for j in 0..dm {
        // ref = j, message = j, traps = 0
        v[((j << m) | j) << t] = amp;
    }
    v
}

fn entangled_probe(m: usize, t: usize) -> DensityMatrix {
    let v = probe_vector(m, t);
    DensityMatrix::from_matrix(&v * v.adjoint()).expect("power-of-two probe")
}

/// Largest `1 - p_detect - p_harmless` over all non-identity Pauli attacks.
pub fn max_pauli_epsilon(m: usize, t: usize) -> Result<f64, AuthError> {
    let mut worst: f64 = 0.0;
    for p in PauliString::non_identity(m + t) {
        worst = worst.max(exact_detection_probability(m, t, &Attack::Pauli(p))?.epsilon());
    }
    Ok(worst)
}

/// Pauli-attack error of the trap code when the key Clifford is uniform:
/// the twirled attack is uniform over the `4^(m+t) - 1` non-identity Paulis,
/// of which `2^t (4^m - 1)` pass the traps while changing the message.
pub fn twirled_pauli_epsilon(m: usize, t: usize) -> f64 {
    let all = (1u64 << (2 * (m + t))) as f64 - 1.0;
    ((1u64 << t) as f64) * ((1u64 << (2 * m)) as f64 - 1.0) / all
}

/// Error constant used by composed bounds for a single-qubit code with `t` traps.
pub fn epsilon_q_sec(t: usize) -> f64 {
    static PINNED: OnceLock<f64> = OnceLock::new();
    if t == 1 {
        *PINNED.get_or_init(|| EPSILON_Q_SEC_1_1)
    } else {
        twirled_pauli_epsilon(1, t)
    }
}

/// Exact average over every key of the enumerated group: `(1/|G|) sum_C C rho C^dagger`
/// on the listed positions (one or two qubits).
pub fn key_average(rho: &DensityMatrix, positions: &[usize]) -> Result<DensityMatrix, AuthError> {
    let group = enumerate_clifford(positions.len())?;
    let mut acc = Mat::zeros(rho.dim(), rho.dim());
    for c in group {
        let mut r = rho.clone();
        r.conjugate_positions(c.matrix(), positions);
        acc += r.matrix();
    }
    acc /= C64::from(group.len() as f64);
    Ok(DensityMatrix::from_matrix(acc)?)
}

/// Key-averaged encoding `E_k(rho)` over the whole enumerated group.
pub fn key_averaged_encoding(rho: &DensityMatrix, t: usize) -> Result<DensityMatrix, AuthError> {
    let m = rho.n_qubits();
    if m + t > MAX_ENUMERATED_BLOCK {
        return Err(AuthError::SizeOverflow { m, t, limit: MAX_ENUMERATED_BLOCK });
    }
    let padded = rho.tensor(&DensityMatrix::basis(t, 0));
    let positions: Vec<usize> = (0..m + t).collect();
    key_average(&padded, &positions)
}

/// A multi-qubit message authenticated qubit by qubit: message qubit `j`
/// gets its own key on `(message[j], traps[j*t..(j+1)*t])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductKey {
    keys: Vec<AuthKey>,
}

/// Qubits of a [`ProductKey`]-encoded message.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedBlock {
    pub message: Vec<QubitId>,
    pub traps: Vec<QubitId>,
}

impl EncodedBlock {
    pub fn qubits(&self) -> Vec<QubitId> {
        self.message.iter().chain(&self.traps).copied().collect()
    }

    pub fn len(&self) -> usize {
        self.message.len() + self.traps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.message.is_empty()
    }

    pub fn traps_per_qubit(&self) -> usize {
        if self.message.is_empty() {
            0
        } else {
            self.traps.len() / self.message.len()
        }
    }

    /// `(message[j], its traps)` for every `j`.
    pub fn groups(&self) -> Vec<Vec<QubitId>> {
        let t = self.traps_per_qubit();
        self.message
            .iter()
            .enumerate()
            .map(|(j, &q)| std::iter::once(q).chain(self.traps[j * t..(j + 1) * t].iter().copied()).collect())
            .collect()
    }

    /// Sub-block holding the message qubits at `indices`.
    pub fn select(&self, indices: &[usize]) -> EncodedBlock {
        let t = self.traps_per_qubit();
        EncodedBlock {
            message: indices.iter().map(|&j| self.message[j]).collect(),
            traps: indices.iter().flat_map(|&j| self.traps[j * t..(j + 1) * t].iter().copied()).collect(),
        }
    }

    pub fn concat(parts: &[EncodedBlock]) -> EncodedBlock {
        EncodedBlock {
            message: parts.iter().flat_map(|b| b.message.iter().copied()).collect(),
            traps: parts.iter().flat_map(|b| b.traps.iter().copied()).collect(),
        }
    }
}

impl ProductKey {
    pub fn generate(m: usize, t: usize, coins: &mut (impl Coins + ?Sized)) -> Result<Self, AuthError> {
        let mode = mode_for(1, t);
        let keys = (0..m).map(|_| auth_keygen(1, t, coins, mode)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { keys })
    }

    pub fn from_keys(keys: Vec<AuthKey>) -> Result<Self, AuthError> {
        if let Some(k) = keys.iter().find(|k| k.m != 1 || k.t != keys[0].t) {
            return Err(AuthError::SizeMismatch { expected: 1, got: k.m });
        }
        Ok(Self { keys })
    }

    pub fn identity(m: usize, t: usize) -> Self {
        Self { keys: (0..m).map(|_| AuthKey::identity(1, t)).collect() }
    }

    pub fn keys(&self) -> &[AuthKey] {
        &self.keys
    }

    pub fn m(&self) -> usize {
        self.keys.len()
    }

    pub fn t(&self) -> usize {
        self.keys.first().map_or(0, |k| k.t)
    }

    pub fn concat(parts: &[ProductKey]) -> ProductKey {
        ProductKey { keys: parts.iter().flat_map(|k| k.keys.iter().cloned()).collect() }
    }

    pub fn select(&self, indices: &[usize]) -> ProductKey {
        ProductKey { keys: indices.iter().map(|&j| self.keys[j].clone()).collect() }
    }

    /// Applies every per-qubit Clifford (or its inverse) to an already trapped block.
    pub fn apply_cliffords(&self, s: &mut Substrate, block: &EncodedBlock, inverse: bool) -> Result<(), AuthError> {
        if block.message.len() != self.m() {
            return Err(AuthError::SizeMismatch { expected: self.m(), got: block.message.len() });
        }
        for (key, group) in self.keys.iter().zip(block.groups()) {
            let u = if inverse { key.clifford.matrix().adjoint() } else { key.clifford.matrix().clone() };
            s.apply_unitary(&u, &group)?;
        }
        Ok(())
    }

    /// Appends traps and encodes every qubit.
    pub fn encode(&self, s: &mut Substrate, message: &[QubitId]) -> Result<EncodedBlock, AuthError> {
        if message.len() != self.m() {
            return Err(AuthError::SizeMismatch { expected: self.m(), got: message.len() });
        }
        let mut traps = Vec::with_capacity(self.m() * self.t());
        for (key, &q) in self.keys.iter().zip(message) {
            let block = auth_encode(s, &[q], key)?;
            traps.extend_from_slice(&block[1..]);
        }
        Ok(EncodedBlock { message: message.to_vec(), traps })
    }

    /// Decodes every qubit; accepts only if every trap of every qubit reads 0.
    pub fn decode(
        &self,
        s: &mut Substrate,
        block: &EncodedBlock,
        coins: &mut (impl Coins + ?Sized),
    ) -> Result<AuthVerdict, AuthError> {
        self.apply_cliffords(s, block, true)?;
        let ok = s.measure_all_zero(&block.traps, coins)?;
        s.discard(&block.traps)?;
        if ok {
            Ok(AuthVerdict::Accepted { message: block.message.clone() })
        } else {
            s.discard(&block.message)?;
            Ok(AuthVerdict::Rejected)
        }
    }

    /// Dense unitary of the product code on the block ordering `message ++ traps`.
    pub fn dense(&self) -> Mat {
        let m = self.m();
        let t = self.t();
        let n = m * (1 + t);
        let mut u = Mat::identity(1 << n, 1 << n);
        for (j, key) in self.keys.iter().enumerate() {
            let pos: Vec<usize> = std::iter::once(j).chain((0..t).map(|k| m + j * t + k)).collect();
            u = crate::qsim::embed(key.clifford.matrix(), &pos, n) * u;
        }
        u
    }

    /// Short stable description for transcripts.
    pub fn describe(&self) -> String {
        self.keys
            .iter()
            .map(|k| k.clifford.index().map_or_else(|| "walk".to_string(), |i| i.to_string()))
            .collect::<Vec<_>>()
            .join(",")
    }
}
