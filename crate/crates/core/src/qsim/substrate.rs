use std::fmt;

use super::matrix::{DensityMatrix, Mat, C64, ZERO};
use super::{tol, Coins, GateList, PauliString, QsimError, MAX_QUBITS};

/// Stable handle of a qubit inside a [`Substrate`]. Handles are never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitId(pub u32);

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// Who currently holds a qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    Client(usize),
    Server,
    /// In flight on a channel.
    Channel,
    /// Held by a distinguisher or test harness as a purifying reference.
    Reference,
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Client(i) => write!(f, "C{i}"),
            Owner::Server => write!(f, "S"),
            Owner::Channel => write!(f, "channel"),
            Owner::Reference => write!(f, "ref"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisState {
    Zero,
    One,
    Plus,
    Minus,
}

impl BasisState {
    pub const ALL: [BasisState; 4] = [BasisState::Zero, BasisState::One, BasisState::Plus, BasisState::Minus];

    pub fn density(self) -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let amps = match self {
            BasisState::Zero => [C64::from(1.0), ZERO],
            BasisState::One => [ZERO, C64::from(1.0)],
            BasisState::Plus => [C64::from(s), C64::from(s)],
            BasisState::Minus => [C64::from(s), C64::from(-s)],
        };
        DensityMatrix::from_pure(&amps).expect("basis states are normalized")
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token.trim_matches(|c| c == '|' || c == '>') {
            "0" => Some(BasisState::Zero),
            "1" => Some(BasisState::One),
            "+" => Some(BasisState::Plus),
            "-" => Some(BasisState::Minus),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BasisState::Zero => "0",
            BasisState::One => "1",
            BasisState::Plus => "+",
            BasisState::Minus => "-",
        }
    }
}

/// One factor of an initial product state.
#[derive(Debug, Clone, PartialEq)]
pub enum InitBlock {
    Pure(BasisState, Owner),
    Explicit(DensityMatrix, Owner),
}

/// One global density matrix plus the ledger of who owns each tensor factor.
#[derive(Debug, Clone)]
pub struct Substrate {
    rho: DensityMatrix,
    ledger: Vec<(QubitId, Owner)>,
    next_id: u32,
}

impl Default for Substrate {
    fn default() -> Self {
        Self::new()
    }
}

impl Substrate {
    /// Zero qubits.
    pub fn new() -> Self {
        Self { rho: DensityMatrix::scalar_one(), ledger: Vec::new(), next_id: 0 }
    }

    /// Tensor product of the given blocks. Returns the handles of each block.
    pub fn init_state(spec: &[InitBlock]) -> Result<(Substrate, Vec<Vec<QubitId>>), QsimError> {
        let total: usize = spec
            .iter()
            .map(|b| match b {
                InitBlock::Pure(..) => 1,
                InitBlock::Explicit(d, _) => d.n_qubits(),
            })
            .sum();
        if total > MAX_QUBITS {
            return Err(QsimError::QubitBudget { requested: total, max: MAX_QUBITS });
        }
        let mut s = Substrate::new();
        let mut handles = Vec::with_capacity(spec.len());
        for block in spec {
            let ids = match block {
                InitBlock::Pure(b, owner) => s.allocate(&b.density(), *owner)?,
                InitBlock::Explicit(d, owner) => {
                    if (d.trace() - 1.0).abs() > tol::STRUCTURAL {
                        return Err(QsimError::NotNormalized { trace: d.trace() });
                    }
                    s.allocate(d, *owner)?
                }
            };
            handles.push(ids);
        }
        Ok((s, handles))
    }

    pub fn n_qubits(&self) -> usize {
        self.ledger.len()
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn ledger(&self) -> &[(QubitId, Owner)] {
        &self.ledger
    }

    pub fn qubits(&self) -> Vec<QubitId> {
        self.ledger.iter().map(|(q, _)| *q).collect()
    }

    /// Appends `block` as new trailing tensor factors.
    pub fn allocate(&mut self, block: &DensityMatrix, owner: Owner) -> Result<Vec<QubitId>, QsimError> {
        let requested = self.n_qubits() + block.n_qubits();
        if requested > MAX_QUBITS {
            return Err(QsimError::QubitBudget { requested, max: MAX_QUBITS });
        }
        self.rho = self.rho.tensor(block);
        let ids: Vec<QubitId> = (0..block.n_qubits())
            .map(|_| {
                let id = QubitId(self.next_id);
                self.next_id += 1;
                id
            })
            .collect();
        self.ledger.extend(ids.iter().map(|&q| (q, owner)));
        Ok(ids)
    }

    /// Appends `count` fresh |0> qubits.
    pub fn allocate_zeros(&mut self, count: usize, owner: Owner) -> Result<Vec<QubitId>, QsimError> {
        self.allocate(&DensityMatrix::basis(count, 0), owner)
    }

    pub fn position(&self, q: QubitId) -> Result<usize, QsimError> {
        self.ledger.iter().position(|(id, _)| *id == q).ok_or(QsimError::UnknownQubit(q))
    }

    fn positions(&self, qs: &[QubitId]) -> Result<Vec<usize>, QsimError> {
        let pos = qs.iter().map(|&q| self.position(q)).collect::<Result<Vec<_>, _>>()?;
        for (i, p) in pos.iter().enumerate() {
            if pos[..i].contains(p) {
                return Err(QsimError::DuplicateQubit(qs[i]));
            }
        }
        Ok(pos)
    }

    pub fn owner(&self, q: QubitId) -> Result<Owner, QsimError> {
        Ok(self.ledger[self.position(q)?].1)
    }

    pub fn owned_by(&self, owner: Owner) -> Vec<QubitId> {
        self.ledger.iter().filter(|(_, o)| *o == owner).map(|(q, _)| *q).collect()
    }

    pub fn transfer(&mut self, qs: &[QubitId], to: Owner) -> Result<(), QsimError> {
        for p in self.positions(qs)? {
            self.ledger[p].1 = to;
        }
        Ok(())
    }

    /// `rho <- U rho U^dagger` with `U` acting on `targets` (first target most significant).
    pub fn apply_unitary(&mut self, u: &Mat, targets: &[QubitId]) -> Result<(), QsimError> {
        if u.nrows() != 1 << targets.len() || u.ncols() != u.nrows() {
            return Err(QsimError::LengthMismatch { expected: 1 << targets.len(), got: u.nrows() });
        }
        if targets.is_empty() {
            return Ok(());
        }
        let pos = self.positions(targets)?;
        self.rho.conjugate_positions(u, &pos);
        Ok(())
    }

    /// Applies the gate list with local index `k` meaning `register[k]`.
    pub fn apply_gates(&mut self, g: &GateList, register: &[QubitId]) -> Result<(), QsimError> {
        if g.min_width() > register.len() {
            return Err(QsimError::TargetOutOfRange { index: g.min_width() - 1, width: register.len() });
        }
        let pos = self.positions(register)?;
        for gate in g.gates() {
            let gp: Vec<usize> = gate.targets().iter().map(|&t| pos[t]).collect();
            self.rho.conjugate_positions(&gate.kind().matrix(), &gp);
        }
        Ok(())
    }

    /// Applies a Pauli string; its phase is irrelevant for density matrices.
    pub fn apply_pauli(&mut self, p: &PauliString, targets: &[QubitId]) -> Result<(), QsimError> {
        if p.len() != targets.len() {
            return Err(QsimError::LengthMismatch { expected: p.len(), got: targets.len() });
        }
        let pos = self.positions(targets)?;
        for (letter, &position) in p.letters().iter().zip(&pos) {
            if *letter != super::Pauli::I {
                self.rho.conjugate_positions(&letter.matrix(), &[position]);
            }
        }
        Ok(())
    }

    /// Reduced state over `keep`, in the order given.
    pub fn partial_trace(&self, keep: &[QubitId]) -> Result<DensityMatrix, QsimError> {
        let pos = self.positions(keep)?;
        Ok(self.rho.partial_trace(&pos))
    }

    /// Traces `qs` out of the substrate and forgets their handles.
    pub fn discard(&mut self, qs: &[QubitId]) -> Result<(), QsimError> {
        let drop = self.positions(qs)?;
        let keep: Vec<usize> = (0..self.n_qubits()).filter(|p| !drop.contains(p)).collect();
        self.rho = self.rho.partial_trace(&keep);
        self.ledger = keep.iter().map(|&p| self.ledger[p]).collect();
        Ok(())
    }

    fn mask(&self, pos: &[usize]) -> usize {
        let n = self.n_qubits();
        pos.iter().map(|&p| 1usize << (n - 1 - p)).sum()
    }

    /// Keeps only the entries `(r, c)` with `keep(r) && keep(c)` and renormalizes.
    fn project(&mut self, keep: impl Fn(usize) -> bool, prob: f64) {
        let m = self.rho.matrix_mut();
        let dim = m.nrows();
        let scale = C64::from(1.0 / prob);
        for c in 0..dim {
            for r in 0..dim {
                if keep(r) && keep(c) {
                    m[(r, c)] *= scale;
                } else {
                    m[(r, c)] = ZERO;
                }
            }
        }
    }

    fn probability_where(&self, pred: impl Fn(usize) -> bool) -> f64 {
        let m = self.rho.matrix();
        (0..m.nrows()).filter(|&i| pred(i)).map(|i| m[(i, i)].re).sum::<f64>().clamp(0.0, 1.0)
    }

    /// Born-rule measurement of each target in the computational basis. The
    /// qubits stay in the substrate in their post-measurement state.
    pub fn measure_computational(
        &mut self,
        targets: &[QubitId],
        coins: &mut (impl Coins + ?Sized),
    ) -> Result<Vec<u8>, QsimError> {
        let pos = self.positions(targets)?;
        let mut out = Vec::with_capacity(pos.len());
        for p in pos {
            let bit = self.mask(&[p]);
            let p1 = self.probability_where(|i| i & bit != 0);
            let probs = [1.0 - p1, p1];
            let outcome = coins.weighted(&probs);
            if probs[outcome] < tol::BRANCH {
                return Err(QsimError::ZeroProbabilityBranch);
            }
            let want = if outcome == 1 { bit } else { 0 };
            self.project(|i| i & bit == want, probs[outcome]);
            out.push(outcome as u8);
        }
        Ok(out)
    }

    /// Two-outcome measurement {all targets |0>, anything else}. Returns
    /// `true` for the all-zero outcome.
    pub fn measure_all_zero(
        &mut self,
        targets: &[QubitId],
        coins: &mut (impl Coins + ?Sized),
    ) -> Result<bool, QsimError> {
        let mask = self.mask(&self.positions(targets)?);
        let p0 = self.probability_where(|i| i & mask == 0);
        let probs = [p0, 1.0 - p0];
        let outcome = coins.weighted(&probs);
        if probs[outcome] < tol::BRANCH {
            return Err(QsimError::ZeroProbabilityBranch);
        }
        if outcome == 0 {
            self.project(|i| i & mask == 0, p0);
        } else {
            self.project(|i| i & mask != 0, 1.0 - p0);
        }
        Ok(outcome == 0)
    }

    /// Probability that all `targets` read 0, without disturbing the state.
    pub fn all_zero_probability(&self, targets: &[QubitId]) -> Result<f64, QsimError> {
        let mask = self.mask(&self.positions(targets)?);
        Ok(self.probability_where(|i| i & mask == 0))
    }

    /// Full invariant check: density-matrix validity and a consistent ledger.
    pub fn check_invariants(&self) -> Result<(), QsimError> {
        self.rho.validate()?;
        if self.rho.n_qubits() != self.ledger.len() {
            return Err(QsimError::InvalidState("ledger and matrix disagree on qubit count".into()));
        }
        let mut ids: Vec<QubitId> = self.qubits();
        ids.sort();
        ids.dedup();
        if ids.len() != self.ledger.len() {
            return Err(QsimError::InvalidState("duplicate handle in ledger".into()));
        }
        Ok(())
    }
}
