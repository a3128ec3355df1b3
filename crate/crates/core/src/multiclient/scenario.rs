use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::qsim::{
    BasisState, Circuit, DensityMatrix, GateList, InitBlock, Owner, QsimError, QubitId, Substrate, MAX_QUBITS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("expected {expected} clients, got {got}")]
    ClientCount { expected: usize, got: usize },
    #[error("client {client} has {got} unitaries, more than m={m}")]
    TooManyRounds { client: usize, got: usize, m: usize },
    #[error("round {round}: client {client} routes labels {labels:?} more than once")]
    Overlap { round: usize, client: usize, labels: Vec<usize> },
    #[error("round {round}: client {client} leaves output labels {labels:?} unrouted")]
    DanglingOutput { round: usize, client: usize, labels: Vec<usize> },
    #[error("round {round}: label {label} of client {client} is outside its {width}-qubit output")]
    LabelOutOfRange { round: usize, client: usize, label: usize, width: usize },
    #[error("wiring round {round} is outside 1..{m}")]
    RoundOutOfRange { round: usize, m: usize },
    #[error("wiring names client {client}, outside 1..={n}")]
    UnknownClient { client: usize, n: usize },
    #[error("client {client} round {round}: unitary needs {needed} qubits, register has {width}")]
    GateOutOfRange { client: usize, round: usize, width: usize, needed: usize },
    #[error("client {client} round {round}: register has {got} qubits, expected {expected}")]
    WidthMismatch { client: usize, round: usize, expected: usize, got: usize },
    #[error("qubit budget exceeded: {requested} requested, at most {max}")]
    Budget { requested: usize, max: usize },
    #[error("scenario shape: {0}")]
    Shape(String),
}

/// The sets `T_{i->j}^(h)`: which round-`h` output labels of client `i` feed
/// client `j` in round `h+1`. Clients are numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Wiring {
    n: usize,
    m: usize,
    sets: BTreeMap<(usize, usize, usize), Vec<usize>>,
}

impl Wiring {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m, sets: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn set(&mut self, round: usize, from: usize, to: usize, labels: &[usize]) -> Result<(), ScenarioError> {
        if round == 0 || round >= self.m {
            return Err(ScenarioError::RoundOutOfRange { round, m: self.m });
        }
        for c in [from, to] {
            if c == 0 || c > self.n {
                return Err(ScenarioError::UnknownClient { client: c, n: self.n });
            }
        }
        let mut sorted = labels.to_vec();
        sorted.sort_unstable();
        let dups: Vec<usize> = sorted.windows(2).filter(|w| w[0] == w[1]).map(|w| w[0]).collect();
        if !dups.is_empty() {
            return Err(ScenarioError::Overlap { round, client: from, labels: dups });
        }
        if sorted.is_empty() {
            self.sets.remove(&(round, from, to));
        } else {
            self.sets.insert((round, from, to), sorted);
        }
        Ok(())
    }

    /// `T_{from->to}^(round)`, sorted.
    pub fn get(&self, round: usize, from: usize, to: usize) -> &[usize] {
        self.sets.get(&(round, from, to)).map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Non-empty entries as `(round, from, to, labels)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, &[usize])> {
        self.sets.iter().map(|(&(h, i, j), v)| (h, i, j, v.as_slice()))
    }

    /// Order of client `to`'s round-`round+1` register: senders ascending,
    /// labels ascending within a sender.
    pub fn incoming(&self, round: usize, to: usize) -> Vec<(usize, usize)> {
        (1..=self.n).flat_map(|i| self.get(round, i, to).iter().map(move |&l| (i, l))).collect()
    }

    pub fn incoming_width(&self, round: usize, to: usize) -> usize {
        (1..=self.n).map(|i| self.get(round, i, to).len()).sum()
    }

    /// Moves round-`round` output registers into round-`round+1` input registers.
    pub fn route(&self, round: usize, regs: &[Vec<QubitId>]) -> Vec<Vec<QubitId>> {
        (1..=self.n).map(|j| self.incoming(round, j).into_iter().map(|(i, l)| regs[i - 1][l]).collect()).collect()
    }

    /// Register widths implied by the round-1 widths and the wiring:
    /// `widths[i][h]` for client `i+1`, round `h+1`.
    pub fn round_widths(&self, first: &[usize]) -> Vec<Vec<usize>> {
        let mut w = vec![vec![0; self.m]; self.n];
        for (i, &f) in first.iter().enumerate() {
            w[i][0] = f;
        }
        for (j, row) in w.iter_mut().enumerate() {
            for (h, cell) in row.iter_mut().enumerate().skip(1) {
                *cell = self.incoming_width(h, j + 1);
            }
        }
        w
    }

    /// Checks the partition property of every round against `widths`.
    pub fn check_partition(&self, widths: &[Vec<usize>]) -> Result<(), ScenarioError> {
        for (&(h, i, _), labels) in &self.sets {
            let width = widths[i - 1][h - 1];
            if let Some(&label) = labels.iter().find(|&&l| l >= width) {
                return Err(ScenarioError::LabelOutOfRange { round: h, client: i, label, width });
            }
        }
        for h in 1..self.m {
            for i in 1..=self.n {
                let width = widths[i - 1][h - 1];
                let mut count = vec![0usize; width];
                for j in 1..=self.n {
                    for &l in self.get(h, i, j) {
                        count[l] += 1;
                    }
                }
                let over: Vec<usize> = (0..width).filter(|&l| count[l] > 1).collect();
                if !over.is_empty() {
                    return Err(ScenarioError::Overlap { round: h, client: i, labels: over });
                }
                let missing: Vec<usize> = (0..width).filter(|&l| count[l] == 0).collect();
                if !missing.is_empty() {
                    return Err(ScenarioError::DanglingOutput { round: h, client: i, labels: missing });
                }
            }
        }
        Ok(())
    }

    /// Checks that per-client round circuits fit the wiring, given round-1 register widths.
    pub fn check_widths(&self, circuits: &[Vec<Circuit>], first: &[usize]) -> Result<(), ScenarioError> {
        if circuits.len() != self.n || first.len() != self.n {
            return Err(ScenarioError::ClientCount { expected: self.n, got: circuits.len() });
        }
        let widths = self.round_widths(first);
        self.check_partition(&widths)?;
        for (i, rounds) in circuits.iter().enumerate() {
            if rounds.len() != self.m {
                return Err(ScenarioError::TooManyRounds { client: i + 1, got: rounds.len(), m: self.m });
            }
            for (h, c) in rounds.iter().enumerate() {
                if c.width() != widths[i][h] {
                    return Err(ScenarioError::WidthMismatch {
                        client: i + 1,
                        round: h + 1,
                        expected: widths[i][h],
                        got: c.width(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Direct evaluation of the wired global circuit. Returns each client's final register.
    pub fn evaluate(
        &self,
        s: &mut Substrate,
        circuits: &[Vec<Circuit>],
        inputs: Vec<Vec<QubitId>>,
    ) -> Result<Vec<Vec<QubitId>>, QsimError> {
        let mut regs = inputs;
        for h in 0..self.m {
            for (reg, rounds) in regs.iter().zip(circuits) {
                rounds[h].apply(s, reg)?;
            }
            if h + 1 < self.m {
                regs = self.route(h + 1, &regs);
            }
        }
        Ok(regs)
    }

    /// Width of every client's final register.
    pub fn final_widths(&self, circuits: &[Vec<Circuit>]) -> Vec<usize> {
        circuits.iter().map(|rounds| rounds.last().map_or(0, Circuit::width)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClientSpec {
    pub input: Vec<BasisState>,
    /// `U_i^(1..m)`; shorter lists are padded with identities on validation.
    pub unitaries: Vec<GateList>,
}

impl ClientSpec {
    pub fn new(input: Vec<BasisState>, unitaries: Vec<GateList>) -> Self {
        Self { input, unitaries }
    }
}

/// Which protocol family a scenario is written for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// General `n`-client, `m`-round wiring (Protocols 1 and 3).
    Wired,
    /// Two clients with one unitary each; client 2 has no input and
    /// receives all of client 1's output (Protocols 2 and 4).
    Chain,
}

/// A validated multi-client computation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    clients: Vec<ClientSpec>,
    wiring: Wiring,
    circuits: Vec<Vec<Circuit>>,
    shape: Shape,
}

impl Scenario {
    /// Validates and pads a wired scenario.
    pub fn new(mut clients: Vec<ClientSpec>, wiring: Wiring) -> Result<Self, ScenarioError> {
        let (n, m) = (wiring.n(), wiring.m());
        if clients.len() != n || n == 0 || m == 0 {
            return Err(ScenarioError::ClientCount { expected: n, got: clients.len() });
        }
        let total: usize = clients.iter().map(|c| c.input.len()).sum();
        if total > MAX_QUBITS {
            return Err(ScenarioError::Budget { requested: total, max: MAX_QUBITS });
        }
        for (i, c) in clients.iter_mut().enumerate() {
            if c.unitaries.len() > m {
                return Err(ScenarioError::TooManyRounds { client: i + 1, got: c.unitaries.len(), m });
            }
            c.unitaries.resize(m, GateList::identity());
        }
        let first: Vec<usize> = clients.iter().map(|c| c.input.len()).collect();
        let widths = wiring.round_widths(&first);
        wiring.check_partition(&widths)?;
        let mut circuits = Vec::with_capacity(n);
        for (i, c) in clients.iter().enumerate() {
            let mut rounds = Vec::with_capacity(m);
            for (h, g) in c.unitaries.iter().enumerate() {
                let width = widths[i][h];
                if g.min_width() > width {
                    return Err(ScenarioError::GateOutOfRange {
                        client: i + 1,
                        round: h + 1,
                        width,
                        needed: g.min_width(),
                    });
                }
                rounds.push(Circuit::from_gates(width, g.clone()).expect("width checked"));
            }
            circuits.push(rounds);
        }
        Ok(Self { clients, wiring, circuits, shape: Shape::Wired })
    }

    /// The two-client chain `U_{c2} U_{c1} rho_{c1}`.
    pub fn chain(input: Vec<BasisState>, u1: GateList, u2: GateList) -> Result<Self, ScenarioError> {
        let w = input.len();
        let mut s = Self::chain_as_wired(input, u1, u2)?;
        s.shape = Shape::Chain;
        if w == 0 {
            return Err(ScenarioError::Shape("client 1 needs at least one input qubit".into()));
        }
        Ok(s)
    }

    fn chain_as_wired(input: Vec<BasisState>, u1: GateList, u2: GateList) -> Result<Self, ScenarioError> {
        let w = input.len();
        let mut wiring = Wiring::new(2, 2);
        wiring.set(1, 1, 2, &(0..w).collect::<Vec<_>>())?;
        let clients = vec![
            ClientSpec::new(input, vec![u1, GateList::identity()]),
            ClientSpec::new(Vec::new(), vec![GateList::identity(), u2]),
        ];
        Self::new(clients, wiring)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Number of clients.
    pub fn n(&self) -> usize {
        self.wiring.n()
    }

    /// Number of rounds in the protocol's own terms: a chain has one unitary per client.
    pub fn m(&self) -> usize {
        match self.shape {
            Shape::Wired => self.wiring.m(),
            Shape::Chain => 1,
        }
    }

    pub fn clients(&self) -> &[ClientSpec] {
        &self.clients
    }

    /// Wiring of the general form; a chain is stored as its two-round equivalent.
    pub fn wiring(&self) -> &Wiring {
        &self.wiring
    }

    /// `circuits()[i][h]` is `U_{i+1}^(h+1)` on its register width.
    pub fn circuits(&self) -> &[Vec<Circuit>] {
        &self.circuits
    }

    pub fn total_qubits(&self) -> usize {
        self.clients.iter().map(|c| c.input.len()).sum()
    }

    /// Allocates every client's input, owned by that client.
    pub fn prepare(&self) -> Result<(Substrate, Vec<Vec<QubitId>>), QsimError> {
        let mut s = Substrate::new();
        let mut regs = Vec::with_capacity(self.n());
        for (i, c) in self.clients.iter().enumerate() {
            if c.input.is_empty() {
                regs.push(Vec::new());
                continue;
            }
            let blocks: Vec<InitBlock> = c.input.iter().map(|&b| InitBlock::Pure(b, Owner::Client(i + 1))).collect();
            let (sub, handles) = Substrate::init_state(&blocks)?;
            let ids = s.allocate(sub.rho(), Owner::Client(i + 1))?;
            debug_assert_eq!(ids.len(), handles.len());
            regs.push(ids);
        }
        Ok((s, regs))
    }

    /// Direct dense evaluation: the joint final state of all clients, client order.
    pub fn expected_joint(&self) -> Result<DensityMatrix, QsimError> {
        let (mut s, regs) = self.prepare()?;
        let finals = self.wiring.evaluate(&mut s, &self.circuits, regs)?;
        s.partial_trace(&finals.concat())
    }

    /// Direct dense evaluation, one reduced state per client with a non-empty final register.
    pub fn expected_outputs(&self) -> Result<Vec<Option<DensityMatrix>>, QsimError> {
        let (mut s, regs) = self.prepare()?;
        let finals = self.wiring.evaluate(&mut s, &self.circuits, regs)?;
        finals.iter().map(|r| if r.is_empty() { Ok(None) } else { s.partial_trace(r).map(Some) }).collect()
    }

    pub fn final_widths(&self) -> Vec<usize> {
        self.wiring.final_widths(&self.circuits)
    }

    /// Everything the server is allowed to learn.
    pub fn size_profile(&self) -> SizeProfile {
        SizeProfile {
            n: self.n(),
            m: self.wiring.m(),
            widths: self.circuits.iter().map(|r| r.iter().map(Circuit::width).collect()).collect(),
            gate_counts: self.circuits.iter().map(|r| r.iter().map(Circuit::gate_count).collect()).collect(),
            wires: self.wiring.entries().map(|(h, i, j, l)| ((h, i, j), l.len())).collect(),
        }
    }
}

/// Per-round sizes of a scenario: register widths, gate counts and wire counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeProfile {
    pub n: usize,
    pub m: usize,
    pub widths: Vec<Vec<usize>>,
    pub gate_counts: Vec<Vec<usize>>,
    pub wires: BTreeMap<(usize, usize, usize), usize>,
}

impl fmt::Display for SizeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} m={} widths={:?} gates={:?} wires={:?}",
            self.n, self.m, self.widths, self.gate_counts, self.wires
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{trace_distance, GateKind};

    fn gl(s: &str) -> GateList {
        s.parse().unwrap()
    }

    /// Three clients, two rounds, every client sends one qubit to its right neighbour.
    pub(crate) fn figure2() -> Scenario {
        let mut w = Wiring::new(3, 2);
        w.set(1, 1, 1, &[0]).unwrap();
        w.set(1, 1, 2, &[1]).unwrap();
        w.set(1, 2, 2, &[0]).unwrap();
        w.set(1, 2, 3, &[1]).unwrap();
        w.set(1, 3, 3, &[0]).unwrap();
        w.set(1, 3, 1, &[1]).unwrap();
        let c = |g: &str| ClientSpec::new(vec![BasisState::Zero, BasisState::Zero], vec![gl(g), GateList::identity()]);
        Scenario::new(vec![c("X 0"), c("X 1"), c("H 0")], w).unwrap()
    }

    #[test]
    fn figure2_shape_is_accepted() {
        let s = figure2();
        assert_eq!(s.n(), 3);
        assert_eq!(s.m(), 2);
        assert_eq!(s.wiring().incoming(1, 1), vec![(1, 0), (3, 1)]);
        assert_eq!(s.size_profile().widths, vec![vec![2, 2]; 3]);
    }

    #[test]
    fn identity_wiring_permutes_inputs() {
        let s = figure2();
        let out = s.expected_outputs().unwrap();
        // Client 1 ends with (own q0 = |1>, client 3's q1 = |0>).
        let one_zero = DensityMatrix::basis(2, 0b10);
        assert!(trace_distance(out[0].as_ref().unwrap(), &one_zero).unwrap() < 1e-9);
        // Client 2 ends with (client 1's q1 = |0>, own q0 = |0>).
        assert!(trace_distance(out[1].as_ref().unwrap(), &DensityMatrix::basis(2, 0)).unwrap() < 1e-9);
    }

    #[test]
    fn overlapping_labels_are_rejected() {
        let mut w = Wiring::new(2, 2);
        w.set(1, 1, 1, &[0]).unwrap();
        w.set(1, 1, 2, &[0]).unwrap();
        let c = ClientSpec::new(vec![BasisState::Zero], vec![]);
        let err = Scenario::new(vec![c.clone(), c], w).unwrap_err();
        assert_eq!(err, ScenarioError::Overlap { round: 1, client: 1, labels: vec![0] });
    }

    #[test]
    fn dangling_output_is_rejected() {
        let mut w = Wiring::new(2, 2);
        w.set(1, 1, 2, &[0]).unwrap();
        w.set(1, 2, 2, &[0]).unwrap();
        let c = ClientSpec::new(vec![BasisState::Zero, BasisState::One], vec![]);
        let err = Scenario::new(vec![c.clone(), ClientSpec::new(vec![BasisState::Zero], vec![])], w).unwrap_err();
        assert_eq!(err, ScenarioError::DanglingOutput { round: 1, client: 1, labels: vec![1] });
    }

    #[test]
    fn single_round_needs_no_wiring() {
        let c = ClientSpec::new(vec![BasisState::Zero], vec![gl("X 0")]);
        let s = Scenario::new(vec![c.clone(), c], Wiring::new(2, 1)).unwrap();
        assert!(s.wiring().is_empty());
        assert!(matches!(Wiring::new(2, 1).set(1, 1, 2, &[0]), Err(ScenarioError::RoundOutOfRange { .. })));
    }

    #[test]
    fn budget_and_gate_range() {
        let big = ClientSpec::new(vec![BasisState::Zero; 7], vec![]);
        let err = Scenario::new(vec![big.clone(), big], Wiring::new(2, 1)).unwrap_err();
        assert_eq!(err, ScenarioError::Budget { requested: 14, max: MAX_QUBITS });
        let wide = ClientSpec::new(vec![BasisState::Zero], vec![GateList::single(GateKind::Cnot, &[0, 1]).unwrap()]);
        assert!(matches!(Scenario::new(vec![wide], Wiring::new(1, 1)), Err(ScenarioError::GateOutOfRange { .. })));
    }

    #[test]
    fn padding_and_chain() {
        let c = ClientSpec::new(vec![BasisState::Zero], vec![gl("X 0")]);
        let mut w = Wiring::new(1, 3);
        w.set(1, 1, 1, &[0]).unwrap();
        w.set(2, 1, 1, &[0]).unwrap();
        let s = Scenario::new(vec![c], w).unwrap();
        assert_eq!(s.clients()[0].unitaries.len(), 3);
        let chain = Scenario::chain(vec![BasisState::Zero], gl("H 0"), gl("S 0")).unwrap();
        assert_eq!((chain.n(), chain.m()), (2, 1));
        let out = chain.expected_outputs().unwrap();
        assert!(out[0].is_none());
        let mut expected = DensityMatrix::basis(1, 0);
        expected = expected.conjugated(&(GateKind::S.matrix() * GateKind::H.matrix()));
        assert!(trace_distance(out[1].as_ref().unwrap(), &expected).unwrap() < 1e-9);
    }
}
