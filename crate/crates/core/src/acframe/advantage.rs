use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::compose::run_with;
use super::{FrameError, InterfaceId, Payload, System, World};
use crate::qsim::{tol, trace_norm, Coins, DensityMatrix, InitBlock, Mat, PauliString, QubitId, Substrate, C64};

/// Seed of trial `index` under `master` (splitmix64 finalizer applied to
/// `master + (index + 1) * 0x9E3779B97F4A7C15`).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
struct Choice {
    chosen: usize,
    probs: Vec<f64>,
}

/// Coin source that walks every branch of a run, odometer style, and
/// tracks the probability of the branch being replayed.
#[derive(Debug, Clone)]
pub struct Branching {
    script: Vec<Choice>,
    pos: usize,
    weight: f64,
}

impl Default for Branching {
    fn default() -> Self {
        Self::new()
    }
}

impl Branching {
    pub fn new() -> Self {
        Self { script: Vec::new(), pos: 0, weight: 1.0 }
    }

    /// Probability of the branch taken by the current run.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Moves to the next branch. Returns `false` once every branch has been visited.
    pub fn advance(&mut self) -> bool {
        self.script.truncate(self.pos);
        self.pos = 0;
        self.weight = 1.0;
        while let Some(last) = self.script.last_mut() {
            if let Some(next) = (last.chosen + 1..last.probs.len()).find(|&i| last.probs[i] > tol::BRANCH) {
                last.chosen = next;
                return true;
            }
            self.script.pop();
        }
        false
    }

    fn choose(&mut self, probs: Vec<f64>) -> usize {
        if self.pos < self.script.len() {
            let c = &self.script[self.pos];
            self.pos += 1;
            self.weight *= c.probs[c.chosen];
            return c.chosen;
        }
        let first = probs.iter().position(|&p| p > tol::BRANCH).unwrap_or(0);
        self.weight *= probs[first];
        self.script.push(Choice { chosen: first, probs });
        self.pos += 1;
        first
    }
}

impl Coins for Branching {
    fn uniform(&mut self, n: usize) -> usize {
        self.choose(vec![1.0 / n as f64; n])
    }

    fn weighted(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        self.choose(weights.iter().map(|w| w.max(0.0) / total).collect())
    }
}

/// Fixed reaction of the distinguisher to an output on an adversarial interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Responder {
    /// Sends qubits straight back.
    Forward,
    Pauli(PauliString),
    Unitary(Mat),
    /// Throws the qubits away and sends back as many fresh |0>.
    ReplaceZero,
    /// Answers any output with a control bit.
    Control(bool),
}

impl Responder {
    fn respond(&self, world: &mut World<'_>, payload: &Payload) -> Result<Option<Payload>, FrameError> {
        let q = payload.qubits().to_vec();
        let reply = match self {
            Responder::Control(b) => return Ok(Some(Payload::Control(*b))),
            _ if !matches!(payload, Payload::Qubits(_)) => return Ok(None),
            Responder::Forward => q,
            Responder::Pauli(p) => {
                world.substrate.apply_pauli(p, &q)?;
                q
            }
            Responder::Unitary(u) => {
                world.substrate.apply_unitary(u, &q)?;
                q
            }
            Responder::ReplaceZero => {
                world.substrate.discard(&q)?;
                world.substrate.allocate_zeros(q.len(), crate::qsim::Owner::Channel)?
            }
        };
        Ok(Some(Payload::Qubits(reply)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistinguisherInput {
    /// Qubits `(register, offset)` of the prepared registers.
    Qubits(Vec<(usize, usize)>),
    Classical(Payload),
}

/// A non-adaptive distinguisher: what it prepares, what it feeds in, what
/// it keeps as reference, and how it answers adversarial interfaces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Strategy {
    pub prepare: Vec<InitBlock>,
    pub inputs: Vec<(InterfaceId, DistinguisherInput)>,
    pub keep: Vec<(usize, usize)>,
    pub responders: Vec<(InterfaceId, Responder)>,
}

impl Strategy {
    pub fn new(prepare: Vec<InitBlock>) -> Self {
        Self { prepare, ..Self::default() }
    }

    pub fn input_qubits(mut self, iface: InterfaceId, qubits: Vec<(usize, usize)>) -> Self {
        self.inputs.push((iface, DistinguisherInput::Qubits(qubits)));
        self
    }

    pub fn input(mut self, iface: InterfaceId, payload: Payload) -> Self {
        self.inputs.push((iface, DistinguisherInput::Classical(payload)));
        self
    }

    pub fn keep(mut self, qubits: Vec<(usize, usize)>) -> Self {
        self.keep.extend(qubits);
        self
    }

    pub fn respond(mut self, iface: InterfaceId, r: Responder) -> Self {
        self.responders.push((iface, r));
        self
    }
}

pub type Factory<'a> = &'a dyn Fn() -> Result<Box<dyn System>, FrameError>;

/// One run: classical label of every output plus the final quantum state of
/// all surviving output and reference qubits.
fn run_branch(
    factory: Factory<'_>,
    strategy: &Strategy,
    coins: &mut dyn Coins,
) -> Result<(String, Substrate, Vec<QubitId>), FrameError> {
    let (substrate, regs) = Substrate::init_state(&strategy.prepare)?;
    let mut world = World::new(substrate, coins);
    let mut sys = factory()?;
    let resolve = |list: &[(usize, usize)]| list.iter().map(|&(r, k)| regs[r][k]).collect::<Vec<_>>();
    let inputs = strategy
        .inputs
        .iter()
        .map(|(iface, inp)| {
            let p = match inp {
                DistinguisherInput::Qubits(list) => Payload::Qubits(resolve(list)),
                DistinguisherInput::Classical(p) => p.clone(),
            };
            (iface.clone(), p)
        })
        .collect();
    let outputs = run_with(sys.as_mut(), &mut world, inputs, &mut |w, port, payload| match strategy
        .responders
        .iter()
        .find(|(i, _)| i == port)
    {
        Some((_, r)) => r.respond(w, payload),
        None => Ok(None),
    })?;
    let (substrate, _) = world.into_parts();
    let mut label = Vec::new();
    let mut quantum: Vec<QubitId> = Vec::new();
    for e in &outputs {
        label.push(format!("{}={}", e.src, e.payload.classical_label()));
        for &q in e.payload.qubits() {
            if !quantum.contains(&q) && substrate.position(q).is_ok() {
                quantum.push(q);
            }
        }
    }
    for q in resolve(&strategy.keep) {
        if substrate.position(q).is_ok() && !quantum.contains(&q) {
            quantum.push(q);
        }
    }
    Ok((label.join(";"), substrate, quantum))
}

/// The distinguisher's classical-quantum view of a system: for each
/// classical label, the unnormalized quantum state weighted by its probability.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JointOutput {
    pub branches: BTreeMap<String, Mat>,
}

impl JointOutput {
    pub fn total_weight(&self) -> f64 {
        self.branches.values().map(|m| m.trace().re).sum()
    }

    /// `1/2 sum_label || A_label - B_label ||_1`; labels present on one side
    /// only count with their full weight.
    pub fn distance(&self, other: &JointOutput) -> f64 {
        let mut total = 0.0;
        for (label, a) in &self.branches {
            total += match other.branches.get(label) {
                Some(b) if b.nrows() == a.nrows() => trace_norm(&(a - b)),
                Some(b) => trace_norm(a) + trace_norm(b),
                None => trace_norm(a),
            };
        }
        for (label, b) in &other.branches {
            if !self.branches.contains_key(label) {
                total += trace_norm(b);
            }
        }
        0.5 * total
    }
}

/// Exact joint output of `factory` under `strategy`, summing over every coin branch.
pub fn joint_output(factory: Factory<'_>, strategy: &Strategy) -> Result<JointOutput, FrameError> {
    let mut branching = Branching::new();
    let mut out = JointOutput::default();
    loop {
        let (label, substrate, quantum) = run_branch(factory, strategy, &mut branching)?;
        let w = branching.weight();
        if w > tol::BRANCH {
            let rho =
                if quantum.is_empty() { DensityMatrix::scalar_one() } else { substrate.partial_trace(&quantum)? };
            let key = format!("{label}#{}", rho.n_qubits());
            let entry = out.branches.entry(key).or_insert_with(|| Mat::zeros(rho.dim(), rho.dim()));
            *entry += rho.matrix() * C64::from(w);
        }
        if !branching.advance() {
            break;
        }
    }
    Ok(out)
}

fn signature(factory: Factory<'_>) -> Result<Vec<InterfaceId>, FrameError> {
    let mut v = factory()?.interfaces();
    v.sort();
    Ok(v)
}

/// Distinguishing advantage of a fixed non-adaptive strategy: the trace
/// distance of the two joint outputs, ERR counting as orthogonal to everything.
pub fn exact_advantage(a: Factory<'_>, b: Factory<'_>, strategy: &Strategy) -> Result<f64, FrameError> {
    if signature(a)? != signature(b)? {
        return Err(FrameError::SignatureMismatch);
    }
    Ok(joint_output(a, strategy)?.distance(&joint_output(b, strategy)?))
}

fn sample_label(factory: Factory<'_>, strategy: &Strategy, seed: u64) -> Result<String, FrameError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (label, mut substrate, quantum) = run_branch(factory, strategy, &mut rng)?;
    let bits = substrate.measure_computational(&quantum, &mut rng)?;
    Ok(format!("{label}|{}", bits.iter().map(|b| b.to_string()).collect::<String>()))
}

/// Sampled advantage of a best-response guesser: the first half of the
/// trials trains a label-to-system table, the second half scores it.
/// Quantum outputs are read in the computational basis. Returns the
/// estimate and its 95% half-width.
pub fn mc_advantage(
    a: Factory<'_>,
    b: Factory<'_>,
    strategy: &Strategy,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64), FrameError> {
    const MIN_TRIALS: usize = 100;
    if trials < MIN_TRIALS {
        return Err(FrameError::TooFewTrials { min: MIN_TRIALS, got: trials });
    }
    if signature(a)? != signature(b)? {
        return Err(FrameError::SignatureMismatch);
    }
    let train = trials / 2;
    let mut table: HashMap<String, (usize, usize)> = HashMap::new();
    let mut test = Vec::new();
    for i in 0..trials {
        let la = sample_label(a, strategy, derive_seed(seed, 2 * i as u64))?;
        let lb = sample_label(b, strategy, derive_seed(seed, 2 * i as u64 + 1))?;
        if i < train {
            table.entry(la).or_default().0 += 1;
            table.entry(lb).or_default().1 += 1;
        } else {
            test.push((la, lb));
        }
    }
    let guess_a = |l: &String| table.get(l).is_some_and(|&(na, nb)| na > nb);
    let correct: usize = test.iter().map(|(la, lb)| usize::from(guess_a(la)) + usize::from(!guess_a(lb))).sum();
    let n = (2 * test.len()) as f64;
    let success = correct as f64 / n;
    let estimate = (2.0 * success - 1.0).max(0.0);
    let half_width = 2.0 * 1.96 * (success * (1.0 - success) / n).sqrt();
    Ok((estimate, half_width))
}
