//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mcdqc::acframe::{
    compose, exact_advantage, parallel, run_system, Envelope, FilterSetting, FrameError, InterfaceId, KeyMaterial,
    LeakRecord, PartyLabel, Payload, PostProcess, SbbModel, SbvModel, SnbvModel, Strategy, System, UnitaryMixture,
    Wire, World,
};
use mcdqc::authcode::{
    auth_decode, auth_encode, exact_detection_probability, key_averaged_encoding, Attack, AuthKey, AuthVerdict,
    EncodedBlock, ProductKey,
};
use mcdqc::dqc::{AttackPoint, Backend, HonestServer};
use mcdqc::harness::{
    blindness_distance, parse_scenario_str, run_trials, three_sigma, AdversaryStrategy, HarnessError, Overrides,
    PauliChoice, StrategyKind, Target,
};
use mcdqc::multiclient::{ClientResult, ClientSpec, Protocol, ProtocolConfig, RunOutcome, Scenario, Wiring};
use mcdqc::qsim::{
    enumerate_clifford, trace_distance, BasisState, Circuit, DensityMatrix, GateList, InitBlock, Mat, Owner,
    PauliString, Substrate, C64,
};

/// Output states compared against the dense oracle.
const STATE_TOL: f64 = 1e-9;
/// Closed-form constants compared against exact enumerations.
const EXACT_TOL: f64 = 1e-12;
/// Binomial standard deviations allowed around sampled rates.
const SIGMAS: f64 = 3.0;
const AC1_BUDGET_S: f64 = 60.0;
const AC4_BUDGET_S: f64 = 120.0;
const AC5_TRIALS: usize = 10_000;
const AC7_TRIALS: usize = 1_000;
const AC8_TRIPLES: usize = 100;
const AC10_TRIALS: usize = 200;

/// Per non-identity Pauli on (message, trap), in index order: detection,
/// harmless and undetected-corruption weights of the 1+1 trap code.
/// Each attack twirls to the uniform mixture of the 15 non-identity Paulis;
/// 8 of them flip the trap, only `I (x) Z` leaves the message intact.
const PINNED_PAULI_TABLE: [(f64, f64, f64); 15] = [(8.0 / 15.0, 1.0 / 15.0, 6.0 / 15.0); 15];

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($fmt)+)),
        }
    };
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1", "honest correctness of protocol 1", ac1_honest_correctness),
        ("AC2", "protocol 3 matches protocol 1", ac2_protocol_equivalence),
        ("AC3", "two-client chains", ac3_two_client_chains),
        ("AC4", "authentication completeness and secrecy", ac4_completeness_and_secrecy),
        ("AC5", "authentication security under Pauli attacks", ac5_pauli_attacks),
        ("AC6", "blindness", ac6_blindness),
        ("AC7", "error-bound soundness", ac7_bound_soundness),
        ("AC8", "distance metric axioms", ac8_metric_axioms),
        ("AC9", "ideal resource tables", ac9_ideal_resources),
        ("AC10", "determinism", ac10_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, title, check) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("{id:<4} PASS  {title}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("{id:<4} FAIL  {title}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// Independent dense oracle: a state vector over every input qubit, its own
// gate table and its own routing of wired registers.

mod oracle {
    use mcdqc::qsim::{DensityMatrix, Mat, C64};

    pub struct State {
        n: usize,
        amp: Vec<C64>,
    }

    fn one_qubit(name: &str) -> [[C64; 2]; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        match name {
            "I" => [[o, z], [z, o]],
            "X" => [[z, o], [o, z]],
            "Y" => [[z, -i], [i, z]],
            "Z" => [[o, z], [z, -o]],
            "H" => [[o * h, o * h], [o * h, -o * h]],
            "S" => [[o, z], [z, i]],
            "T" => [[o, z], [z, C64::new(h, h)]],
            g => panic!("oracle: unknown gate {g}"),
        }
    }

    impl State {
        /// Product of single-qubit states given by `0 1 + -` tokens.
        pub fn product(tokens: &[&str]) -> Self {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let mut amp = vec![C64::new(1.0, 0.0)];
            for t in tokens {
                let q = match *t {
                    "0" => [1.0, 0.0],
                    "1" => [0.0, 1.0],
                    "+" => [h, h],
                    "-" => [h, -h],
                    s => panic!("oracle: unknown state {s}"),
                };
                amp = amp.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
            }
            Self { n: tokens.len(), amp }
        }

        fn bit(&self, q: usize) -> usize {
            1 << (self.n - 1 - q)
        }

        fn apply1(&mut self, q: usize, m: [[C64; 2]; 2]) {
            let b = self.bit(q);
            for x in 0..self.amp.len() {
                if x & b == 0 {
                    let (a0, a1) = (self.amp[x], self.amp[x | b]);
                    self.amp[x] = m[0][0] * a0 + m[0][1] * a1;
                    self.amp[x | b] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }

        fn cnot(&mut self, c: usize, t: usize) {
            let (bc, bt) = (self.bit(c), self.bit(t));
            for x in 0..self.amp.len() {
                if x & bc != 0 && x & bt == 0 {
                    self.amp.swap(x, x | bt);
                }
            }
        }

        fn cz(&mut self, a: usize, b: usize) {
            let (ba, bb) = (self.bit(a), self.bit(b));
            for x in 0..self.amp.len() {
                if x & ba != 0 && x & bb != 0 {
                    self.amp[x] = -self.amp[x];
                }
            }
        }

        /// Applies `G a; G a b; ...` with local indices mapped through `reg`.
        pub fn run(&mut self, gates: &str, reg: &[usize]) {
            for g in gates.split(';').map(str::trim).filter(|g| !g.is_empty()) {
                let mut parts = g.split_whitespace();
                let name = parts.next().unwrap().to_ascii_uppercase();
                let t: Vec<usize> = parts.map(|p| reg[p.parse::<usize>().unwrap()]).collect();
                match name.as_str() {
                    "CNOT" | "CX" => self.cnot(t[0], t[1]),
                    "CZ" => self.cz(t[0], t[1]),
                    other => self.apply1(t[0], one_qubit(other)),
                }
            }
        }

        /// Reduced state of `keep`, first listed qubit most significant.
        pub fn reduced(&self, keep: &[usize]) -> DensityMatrix {
            let k = keep.len();
            let mut groups: std::collections::BTreeMap<usize, Vec<C64>> = std::collections::BTreeMap::new();
            let kept_mask: usize = keep.iter().map(|&q| self.bit(q)).sum();
            for (x, a) in self.amp.iter().enumerate() {
                let mut local = 0;
                for &q in keep {
                    local = (local << 1) | usize::from(x & self.bit(q) != 0);
                }
                groups.entry(x & !kept_mask).or_insert_with(|| vec![C64::new(0.0, 0.0); 1 << k])[local] = *a;
            }
            let d = 1 << k;
            let mut rho = Mat::zeros(d, d);
            for v in groups.values() {
                for r in 0..d {
                    for c in 0..d {
                        rho[(r, c)] += v[r] * v[c].conj();
                    }
                }
            }
            DensityMatrix::from_matrix(rho).unwrap()
        }
    }
}

/// A scenario written once and fed to both the crate and the oracle.
#[derive(Clone)]
struct Spec {
    name: &'static str,
    m: usize,
    inputs: Vec<&'static str>,
    /// `gates[client][round]`.
    gates: Vec<Vec<&'static str>>,
    /// `(round, from, to, labels)`.
    wires: Vec<(usize, usize, usize, Vec<usize>)>,
}

fn spec(
    name: &'static str,
    m: usize,
    inputs: &[&'static str],
    gates: &[&[&'static str]],
    wires: &[(usize, usize, usize, &[usize])],
) -> Spec {
    Spec {
        name,
        m,
        inputs: inputs.to_vec(),
        gates: gates.iter().map(|g| g.to_vec()).collect(),
        wires: wires.iter().map(|&(h, i, j, l)| (h, i, j, l.to_vec())).collect(),
    }
}

fn tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn basis(s: &str) -> Vec<BasisState> {
    tokens(s).iter().map(|t| BasisState::parse(t).unwrap()).collect()
}

fn gate_list(s: &str) -> GateList {
    if s.trim().is_empty() {
        GateList::identity()
    } else {
        s.parse().unwrap()
    }
}

impl Spec {
    fn n(&self) -> usize {
        self.inputs.len()
    }

    fn qubits(&self) -> usize {
        self.inputs.iter().map(|s| tokens(s).len()).sum()
    }

    fn scenario(&self) -> Scenario {
        let mut w = Wiring::new(self.n(), self.m);
        for (h, i, j, l) in &self.wires {
            w.set(*h, *i, *j, l).unwrap();
        }
        let clients = (0..self.n())
            .map(|c| ClientSpec::new(basis(self.inputs[c]), self.gates[c].iter().map(|g| gate_list(g)).collect()))
            .collect();
        Scenario::new(clients, w).unwrap()
    }

    /// Per-client final state by direct evaluation of the wired circuit.
    fn expected(&self) -> Vec<Option<DensityMatrix>> {
        let all: Vec<&str> = self.inputs.iter().flat_map(|s| tokens(s)).collect();
        let mut state = oracle::State::product(&all);
        let mut regs: Vec<Vec<usize>> = Vec::new();
        let mut next = 0;
        for s in &self.inputs {
            let w = tokens(s).len();
            regs.push((next..next + w).collect());
            next += w;
        }
        for h in 0..self.m {
            for (c, reg) in regs.iter().enumerate() {
                state.run(self.gates[c].get(h).copied().unwrap_or(""), reg);
            }
            if h + 1 < self.m {
                let mut routed = vec![Vec::new(); self.n()];
                for to in 1..=self.n() {
                    for from in 1..=self.n() {
                        let mut labels: Vec<usize> = self
                            .wires
                            .iter()
                            .filter(|(r, i, j, _)| *r == h + 1 && *i == from && *j == to)
                            .flat_map(|(_, _, _, l)| l.clone())
                            .collect();
                        labels.sort_unstable();
                        routed[to - 1].extend(labels.iter().map(|&l| regs[from - 1][l]));
                    }
                }
                regs = routed;
            }
        }
        regs.iter().map(|r| if r.is_empty() { None } else { Some(state.reduced(r)) }).collect()
    }
}

/// Ten wired scenarios, two or three clients, one or two rounds, at most
/// five input qubits so the resident protocol stays within the substrate.
fn battery() -> Vec<Spec> {
    vec![
        spec("pair-single-round", 1, &["0", "1"], &[&["H 0"], &["S 0; H 0"]], &[]),
        spec("bell-and-phase", 1, &["0 0", "+"], &[&["H 0; CNOT 0 1"], &["T 0; H 0"]], &[]),
        spec("three-single-round", 1, &["0", "+", "-"], &[&["H 0"], &["S 0; T 0"], &["X 0; H 0"]], &[]),
        spec("three-five-qubits", 1, &["0 1", "+ 0", "0"], &[&["CNOT 1 0"], &["CNOT 0 1"], &["H 0; T 0; H 0"]], &[]),
        spec(
            "bell-forward",
            2,
            &["0 0", "+"],
            &[&["H 0; CNOT 0 1", "H 0"], &["Z 0", "S 0; CZ 0 1"]],
            &[(1, 1, 1, &[0]), (1, 1, 2, &[1]), (1, 2, 2, &[0])],
        ),
        spec(
            "swap",
            2,
            &["0 +", "1 0"],
            &[&["X 0; CNOT 1 0", "H 1"], &["H 1", "CZ 0 1"]],
            &[(1, 1, 1, &[0]), (1, 1, 2, &[1]), (1, 2, 2, &[0]), (1, 2, 1, &[1])],
        ),
        spec(
            "hand-over",
            2,
            &["0 0", "1"],
            &[&["H 0; CNOT 0 1; T 1", "X 0"], &["", "CZ 0 1; H 1"]],
            &[(1, 1, 2, &[0, 1]), (1, 2, 1, &[0])],
        ),
        spec(
            "ring",
            2,
            &["+", "0", "1"],
            &[&["S 0"], &["X 0"], &["H 0", "Z 0"]],
            &[(1, 1, 2, &[0]), (1, 2, 3, &[0]), (1, 3, 1, &[0])],
        ),
        spec(
            "fan-out",
            2,
            &["0 0", "0", "+"],
            &[&["H 0; CNOT 0 1", "H 0"], &["Y 0", "S 0"], &["", "CNOT 0 1"]],
            &[(1, 1, 2, &[0]), (1, 1, 3, &[1]), (1, 2, 1, &[0]), (1, 3, 3, &[0])],
        ),
        spec(
            "gather",
            2,
            &["+", "0", "0"],
            &[&["T 0"], &["H 0"], &["", "CNOT 0 1; CNOT 0 2; H 2"]],
            &[(1, 1, 3, &[0]), (1, 2, 3, &[0]), (1, 3, 3, &[0])],
        ),
        spec(
            "collect-two",
            2,
            &["0 1", "+"],
            &[&["H 0", "CNOT 2 0; H 1"], &["S 0"]],
            &[(1, 1, 1, &[0, 1]), (1, 2, 1, &[0])],
        ),
    ]
}

fn honest_run(protocol: Protocol, scenario: &Scenario, backend: Backend, seed: u64) -> Result<RunOutcome, String> {
    let config = ProtocolConfig { backend, traps: 1, rebroadcast: true };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    protocol.run(scenario, config, &mut HonestServer, &mut rng).map_err(|e| e.to_string())
}

fn outputs(run: &RunOutcome, n: usize) -> Result<Vec<Option<DensityMatrix>>, String> {
    (1..=n).map(|i| run.output_state(i).map_err(|e| e.to_string())).collect()
}

/// Largest per-client trace distance; fails on any missing or extra output.
fn worst_distance(got: &[Option<DensityMatrix>], want: &[Option<DensityMatrix>]) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        match (g, w) {
            (Some(g), Some(w)) => worst = worst.max(trace_distance(g, w).map_err(|e| e.to_string())?),
            (None, None) => {}
            _ => return Err(format!("client {} output presence differs", i + 1)),
        }
    }
    Ok(worst)
}

fn ac1_honest_correctness() -> Outcome {
    let start = Instant::now();
    let specs = battery();
    ensure!(specs.len() >= 10, "battery has {} scenarios", specs.len());
    let mut worst: f64 = 0.0;
    for s in &specs {
        ensure!(
            (2..=3).contains(&s.n()) && (1..=2).contains(&s.m) && s.qubits() <= 8,
            "{} outside the battery limits",
            s.name
        );
        let scenario = s.scenario();
        let want = s.expected();
        for backend in [Backend::Ideal, Backend::CliffordAuth { traps: 1 }] {
            let run = honest_run(Protocol::P1, &scenario, backend, 1)?;
            ensure!(!run.aborted(), "{} aborted on {}", s.name, backend.name());
            let d = worst_distance(&outputs(&run, s.n())?, &want).map_err(|e| format!("{}: {e}", s.name))?;
            ensure!(d <= STATE_TOL, "{} on {}: distance {d:.3e}", s.name, backend.name());
            worst = worst.max(d);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs <= AC1_BUDGET_S, "took {secs:.1}s, budget {AC1_BUDGET_S}s");
    Ok(format!("{} scenarios x 2 backends, max distance {worst:.1e} <= {STATE_TOL:.0e}", specs.len()))
}

fn ac2_protocol_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let specs = battery();
    for s in &specs {
        let scenario = s.scenario();
        let reference = outputs(&honest_run(Protocol::P1, &scenario, Backend::Ideal, 2)?, s.n())?;
        for backend in [Backend::Ideal, Backend::CliffordAuth { traps: 1 }] {
            let run = honest_run(Protocol::P3, &scenario, backend, 2)?;
            ensure!(!run.aborted(), "{} aborted under protocol 3 on {}", s.name, backend.name());
            let d = worst_distance(&outputs(&run, s.n())?, &reference).map_err(|e| format!("{}: {e}", s.name))?;
            ensure!(d <= STATE_TOL, "{} on {}: distance {d:.3e}", s.name, backend.name());
            worst = worst.max(d);
        }
    }
    Ok(format!("{} scenarios x 2 backends, max distance {worst:.1e} <= {STATE_TOL:.0e}", specs.len()))
}

/// `(rho, U_c1, U_c2)` for the two-client chain.
const CHAIN_TRIPLES: [(&str, &str, &str); 5] = [
    ("0", "X 0", "I 0"),
    ("1", "H 0", "S 0"),
    ("+", "S 0; H 0", "T 0"),
    ("0 +", "CNOT 1 0", "H 0; CZ 0 1"),
    ("-", "T 0; H 0", "X 0; S 0"),
];

fn chain(rho: &str, u1: &str, u2: &str) -> Scenario {
    Scenario::chain(basis(rho), gate_list(u1), gate_list(u2)).unwrap()
}

fn ac3_two_client_chains() -> Outcome {
    let mut worst: f64 = 0.0;
    for (rho, u1, u2) in CHAIN_TRIPLES {
        let mut state = oracle::State::product(&tokens(rho));
        let reg: Vec<usize> = (0..tokens(rho).len()).collect();
        state.run(u1, &reg);
        state.run(u2, &reg);
        let want = vec![None, Some(state.reduced(&reg))];
        let scenario = chain(rho, u1, u2);
        for protocol in [Protocol::P2, Protocol::P4] {
            for backend in [Backend::Ideal, Backend::CliffordAuth { traps: 1 }] {
                let run = honest_run(protocol, &scenario, backend, 3)?;
                ensure!(run.results[0] == ClientResult::Empty, "client 1 kept an output");
                let d = worst_distance(&outputs(&run, 2)?, &want)?;
                ensure!(d <= STATE_TOL, "({rho}, {u1}, {u2}) protocol {}: distance {d:.3e}", protocol.number());
                worst = worst.max(d);
            }
        }
    }
    Ok(format!("5 triples x protocols 2,4 x 2 backends, max distance {worst:.1e} <= {STATE_TOL:.0e}"))
}

fn probe_states() -> Vec<DensityMatrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v: Vec<DensityMatrix> = BasisState::ALL.iter().map(|b| b.density()).collect();
    v.push(DensityMatrix::from_pure(&[C64::new(h, 0.0), C64::new(0.0, h)]).unwrap());
    v.push(DensityMatrix::from_pure(&[C64::new(0.6, 0.0), C64::new(0.0, -0.8)]).unwrap());
    let mixed =
        Mat::from_row_slice(2, 2, &[C64::new(0.7, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.3, 0.0)]);
    v.push(DensityMatrix::from_matrix(mixed).unwrap());
    v
}

fn ac4_completeness_and_secrecy() -> Outcome {
    let start = Instant::now();
    let group = enumerate_clifford(2).map_err(|e| e.to_string())?;
    ensure!(group.len() == 11520, "two-qubit Clifford group has {} elements", group.len());
    let states = probe_states();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_accept: f64 = 0.0;
    let mut worst_payload: f64 = 0.0;
    for c in group {
        let key = AuthKey::from_clifford(1, 1, c.clone()).map_err(|e| e.to_string())?;
        for rho in &states {
            let mut s = Substrate::new();
            let msg = s.allocate(rho, Owner::Client(1)).map_err(|e| e.to_string())?;
            let block = auth_encode(&mut s, &msg, &key).map_err(|e| e.to_string())?;
            let mut probe = s.clone();
            probe.apply_unitary(&key.clifford().matrix().adjoint(), &block).map_err(|e| e.to_string())?;
            let accept = probe.all_zero_probability(&block[1..]).map_err(|e| e.to_string())?;
            worst_accept = worst_accept.max((1.0 - accept).abs());
            let verdict = auth_decode(&mut s, &block, &key, &mut rng).map_err(|e| e.to_string())?;
            let AuthVerdict::Accepted { message } = verdict else { return Err("honest block rejected".into()) };
            let out = s.partial_trace(&message).map_err(|e| e.to_string())?;
            worst_payload = worst_payload.max(trace_distance(&out, rho).map_err(|e| e.to_string())?);
        }
    }
    ensure!(worst_accept <= EXACT_TOL, "acceptance deficit {worst_accept:.3e}");
    ensure!(worst_payload <= STATE_TOL, "decoded payload off by {worst_payload:.3e}");

    // multi-qubit messages through sampled product keys
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let key = ProductKey::generate(2, 2, &mut rng).map_err(|e| e.to_string())?;
        let scenario_state = BasisState::Plus.density().tensor(&BasisState::One.density());
        let mut s = Substrate::new();
        let msg = s.allocate(&scenario_state, Owner::Client(1)).map_err(|e| e.to_string())?;
        let block: EncodedBlock = key.encode(&mut s, &msg).map_err(|e| e.to_string())?;
        let AuthVerdict::Accepted { message } = key.decode(&mut s, &block, &mut rng).map_err(|e| e.to_string())? else {
            return Err("honest product block rejected".into());
        };
        let d = trace_distance(&s.partial_trace(&message).map_err(|e| e.to_string())?, &scenario_state)
            .map_err(|e| e.to_string())?;
        ensure!(d <= STATE_TOL, "product key payload off by {d:.3e}");
    }

    let mixed = DensityMatrix::maximally_mixed(2);
    let mut worst_secrecy: f64 = 0.0;
    for rho in &states {
        let avg = key_averaged_encoding(rho, 1).map_err(|e| e.to_string())?;
        worst_secrecy = worst_secrecy.max(trace_distance(&avg, &mixed).map_err(|e| e.to_string())?);
    }
    ensure!(worst_secrecy <= STATE_TOL, "key-averaged encoding {worst_secrecy:.3e} from maximally mixed");
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs <= AC4_BUDGET_S, "took {secs:.1}s, budget {AC4_BUDGET_S}s");
    Ok(format!(
        "11520 keys x {} states accept with p=1 (deficit {worst_accept:.1e}), key average {worst_secrecy:.1e} from I/4",
        states.len()
    ))
}

const BELL_FORWARD: &str = "\
[run]
protocol = 1
backend = ideal
seed = 11
[clients]
n = 2
m = 2
c1.input = 0 0
c1.u1 = H 0; CNOT 0 1
[wiring]
t1.c1.c1 = 0
t1.c1.c2 = 1
";

fn ac5_pauli_attacks() -> Outcome {
    let paulis: Vec<PauliString> = PauliString::non_identity(2).collect();
    ensure!(paulis.len() == 15, "{} non-identity Paulis", paulis.len());
    for (p, &(detect, harmless, eps)) in paulis.iter().zip(&PINNED_PAULI_TABLE) {
        let stats = exact_detection_probability(1, 1, &Attack::Pauli(p.clone())).map_err(|e| e.to_string())?;
        ensure!(
            (stats.p_detect - detect).abs() <= EXACT_TOL
                && (stats.p_harmless - harmless).abs() <= EXACT_TOL
                && (stats.epsilon() - eps).abs() <= EXACT_TOL,
            "oracle drifted from the pinned table at {p}: {stats:?}"
        );
    }
    let mut file = parse_scenario_str("bell-forward", BELL_FORWARD).map_err(|e| e.to_string())?;
    file.trials = AC5_TRIALS;
    let point = AttackPoint::Transfer { round: 1, from: 1, to: 2 };
    file.strategies = paulis
        .iter()
        .map(|p| {
            AdversaryStrategy::new(StrategyKind::PauliTamper {
                target: Target::Point(point),
                pauli: PauliChoice::Fixed(p.clone()),
                probability: 1.0,
            })
        })
        .collect();
    let report = run_trials(&file, &Overrides::default()).map_err(|e| e.to_string())?;
    let mut worst_z: f64 = 0.0;
    for (row, &(detect, _, eps)) in report.rows.iter().zip(&PINNED_PAULI_TABLE) {
        ensure!(row.attacks == row.trials, "{}: {} attacks in {} trials", row.name, row.attacks, row.trials);
        let (abort, corrupt) = (row.abort_rate(), row.corruption_rate());
        ensure!(
            (abort - detect).abs() <= three_sigma(detect, row.trials),
            "{}: abort rate {abort:.4} vs {detect:.4}",
            row.name
        );
        ensure!(
            (corrupt - eps).abs() <= three_sigma(eps, row.trials),
            "{}: corruption rate {corrupt:.4} vs {eps:.4}",
            row.name
        );
        let sd = |p: f64| (p * (1.0 - p) / row.trials as f64).sqrt();
        worst_z = worst_z.max((abort - detect).abs() / sd(detect)).max((corrupt - eps).abs() / sd(eps));
    }
    Ok(format!(
        "15 Paulis pinned at (8/15, 1/15, 6/15); {AC5_TRIALS} protocol trials each, worst deviation {worst_z:.2} sigma <= {SIGMAS}"
    ))
}

fn ac6_blindness() -> Outcome {
    let ring = |a: [&'static str; 3], g: [&'static str; 4]| {
        spec("ring", 2, &a, &[&[g[0]], &[g[1]], &[g[2], g[3]]], &[(1, 1, 2, &[0]), (1, 2, 3, &[0]), (1, 3, 1, &[0])])
            .scenario()
    };
    let forward = |a: &'static str, g: [&'static str; 3]| {
        spec(
            "forward",
            2,
            &[a, "+"],
            &[&[g[0], g[1]], &["Z 0", g[2]]],
            &[(1, 1, 1, &[0]), (1, 1, 2, &[1]), (1, 2, 2, &[0])],
        )
        .scenario()
    };
    let pairs: Vec<(&str, Protocol, Scenario, Scenario)> = vec![
        ("chain (0,X,I) vs (1,H,S)", Protocol::P2, chain("0", "X 0", "I 0"), chain("1", "H 0", "S 0")),
        ("resident chain (0,X,I) vs (1,H,S)", Protocol::P4, chain("0", "X 0", "I 0"), chain("1", "H 0", "S 0")),
        (
            "two-qubit chain",
            Protocol::P2,
            chain("0 +", "CNOT 1 0", "H 0; CZ 0 1"),
            chain("1 -", "CZ 0 1", "T 1; CNOT 0 1"),
        ),
        (
            "ring",
            Protocol::P1,
            ring(["+", "0", "1"], ["S 0", "X 0", "H 0", "Z 0"]),
            ring(["0", "-", "+"], ["T 0", "H 0", "X 0", "S 0"]),
        ),
        (
            "resident ring",
            Protocol::P3,
            ring(["+", "0", "1"], ["S 0", "X 0", "H 0", "Z 0"]),
            ring(["1", "1", "-"], ["H 0", "Y 0", "T 0", "X 0"]),
        ),
        (
            "forward",
            Protocol::P1,
            forward("0 0", ["H 0; CNOT 0 1", "H 0", "S 0; CZ 0 1"]),
            forward("1 +", ["X 1; CZ 0 1", "T 0", "CNOT 1 0; H 1"]),
        ),
        (
            "same scenario twice",
            Protocol::P3,
            forward("0 0", ["H 0; CNOT 0 1", "H 0", "S 0; CZ 0 1"]),
            forward("0 0", ["H 0; CNOT 0 1", "H 0", "S 0; CZ 0 1"]),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (name, protocol, a, b) in &pairs {
        let d = blindness_distance(*protocol, a, b).map_err(|e| format!("{name}: {e}"))?;
        ensure!(d <= STATE_TOL, "{name}: server views {d:.3e} apart");
        worst = worst.max(d);
    }
    let longer = ring(["+", "0", "1"], ["S 0; H 0", "X 0", "H 0", "Z 0"]);
    match blindness_distance(Protocol::P1, &pairs[3].2, &longer) {
        Err(HarnessError::SizeProfile { .. }) => {}
        other => return Err(format!("mismatched gate counts gave {other:?}")),
    }
    Ok(format!("{} pairs, max view distance {worst:.1e} <= {STATE_TOL:.0e}; mismatched pair rejected", pairs.len()))
}

const SHIPPED_STRATEGIES: &str = "
[adversary]
strategy = honest
[adversary]
strategy = abort-flip
round = 1
client = 1
[adversary]
strategy = abort-flip
round = 2
client = 2
[adversary]
strategy = pauli-tamper
target = all
pauli = uniform
probability = 1
[adversary]
strategy = pauli-tamper
target = sessions
pauli = uniform
probability = 0.5
[adversary]
strategy = pauli-tamper
target = channels
pauli = uniform
probability = 1
[adversary]
strategy = pauli-tamper
target = transfer r1 c1 c2
pauli = XZ
[adversary]
strategy = unitary-tamper
target = sessions
gates = H 0
[adversary]
strategy = unitary-tamper
target = transfer r1 c1 c2
matrix = 0.7071067811865476 0.7071067811865476i; 0.7071067811865476i 0.7071067811865476
[adversary]
strategy = measure-resend
target = all
[adversary]
strategy = measure-resend
target = channels
";

const EXCHANGE_2X2: &str = "\
[clients]
n = 2
m = 2
c1.input = +
c1.u1 = S 0
c1.u2 = X 0
c2.input = 0
c2.u1 = H 0
c2.u2 = T 0
[wiring]
t1.c1.c2 = 0
t1.c2.c1 = 0
";

const RING_3X2: &str = "\
[clients]
n = 3
m = 2
c1.input = +
c1.u1 = S 0
c2.input = 0
c2.u1 = X 0
c3.input = 1
c3.u1 = H 0
c3.u2 = Z 0
[wiring]
t1.c1.c2 = 0
t1.c2.c3 = 0
t1.c3.c1 = 0
";

const CHAIN_FILE: &str = "\
[clients]
n = 2
m = 1
c1.input = +
c1.u1 = T 0
c2.u1 = H 0
[adversary]
strategy = honest
[adversary]
strategy = pauli-tamper
target = transfer r1 c1 c2
pauli = uniform
";

fn run_file(name: &str, protocol: u8, backend: &str, body: &str) -> Result<mcdqc::harness::Report, String> {
    let text = format!("[run]\nprotocol = {protocol}\nbackend = {backend}\nseed = 17\ntrials = {AC7_TRIALS}\n{body}");
    let file = parse_scenario_str(name, &text).map_err(|e| format!("{name}: {e}"))?;
    run_trials(&file, &Overrides::default()).map_err(|e| format!("{name}: {e}"))
}

fn ac7_bound_soundness() -> Outcome {
    let mut rows = 0;
    let mut tightest = f64::INFINITY;
    for (name, body) in [("exchange 2x2", EXCHANGE_2X2), ("ring 3x2", RING_3X2)] {
        for (protocol, backend) in [(1, "ideal"), (3, "ideal"), (3, "clifford-auth")] {
            let text = format!("{body}{SHIPPED_STRATEGIES}");
            let report = run_file(name, protocol, backend, &text)?;
            ensure!(report.rows.len() == 11, "{name}: {} strategies ran", report.rows.len());
            for row in &report.rows {
                let b = report.bound_general;
                let limit = b + three_sigma(b.min(1.0), row.trials);
                ensure!(
                    row.corruption_rate() <= limit && row.within_bound,
                    "{name} protocol {protocol} {backend} {}: corruption {:.4} above {limit:.4}",
                    row.name,
                    row.corruption_rate()
                );
                ensure!(row.aborts + row.corrupted + row.accepted == row.trials, "{}: classes do not add up", row.name);
                tightest = tightest.min(limit - row.corruption_rate());
                rows += 1;
            }
            if protocol == 1 && backend == "ideal" {
                let honest = &report.rows[0];
                ensure!(honest.aborts == 0 && honest.corrupted == 0, "{name}: honest run flagged");
            }
        }
    }
    let mut chain_lines = Vec::new();
    for (protocol, backend) in [(2, "ideal"), (4, "clifford-auth")] {
        let report = run_file("chain", protocol, backend, CHAIN_FILE)?;
        let machine = report.to_machine();
        ensure!(
            machine.contains("bound.general=") && machine.contains("bound.two_client="),
            "chain report lacks one of the two bound values"
        );
        let two = report.bound_two_client.ok_or("chain report without a two-client bound")?;
        let tamper = &report.rows[1];
        chain_lines.push(format!(
            "P{protocol} chain tamper {:.3} vs general {:.3} / two-client {:.3}",
            tamper.corruption_rate(),
            report.bound_general,
            two
        ));
    }
    Ok(format!(
        "{rows} strategy rows within bound + {SIGMAS} sigma at {AC7_TRIALS} trials (min slack {tightest:.3}); {}",
        chain_lines.join("; ")
    ))
}

fn iface(label: PartyLabel, port: &str) -> InterfaceId {
    InterfaceId::new(label, port)
}

type Wrap<'a> = dyn Fn(&Branches) -> Result<Box<dyn System>, FrameError> + 'a;

fn random_unitary(rng: &mut ChaCha8Rng) -> Mat {
    let (a, b, c): (f64, f64, f64) = (rng.gen_range(0.0..6.3), rng.gen_range(0.0..3.2), rng.gen_range(0.0..6.3));
    let rz = |t: f64| {
        Mat::from_row_slice(
            2,
            2,
            &[C64::from_polar(1.0, -t / 2.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::from_polar(1.0, t / 2.0)],
        )
    };
    let (cb, sb) = ((b / 2.0).cos(), (b / 2.0).sin());
    let ry = Mat::from_row_slice(2, 2, &[C64::from(cb), C64::from(-sb), C64::from(sb), C64::from(cb)]);
    rz(a) * ry * rz(c)
}

/// One to three unitary branches plus an ERR weight below 0.3.
fn random_branches(rng: &mut ChaCha8Rng) -> (Vec<(f64, Mat)>, f64) {
    let err = rng.gen_range(0.0..0.3);
    let k = rng.gen_range(1..=3);
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    (raw.iter().map(|w| (w / total * (1.0 - err), random_unitary(rng))).collect(), err)
}

type Branches = (Vec<(f64, Mat)>, f64);

fn mixture(name: &str, input: &str, output: &str, b: &Branches) -> Box<dyn System> {
    Box::new(UnitaryMixture::new(name, iface(PartyLabel::A, input), iface(PartyLabel::B, output), b.0.clone(), b.1))
}

fn ac8_metric_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = || {
        let amps = [C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)];
        InitBlock::Explicit(DensityMatrix::from_pure(&amps).unwrap(), Owner::Reference)
    };
    let one = Strategy::new(vec![bell()]).input_qubits(iface(PartyLabel::A, "q"), vec![(0, 0)]).keep(vec![(0, 1)]);
    let two = Strategy::new(vec![bell(), bell()])
        .input_qubits(iface(PartyLabel::A, "q"), vec![(0, 0)])
        .input_qubits(iface(PartyLabel::A, "q2"), vec![(1, 0)])
        .keep(vec![(0, 1), (1, 1)]);
    let d = |x: &Branches, y: &Branches, s: &Strategy, wrap: &Wrap<'_>| {
        exact_advantage(&|| wrap(x), &|| wrap(y), s).map_err(|e| e.to_string())
    };
    let mut checks = 0;
    let mut worst_slack = f64::INFINITY;
    for _ in 0..AC8_TRIPLES {
        let (r, s, t) = (random_branches(&mut rng), random_branches(&mut rng), random_branches(&mut rng));
        let conv = random_branches(&mut rng);
        let other = random_branches(&mut rng);
        let bare = |b: &Branches| -> Result<Box<dyn System>, FrameError> { Ok(mixture("R", "q", "q", b)) };
        let (rs, st, rt) = (d(&r, &s, &one, &bare)?, d(&s, &t, &one, &bare)?, d(&r, &t, &one, &bare)?);
        let (rr, sr) = (d(&r, &r, &one, &bare)?, d(&s, &r, &one, &bare)?);
        ensure!(rr <= STATE_TOL && (rs - sr).abs() <= STATE_TOL, "identity or symmetry broken: {rr:.3e}, {rs} vs {sr}");
        ensure!(rt <= rs + st + STATE_TOL, "triangle: {rt} > {rs} + {st}");

        let converted = |b: &Branches| -> Result<Box<dyn System>, FrameError> {
            let alpha =
                PostProcess::new(iface(PartyLabel::B, "q"), iface(PartyLabel::B, "out"), conv.0.clone(), conv.1);
            Ok(Box::new(compose(vec![mixture("R", "q", "q", b)], vec![Box::new(alpha)], FilterSetting::new())?))
        };
        let side = |b: &Branches| -> Result<Box<dyn System>, FrameError> {
            Ok(Box::new(parallel(mixture("R", "q", "q", b), mixture("U", "q2", "q2", &other))?))
        };
        let chained = |b: &Branches| -> Result<Box<dyn System>, FrameError> {
            let wire = Wire::new(iface(PartyLabel::B, "mid"), iface(PartyLabel::A, "q2"));
            Ok(Box::new(compose(
                vec![mixture("R", "q", "mid", b), mixture("U", "q2", "q2", &other)],
                vec![Box::new(wire)],
                FilterSetting::new(),
            )?))
        };
        let dc = d(&r, &s, &one, &converted)?;
        let dp = d(&r, &s, &two, &side)?;
        let dw = d(&r, &s, &one, &chained)?;
        ensure!(dc <= rs + STATE_TOL, "converter increased the distance: {dc} > {rs}");
        ensure!(dp <= rs + STATE_TOL, "parallel resource increased the distance: {dp} > {rs}");
        ensure!(dw <= rs + STATE_TOL, "sequential resource increased the distance: {dw} > {rs}");
        worst_slack = worst_slack.min(rs + st - rt).min(rs - dc).min(rs - dp).min(rs - dw);
        checks += 6;
    }
    Ok(format!(
        "{AC8_TRIPLES} random triples, {checks} inequalities, min slack {worst_slack:.1e} (tolerance {STATE_TOL:.0e})"
    ))
}

fn world_run(
    sys: &mut dyn System,
    s: Substrate,
    seed: u64,
    inputs: Vec<(InterfaceId, Payload)>,
) -> Result<(Vec<Envelope>, Substrate), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut world = World::new(s, &mut rng);
    let out = run_system(sys, &mut world, inputs).map_err(|e| e.to_string())?;
    Ok((out, world.into_parts().0))
}

fn fresh(rho: &DensityMatrix) -> Result<(Substrate, Vec<mcdqc::qsim::QubitId>), String> {
    let mut s = Substrate::new();
    let q = s.allocate(rho, Owner::Client(1)).map_err(|e| e.to_string())?;
    Ok((s, q))
}

fn circuit(width: usize, gates: &str) -> Circuit {
    Circuit::from_gates(width, gate_list(gates)).unwrap()
}

fn oracle_apply(input: &str, gates: &[&str]) -> DensityMatrix {
    let reg: Vec<usize> = (0..tokens(input).len()).collect();
    let mut state = oracle::State::product(&tokens(input));
    for g in gates {
        state.run(g, &reg);
    }
    state.reduced(&reg)
}

fn product_state(input: &str) -> DensityMatrix {
    basis(input).iter().map(|b| b.density()).reduce(|a, b| a.tensor(&b)).unwrap()
}

fn ac9_ideal_resources() -> Outcome {
    let mut rows = 0;
    // S^bv
    for (input, gates) in [("0", "X 0"), ("+", "H 0"), ("0 1", "CNOT 1 0; H 1")] {
        let w = tokens(input).len();
        let c = circuit(w, gates);
        for f in [false, true] {
            let (s, q) = fresh(&product_state(input))?;
            let job = Payload::Job { circuits: vec![c.clone()], qubits: q };
            let mut sbv = SbvModel::new(1);
            let (out, sub) = world_run(
                &mut sbv,
                s,
                1,
                vec![(iface(PartyLabel::C, "io"), job), (iface(PartyLabel::S, "f"), Payload::Control(f))],
            )?;
            let leak = Payload::Leak(LeakRecord::Delegation { qubits: w, gate_count: c.gate_count(), round: 1 });
            ensure!(out.len() == 2 && out[0].payload == leak, "Sbv leak row ({input}, {gates}, f={f}): {out:?}");
            match (&out[1].payload, f) {
                (Payload::Qubits(q), false) => {
                    let d = trace_distance(&sub.partial_trace(q).unwrap(), &oracle_apply(input, &[gates])).unwrap();
                    ensure!(d <= EXACT_TOL, "Sbv ({input}, {gates}) output off by {d:.3e}");
                }
                (Payload::Err, true) => ensure!(sub.n_qubits() == 0, "Sbv kept qubits after ERR"),
                (p, _) => return Err(format!("Sbv ({input}, {gates}, f={f}) emitted {p:?}")),
            }
            rows += 1;
        }
    }
    // S^bb
    for (input, gates) in [("0", "H 0"), ("1", "S 0; H 0")] {
        for f in [false, true] {
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let (mut s, q) = fresh(&product_state(input))?;
            let old = ProductKey::generate(1, 1, &mut rng).map_err(|e| e.to_string())?;
            let block = old.encode(&mut s, &q).map_err(|e| e.to_string())?;
            let mut sbb = SbbModel::new(2, 1);
            let (out, mut sub) = world_run(
                &mut sbb,
                s,
                2,
                vec![
                    (iface(PartyLabel::C, "io"), Payload::Program(circuit(1, gates))),
                    (iface(PartyLabel::C, "io"), Payload::Key(KeyMaterial::Auth(old))),
                    (iface(PartyLabel::S, "in"), Payload::Qubits(block.qubits())),
                    (iface(PartyLabel::S, "f"), Payload::Control(f)),
                ],
            )?;
            let leak = Payload::Leak(LeakRecord::Delegation {
                qubits: 1,
                gate_count: circuit(1, gates).gate_count(),
                round: 2,
            });
            ensure!(out[0].payload == leak, "Sbb leak row ({input}, {gates}): {:?}", out[0].payload);
            let kinds: Vec<&str> = out.iter().map(|e| e.payload.kind()).collect();
            if f {
                ensure!(kinds == ["leak", "err"] && sub.n_qubits() == 0, "Sbb f=1 row ({input}, {gates}): {kinds:?}");
            } else {
                ensure!(kinds == ["leak", "key", "qubits"], "Sbb f=0 row ({input}, {gates}): {kinds:?}");
                let Payload::Key(KeyMaterial::Auth(k)) = out[1].payload.clone() else { unreachable!() };
                let q = out[2].payload.qubits().to_vec();
                let eb = EncodedBlock { message: q[..1].to_vec(), traps: q[1..].to_vec() };
                let AuthVerdict::Accepted { message } = k.decode(&mut sub, &eb, &mut rng).map_err(|e| e.to_string())?
                else {
                    return Err("Sbb output rejected under the fresh key".into());
                };
                let d = trace_distance(&sub.partial_trace(&message).unwrap(), &oracle_apply(input, &[gates])).unwrap();
                ensure!(d <= STATE_TOL, "Sbb ({input}, {gates}) output off by {d:.3e}");
            }
            rows += 1;
        }
    }
    // S^n-bv, including the two-client chain U_c2 U_c1 rho_c1
    let mut cases: Vec<(String, Scenario, Vec<Option<DensityMatrix>>)> = CHAIN_TRIPLES[..3]
        .iter()
        .map(|&(rho, u1, u2)| {
            (format!("chain ({rho}, {u1}, {u2})"), chain(rho, u1, u2), vec![None, Some(oracle_apply(rho, &[u1, u2]))])
        })
        .collect();
    let ring = &battery()[7];
    cases.push(("ring".into(), ring.scenario(), ring.expected()));
    for (name, scenario, want) in &cases {
        for f in [false, true] {
            let (sub, regs) = scenario.prepare().map_err(|e| e.to_string())?;
            let mut inputs: Vec<(InterfaceId, Payload)> = (0..scenario.n())
                .map(|c| {
                    let job = Payload::Job { circuits: scenario.circuits()[c].clone(), qubits: regs[c].clone() };
                    (iface(PartyLabel::Client(c + 1), "io"), job)
                })
                .collect();
            inputs.push((iface(PartyLabel::S, "f"), Payload::Control(f)));
            let mut model = SnbvModel::new(scenario.wiring().clone());
            let (out, sub) = world_run(&mut model, sub, 3, inputs)?;
            let leaks: Vec<&Envelope> = out.iter().filter(|e| e.src == iface(PartyLabel::S, "leak")).collect();
            let expected_leaks: usize = scenario.circuits().iter().map(Vec::len).sum();
            ensure!(leaks.len() == expected_leaks, "{name}: {} leak records, expected {expected_leaks}", leaks.len());
            let mut got: BTreeMap<usize, Payload> = BTreeMap::new();
            for e in out.iter().filter(|e| e.src.port == "io") {
                let PartyLabel::Client(k) = e.src.label else { return Err(format!("{name}: output on {}", e.src)) };
                got.insert(k, e.payload.clone());
            }
            for (i, w) in want.iter().enumerate() {
                match (got.get(&(i + 1)), w, f) {
                    (None, None, _) => {}
                    (Some(Payload::Err), Some(_), true) => {}
                    (Some(Payload::Qubits(q)), Some(w), false) => {
                        let d = trace_distance(&sub.partial_trace(q).unwrap(), w).unwrap();
                        ensure!(d <= STATE_TOL, "{name}: client {} off by {d:.3e}", i + 1);
                    }
                    (g, _, _) => return Err(format!("{name} f={f}: client {} got {g:?}", i + 1)),
                }
            }
            if f {
                ensure!(sub.n_qubits() == 0, "{name}: qubits survived ERR");
            }
            rows += 1;
        }
    }
    Ok(format!("{rows} rows across Sbv, Sbb and Sn-bv match exactly"))
}

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.scn"))
}

fn cli_report(name: &str, seed: u64) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mcdqc"))
        .arg("run")
        .arg(scenario_path(name))
        .args(["--format", "machine", "--trials", &AC10_TRIALS.to_string(), "--seed", &seed.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "{name}: exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    Ok(out.stdout)
}

fn ac10_determinism() -> Outcome {
    let names = ["two_client_chain", "resident_chain", "swap_two_by_two", "bell_forward"];
    for name in names {
        let a = cli_report(name, 31)?;
        let b = cli_report(name, 31)?;
        ensure!(a == b, "{name}: two runs with seed 31 differ");
        ensure!(!a.is_empty(), "{name}: empty report");
        let mut file = mcdqc::harness::parse_scenario(&scenario_path(name)).map_err(|e| e.to_string())?;
        file.trials = AC10_TRIALS;
        let o = Overrides { seed: Some(31), ..Overrides::default() };
        let lib = run_trials(&file, &o).map_err(|e| e.to_string())?.to_machine();
        ensure!(lib.as_bytes() == a.as_slice(), "{name}: library and CLI reports differ");
    }
    let c = cli_report("swap_two_by_two", 32)?;
    ensure!(c != cli_report("swap_two_by_two", 31)?, "changing the seed left the report unchanged");
    Ok(format!("{} bundled scenarios, byte-identical machine reports across runs, CLI and library", names.len()))
}
