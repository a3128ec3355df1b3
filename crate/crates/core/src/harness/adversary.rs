use std::collections::BTreeSet;
use std::fmt;

use crate::acframe::World;
use crate::dqc::{AttackPoint, DqcError, Server, Verdict};
use crate::qsim::{Mat, PauliString, QubitId};

/// Where a tampering strategy strikes.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Every session and every channel use.
    All,
    Sessions,
    /// Blocks in transit: routed common qubits, resident blocks, uploads and downloads.
    Channels,
    Point(AttackPoint),
}

impl Target {
    fn hits(&self, point: &AttackPoint) -> bool {
        match self {
            Target::All => true,
            Target::Sessions => matches!(point, AttackPoint::Session { .. }),
            Target::Channels => !matches!(point, AttackPoint::Session { .. }),
            Target::Point(p) => p == point,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::All => write!(f, "all"),
            Target::Sessions => write!(f, "sessions"),
            Target::Channels => write!(f, "channels"),
            Target::Point(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PauliChoice {
    /// Acts on the leading qubits of the block in group order.
    Fixed(PauliString),
    /// A uniformly random non-identity Pauli on the whole block.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrategyKind {
    Honest,
    /// Makes the delegation of `client` in `round` fail.
    AbortFlip {
        round: usize,
        client: usize,
    },
    PauliTamper {
        target: Target,
        pauli: PauliChoice,
        probability: f64,
    },
    /// A dense unitary on the leading qubits of the block in group order.
    UnitaryTamper {
        target: Target,
        matrix: Mat,
    },
    /// Measures the whole block in the computational basis and passes it on.
    MeasureResend {
        target: Target,
    },
}

/// A named server behaviour. Each session and each channel use is attacked
/// at most once per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryStrategy {
    pub name: String,
    pub kind: StrategyKind,
}

impl AdversaryStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        let name = match &kind {
            StrategyKind::Honest => "honest".to_string(),
            StrategyKind::AbortFlip { round, client } => format!("abort-flip r{round} c{client}"),
            StrategyKind::PauliTamper { target, pauli, probability } => {
                let p = match pauli {
                    PauliChoice::Fixed(p) => p.to_string(),
                    PauliChoice::Uniform => "uniform".into(),
                };
                format!("pauli-tamper {target} {p} p={probability}")
            }
            StrategyKind::UnitaryTamper { target, .. } => format!("unitary-tamper {target}"),
            StrategyKind::MeasureResend { target } => format!("measure-resend {target}"),
        };
        Self { name, kind }
    }

    pub fn honest() -> Self {
        Self::new(StrategyKind::Honest)
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    /// A fresh per-trial server following this strategy.
    pub fn server(&self, traps: usize) -> Adversary<'_> {
        Adversary { strategy: self, traps, used: BTreeSet::new(), attacks: 0 }
    }
}

/// Per-trial state of a strategy.
pub struct Adversary<'a> {
    strategy: &'a AdversaryStrategy,
    traps: usize,
    used: BTreeSet<AttackPoint>,
    attacks: usize,
}

impl Adversary<'_> {
    /// Number of attacks carried out so far.
    pub fn attacks(&self) -> usize {
        self.attacks
    }

    /// Block positions in group order: message 0 with its traps, message 1 with its traps, ...
    fn group_order(&self, len: usize) -> Vec<usize> {
        let t = self.traps;
        if !len.is_multiple_of(1 + t) {
            return (0..len).collect();
        }
        let m = len / (1 + t);
        (0..m).flat_map(|j| std::iter::once(j).chain((0..t).map(move |k| m + j * t + k))).collect()
    }

    fn tamper(
        &mut self,
        world: &mut World<'_>,
        point: AttackPoint,
        block: Option<&[QubitId]>,
    ) -> Result<Verdict, DqcError> {
        let (target, probability) = match &self.strategy.kind {
            StrategyKind::Honest | StrategyKind::AbortFlip { .. } => return Ok(Verdict::Proceed),
            StrategyKind::PauliTamper { target, probability, .. } => (target, *probability),
            StrategyKind::UnitaryTamper { target, .. } | StrategyKind::MeasureResend { target } => (target, 1.0),
        };
        if !target.hits(&point) || self.used.contains(&point) {
            return Ok(Verdict::Proceed);
        }
        if probability < 1.0 && world.coins.weighted(&[probability, 1.0 - probability]) != 0 {
            return Ok(Verdict::Proceed);
        }
        self.used.insert(point);
        self.attacks += 1;
        let Some(block) = block else {
            // an ideal resource only lets the server set its error bit
            return Ok(Verdict::Abort);
        };
        let order = self.group_order(block.len());
        let lead = |k: usize| -> Result<Vec<QubitId>, DqcError> {
            if k > block.len() {
                return Err(DqcError::Malformed(format!("{k}-qubit attack on a {}-qubit block", block.len())));
            }
            Ok(order[..k].iter().map(|&p| block[p]).collect())
        };
        match &self.strategy.kind {
            StrategyKind::PauliTamper { pauli: PauliChoice::Fixed(p), .. } => {
                world.substrate.apply_pauli(p, &lead(p.len())?)?
            }
            StrategyKind::PauliTamper { pauli: PauliChoice::Uniform, .. } => {
                let p = PauliString::random_non_identity(block.len(), world.coins);
                world.substrate.apply_pauli(&p, block)?;
            }
            StrategyKind::UnitaryTamper { matrix, .. } => {
                let k = matrix.nrows().trailing_zeros() as usize;
                world.substrate.apply_unitary(matrix, &lead(k)?)?;
            }
            StrategyKind::MeasureResend { .. } => {
                world.substrate.measure_computational(block, world.coins)?;
            }
            StrategyKind::Honest | StrategyKind::AbortFlip { .. } => {}
        }
        Ok(Verdict::Proceed)
    }
}

impl Server for Adversary<'_> {
    fn session(
        &mut self,
        world: &mut World<'_>,
        point: AttackPoint,
        block: Option<&[QubitId]>,
    ) -> Result<Verdict, DqcError> {
        if let StrategyKind::AbortFlip { round, client } = self.strategy.kind {
            if point == (AttackPoint::Session { client, round }) && self.used.insert(point) {
                self.attacks += 1;
                return Ok(Verdict::Abort);
            }
            return Ok(Verdict::Proceed);
        }
        self.tamper(world, point, block)
    }

    fn transit(&mut self, world: &mut World<'_>, point: AttackPoint, block: &[QubitId]) -> Result<Verdict, DqcError> {
        self.tamper(world, point, Some(block))
    }
}
