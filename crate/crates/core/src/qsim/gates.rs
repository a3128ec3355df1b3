use std::fmt;
use std::str::FromStr;

use super::matrix::{embed, Mat, C64, ONE, ZERO};
use super::QsimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    I,
    X,
    Y,
    Z,
    H,
    S,
    T,
    Cnot,
    Cz,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::I => "I",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::T => "T",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
        }
    }

    pub fn matrix(self) -> Mat {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let i = C64::new(0.0, 1.0);
        let m2 = |v: [C64; 4]| Mat::from_row_slice(2, 2, &v);
        match self {
            GateKind::I => Mat::identity(2, 2),
            GateKind::X => m2([ZERO, ONE, ONE, ZERO]),
            GateKind::Y => m2([ZERO, -i, i, ZERO]),
            GateKind::Z => m2([ONE, ZERO, ZERO, -ONE]),
            GateKind::H => m2([C64::from(s), C64::from(s), C64::from(s), C64::from(-s)]),
            GateKind::S => m2([ONE, ZERO, ZERO, i]),
            GateKind::T => m2([ONE, ZERO, ZERO, C64::new(s, s)]),
            GateKind::Cnot => {
                let mut m = Mat::zeros(4, 4);
                for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                    m[(r, c)] = ONE;
                }
                m
            }
            GateKind::Cz => {
                let mut m = Mat::identity(4, 4);
                m[(3, 3)] = -ONE;
                m
            }
        }
    }

    /// The same inverse expressed in this alphabet: S^-1 = S^3, T^-1 = T^7.
    fn inverse_power(self) -> usize {
        match self {
            GateKind::S => 3,
            GateKind::T => 7,
            _ => 1,
        }
    }
}

impl FromStr for GateKind {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "I" => GateKind::I,
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "H" => GateKind::H,
            "S" => GateKind::S,
            "T" => GateKind::T,
            "CNOT" | "CX" => GateKind::Cnot,
            "CZ" => GateKind::Cz,
            _ => return Err(QsimError::UnknownGate(s.to_string())),
        })
    }
}

/// A gate on local register indices. For CNOT the first index is the control.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Result<Self, QsimError> {
        if targets.len() != kind.arity() {
            return Err(QsimError::ArityMismatch { gate: kind.name(), expected: kind.arity(), got: targets.len() });
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(QsimError::DuplicateTarget(targets[0]));
        }
        Ok(Self { kind, targets })
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        for t in &self.targets {
            write!(f, " {t}")?;
        }
        Ok(())
    }
}

/// An ordered list of gates over a local register.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GateList {
    gates: Vec<Gate>,
}

impl GateList {
    pub fn new(gates: Vec<Gate>) -> Self {
        Self { gates }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(kind: GateKind, targets: &[usize]) -> Result<Self, QsimError> {
        Ok(Self { gates: vec![Gate::new(kind, targets.to_vec())?] })
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Smallest register the list fits on.
    pub fn min_width(&self) -> usize {
        self.gates.iter().flat_map(|g| g.targets.iter()).map(|t| t + 1).max().unwrap_or(0)
    }

    pub fn inverse(&self) -> GateList {
        let mut gates = Vec::new();
        for g in self.gates.iter().rev() {
            for _ in 0..g.kind.inverse_power() {
                gates.push(g.clone());
            }
        }
        GateList { gates }
    }

    /// The unitary of the whole list on a `width`-qubit register.
    pub fn dense(&self, width: usize) -> Result<Mat, QsimError> {
        if self.min_width() > width {
            return Err(QsimError::TargetOutOfRange { index: self.min_width() - 1, width });
        }
        let dim = 1usize << width;
        let mut u = Mat::identity(dim, dim);
        for g in &self.gates {
            u = embed(&g.kind.matrix(), &g.targets, width) * u;
        }
        Ok(u)
    }
}

impl fmt::Display for GateList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.gates.iter().map(Gate::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

impl FromStr for GateList {
    type Err = QsimError;

    /// Parses `"H 0; CNOT 0 1"`. An empty string or `"id"` is the empty list.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut gates = Vec::new();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("id") {
                continue;
            }
            let mut tokens = part.split_whitespace();
            let kind: GateKind = tokens.next().unwrap_or_default().parse()?;
            let targets = tokens
                .map(|t| t.parse::<usize>().map_err(|_| QsimError::UnknownGate(part.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            gates.push(Gate::new(kind, targets)?);
        }
        Ok(GateList { gates })
    }
}
