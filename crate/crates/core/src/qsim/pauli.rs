use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use super::matrix::{Mat, C64};
use super::{Coins, GateKind, QsimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// (x, z) symplectic bits.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn matrix(self) -> Mat {
        match self {
            Pauli::I => GateKind::I.matrix(),
            Pauli::X => GateKind::X.matrix(),
            Pauli::Y => GateKind::Y.matrix(),
            Pauli::Z => GateKind::Z.matrix(),
        }
    }

    /// `self * other = i^k * result`.
    fn product(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A signed Pauli operator `i^phase * P_0 (x) P_1 (x) ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
    phase: u8,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters, phase: 0 }
    }

    pub fn with_phase(letters: Vec<Pauli>, phase: u8) -> Self {
        Self { letters, phase: phase % 4 }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![Pauli::I; n])
    }

    /// Index `k` in `0..4^n`, two bits per qubit with qubit 0 most significant.
    pub fn from_index(n: usize, k: usize) -> Self {
        let letters = (0..n).map(|q| Pauli::ALL[(k >> (2 * (n - 1 - q))) & 3]).collect();
        Self::new(letters)
    }

    /// Every unsigned Pauli string on `n` qubits, identity first.
    pub fn all(n: usize) -> impl Iterator<Item = PauliString> {
        (0..1usize << (2 * n)).map(move |k| Self::from_index(n, k))
    }

    /// The `4^n - 1` non-identity strings.
    pub fn non_identity(n: usize) -> impl Iterator<Item = PauliString> {
        Self::all(n).skip(1)
    }

    pub fn random(n: usize, coins: &mut (impl Coins + ?Sized)) -> Self {
        Self::from_index(n, coins.uniform(1 << (2 * n)))
    }

    pub fn random_non_identity(n: usize, coins: &mut (impl Coins + ?Sized)) -> Self {
        Self::from_index(n, 1 + coins.uniform((1 << (2 * n)) - 1))
    }

    /// Builds `prod_j X^{x_j} Z^{z_j}` with the phase dropped.
    pub fn from_xz(x: &[bool], z: &[bool]) -> Self {
        Self::new(x.iter().zip(z).map(|(&a, &b)| Pauli::from_bits(a, b)).collect())
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn phase_factor(&self) -> C64 {
        [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][self.phase as usize]
    }

    /// Dense matrix including the phase.
    pub fn matrix(&self) -> Mat {
        let mut m = Mat::identity(1, 1);
        for p in &self.letters {
            m = m.kronecker(&p.matrix());
        }
        m * self.phase_factor()
    }
}

impl Mul for &PauliString {
    type Output = PauliString;

    fn mul(self, rhs: &PauliString) -> PauliString {
        assert_eq!(self.len(), rhs.len(), "Pauli strings of different lengths");
        let mut phase = self.phase + rhs.phase;
        let letters = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .map(|(&a, &b)| {
                let (k, p) = a.product(b);
                phase += k;
                p
            })
            .collect();
        PauliString::with_phase(letters, phase)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = ["", "i", "-", "-i"][self.phase as usize];
        write!(f, "{sign}")?;
        for p in &self.letters {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = QsimError;

    /// Parses strings such as `XIZ`, `-iYY` or `X I Z`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (phase, body) = if let Some(rest) = compact.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = compact.strip_prefix('-') {
            (2, rest)
        } else if let Some(rest) = compact.strip_prefix('i') {
            (1, rest)
        } else {
            (0, compact.strip_prefix('+').unwrap_or(&compact))
        };
        let letters = body
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(QsimError::InvalidPauli(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if letters.is_empty() {
            return Err(QsimError::InvalidPauli(s.to_string()));
        }
        Ok(PauliString::with_phase(letters, phase))
    }
}
