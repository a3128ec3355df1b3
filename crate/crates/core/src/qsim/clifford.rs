use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use super::matrix::{embed, is_unitary, Mat, C64};
use super::{tol, Coins, GateKind, PauliString, QsimError};

pub const CLIFFORD_1_ORDER: usize = 24;
pub const CLIFFORD_2_ORDER: usize = 11520;

/// A Clifford unitary, stored with its global phase fixed so that the first
/// non-negligible entry (column-major) is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordElement {
    n: usize,
    matrix: Mat,
    index: Option<usize>,
}

struct Group {
    elements: Vec<CliffordElement>,
    by_fingerprint: HashMap<Vec<i64>, usize>,
}

static GROUP_1: OnceLock<Group> = OnceLock::new();
static GROUP_2: OnceLock<Group> = OnceLock::new();

fn normalize_phase(m: &Mat) -> Mat {
    match m.iter().find(|z| z.norm() > 1e-6) {
        Some(z) => m * (z.conj() / z.norm()),
        None => m.clone(),
    }
}

/// Phase-normalized entries rounded to a 1e-6 grid.
fn fingerprint(normalized: &Mat) -> Vec<i64> {
    normalized.iter().flat_map(|z| [(z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64]).collect()
}

fn generators(n: usize) -> Vec<Mat> {
    let h = GateKind::H.matrix();
    let s = GateKind::S.matrix();
    match n {
        1 => vec![h, s],
        _ => {
            let id = Mat::identity(2, 2);
            vec![h.kronecker(&id), id.kronecker(&h), s.kronecker(&id), id.kronecker(&s), GateKind::Cnot.matrix()]
        }
    }
}

/// Closure of the generator set, breadth first from the identity. Discovery
/// order is the canonical index order.
fn build_group(n: usize) -> Group {
    let dim = 1usize << n;
    let gens = generators(n);
    let mut elements = Vec::new();
    let mut by_fingerprint = HashMap::new();
    let mut queue = VecDeque::new();
    let id = Mat::identity(dim, dim);
    by_fingerprint.insert(fingerprint(&id), 0);
    elements.push(CliffordElement { n, matrix: id.clone(), index: Some(0) });
    queue.push_back(id);
    while let Some(u) = queue.pop_front() {
        for g in &gens {
            let v = normalize_phase(&(g * &u));
            let fp = fingerprint(&v);
            if by_fingerprint.contains_key(&fp) {
                continue;
            }
            let index = elements.len();
            by_fingerprint.insert(fp, index);
            elements.push(CliffordElement { n, matrix: v.clone(), index: Some(index) });
            queue.push_back(v);
        }
    }
    Group { elements, by_fingerprint }
}

fn group(n: usize) -> Result<&'static Group, QsimError> {
    match n {
        1 => Ok(GROUP_1.get_or_init(|| build_group(1))),
        2 => Ok(GROUP_2.get_or_init(|| build_group(2))),
        _ => Err(QsimError::UnsupportedCliffordSize(n)),
    }
}

/// The whole Clifford group on `n <= 2` qubits (modulo phase), in canonical index order.
pub fn enumerate_clifford(n: usize) -> Result<&'static [CliffordElement], QsimError> {
    Ok(&group(n)?.elements)
}

/// Uniform element of the Clifford group on `n <= 2` qubits.
pub fn sample_clifford(n: usize, coins: &mut (impl Coins + ?Sized)) -> Result<CliffordElement, QsimError> {
    let g = group(n)?;
    Ok(g.elements[coins.uniform(g.elements.len())].clone())
}

/// Clifford on `n` qubits built from a random walk of uniform two-qubit
/// Cliffords on random qubit pairs. Converges to uniform exponentially in
/// `layers`; used only where exact enumeration is out of reach.
pub fn sample_clifford_walk(
    n: usize,
    layers: usize,
    coins: &mut (impl Coins + ?Sized),
) -> Result<CliffordElement, QsimError> {
    if n <= 2 {
        return sample_clifford(n.max(1), coins);
    }
    let dim = 1usize << n;
    let mut u = Mat::identity(dim, dim);
    for _ in 0..layers {
        let a = coins.uniform(n);
        let mut b = coins.uniform(n - 1);
        if b >= a {
            b += 1;
        }
        let c = sample_clifford(2, coins)?;
        u = embed(&c.matrix, &[a, b], n) * u;
    }
    Ok(CliffordElement { n, matrix: normalize_phase(&u), index: None })
}

impl CliffordElement {
    pub fn identity(n: usize) -> Self {
        let dim = 1usize << n;
        let index = if n <= 2 { Some(0) } else { None };
        Self { n, matrix: Mat::identity(dim, dim), index }
    }

    /// Wraps a dense matrix after checking unitarity and the Clifford property.
    pub fn from_matrix(matrix: Mat) -> Result<Self, QsimError> {
        if !matrix.nrows().is_power_of_two() || !is_unitary(&matrix, tol::STRUCTURAL) {
            return Err(QsimError::InvalidMatrix("not unitary".into()));
        }
        let n = matrix.nrows().trailing_zeros() as usize;
        let matrix = normalize_phase(&matrix);
        let mut el = Self { n, matrix, index: None };
        for k in 0..n {
            for p in ["X", "Z"] {
                let mut letters = vec![super::Pauli::I; n];
                letters[k] = p.parse::<PauliString>().unwrap().letters()[0];
                if el.conjugate_pauli(&PauliString::new(letters)).is_none() {
                    return Err(QsimError::InvalidMatrix("not a Clifford".into()));
                }
            }
        }
        el.index = el.lookup_index();
        Ok(el)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    /// Canonical index for `n <= 2`.
    pub fn index(&self) -> Option<usize> {
        self.index
    }

    pub fn is_identity(&self) -> bool {
        let dim = self.matrix.nrows();
        (&self.matrix - Mat::identity(dim, dim)).iter().all(|z| z.norm() < tol::STRUCTURAL)
    }

    fn lookup_index(&self) -> Option<usize> {
        let g = group(self.n).ok()?;
        g.by_fingerprint.get(&fingerprint(&self.matrix)).copied()
    }

    pub fn inverse(&self) -> CliffordElement {
        let mut inv = CliffordElement { n: self.n, matrix: normalize_phase(&self.matrix.adjoint()), index: None };
        inv.index = inv.lookup_index();
        inv
    }

    /// `other` applied after `self`.
    pub fn then(&self, other: &CliffordElement) -> CliffordElement {
        assert_eq!(self.n, other.n);
        let mut c =
            CliffordElement { n: self.n, matrix: normalize_phase(&(&other.matrix * &self.matrix)), index: None };
        c.index = c.lookup_index();
        c
    }

    /// `U P U^dagger` as a signed Pauli string, or `None` if the result is not
    /// a single Pauli (which cannot happen for a genuine Clifford).
    pub fn conjugate_pauli(&self, p: &PauliString) -> Option<PauliString> {
        assert_eq!(p.len(), self.n);
        let m = &self.matrix * p.matrix() * self.matrix.adjoint();
        let scale = 1.0 / (1usize << self.n) as f64;
        let mut found = None;
        for q in PauliString::all(self.n) {
            // tr(Q^dagger M) / 2^n; unsigned Paulis are Hermitian
            let c: C64 = (q.matrix() * &m).trace() * scale;
            if c.norm() < 1e-9 {
                continue;
            }
            if found.is_some() || (c.norm() - 1.0).abs() > 1e-9 {
                return None;
            }
            let phase = if (c.re - 1.0).abs() < 1e-9 {
                0
            } else if (c.im - 1.0).abs() < 1e-9 {
                1
            } else if (c.re + 1.0).abs() < 1e-9 {
                2
            } else {
                3
            };
            found = Some(PauliString::with_phase(q.letters().to_vec(), phase));
        }
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn group_orders() {
        assert_eq!(enumerate_clifford(1).unwrap().len(), CLIFFORD_1_ORDER);
        assert_eq!(enumerate_clifford(2).unwrap().len(), CLIFFORD_2_ORDER);
        assert!(matches!(enumerate_clifford(3), Err(QsimError::UnsupportedCliffordSize(3))));
    }

    #[test]
    fn identity_sits_at_index_zero() {
        for n in 1..=2 {
            let g = enumerate_clifford(n).unwrap();
            assert!(g[0].is_identity());
            assert_eq!(g[0].index(), Some(0));
        }
    }

    #[test]
    fn conjugating_x_yields_a_signed_pauli() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let c = sample_clifford(1, &mut rng).unwrap();
            let out = c.conjugate_pauli(&"X".parse().unwrap()).unwrap();
            assert!(!out.is_identity());
            assert!(out.phase() == 0 || out.phase() == 2);
        }
    }

    #[test]
    fn every_two_qubit_element_is_clifford() {
        for c in enumerate_clifford(2).unwrap().iter().step_by(97) {
            assert!(is_unitary(c.matrix(), 1e-10));
            for p in PauliString::non_identity(2) {
                assert!(c.conjugate_pauli(&p).is_some());
            }
        }
    }

    #[test]
    fn inverse_and_lookup() {
        let g = enumerate_clifford(2).unwrap();
        let c = &g[4321];
        let inv = c.inverse();
        assert!(inv.index().is_some());
        assert!(c.then(&inv).is_identity());
        assert_eq!(CliffordElement::from_matrix(c.matrix().clone()).unwrap().index(), Some(4321));
    }

    #[test]
    fn non_clifford_is_rejected() {
        assert!(CliffordElement::from_matrix(GateKind::T.matrix()).is_err());
    }

    #[test]
    fn walk_sampler_produces_cliffords() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = sample_clifford_walk(3, 12, &mut rng).unwrap();
        assert!(is_unitary(c.matrix(), 1e-10));
        assert!(c.conjugate_pauli(&"XIZ".parse().unwrap()).is_some());
        assert_eq!(c.index(), None);
    }
}
