use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{tol, QsimError};

pub type C64 = Complex64;
/// Dense complex matrix. Qubit 0 is the most significant tensor factor.
pub type Mat = DMatrix<C64>;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// A density matrix over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    m: Mat,
}

impl DensityMatrix {
    /// Wraps a square matrix whose side is a power of two. Only the shape is checked here;
    /// call [`DensityMatrix::validate`] for the physical invariants.
    pub fn from_matrix(m: Mat) -> Result<Self, QsimError> {
        let dim = m.nrows();
        if dim != m.ncols() || !dim.is_power_of_two() {
            return Err(QsimError::InvalidMatrix(format!(
                "expected a square power-of-two matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self { n_qubits: dim.trailing_zeros() as usize, m })
    }

    /// The 1x1 matrix `[1]`, i.e. the state of zero qubits.
    pub fn scalar_one() -> Self {
        Self { n_qubits: 0, m: Mat::from_element(1, 1, ONE) }
    }

    pub fn from_pure(amplitudes: &[C64]) -> Result<Self, QsimError> {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        let norm = v.norm();
        if (norm - 1.0).abs() > tol::STRUCTURAL {
            return Err(QsimError::NotNormalized { trace: norm * norm });
        }
        Self::from_matrix(&v * v.adjoint())
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1 << n_qubits;
        let mut m = Mat::zeros(dim, dim);
        m[(index, index)] = ONE;
        Self { n_qubits, m }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self { n_qubits, m: Mat::identity(dim, dim) / C64::from(dim as f64) }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn into_matrix(self) -> Mat {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix { n_qubits: self.n_qubits + other.n_qubits, m: self.m.kronecker(&other.m) }
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.m.iter().zip(other.m.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &DensityMatrix, tolerance: f64) -> bool {
        self.max_abs_diff(other) <= tolerance
    }

    /// Checks Hermiticity, unit trace and positivity.
    pub fn validate(&self) -> Result<(), QsimError> {
        let herm = self.m.iter().zip(self.m.adjoint().iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if herm > tol::STRUCTURAL {
            return Err(QsimError::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.m.trace();
        if (tr.re - 1.0).abs() > tol::STRUCTURAL || tr.im.abs() > tol::STRUCTURAL {
            return Err(QsimError::NotNormalized { trace: tr.re });
        }
        let min_eig = hermitian_eigenvalues(&self.m).into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -tol::PSD {
            return Err(QsimError::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(())
    }

    /// `U rho U^dagger` for a unitary over all qubits.
    pub fn conjugated(&self, u: &Mat) -> DensityMatrix {
        DensityMatrix { n_qubits: self.n_qubits, m: u * &self.m * u.adjoint() }
    }

    /// Applies `u` to the listed tensor positions in place.
    pub fn conjugate_positions(&mut self, u: &Mat, positions: &[usize]) {
        conjugate_in_place(&mut self.m, self.n_qubits, positions, u);
    }

    /// Reduced state over `keep`, in the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> DensityMatrix {
        DensityMatrix { n_qubits: keep.len(), m: partial_trace(&self.m, self.n_qubits, keep) }
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Mat {
        &mut self.m
    }
}

/// `(1/2) * sum |eig(a - b)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, QsimError> {
    if a.dim() != b.dim() {
        return Err(QsimError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(0.5 * trace_norm(&(a.matrix() - b.matrix())))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(h: &Mat) -> f64 {
    hermitian_eigenvalues(h).into_iter().map(f64::abs).sum()
}

pub fn hermitian_eigenvalues(h: &Mat) -> Vec<f64> {
    if h.nrows() == 1 {
        return vec![h[(0, 0)].re];
    }
    // symmetrize so round-off never breaks the Hermitian solver
    let sym = (h + h.adjoint()) * C64::from(0.5);
    sym.symmetric_eigenvalues().iter().copied().collect()
}

pub fn is_unitary(u: &Mat, tolerance: f64) -> bool {
    if u.nrows() != u.ncols() {
        return false;
    }
    let prod = u * u.adjoint();
    let id = Mat::identity(u.nrows(), u.ncols());
    prod.iter().zip(id.iter()).all(|(a, b)| (a - b).norm() <= tolerance)
}

/// Bit offset within a basis index for every sub-index of a `positions.len()`-qubit operator.
fn offsets(n_qubits: usize, positions: &[usize]) -> Vec<usize> {
    let k = positions.len();
    (0..1usize << k)
        .map(|a| {
            positions
                .iter()
                .enumerate()
                .filter(|(j, _)| (a >> (k - 1 - j)) & 1 == 1)
                .map(|(_, &p)| 1usize << (n_qubits - 1 - p))
                .sum()
        })
        .collect()
}

/// All basis indices whose bits at `positions` are zero.
fn bases(n_qubits: usize, positions: &[usize]) -> Vec<usize> {
    let mask: usize = positions.iter().map(|&p| 1usize << (n_qubits - 1 - p)).sum();
    (0..1usize << n_qubits).filter(|i| i & mask == 0).collect()
}

/// `m <- U m U^dagger` with `U` acting on `positions` of an `n_qubits` register.
pub(crate) fn conjugate_in_place(m: &mut Mat, n_qubits: usize, positions: &[usize], u: &Mat) {
    let dim = 1usize << n_qubits;
    let k = positions.len();
    let sub = 1usize << k;
    debug_assert_eq!(u.nrows(), sub);
    let off = offsets(n_qubits, positions);
    let base = bases(n_qubits, positions);
    let mut buf = vec![ZERO; sub];
    let uv: Vec<C64> = (0..sub * sub).map(|i| u[(i / sub, i % sub)]).collect();
    let data = m.as_mut_slice();
    // column-major: element (r, c) lives at c * dim + r
    // left multiply: rows
    for c in 0..dim {
        let col = c * dim;
        for &b in &base {
            for a in 0..sub {
                buf[a] = data[col + (b | off[a])];
            }
            for a in 0..sub {
                let mut acc = ZERO;
                for (x, v) in buf.iter().enumerate() {
                    acc += uv[a * sub + x] * v;
                }
                data[col + (b | off[a])] = acc;
            }
        }
    }
    // right multiply by U^dagger: columns
    for r in 0..dim {
        for &b in &base {
            for a in 0..sub {
                buf[a] = data[(b | off[a]) * dim + r];
            }
            for a in 0..sub {
                let mut acc = ZERO;
                for (x, v) in buf.iter().enumerate() {
                    acc += v * uv[a * sub + x].conj();
                }
                data[(b | off[a]) * dim + r] = acc;
            }
        }
    }
}

pub(crate) fn partial_trace(m: &Mat, n_qubits: usize, keep: &[usize]) -> Mat {
    let traced: Vec<usize> = (0..n_qubits).filter(|p| !keep.contains(p)).collect();
    let keep_off = offsets(n_qubits, keep);
    let trace_off = offsets(n_qubits, &traced);
    let dk = keep_off.len();
    let mut out = Mat::zeros(dk, dk);
    for r in 0..dk {
        for c in 0..dk {
            let mut acc = ZERO;
            for &t in &trace_off {
                acc += m[(keep_off[r] | t, keep_off[c] | t)];
            }
            out[(r, c)] = acc;
        }
    }
    out
}

/// Dense expansion of `u` acting on `positions` of an `n_qubits` register.
pub fn embed(u: &Mat, positions: &[usize], n_qubits: usize) -> Mat {
    let dim = 1usize << n_qubits;
    let off = offsets(n_qubits, positions);
    let base = bases(n_qubits, positions);
    let mut out = Mat::zeros(dim, dim);
    for &b in &base {
        for (a, &oa) in off.iter().enumerate() {
            for (x, &ox) in off.iter().enumerate() {
                out[(b | oa, b | ox)] = u[(a, x)];
            }
        }
    }
    out
}
