use super::matrix::{embed, is_unitary, Mat};
use super::{tol, GateList, QsimError, QubitId, Substrate};

/// One step of a [`Circuit`].
#[derive(Debug, Clone, PartialEq)]
pub enum CircuitOp {
    Gates(GateList),
    /// Dense unitary on the listed register positions.
    Dense {
        matrix: Mat,
        targets: Vec<usize>,
    },
}

/// A unitary program on a fixed-width register, mixing named gates with
/// dense blocks (key Cliffords, tamper unitaries).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    width: usize,
    ops: Vec<CircuitOp>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Self { width, ops: Vec::new() }
    }

    pub fn from_gates(width: usize, gates: GateList) -> Result<Self, QsimError> {
        let mut c = Self::new(width);
        c.push_gates(gates)?;
        Ok(c)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn ops(&self) -> &[CircuitOp] {
        &self.ops
    }

    pub fn push_gates(&mut self, gates: GateList) -> Result<(), QsimError> {
        if gates.min_width() > self.width {
            return Err(QsimError::TargetOutOfRange { index: gates.min_width() - 1, width: self.width });
        }
        if !gates.is_empty() {
            self.ops.push(CircuitOp::Gates(gates));
        }
        Ok(())
    }

    pub fn push_dense(&mut self, matrix: Mat, targets: Vec<usize>) -> Result<(), QsimError> {
        if let Some(&bad) = targets.iter().find(|&&t| t >= self.width) {
            return Err(QsimError::TargetOutOfRange { index: bad, width: self.width });
        }
        for (k, t) in targets.iter().enumerate() {
            if targets[..k].contains(t) {
                return Err(QsimError::DuplicateTarget(*t));
            }
        }
        if matrix.nrows() != 1 << targets.len() || !is_unitary(&matrix, tol::STRUCTURAL) {
            return Err(QsimError::InvalidMatrix("dense step is not a unitary on its targets".into()));
        }
        self.ops.push(CircuitOp::Dense { matrix, targets });
        Ok(())
    }

    /// Appends `other`, whose register position `k` is this circuit's position `map[k]`.
    pub fn append_mapped(&mut self, other: &Circuit, map: &[usize]) -> Result<(), QsimError> {
        if map.len() != other.width {
            return Err(QsimError::LengthMismatch { expected: other.width, got: map.len() });
        }
        for op in &other.ops {
            match op {
                CircuitOp::Gates(g) => {
                    for gate in g.gates() {
                        let targets: Vec<usize> = gate.targets().iter().map(|&t| map[t]).collect();
                        self.push_dense(gate.kind().matrix(), targets)?;
                    }
                }
                CircuitOp::Dense { matrix, targets } => {
                    self.push_dense(matrix.clone(), targets.iter().map(|&t| map[t]).collect())?;
                }
            }
        }
        Ok(())
    }

    /// Number of elementary steps: each named gate and each dense block counts once.
    pub fn gate_count(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op {
                CircuitOp::Gates(g) => g.len(),
                CircuitOp::Dense { .. } => 1,
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn apply(&self, s: &mut Substrate, register: &[QubitId]) -> Result<(), QsimError> {
        if register.len() != self.width {
            return Err(QsimError::LengthMismatch { expected: self.width, got: register.len() });
        }
        for op in &self.ops {
            match op {
                CircuitOp::Gates(g) => s.apply_gates(g, register)?,
                CircuitOp::Dense { matrix, targets } => {
                    let qs: Vec<QubitId> = targets.iter().map(|&t| register[t]).collect();
                    s.apply_unitary(matrix, &qs)?;
                }
            }
        }
        Ok(())
    }

    pub fn dense(&self) -> Mat {
        let dim = 1usize << self.width;
        let mut u = Mat::identity(dim, dim);
        for op in &self.ops {
            u = match op {
                CircuitOp::Gates(g) => g.dense(self.width).expect("width checked on push") * u,
                CircuitOp::Dense { matrix, targets } => embed(matrix, targets, self.width) * u,
            };
        }
        u
    }
}
