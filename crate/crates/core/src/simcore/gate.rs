use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

pub type C = Complex64;
pub type Mat2 = [[C; 2]; 2];
pub type Mat4 = [[C; 4]; 4];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateKind {
    Rx,
    Rz,
    X,
    H,
    Cnot,
    /// Flips the target when the control is |0⟩.
    InvCnot,
    Cz,
    Swap,
    /// `exp(-iθ SWAP/2) = cos(θ/2) I - i sin(θ/2) SWAP`.
    Pswap,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Rz | GateKind::X | GateKind::H => 1,
            _ => 2,
        }
    }

    /// Parametrized kinds are `exp(-iθΣ/2)` with an involutory generator Σ.
    pub fn is_parametrized(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Rz | GateKind::Pswap)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "RX",
            GateKind::Rz => "RZ",
            GateKind::X => "X",
            GateKind::H => "H",
            GateKind::Cnot => "CNOT",
            GateKind::InvCnot => "INV_CNOT",
            GateKind::Cz => "CZ",
            GateKind::Swap => "SWAP",
            GateKind::Pswap => "PSWAP",
        }
    }
}

/// One gate of a circuit block. `param` indexes the global parameter vector and
/// is present exactly for parametrized kinds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<usize>,
}

impl GateOp {
    pub fn new(kind: GateKind, targets: Vec<usize>, param: Option<usize>) -> Result<Self> {
        let op = Self {
            kind,
            targets,
            param,
        };
        op.check_shape()?;
        Ok(op)
    }

    pub fn fixed1(kind: GateKind, q: usize) -> Self {
        Self::new(kind, vec![q], None).expect("fixed single-qubit gate")
    }

    pub fn fixed2(kind: GateKind, a: usize, b: usize) -> Self {
        Self::new(kind, vec![a, b], None).expect("fixed two-qubit gate")
    }

    pub fn param1(kind: GateKind, q: usize, slot: usize) -> Self {
        Self::new(kind, vec![q], Some(slot)).expect("parametrized single-qubit gate")
    }

    pub fn param2(kind: GateKind, a: usize, b: usize, slot: usize) -> Self {
        Self::new(kind, vec![a, b], Some(slot)).expect("parametrized two-qubit gate")
    }

    fn check_shape(&self) -> Result<()> {
        if self.targets.len() != self.kind.arity() {
            return Err(contract(format!(
                "{} acts on {} qubit(s), got {:?}",
                self.kind.name(),
                self.kind.arity(),
                self.targets
            )));
        }
        if self.targets.len() == 2 && self.targets[0] == self.targets[1] {
            return Err(contract(format!(
                "{} targets must be distinct, got {:?}",
                self.kind.name(),
                self.targets
            )));
        }
        if self.kind.is_parametrized() != self.param.is_some() {
            return Err(contract(format!(
                "{} parameter slot presence mismatch",
                self.kind.name()
            )));
        }
        Ok(())
    }

    pub fn check_targets(&self, num_qubits: usize) -> Result<()> {
        self.check_shape()?;
        if let Some(&q) = self.targets.iter().find(|&&q| q >= num_qubits) {
            return Err(contract(format!(
                "{} target {q} out of range for {num_qubits} qubits",
                self.kind.name()
            )));
        }
        Ok(())
    }
}

/// Exact unitary of a gate. Two-qubit matrices use the local index
/// `bit(targets[0]) | bit(targets[1]) << 1`; for CNOT-type gates
/// `targets[0]` is the control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateMatrix {
    One(Mat2),
    Two(Mat4),
}

impl GateMatrix {
    pub fn dim(&self) -> usize {
        match self {
            GateMatrix::One(_) => 2,
            GateMatrix::Two(_) => 4,
        }
    }

    pub fn entry(&self, r: usize, c: usize) -> C {
        match self {
            GateMatrix::One(m) => m[r][c],
            GateMatrix::Two(m) => m[r][c],
        }
    }
}

pub fn rx(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]]
}

pub fn rz(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C::new(c, -s), ZERO], [ZERO, C::new(c, s)]]
}

pub fn hadamard() -> Mat2 {
    let h = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

pub fn pauli_x() -> Mat2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub fn gate_matrix(kind: GateKind, theta: Option<f64>) -> Result<GateMatrix> {
    if kind.is_parametrized() != theta.is_some() {
        return Err(contract(format!(
            "{} {} an angle",
            kind.name(),
            if kind.is_parametrized() {
                "requires"
            } else {
                "does not take"
            }
        )));
    }
    let mut m4 = [[ZERO; 4]; 4];
    let m = match kind {
        GateKind::Rx => GateMatrix::One(rx(theta.unwrap())),
        GateKind::Rz => GateMatrix::One(rz(theta.unwrap())),
        GateKind::X => GateMatrix::One(pauli_x()),
        GateKind::H => GateMatrix::One(hadamard()),
        GateKind::Cnot => {
            // control bit 0, target bit 1
            for l in 0..4 {
                let out = if l & 1 == 1 { l ^ 2 } else { l };
                m4[out][l] = ONE;
            }
            GateMatrix::Two(m4)
        }
        GateKind::InvCnot => {
            for l in 0..4 {
                let out = if l & 1 == 0 { l ^ 2 } else { l };
                m4[out][l] = ONE;
            }
            GateMatrix::Two(m4)
        }
        GateKind::Cz => {
            for (l, row) in m4.iter_mut().enumerate() {
                row[l] = if l == 3 { -ONE } else { ONE };
            }
            GateMatrix::Two(m4)
        }
        GateKind::Swap => {
            for l in 0..4 {
                let out = ((l & 1) << 1) | (l >> 1);
                m4[out][l] = ONE;
            }
            GateMatrix::Two(m4)
        }
        GateKind::Pswap => {
            let (s, c) = (theta.unwrap() / 2.0).sin_cos();
            let diag = C::new(c, -s);
            m4[0][0] = diag;
            m4[3][3] = diag;
            m4[1][1] = C::new(c, 0.0);
            m4[2][2] = C::new(c, 0.0);
            m4[1][2] = C::new(0.0, -s);
            m4[2][1] = C::new(0.0, -s);
            GateMatrix::Two(m4)
        }
    };
    Ok(m)
}
