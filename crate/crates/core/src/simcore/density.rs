//! Density matrices stored as a vectorized `2n`-qubit amplitude array:
//! entry `ρ[r][c]` lives at index `r | c << n`, so `UρU†` is `U` on the row
//! qubits and `U*` on the column qubits.

use super::gate::{GateKind, Mat2, C};
use super::kernels;
use super::state::{Basis, StateVector};
use crate::error::{Error, Result};

/// Largest register whose density matrix fits the dense path.
pub const MAX_DENSITY_QUBITS: usize = 12;

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: Vec<C>,
}

impl DensityMatrix {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits > MAX_DENSITY_QUBITS {
            return Err(Error::Capacity {
                what: "density matrix",
                requested: num_qubits,
                cap: MAX_DENSITY_QUBITS,
            });
        }
        let mut data = vec![C::new(0.0, 0.0); 1 << (2 * num_qubits)];
        data[0] = C::new(1.0, 0.0);
        Ok(Self { num_qubits, data })
    }

    pub fn from_pure(state: &StateVector) -> Result<Self> {
        let n = state.num_qubits();
        let mut rho = Self::new(n)?;
        let amps = state.amplitudes();
        let dim = 1usize << n;
        for c in 0..dim {
            for r in 0..dim {
                rho.data[r | (c << n)] = amps[r] * amps[c].conj();
            }
        }
        Ok(rho)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn entry(&self, r: usize, c: usize) -> C {
        self.data[r | (c << self.num_qubits)]
    }

    pub fn trace(&self) -> C {
        (0..1usize << self.num_qubits).map(|i| self.entry(i, i)).sum()
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum()
    }

    pub(crate) fn apply_raw(&mut self, kind: GateKind, targets: &[usize], theta: f64) {
        let n = self.num_qubits;
        kernels::apply(&mut self.data, kind, targets, theta);
        let shifted: Vec<usize> = targets.iter().map(|q| q + n).collect();
        kernels::apply_conj(&mut self.data, kind, &shifted, theta);
    }

    pub fn apply_matrix1(&mut self, q: usize, m: &Mat2) {
        let conj = [
            [m[0][0].conj(), m[0][1].conj()],
            [m[1][0].conj(), m[1][1].conj()],
        ];
        kernels::mat1(&mut self.data, q, m);
        kernels::mat1(&mut self.data, q + self.num_qubits, &conj);
    }

    /// Replaces `ρ` by `|0⟩⟨0|_q ⊗ Tr_q(σ ρ)` where σ is the Pauli `axis` on
    /// qubit `q` (identity when `None`). With `None` this is the reset channel;
    /// with a Pauli it inserts the ±1 outcome weight of a measurement.
    pub fn trace_pauli_reset(&mut self, q: usize, axis: Option<Basis>) {
        let n = self.num_qubits;
        let (mr, mc) = (1usize << q, 1usize << (q + n));
        let i = C::new(0.0, 1.0);
        let len = self.data.len();
        for idx in 0..len {
            if idx & (mr | mc) != 0 {
                continue;
            }
            let r00 = self.data[idx];
            let r01 = self.data[idx | mc];
            let r10 = self.data[idx | mr];
            let r11 = self.data[idx | mr | mc];
            // Tr(σ ρ_q) = Σ_ab σ_ba ρ_ab
            self.data[idx] = match axis {
                None => r00 + r11,
                Some(Basis::Z) => r00 - r11,
                Some(Basis::X) => r01 + r10,
                Some(Basis::Y) => i * r01 - i * r10,
            };
            self.data[idx | mc] = C::new(0.0, 0.0);
            self.data[idx | mr] = C::new(0.0, 0.0);
            self.data[idx | mr | mc] = C::new(0.0, 0.0);
        }
    }

    /// Reduced density matrix of a single qubit as `[[ρ00, ρ01], [ρ10, ρ11]]`.
    pub fn single_qubit_reduced(&self, q: usize) -> Mat2 {
        let n = self.num_qubits;
        let dim = 1usize << n;
        let m = 1usize << q;
        let mut out = [[C::new(0.0, 0.0); 2]; 2];
        for rest in 0..dim {
            if rest & m != 0 {
                continue;
            }
            for a in 0..2 {
                for b in 0..2 {
                    out[a][b] += self.entry(rest | (a * m), rest | (b * m));
                }
            }
        }
        out
    }
}
