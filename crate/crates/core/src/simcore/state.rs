use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gate::{hadamard, GateKind, GateOp, Mat2, C};
use super::kernels;
use crate::error::{contract, Error, Result};
use crate::rng::RngStream;

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 24;

/// Normalization tolerance maintained by every operation.
pub const NORM_TOL: f64 = 1e-10;

/// Branch probabilities below this are treated as a collapsed norm.
const MIN_BRANCH_PROB: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    /// Rotation `U` such that measuring `σ^basis` equals applying `U` and
    /// measuring σz. X uses H; Y uses H·S† (so |+i⟩ ↦ |0⟩).
    pub fn rotation(self) -> Option<Mat2> {
        match self {
            Basis::Z => None,
            Basis::X => Some(hadamard()),
            Basis::Y => {
                let h = hadamard();
                let sdg = C::new(0.0, -1.0);
                Some([[h[0][0], h[0][1] * sdg], [h[1][0], h[1][1] * sdg]])
            }
        }
    }
}

/// Dense register state. Qubit 0 is the least-significant bit of the
/// amplitude index.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C>,
}

fn check_cap(what: &'static str, n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::Capacity {
            what,
            requested: n,
            cap: MAX_QUBITS,
        });
    }
    Ok(())
}

impl StateVector {
    /// |0…0⟩ on `num_qubits` qubits.
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(contract("a register needs at least one qubit"));
        }
        check_cap("state vector", num_qubits)?;
        let mut amps = vec![C::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = C::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<C>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(contract(format!("amplitude count {len} is not 2^n, n ≥ 1")));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_cap("state vector", num_qubits)?;
        let state = Self { num_qubits, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(contract(format!("amplitudes have norm² {norm}")));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> C {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Applies `gate` with angle `theta` (present iff the kind is parametrized).
    pub fn apply(&mut self, gate: &GateOp, theta: Option<f64>) -> Result<()> {
        gate.check_targets(self.num_qubits)?;
        if gate.kind.is_parametrized() != theta.is_some() {
            return Err(contract(format!(
                "{} angle presence mismatch",
                gate.kind.name()
            )));
        }
        kernels::apply(&mut self.amps, gate.kind, &gate.targets, theta.unwrap_or(0.0));
        Ok(())
    }

    /// Unchecked fast path used by the circuit runners.
    #[inline]
    pub(crate) fn apply_raw(&mut self, kind: GateKind, targets: &[usize], theta: f64) {
        kernels::apply(&mut self.amps, kind, targets, theta);
    }

    pub fn apply_matrix1(&mut self, q: usize, m: &Mat2) -> Result<()> {
        self.check_qubit(q)?;
        kernels::mat1(&mut self.amps, q, m);
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(contract(format!(
                "qubit {q} out of range for {} qubits",
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Probability that σz on `q` yields −1 (bit 1).
    pub fn prob_one(&self, q: usize) -> f64 {
        let m = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & m != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects `q` onto `bit` and renormalizes.
    fn collapse(&mut self, q: usize, bit: u8, prob: f64) -> Result<()> {
        if prob < MIN_BRANCH_PROB {
            return Err(Error::Numerical(format!(
                "measurement branch on qubit {q} has probability {prob:e}"
            )));
        }
        let m = 1usize << q;
        let scale = 1.0 / prob.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if ((i & m != 0) as u8) == bit {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(())
    }

    /// Z measurement after an optional frame rotation `rot`; the rotation is
    /// left applied. Outcome 0 ↔ eigenvalue +1.
    pub(crate) fn measure_in_frame<R: Rng>(
        &mut self,
        q: usize,
        rot: Option<&Mat2>,
        rng: &mut R,
    ) -> Result<u8> {
        if let Some(m) = rot {
            kernels::mat1(&mut self.amps, q, m);
        }
        let p1 = self.prob_one(q).clamp(0.0, 1.0);
        let u: f64 = rng.gen();
        let bit = (u < p1) as u8;
        let prob = if bit == 1 { p1 } else { 1.0 - p1 };
        self.collapse(q, bit, prob)?;
        Ok(bit)
    }

    /// Projective measurement of `σ^basis` on `q`; the post-measurement state
    /// is rotated back into the computational frame.
    pub fn measure<R: Rng>(&mut self, q: usize, basis: Basis, rng: &mut R) -> Result<u8> {
        self.check_qubit(q)?;
        let rot = basis.rotation();
        let bit = self.measure_in_frame(q, rot.as_ref(), rng)?;
        if let Some(m) = rot {
            kernels::mat1(&mut self.amps, q, &adjoint(&m));
        }
        Ok(bit)
    }

    /// Physical reset: Z measurement followed by a conditional X.
    pub fn reset<R: Rng>(&mut self, q: usize, rng: &mut R) -> Result<()> {
        self.check_qubit(q)?;
        let bit = self.measure_in_frame(q, None, rng)?;
        if bit == 1 {
            kernels::x(&mut self.amps, q);
        }
        Ok(())
    }

    /// Flips `q` back to |0⟩ after it has been measured in the Z frame.
    pub(crate) fn clear_measured(&mut self, q: usize, bit: u8) {
        if bit == 1 {
            kernels::x(&mut self.amps, q);
        }
    }
}

pub fn adjoint(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

/// |0…0⟩ on `num_qubits` qubits.
pub fn init_state(num_qubits: usize) -> Result<StateVector> {
    StateVector::new(num_qubits)
}

/// Applies `gate` to a copy of `state`.
pub fn apply_gate(state: &StateVector, gate: &GateOp, theta: Option<f64>) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(gate, theta)?;
    Ok(out)
}

pub fn measure_and_collapse(
    state: &StateVector,
    qubit: usize,
    basis: Basis,
    stream: RngStream,
) -> Result<(u8, StateVector)> {
    let mut out = state.clone();
    let bit = out.measure(qubit, basis, &mut stream.rng())?;
    Ok((bit, out))
}

pub fn reset_qubit(state: &StateVector, qubit: usize, stream: RngStream) -> Result<StateVector> {
    let mut out = state.clone();
    out.reset(qubit, &mut stream.rng())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::gate::GateKind;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn assert_amps(state: &StateVector, want: &[C]) {
        for (a, b) in state.amplitudes().iter().zip(want) {
            assert!((a - b).norm() < 1e-12, "{:?} vs {:?}", state.amplitudes(), want);
        }
    }

    #[test]
    fn init_and_capacity() {
        assert_amps(&init_state(1).unwrap(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert_amps(&init_state(2).unwrap(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(init_state(25), Err(Error::Capacity { cap: 24, .. })));
        assert!(init_state(0).is_err());
    }

    #[test]
    fn qubit_zero_is_least_significant() {
        let mut s = init_state(3).unwrap();
        s.apply(&GateOp::fixed1(GateKind::X, 0), None).unwrap();
        assert_eq!(s.amplitudes()[1], c(1.0, 0.0));
        let mut s = init_state(3).unwrap();
        s.apply(&GateOp::fixed1(GateKind::X, 2), None).unwrap();
        assert_eq!(s.amplitudes()[4], c(1.0, 0.0));
    }

    #[test]
    fn gate_examples() {
        let s = init_state(1).unwrap();
        let h = apply_gate(&s, &GateOp::fixed1(GateKind::H, 0), None).unwrap();
        assert_amps(&h, &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]);

        let rx = apply_gate(&s, &GateOp::param1(GateKind::Rx, 0, 0), Some(PI)).unwrap();
        assert_amps(&rx, &[c(0.0, 0.0), c(0.0, -1.0)]);

        let mut s11 = init_state(2).unwrap();
        s11.apply(&GateOp::fixed1(GateKind::X, 0), None).unwrap();
        s11.apply(&GateOp::fixed1(GateKind::X, 1), None).unwrap();
        s11.apply(&GateOp::fixed2(GateKind::Cz, 0, 1), None).unwrap();
        assert_amps(&s11, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    }

    #[test]
    fn pswap_round_trip() {
        let mut s = init_state(2).unwrap();
        s.apply(&GateOp::param1(GateKind::Rx, 0, 0), Some(0.4)).unwrap();
        s.apply(&GateOp::param1(GateKind::Rx, 1, 0), Some(1.3)).unwrap();
        let orig = s.clone();
        let g = GateOp::param2(GateKind::Pswap, 0, 1, 0);
        s.apply(&g, Some(0.9)).unwrap();
        s.apply(&g, Some(-0.9)).unwrap();
        assert!((orig.inner(&s).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_target_rejected() {
        let mut s = init_state(2).unwrap();
        assert!(s.apply(&GateOp::fixed1(GateKind::H, 2), None).is_err());
        assert!(s.apply(&GateOp::param1(GateKind::Rz, 0, 0), None).is_err());
    }

    #[test]
    fn eigenstate_measurements() {
        let s = init_state(1).unwrap();
        for seed in 0..20 {
            let (bit, post) = measure_and_collapse(&s, 0, Basis::Z, RngStream::new(seed, 0)).unwrap();
            assert_eq!(bit, 0);
            assert_eq!(post, s);
        }
        let plus = apply_gate(&s, &GateOp::fixed1(GateKind::H, 0), None).unwrap();
        for seed in 0..20 {
            let (bit, post) =
                measure_and_collapse(&plus, 0, Basis::X, RngStream::new(seed, 0)).unwrap();
            assert_eq!(bit, 0);
            assert_amps(&post, plus.amplitudes());
        }
        // |+i> = S H |0>
        let mut plus_i = plus.clone();
        plus_i
            .apply_matrix1(0, &[[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]])
            .unwrap();
        for seed in 0..20 {
            let (bit, _) = measure_and_collapse(&plus_i, 0, Basis::Y, RngStream::new(seed, 0)).unwrap();
            assert_eq!(bit, 0);
        }
    }

    #[test]
    fn reset_examples() {
        let zero = init_state(2).unwrap();
        assert_eq!(reset_qubit(&zero, 0, RngStream::new(3, 0)).unwrap(), zero);

        // |1> on qubit 0, |phi> = RX(0.7)|0> on qubit 1
        let mut s = init_state(2).unwrap();
        s.apply(&GateOp::fixed1(GateKind::X, 0), None).unwrap();
        s.apply(&GateOp::param1(GateKind::Rx, 1, 0), Some(0.7)).unwrap();
        let mut want = init_state(2).unwrap();
        want.apply(&GateOp::param1(GateKind::Rx, 1, 0), Some(0.7)).unwrap();
        let out = reset_qubit(&s, 0, RngStream::new(9, 0)).unwrap();
        assert_amps(&out, want.amplitudes());
    }

    #[test]
    fn measurement_is_deterministic_per_stream() {
        let plus = apply_gate(&init_state(1).unwrap(), &GateOp::fixed1(GateKind::H, 0), None).unwrap();
        let a = measure_and_collapse(&plus, 0, Basis::Z, RngStream::new(42, 7)).unwrap();
        let b = measure_and_collapse(&plus, 0, Basis::Z, RngStream::new(42, 7)).unwrap();
        assert_eq!(a, b);
        assert!((a.1.norm_sqr() - 1.0).abs() < NORM_TOL);
    }
}
