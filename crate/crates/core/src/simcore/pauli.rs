//! Pauli-string action on dense amplitude vectors.

use super::gate::C;
use super::state::Basis;

/// Bit masks of a Pauli string: `x` marks X/Y factors, `z` marks Y/Z
/// factors, `ny` counts Y factors. `P|i⟩ = i^ny (-1)^{|i∧z|} |i ⊕ x⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliMask {
    pub x: usize,
    pub z: usize,
    pub ny: u32,
}

impl PauliMask {
    pub fn new(factors: impl IntoIterator<Item = (usize, Basis)>) -> Self {
        let mut m = PauliMask { x: 0, z: 0, ny: 0 };
        for (q, axis) in factors {
            let bit = 1usize << q;
            match axis {
                Basis::X => m.x |= bit,
                Basis::Y => {
                    m.x |= bit;
                    m.z |= bit;
                    m.ny += 1;
                }
                Basis::Z => m.z |= bit,
            }
        }
        m
    }

    fn global_phase(&self) -> C {
        match self.ny % 4 {
            0 => C::new(1.0, 0.0),
            1 => C::new(0.0, 1.0),
            2 => C::new(-1.0, 0.0),
            _ => C::new(0.0, -1.0),
        }
    }

    #[inline(always)]
    fn sign(&self, i: usize) -> f64 {
        if (i & self.z).count_ones() & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// `⟨ψ|P|ψ⟩`, real for Hermitian P.
    pub fn expectation(&self, amps: &[C]) -> f64 {
        self.matrix_element(amps, amps).re
    }

    /// `⟨φ|P|ψ⟩`.
    pub fn matrix_element(&self, bra: &[C], ket: &[C]) -> C {
        let mut acc = C::new(0.0, 0.0);
        if self.x == 0 {
            for (i, (b, k)) in bra.iter().zip(ket).enumerate() {
                acc += b.conj() * k * self.sign(i);
            }
            return acc;
        }
        for (i, k) in ket.iter().enumerate() {
            acc += bra[i ^ self.x].conj() * k * self.sign(i);
        }
        acc * self.global_phase()
    }

    /// `out += coeff · P|ψ⟩`.
    pub fn apply_add(&self, amps: &[C], coeff: f64, out: &mut [C]) {
        let c = self.global_phase() * coeff;
        for (i, a) in amps.iter().enumerate() {
            out[i ^ self.x] += a * c * self.sign(i);
        }
    }

    /// `P|ψ⟩` in place.
    pub fn apply_in_place(&self, amps: &mut [C]) {
        let phase = self.global_phase();
        if self.x == 0 {
            for (i, a) in amps.iter_mut().enumerate() {
                *a *= phase * self.sign(i);
            }
            return;
        }
        for i in 0..amps.len() {
            let j = i ^ self.x;
            if i < j {
                let (ai, aj) = (amps[i], amps[j]);
                amps[j] = ai * phase * self.sign(i);
                amps[i] = aj * phase * self.sign(j);
            }
        }
    }
}
