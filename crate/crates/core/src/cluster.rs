//! One-dimensional cluster state: the wide and two-qubit reuse circuits, its
//! bond-dimension-2 MPS, and post-selected SLOCC correlations.
//!
//! The SLOCC filter is `S = D·H·Rz(γ − π/2)` with
//! `D = cos θ |0⟩⟨0| + sin θ |1⟩⟨1|`; the phase rotation is measured from the
//! y axis so that `⟨σ^z_{i−1} σ^z_{i+1}⟩ = cos 2θ · sin γ` after filtering.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Architecture, BlockKind, BlockSpec, Event, Family, StepParity};
use crate::error::{contract, Error, Result};
use crate::model::SiteOrdering;
use crate::oracle::wide_circuit_state;
use crate::rng::RngStream;
use crate::simcore::gate::{hadamard, rz, Mat2, C};
use crate::simcore::pauli::PauliMask;
use crate::simcore::{sample_schedule, Basis, GateKind, GateOp, MeasureFrame};

fn fixed_block(width: usize, gates: Vec<GateOp>) -> BlockSpec {
    BlockSpec {
        kind: BlockKind::Fixed,
        parity: StepParity::Odd,
        width,
        depth: 1,
        param_slots: 0..0,
        gates,
    }
}

/// `efficient = false`: `N` qubits, `H` on each then a CZ chain.
/// `efficient = true`: two qubits; each step swaps the open end onto qubit 0,
/// prepares a fresh `|+⟩` on qubit 1, entangles, and reads qubit 0.
pub fn cluster_architecture(n: usize, efficient: bool) -> Result<Architecture> {
    if n < 2 {
        return Err(contract(format!("a cluster needs at least 2 sites, got {n}")));
    }
    let (width, blocks, schedule) = if efficient {
        let mut blocks = vec![fixed_block(
            2,
            vec![
                GateOp::fixed1(GateKind::H, 0),
                GateOp::fixed1(GateKind::H, 1),
                GateOp::fixed2(GateKind::Cz, 0, 1),
            ],
        )];
        for _ in 1..n - 1 {
            blocks.push(fixed_block(
                2,
                vec![
                    GateOp::fixed2(GateKind::Swap, 0, 1),
                    GateOp::fixed1(GateKind::H, 1),
                    GateOp::fixed2(GateKind::Cz, 0, 1),
                ],
            ));
        }
        let mut schedule = Vec::new();
        for k in 0..n - 1 {
            schedule.push(Event::ApplyBlock { block: k });
            schedule.push(Event::Measure {
                qubit: 0,
                position: k,
                reset: k + 2 < n,
            });
        }
        schedule.push(Event::Measure {
            qubit: 1,
            position: n - 1,
            reset: false,
        });
        (2, blocks, schedule)
    } else {
        let mut gates: Vec<GateOp> = (0..n).map(|q| GateOp::fixed1(GateKind::H, q)).collect();
        gates.extend((0..n - 1).map(|q| GateOp::fixed2(GateKind::Cz, q, q + 1)));
        let mut schedule = vec![Event::ApplyBlock { block: 0 }];
        schedule.extend((0..n).map(|q| Event::Measure {
            qubit: q,
            position: q,
            reset: false,
        }));
        (n, vec![fixed_block(n, gates)], schedule)
    };
    let mut arch = Architecture::custom(n, width, blocks, schedule, SiteOrdering::identity(n))?;
    arch.family = Family::Cluster { efficient };
    arch.physical = if efficient { 1 } else { n };
    arch.virtual_qubits = if efficient { 1 } else { 0 };
    Ok(arch)
}

/// Bond-dimension-2 MPS of the cluster state: left boundary `⟨±_b|/√2`,
/// interior tensors `A_b = |b⟩⟨b|H`, right boundary `|b⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterMps {
    pub left: [[C; 2]; 2],
    pub interior: [Mat2; 2],
    pub right: [[C; 2]; 2],
}

impl Default for ClusterMps {
    fn default() -> Self {
        let h = hadamard();
        let zero = C::new(0.0, 0.0);
        let one = C::new(1.0, 0.0);
        let mut interior = [[[zero; 2]; 2]; 2];
        for (b, a) in interior.iter_mut().enumerate() {
            a[b] = h[b];
        }
        let left = [
            [h[0][0] * FRAC_1_SQRT_2, h[0][1] * FRAC_1_SQRT_2],
            [h[1][0] * FRAC_1_SQRT_2, h[1][1] * FRAC_1_SQRT_2],
        ];
        Self {
            left,
            interior,
            right: [[one, zero], [zero, one]],
        }
    }
}

impl ClusterMps {
    pub fn amplitude(&self, bits: &[u8]) -> Result<C> {
        if bits.len() < 2 {
            return Err(contract("the cluster MPS needs at least 2 sites"));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(contract("bitstring entries must be 0 or 1"));
        }
        let mut row = self.left[bits[0] as usize];
        for &b in &bits[1..bits.len() - 1] {
            let a = &self.interior[b as usize];
            row = [
                row[0] * a[0][0] + row[1] * a[1][0],
                row[0] * a[0][1] + row[1] * a[1][1],
            ];
        }
        let col = self.right[bits[bits.len() - 1] as usize];
        Ok(row[0] * col[0] + row[1] * col[1])
    }
}

/// Amplitude of `bits` (site 0 first) in the `N`-site cluster state.
pub fn cluster_mps_amplitude(n: usize, bits: &[u8]) -> Result<C> {
    if bits.len() != n {
        return Err(contract(format!("bitstring of length {} for {n} sites", bits.len())));
    }
    ClusterMps::default().amplitude(bits)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SloccSpec {
    /// Filtered site (0-based); both neighbours must exist.
    pub site: usize,
    pub theta: f64,
    pub gamma: f64,
}

impl SloccSpec {
    fn check(&self, n: usize) -> Result<()> {
        if self.site == 0 || self.site + 1 >= n {
            return Err(contract(format!(
                "SLOCC site {} needs two neighbours in a {n}-site chain",
                self.site
            )));
        }
        Ok(())
    }

    /// The unitary part `H·Rz(γ − π/2)`.
    pub fn rotation(&self) -> Mat2 {
        let (h, r) = (hadamard(), rz(self.gamma - FRAC_PI_2));
        let mut out = [[C::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = h[i][0] * r[0][j] + h[i][1] * r[1][j];
            }
        }
        out
    }

    /// Keep probability of outcome `b` of the rotated site.
    pub fn keep_weight(&self, bit: u8) -> f64 {
        if bit == 0 {
            self.theta.cos().powi(2)
        } else {
            self.theta.sin().powi(2)
        }
    }

    pub fn analytic(&self) -> f64 {
        (2.0 * self.theta).cos() * self.gamma.sin()
    }
}

/// The open chain's end stabilizers `X₀Z₁` and `Z_{N−2}X_{N−1}` are the only
/// two-point Pauli products with a nonzero expectation (both equal 1).
pub fn boundary_stabilizer(n: usize, a: (usize, Basis), b: (usize, Basis)) -> bool {
    let (lo, hi) = if a.0 < b.0 { (a, b) } else { (b, a) };
    (lo == (0, Basis::X) && hi == (1, Basis::Z))
        || (n >= 2 && lo == (n - 2, Basis::Z) && hi == (n - 1, Basis::X))
}

/// Exact post-selected `⟨σ^z_{i−1} σ^z_{i+1}⟩` from the wide cluster state.
pub fn slocc_correlation_exact(n: usize, spec: &SloccSpec) -> Result<f64> {
    spec.check(n)?;
    let arch = cluster_architecture(n, false)?;
    let mut psi = wide_circuit_state(&arch, &[])?;
    let rot = spec.rotation();
    let d = [spec.theta.cos(), spec.theta.sin()];
    let s = [
        [rot[0][0] * d[0], rot[0][1] * d[0]],
        [rot[1][0] * d[1], rot[1][1] * d[1]],
    ];
    psi.apply_matrix1(spec.site, &s)?;
    let norm = psi.norm_sqr();
    if norm < 1e-14 {
        return Err(Error::PostSelection { shots: 0 });
    }
    let zz = PauliMask::new([(spec.site - 1, Basis::Z), (spec.site + 1, Basis::Z)]);
    Ok(zz.expectation(psi.amplitudes()) / norm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SloccEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub shots: usize,
    pub kept: usize,
    pub kept_fraction: f64,
}

/// Sampled protocol on the two-qubit circuit: rotate the filtered site by
/// `H·Rz(γ − π/2)`, read it in Z, keep the run with probability `cos²θ`
/// (outcome 0) or `sin²θ` (outcome 1), and read the other sites in Z.
pub fn slocc_correlation_sampled(
    n: usize,
    spec: &SloccSpec,
    shots: usize,
    stream: RngStream,
) -> Result<SloccEstimate> {
    spec.check(n)?;
    if shots == 0 {
        return Err(contract("shots must be at least 1"));
    }
    let arch = cluster_architecture(n, true)?;
    let mut frames = vec![MeasureFrame::Pauli(Basis::Z); n];
    frames[spec.site] = MeasureFrame::Unitary(spec.rotation());
    let samples = sample_schedule(&arch, &[], &frames, shots, stream.fork(1))?;
    let filter = stream.fork(2);
    let kept: Vec<f64> = samples
        .iter()
        .enumerate()
        .filter(|(k, bits)| {
            let u: f64 = filter.shot(*k as u64).rng().gen();
            u < spec.keep_weight(bits[spec.site])
        })
        .map(|(_, bits)| {
            if bits[spec.site - 1] ^ bits[spec.site + 1] == 1 {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::PostSelection { shots });
    }
    let k = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / k;
    let var = if kept.len() > 1 {
        kept.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok(SloccEstimate {
        mean,
        stderr: (var / k).sqrt(),
        shots,
        kept: kept.len(),
        kept_fraction: k / shots as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::channel_expectation;
    use crate::model::PauliTerm;

    #[test]
    fn two_site_state() {
        let psi = wide_circuit_state(&cluster_architecture(2, false).unwrap(), &[]).unwrap();
        let want = [0.5, 0.5, 0.5, -0.5];
        for (a, w) in psi.amplitudes().iter().zip(want) {
            assert!((a - C::new(w, 0.0)).norm() < 1e-12);
        }
        let a = cluster_mps_amplitude(2, &[1, 1]).unwrap();
        assert!(a.re < 0.0);
    }

    #[test]
    fn three_site_phases() {
        let psi = wide_circuit_state(&cluster_architecture(3, false).unwrap(), &[]).unwrap();
        for i in 0..8usize {
            let b: Vec<u8> = (0..3).map(|q| ((i >> q) & 1) as u8).collect();
            let sign = if (b[0] & b[1]) ^ (b[1] & b[2]) == 1 { -1.0 } else { 1.0 };
            let want = sign / 8f64.sqrt();
            assert!((psi.amplitudes()[i].re - want).abs() < 1e-12);
            assert!((cluster_mps_amplitude(3, &b).unwrap().re - want).abs() < 1e-12);
        }
    }

    #[test]
    fn efficient_matches_wide_exactly() {
        for n in 2..=7 {
            let wide = wide_circuit_state(&cluster_architecture(n, false).unwrap(), &[]).unwrap();
            let eff = wide_circuit_state(&cluster_architecture(n, true).unwrap(), &[]).unwrap();
            for (a, b) in wide.amplitudes().iter().zip(eff.amplitudes()) {
                assert!((a - b).norm() < 1e-12, "N={n}");
            }
        }
    }

    #[test]
    fn two_point_correlations_vanish_off_boundary() {
        let n = 5;
        let arch = cluster_architecture(n, true).unwrap();
        for i in 0..n {
            for j in i + 1..n {
                for a in Basis::ALL {
                    for b in Basis::ALL {
                        let t = PauliTerm::new(1.0, vec![i, j], vec![a, b]).unwrap();
                        let v = channel_expectation(&arch, &[], &t).unwrap();
                        let stabilizer = boundary_stabilizer(n, (i, a), (j, b));
                        let want = if stabilizer { 1.0 } else { 0.0 };
                        assert!((v - want).abs() < 1e-12, "{i}{a:?} {j}{b:?}: {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn slocc_formula_instances() {
        let s = SloccSpec {
            site: 2,
            theta: 0.0,
            gamma: FRAC_PI_2,
        };
        assert!((slocc_correlation_exact(5, &s).unwrap() - 1.0).abs() < 1e-12);
        let s = SloccSpec {
            site: 2,
            theta: std::f64::consts::FRAC_PI_4,
            gamma: 0.7,
        };
        assert!(slocc_correlation_exact(5, &s).unwrap().abs() < 1e-12);
        for (theta, gamma) in [(0.3, 1.1), (1.2, -0.4), (0.05, 2.9)] {
            let s = SloccSpec { site: 1, theta, gamma };
            let v = slocc_correlation_exact(4, &s).unwrap();
            assert!((v - s.analytic()).abs() < 1e-10);
        }
        assert!(slocc_correlation_exact(4, &SloccSpec { site: 3, theta: 0.0, gamma: 0.0 }).is_err());
    }

    #[test]
    fn slocc_sampled_agrees() {
        let s = SloccSpec {
            site: 2,
            theta: 0.4,
            gamma: 1.0,
        };
        let est = slocc_correlation_sampled(5, &s, 20_000, RngStream::from_seed(6)).unwrap();
        assert!((est.mean - s.analytic()).abs() < 4.0 * est.stderr);
        assert!(est.kept_fraction > 0.0 && est.kept_fraction < 1.0);
    }
}
