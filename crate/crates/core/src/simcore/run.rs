//! Executes an [`Architecture`] schedule shot by shot on a state vector.

use rayon::prelude::*;

use super::gate::Mat2;
use super::state::{Basis, StateVector};
use crate::ansatz::{Architecture, Event};
use crate::error::{contract, Result};
use crate::rng::RngStream;

/// Pre-measurement frame for one recorded position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasureFrame {
    Pauli(Basis),
    /// Arbitrary single-qubit rotation applied before a Z measurement.
    Unitary(Mat2),
}

impl MeasureFrame {
    fn rotation(&self) -> Option<Mat2> {
        match self {
            MeasureFrame::Pauli(b) => b.rotation(),
            MeasureFrame::Unitary(m) => Some(*m),
        }
    }
}

/// One shot with every position read in `basis`. Bits are indexed by lattice
/// site through the architecture's ordering.
pub fn run_schedule(
    arch: &Architecture,
    params: &[f64],
    basis: Basis,
    stream: RngStream,
) -> Result<Vec<u8>> {
    let frames = vec![MeasureFrame::Pauli(basis); arch.num_sites];
    run_schedule_framed(arch, params, &frames, stream)
}

/// One shot with a per-position measurement frame.
pub fn run_schedule_framed(
    arch: &Architecture,
    params: &[f64],
    frames: &[MeasureFrame],
    stream: RngStream,
) -> Result<Vec<u8>> {
    arch.check_params(params)?;
    check_frames(arch, frames)?;
    let rotations: Vec<Option<Mat2>> = frames.iter().map(MeasureFrame::rotation).collect();
    run_unchecked(arch, params, &rotations, stream)
}

fn check_frames(arch: &Architecture, frames: &[MeasureFrame]) -> Result<()> {
    if frames.len() != arch.num_sites {
        return Err(contract(format!(
            "{} measurement frames for {} positions",
            frames.len(),
            arch.num_sites
        )));
    }
    Ok(())
}

fn run_unchecked(
    arch: &Architecture,
    params: &[f64],
    rotations: &[Option<Mat2>],
    stream: RngStream,
) -> Result<Vec<u8>> {
    let mut state = StateVector::new(arch.width)?;
    let mut rng = stream.rng();
    let mut bits = vec![0u8; arch.num_sites];
    for event in &arch.schedule {
        match *event {
            Event::ApplyBlock { block } => {
                for g in &arch.blocks[block].gates {
                    let theta = g.param.map_or(0.0, |s| params[s]);
                    state.apply_raw(g.kind, &g.targets, theta);
                }
            }
            Event::Measure {
                qubit,
                position,
                reset,
            } => {
                let bit = state.measure_in_frame(qubit, rotations[position].as_ref(), &mut rng)?;
                // the measured qubit is now |bit⟩ in the computational frame,
                // so the reset's own Z readout is deterministic
                if reset {
                    state.clear_measured(qubit, bit);
                }
                bits[arch.ordering.site_at(position)] = bit;
            }
        }
    }
    Ok(bits)
}

/// `shots` independent shots; shot `k` draws from `stream.shot(k)`, so the
/// result is independent of thread scheduling.
pub fn sample_schedule(
    arch: &Architecture,
    params: &[f64],
    frames: &[MeasureFrame],
    shots: usize,
    stream: RngStream,
) -> Result<Vec<Vec<u8>>> {
    arch.check_params(params)?;
    check_frames(arch, frames)?;
    let rotations: Vec<Option<Mat2>> = frames.iter().map(MeasureFrame::rotation).collect();
    (0..shots as u64)
        .into_par_iter()
        .map(|k| run_unchecked(arch, params, &rotations, stream.shot(k)))
        .collect()
}
