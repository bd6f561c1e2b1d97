//! Dense state-vector simulation: gates, projective measurement in the Pauli
//! bases, physical reset, and the measure-and-reuse circuit runner.

pub mod density;
pub mod gate;
pub(crate) mod kernels;
pub mod pauli;
pub mod run;
pub mod state;

pub use gate::{gate_matrix, GateKind, GateMatrix, GateOp};
pub use run::{run_schedule, run_schedule_framed, sample_schedule, MeasureFrame};
pub use state::{
    apply_gate, init_state, measure_and_collapse, reset_qubit, Basis, StateVector, MAX_QUBITS,
};
