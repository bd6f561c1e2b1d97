//! Variational circuits with qubit reuse: Q-MPS and Q-PEPS ansätze realized
//! on a small register by mid-circuit measurement and reset, trained with
//! parameter-shift gradients against the J1-J2 Heisenberg model.

pub mod ansatz;
pub mod cluster;
pub mod error;
pub mod estimator;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod simcore;
pub mod trainer;

pub use error::{Error, Result};
