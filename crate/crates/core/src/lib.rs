//! Simulation and tomography of a post-selected controlled-phase gate for
//! time-bin qubits.
//!
//! * [`qcore`]: dense complex linear algebra, Pauli basis, density matrices.
//! * [`timebin`]: time-bin qubits, the 2×2 switch and the post-selected gate.
//! * [`tomo`]: state and process tomography (linear inversion and maximum likelihood).
//! * [`metrics`]: fidelities, logic fidelities, Hofmann bounds, CHSH.
//! * [`expsim`]: Monte Carlo simulation of the photon-counting experiment.
//! * [`pipeline`]: end-to-end reconstructions shared by the CLI and tests.

pub mod error;
pub mod expsim;
pub mod metrics;
pub mod pipeline;
pub mod qcore;
pub mod timebin;
pub mod tomo;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use qcore::{ComplexMatrix, DensityMatrix, PauliBasis, C64};
