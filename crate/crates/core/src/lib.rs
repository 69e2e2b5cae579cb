//! Three-fidelity characterization of controlled-NOT gates.
//!
//! A CNOT can be written as a signed sum of three conditional local
//! operations and a dephasing map, `E_CNOT = L1 + L2 + L3 − 2D`. Each local
//! operation has a classical truth table in its own basis setting, and the
//! three truth-table fidelities F1, F2, F3 certify quantum parallelism (and
//! entanglement capability) when `F1 + F2 + F3 > 2`.
//!
//! Module map:
//! - [`algebra`]: Pauli operators, density matrices, superoperators, Choi checks
//! - [`channels`]: the named channels, the expansion identity, reconstructions
//! - [`fidelity`]: truth tables, F1/F2/F3, criterion, measurement plan
//! - [`entanglement`]: output correlations, concurrence bounds, exact oracle
//! - [`sampling`]: noise models and seeded finite-shot sampling
//! - [`formats`]: counts and report files

pub mod algebra;
pub mod channels;
pub mod entanglement;
pub mod error;
pub mod fidelity;
pub mod formats;
pub mod random;
pub mod sampling;

pub use error::{Error, Result};
