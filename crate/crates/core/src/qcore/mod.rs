//! Dense complex linear algebra over qubit Hilbert spaces.
//!
//! Operators are materialized as `2^N x 2^N` matrices. Qubit 0 is the most
//! significant bit of the computational-basis index.

mod hamiltonian;
pub(crate) mod linalg;
pub(crate) mod metrics;
mod pauli;
mod state;

pub use hamiltonian::{load_hamiltonian, tfim_hamiltonian, Hamiltonian};
pub use linalg::{eigh, Eigh};
pub use metrics::{
    all_pauli_kl, bernoulli_kl, classical_infidelity, energy, infidelity, kl_divergence,
    trace_distance, MetricsRecord,
};
pub use pauli::{Pauli, PauliString};
pub use state::{
    depolarize, ground_state, pure_perturbation, random_perturbation, random_perturbation_with,
    thermal_state, DensityMatrix, GroundState, PerturbationSpec,
};
