//! Desk-scale neural-network tomography of mixed few-qubit states.
//!
//! The crate is organised bottom-up:
//!
//! - [`qcore`]: dense Hilbert-space algebra, target states and distance metrics.
//! - [`measure`]: Pauli projective ensembles, the Pauli-4 POVM, sampling and the
//!   inverse reconstruction formula.
//! - [`ndo`]: the latent-purification neural density operator.
//! - [`povmnqs`]: the autoregressive POVM network.
//! - [`model`]: a common interface over both ansatzes and their evaluation.
//! - [`train`]: mini-batch NLL, Adam and the control-variate (SVRG) gradient.
//! - [`lab`]: scaling, batch-size, valley, bound and perturbation studies.
//! - [`cli`]: the `mixtomo` command-line front end.
//!
//! Qubit 0 is always the most significant bit of a computational-basis index
//! (and the most significant base-4 digit of a POVM outcome).

pub mod cli;
pub mod error;
pub mod lab;
pub mod measure;
pub mod model;
pub mod ndo;
pub mod povmnqs;
pub mod qcore;
pub mod seed;
pub mod train;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;

/// Upper bound on the number of qubits for any dense operation.
pub const MAX_QUBITS: usize = 8;

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "system needs at least one qubit".into(),
        ));
    }
    if n > MAX_QUBITS {
        return Err(Error::SizeCap { n, cap: MAX_QUBITS });
    }
    Ok(())
}
