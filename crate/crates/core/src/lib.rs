//! Stabilizer Rényi entropies of matrix product states.

pub mod analysis;
pub mod error;
pub mod ising;
pub mod mps;
pub mod oracle;
pub mod par;
pub mod pauli;
pub mod replica;
pub mod tensor;

pub use error::{Error, Result};
