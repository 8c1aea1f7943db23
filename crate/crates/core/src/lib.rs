//! Truncated Fock states with random coefficients: construction, photon
//! statistics, conditional beam-splitter synthesis and detector-loss fidelity.

pub mod cli;
pub mod engineer;
pub mod error;
pub mod fock;
pub mod io;
pub mod lossy;
pub mod par;
pub mod roots;
pub mod stats;
pub mod tsrc;

pub use error::{Error, Result};
pub use fock::FockState;
pub use num_complex::Complex64 as C64;
