//! Analysis toolkit for Bosonic linear channels on finitely many modes:
//! symplectic phase-space algebra, degeneracy classification of Gaussian
//! channel specifications, direct-sum decomposition plans with reversing
//! channels, discrete classical-quantum representations, and a position-grid
//! simulator that realizes the constructions on concrete density matrices.

pub mod channel;
pub mod decomp;
pub mod error;
pub mod gridsim;
pub mod jsonio;
pub mod linalg;
pub mod region;
pub mod report;
pub mod symplectic;
pub mod verify;

pub use error::{Error, Result};
