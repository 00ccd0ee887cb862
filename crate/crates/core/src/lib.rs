//! Finite-dimensional quantum channel analysis: gate fidelities, Choi/Kraus/Stinespring
//! representations, k-extendibility of Choi states and the gate-fidelity floor derived
//! from a channel's distance to the entanglement-breaking set.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the command line
//! live in the `qbcast` crate.
#![no_std]

extern crate alloc;

pub mod channels;
pub mod error;
pub mod bounds;
pub mod extendibility;
pub mod linalg;
pub mod metrics;
pub mod random;
pub mod states;

pub use channels::{Builtin, ChoiState, KrausChannel, StinespringDilation};
pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use states::{fidelity, trace_distance, DensityMatrix, HilbertSpec, PureState};
