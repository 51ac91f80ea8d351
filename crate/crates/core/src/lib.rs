//! Single-setting SIC-POVM tomography.
//!
//! Simulates tensor-product SIC (and Pauli-basis) measurements on dense
//! N-qubit states and estimates state properties from the resulting shot
//! records: classical shadows, subsystem purities and Rényi entropies,
//! linear-inversion / projected-least-squares / constrained least-squares
//! reconstruction, analytic measurement budgets and their exact verifiers.
//!
//! Basis convention used everywhere: qubit 0 is the most significant bit of
//! a computational-basis index, so `|q0 q1 ... q_{N-1}>` has index
//! `sum_k q_k 2^(N-1-k)`. SIC outcome digits are stored 0-based (`0..=3`).

pub mod budget;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod povm;
pub mod qstate;
pub mod reconstruct;
pub mod report;
pub mod rng;
pub mod shadows;
pub mod stream;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use povm::{
    FrameName, NaimarkUnitary, OutcomeDistribution, PauliShot, PovmKind, ShotRecord, SicFrame,
    SicShot,
};
pub use qstate::{Bipartition, DensityOperator, PauliLetter, PauliString, PureState, State};
pub use report::EstimateReport;
