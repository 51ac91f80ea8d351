//! Shot files, the online estimation engine, the state-identification
//! game and the convergence / batching experiments.

pub mod experiment;
pub mod game;
pub mod online;
pub mod shotfile;

pub use online::{run_online, OnlineConfig, OnlineOutcome, Quantity, StoppingRule};
pub use shotfile::{read_shots, write_shots, ShotFileHeader, ShotReader};
