//! Configuration, sweeps, output tables and the command line.

pub mod cli;
pub mod config;
pub mod emit;
pub mod sweep;

pub use config::{ConfigFile, Format, SweepConfig, XGrid};
pub use emit::emit;
pub use sweep::{run_sweep, VerificationRow};
