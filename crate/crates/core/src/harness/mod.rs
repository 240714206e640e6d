//! Configuration, persistence and the command implementations used by the
//! `gaam` binary.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod csv;

pub use checkpoint::Checkpoint;
pub use commands::{CommandOutcome, Suite};
pub use config::{FieldSpec, RunConfig};
