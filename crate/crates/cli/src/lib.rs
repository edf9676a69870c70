//! Configuration, dispatch and artifact writing for the `nonlocal` binary.

pub mod artifacts;
pub mod commands;
pub mod config;

pub use artifacts::{sha256_hex, Artifacts, MANIFEST};
pub use commands::{run, Command, Outcome, PlapMode, VerifyKind};
pub use config::RunConfig;
