//! Command-line front end: configuration, commands and file formats.

pub mod commands;
pub mod config;
pub mod export;
pub mod verify;

use crate::error::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;

/// Process exit code for an error surfaced by a command.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::AtAlpha { source, .. } => exit_code(source),
        Error::SingularTransfer { .. }
        | Error::Singular { .. }
        | Error::NearSingular { .. }
        | Error::NoConvergence { .. }
        | Error::TrivialInput(_) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}
