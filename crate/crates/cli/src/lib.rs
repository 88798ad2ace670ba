//! Library side of the `qamem` command-line tool: configuration loading and
//! the subcommand implementations, kept separate from argument parsing so
//! they can be tested directly.

pub mod commands;
pub mod config;

use config::ConfigError;

/// Process exit status for a failed command.
///
/// Configuration problems give 2, an engine size cap 3, an embedding that
/// cannot be found or is invalid 4, anything else 1.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<qamem::Error>() {
            return match e {
                qamem::Error::Parse { .. } => 2,
                qamem::Error::CapExceeded { .. } => 3,
                qamem::Error::EmbeddingNotFound { .. } | qamem::Error::InvalidEmbedding(_) => 4,
                _ => 1,
            };
        }
    }
    1
}
