//! Config-driven front end for `ymspec-core`.
//!
//! `ymspec <command> --config <path> [--out <dir>]` parses a strict JSON
//! config, runs one pipeline and writes CSV reports plus a JSON summary.
//! Exit status: 0 success, 1 failed check, 2 usage or schema error,
//! 3 numerical failure.

pub mod commands;
pub mod config;

pub use commands::{load_config, run, seeded_random_state, Check, RunError, RunOutcome};
pub use config::{parse_config, Command, ConfigError, RunConfig};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "YMSPEC_THREADS";
