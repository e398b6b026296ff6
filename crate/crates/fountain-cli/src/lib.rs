//! Command-line front end for the fountain clock simulator.
//!
//! Each subcommand reads a JSON config, runs one experiment from the core
//! crate, and writes CSV/JSON outputs plus an echo of the fully resolved
//! configuration. Exit codes: 0 success, 2 config error, 3 physics error
//! (e.g. a launch too weak to reach the cavity), 4 lock lost in the servo.

use fountain_core::ballistics::BallisticsError;
use fountain_core::clockloop::ClockLoopError;
use fountain_core::detection::DetectionError;
use fountain_core::interrogation::InterrogationError;
use fountain_core::pumping::PumpingError;

pub mod commands;
pub mod config;
pub mod output;

/// Top-level error type; the variant decides the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration (exit 2).
    #[error("config error: {0}")]
    Config(String),
    /// A physically impossible or degenerate run (exit 3).
    #[error("physics error: {0}")]
    Physics(String),
    /// The servo walked outside its capture range (exit 4).
    #[error("lock lost at cycle {cycle}: offset {offset_hz} Hz")]
    LockLost { cycle: u64, offset_hz: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics(_) => 3,
            CliError::LockLost { .. } => 4,
        }
    }
}

impl From<BallisticsError> for CliError {
    fn from(e: BallisticsError) -> Self {
        CliError::Physics(e.to_string())
    }
}

impl From<PumpingError> for CliError {
    fn from(e: PumpingError) -> Self {
        CliError::Physics(e.to_string())
    }
}

impl From<DetectionError> for CliError {
    fn from(e: DetectionError) -> Self {
        CliError::Physics(e.to_string())
    }
}

impl From<InterrogationError> for CliError {
    fn from(e: InterrogationError) -> Self {
        match e {
            InterrogationError::BadGrid
            | InterrogationError::GridTooCoarse { .. }
            | InterrogationError::GridTooNarrow { .. } => CliError::Config(e.to_string()),
            InterrogationError::Ballistics(_)
            | InterrogationError::NoSurvivors
            | InterrogationError::FlatPattern => CliError::Physics(e.to_string()),
        }
    }
}

impl From<ClockLoopError> for CliError {
    fn from(e: ClockLoopError) -> Self {
        match e {
            ClockLoopError::LockLost { cycle, offset_hz } => {
                CliError::LockLost { cycle, offset_hz }
            }
            ClockLoopError::Detection(inner) => CliError::Physics(inner.to_string()),
            ClockLoopError::InvalidConfig(_) | ClockLoopError::InsufficientData { .. } => {
                CliError::Config(e.to_string())
            }
        }
    }
}
