use crate::trace::Trace;

/// Errors produced by configuration validation, analysis, simulation and
/// metrics evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates an invariant. The message names the
    /// offending field.
    #[error("configuration error: {0}")]
    Config(String),

    /// Loop parameters fail the stability conditions, so a closed-form
    /// step response does not exist.
    #[error("unstable loop parameters: {0}")]
    Unstable(String),

    /// The state went non-finite during integration. The partial trace up
    /// to the failing step is retained.
    #[error("integration failure at step {step} (t = {t} s): non-finite state")]
    Integration {
        step: usize,
        t: f64,
        partial: Box<Trace>,
    },

    /// A metrics precondition was violated (empty window, zero step,
    /// mismatched traces).
    #[error("metrics error: {0}")]
    Metrics(String),
}

pub type Result<T> = std::result::Result<T, Error>;
