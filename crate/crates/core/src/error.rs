//! Crate-wide error type and exit-code mapping for the CLI.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state index {0} out of range, expected 1..=3")]
    IndexOutOfRange(usize),

    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("Kraus set violates the contraction bound: largest eigenvalue of the weighted sum E†E is {eigenvalue}")]
    ContractionViolated { eigenvalue: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("POVM outcome probabilities sum to {sum}, expected 1 within {tol}")]
    ProbabilityNormalization { sum: f64, tol: f64 },

    #[error("resend state must be unit norm, got norm² = {0}")]
    NonUnitResendState(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("no conclusive events: error estimation impossible")]
    NoConclusiveEvents,

    #[error("no received pulses")]
    NoReceivedPulses,

    #[error("inconclusive fraction is 1: no conclusive events to estimate from")]
    AllInconclusive,

    #[error("filter success probability vanished (zeta < {0:e}); error probabilities undefined")]
    ZetaVanishes(f64),

    #[error("bisection bracket does not change sign")]
    BracketSign,

    #[error(
        "closed form disagrees with the enumeration oracle at p = {p}: |{closed_form} - {oracle}| > {tol:e}"
    )]
    ClosedFormMismatch {
        p: f64,
        closed_form: f64,
        oracle: f64,
        tol: f64,
    },

    #[error("verification failed: {failed} of {total} checks did not pass")]
    VerificationFailed { failed: usize, total: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 usage/config, 2 verification failure,
    /// 3 numeric or degenerate condition.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 1,
            Error::VerificationFailed { .. } => 2,
            _ => 3,
        }
    }
}
