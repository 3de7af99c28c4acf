//! Simulator and security-analysis toolkit for the trine spherical code QKD
//! protocols PBC00 and R04.
//!
//! The trine protocols encode key bits in three qubit states 120° apart on the
//! X–Z great circle of the Bloch sphere. This crate provides:
//!
//! - exact single- and two-qubit linear algebra for the trine states, Bob's
//!   POVM, the local filtering operation and Bell projections ([`qubit`]);
//! - channel and eavesdropper models: loss, depolarizing, Pauli and arbitrary
//!   Kraus mixtures, intercept/resend ([`channel`]);
//! - pulse-by-pulse protocol state machines with sifting and error estimation
//!   ([`protocol`]);
//! - an exact enumeration oracle over the prepare-and-measure picture
//!   ([`enumeration`]);
//! - the security analysis as executable mathematics: entanglement-picture
//!   branch states, bit/phase error probabilities and their 5/4 relation, key
//!   rates, thresholds, and Azuma/martingale concentration tooling
//!   ([`security`]);
//! - a self-checking invariant battery ([`verify`]) and a CLI front end
//!   ([`cli`]).
//!
//! All randomized components draw from counter-based streams seeded
//! explicitly, so every run is reproducible bit for bit.

pub mod channel;
pub mod cli;
pub mod enumeration;
pub mod error;
pub mod protocol;
pub mod qubit;
pub mod rng;
pub mod security;
pub mod verify;

pub use channel::{AttackModel, ChannelOutput};
pub use error::Error;
pub use protocol::{BitMapping, PulseOutcome, PulseRecord, RunStats, SiftOutcome};
pub use qubit::{DensityMatrix, KrausOperator, Mat2, Povm, PureState, TwoQubitVector, Unitary};
pub use security::{ErrorProbs, KeyRateReport};

/// Tolerance for checks that should hold to machine precision after a handful
/// of exact-arithmetic operations.
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Tolerance for probability normalization after floating-point accumulation.
pub const PROB_TOL: f64 = 1e-9;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
