//! CHSH Bell-inequality statistics for two observers who share at most a
//! single reference direction.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`] holds Bloch vectors, two-qubit density matrices and
//!   correlators.
//! * [`chsh`] turns a 2×2 correlator matrix into the four CHSH combinations
//!   and maximises over outcome relabelings.
//! * [`frames`] builds the misalignment rotation `R_y(χ) R_z(φ) R_y(θ)` and
//!   the measurement directions of both parties.
//! * [`sampling`] scans (θ, φ) grids, forms the cosine-weighted cumulative
//!   violation probability and runs the uniform-random-frame Monte Carlo.
//! * [`noise`] emulates Poissonian coincidence counting and the
//!   one-standard-deviation classification of violations.
//! * [`cli`] is the command-line front end.
//!
//! Grid points and Monte Carlo samples are evaluated with rayon when the
//! `parallel` feature is enabled (the default). Results are bit-identical
//! with and without it.

pub mod chsh;
pub mod cli;
pub mod error;
pub mod exec;
pub mod frames;
pub mod noise;
pub mod quantum;
pub mod sampling;

pub use chsh::{chsh_combinations, closed_form_s, is_violation, ChshResult, CorrelationMatrix};
pub use error::{Error, Result};
pub use exec::Execution;
pub use frames::{alice_directions, bob_directions, chsh_at, FrameRotation, MeasurementPair};
pub use noise::{
    classify_violation, estimate_chsh, estimate_correlator, simulate_counts, CountRecord,
    EstimatedChsh, ViolationClass,
};
pub use quantum::{correlator, BlochVector, TwoQubitState};
pub use sampling::{
    cumulative_probability, mu, random_frame_violation_probability, scan,
    violation_fraction_continuous, SamplingSpec, ViolationCurve,
};

/// Classical (local hidden variable) bound of the CHSH parameter.
pub const LOCAL_BOUND: f64 = 2.0;

/// Tsirelson bound `2√2`.
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;
