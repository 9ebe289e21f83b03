//! Modeling and simulation toolkit for atomic-vapor, photon-number-resolving
//! optical detectors.
//!
//! The crate covers four layers:
//!
//! * [`model`] — the closed-form detector model: collision time, absorption
//!   length, readout time, Zeeman detuning, dark counts, and the efficiency
//!   budget, as pure functions of a [`DetectorDesign`].
//! * [`dynamics`] — the Markov-reduced single-atom absorption equation,
//!   solved in closed form for square pulses and numerically for arbitrary
//!   envelopes.
//! * [`oracle`] — brute-force single-excitation Schrödinger dynamics over a
//!   discretized field-mode comb, the ground truth the Markov layer is
//!   checked against.
//! * [`readout`] and [`explore`] — Monte Carlo cycling-transition readout
//!   with dark counts and photon-number inference, and parameter
//!   sweeps/derivative-free design optimization.
//!
//! All math is generic over the floating-point [`Scalar`]; `f64` aliases for
//! the main types are exported at the crate root.

pub mod constants;
pub mod design;
pub mod dynamics;
pub mod error;
pub mod explore;
pub mod input;
pub mod model;
pub mod ode;
pub mod oracle;
pub mod pulse;
pub mod readout;
pub mod scalar;
pub mod simplex;
pub mod species;

pub use design::{DetectorDesign, ValidityWarning, Violation};
pub use error::{Error, Result};
pub use model::{EfficiencyBudget, FrequencyConvention, ModelReport, NetDarkCount};
pub use scalar::Scalar;
pub use species::AtomicSpecies;

/// `f64` aliases for the main model types.
pub type Design64 = DetectorDesign<f64>;
pub type Species64 = AtomicSpecies<f64>;
pub type Budget64 = EfficiencyBudget<f64>;
pub type Report64 = ModelReport<f64>;

/// `f32` aliases for the main model types.
pub type Design32 = DetectorDesign<f32>;
pub type Species32 = AtomicSpecies<f32>;
pub type Budget32 = EfficiencyBudget<f32>;
