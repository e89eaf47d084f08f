//! Spectral decision procedures for real vector-field systems
//! `X_j = d/dt_j + a_j(t) d/dx` on the torus `T^{n+1}` and their sum of squares.
//!
//! Coordinates are 0-based throughout the API: `t_0, ..., t_{n-1}`.

pub mod classifier;
pub mod coeffs;
pub mod diophantine;
pub mod error;
pub mod microlocal;
pub mod rational;
pub mod serde_big;
pub mod solver;
pub mod spectral;
pub mod status;
pub mod weights;

pub use coeffs::{CRational, FiniteTypeReport, SystemSpec, TrigPoly};
pub use diophantine::{DiophantineVerdict, ExactReal, WitnessSequence};
pub use error::{Error, Result};
pub use spectral::PartialFourierField;
pub use status::Status;
