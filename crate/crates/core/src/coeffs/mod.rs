//! Exact algebra of trigonometric-polynomial coefficients.

pub mod brackets;
pub mod system;
pub mod trig;

pub use brackets::{commutator_bracket, finite_type_exists, global_primitive_A, is_closed, FiniteTypeReport};
pub use system::SystemSpec;
pub use trig::{CRational, TrigPoly};
