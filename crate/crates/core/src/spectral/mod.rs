//! Partial Fourier fields `u^(t, xi)` and the operators acting on them.

pub mod field;
pub mod grid;
pub mod ops;

pub use field::{synthesize, ModeSpec, PartialFourierField, TBlock};
pub use ops::{
    apply_multiplier, apply_sum_of_squares, apply_system_field, apply_vector_field, conjugate, energy_identity, intertwining_residual,
    partial_conjugation, phase_window, EnergyRow, Multiplier,
};
