//! Discrete pseudodifferential symbols, frequency cones and the numerical
//! microlocal checks built on them.

pub mod analysis;
pub mod cone;
pub mod symbol;

pub use analysis::{
    elliptic_in_direction, fan, full_fourier, regularity_gain, singular_directions, t_elliptic_cone_decay,
    verify_microlocal_inclusion, EllipticReport, GainReport, InclusionReport, SingularDirectionReport, TConeReport,
};
pub use cone::{cone_decay, cone_sobolev_norm, Cone};
pub use symbol::{apply_symbol, restrict_classical_symbol, DiscreteSymbol, FourierField, Seminorm, SymbolSpec};
