//! Mode solver, counterexample construction, decay diagnostics and the
//! propagation-of-regularity check.

pub mod counterexample;
pub mod decay;
pub mod lemmas;
pub mod mode;
pub mod propagation;

pub use counterexample::{build_counterexample, Counterexample, CounterexampleReport, Level};
pub use decay::{decay_from_samples, decay_report, Band, DecayMode, DecayReport, DecayVerdict, Sample};
pub use mode::{mode_divisor, solve_mode, solve_system, Obstruction, ObstructionKind, SolveOutcome, DEFAULT_DIVISOR_FLOOR};
pub use lemmas::{derivative_closure, growth_bound, ClosureRow, GrowthBoundReport};
pub use propagation::{manufacture, propagation_check, BaseSource, PropagationInput, PropagationReport};
