//! Simultaneous approximability, off-resonance lower bounds and certified
//! small-divisor estimates for tagged real tuples.

pub mod approx;
pub mod divisor;
pub mod real;
pub mod witness;

pub use approx::{
    classify_sa, gs_condition_check, gs_condition_check_with, sa_scan, DiophantineVerdict, GammaSet, GsVerdict,
    SaCertificate, SaStatus, ScanRow, ScanTable, XiZeroStratum,
};
pub use divisor::{exp_lower_bound_check, ExpBoundCheck};
pub use real::ExactReal;
pub use witness::{factorial_witness, liouville_tuple, rational_witness, WitnessEntry, WitnessSequence};
