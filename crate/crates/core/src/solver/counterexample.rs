//! Non-smooth solutions `u = S^{-1} v`, `v = sum_nu e^{i(<tau^nu, t> + xi^nu x)}`,
//! built from a witness sequence of a closed system.
//!
//! Witness frequencies grow like `base^{nu!}`, so the report is computed
//! analytically in log scale: `|u^(t, xi^nu)| = 1` because the conjugation is
//! a pure phase, and `X_j u = S^{-1} (d/dt_j + i alpha_j xi) v` has modulus
//! `|tau_j + alpha_j xi|` on level `nu`. Only levels inside a finite window
//! are materialised as fields.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::decay::{decay_from_samples, DecayReport, Sample};
use crate::coeffs::{global_primitive_A, SystemSpec, TrigPoly};
use crate::diophantine::real::residual_enclosure;
use crate::diophantine::{ExactReal, WitnessSequence};
use crate::error::{Error, Result};
use crate::rational::{ln_abs, ln_bigint};
use crate::spectral::{conjugate, PartialFourierField};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Level {
    pub nu: u32,
    #[serde(with = "crate::serde_big::int_vec")]
    pub tau: Vec<BigInt>,
    #[serde(with = "crate::serde_big::int")]
    pub xi: BigInt,
    /// `sup_t |u^(t, xi)|`.
    pub u_sup: f64,
    /// `ln sup_t |(X_j u)^(t, xi)|` per `j` (certified upper bounds).
    pub ln_field_sup: Vec<f64>,
    /// `ln sup_t |(P u)^(t, xi)|`.
    pub ln_p_sup: f64,
    /// `ln C0 (1 + |(tau, xi)|)^{-nu}`.
    pub ln_bound: f64,
    pub within_bound: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub depth: usize,
    pub levels: Vec<Level>,
    pub u_decay: DecayReport,
    pub field_decay: Vec<DecayReport>,
    pub p_decay: DecayReport,
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub witness: WitnessSequence,
    /// The global primitive `A` of the closed system.
    pub phase: TrigPoly,
    pub report: CounterexampleReport,
    n: usize,
}

/// `ln |tau + alpha xi|` from an enclosure refined until it is tight to a
/// factor 2 (`-inf` for an exact zero).
fn ln_residual(alpha: &ExactReal, tau: &BigInt, xi: &BigInt) -> f64 {
    let mut bits = 64u64;
    loop {
        let (lo, hi) = residual_enclosure(alpha, tau, xi, bits);
        if hi.is_zero() {
            return f64::NEG_INFINITY;
        }
        let two = BigRational::from_integer(2.into());
        if !lo.is_zero() && hi <= &lo * &two || bits >= 1 << 22 {
            return ln_abs(&hi);
        }
        bits *= 2;
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Builds the counterexample of the given depth. The system must be closed
/// and the witness must validate against its means.
pub fn build_counterexample(witness: &WitnessSequence, sys: &SystemSpec, depth: usize) -> Result<Counterexample> {
    let phase = global_primitive_A(sys)?;
    let alphas = sys.alphas().ok_or_else(|| Error::InvalidInput("closed system without constant means".into()))?;
    if depth > witness.len() {
        return Err(Error::DepthTooSmall { certified: witness.len() });
    }
    let w = witness.truncated(depth);
    w.validate(&alphas)?;
    let n = sys.n();
    let mut levels = Vec::new();
    for (i, e) in w.entries.iter().enumerate() {
        let check = w.check_entry(i, &alphas)?;
        let ln_field_sup: Vec<f64> = e.tau.iter().zip(&alphas).map(|(t, a)| ln_residual(a, t, &e.xi)).collect();
        let ln_p_sup = log_sum_exp(&ln_field_sup.iter().map(|x| 2.0 * x).collect::<Vec<_>>());
        let within_bound = ln_field_sup.iter().all(|&x| x <= check.ln_bound) && check.ok;
        levels.push(Level {
            nu: e.nu,
            tau: e.tau.clone(),
            xi: e.xi.clone(),
            u_sup: 1.0,
            ln_field_sup,
            ln_p_sup,
            ln_bound: check.ln_bound,
            within_bound,
        });
    }
    let ln_xi: Vec<f64> = levels.iter().map(|l| ln_bigint(&l.xi)).collect();
    let samples = |f: &dyn Fn(&Level) -> f64| -> Vec<Sample> {
        levels.iter().zip(&ln_xi).map(|(l, &x)| Sample { ln_abs_xi: x, ln_value: f(l) }).collect()
    };
    let threshold = depth.saturating_sub(1) as f64;
    let u_decay = decay_from_samples(&samples(&|l| l.u_sup.ln()), None, threshold)?;
    let field_decay =
        (0..n).map(|j| decay_from_samples(&samples(&|l| l.ln_field_sup[j]), None, threshold)).collect::<Result<Vec<_>>>()?;
    let p_decay = decay_from_samples(&samples(&|l| l.ln_p_sup), None, threshold)?;
    Ok(Counterexample { witness: w, phase, report: CounterexampleReport { depth, levels, u_decay, field_decay, p_decay }, n })
}

impl Counterexample {
    /// The levels with `|xi| <= xi_window` and `|tau|_inf <= t_window`, as a
    /// partial Fourier field `S^{-1} v`.
    pub fn field(&self, xi_window: i64, t_window: usize) -> Result<PartialFourierField> {
        let mut v = PartialFourierField::new(self.n, xi_window, t_window)?;
        for l in &self.report.levels {
            let Some(xi) = l.xi.to_i64().filter(|x| x.abs() <= xi_window) else {
                continue;
            };
            let tau: Option<Vec<i64>> = l.tau.iter().map(|t| t.to_i64().filter(|x| x.unsigned_abs() as usize <= t_window)).collect();
            if let Some(tau) = tau {
                v.add_coeff(&tau, xi, Complex64::new(1.0, 0.0))?;
            }
        }
        conjugate(&v, &self.phase, -1)
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::liouville_tuple;
    use crate::spectral::apply_system_field;

    #[test]
    fn liouville_depth_three() {
        let (alphas, w) = liouville_tuple(1, 10, 3).unwrap();
        let sys = SystemSpec::constant(alphas).unwrap();
        let ce = build_counterexample(&w, &sys, 3).unwrap();
        let r = &ce.report;
        assert_eq!(r.levels.len(), 3);
        for l in &r.levels {
            assert_eq!(l.u_sup, 1.0);
            assert!(l.within_bound);
        }
        assert!(!r.u_decay.is_rapid());
        assert!(r.field_decay[0].k_hat >= 2.0 && r.field_decay[0].is_rapid());
        assert!(r.p_decay.is_rapid());
    }

    #[test]
    fn variable_closed_system_field_embedding() {
        // a = alpha + cos t: closed (n = 1), A = sin t
        let (alphas, w) = liouville_tuple(1, 2, 3).unwrap();
        let sys = SystemSpec::new(1, vec![TrigPoly::cos_t(1, 0)], Some(alphas)).unwrap();
        let ce = build_counterexample(&w, &sys, 3).unwrap();
        let u = ce.field(64, 64).unwrap();
        assert!(!u.is_lossy());
        let xs: Vec<i64> = u.blocks().keys().copied().collect();
        assert_eq!(xs, vec![4, 64]);
        for &xi in &xs {
            assert!((u.sup_t(xi) - 1.0).abs() < 1e-10);
        }
        // X u on the materialised levels matches the analytic modulus up to
        // cancellation error of order xi * eps
        let xu = apply_system_field(&u, &sys, 0).unwrap();
        for (l, &xi) in ce.report.levels.iter().zip(&xs) {
            let measured = xu.sup_t(xi);
            let exact = l.ln_field_sup[0].exp();
            assert!((measured - exact).abs() < 1e-10 * xi as f64, "{measured} vs {exact}");
        }
    }

    #[test]
    fn rejects_open_systems_and_bad_witnesses() {
        let (_, w) = liouville_tuple(2, 10, 3).unwrap();
        let open = SystemSpec::new(2, vec![TrigPoly::zero(2), TrigPoly::cos_t(2, 0)], None).unwrap();
        assert!(matches!(build_counterexample(&w, &open, 3), Err(Error::NotClosed(..))));
        let wrong = SystemSpec::constant(vec![ExactReal::sqrt(2).unwrap(), ExactReal::rational(1, 3)]).unwrap();
        assert!(matches!(build_counterexample(&w, &wrong, 3), Err(Error::WitnessInvalid { .. })));
    }
}
