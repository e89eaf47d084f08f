//! Witness sequences certifying simultaneous approximability.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::real::{common_denominator, liouville_partial, residual_enclosure, ExactReal};
use crate::error::{Error, Result};
use crate::rational::{ceil_sqrt, ln_abs, pow_big};

const MAX_BITS: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessEntry {
    #[serde(with = "crate::serde_big::int_vec")]
    pub tau: Vec<BigInt>,
    #[serde(with = "crate::serde_big::int")]
    pub xi: BigInt,
    pub nu: u32,
}

impl WitnessEntry {
    /// `|(tau, xi)|^2`.
    pub fn norm_sq(&self) -> BigInt {
        self.tau.iter().map(|t| t * t).sum::<BigInt>() + &self.xi * &self.xi
    }

    /// Rational lower bound of `C0 (1 + |(tau, xi)|)^{-nu}`.
    pub fn bound(&self, c0: &BigRational) -> BigRational {
        let base = ceil_sqrt(&self.norm_sq()) + 1;
        c0 / BigRational::from_integer(pow_big(&base, self.nu as u64))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSequence {
    pub entries: Vec<WitnessEntry>,
    #[serde(with = "crate::serde_big::rational")]
    pub c0: BigRational,
}

/// Outcome of checking one coordinate of one entry.
#[derive(Clone, Debug)]
pub struct EntryCheck {
    pub ok: bool,
    /// Natural log of the certified upper bound of `max_j |tau_j + alpha_j xi|`
    /// (`-inf` when exactly zero).
    pub ln_residual: f64,
    pub ln_bound: f64,
}

impl WitnessSequence {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncated(&self, depth: usize) -> WitnessSequence {
        WitnessSequence { entries: self.entries.iter().take(depth).cloned().collect(), c0: self.c0.clone() }
    }

    /// Certifies one entry in exact arithmetic, refining enclosures until the
    /// comparison is decided.
    pub fn check_entry(&self, i: usize, alphas: &[ExactReal]) -> Result<EntryCheck> {
        let e = &self.entries[i];
        if e.tau.len() != alphas.len() {
            return Err(Error::DimensionMismatch { expected: alphas.len(), got: e.tau.len() });
        }
        if e.xi.is_zero() {
            return Ok(EntryCheck { ok: false, ln_residual: f64::INFINITY, ln_bound: f64::NEG_INFINITY });
        }
        let bound = e.bound(&self.c0);
        let need = e.xi.bits() + bound.denom().bits().saturating_sub(bound.numer().bits()) + 32;
        let mut worst = BigRational::zero();
        for (t, a) in e.tau.iter().zip(alphas) {
            let mut bits = need.max(64);
            loop {
                let (lo, hi) = residual_enclosure(a, t, &e.xi, bits);
                if hi < bound {
                    if hi > worst {
                        worst = hi;
                    }
                    break;
                }
                if lo >= bound || bits >= MAX_BITS {
                    return Ok(EntryCheck { ok: false, ln_residual: ln_abs(&lo), ln_bound: ln_abs(&bound) });
                }
                bits *= 2;
            }
        }
        Ok(EntryCheck { ok: true, ln_residual: ln_abs(&worst), ln_bound: ln_abs(&bound) })
    }

    /// Re-validates every stored inequality and the strict growth of `|(tau, xi)|`.
    pub fn validate(&self, alphas: &[ExactReal]) -> Result<()> {
        if !self.c0.is_positive() {
            return Err(Error::WitnessInvalid { entry: 0 });
        }
        let mut prev: Option<BigInt> = None;
        for i in 0..self.entries.len() {
            let n = self.entries[i].norm_sq();
            if let Some(p) = &prev {
                if &n <= p {
                    return Err(Error::WitnessInvalid { entry: i });
                }
            }
            prev = Some(n);
            if !self.check_entry(i, alphas)?.ok {
                return Err(Error::WitnessInvalid { entry: i });
            }
        }
        Ok(())
    }
}

/// Exact resonance witness for an all-rational tuple: `xi = Q nu!`,
/// `tau = -alpha xi`, so every residual vanishes.
pub fn rational_witness(alphas: &[ExactReal], len: u32) -> Option<WitnessSequence> {
    let qs: Vec<&BigRational> = alphas.iter().map(|a| a.as_rational()).collect::<Option<_>>()?;
    let q = common_denominator(alphas);
    let mut entries = Vec::new();
    let mut fact = BigInt::one();
    for nu in 1..=len {
        fact *= nu;
        let xi = &q * &fact;
        let x = BigRational::from_integer(xi.clone());
        let tau = qs.iter().map(|a| -(*a * &x).to_integer()).collect();
        entries.push(WitnessEntry { tau, xi, nu });
    }
    Some(WitnessSequence { entries, c0: BigRational::one() })
}

/// Witness from factorial partial sums, for tuples mixing rationals and
/// factorial-Liouville numbers of one common base. Entry `nu` sits at level
/// `nu + shift`, `xi = Q base^{(nu+shift)!}`; the shift is the smallest in
/// `1..=4` that lets every entry certify with `C0 = 1`.
pub fn factorial_witness(alphas: &[ExactReal], len: u32) -> Option<WitnessSequence> {
    let mut base = None;
    for a in alphas {
        match a {
            ExactReal::Rational(_) => {}
            ExactReal::Liouville { base: b, .. } => match base {
                None => base = Some(*b),
                Some(b0) if b0 == *b => {}
                _ => return None,
            },
            _ => return None,
        }
    }
    let base = base?;
    let q = common_denominator(alphas);
    let b = BigInt::from(base);
    'shift: for shift in 1..=4u64 {
        let mut entries = Vec::new();
        for nu in 1..=len as u64 {
            let level = nu + shift;
            if level > 9 {
                continue 'shift;
            }
            let top = super::real::factorial_u64(level);
            if (top as f64) * (base as f64).log2() * (nu as f64 + 2.0) > MAX_BITS as f64 {
                continue 'shift;
            }
            let xi = &q * pow_big(&b, top);
            let tau = alphas
                .iter()
                .map(|a| match a {
                    ExactReal::Liouville { offset, .. } => {
                        // offset*xi + S_level*xi is an integer by construction of Q
                        let (s, _) = liouville_partial(base, level);
                        let x = BigRational::from_integer(xi.clone());
                        -((offset + s) * x).to_integer()
                    }
                    other => -other.round_times(&xi),
                })
                .collect();
            entries.push(WitnessEntry { tau, xi, nu: nu as u32 });
        }
        let w = WitnessSequence { entries, c0: BigRational::one() };
        if w.validate(alphas).is_ok() {
            return Some(w);
        }
    }
    None
}

/// `n` copies of the factorial-Liouville number of the given base and a
/// witness of length `depth` valid for all coordinates.
pub fn liouville_tuple(n: usize, base: u32, depth: u32) -> Result<(Vec<ExactReal>, WitnessSequence)> {
    if depth < 3 {
        return Err(Error::DepthTooSmall { certified: depth as usize });
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let alpha = ExactReal::liouville(base, depth)?;
    let alphas = vec![alpha; n];
    // certify as many entries as possible, at least three
    let mut len = depth;
    while len >= 3 {
        if let Some(w) = factorial_witness(&alphas, len) {
            return Ok((alphas, w));
        }
        len -= 1;
    }
    Err(Error::DepthTooSmall { certified: 0 })
}
