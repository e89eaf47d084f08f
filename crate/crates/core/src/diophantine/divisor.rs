//! Certified comparison of `|e^{2 pi i alpha xi} - 1|` with `(1 + |xi|)^{-l}`.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::real::{dist_enclosure, ExactReal};
use crate::error::{Error, Result};
use crate::rational::{int, pi_fixed, pow_big, rat, sin_fixed, to_f64, Fixed};

const START_BITS: u32 = 64;
const CAP_BITS: u32 = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpBoundCheck {
    pub hypothesis_holds: bool,
    pub conclusion_holds: bool,
    /// `dist(alpha xi, Z)` (midpoint of the certified enclosure).
    pub distance: f64,
    /// `2 sin(pi dist)`.
    pub modulus: f64,
    pub bound: f64,
}

fn pi_at(bits: u32) -> Fixed {
    static PI64: OnceLock<Fixed> = OnceLock::new();
    if bits == START_BITS {
        PI64.get_or_init(|| pi_fixed(START_BITS)).clone()
    } else {
        pi_fixed(bits)
    }
}

enum Cmp {
    Ge,
    Lt,
    Unknown,
}

fn compare(lo: &BigRational, hi: &BigRational, t: &BigRational) -> Cmp {
    if lo >= t {
        Cmp::Ge
    } else if hi < t {
        Cmp::Lt
    } else {
        Cmp::Unknown
    }
}

/// Exact value of `2 sin(pi d)` compared with `t` at the special points of
/// Niven's theorem and at `d = 1/4, 1/3` where the value is a square root.
fn special(d: &BigRational, t: &BigRational) -> Option<(bool, f64)> {
    let cases: [(BigRational, BigRational); 5] = [
        (int(0), int(0)),
        (rat(1, 6), int(1)),
        (rat(1, 2), int(4)),
        (rat(1, 4), int(2)),
        (rat(1, 3), int(3)),
    ];
    for (point, square) in cases {
        if *d == point {
            let v = to_f64(&square).sqrt();
            return Some((square >= t * t, v));
        }
    }
    None
}

/// Checks the hypothesis `dist(alpha xi, Z) >= (1+|xi|)^{-l}` exactly and the
/// conclusion `|e^{2 pi i alpha xi} - 1| >= (1+|xi|)^{-l}` by interval
/// arithmetic with outward rounding; errors if the implication breaks.
pub fn exp_lower_bound_check(alpha: &ExactReal, xi: i64, ell: u32) -> Result<ExpBoundCheck> {
    if xi == 0 {
        return Err(Error::InvalidInput("xi must be nonzero".into()));
    }
    let t = BigRational::new(BigInt::one(), pow_big(&BigInt::from(1 + xi.unsigned_abs()), ell as u64));
    let x = BigRational::from_integer(BigInt::from(xi));
    let mut bits = START_BITS;
    loop {
        let (lo, hi) = alpha.enclosure(bits as u64 + 64);
        let (a, b) = (lo * &x, hi * &x);
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let (dl, dh) = dist_enclosure(&a, &b);
        let hyp = match compare(&dl, &dh, &t) {
            Cmp::Ge => Some(true),
            Cmp::Lt => Some(false),
            Cmp::Unknown => None,
        };
        let concl = if dl == dh {
            special(&dl, &t)
        } else {
            None
        };
        let concl = match concl {
            Some(c) => Some(c),
            None => {
                let pi = pi_at(bits);
                let arg = Fixed::from_bounds(&dl, &dh, bits).mul(&pi);
                let s = sin_fixed(&arg);
                let two = BigRational::from_integer(BigInt::from(2));
                let (vl, vh) = (&two * s.lo_rational(), &two * s.hi_rational());
                let vl = if vl.is_negative() { BigRational::zero() } else { vl };
                match compare(&vl, &vh, &t) {
                    Cmp::Ge => Some((true, to_f64(&vl))),
                    Cmp::Lt => Some((false, to_f64(&vh))),
                    Cmp::Unknown => None,
                }
            }
        };
        if let (Some(h), Some((c, v))) = (hyp, concl) {
            if h && !c {
                return Err(Error::AssertionFailure(format!(
                    "hypothesis holds but conclusion fails for alpha = {alpha}, xi = {xi}, l = {ell}"
                )));
            }
            return Ok(ExpBoundCheck {
                hypothesis_holds: h,
                conclusion_holds: c,
                distance: to_f64(&((&dl + &dh) / int(2))),
                modulus: v,
                bound: to_f64(&t),
            });
        }
        if bits >= CAP_BITS {
            return Err(Error::AssertionFailure(format!(
                "comparison undecided at {CAP_BITS} bits for alpha = {alpha}, xi = {xi}, l = {ell}"
            )));
        }
        bits *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antipodal_point() {
        // l = 0 puts the bound at 1 > 1/2, so the hypothesis is false there
        let r = exp_lower_bound_check(&ExactReal::rational(1, 2), 1, 0).unwrap();
        assert!(!r.hypothesis_holds);
        assert!(r.conclusion_holds);
        assert_eq!(r.modulus, 2.0);
        let r = exp_lower_bound_check(&ExactReal::rational(1, 2), 1, 1).unwrap();
        assert!(r.hypothesis_holds && r.conclusion_holds);
    }

    #[test]
    fn third_gives_sqrt3() {
        let r = exp_lower_bound_check(&ExactReal::rational(1, 3), 1, 2).unwrap();
        assert!(r.hypothesis_holds && r.conclusion_holds);
        assert!((r.modulus - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn far_from_integers_reaches_sqrt3() {
        for (p, q) in [(2, 5), (3, 7), (5, 11), (4, 9)] {
            let r = exp_lower_bound_check(&ExactReal::rational(p, q), 1, 0).unwrap();
            assert!(r.distance >= 1.0 / 3.0);
            assert!(r.modulus >= 3f64.sqrt() - 1e-12);
        }
    }

    #[test]
    fn near_integer_branch() {
        // dist = 1/1000, bound = 1/1001
        let r = exp_lower_bound_check(&ExactReal::rational(1, 1000), 1000 + 1, 1).unwrap();
        assert!(r.hypothesis_holds);
        assert!(r.conclusion_holds);
        let r = exp_lower_bound_check(&ExactReal::rational(1, 5000), 1, 1).unwrap();
        assert!(!r.hypothesis_holds);
    }

    #[test]
    fn irrational_tags() {
        let r = exp_lower_bound_check(&ExactReal::sqrt(2).unwrap(), 5, 1).unwrap();
        let d = (5.0 * 2f64.sqrt() - 7.0).abs();
        assert!((r.distance - d).abs() < 1e-15);
        assert_eq!(r.hypothesis_holds, d >= 1.0 / 6.0);
        assert!(exp_lower_bound_check(&ExactReal::liouville(10, 4).unwrap(), 100, 1).is_ok());
    }

    #[test]
    fn zero_xi_rejected() {
        assert!(exp_lower_bound_check(&ExactReal::rational(1, 3), 0, 1).is_err());
    }
}
