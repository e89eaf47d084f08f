//! Small helpers around `BigRational`: parsing `p/q` literals, rounding and
//! fixed-point outward-rounded intervals used to certify comparisons.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let err = || Error::InvalidRational(s.to_string());
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| err())?;
            let q: BigInt = q.trim().parse().map_err(|_| err())?;
            if q.is_zero() {
                return Err(err());
            }
            Ok(BigRational::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().map_err(|_| err())?;
            Ok(BigRational::from_integer(p))
        }
    }
}

pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(p: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(p))
}

/// Nearest integer, ties to even.
pub fn round_half_even(x: &BigRational) -> BigInt {
    let fl = x.floor();
    let frac = x - &fl;
    let half = rat(1, 2);
    let base = fl.to_integer();
    if frac < half {
        base
    } else if frac > half {
        base + 1
    } else if base.is_even() {
        base
    } else {
        base + 1
    }
}

/// Distance from `x` to the nearest integer.
pub fn dist_to_int(x: &BigRational) -> BigRational {
    let n = BigRational::from_integer(round_half_even(x));
    (x - n).abs()
}

/// Lossy conversion that never returns NaN for huge or tiny magnitudes.
pub fn to_f64(q: &BigRational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() && (v != 0.0 || q.is_zero()) {
            return v;
        }
    }
    let sign = if q.is_negative() { -1.0 } else { 1.0 };
    sign * ln_abs(q).exp()
}

/// Natural logarithm of a nonzero big integer's absolute value.
pub fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top: BigInt = n.abs() >> shift;
    top.to_f64().unwrap_or(1.0).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of |q|; `-inf` for zero.
pub fn ln_abs(q: &BigRational) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_bigint(q.numer()) - ln_bigint(q.denom())
}

/// Integer square root (floor) of a nonnegative big integer.
pub fn isqrt(n: &BigInt) -> BigInt {
    debug_assert!(!n.is_negative());
    n.sqrt()
}

/// Smallest integer `r` with `r*r >= n`.
pub fn ceil_sqrt(n: &BigInt) -> BigInt {
    let r = isqrt(n);
    if &r * &r == *n {
        r
    } else {
        r + 1
    }
}

pub fn lcm_of<'a>(items: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    items.into_iter().fold(BigInt::one(), |acc, d| acc.lcm(d))
}

pub fn pow_big(base: &BigInt, exp: u64) -> BigInt {
    num_traits::pow::pow(base.clone(), exp as usize)
}

/// Closed interval `[lo, hi] * 2^-prec` with outward rounding at every step.
#[derive(Clone, Debug)]
pub struct Fixed {
    pub lo: BigInt,
    pub hi: BigInt,
    pub prec: u32,
}

fn floor_shift(n: &BigInt, k: u32) -> BigInt {
    // arithmetic shift right rounds toward -inf for BigInt
    n >> k
}

fn ceil_shift(n: &BigInt, k: u32) -> BigInt {
    -((-n) >> k)
}

impl Fixed {
    pub fn from_rational(q: &BigRational, prec: u32) -> Self {
        let scaled = q * BigRational::from_integer(BigInt::one() << prec);
        Fixed {
            lo: scaled.floor().to_integer(),
            hi: scaled.ceil().to_integer(),
            prec,
        }
    }

    pub fn from_bounds(lo: &BigRational, hi: &BigRational, prec: u32) -> Self {
        let scale = BigRational::from_integer(BigInt::one() << prec);
        Fixed {
            lo: (lo * &scale).floor().to_integer(),
            hi: (hi * &scale).ceil().to_integer(),
            prec,
        }
    }

    pub fn add(&self, o: &Fixed) -> Fixed {
        Fixed { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi, prec: self.prec }
    }

    pub fn sub(&self, o: &Fixed) -> Fixed {
        Fixed { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo, prec: self.prec }
    }

    pub fn mul(&self, o: &Fixed) -> Fixed {
        let cands = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let min = cands.iter().min().unwrap();
        let max = cands.iter().max().unwrap();
        Fixed { lo: floor_shift(min, self.prec), hi: ceil_shift(max, self.prec), prec: self.prec }
    }

    pub fn div_int(&self, k: &BigInt) -> Fixed {
        debug_assert!(k.is_positive());
        Fixed { lo: self.lo.div_floor(k), hi: -((-&self.hi).div_floor(k)), prec: self.prec }
    }

    pub fn widen(&self, eps_units: &BigInt) -> Fixed {
        Fixed { lo: &self.lo - eps_units, hi: &self.hi + eps_units, prec: self.prec }
    }

    pub fn lo_rational(&self) -> BigRational {
        BigRational::new(self.lo.clone(), BigInt::one() << self.prec)
    }

    pub fn hi_rational(&self) -> BigRational {
        BigRational::new(self.hi.clone(), BigInt::one() << self.prec)
    }

    pub fn width_units(&self) -> BigInt {
        &self.hi - &self.lo
    }

    pub fn abs_bound_units(&self) -> BigInt {
        self.lo.abs().max(self.hi.abs())
    }
}

/// Enclosure of pi at `prec` bits via Machin's formula.
pub fn pi_fixed(prec: u32) -> Fixed {
    let work = prec + 16;
    let a5 = atan_inv(5, work);
    let a239 = atan_inv(239, work);
    let sixteen = Fixed { lo: BigInt::from(16) << work, hi: BigInt::from(16) << work, prec: work };
    let four = Fixed { lo: BigInt::from(4) << work, hi: BigInt::from(4) << work, prec: work };
    let pi = sixteen.mul(&a5).sub(&four.mul(&a239));
    Fixed { lo: floor_shift(&pi.lo, 16), hi: ceil_shift(&pi.hi, 16), prec }
}

/// Enclosure of atan(1/m) for integer m >= 2.
fn atan_inv(m: u64, prec: u32) -> Fixed {
    let one = BigInt::one() << prec;
    let m = BigInt::from(m);
    let m2 = &m * &m;
    let mut power = m.clone();
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    let mut k: u64 = 0;
    loop {
        let denom = &power * BigInt::from(2 * k + 1);
        let t_lo = one.div_floor(&denom);
        let t_hi = -((-&one).div_floor(&denom));
        if t_lo.is_zero() {
            break;
        }
        if k.is_multiple_of(2) {
            lo += &t_lo;
            hi += &t_hi;
        } else {
            lo -= &t_hi;
            hi -= &t_lo;
        }
        power *= &m2;
        k += 1;
    }
    // the omitted alternating tail is below one unit
    Fixed { lo: lo - 2, hi: hi + 2, prec }
}

/// Enclosure of sin(x) for an enclosure `x` of a point in [0, pi/2].
pub fn sin_fixed(x: &Fixed) -> Fixed {
    let prec = x.prec;
    let x2 = x.mul(x);
    let mut term = x.clone();
    let mut sum = x.clone();
    let mut k: u64 = 0;
    loop {
        let d = BigInt::from((2 * k + 2) * (2 * k + 3));
        term = term.mul(&x2).div_int(&d);
        let bound = term.abs_bound_units();
        if k.is_multiple_of(2) {
            sum = sum.sub(&term);
        } else {
            sum = sum.add(&term);
        }
        k += 1;
        if bound <= BigInt::one() || k > 4 * prec as u64 {
            // alternating series with decreasing terms: remainder below the next term
            let rem = term.mul(&x2).div_int(&BigInt::from((2 * k + 2) * (2 * k + 3)));
            return sum.widen(&(rem.abs_bound_units() + 1));
        }
    }
}

pub fn sign_of(q: &BigRational) -> Sign {
    q.numer().sign()
}
