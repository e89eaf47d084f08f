//! Tagged exact reals with certified rational enclosures.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{format_rational, int, parse_rational, pow_big, round_half_even};

/// A real number in one of the exactly representable classes.
///
/// `Liouville { base, depth, offset }` denotes `offset + sum_{k>=1} base^{-k!}`;
/// `depth` is the number of certified witness levels requested for it.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactReal {
    Rational(BigRational),
    Quadratic { a: BigRational, b: BigRational, d: i64 },
    Liouville { base: u32, depth: u32, offset: BigRational },
    Float(f64),
}

fn is_square(d: i64) -> bool {
    if d < 0 {
        return false;
    }
    let r = (d as f64).sqrt().round() as i64;
    (r - 1..=r + 1).any(|x| x >= 0 && x * x == d)
}

impl ExactReal {
    pub fn rational(p: i64, q: i64) -> Self {
        ExactReal::Rational(crate::rational::rat(p, q))
    }

    pub fn integer(p: i64) -> Self {
        ExactReal::Rational(int(p))
    }

    /// `a + b sqrt(d)`; rejects `b = 0` and perfect squares `d`.
    pub fn quadratic(a: BigRational, b: BigRational, d: i64) -> Result<Self> {
        if b.is_zero() || d < 2 || is_square(d) {
            return Err(Error::InvalidInput(format!(
                "quadratic irrational needs b != 0 and non-square d >= 2 (got d = {d})"
            )));
        }
        Ok(ExactReal::Quadratic { a, b, d })
    }

    pub fn sqrt(d: i64) -> Result<Self> {
        Self::quadratic(BigRational::zero(), BigRational::one(), d)
    }

    pub fn liouville(base: u32, depth: u32) -> Result<Self> {
        Self::liouville_shifted(base, depth, BigRational::zero())
    }

    pub fn liouville_shifted(base: u32, depth: u32, offset: BigRational) -> Result<Self> {
        if base < 2 || depth < 1 {
            return Err(Error::InvalidInput(format!(
                "liouville needs base >= 2 and depth >= 1 (got {base}, {depth})"
            )));
        }
        Ok(ExactReal::Liouville { base, depth, offset })
    }

    pub fn float(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::InvalidInput("float tag must be finite".into()));
        }
        Ok(ExactReal::Float(v))
    }

    pub fn zero() -> Self {
        ExactReal::Rational(BigRational::zero())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            ExactReal::Rational(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, ExactReal::Rational(_))
    }

    /// Adds an exact rational.
    pub fn shifted(&self, q: &BigRational) -> ExactReal {
        match self {
            ExactReal::Rational(p) => ExactReal::Rational(p + q),
            ExactReal::Quadratic { a, b, d } => ExactReal::Quadratic { a: a + q, b: b.clone(), d: *d },
            ExactReal::Liouville { base, depth, offset } => {
                ExactReal::Liouville { base: *base, depth: *depth, offset: offset + q }
            }
            ExactReal::Float(v) => ExactReal::Float(v + crate::rational::to_f64(q)),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExactReal::Float(v) => *v,
            ExactReal::Rational(q) => crate::rational::to_f64(q),
            _ => {
                let (lo, hi) = self.enclosure(64);
                crate::rational::to_f64(&((lo + hi) / int(2)))
            }
        }
    }

    /// Rational bounds `lo <= self <= hi` with `hi - lo <= 2^-bits` (the
    /// Liouville tail bound can be up to twice that).
    pub fn enclosure(&self, bits: u64) -> (BigRational, BigRational) {
        match self {
            ExactReal::Rational(q) => (q.clone(), q.clone()),
            ExactReal::Float(v) => {
                let q = BigRational::from_float(*v).expect("finite float");
                (q.clone(), q)
            }
            ExactReal::Quadratic { a, b, d } => {
                let extra = b.numer().bits() + 2;
                let p = bits + extra;
                let scale = BigInt::one() << p;
                let s = (BigInt::from(*d) * &scale * &scale).sqrt();
                let lo_r = BigRational::new(s.clone(), scale.clone());
                let hi_r = BigRational::new(s + 1, scale);
                let (x, y) = (b * &lo_r, b * &hi_r);
                let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                (a + lo, a + hi)
            }
            ExactReal::Liouville { base, offset, .. } => {
                let lb = (*base as f64).log2();
                let mut level: u64 = 1;
                while (factorial_u64(level + 1) as f64) * lb < bits as f64 + 2.0 {
                    level += 1;
                }
                let (sum, tail) = liouville_partial(*base, level);
                let lo = offset + sum;
                let hi = &lo + tail;
                (lo, hi)
            }
        }
    }

    /// Nearest integer to `self * xi`, decided from an enclosure (exact for
    /// rationals; irrational products are never half-integers).
    pub fn round_times(&self, xi: &BigInt) -> BigInt {
        let bits = xi.bits() + 16;
        let (lo, hi) = self.enclosure(bits);
        let x = BigRational::from_integer(xi.clone());
        let mid = (lo * &x + hi * &x) / int(2);
        round_half_even(&mid)
    }
}

pub(crate) fn factorial_u64(k: u64) -> u64 {
    (1..=k).product::<u64>().max(1)
}

/// Exact partial sum `sum_{k=1}^{level} base^{-k!}` and the tail bound
/// `2 base^{-(level+1)!}`.
pub fn liouville_partial(base: u32, level: u64) -> (BigRational, BigRational) {
    let b = BigInt::from(base);
    let top = factorial_u64(level);
    let mut num = BigInt::zero();
    for k in 1..=level {
        num += pow_big(&b, top - factorial_u64(k));
    }
    let den = pow_big(&b, top);
    let tail = BigRational::new(BigInt::from(2), pow_big(&b, factorial_u64(level + 1)));
    (BigRational::new(num, den), tail)
}

impl std::fmt::Display for ExactReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExactReal::Rational(q) => write!(f, "{}", format_rational(q)),
            ExactReal::Quadratic { a, b, d } => {
                write!(f, "{} + {}*sqrt({})", format_rational(a), format_rational(b), d)
            }
            ExactReal::Liouville { base, offset, .. } => {
                if offset.is_zero() {
                    write!(f, "L({base})")
                } else {
                    write!(f, "{} + L({base})", format_rational(offset))
                }
            }
            ExactReal::Float(v) => write!(f, "{v:e}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntLit {
    Num(i64),
    Str(String),
}

impl IntLit {
    fn to_big(&self) -> Result<BigInt> {
        match self {
            IntLit::Num(n) => Ok(BigInt::from(*n)),
            IntLit::Str(s) => s.trim().parse().map_err(|_| Error::InvalidRational(s.clone())),
        }
    }

    fn from_big(n: &BigInt) -> Self {
        match n.to_i64() {
            Some(v) => IntLit::Num(v),
            None => IntLit::Str(n.to_string()),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "lowercase", deny_unknown_fields)]
enum Repr {
    Rational { p: IntLit, q: IntLit },
    Quad { a: String, b: String, d: i64 },
    Liouville {
        base: u32,
        depth: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<String>,
    },
    Float { v: f64 },
}

impl Serialize for ExactReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            ExactReal::Rational(q) => Repr::Rational { p: IntLit::from_big(q.numer()), q: IntLit::from_big(q.denom()) },
            ExactReal::Quadratic { a, b, d } => {
                Repr::Quad { a: format_rational(a), b: format_rational(b), d: *d }
            }
            ExactReal::Liouville { base, depth, offset } => Repr::Liouville {
                base: *base,
                depth: *depth,
                offset: if offset.is_zero() { None } else { Some(format_rational(offset)) },
            },
            ExactReal::Float(v) => Repr::Float { v: *v },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = Repr::deserialize(d)?;
        let out = match repr {
            Repr::Rational { p, q } => (|| {
                let p = p.to_big()?;
                let q = q.to_big()?;
                if q.is_zero() {
                    return Err(Error::InvalidRational(format!("{p}/0")));
                }
                Ok(ExactReal::Rational(BigRational::new(p, q)))
            })(),
            Repr::Quad { a, b, d } => (|| ExactReal::quadratic(parse_rational(&a)?, parse_rational(&b)?, d))(),
            Repr::Liouville { base, depth, offset } => (|| {
                let off = match offset {
                    Some(s) => parse_rational(&s)?,
                    None => BigRational::zero(),
                };
                ExactReal::liouville_shifted(base, depth, off)
            })(),
            Repr::Float { v } => ExactReal::float(v),
        };
        out.map_err(D::Error::custom)
    }
}

/// Enclosure of `dist(x, Z)` for `x` in `[lo, hi]`.
pub fn dist_enclosure(lo: &BigRational, hi: &BigRational) -> (BigRational, BigRational) {
    let half = crate::rational::rat(1, 2);
    let d = |x: &BigRational| crate::rational::dist_to_int(x);
    let (dl, dh) = (d(lo), d(hi));
    let mut min = if dl < dh { dl.clone() } else { dh.clone() };
    let mut max = if dl > dh { dl } else { dh };
    // an integer inside the interval
    if lo.ceil() <= hi.floor() {
        min = BigRational::zero();
    }
    // a half-integer inside the interval
    let sh_lo = lo - &half;
    let sh_hi = hi - &half;
    if sh_lo.ceil() <= sh_hi.floor() {
        max = half;
    }
    (min, max)
}

/// Enclosure of `|tau + alpha * xi|` at the given precision.
pub fn residual_enclosure(alpha: &ExactReal, tau: &BigInt, xi: &BigInt, bits: u64) -> (BigRational, BigRational) {
    let (lo, hi) = alpha.enclosure(bits + xi.bits());
    let x = BigRational::from_integer(xi.clone());
    let t = BigRational::from_integer(tau.clone());
    let (mut a, mut b) = (&t + lo * &x, &t + hi * &x);
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    if a.is_negative() && b.is_positive() || a.is_zero() || b.is_zero() {
        let m = if a.abs() > b.abs() { a.abs() } else { b.abs() };
        (BigRational::zero(), m)
    } else if b.is_negative() {
        (b.abs(), a.abs())
    } else {
        (a, b)
    }
}

pub(crate) fn common_denominator(alphas: &[ExactReal]) -> BigInt {
    let mut q = BigInt::one();
    for a in alphas {
        match a {
            ExactReal::Rational(r) => q = q.lcm(r.denom()),
            ExactReal::Liouville { offset, .. } => q = q.lcm(offset.denom()),
            _ => {}
        }
    }
    q
}
