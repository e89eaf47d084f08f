//! Real trigonometric polynomials on `T^n` with exact rational coefficients.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{int, to_f64};

/// Complex number with exact rational parts.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl CRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        CRational { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        CRational { re, im: BigRational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        CRational { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        CRational { re: &self.re * s, im: &self.im * s }
    }

    /// Multiplication by `i`.
    pub fn times_i(&self) -> Self {
        CRational { re: -self.im.clone(), im: self.re.clone() }
    }

    pub fn mul(&self, o: &CRational) -> Self {
        CRational {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    pub fn add(&self, o: &CRational) -> Self {
        CRational { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(to_f64(&self.re), to_f64(&self.im))
    }
}

/// `sum_k c_k e^{i<k,t>}` with `c_{-k} = conj(c_k)`; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrigPoly {
    dim: usize,
    terms: BTreeMap<Vec<i64>, CRational>,
}

fn neg_freq(k: &[i64]) -> Vec<i64> {
    k.iter().map(|x| -x).collect()
}

impl TrigPoly {
    pub fn zero(dim: usize) -> Self {
        TrigPoly { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: BigRational) -> Self {
        let mut p = Self::zero(dim);
        p.insert(vec![0; dim], CRational::real(c));
        p
    }

    fn unit(dim: usize, j: usize) -> Vec<i64> {
        let mut k = vec![0; dim];
        k[j] = 1;
        k
    }

    /// `amp * cos(<k, t>)`.
    pub fn cos(dim: usize, k: &[i64], amp: BigRational) -> Result<Self> {
        Self::check_freq(dim, k)?;
        let half = amp / int(2);
        let mut p = Self::zero(dim);
        p.insert(k.to_vec(), CRational::real(half.clone()));
        p.insert(neg_freq(k), CRational::real(half));
        Ok(p)
    }

    /// `amp * sin(<k, t>)`.
    pub fn sin(dim: usize, k: &[i64], amp: BigRational) -> Result<Self> {
        Self::check_freq(dim, k)?;
        let half = amp / int(2);
        let mut p = Self::zero(dim);
        p.insert(k.to_vec(), CRational::new(BigRational::zero(), -half.clone()));
        p.insert(neg_freq(k), CRational::new(BigRational::zero(), half));
        Ok(p)
    }

    /// `cos t_j` (0-based coordinate).
    pub fn cos_t(dim: usize, j: usize) -> Self {
        Self::cos(dim, &Self::unit(dim, j), int(1)).expect("valid unit frequency")
    }

    /// `sin t_j` (0-based coordinate).
    pub fn sin_t(dim: usize, j: usize) -> Self {
        Self::sin(dim, &Self::unit(dim, j), int(1)).expect("valid unit frequency")
    }

    fn check_freq(dim: usize, k: &[i64]) -> Result<()> {
        if k.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: k.len() });
        }
        Ok(())
    }

    /// Builds from explicit terms; duplicates are summed and Hermitian
    /// symmetry is enforced.
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<i64>, CRational)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let mut p = Self::zero(dim);
        for (k, c) in terms {
            Self::check_freq(dim, &k)?;
            let cur = p.terms.remove(&k).unwrap_or_default();
            p.insert(k, cur.add(&c));
        }
        p.check_hermitian()?;
        Ok(p)
    }

    fn insert(&mut self, k: Vec<i64>, c: CRational) {
        if c.is_zero() {
            self.terms.remove(&k);
        } else {
            self.terms.insert(k, c);
        }
    }

    fn accumulate(&mut self, k: Vec<i64>, c: &CRational) {
        let cur = self.terms.remove(&k).unwrap_or_default();
        self.insert(k, cur.add(c));
    }

    pub fn check_hermitian(&self) -> Result<()> {
        for (k, c) in &self.terms {
            let partner = self.terms.get(&neg_freq(k));
            let ok = match partner {
                Some(p) => *p == c.conj(),
                None => false,
            };
            if !ok {
                return Err(Error::NotHermitian(k.clone()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<Vec<i64>, CRational> {
        &self.terms
    }

    pub fn coeff(&self, k: &[i64]) -> CRational {
        self.terms.get(k).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|k| k.iter().all(|&x| x == 0))
    }

    /// The zero-frequency coefficient.
    pub fn mean(&self) -> BigRational {
        self.coeff(&vec![0; self.dim]).re
    }

    /// Largest `|k_i|` over all stored frequencies.
    pub fn bandwidth(&self) -> i64 {
        self.terms.keys().flat_map(|k| k.iter().map(|x| x.abs())).max().unwrap_or(0)
    }

    /// Sum of coefficient moduli, an upper bound for the sup norm.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.to_c64().norm()).sum()
    }

    pub fn complex_terms(&self) -> Vec<(Vec<i64>, Complex64)> {
        self.terms.iter().map(|(k, c)| (k.clone(), c.to_c64())).collect()
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let mut p = Self::zero(self.dim);
        for (k, c) in &self.terms {
            p.insert(k.clone(), c.scale(s));
        }
        p
    }

    pub fn eval(&self, t: &[f64]) -> Result<f64> {
        if t.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: t.len() });
        }
        let mut s = Complex64::new(0.0, 0.0);
        for (k, c) in &self.terms {
            let ph: f64 = k.iter().zip(t).map(|(&a, &b)| a as f64 * b).sum();
            s += c.to_c64() * Complex64::from_polar(1.0, ph);
        }
        Ok(s.re)
    }

    /// Exact value at `t_i = q_i * pi / 2`.
    pub fn eval_quarter(&self, q: &[i64]) -> Result<BigRational> {
        Self::check_freq(self.dim, q)?;
        let mut acc = CRational::default();
        for (k, c) in &self.terms {
            let e = k.iter().zip(q).map(|(a, b)| a * b).sum::<i64>().rem_euclid(4);
            let mut term = c.clone();
            for _ in 0..e {
                term = term.times_i();
            }
            acc = acc.add(&term);
        }
        debug_assert!(acc.im.is_zero());
        Ok(acc.re)
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.dim {
            return Err(Error::IndexOutOfRange { index: j, dim: self.dim });
        }
        Ok(())
    }

    /// `d/dt_j`: multiplies each coefficient by `i k_j`.
    pub fn partial_derivative(&self, j: usize) -> Result<Self> {
        self.check_index(j)?;
        let mut p = Self::zero(self.dim);
        for (k, c) in &self.terms {
            p.insert(k.clone(), c.times_i().scale(&int(k[j])));
        }
        Ok(p)
    }

    /// Average over `t_j`: keeps the terms with `k_j = 0`.
    pub fn mean_in_variable(&self, j: usize) -> Result<Self> {
        self.check_index(j)?;
        let mut p = Self::zero(self.dim);
        for (k, c) in &self.terms {
            if k[j] == 0 {
                p.insert(k.clone(), c.clone());
            }
        }
        Ok(p)
    }

    /// The periodic primitive `A_j` with `d/dt_j A_j = self - mean_j(self)` and
    /// `A_j = 0` on `{t_j = 0}`.
    pub fn primitive_in_variable(&self, j: usize) -> Result<Self> {
        self.check_index(j)?;
        let mut p = Self::zero(self.dim);
        for (k, c) in &self.terms {
            if k[j] == 0 {
                continue;
            }
            // c / (i k_j) = -i c / k_j
            let d = c.times_i().scale(&(int(-1) / int(k[j])));
            let mut hat = k.clone();
            hat[j] = 0;
            p.accumulate(k.clone(), &d);
            p.accumulate(hat, &CRational::new(-d.re.clone(), -d.im.clone()));
        }
        Ok(p)
    }

    /// Sets `t_0, ..., t_{j-1}` to zero (the result still lives on `T^n`).
    pub fn restrict_leading(&self, j: usize) -> Result<Self> {
        if j > self.dim {
            return Err(Error::IndexOutOfRange { index: j, dim: self.dim });
        }
        let mut p = Self::zero(self.dim);
        for (k, c) in &self.terms {
            let mut kk = k.clone();
            for x in kk.iter_mut().take(j) {
                *x = 0;
            }
            p.accumulate(kk, c);
        }
        Ok(p)
    }

    /// Relabels coordinates: coordinate `i` of `self` becomes coordinate `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut p = Self::zero(self.dim);
        for (k, c) in &self.terms {
            let mut kk = vec![0; self.dim];
            for (i, &x) in k.iter().enumerate() {
                kk[perm[i]] = x;
            }
            p.insert(kk, c.clone());
        }
        p
    }

    fn combine(&self, o: &TrigPoly, sign: i64) -> TrigPoly {
        assert_eq!(self.dim, o.dim, "dimension mismatch");
        let mut p = self.clone();
        for (k, c) in &o.terms {
            p.accumulate(k.clone(), &c.scale(&int(sign)));
        }
        p
    }
}

impl Add for &TrigPoly {
    type Output = TrigPoly;
    fn add(self, o: &TrigPoly) -> TrigPoly {
        self.combine(o, 1)
    }
}

impl Sub for &TrigPoly {
    type Output = TrigPoly;
    fn sub(self, o: &TrigPoly) -> TrigPoly {
        self.combine(o, -1)
    }
}

impl Neg for &TrigPoly {
    type Output = TrigPoly;
    fn neg(self) -> TrigPoly {
        self.scale(&int(-1))
    }
}

impl Mul for &TrigPoly {
    type Output = TrigPoly;
    fn mul(self, o: &TrigPoly) -> TrigPoly {
        assert_eq!(self.dim, o.dim, "dimension mismatch");
        let mut p = TrigPoly::zero(self.dim);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &o.terms {
                let k: Vec<i64> = k1.iter().zip(k2).map(|(a, b)| a + b).collect();
                p.accumulate(k, &c1.mul(c2));
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use std::f64::consts::PI;

    fn cos_sum(dim: usize, k: &[i64]) -> TrigPoly {
        TrigPoly::cos(dim, k, int(1)).unwrap()
    }

    #[test]
    fn evaluation() {
        assert_eq!(TrigPoly::cos_t(1, 0).eval(&[0.0]).unwrap(), 1.0);
        assert_eq!(TrigPoly::zero(2).eval(&[0.3, 0.1]).unwrap(), 0.0);
        let p = &TrigPoly::constant(2, rat(3, 2)) + &TrigPoly::sin_t(2, 1);
        assert!((p.eval(&[0.0, PI / 2.0]).unwrap() - 2.5).abs() < 1e-15);
        assert!(p.eval(&[0.0]).is_err());
        assert_eq!(p.eval_quarter(&[0, 1]).unwrap(), rat(5, 2));
    }

    #[test]
    fn derivatives() {
        let d = TrigPoly::cos_t(1, 0).partial_derivative(0).unwrap();
        assert_eq!(d, -&TrigPoly::sin_t(1, 0));
        assert!(TrigPoly::sin_t(2, 1).partial_derivative(0).unwrap().is_zero());
        let d = cos_sum(2, &[1, 1]).partial_derivative(1).unwrap();
        assert_eq!(d, TrigPoly::sin(2, &[1, 1], int(-1)).unwrap());
        assert!(matches!(TrigPoly::cos_t(1, 0).partial_derivative(1), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn means() {
        let p = &TrigPoly::constant(1, rat(3, 2)) + &TrigPoly::cos_t(1, 0);
        assert_eq!(p.mean_in_variable(0).unwrap(), TrigPoly::constant(1, rat(3, 2)));
        assert!(cos_sum(2, &[1, 1]).mean_in_variable(0).unwrap().is_zero());
        let q = &TrigPoly::constant(2, rat(1, 3)) + &TrigPoly::sin_t(2, 1);
        assert_eq!(q.mean_in_variable(0).unwrap(), q);
    }

    #[test]
    fn primitives() {
        assert_eq!(TrigPoly::cos_t(1, 0).primitive_in_variable(0).unwrap(), TrigPoly::sin_t(1, 0));
        assert!(TrigPoly::constant(2, rat(7, 3)).primitive_in_variable(1).unwrap().is_zero());
        let a = &TrigPoly::cos_t(2, 0) * &TrigPoly::sin_t(2, 1);
        let want = &TrigPoly::sin_t(2, 0) * &TrigPoly::sin_t(2, 1);
        assert_eq!(a.primitive_in_variable(0).unwrap(), want);
    }

    #[test]
    fn primitive_identity_and_zero_slice() {
        let a = &(&cos_sum(2, &[2, -1]) + &TrigPoly::sin(2, &[1, 3], rat(2, 5)).unwrap())
            + &TrigPoly::constant(2, rat(1, 7));
        for j in 0..2 {
            let aj = a.primitive_in_variable(j).unwrap();
            let back = &aj.partial_derivative(j).unwrap() + &a.mean_in_variable(j).unwrap();
            assert_eq!(back, a);
            for s in [0.3, 1.7, 4.0] {
                let mut t = [s, s * 0.5];
                t[j] = 0.0;
                assert!(aj.eval(&t).unwrap().abs() < 1e-14);
            }
        }
    }

    #[test]
    fn hermitian_enforced() {
        let bad = TrigPoly::from_terms(1, vec![(vec![1], CRational::real(int(1)))]);
        assert!(matches!(bad, Err(Error::NotHermitian(_))));
        let ok = TrigPoly::from_terms(
            1,
            vec![(vec![1], CRational::real(rat(1, 2))), (vec![-1], CRational::real(rat(1, 2)))],
        )
        .unwrap();
        assert_eq!(ok, TrigPoly::cos_t(1, 0));
    }

    #[test]
    fn product_to_sum() {
        // 2 cos t cos t = 1 + cos 2t
        let c = TrigPoly::cos_t(1, 0);
        let lhs = (&c * &c).scale(&int(2));
        let rhs = &TrigPoly::constant(1, int(1)) + &cos_sum(1, &[2]);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn restriction_collapses_frequencies() {
        let p = cos_sum(2, &[1, 1]);
        let r = p.restrict_leading(1).unwrap();
        assert_eq!(r, TrigPoly::cos_t(2, 1));
    }
}
