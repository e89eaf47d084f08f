//! Partial Fourier representation `u^(t, xi)` of distributions on `T^{n+1}`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{self, block_len, index_of, pairwise_sum, tau_of};
use crate::coeffs::TrigPoly;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense `t`-Fourier coefficients over `[-T, T]^n` for one `xi`.
#[derive(Clone, Debug, PartialEq)]
pub struct TBlock {
    pub n: usize,
    pub t_window: usize,
    pub coeffs: Vec<Complex64>,
}

impl TBlock {
    pub fn zeros(n: usize, t_window: usize) -> Self {
        TBlock { n, t_window, coeffs: vec![ZERO; block_len(n, t_window)] }
    }

    pub fn get(&self, tau: &[i64]) -> Complex64 {
        index_of(tau, self.t_window).map_or(ZERO, |i| self.coeffs[i])
    }

    pub fn set(&mut self, tau: &[i64], v: Complex64) -> Result<()> {
        let i = index_of(tau, self.t_window).ok_or_else(|| Error::WindowTooSmall(tau.to_vec()))?;
        self.coeffs[i] = v;
        Ok(())
    }

    pub fn resized(&self, t: usize) -> TBlock {
        TBlock { n: self.n, t_window: t, coeffs: grid::resize(&self.coeffs, self.n, self.t_window, t) }
    }

    /// Smallest half-width holding every nonzero coefficient.
    pub fn support_width(&self) -> usize {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(|(i, _)| tau_of(i, self.n, self.t_window).iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `sum |c_tau|^2`, the squared `L^2` norm normalised by `(2 pi)^n`.
    pub fn l2_sq(&self) -> f64 {
        let v: Vec<f64> = self.coeffs.iter().map(|c| c.norm_sqr()).collect();
        pairwise_sum(&v)
    }

    /// `sum_tau a_tau conj(b_tau)`.
    pub fn inner(&self, other: &TBlock) -> Complex64 {
        let t = self.t_window.max(other.t_window);
        let a = self.resized(t);
        let b = other.resized(t);
        let re: Vec<f64> = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x * y.conj()).re).collect();
        let im: Vec<f64> = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x * y.conj()).im).collect();
        Complex64::new(pairwise_sum(&re), pairwise_sum(&im))
    }

    /// Grid size used for sup-norm estimates.
    pub fn default_grid(&self) -> usize {
        2 * self.t_window + 2
    }

    pub fn grid_values(&self, m: usize) -> Vec<Complex64> {
        grid::synthesize(&self.coeffs, self.n, self.t_window, m)
    }

    pub fn sup_on_grid(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.grid_values(self.default_grid()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, t: &[f64]) -> Complex64 {
        let mut s = ZERO;
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            let tau = tau_of(i, self.n, self.t_window);
            let ph: f64 = tau.iter().zip(t).map(|(&a, &b)| a as f64 * b).sum();
            s += c * Complex64::from_polar(1.0, ph);
        }
        s
    }

    pub fn add(&self, other: &TBlock) -> TBlock {
        let t = self.t_window.max(other.t_window);
        let mut a = self.resized(t);
        for (x, y) in a.coeffs.iter_mut().zip(other.resized(t).coeffs) {
            *x += y;
        }
        a
    }

    pub fn scale(&self, s: Complex64) -> TBlock {
        TBlock { n: self.n, t_window: self.t_window, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn sub(&self, other: &TBlock) -> TBlock {
        let t = self.t_window.max(other.t_window);
        let mut a = self.resized(t);
        for (x, y) in a.coeffs.iter_mut().zip(other.resized(t).coeffs) {
            *x -= y;
        }
        a
    }
}

/// `u^(t, xi)` for `|xi| <= xi_window`; missing `xi` are zero. Each block
/// carries its own `t`-window so multipliers can widen it.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialFourierField {
    n: usize,
    xi_window: i64,
    t_window: usize,
    blocks: BTreeMap<i64, TBlock>,
    real_flag: bool,
    lossy: bool,
}

impl PartialFourierField {
    pub fn new(n: usize, xi_window: i64, t_window: usize) -> Result<Self> {
        if n == 0 || xi_window < 0 {
            return Err(Error::InvalidInput("field needs n >= 1 and xi_window >= 0".into()));
        }
        Ok(PartialFourierField { n, xi_window, t_window, blocks: BTreeMap::new(), real_flag: false, lossy: false })
    }

    /// Assembles a field from precomputed blocks, inheriting flags from `like`.
    pub fn with_blocks(like: &PartialFourierField, blocks: BTreeMap<i64, TBlock>) -> PartialFourierField {
        PartialFourierField { blocks, ..like.clone_empty() }
    }

    fn clone_empty(&self) -> PartialFourierField {
        PartialFourierField { blocks: BTreeMap::new(), ..*self }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn xi_window(&self) -> i64 {
        self.xi_window
    }

    /// Nominal `t`-window (the largest block window).
    pub fn t_window(&self) -> usize {
        self.blocks.values().map(|b| b.t_window).fold(self.t_window, usize::max)
    }

    pub fn real_flag(&self) -> bool {
        self.real_flag
    }

    pub fn set_real_flag(&mut self, v: bool) {
        self.real_flag = v;
    }

    pub fn is_lossy(&self) -> bool {
        self.lossy
    }

    pub fn mark_lossy(&mut self) {
        self.lossy = true;
    }

    pub fn blocks(&self) -> &BTreeMap<i64, TBlock> {
        &self.blocks
    }

    pub fn block(&self, xi: i64) -> Option<&TBlock> {
        self.blocks.get(&xi)
    }

    pub fn insert_block(&mut self, xi: i64, block: TBlock) -> Result<()> {
        if xi.abs() > self.xi_window {
            return Err(Error::WindowTooSmall(vec![xi]));
        }
        if block.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: block.n });
        }
        self.blocks.insert(xi, block);
        Ok(())
    }

    pub fn coeff(&self, tau: &[i64], xi: i64) -> Complex64 {
        self.blocks.get(&xi).map_or(ZERO, |b| b.get(tau))
    }

    /// Adds `v` at `(tau, xi)`; the position must fit the nominal window.
    pub fn add_coeff(&mut self, tau: &[i64], xi: i64, v: Complex64) -> Result<()> {
        let mut pos = tau.to_vec();
        pos.push(xi);
        if tau.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: tau.len() });
        }
        if xi.abs() > self.xi_window || tau.iter().any(|x| x.unsigned_abs() as usize > self.t_window) {
            return Err(Error::WindowTooSmall(pos));
        }
        let (n, t) = (self.n, self.t_window);
        let b = self.blocks.entry(xi).or_insert_with(|| TBlock::zeros(n, t));
        let i = index_of(tau, b.t_window).ok_or(Error::WindowTooSmall(pos))?;
        b.coeffs[i] += v;
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.values().map(TBlock::max_abs).fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        let v: Vec<f64> = self.blocks.values().map(TBlock::l2_sq).collect();
        pairwise_sum(&v).sqrt()
    }

    /// `sup_t |u^(t, xi)|` estimated on the block's grid.
    pub fn sup_t(&self, xi: i64) -> f64 {
        self.blocks.get(&xi).map_or(0.0, TBlock::sup_on_grid)
    }

    pub fn eval(&self, t: &[f64], xi: i64) -> Complex64 {
        self.blocks.get(&xi).map_or(ZERO, |b| b.eval(t))
    }

    /// Block-wise difference on the union of supports.
    pub fn sub(&self, other: &PartialFourierField) -> Result<PartialFourierField> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        let mut out = PartialFourierField::new(self.n, self.xi_window.max(other.xi_window), self.t_window.max(other.t_window))?;
        let keys: std::collections::BTreeSet<i64> = self.blocks.keys().chain(other.blocks.keys()).copied().collect();
        for xi in keys {
            let b = match (self.blocks.get(&xi), other.blocks.get(&xi)) {
                (Some(a), Some(b)) => a.sub(b),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => TBlock::zeros(self.n, 0).sub(b),
                (None, None) => unreachable!(),
            };
            out.blocks.insert(xi, b);
        }
        out.lossy = self.lossy || other.lossy;
        Ok(out)
    }

    pub fn add(&self, other: &PartialFourierField) -> Result<PartialFourierField> {
        let neg = other.map_blocks(|b| b.scale(Complex64::new(-1.0, 0.0)));
        self.sub(&neg)
    }

    /// Applies `f` to every stored block (the `xi` set is unchanged).
    pub fn map_blocks(&self, f: impl Fn(&TBlock) -> TBlock) -> PartialFourierField {
        let mut out = self.clone();
        for b in out.blocks.values_mut() {
            *b = f(b);
        }
        out
    }

    /// Largest deviation from `c(-tau, -xi) = conj c(tau, xi)`.
    pub fn real_symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (&xi, b) in &self.blocks {
            for (i, c) in b.coeffs.iter().enumerate() {
                let tau = tau_of(i, self.n, b.t_window);
                let neg: Vec<i64> = tau.iter().map(|x| -x).collect();
                worst = worst.max((self.coeff(&neg, -xi).conj() - c).norm());
            }
        }
        worst
    }

    /// Nonzero entries `(tau, xi, c)` in deterministic order.
    pub fn entries(&self) -> Vec<(Vec<i64>, i64, Complex64)> {
        let mut out = Vec::new();
        for (&xi, b) in &self.blocks {
            for (i, c) in b.coeffs.iter().enumerate() {
                if *c != ZERO {
                    out.push((tau_of(i, self.n, b.t_window), xi, *c));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let xi = self
            .blocks
            .iter()
            .map(|(&xi, b)| XiJson {
                xi,
                coeffs: b
                    .coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != ZERO)
                    .map(|(i, c)| CoeffJson { tau: tau_of(i, self.n, b.t_window), re: c.re, im: c.im })
                    .collect(),
            })
            .collect();
        let js = FieldJson {
            n: self.n,
            xi_window: Some(self.xi_window),
            t_window: Some(self.t_window()),
            real: Some(self.real_flag),
            lossy: Some(self.lossy),
            xi,
        };
        serde_json::to_string(&js).expect("field serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let js: FieldJson = serde_json::from_str(s)?;
        let xw = js.xi_window.unwrap_or_else(|| js.xi.iter().map(|b| b.xi.abs()).max().unwrap_or(0));
        let tw = js.t_window.unwrap_or_else(|| {
            js.xi.iter().flat_map(|b| b.coeffs.iter().flat_map(|c| c.tau.iter().map(|x| x.unsigned_abs() as usize))).max().unwrap_or(0)
        });
        let mut f = PartialFourierField::new(js.n, xw, tw)?;
        for b in js.xi {
            for c in b.coeffs {
                f.add_coeff(&c.tau, b.xi, Complex64::new(c.re, c.im))?;
            }
        }
        f.real_flag = js.real.unwrap_or(false);
        f.lossy = js.lossy.unwrap_or(false);
        Ok(f)
    }
}

#[derive(Serialize, Deserialize)]
struct CoeffJson {
    tau: Vec<i64>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct XiJson {
    xi: i64,
    coeffs: Vec<CoeffJson>,
}

#[derive(Serialize, Deserialize)]
struct FieldJson {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    xi_window: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t_window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    real: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lossy: Option<bool>,
    xi: Vec<XiJson>,
}

/// One term `c * p(t) * e^{i(<tau, t> + xi x)}` of a closed-form test function
/// (`p = 1` when no modulation is given).
#[derive(Clone, Debug)]
pub struct ModeSpec {
    pub tau: Vec<i64>,
    pub xi: i64,
    pub coeff: Complex64,
    pub modulation: Option<TrigPoly>,
}

impl ModeSpec {
    pub fn plain(tau: Vec<i64>, xi: i64, coeff: Complex64) -> Self {
        ModeSpec { tau, xi, coeff, modulation: None }
    }
}

/// Places every term exactly; any coefficient outside the window is an error.
pub fn synthesize(n: usize, xi_window: i64, t_window: usize, modes: &[ModeSpec]) -> Result<PartialFourierField> {
    let mut f = PartialFourierField::new(n, xi_window, t_window)?;
    for m in modes {
        if m.tau.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.tau.len() });
        }
        match &m.modulation {
            None => f.add_coeff(&m.tau, m.xi, m.coeff)?,
            Some(p) => {
                if p.dim() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: p.dim() });
                }
                for (k, c) in p.complex_terms() {
                    let tau: Vec<i64> = m.tau.iter().zip(&k).map(|(a, b)| a + b).collect();
                    f.add_coeff(&tau, m.xi, m.coeff * c)?;
                }
            }
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_x_mode() {
        let f = synthesize(1, 2, 2, &[ModeSpec::plain(vec![0], 1, c(1.0, 0.0))]).unwrap();
        assert_eq!(f.entries(), vec![(vec![0], 1, c(1.0, 0.0))]);
    }

    #[test]
    fn cosine_in_t() {
        let p = TrigPoly::cos_t(1, 0);
        let f = synthesize(1, 1, 2, &[ModeSpec { tau: vec![0], xi: 0, coeff: c(1.0, 0.0), modulation: Some(p) }]).unwrap();
        assert_eq!(f.coeff(&[1], 0), c(0.5, 0.0));
        assert_eq!(f.coeff(&[-1], 0), c(0.5, 0.0));
        assert_eq!(f.real_symmetry_defect(), 0.0);
    }

    #[test]
    fn window_too_small() {
        let r = synthesize(1, 1, 4, &[ModeSpec::plain(vec![1], 2, c(1.0, 0.0))]);
        assert!(matches!(r, Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn grid_round_trip_and_eval() {
        let modes: Vec<ModeSpec> = (-3..=3)
            .flat_map(|a| (-3..=3).map(move |b| ModeSpec::plain(vec![a, b], 2, c(0.1 * a as f64, 0.05 * b as f64 + 0.3))))
            .collect();
        let f = synthesize(2, 3, 3, &modes).unwrap();
        let b = f.block(2).unwrap();
        let m = 9;
        let vals = b.grid_values(m);
        let back = grid::analyze(&vals, 2, m, 3);
        for (x, y) in b.coeffs.iter().zip(&back) {
            assert!((x - y).norm() <= 1e-12 * b.max_abs());
        }
        let t = grid::grid_point(17, 2, m);
        assert!((b.eval(&t) - vals[17]).norm() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let f = synthesize(2, 3, 2, &[ModeSpec::plain(vec![1, -2], -3, c(0.25, -1.5))]).unwrap();
        let g = PartialFourierField::from_json(&f.to_json()).unwrap();
        assert_eq!(f.entries(), g.entries());
    }
}
