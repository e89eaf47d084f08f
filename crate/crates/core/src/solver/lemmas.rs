//! Numerical checks of the two a-priori estimates behind the propagation
//! argument: derivative bounds by induction on `|alpha|`, and the polynomial
//! bound on `sup_t |u^(t, xi)|` from Sobolev data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{SystemSpec, TrigPoly};
use crate::error::{Error, Result};
use crate::spectral::grid::{self, tau_of};
use crate::spectral::{PartialFourierField, TBlock};

/// `d^alpha/dt^alpha` of a block: multiplies by `prod (i tau_j)^{alpha_j}`.
pub fn block_derivative(b: &TBlock, alpha: &[u32]) -> TBlock {
    let mut out = b.clone();
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        let tau = tau_of(i, b.n, b.t_window);
        for (t, &a) in tau.iter().zip(alpha) {
            *c *= Complex64::new(0.0, *t as f64).powu(a);
        }
    }
    out
}

fn multi_indices(n: usize, order: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return if order == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=order).rev() {
        for mut rest in multi_indices(n - 1, order - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `sup_t` on a fixed grid of `m` points per axis.
fn grid_sup(b: &TBlock, m: usize) -> f64 {
    if b.is_zero() {
        return 0.0;
    }
    b.grid_values(m).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `max_xi (1 + |xi|)^k sup_t |d^alpha u^(., xi)|`.
fn weighted_constant(u: &PartialFourierField, alpha: &[u32], k: i32, m: usize) -> f64 {
    u.blocks()
        .iter()
        .map(|(&xi, b)| grid_sup(&block_derivative(b, alpha), m) * (1.0 + xi.unsigned_abs() as f64).powi(k))
        .fold(0.0, f64::max)
}

/// Upper bound of `||d^beta a_j||_inf` (the coefficient `l^1` norm plus the
/// constant when `beta = 0`).
fn coefficient_sup(sys: &SystemSpec, j: usize, beta: &[u32]) -> Result<f64> {
    let mut p: TrigPoly = sys.coefficient(j)?.clone();
    for (axis, &b) in beta.iter().enumerate() {
        for _ in 0..b {
            p = p.partial_derivative(axis)?;
        }
    }
    let c = if beta.iter().all(|&b| b == 0) { sys.constants()[j].to_f64().abs() } else { 0.0 };
    Ok(p.l1_norm() + c)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClosureRow {
    pub beta: Vec<u32>,
    pub j: usize,
    pub k: i32,
    /// Measured `C_{beta,k}`.
    pub measured: f64,
    /// `C_{alpha,j,k} + B_{l,k+1} sum binom ||d^{alpha-gamma} a_j||`.
    pub bound: f64,
    pub holds: bool,
}

/// Checks the inductive derivative bound for `1 <= |beta| <= max_order` and
/// every `k` in `ks`, with `f_j = X_j u` supplied.
pub fn derivative_closure(u: &PartialFourierField, sys: &SystemSpec, rhs: &[PartialFourierField], ks: &[i32], max_order: u32) -> Result<Vec<ClosureRow>> {
    let n = sys.n();
    if rhs.len() != n || u.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
    }
    // one grid for every block so pointwise inequalities compare like with like
    let t_max = rhs.iter().map(|f| f.t_window()).chain([u.t_window()]).max().unwrap_or(0);
    let m = 2 * t_max + 2;
    let mut rows = Vec::new();
    for &k in ks {
        for order in 1..=max_order {
            for beta in multi_indices(n, order) {
                let j = beta.iter().position(|&b| b > 0).expect("order >= 1");
                let mut alpha = beta.clone();
                alpha[j] -= 1;
                let ell = order - 1;
                let c_alpha = weighted_constant(&rhs[j], &alpha, k, m);
                let b_next = (0..=ell)
                    .flat_map(|o| multi_indices(n, o))
                    .map(|g| weighted_constant(u, &g, k + 1, m))
                    .fold(0.0, f64::max);
                let mut sum = 0.0;
                for o in 0..=ell {
                    for gamma in multi_indices(n, o) {
                        if gamma.iter().zip(&alpha).any(|(g, a)| g > a) {
                            continue;
                        }
                        let coef: f64 = alpha.iter().zip(&gamma).map(|(&a, &g)| binom(a, g)).product();
                        let diff: Vec<u32> = alpha.iter().zip(&gamma).map(|(a, g)| a - g).collect();
                        sum += coef * coefficient_sup(sys, j, &diff)?;
                    }
                }
                let bound = c_alpha + b_next * sum;
                let measured = weighted_constant(u, &beta, k, m);
                let holds = measured <= bound * (1.0 + 1e-9) + 1e-12;
                rows.push(ClosureRow { beta, j, k, measured, bound, holds });
            }
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthBoundReport {
    pub p: u32,
    pub c: f64,
    /// Upper bound of `sum_{tau in Z^n} (1 + |tau|)^{-2n}`.
    pub lattice_sum: f64,
    /// Measured `C_{2n}`: `|u^(tau, xi)| <= C_{2n} (1 + |(tau, xi)|)^{-2n}` on `|xi| <= c |tau|`.
    pub c_2n: f64,
    /// `c^{-2n} (1 + 1/c)^{2p}` for `c <= 1`.
    pub c_1: f64,
    /// `sum |u^(tau, xi)|^2 (1 + |(tau, xi)|)^{-2p}`.
    pub sobolev_sq: f64,
    /// `D = S^{1/2} (C_{2n}^2 S + c_1 ||u||_{-p}^2)^{1/2}`.
    pub d: f64,
    pub exponent_sharp: u32,
    pub exponent_stated: u32,
    /// `max_xi sup_t |u^| / (D (1 + |xi|)^e)` for both exponents.
    pub worst_ratio_sharp: f64,
    pub worst_ratio_stated: f64,
}

impl GrowthBoundReport {
    pub fn holds(&self) -> bool {
        self.worst_ratio_sharp <= 1.0 && self.worst_ratio_stated <= 1.0
    }
}

fn lattice_sum_upper(n: usize) -> f64 {
    let r = ((1_000_000f64).powf(1.0 / n as f64) as usize).saturating_sub(1) / 2;
    let side = 2 * r + 1;
    let mut vals = Vec::with_capacity(side.pow(n as u32));
    for i in 0..side.pow(n as u32) {
        let tau = tau_of(i, n, r);
        let norm = tau.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
        vals.push((1.0 + norm).powi(-2 * n as i32));
    }
    grid::pairwise_sum(&vals) + 2f64.powi(n as i32) / (1.0 + r as f64).powi(n as i32)
}

/// Evaluates the constructive constant of the polynomial bound for a field
/// regarded as an element of `H^{-p}`, with cone parameter `0 < c <= 1`.
pub fn growth_bound(u: &PartialFourierField, p: u32, c: f64) -> Result<GrowthBoundReport> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidInput(format!("cone parameter must lie in (0, 1], got {c}")));
    }
    let n = u.n();
    let s = lattice_sum_upper(n);
    let mut c_2n = 0.0f64;
    let mut sob = Vec::new();
    for (tau, xi, v) in u.entries() {
        let tn = tau.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
        let full = (tn * tn + (xi * xi) as f64).sqrt();
        if (xi.abs() as f64) <= c * tn {
            c_2n = c_2n.max(v.norm() * (1.0 + full).powi(2 * n as i32));
        }
        sob.push(v.norm_sqr() * (1.0 + full).powi(-2 * p as i32));
    }
    let sobolev_sq = grid::pairwise_sum(&sob);
    let c_1 = c.powi(-2 * n as i32) * (1.0 + 1.0 / c).powi(2 * p as i32);
    let d = s.sqrt() * (c_2n * c_2n * s + c_1 * sobolev_sq).sqrt();
    let exponent_sharp = n as u32 + p;
    let exponent_stated = 2 * (n as u32 + p);
    let mut worst_sharp = 0.0f64;
    let mut worst_stated = 0.0f64;
    for &xi in u.blocks().keys() {
        let sup = u.sup_t(xi);
        let w = 1.0 + xi.unsigned_abs() as f64;
        worst_sharp = worst_sharp.max(sup / (d * w.powi(exponent_sharp as i32)));
        worst_stated = worst_stated.max(sup / (d * w.powi(exponent_stated as i32)));
    }
    Ok(GrowthBoundReport {
        p,
        c,
        lattice_sum: s,
        c_2n,
        c_1,
        sobolev_sq,
        d,
        exponent_sharp,
        exponent_stated,
        worst_ratio_sharp: worst_sharp,
        worst_ratio_stated: worst_stated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::ExactReal;
    use crate::spectral::{apply_system_field, synthesize, ModeSpec};

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(multi_indices(3, 3).len(), 10);
    }

    #[test]
    fn lattice_sum_one_dimension() {
        // 1 + 2 (pi^2/6 - 1) = pi^2/3 - 1
        let exact = std::f64::consts::PI.powi(2) / 3.0 - 1.0;
        let s = lattice_sum_upper(1);
        assert!(s >= exact && s - exact < 1e-5, "{s} vs {exact}");
    }

    #[test]
    fn closure_on_smooth_field() {
        let a0 = &TrigPoly::cos_t(2, 1) + &TrigPoly::sin_t(2, 0);
        let sys = SystemSpec::new(2, vec![a0, TrigPoly::cos_t(2, 0)], Some(vec![ExactReal::rational(1, 3), ExactReal::zero()])).unwrap();
        let mut modes = Vec::new();
        for xi in -16i64..=16 {
            for a in -2i64..=2 {
                for b in -2i64..=2 {
                    let amp = (-(xi * xi) as f64 / 8.0 - (a * a + b * b) as f64).exp();
                    modes.push(ModeSpec::plain(vec![a, b], xi, Complex64::new(amp, -0.5 * amp)));
                }
            }
        }
        let u = synthesize(2, 16, 2, &modes).unwrap();
        let rhs: Vec<_> = (0..2).map(|j| apply_system_field(&u, &sys, j).unwrap()).collect();
        let rows = derivative_closure(&u, &sys, &rhs, &[0, 2, 4], 3).unwrap();
        assert_eq!(rows.len(), 3 * (2 + 3 + 4));
        for r in &rows {
            assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn growth_bound_on_sobolev_tail() {
        // u^(0, xi) = (1 + |xi|)^{p - 1} with p = 2: polynomial growth in xi only
        let p = 2;
        let modes: Vec<ModeSpec> = (-64i64..=64)
            .map(|xi| ModeSpec::plain(vec![0, 0], xi, Complex64::new((1.0 + xi.abs() as f64).powi(p - 1), 0.0)))
            .chain((1..=4).map(|k| ModeSpec::plain(vec![k, 0], 0, Complex64::new(0.5f64.powi(k as i32), 0.0))))
            .collect();
        let u = synthesize(2, 64, 4, &modes).unwrap();
        let r = growth_bound(&u, p as u32, 0.5).unwrap();
        assert!(r.holds(), "{r:?}");
        assert!(r.worst_ratio_sharp >= r.worst_ratio_stated);
        assert!(growth_bound(&u, 2, 0.0).is_err());
    }
}
