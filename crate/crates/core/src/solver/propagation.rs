//! Numerical propagation of regularity from one base point.
//!
//! Given `X_j u = f_j` with rapidly decaying `f_j` and rapid decay of
//! `u^(s, xi)` at a base point `s`, every grid point is bounded either by the
//! averaging formula (where some divisor is large) or by integrating along
//! coordinate segments from `s`, processed from the last coordinate down to the
//! first. Each measured `|u^(t, xi)|` must sit below that bound.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::decay::{decay_from_samples, decay_report, DecayMode, DecayReport, Sample};
use super::mode::divisor_from_distance;
use crate::coeffs::{commutator_bracket, finite_type_exists, SystemSpec};
use crate::error::{Error, Result};
use crate::spectral::grid;
use crate::spectral::{apply_system_field, PartialFourierField, TBlock};
use crate::status::Status;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Largest number of sweep points per `xi`.
const MAX_SWEEP_POINTS: usize = 1 << 16;

#[derive(Clone, Debug)]
pub struct PropagationInput {
    pub u: PartialFourierField,
    pub base_point: Vec<f64>,
    pub smooth_rhs: Vec<PartialFourierField>,
}

/// Where the base-point values come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseSource {
    /// `|u^(s, xi)|` evaluated directly at the given point.
    Measured,
    /// `|(X_j f_l - X_l f_j)^(s, xi)| / (|xi| |b(s)|)` at a finite-type point
    /// `s` of the bracket `b = [X_j, X_l]`; the given point is replaced.
    BracketTrick,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropagationReport {
    pub status: Status,
    pub k: u32,
    pub base_point: Vec<f64>,
    /// `M` and `D` of the a-priori bound `|u^| <= D (1 + |xi|)^M`.
    pub growth_order: u32,
    pub growth_constant: f64,
    /// Measured analogues of the proof's constants.
    pub c_k: f64,
    pub d_k: f64,
    pub b_k: f64,
    pub c_k_prime: f64,
    /// Whether `sup_t |u^| <= C'_k (1 + |xi|)^{-k}` held on every mode.
    pub c_k_prime_holds: bool,
    pub a_points: usize,
    pub b_points: usize,
    pub b_cells: usize,
    /// Worst `measured / bound` over all swept points (at most 1).
    pub worst_ratio: f64,
    /// Whether some path crossed more than `n` cells of the small-divisor set.
    pub crossing_cap_binds: bool,
    pub u_decay: DecayReport,
    pub base_decay: DecayReport,
    pub rhs_decay: Vec<DecayReport>,
}

fn l1(b: &TBlock) -> f64 {
    grid::pairwise_sum(&b.coeffs.iter().map(|c| c.norm()).collect::<Vec<_>>())
}

fn check_consistency(input: &PropagationInput, sys: &SystemSpec) -> Result<()> {
    let n = sys.n();
    if input.u.n() != n || input.base_point.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: input.u.n() });
    }
    if input.smooth_rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: input.smooth_rhs.len() });
    }
    let scale = input.u.max_abs().max(1.0);
    for (j, f) in input.smooth_rhs.iter().enumerate() {
        let xu = apply_system_field(&input.u, sys, j)?;
        let d = xu.sub(f)?.max_abs();
        if d > 1e-9 * scale {
            return Err(Error::HypothesisFailed(format!("X_{j} u differs from rhs {j} by {d:e}")));
        }
    }
    Ok(())
}

/// Base-point values via the bracket at a finite-type point.
fn bracket_values(input: &PropagationInput, sys: &SystemSpec) -> Result<(Vec<f64>, Vec<(i64, f64)>)> {
    let ft = finite_type_exists(sys);
    let (Some((j, l)), Some(s)) = (ft.witness_pair, ft.point_f64()) else {
        return Err(Error::HypothesisFailed("no finite-type point for the bracket base point".into()));
    };
    if !ft.exists {
        return Err(Error::HypothesisFailed("no finite-type point for the bracket base point".into()));
    }
    let a = sys.coefficients();
    let b = commutator_bracket(&a[j], &a[l], j, l)?.eval(&s)?;
    let xf = apply_system_field(&input.smooth_rhs[l], sys, j)?;
    let yf = apply_system_field(&input.smooth_rhs[j], sys, l)?;
    let comm = xf.sub(&yf)?;
    let mut vals = Vec::new();
    for &xi in input.u.blocks().keys() {
        if xi == 0 {
            continue;
        }
        let v = comm.eval(&s, xi).norm() / (xi.unsigned_abs() as f64 * b.abs());
        let direct = input.u.eval(&s, xi).norm();
        if (v - direct).abs() > 1e-8 * direct.max(1e-300) + 1e-12 * input.u.max_abs() {
            return Err(Error::AssertionFailure(format!("bracket base value {v:e} disagrees with |u^(s, {xi})| = {direct:e}")));
        }
        vals.push((xi, v));
    }
    Ok((s, vals))
}

/// Runs the sweep. Fails with `HypothesisFailed` naming the violated
/// hypothesis (consistency, base-point decay, rhs decay).
pub fn propagation_check(input: &PropagationInput, sys: &SystemSpec, k: u32, source: BaseSource) -> Result<PropagationReport> {
    check_consistency(input, sys)?;
    let n = sys.n();
    let u = &input.u;
    let window = Some(u.xi_window() as f64);

    // a-priori polynomial bound
    let u_growth = decay_report(u, &DecayMode::SupT, k as f64)?;
    let growth_order = (-u_growth.k_hat).max(0.0).ceil() as u32;
    let growth_constant = u
        .blocks()
        .keys()
        .map(|&xi| u.sup_t(xi) / (1.0 + xi.unsigned_abs() as f64).powi(growth_order as i32))
        .fold(0.0, f64::max);

    // base point
    let (base_point, base_vals): (Vec<f64>, Vec<(i64, f64)>) = match source {
        BaseSource::Measured => {
            let s = input.base_point.clone();
            let v = u.blocks().keys().filter(|&&x| x != 0).map(|&xi| (xi, u.eval(&s, xi).norm())).collect();
            (s, v)
        }
        BaseSource::BracketTrick => bracket_values(input, sys)?,
    };
    let base_samples: Vec<Sample> = base_vals.iter().map(|&(xi, v)| Sample::new(xi.unsigned_abs() as f64, v)).collect();
    let base_decay = decay_from_samples(&base_samples, window, k as f64)?;
    if !base_decay.is_rapid() {
        return Err(Error::HypothesisFailed(format!("base-point decay: k_hat = {:.3} below {k}", base_decay.k_hat)));
    }

    // data
    let rhs_threshold = (2 * k + growth_order) as f64;
    let mut rhs_decay = Vec::new();
    for (j, f) in input.smooth_rhs.iter().enumerate() {
        let r = decay_report(f, &DecayMode::SupT, rhs_threshold)?;
        if !r.is_rapid() {
            return Err(Error::HypothesisFailed(format!("rhs {j} decay: k_hat = {:.3} below {rhs_threshold}", r.k_hat)));
        }
        rhs_decay.push(r);
    }

    let weight = |xi: i64, e: i32| (1.0 + xi.unsigned_abs() as f64).powi(e);
    let c_k = base_vals.iter().map(|&(xi, v)| v * weight(xi, k as i32)).fold(0.0, f64::max);
    let d_k = input
        .smooth_rhs
        .iter()
        .flat_map(|f| f.blocks().iter().map(|(&xi, b)| l1(b) * weight(xi, rhs_threshold as i32)))
        .fold(0.0, f64::max);
    let b_k = c_k.max(d_k);
    let c_k_prime = TWO_PI * (n as f64 + 1.0) * (b_k + d_k + growth_constant);

    let means: Vec<_> = (0..n).map(|j| sys.trig_mean(j)).collect::<Result<_>>()?;
    let consts: Vec<f64> = sys.constants().iter().map(|c| c.to_f64()).collect();
    let mut a_points = 0usize;
    let mut b_points = 0usize;
    let mut cells: BTreeSet<(i64, Vec<i64>)> = BTreeSet::new();
    let mut worst_ratio = 0.0f64;
    let mut cap_binds = false;
    let mut c_k_prime_holds = true;
    let base_map: std::collections::BTreeMap<i64, f64> = base_vals.iter().copied().collect();

    for (&xi, ub) in u.blocks() {
        if xi == 0 {
            continue;
        }
        let sups: Vec<f64> = input.smooth_rhs.iter().map(|f| f.block(xi).map_or(0.0, l1)).collect();
        let chain = base_map.get(&xi).copied().unwrap_or(0.0) + TWO_PI * sups.iter().sum::<f64>();
        let gap = weight(xi, -((k + growth_order) as i32));
        let mut m = ub.default_grid();
        while m.pow(n as u32) > MAX_SWEEP_POINTS && m > 2 * ub.t_window + 1 {
            m -= 1;
        }
        let vals = ub.grid_values(m);
        let lam_at = |t: &[f64]| -> Vec<f64> {
            means.iter().zip(&consts).map(|(p, c)| (p.eval(t).expect("dimension checked") + c) * xi as f64).collect()
        };
        let in_b = |lam: &[f64]| lam.iter().all(|l| (l - l.round()).abs() < gap);
        let scale = ub.max_abs().max(1e-300);
        for (i, v) in vals.iter().enumerate() {
            let t = grid::grid_point(i, n, m);
            let lam = lam_at(&t);
            let mut bound = chain;
            if in_b(&lam) {
                b_points += 1;
                cells.insert((xi, lam.iter().map(|l| l.round() as i64).collect()));
            } else {
                a_points += 1;
                for j in 0..n {
                    let d = (lam[j] - lam[j].round()).abs();
                    if d >= gap {
                        bound = bound.min(TWO_PI * sups[j] / divisor_from_distance(d));
                    }
                }
            }
            let measured = v.norm();
            let ratio = measured / (bound * (1.0 + 1e-9) + 1e-13 * scale);
            worst_ratio = worst_ratio.max(ratio);
            if ratio > 1.0 {
                return Err(Error::AssertionFailure(format!("|u^({t:?}, {xi})| = {measured:e} exceeds the propagated bound {bound:e}")));
            }
            if measured > c_k_prime * weight(xi, -(k as i32)) * (1.0 + 1e-9) {
                c_k_prime_holds = false;
            }
        }
        // crossings along the path from s to a far grid point
        let mut crossings = 0usize;
        let mut cur = base_point.clone();
        let mut prev_in = in_b(&lam_at(&cur));
        for axis in (0..n).rev() {
            let start = cur[axis];
            for step in 1..=m {
                cur[axis] = start + TWO_PI * step as f64 / m as f64 * 0.5;
                let now = in_b(&lam_at(&cur));
                if now && !prev_in {
                    crossings += 1;
                }
                prev_in = now;
            }
        }
        cap_binds |= crossings > n;
    }

    let u_decay = decay_report(u, &DecayMode::SupT, k as f64)?;
    let status = if u_decay.is_rapid() { Status::Holds } else { Status::Undetermined };
    Ok(PropagationReport {
        status,
        k,
        base_point,
        growth_order,
        growth_constant,
        c_k,
        d_k,
        b_k,
        c_k_prime,
        c_k_prime_holds,
        a_points,
        b_points,
        b_cells: cells.len(),
        worst_ratio,
        crossing_cap_binds: cap_binds,
        u_decay,
        base_decay,
        rhs_decay,
    })
}

/// `f_j = X_j u` for every `j`.
pub fn manufacture(u: PartialFourierField, sys: &SystemSpec, base_point: Vec<f64>) -> Result<PropagationInput> {
    let smooth_rhs = (0..sys.n()).map(|j| apply_system_field(&u, sys, j)).collect::<Result<_>>()?;
    Ok(PropagationInput { u, base_point, smooth_rhs })
}
