//! Mode-by-mode solution of `X_j u = f` through the conjugated averaging
//! formula, with exact resonance detection where the coefficients allow it.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::coeffs::{SystemSpec, TrigPoly};
use crate::diophantine::real::residual_enclosure;
use crate::diophantine::ExactReal;
use crate::error::{Error, Result};
use crate::rational::to_f64;
use crate::spectral::grid::{self, block_len, index_of, tau_of};
use crate::spectral::{apply_multiplier, conjugate, Multiplier, PartialFourierField, TBlock};

pub const DEFAULT_DIVISOR_FLOOR: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `|e^{2 pi i lambda} - 1| = 2 |sin(pi dist(lambda, Z))|`.
pub fn divisor_from_distance(d: f64) -> f64 {
    2.0 * (std::f64::consts::PI * d).sin().abs()
}

/// Smallest small divisor of coordinate `j` at frequency `xi` over the grid,
/// together with whether it vanishes exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivisorInfo {
    pub value: f64,
    pub exact_zero: bool,
}

/// Divisor of `a_{j0} xi`. Constant means are decided exactly; otherwise the
/// minimum over a uniform grid is reported.
pub fn mode_divisor(sys: &SystemSpec, j: usize, xi: i64) -> Result<DivisorInfo> {
    if xi == 0 {
        return Ok(DivisorInfo { value: 0.0, exact_zero: true });
    }
    if let Some(alpha) = sys.alpha(j)? {
        return Ok(constant_divisor(&alpha, xi));
    }
    let mean = sys.trig_mean(j)?;
    let c = sys.constants()[j].to_f64();
    let n = sys.n();
    let m = 4 * (mean.bandwidth() as usize + 1) + 1;
    let mut worst = f64::INFINITY;
    for i in 0..m.pow(n as u32) {
        let t = grid::grid_point(i, n, m);
        let lam = (mean.eval(&t)? + c) * xi as f64;
        worst = worst.min(divisor_from_distance((lam - lam.round()).abs()));
    }
    Ok(DivisorInfo { value: worst, exact_zero: worst == 0.0 })
}

fn constant_divisor(alpha: &ExactReal, xi: i64) -> DivisorInfo {
    if let ExactReal::Float(a) = alpha {
        let lam = a * xi as f64;
        let d = (lam - lam.round()).abs();
        return DivisorInfo { value: divisor_from_distance(d), exact_zero: d == 0.0 };
    }
    let x = BigInt::from(xi);
    let tau = -alpha.round_times(&x);
    let (lo, hi) = residual_enclosure(alpha, &tau, &x, 128);
    if hi.is_zero() {
        return DivisorInfo { value: 0.0, exact_zero: true };
    }
    let d = 0.5 * (to_f64(&lo) + to_f64(&hi));
    DivisorInfo { value: divisor_from_distance(d), exact_zero: false }
}

fn single_block_field(n: usize, xi: i64, b: TBlock) -> Result<PartialFourierField> {
    let mut f = PartialFourierField::new(n, xi.abs(), b.t_window)?;
    f.insert_block(xi, b)?;
    Ok(f)
}

/// `u^(., xi)` with `(d/dt_j + i a_j xi) u^ = f^(., xi)`, for `xi != 0`.
///
/// The data are conjugated by `e^{i A_j xi}`, the reduced equation
/// `(d/dt_j + i a_{j0} xi) w = g` is solved coefficient-wise in `t_j` (this is
/// the averaging formula written in Fourier variables), and the result is
/// conjugated back.
pub fn solve_mode(f: &PartialFourierField, sys: &SystemSpec, j: usize, xi: i64, divisor_floor: f64) -> Result<TBlock> {
    if sys.n() != f.n() {
        return Err(Error::DimensionMismatch { expected: f.n(), got: sys.n() });
    }
    let d = mode_divisor(sys, j, xi)?;
    if d.exact_zero {
        return Err(Error::Resonance { xi });
    }
    if d.value < divisor_floor {
        return Err(Error::DivisorTooSmall { xi, divisor: d.value, floor: divisor_floor });
    }
    let n = sys.n();
    let Some(fb) = f.block(xi) else {
        return Ok(TBlock::zeros(n, f.t_window()));
    };
    let a_j = sys.coefficient(j)?.primitive_in_variable(j)?;
    let g = conjugate(&single_block_field(n, xi, fb.clone())?, &a_j, 1)?;
    let gb = g.block(xi).expect("block kept");
    let w = match sys.alpha(j)? {
        Some(alpha) => divide_constant(gb, j, alpha.to_f64() * xi as f64),
        None => {
            let mean = sys.trig_mean(j)?;
            divide_variable(gb, j, &mean, sys.constants()[j].to_f64(), xi)?
        }
    };
    let back = conjugate(&single_block_field(n, xi, w)?, &a_j, -1)?;
    Ok(back.block(xi).expect("block kept").clone())
}

fn divide_constant(g: &TBlock, j: usize, lam: f64) -> TBlock {
    let mut out = g.clone();
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        if *c == ZERO {
            continue;
        }
        let tau = tau_of(i, g.n, g.t_window);
        *c /= Complex64::new(0.0, tau[j] as f64 + lam);
    }
    out
}

/// `w_k(t') = g_k(t') / (i (k + a_{j0}(t') xi))` slice by slice, on a grid in
/// the remaining coordinates `t'` (possible only for `n >= 2`).
fn divide_variable(g: &TBlock, j: usize, mean: &TrigPoly, c: f64, xi: i64) -> Result<TBlock> {
    let n = g.n;
    let t_in = g.t_window;
    let t_out = 2 * t_in + 8 * (mean.bandwidth() as usize + 1);
    if (2 * t_out + 1).pow(n as u32) > crate::spectral::ops::MAX_BLOCK_LEN {
        return Err(Error::WindowOverflow(format!("variable-mean solve needs t-window {t_out}")));
    }
    let m = grid::fft_size(2 * t_out + 1);
    let rest = n - 1;
    // mean values on the grid of the remaining coordinates
    let lam: Vec<f64> = (0..m.pow(rest as u32))
        .map(|i| {
            let tp = grid::grid_point(i, rest, m);
            let mut t = tp.clone();
            t.insert(j, 0.0);
            (mean.eval(&t).expect("dimension checked") + c) * xi as f64
        })
        .collect();
    let mut out = TBlock::zeros(n, t_out);
    for k in -(t_in as i64)..=(t_in as i64) {
        let mut slice = vec![ZERO; block_len(rest, t_in)];
        let mut any = false;
        for (si, v) in slice.iter_mut().enumerate() {
            let mut tau = tau_of(si, rest, t_in);
            tau.insert(j, k);
            *v = g.get(&tau);
            any |= *v != ZERO;
        }
        if !any {
            continue;
        }
        let vals = grid::synthesize(&slice, rest, t_in, m);
        let divided: Vec<Complex64> = vals.iter().zip(&lam).map(|(v, l)| v / Complex64::new(0.0, k as f64 + l)).collect();
        let coeffs = grid::analyze(&divided, rest, m, t_out);
        for (si, v) in coeffs.iter().enumerate() {
            let mut tau = tau_of(si, rest, t_out);
            tau.insert(j, k);
            let idx = index_of(&tau, t_out).expect("inside output block");
            out.coeffs[idx] = *v;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ObstructionKind {
    /// The divisor vanishes exactly for every `j`.
    Resonance,
    /// The best divisor is positive but below the floor.
    SmallDivisor { divisor: f64 },
    /// `xi = 0` data with a nonzero `t`-mean: outside the range.
    Incompatible { magnitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstruction {
    pub xi: i64,
    pub kind: ObstructionKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeResidual {
    pub xi: i64,
    pub j: usize,
    pub divisor: f64,
    /// Worst `sup_t |X_l u^ - f_l^|` over all `l`, relative to the data.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub field: PartialFourierField,
    pub obstructions: Vec<Obstruction>,
    pub residuals: Vec<ModeResidual>,
}

impl SolveOutcome {
    pub fn skipped(&self) -> Vec<i64> {
        self.obstructions.iter().map(|o| o.xi).collect()
    }
}

/// Solves every mode of `X_j u = f_j`. Per `xi` the coordinate with the
/// largest divisor is used (ties go to the smallest `j`); modes that cannot be
/// solved are skipped and reported.
pub fn solve_system(f_list: &[PartialFourierField], sys: &SystemSpec, divisor_floor: f64) -> Result<SolveOutcome> {
    let n = sys.n();
    if f_list.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f_list.len() });
    }
    for f in f_list {
        if f.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.n() });
        }
    }
    let xi_window = f_list.iter().map(|f| f.xi_window()).max().unwrap_or(0);
    let t_window = f_list.iter().map(|f| f.t_window()).max().unwrap_or(0);
    let mut keys: Vec<i64> = f_list.iter().flat_map(|f| f.blocks().keys().copied()).collect();
    keys.sort_unstable();
    keys.dedup();

    let mut out = PartialFourierField::new(n, xi_window, t_window)?;
    let mut obstructions = Vec::new();
    let mut residuals = Vec::new();
    for xi in keys {
        if f_list.iter().all(|f| f.block(xi).is_none_or(TBlock::is_zero)) {
            continue;
        }
        if xi == 0 {
            let (b, incompatible) = solve_zero_mode(f_list, n, t_window);
            if incompatible > 0.0 {
                obstructions.push(Obstruction { xi, kind: ObstructionKind::Incompatible { magnitude: incompatible } });
            }
            out.insert_block(0, b)?;
            residuals.push(ModeResidual { xi, j: 0, divisor: 0.0, residual: mode_residual(&out, f_list, sys, xi)? });
            continue;
        }
        let mut best: Option<(usize, DivisorInfo)> = None;
        for j in 0..n {
            let d = mode_divisor(sys, j, xi)?;
            if best.is_none_or(|(_, b)| d.value > b.value) {
                best = Some((j, d));
            }
        }
        let (j, d) = best.expect("n >= 1");
        if d.exact_zero {
            obstructions.push(Obstruction { xi, kind: ObstructionKind::Resonance });
            continue;
        }
        if d.value < divisor_floor {
            obstructions.push(Obstruction { xi, kind: ObstructionKind::SmallDivisor { divisor: d.value } });
            continue;
        }
        let b = solve_mode(&f_list[j], sys, j, xi, divisor_floor)?;
        out.insert_block(xi, b)?;
        residuals.push(ModeResidual { xi, j, divisor: d.value, residual: mode_residual(&out, f_list, sys, xi)? });
    }
    Ok(SolveOutcome { field: out, obstructions, residuals })
}

/// `xi = 0`: `d/dt_j u^ = f_j^`, solved per `tau` with the largest `|tau_j|`.
/// Returns the block and the size of the `tau = 0` data that cannot be met.
fn solve_zero_mode(f_list: &[PartialFourierField], n: usize, t: usize) -> (TBlock, f64) {
    let mut b = TBlock::zeros(n, t);
    for i in 0..b.coeffs.len() {
        let tau = tau_of(i, n, t);
        let Some(j) = (0..n).filter(|&j| tau[j] != 0).max_by_key(|&j| (tau[j].abs(), std::cmp::Reverse(j))) else {
            continue;
        };
        b.coeffs[i] = f_list[j].coeff(&tau, 0) / Complex64::new(0.0, tau[j] as f64);
    }
    let zero = vec![0i64; n];
    let incompatible = f_list.iter().map(|f| f.coeff(&zero, 0).norm()).fold(0.0, f64::max);
    (b, incompatible)
}

fn mode_residual(u: &PartialFourierField, f_list: &[PartialFourierField], sys: &SystemSpec, xi: i64) -> Result<f64> {
    let single = single_block_field(sys.n(), xi, u.block(xi).expect("just inserted").clone())?;
    let mut worst = 0.0f64;
    for (l, f) in f_list.iter().enumerate() {
        let xu = apply_multiplier(&single, &Multiplier::coefficient(sys, l)?, l)?;
        let fb = f.block(xi).cloned().unwrap_or_else(|| TBlock::zeros(sys.n(), 0));
        let diff = xu.block(xi).expect("block kept").sub(&fb);
        let scale = fb.sup_on_grid().max(f64::MIN_POSITIVE);
        worst = worst.max(diff.sup_on_grid() / scale);
    }
    Ok(worst)
}
