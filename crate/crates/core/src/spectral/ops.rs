//! Vector fields, the sum of squares and the phase conjugations as operators
//! on partial Fourier fields.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::{PartialFourierField, TBlock};
use super::grid::{self, block_len, index_of, tau_of};
use crate::coeffs::{SystemSpec, TrigPoly};
use crate::error::{Error, Result};

/// Largest dense block any operator may produce.
pub const MAX_BLOCK_LEN: usize = 1 << 22;

/// Truncation target for the phase series `e^{i xi A}`.
const PHASE_TAIL: f64 = 1e-17;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Multiplication by `c + sum_k m_k e^{i<k,t>}`.
#[derive(Clone, Debug)]
pub struct Multiplier {
    terms: Vec<(Vec<i64>, Complex64)>,
    constant: f64,
    bandwidth: usize,
}

impl Multiplier {
    pub fn new(p: &TrigPoly, constant: f64) -> Self {
        Multiplier { terms: p.complex_terms(), constant, bandwidth: p.bandwidth() as usize }
    }

    /// The full coefficient `a_j` of a system, constant included.
    pub fn coefficient(sys: &SystemSpec, j: usize) -> Result<Self> {
        Ok(Self::new(sys.coefficient(j)?, sys.constants()[j].to_f64()))
    }

    /// The mean `a_{j0}` of a system coefficient.
    pub fn mean(sys: &SystemSpec, j: usize) -> Result<Self> {
        Ok(Self::new(&sys.trig_mean(j)?, sys.constants()[j].to_f64()))
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn apply(&self, b: &TBlock, j: usize, xi: i64) -> TBlock {
        let n = b.n;
        let t_out = b.t_window + self.bandwidth;
        let mut out = TBlock::zeros(n, t_out);
        let ixi = Complex64::new(0.0, xi as f64);
        for (i, c) in b.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            let tau = tau_of(i, n, b.t_window);
            let here = index_of(&tau, t_out).expect("inside widened block");
            out.coeffs[here] += Complex64::new(0.0, tau[j] as f64) * c + ixi * self.constant * c;
            if xi == 0 {
                continue;
            }
            for (k, m) in &self.terms {
                let pos: Vec<i64> = tau.iter().zip(k).map(|(a, b)| a + b).collect();
                let idx = index_of(&pos, t_out).expect("inside widened block");
                out.coeffs[idx] += ixi * m * c;
            }
        }
        out
    }
}

fn check_index(u: &PartialFourierField, j: usize) -> Result<()> {
    if j >= u.n() {
        return Err(Error::IndexOutOfRange { index: j, dim: u.n() });
    }
    Ok(())
}

fn check_len(n: usize, t: usize) -> Result<()> {
    let side = (2 * t + 1) as f64;
    if side.powi(n as i32) > MAX_BLOCK_LEN as f64 {
        return Err(Error::WindowOverflow(format!("t-window {t} in dimension {n}")));
    }
    Ok(())
}

fn map_par(u: &PartialFourierField, f: impl Fn(i64, &TBlock) -> Result<TBlock> + Sync) -> Result<PartialFourierField> {
    let blocks: Result<Vec<(i64, TBlock)>> = u.blocks().par_iter().map(|(&xi, b)| Ok((xi, f(xi, b)?))).collect();
    Ok(PartialFourierField::with_blocks(u, blocks?.into_iter().collect::<BTreeMap<_, _>>()))
}

/// Per mode: `(d/dt_j + i m(t) xi) u^(., xi)`. Each block widens by the
/// multiplier's bandwidth.
pub fn apply_multiplier(u: &PartialFourierField, m: &Multiplier, j: usize) -> Result<PartialFourierField> {
    check_index(u, j)?;
    map_par(u, |xi, b| {
        check_len(u.n(), b.t_window + m.bandwidth)?;
        Ok(m.apply(b, j, xi))
    })
}

/// `X_j u` for the field `d/dt_j + a(t) d/dx` with a trig-polynomial `a`.
pub fn apply_vector_field(u: &PartialFourierField, a: &TrigPoly, j: usize) -> Result<PartialFourierField> {
    if a.dim() != u.n() {
        return Err(Error::DimensionMismatch { expected: u.n(), got: a.dim() });
    }
    apply_multiplier(u, &Multiplier::new(a, 0.0), j)
}

/// `X_j u` for the `j`-th field of a system.
pub fn apply_system_field(u: &PartialFourierField, sys: &SystemSpec, j: usize) -> Result<PartialFourierField> {
    check_dim(u, sys)?;
    apply_multiplier(u, &Multiplier::coefficient(sys, j)?, j)
}

fn check_dim(u: &PartialFourierField, sys: &SystemSpec) -> Result<()> {
    if sys.n() != u.n() {
        return Err(Error::DimensionMismatch { expected: u.n(), got: sys.n() });
    }
    Ok(())
}

/// `P u = sum_j X_j X_j u`.
pub fn apply_sum_of_squares(u: &PartialFourierField, sys: &SystemSpec) -> Result<PartialFourierField> {
    check_dim(u, sys)?;
    let mut acc: Option<PartialFourierField> = None;
    for j in 0..sys.n() {
        let once = apply_system_field(u, sys, j)?;
        let twice = apply_system_field(&once, sys, j)?;
        acc = Some(match acc {
            None => twice,
            Some(a) => a.add(&twice)?,
        });
    }
    Ok(acc.expect("n >= 1"))
}

/// Degree `m` after which `sum_{p >= m} z^p / p!` drops below the tail target.
fn phase_degree(z: f64) -> usize {
    if z == 0.0 {
        return 0;
    }
    let mut m = 0usize;
    loop {
        // Remainder of the exponential series from degree m, bounded by
        // z^m/m! * 1/(1 - z/(m+1)) once m + 1 > z.
        let lead = (m as f64 * z.ln() - ln_factorial(m)).exp();
        if (m as f64 + 1.0) > 2.0 * z && 2.0 * lead < PHASE_TAIL {
            return m;
        }
        m += 1;
    }
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|k| (k as f64).ln()).sum()
}

/// The `t`-window a block of half-width `t` needs after multiplication by
/// `e^{i xi A}` for a phase of the given bandwidth and `l^1` norm.
pub fn phase_window(t: usize, xi: i64, bandwidth: usize, l1: f64) -> usize {
    t + bandwidth * phase_degree(xi.unsigned_abs() as f64 * l1)
}

/// Per mode: `u^(t, xi) -> e^{sign i A(t) xi} u^(t, xi)`. The product is formed
/// on a uniform grid of an enlarged window that captures the phase series to
/// `1e-17`; when that window exceeds [`MAX_BLOCK_LEN`] it is clamped and the
/// result is marked lossy.
pub fn conjugate(u: &PartialFourierField, a: &TrigPoly, sign: i32) -> Result<PartialFourierField> {
    if a.dim() != u.n() {
        return Err(Error::DimensionMismatch { expected: u.n(), got: a.dim() });
    }
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidInput(format!("conjugation sign must be +-1, got {sign}")));
    }
    if a.is_zero() {
        return Ok(u.clone());
    }
    let n = u.n();
    let bw = a.bandwidth() as usize;
    let l1 = a.l1_norm();
    let a_block = {
        let mut b = TBlock::zeros(n, bw);
        for (k, c) in a.complex_terms() {
            b.set(&k, c)?;
        }
        b
    };
    let max_side = (MAX_BLOCK_LEN as f64).powf(1.0 / n as f64).floor() as usize;
    let max_t = (max_side.saturating_sub(1)) / 2;
    let results: Vec<(i64, TBlock, bool)> = u
        .blocks()
        .par_iter()
        .map(|(&xi, b)| {
            if xi == 0 {
                return (xi, b.clone(), false);
            }
            let want = phase_window(b.t_window, xi, bw, l1);
            let (t_out, lossy) = if want > max_t { (max_t.max(b.t_window), true) } else { (want, false) };
            let m = grid::fft_size(2 * t_out + 1);
            let vals = b.grid_values(m);
            let phase = phase_values(a, &a_block, m);
            let prod: Vec<Complex64> = vals
                .iter()
                .zip(&phase)
                .map(|(v, p)| v * Complex64::from_polar(1.0, sign as f64 * xi as f64 * p))
                .collect();
            let coeffs = grid::analyze(&prod, n, m, t_out);
            debug_assert_eq!(coeffs.len(), block_len(n, t_out));
            (xi, TBlock { n, t_window: t_out, coeffs }, lossy)
        })
        .collect();
    let any_lossy = results.iter().any(|r| r.2);
    let mut out = PartialFourierField::with_blocks(u, results.into_iter().map(|(x, b, _)| (x, b)).collect());
    if any_lossy {
        out.mark_lossy();
    }
    Ok(out)
}

fn phase_values(a: &TrigPoly, a_block: &TBlock, m: usize) -> Vec<f64> {
    let n = a_block.n;
    if m > 2 * a_block.t_window {
        return grid::synthesize(&a_block.coeffs, n, a_block.t_window, m).iter().map(|v| v.re).collect();
    }
    (0..m.pow(n as u32)).map(|i| a.eval(&grid::grid_point(i, n, m)).expect("dimension checked")).collect()
}

/// `S_j` of a system: conjugation by the primitive `A_j` of `a_j - a_{j0}`.
pub fn partial_conjugation(u: &PartialFourierField, sys: &SystemSpec, j: usize, sign: i32) -> Result<PartialFourierField> {
    let a = sys.coefficient(j)?.primitive_in_variable(j)?;
    conjugate(u, &a, sign)
}

fn sup_residual(d: &PartialFourierField) -> f64 {
    d.blocks().values().map(TBlock::sup_on_grid).fold(0.0, f64::max)
}

/// `sup` over the grid of `(d/dt_j + i a_{j0} xi) S_j u - S_j X_j u`.
pub fn intertwining_residual(u: &PartialFourierField, sys: &SystemSpec, j: usize) -> Result<f64> {
    check_dim(u, sys)?;
    let su = partial_conjugation(u, sys, j, 1)?;
    let lhs = apply_multiplier(&su, &Multiplier::mean(sys, j)?, j)?;
    let xu = apply_system_field(u, sys, j)?;
    let rhs = partial_conjugation(&xu, sys, j, 1)?;
    Ok(sup_residual(&lhs.sub(&rhs)?))
}

/// One row of the mode-wise energy identity.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRow {
    pub xi: i64,
    /// `sum_j ||X_j u^(., xi)||^2`.
    pub field_energy: f64,
    /// `|<P u^(., xi), u^(., xi)>|`.
    pub pairing: f64,
}

impl EnergyRow {
    pub fn relative_defect(&self) -> f64 {
        let scale = self.field_energy.abs().max(self.pairing.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.field_energy - self.pairing).abs() / scale
        }
    }
}

/// Checks `sum_j ||X_j u||^2 = |<P u, u>|` mode by mode (Parseval norms).
pub fn energy_identity(u: &PartialFourierField, sys: &SystemSpec) -> Result<Vec<EnergyRow>> {
    check_dim(u, sys)?;
    let fields: Vec<PartialFourierField> = (0..sys.n()).map(|j| apply_system_field(u, sys, j)).collect::<Result<_>>()?;
    let pu = apply_sum_of_squares(u, sys)?;
    let mut rows = Vec::new();
    for (&xi, b) in u.blocks() {
        let energies: Vec<f64> = fields.iter().map(|f| f.block(xi).map_or(0.0, TBlock::l2_sq)).collect();
        let field_energy = grid::pairwise_sum(&energies);
        let pairing = pu.block(xi).map_or(ZERO, |p| p.inner(b)).norm();
        rows.push(EnergyRow { xi, field_energy, pairing });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::ExactReal;
    use crate::rational::int;
    use crate::spectral::field::{synthesize, ModeSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one(n: usize, tau: Vec<i64>, xi: i64) -> PartialFourierField {
        synthesize(n, 4, 4, &[ModeSpec::plain(tau, xi, c(1.0, 0.0))]).unwrap()
    }

    #[test]
    fn field_on_x_mode() {
        let u = one(1, vec![0], 1);
        let v = apply_vector_field(&u, &TrigPoly::cos_t(1, 0), 0).unwrap();
        assert_eq!(v.coeff(&[1], 1), c(0.0, 0.5));
        assert_eq!(v.coeff(&[-1], 1), c(0.0, 0.5));
        assert_eq!(v.coeff(&[0], 1), ZERO);
    }

    #[test]
    fn pure_derivative() {
        let u = one(2, vec![0, 1], 0);
        let v = apply_vector_field(&u, &TrigPoly::zero(2), 1).unwrap();
        assert_eq!(v.entries(), vec![(vec![0, 1], 0, c(0.0, 1.0))]);
    }

    #[test]
    fn product_matches_pointwise_oracle() {
        // X u for u = e^{i(t + x)}, a = cos t: compare with i(1 + cos t) e^{it}
        // evaluated pointwise.
        let u = one(1, vec![1], 1);
        let v = apply_vector_field(&u, &TrigPoly::cos_t(1, 0), 0).unwrap();
        for k in 0..37 {
            let t = 0.17 * k as f64;
            let want = c(0.0, 1.0) * (1.0 + t.cos()) * Complex64::from_polar(1.0, t);
            assert!((v.eval(&[t], 1) - want).norm() < 1e-14);
        }
    }

    #[test]
    fn sum_of_squares_examples() {
        let zero = SystemSpec::new(1, vec![TrigPoly::zero(1)], None).unwrap();
        let u = one(1, vec![0], 1);
        assert!(apply_sum_of_squares(&u, &zero).unwrap().entries().is_empty());
        let u = one(1, vec![1], 0);
        assert_eq!(apply_sum_of_squares(&u, &zero).unwrap().entries(), vec![(vec![1], 0, c(-1.0, 0.0))]);
        let half = SystemSpec::constant(vec![ExactReal::rational(1, 2)]).unwrap();
        let u = one(1, vec![1], 1);
        let p = apply_sum_of_squares(&u, &half).unwrap();
        assert!((p.coeff(&[1], 1) - c(-2.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn conjugation_identity_and_inverse() {
        let u = synthesize(
            2,
            3,
            3,
            &[ModeSpec::plain(vec![1, -2], 2, c(0.3, 0.1)), ModeSpec::plain(vec![0, 3], -3, c(-1.0, 0.4))],
        )
        .unwrap();
        assert_eq!(conjugate(&u, &TrigPoly::zero(2), 1).unwrap(), u);
        let a = &TrigPoly::cos(2, &[1, 1], int(1)).unwrap() + &TrigPoly::sin_t(2, 0);
        let s = conjugate(&u, &a, 1).unwrap();
        assert!(!s.is_lossy());
        let back = conjugate(&s, &a, -1).unwrap();
        assert!(u.sub(&back).unwrap().max_abs() < 1e-12);
        // modulus preserved pointwise
        for k in 0..50 {
            let t = [0.31 * k as f64, 0.77 * k as f64];
            for xi in [2, -3] {
                assert!((s.eval(&t, xi).norm() - u.eval(&t, xi).norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn intertwining_examples() {
        let sys = SystemSpec::new(1, vec![TrigPoly::cos_t(1, 0)], None).unwrap();
        let u = one(1, vec![0], 1);
        assert!(intertwining_residual(&u, &sys, 0).unwrap() <= 1e-10);
        let u0 = one(1, vec![2], 0);
        assert_eq!(intertwining_residual(&u0, &sys, 0).unwrap(), 0.0);
        let cst = SystemSpec::constant(vec![ExactReal::sqrt(2).unwrap()]).unwrap();
        assert!(intertwining_residual(&one(1, vec![1], 3), &cst, 0).unwrap() <= 1e-12);
    }

    #[test]
    fn energy_identity_per_mode() {
        let a0 = &TrigPoly::cos_t(2, 1) + &TrigPoly::sin_t(2, 0);
        let sys = SystemSpec::new(2, vec![a0, TrigPoly::cos_t(2, 0)], Some(vec![ExactReal::rational(1, 3), ExactReal::zero()])).unwrap();
        let modes: Vec<ModeSpec> =
            (-2..=2).flat_map(|xi| (-2..=2).map(move |k| ModeSpec::plain(vec![k, -k], xi, c(1.0 / (1 + k * k) as f64, 0.2 * xi as f64)))).collect();
        let u = synthesize(2, 2, 2, &modes).unwrap();
        for row in energy_identity(&u, &sys).unwrap() {
            assert!(row.relative_defect() < 1e-9, "{row:?}");
        }
    }

    #[test]
    fn overflow_and_bad_index() {
        let u = one(1, vec![0], 1);
        assert!(matches!(apply_vector_field(&u, &TrigPoly::zero(1), 3), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(apply_vector_field(&u, &TrigPoly::zero(2), 0), Err(Error::DimensionMismatch { .. })));
        let big = TrigPoly::cos(1, &[3_000_000], int(1)).unwrap();
        assert!(matches!(apply_vector_field(&u, &big, 0), Err(Error::WindowOverflow(_))));
    }
}
