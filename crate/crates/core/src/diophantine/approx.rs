//! Scans of `m(xi) = max_j dist(alpha_j xi, Z)`, the simultaneous
//! approximability decision and the off-resonance lower bound.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::real::{common_denominator, dist_enclosure, ExactReal};
use super::witness::{factorial_witness, rational_witness, WitnessSequence};
use crate::error::{Error, Result};
use crate::rational::{int, to_f64};
use crate::status::Status;

const RATIONAL_WITNESS_LEN: u32 = 6;
const DEFAULT_LIOUVILLE_LEN: u32 = 4;

/// One row of a scan: certified bounds `m_lo <= m(xi) <= m_hi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub xi: u64,
    #[serde(with = "crate::serde_big::rational")]
    pub m_lo: BigRational,
    #[serde(with = "crate::serde_big::rational")]
    pub m_hi: BigRational,
}

impl ScanRow {
    pub fn is_exact(&self) -> bool {
        self.m_lo == self.m_hi
    }

    pub fn m(&self) -> f64 {
        to_f64(&((&self.m_lo + &self.m_hi) / int(2)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `-ln m` against `ln(1 + xi)` over rows with `m > 0`.
    pub rho_hat: Option<f64>,
}

impl ScanTable {
    /// `min_xi m_lo(xi) (1 + xi)^rho` over rows.
    pub fn min_scaled(&self, rho: f64) -> f64 {
        self.rows
            .iter()
            .map(|r| to_f64(&r.m_lo) * (1.0 + r.xi as f64).powf(rho))
            .fold(f64::INFINITY, f64::min)
    }

    /// Exact check of `m_lo(xi) >= c (1 + xi)^{-rho}` for integer `rho`,
    /// skipping rows whose certified value is zero when `skip_zero`.
    pub fn respects_bound(&self, c: &BigRational, rho: u32, skip_zero: bool) -> bool {
        self.rows.iter().all(|r| {
            if skip_zero && r.m_hi.is_zero() {
                return true;
            }
            let w = BigRational::from_integer(num_traits::pow::pow(BigInt::from(r.xi + 1), rho as usize));
            &r.m_lo * w >= *c
        })
    }
}

fn row(alphas: &[ExactReal], xi: u64) -> ScanRow {
    let x = BigInt::from(xi);
    let bits = 64 + x.bits();
    let mut lo = BigRational::zero();
    let mut hi = BigRational::zero();
    for a in alphas {
        let (l, h) = a.enclosure(bits);
        let xr = BigRational::from_integer(x.clone());
        let (dl, dh) = dist_enclosure(&(l * &xr), &(h * &xr));
        if dl > lo {
            lo = dl;
        }
        if dh > hi {
            hi = dh;
        }
    }
    ScanRow { xi, m_lo: lo, m_hi: hi }
}

/// Slope of the least-squares line through `(x, y)` points.
pub fn ls_slope(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Scans `1 <= xi <= xi_max` (the table is symmetric in the sign of `xi`).
pub fn sa_scan(alphas: &[ExactReal], xi_max: u64) -> Result<ScanTable> {
    if alphas.is_empty() {
        return Err(Error::InvalidInput("empty alpha list".into()));
    }
    if xi_max < 2 {
        return Err(Error::InvalidInput("xi_max must be at least 2".into()));
    }
    let rows: Vec<ScanRow> = (1..=xi_max).into_par_iter().map(|xi| row(alphas, xi)).collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.m_lo.is_positive())
        .map(|r| ((1.0 + r.xi as f64).ln(), -r.m().ln()))
        .collect();
    let rho_hat = ls_slope(&pts).map(|(s, _)| s);
    Ok(ScanTable { rows, rho_hat })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SaStatus {
    SA,
    NotSA,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SaCertificate {
    Witness(WitnessSequence),
    LowerBound {
        #[serde(with = "crate::serde_big::rational")]
        c: BigRational,
        rho: u32,
        proof_tag: String,
    },
    Scan { rho_hat: Option<f64>, min_m: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineVerdict {
    pub status: SaStatus,
    pub certificate: SaCertificate,
    #[serde(skip)]
    pub scan: Option<ScanTable>,
}

/// Liouville-type lower bound `|tau + alpha xi| >= C / (1 + |xi|)` for
/// `alpha = (P + R sqrt(d)) / s`: the conjugate product `|m^2 - R^2 d xi^2| >= 1`
/// with `m = s tau + P xi` gives `C = 1 / (s (1 + 2|R| ceil(sqrt d)))`.
pub fn quadratic_constant(a: &BigRational, b: &BigRational, d: i64) -> BigRational {
    let s = a.denom().lcm(b.denom());
    let r = (b * BigRational::from_integer(s.clone())).to_integer().abs();
    let sq = crate::rational::ceil_sqrt(&BigInt::from(d));
    let k = BigInt::one() + BigInt::from(2) * r * sq;
    BigRational::new(BigInt::one(), s * k)
}

fn best_quadratic(alphas: &[ExactReal]) -> Option<BigRational> {
    alphas
        .iter()
        .filter_map(|a| match a {
            ExactReal::Quadratic { a, b, d } => Some(quadratic_constant(a, b, *d)),
            _ => None,
        })
        .max()
}

fn scan_summary(scan: &ScanTable) -> SaCertificate {
    SaCertificate::Scan {
        rho_hat: scan.rho_hat,
        min_m: scan.rows.iter().map(|r| r.m()).fold(f64::INFINITY, f64::min),
    }
}

/// Decides simultaneous approximability for tagged tuples.
pub fn classify_sa(alphas: &[ExactReal], xi_max: u64) -> Result<DiophantineVerdict> {
    let scan = sa_scan(alphas, xi_max)?;
    if let Some(c) = best_quadratic(alphas) {
        if scan.respects_bound(&c, 1, false) {
            return Ok(DiophantineVerdict {
                status: SaStatus::NotSA,
                certificate: SaCertificate::LowerBound { c, rho: 1, proof_tag: "quadratic-conjugate-product".into() },
                scan: Some(scan),
            });
        }
        let certificate = scan_summary(&scan);
        return Ok(DiophantineVerdict { status: SaStatus::Undetermined, certificate, scan: Some(scan) });
    }
    if alphas.iter().all(ExactReal::is_rational) {
        let w = rational_witness(alphas, RATIONAL_WITNESS_LEN).expect("rational tuple");
        w.validate(alphas)?;
        return Ok(DiophantineVerdict { status: SaStatus::SA, certificate: SaCertificate::Witness(w), scan: Some(scan) });
    }
    let len = alphas
        .iter()
        .filter_map(|a| match a {
            ExactReal::Liouville { depth, .. } => Some(*depth),
            _ => None,
        })
        .min()
        .unwrap_or(DEFAULT_LIOUVILLE_LEN)
        .max(3);
    if let Some(w) = factorial_witness(alphas, len) {
        return Ok(DiophantineVerdict { status: SaStatus::SA, certificate: SaCertificate::Witness(w), scan: Some(scan) });
    }
    let certificate = scan_summary(&scan);
    Ok(DiophantineVerdict { status: SaStatus::Undetermined, certificate, scan: Some(scan) })
}

/// How the `xi = 0` stratum (`tau != 0`) enters the off-resonance bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum XiZeroStratum {
    /// The bound is also required on `{xi = 0, tau != 0}`.
    #[default]
    Included,
    /// Only `xi != 0` is constrained.
    Excluded,
}

/// The resonance set `Gamma = {(tau, xi) : tau_j + alpha_j xi = 0 for all j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GammaSet {
    /// Only the origin.
    Origin,
    /// `{xi in period Z, tau = -alpha xi}`.
    Lattice {
        #[serde(with = "crate::serde_big::int")]
        period: BigInt,
        #[serde(with = "crate::serde_big::rational_vec")]
        slope: Vec<BigRational>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GsVerdict {
    pub status: Status,
    pub gamma: GammaSet,
    pub stratum: XiZeroStratum,
    pub certificate: SaCertificate,
    #[serde(skip)]
    pub scan: Option<ScanTable>,
}

pub fn gs_condition_check(alphas: &[ExactReal], xi_max: u64) -> Result<GsVerdict> {
    gs_condition_check_with(alphas, xi_max, XiZeroStratum::default())
}

/// Lower bound `max_j |tau_j + alpha_j xi| >= C (1 + |xi|)^{-rho}` off `Gamma`.
pub fn gs_condition_check_with(alphas: &[ExactReal], xi_max: u64, stratum: XiZeroStratum) -> Result<GsVerdict> {
    let scan = sa_scan(alphas, xi_max)?;
    // on xi = 0 some |tau_j| >= 1, so any C <= 1 covers the stratum
    let stratum_ok = |c: &BigRational| stratum == XiZeroStratum::Excluded || *c <= BigRational::one();
    let all_rational = alphas.iter().all(ExactReal::is_rational);
    let gamma = if all_rational {
        let slope = alphas.iter().map(|a| -a.as_rational().unwrap().clone()).collect();
        GammaSet::Lattice { period: common_denominator(alphas), slope }
    } else {
        GammaSet::Origin
    };
    let verdict = |status, certificate| GsVerdict { status, gamma: gamma.clone(), stratum, certificate, scan: None };
    let mut out = if all_rational {
        // off Gamma, either xi is not a multiple of Q and some alpha_j xi sits
        // at distance >= 1/Q from Z, or tau is off the exact solution by >= 1
        let c = BigRational::new(BigInt::one(), common_denominator(alphas));
        if scan.respects_bound(&c, 0, true) && stratum_ok(&c) {
            verdict(Status::Holds, SaCertificate::LowerBound { c, rho: 0, proof_tag: "bounded-denominators".into() })
        } else {
            verdict(Status::Undetermined, scan_summary(&scan))
        }
    } else if let Some(c) = best_quadratic(alphas) {
        if scan.respects_bound(&c, 1, false) && stratum_ok(&c) {
            verdict(Status::Holds, SaCertificate::LowerBound { c, rho: 1, proof_tag: "quadratic-conjugate-product".into() })
        } else {
            verdict(Status::Undetermined, scan_summary(&scan))
        }
    } else {
        let sa = classify_sa(alphas, 2)?;
        match (sa.status, sa.certificate) {
            (SaStatus::SA, SaCertificate::Witness(w)) => verdict(Status::Fails, SaCertificate::Witness(w)),
            _ => verdict(Status::Undetermined, scan_summary(&scan)),
        }
    };
    out.scan = Some(scan);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn zero_alpha_scan_vanishes() {
        let t = sa_scan(&[ExactReal::zero()], 10).unwrap();
        assert!(t.rows.iter().all(|r| r.m_hi.is_zero()));
        assert_eq!(t.rho_hat, None);
    }

    #[test]
    fn third_scan_exact() {
        let t = sa_scan(&[ExactReal::rational(1, 3)], 9).unwrap();
        for r in &t.rows {
            let want = if r.xi % 3 == 0 { BigRational::zero() } else { rat(1, 3) };
            assert!(r.is_exact());
            assert_eq!(r.m_lo, want);
        }
    }

    /// Exhaustive oracle: for each xi, minimise |tau + sqrt(2) xi| over all
    /// integer tau in range using f64 and return min xi * m(xi).
    fn brute_sqrt2(xi_max: i64) -> (i64, f64) {
        let s = 2f64.sqrt();
        let mut best = (0, f64::INFINITY);
        for xi in 1..=xi_max {
            let mut m = f64::INFINITY;
            for tau in -(2 * xi_max)..=0 {
                m = m.min((tau as f64 + s * xi as f64).abs());
            }
            if (xi as f64) * m < best.1 {
                best = (xi, xi as f64 * m);
            }
        }
        best
    }

    #[test]
    fn sqrt2_scan_against_brute_force() {
        let (xi_star, val) = brute_sqrt2(100);
        assert_eq!(xi_star, 2);
        assert!((val - (6.0 - 4.0 * 2f64.sqrt())).abs() < 1e-12);
        let t = sa_scan(&[ExactReal::sqrt(2).unwrap()], 100).unwrap();
        let scan_min = t.rows.iter().map(|r| r.xi as f64 * r.m()).fold(f64::INFINITY, f64::min);
        assert!((scan_min - 0.343_145_750_507_619_8).abs() < 1e-12);
        assert!((scan_min - val).abs() < 1e-12);
    }

    #[test]
    fn rational_is_sa() {
        let v = classify_sa(&[ExactReal::rational(1, 2)], 50).unwrap();
        assert_eq!(v.status, SaStatus::SA);
        match v.certificate {
            SaCertificate::Witness(w) => assert_eq!(w.entries[2].xi, BigInt::from(12)),
            _ => panic!("expected witness"),
        }
    }

    #[test]
    fn sqrt2_not_sa_with_constant_one_fifth() {
        let v = classify_sa(&[ExactReal::sqrt(2).unwrap()], 1000).unwrap();
        assert_eq!(v.status, SaStatus::NotSA);
        match &v.certificate {
            SaCertificate::LowerBound { c, rho, .. } => {
                assert_eq!(*c, rat(1, 5));
                assert_eq!(*rho, 1);
            }
            _ => panic!("expected lower bound"),
        }
        assert!(v.scan.unwrap().min_scaled(1.0) >= 0.2);
    }

    #[test]
    fn quadratic_constant_general() {
        // (1 + 3 sqrt 5)/2: s = 2, R = 3, ceil sqrt 5 = 3 -> 1/(2*19)
        assert_eq!(quadratic_constant(&rat(1, 2), &rat(3, 2), 5), rat(1, 38));
    }

    #[test]
    fn liouville_sa_and_gs_fails() {
        let a = [ExactReal::liouville(10, 4).unwrap()];
        let v = classify_sa(&a, 100).unwrap();
        assert_eq!(v.status, SaStatus::SA);
        let g = gs_condition_check(&a, 100).unwrap();
        assert_eq!(g.status, Status::Fails);
        assert_eq!(g.gamma, GammaSet::Origin);
    }

    #[test]
    fn float_undetermined() {
        let a = [ExactReal::Float(0.123456789)];
        assert_eq!(classify_sa(&a, 20).unwrap().status, SaStatus::Undetermined);
        assert_eq!(gs_condition_check(&a, 20).unwrap().status, Status::Undetermined);
    }

    #[test]
    fn gs_rational_holds_off_gamma() {
        let g = gs_condition_check(&[ExactReal::rational(1, 2)], 64).unwrap();
        assert_eq!(g.status, Status::Holds);
        match &g.certificate {
            SaCertificate::LowerBound { c, rho, .. } => assert_eq!((c.clone(), *rho), (rat(1, 2), 0)),
            _ => panic!(),
        }
        assert_eq!(g.gamma, GammaSet::Lattice { period: BigInt::from(2), slope: vec![rat(-1, 2)] });
    }

    #[test]
    fn strata_agree() {
        for a in [
            vec![ExactReal::rational(2, 7)],
            vec![ExactReal::sqrt(3).unwrap()],
            vec![ExactReal::liouville(2, 3).unwrap()],
            vec![ExactReal::zero(), ExactReal::rational(1, 5)],
        ] {
            let inc = gs_condition_check_with(&a, 40, XiZeroStratum::Included).unwrap();
            let exc = gs_condition_check_with(&a, 40, XiZeroStratum::Excluded).unwrap();
            assert_eq!(inc.status, exc.status);
        }
    }

    #[test]
    fn scan_is_deterministic() {
        let a = [ExactReal::sqrt(2).unwrap(), ExactReal::rational(1, 7)];
        assert_eq!(sa_scan(&a, 300).unwrap(), sa_scan(&a, 300).unwrap());
    }
}
