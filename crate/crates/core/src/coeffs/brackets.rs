//! Commutator brackets, finite-type detection and the global primitive of a
//! closed coefficient form.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::system::SystemSpec;
use super::trig::TrigPoly;
use crate::error::{Error, Result};

/// `d/dt_j a_l - d/dt_l a_j`, the coefficient of `d/dx` in `[X_j, X_l]`.
pub fn commutator_bracket(a_j: &TrigPoly, a_l: &TrigPoly, j: usize, l: usize) -> Result<TrigPoly> {
    if a_j.dim() != a_l.dim() {
        return Err(Error::DimensionMismatch { expected: a_j.dim(), got: a_l.dim() });
    }
    if j == l {
        return Err(Error::InvalidInput(format!("bracket needs distinct indices, got ({j}, {l})")));
    }
    Ok(&a_l.partial_derivative(j)? - &a_j.partial_derivative(l)?)
}

/// Whether every bracket of the system vanishes identically.
pub fn is_closed(sys: &SystemSpec) -> bool {
    first_nonzero_bracket(sys).is_none()
}

fn first_nonzero_bracket(sys: &SystemSpec) -> Option<(usize, usize)> {
    let a = sys.coefficients();
    for j in 0..sys.n() {
        for l in j + 1..sys.n() {
            if !commutator_bracket(&a[j], &a[l], j, l).expect("valid indices").is_zero() {
                return Some((j, l));
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteTypeReport {
    pub exists: bool,
    /// Witness point as fractions of `2 pi`.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rational_vec")]
    pub witness_point: Option<Vec<BigRational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_pair: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket_value: Option<f64>,
    /// `max 1/|b|` over grid points where `|b| >= max|b| / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reciprocal_sup_bound: Option<f64>,
    #[serde(skip)]
    pub bracket: Option<TrigPoly>,
    pub grid_points_per_axis: usize,
}

mod opt_rational_vec {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<BigRational>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => crate::serde_big::rational_vec::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<BigRational>>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "crate::serde_big::rational_vec")] Vec<BigRational>);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

impl FiniteTypeReport {
    pub fn point_f64(&self) -> Option<Vec<f64>> {
        self.witness_point
            .as_ref()
            .map(|p| p.iter().map(|q| 2.0 * std::f64::consts::PI * crate::rational::to_f64(q)).collect())
    }
}

fn grid_points(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..m).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}

const TIE: f64 = 1e-12;

/// Searches a uniform grid of `4 (bandwidth + 1)` points per axis for the
/// largest bracket; a nonzero trig polynomial of that bandwidth cannot vanish
/// on the whole grid.
pub fn finite_type_exists(sys: &SystemSpec) -> FiniteTypeReport {
    let n = sys.n();
    let a = sys.coefficients();
    let bw = a.iter().map(|p| p.bandwidth()).max().unwrap_or(0) as usize;
    let m = 4 * (bw + 1);
    let mut report = FiniteTypeReport {
        exists: false,
        witness_point: None,
        witness_pair: None,
        bracket_value: None,
        reciprocal_sup_bound: None,
        bracket: None,
        grid_points_per_axis: m,
    };
    let pts = grid_points(n, m);
    let step = 2.0 * std::f64::consts::PI / m as f64;
    // (max |b|, pair, bracket, values)
    let mut best: Option<(f64, (usize, usize), TrigPoly, Vec<f64>)> = None;
    for j in 0..n {
        for l in j + 1..n {
            let b = commutator_bracket(&a[j], &a[l], j, l).expect("valid indices");
            if b.is_zero() {
                continue;
            }
            let vals: Vec<f64> = pts
                .iter()
                .map(|p| b.eval(&p.iter().map(|&i| i as f64 * step).collect::<Vec<_>>()).unwrap())
                .collect();
            let mx = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if best.as_ref().is_none_or(|(bm, ..)| mx > bm * (1.0 + TIE)) {
                best = Some((mx, (j, l), b, vals));
            }
        }
    }
    let Some((mx, pair, b, vals)) = best else {
        return report;
    };
    let mut arg = 0usize;
    for (i, v) in vals.iter().enumerate() {
        let cur = vals[arg];
        let better = v.abs() > cur.abs() * (1.0 + TIE) || ((v.abs() - cur.abs()).abs() <= TIE * mx && *v > cur + TIE * mx);
        if better {
            arg = i;
        }
    }
    let recip = vals.iter().filter(|v| v.abs() >= mx / 2.0).map(|v| 1.0 / v.abs()).fold(0.0, f64::max);
    report.exists = vals[arg] != 0.0;
    report.witness_point =
        Some(pts[arg].iter().map(|&i| BigRational::new((i as i64).into(), (m as i64).into())).collect());
    report.witness_pair = Some(pair);
    report.bracket_value = Some(vals[arg]);
    report.reciprocal_sup_bound = Some(recip);
    report.bracket = Some(b);
    report
}

/// The primitive `A` with `d/dt_j A = a_j - alpha_j` for every `j`, built by
/// integrating `a_j` along `t_j` with the earlier coordinates frozen at zero.
#[allow(non_snake_case)]
pub fn global_primitive_A(sys: &SystemSpec) -> Result<TrigPoly> {
    if let Some((j, l)) = first_nonzero_bracket(sys) {
        return Err(Error::NotClosed(j, l));
    }
    let n = sys.n();
    let mut total = TrigPoly::zero(n);
    for j in 0..n {
        let r = sys.coefficients()[j].restrict_leading(j)?;
        total = &total + &r.primitive_in_variable(j)?;
    }
    for j in 0..n {
        let lhs = total.partial_derivative(j)?;
        let a = &sys.coefficients()[j];
        let rhs = a - &TrigPoly::constant(n, a.mean_in_variable(j)?.mean());
        if lhs != rhs {
            return Err(Error::NotClosed(j, j));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn cos_sum(n: usize, k: &[i64]) -> TrigPoly {
        TrigPoly::cos(n, k, int(1)).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let b = commutator_bracket(&TrigPoly::zero(2), &TrigPoly::cos_t(2, 0), 0, 1).unwrap();
        assert_eq!(b, -&TrigPoly::sin_t(2, 0));
        let f = cos_sum(2, &[1, 1]);
        let b = commutator_bracket(&f.partial_derivative(0).unwrap(), &f.partial_derivative(1).unwrap(), 0, 1).unwrap();
        assert!(b.is_zero());
        let b = commutator_bracket(&TrigPoly::sin_t(2, 1), &TrigPoly::zero(2), 0, 1).unwrap();
        assert_eq!(b, -&TrigPoly::cos_t(2, 1));
        assert!(commutator_bracket(&TrigPoly::zero(2), &TrigPoly::zero(2), 1, 1).is_err());
    }

    #[test]
    fn finite_type_witness_at_three_halves_pi() {
        let sys = SystemSpec::new(2, vec![TrigPoly::zero(2), TrigPoly::cos_t(2, 0)], None).unwrap();
        let r = finite_type_exists(&sys);
        assert!(r.exists);
        assert_eq!(r.witness_pair, Some((0, 1)));
        assert_eq!(r.witness_point.as_ref().unwrap()[0], rat(3, 4));
        assert!((r.bracket_value.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.reciprocal_sup_bound.unwrap() <= 2.0 + 1e-12);
    }

    #[test]
    fn constant_and_exact_systems_have_no_finite_type() {
        let sys = SystemSpec::new(2, vec![TrigPoly::constant(2, rat(1, 3)), TrigPoly::constant(2, int(2))], None).unwrap();
        assert!(!finite_type_exists(&sys).exists);
        let f = cos_sum(2, &[1, 2]);
        let sys = SystemSpec::new(2, vec![f.partial_derivative(0).unwrap(), f.partial_derivative(1).unwrap()], None).unwrap();
        assert!(!finite_type_exists(&sys).exists);
        assert!(is_closed(&sys));
    }

    #[test]
    fn permutation_equivariance() {
        let a0 = &TrigPoly::sin_t(3, 2) + &cos_sum(3, &[0, 2, 1]);
        let a1 = TrigPoly::cos_t(3, 0);
        let a2 = TrigPoly::constant(3, rat(1, 2));
        let sys = SystemSpec::new(3, vec![a0, a1, a2], None).unwrap();
        let r = finite_type_exists(&sys);
        for perm in [[1, 2, 0], [2, 0, 1], [0, 2, 1]] {
            let p = finite_type_exists(&sys.permuted(&perm).unwrap());
            assert_eq!(p.exists, r.exists);
            assert!((p.bracket_value.unwrap().abs() - r.bracket_value.unwrap().abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn global_primitive_examples() {
        let sys = SystemSpec::new(2, vec![TrigPoly::cos_t(2, 0), TrigPoly::zero(2)], None).unwrap();
        assert_eq!(global_primitive_A(&sys).unwrap(), TrigPoly::sin_t(2, 0));
        let sys = SystemSpec::new(2, vec![TrigPoly::constant(2, int(1)), TrigPoly::zero(2)], None).unwrap();
        assert!(global_primitive_A(&sys).unwrap().is_zero());
        let bad = SystemSpec::new(2, vec![TrigPoly::zero(2), TrigPoly::cos_t(2, 0)], None).unwrap();
        assert!(matches!(global_primitive_A(&bad), Err(Error::NotClosed(0, 1))));
    }

    #[test]
    fn global_primitive_of_shifted_sine() {
        // a_1 = a_2 = -sin(t1 + t2); oracle: A = cos(t1+t2) - 1, checked by
        // differentiating the closed form symbolically
        let s = TrigPoly::sin(2, &[1, 1], int(-1)).unwrap();
        let sys = SystemSpec::new(2, vec![s.clone(), s.clone()], None).unwrap();
        let a = global_primitive_A(&sys).unwrap();
        let want = &cos_sum(2, &[1, 1]) - &TrigPoly::constant(2, int(1));
        assert_eq!(a, want);
        for j in 0..2 {
            assert_eq!(want.partial_derivative(j).unwrap(), s);
        }
    }
}
