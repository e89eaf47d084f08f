//! Systems `X_j = d/dt_j + a_j(t) d/dx` and their JSON form.

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::trig::{CRational, TrigPoly};
use crate::diophantine::ExactReal;
use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational};

/// The coefficients `a_0, ..., a_{n-1}` on `T^n` plus exact constants added
/// to them (so irrational means can sit on top of rational trig polynomials).
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    n: usize,
    coefficients: Vec<TrigPoly>,
    constants: Vec<ExactReal>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    freq: Vec<i64>,
    re: String,
    #[serde(default = "zero_str")]
    im: String,
}

fn zero_str() -> String {
    "0".into()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemJson {
    n: usize,
    coefficients: Vec<Vec<TermJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constants: Option<Vec<ExactReal>>,
}

impl SystemSpec {
    pub fn new(n: usize, coefficients: Vec<TrigPoly>, constants: Option<Vec<ExactReal>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        if coefficients.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: coefficients.len() });
        }
        for c in &coefficients {
            if c.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.dim() });
            }
            c.check_hermitian()?;
        }
        let constants = constants.unwrap_or_else(|| vec![ExactReal::zero(); n]);
        if constants.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: constants.len() });
        }
        Ok(SystemSpec { n, coefficients, constants })
    }

    /// Constant coefficients `a_j = alpha_j`.
    pub fn constant(alphas: Vec<ExactReal>) -> Result<Self> {
        let n = alphas.len();
        Self::new(n, vec![TrigPoly::zero(n); n], Some(alphas))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[TrigPoly] {
        &self.coefficients
    }

    pub fn coefficient(&self, j: usize) -> Result<&TrigPoly> {
        self.coefficients.get(j).ok_or(Error::IndexOutOfRange { index: j, dim: self.n })
    }

    pub fn constants(&self) -> &[ExactReal] {
        &self.constants
    }

    /// The trig part of the mean `a_{j0}` (without the exact constant).
    pub fn trig_mean(&self, j: usize) -> Result<TrigPoly> {
        self.coefficient(j)?.mean_in_variable(j)
    }

    /// `a_{j0}` when it is constant, as an exact real.
    pub fn alpha(&self, j: usize) -> Result<Option<ExactReal>> {
        let m = self.trig_mean(j)?;
        if !m.is_constant() {
            return Ok(None);
        }
        Ok(Some(self.constants[j].shifted(&m.mean())))
    }

    /// All means, when every one of them is constant.
    pub fn alphas(&self) -> Option<Vec<ExactReal>> {
        (0..self.n).map(|j| self.alpha(j).ok().flatten()).collect()
    }

    /// `a_j` evaluated in floating point (constant included).
    pub fn eval_coefficient(&self, j: usize, t: &[f64]) -> Result<f64> {
        Ok(self.coefficient(j)?.eval(t)? + self.constants[j].to_f64())
    }

    /// Relabels `t`-coordinates: old coordinate `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: perm.len() });
        }
        let mut coeffs = vec![TrigPoly::zero(self.n); self.n];
        let mut consts = vec![ExactReal::zero(); self.n];
        for i in 0..self.n {
            coeffs[perm[i]] = self.coefficients[i].permuted(perm);
            consts[perm[i]] = self.constants[i].clone();
        }
        Self::new(self.n, coeffs, Some(consts))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let js: SystemJson = serde_json::from_str(s)?;
        let mut coeffs = Vec::with_capacity(js.coefficients.len());
        for terms in js.coefficients {
            let parsed = terms
                .into_iter()
                .map(|t| Ok((t.freq, CRational::new(parse_rational(&t.re)?, parse_rational(&t.im)?))))
                .collect::<Result<Vec<_>>>()?;
            if let Some((k, _)) = parsed.iter().find(|(k, _)| k.len() != js.n) {
                return Err(Error::DimensionMismatch { expected: js.n, got: k.len() });
            }
            coeffs.push(TrigPoly::from_terms(js.n, parsed)?);
        }
        Self::new(js.n, coeffs, js.constants)
    }

    pub fn to_json(&self) -> String {
        let coefficients = self
            .coefficients
            .iter()
            .map(|p| {
                p.terms()
                    .iter()
                    .map(|(k, c)| TermJson { freq: k.clone(), re: format_rational(&c.re), im: format_rational(&c.im) })
                    .collect()
            })
            .collect();
        let all_zero = self.constants.iter().all(|c| matches!(c, ExactReal::Rational(q) if q.is_zero()));
        let js = SystemJson {
            n: self.n,
            coefficients,
            constants: if all_zero { None } else { Some(self.constants.clone()) },
        };
        serde_json::to_string(&js).expect("system serializes")
    }

    /// Exact zero-frequency part of `a_j` (constant tag included when rational).
    pub fn rational_constant(&self, j: usize) -> Option<BigRational> {
        self.constants[j].as_rational().map(|c| c + self.coefficients[j].mean())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn parses_json() {
        let s = r#"{"n":2,"coefficients":[[],[{"freq":[1,0],"re":"1/2"},{"freq":[-1,0],"re":"1/2","im":"0"}]]}"#;
        let sys = SystemSpec::from_json(s).unwrap();
        assert_eq!(sys.coefficient(1).unwrap(), &TrigPoly::cos_t(2, 0));
        assert_eq!(sys.alpha(0).unwrap(), Some(ExactReal::zero()));
        let back = SystemSpec::from_json(&sys.to_json()).unwrap();
        assert_eq!(back, sys);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(SystemSpec::from_json("{").is_err());
        let half = r#"{"n":1,"coefficients":[[{"freq":[1],"re":"1"}]]}"#;
        assert!(matches!(SystemSpec::from_json(half), Err(Error::NotHermitian(_))));
        let dims = r#"{"n":2,"coefficients":[[]]}"#;
        assert!(matches!(SystemSpec::from_json(dims), Err(Error::DimensionMismatch { .. })));
        let freq = r#"{"n":1,"coefficients":[[{"freq":[1,0],"re":"1"}]]}"#;
        assert!(SystemSpec::from_json(freq).is_err());
    }

    #[test]
    fn constants_shift_means() {
        let s = r#"{"n":1,"coefficients":[[{"freq":[0],"re":"1"}]],"constants":[{"tag":"quad","a":"0","b":"1","d":2}]}"#;
        let sys = SystemSpec::from_json(s).unwrap();
        let a = sys.alpha(0).unwrap().unwrap();
        assert_eq!(a, ExactReal::quadratic(int(1), int(1), 2).unwrap());
        assert!((sys.eval_coefficient(0, &[0.4]).unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-15);
        let back = SystemSpec::from_json(&sys.to_json()).unwrap();
        assert_eq!(back, sys);
    }

    #[test]
    fn nonconstant_mean_has_no_alpha() {
        let sys = SystemSpec::new(2, vec![TrigPoly::cos_t(2, 1), TrigPoly::zero(2)], None).unwrap();
        assert_eq!(sys.alpha(0).unwrap(), None);
        assert_eq!(sys.alphas(), None);
        assert_eq!(sys.rational_constant(1), Some(rat(0, 1)));
    }
}
