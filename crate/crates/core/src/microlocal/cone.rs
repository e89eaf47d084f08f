//! Circular frequency cones, cone Sobolev norms and cone-restricted decay.

use serde::{Deserialize, Serialize};

use super::symbol::FourierField;
use crate::error::{Error, Result};
use crate::solver::{decay_from_samples, DecayReport, Sample};
use crate::spectral::grid::{pairwise_sum, tau_of};
use crate::weights;

/// `{xi != 0 : angle(xi, axis) < aperture}`, optionally minus a ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub axis: Vec<f64>,
    pub aperture: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded_radius: Option<f64>,
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}

impl Cone {
    pub fn new(axis: Vec<f64>, aperture: f64) -> Result<Self> {
        let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if axis.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidInput("cone axis must be a nonzero vector".into()));
        }
        if !(aperture > 0.0 && aperture < std::f64::consts::PI) {
            return Err(Error::InvalidInput(format!("aperture {aperture} outside (0, pi)")));
        }
        Ok(Cone { axis: axis.iter().map(|x| x / norm).collect(), aperture, excluded_radius: None })
    }

    pub fn with_excluded_radius(mut self, r: f64) -> Self {
        self.excluded_radius = Some(r);
        self
    }

    pub fn dim(&self) -> usize {
        self.axis.len()
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r == 0.0 || self.excluded_radius.is_some_and(|e| r <= e) {
            return false;
        }
        angle(xi, &self.axis) < self.aperture
    }

    pub fn contains_lattice(&self, xi: &[i64]) -> bool {
        self.contains(&xi.iter().map(|&x| x as f64).collect::<Vec<_>>())
    }

    /// `self ⋐ other`: the closed cone lies inside the open one.
    pub fn is_compact_subcone_of(&self, other: &Cone) -> bool {
        self.dim() == other.dim() && angle(&self.axis, &other.axis) + self.aperture < other.aperture
    }
}

/// `(sum_{xi in cone} (1 + |xi|)^{2s} |u^(xi)|^2)^{1/2}` over the field's box.
pub fn cone_sobolev_norm(u: &FourierField, s: f64, cone: &Cone) -> f64 {
    let terms: Vec<f64> = u
        .coeffs
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let xi = tau_of(i, u.n, u.t_window);
            cone.contains_lattice(&xi).then(|| (1.0 + weights::norm(&xi)).powf(2.0 * s) * c.norm_sqr())
        })
        .collect();
    pairwise_sum(&terms).sqrt()
}

/// Largest radius whose dyadic bands fit a box of half-width `window`.
pub(crate) fn band_radius(window: usize) -> f64 {
    let bits = usize::BITS - (window + 1).leading_zeros();
    (1u64 << (bits - 1)) as f64
}

/// Decay of `|u^(xi)|` over the lattice points of the cone inside the ball
/// of radius [`band_radius`]; points with zero coefficient count as zeros.
pub fn cone_decay(u: &FourierField, cone: &Cone, threshold: f64) -> Result<DecayReport> {
    if cone.dim() != u.n {
        return Err(Error::DimensionMismatch { expected: u.n, got: cone.dim() });
    }
    let r = band_radius(u.t_window);
    let samples: Vec<Sample> = u
        .coeffs
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let xi = tau_of(i, u.n, u.t_window);
            let norm = weights::norm(&xi);
            (norm < r && cone.contains_lattice(&xi)).then(|| Sample::new(norm, c.norm()))
        })
        .collect();
    decay_from_samples(&samples, None, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TBlock;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn membership_and_subcones() {
        let g = Cone::new(vec![1.0, 0.0], PI / 4.0).unwrap();
        assert!(g.contains_lattice(&[5, 1]));
        assert!(!g.contains_lattice(&[1, 1]));
        assert!(!g.contains_lattice(&[0, 0]));
        assert!(!g.clone().with_excluded_radius(6.0).contains_lattice(&[5, 1]));
        let inner = Cone::new(vec![1.0, 0.1], PI / 8.0).unwrap();
        assert!(inner.is_compact_subcone_of(&g));
        assert!(!g.is_compact_subcone_of(&inner));
        assert!(!Cone::new(vec![1.0, 0.0], PI / 4.0).unwrap().is_compact_subcone_of(&g));
        assert!(Cone::new(vec![0.0, 0.0], 1.0).is_err());
        assert!(Cone::new(vec![1.0], PI).is_err());
    }

    #[test]
    fn single_mode_norms() {
        let g = Cone::new(vec![1.0, 1.0], PI / 6.0).unwrap();
        let mut u = TBlock::zeros(2, 8);
        u.set(&[3, 4], Complex64::new(1.0, 0.0)).unwrap();
        // (3, 4) is within 8.2 degrees of the diagonal
        assert!((cone_sobolev_norm(&u, 1.5, &g) - 6f64.powf(1.5)).abs() < 1e-12);
        let away = Cone::new(vec![-1.0, 1.0], PI / 6.0).unwrap();
        assert_eq!(cone_sobolev_norm(&u, 1.5, &away), 0.0);
    }

    #[test]
    fn parseval_restriction() {
        let g = Cone::new(vec![0.0, 1.0], PI / 3.0).unwrap();
        let mut u = TBlock::zeros(2, 6);
        for (i, c) in u.coeffs.iter_mut().enumerate() {
            *c = Complex64::new((i % 7) as f64 - 3.0, (i % 5) as f64);
        }
        let direct: f64 = u
            .coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| g.contains_lattice(&tau_of(*i, 2, 6)))
            .map(|(_, c)| c.norm_sqr())
            .sum();
        assert!((cone_sobolev_norm(&u, 0.0, &g) - direct.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cone_decay_sees_only_the_cone() {
        // power law along the first axis, flat along the second
        let mut u = TBlock::zeros(2, 64);
        for k in 1..=64i64 {
            u.set(&[k, 0], Complex64::new((1.0 + k as f64).powi(-4), 0.0)).unwrap();
            u.set(&[0, k], Complex64::new(1.0, 0.0)).unwrap();
        }
        let e0 = Cone::new(vec![1.0, 0.0], PI / 8.0).unwrap();
        let e1 = Cone::new(vec![0.0, 1.0], PI / 8.0).unwrap();
        let r0 = cone_decay(&u, &e0, 3.0).unwrap();
        assert!((r0.k_hat - 4.0).abs() < 0.1 && r0.is_rapid(), "{:?}", r0);
        assert!(!cone_decay(&u, &e1, 3.0).unwrap().is_rapid());
        assert_eq!(band_radius(64), 64.0);
        assert_eq!(band_radius(63), 64.0);
        assert_eq!(band_radius(62), 32.0);
    }
}
