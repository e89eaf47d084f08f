//! Singular directions, directional ellipticity and the numerical forms of
//! the microlocal inclusion and elliptic-regularity statements.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cone::{band_radius, cone_decay, Cone};
use super::symbol::{apply_symbol, band_of, band_slope, DiscreteSymbol, FourierField, SymbolSpec};
use crate::coeffs::SystemSpec;
use crate::error::{Error, Result};
use crate::solver::{decay_from_samples, DecayReport, Sample};
use crate::spectral::grid::{index_of, tau_of};
use crate::spectral::{apply_sum_of_squares, PartialFourierField, TBlock};
use crate::weights;

/// Default decay threshold for rapid-decay checks.
pub const DEFAULT_K_MAX: f64 = 8.0;

/// Slack on fitted exponent comparisons.
pub const FIT_SLACK: f64 = 0.5;

/// Full Fourier coefficients of `u` on `T^{n+1}`, coordinates `(tau, xi)`,
/// in a box of half-width `max(T, W)`.
pub fn full_fourier(u: &PartialFourierField) -> FourierField {
    let n = u.n();
    let w = u.t_window().max(u.xi_window() as usize);
    let mut out = TBlock::zeros(n + 1, w);
    for (tau, xi, v) in u.entries() {
        let mut k = tau;
        k.push(xi);
        if let Some(i) = index_of(&k, w) {
            out.coeffs[i] = v;
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirectionRow {
    pub axis: Vec<f64>,
    pub k_hat: f64,
    pub rapid: bool,
    pub report: DecayReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularDirectionReport {
    pub fan_resolution: usize,
    pub aperture: f64,
    pub k_max: f64,
    pub rows: Vec<DirectionRow>,
    /// Axes of the cones where decay fails.
    pub singular: Vec<Vec<f64>>,
}

/// Fan of circular cones covering the sphere (`N <= 2`).
pub fn fan(n: usize, resolution: usize) -> Result<Vec<Cone>> {
    match n {
        1 => Ok(vec![Cone::new(vec![1.0], 1.0)?, Cone::new(vec![-1.0], 1.0)?]),
        2 => {
            if resolution < 3 {
                return Err(Error::InvalidInput("fan resolution must be at least 3".into()));
            }
            let step = 2.0 * std::f64::consts::PI / resolution as f64;
            // adjacent cones overlap slightly so the fan covers every direction
            let aperture = 0.51 * step;
            (0..resolution).map(|i| Cone::new(vec![(i as f64 * step).cos(), (i as f64 * step).sin()], aperture)).collect()
        }
        _ => Err(Error::InvalidInput(format!("direction fans are implemented for N <= 2, got N = {n}"))),
    }
}

/// Cone-restricted decay over a fan; directions failing `RapidDecay(k_max)`
/// form the estimated singular set.
pub fn singular_directions(u: &FourierField, fan_resolution: usize, k_max: f64) -> Result<SingularDirectionReport> {
    if u.t_window < 32 {
        return Err(Error::InsufficientBands(band_radius(u.t_window).log2() as usize));
    }
    let cones = fan(u.n, fan_resolution)?;
    let aperture = cones[0].aperture;
    let rows = cones
        .par_iter()
        .map(|c| {
            let report = cone_decay(u, c, k_max)?;
            Ok(DirectionRow { axis: c.axis.clone(), k_hat: report.k_hat, rapid: report.is_rapid(), report })
        })
        .collect::<Result<Vec<_>>>()?;
    let singular = rows.iter().filter(|r| !r.rapid).map(|r| r.axis.clone()).collect();
    Ok(SingularDirectionReport { fan_resolution, aperture, k_max, rows, singular })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EllipticReport {
    pub elliptic: bool,
    /// `min |a(x, xi)| / (1 + |xi|)^m` over the cone points with `|xi| >= r`.
    pub constant: f64,
    /// The same minimum over the outermost band.
    pub asymptotic_constant: f64,
    /// Slope of the band minima of that ratio.
    pub slope: f64,
    /// Verdict for `a` plus an order `m - 1` perturbation, from the radius
    /// where the perturbation is dominated (`None` if beyond the window).
    pub perturbed_elliptic: Option<bool>,
    pub perturbed_radius: f64,
}

fn ellipticity(a: &DiscreteSymbol, cone: &Cone, r: f64) -> (f64, f64, f64) {
    let nxi = (2 * a.window + 1).pow(a.n as u32);
    let nx = a.x_grid.pow(a.n as u32);
    let n_bands = (usize::BITS - (a.window + 1).leading_zeros()) as usize;
    let mut band_min = vec![f64::INFINITY; n_bands];
    let mut c = f64::INFINITY;
    for k in 0..nxi {
        let xi = tau_of(k, a.n, a.window);
        let norm = weights::norm(&xi);
        if norm < r.max(1.0) || !cone.contains_lattice(&xi) {
            continue;
        }
        let Some(b) = band_of(norm, a.window) else { continue };
        let w = (1.0 + norm).powf(a.order);
        let m = (0..nx).map(|x| a.values[x * nxi + k].norm()).fold(f64::INFINITY, f64::min) / w;
        c = c.min(m);
        band_min[b] = band_min[b].min(m);
    }
    let populated: Vec<f64> = band_min.iter().copied().filter(|v| v.is_finite()).collect();
    let asymptotic = populated.last().copied().unwrap_or(0.0);
    let slope = if populated.contains(&0.0) {
        f64::NEG_INFINITY
    } else {
        band_slope(&band_min.iter().map(|&v| if v.is_finite() { v } else { 0.0 }).collect::<Vec<_>>())
    };
    (if c.is_finite() { c } else { 0.0 }, asymptotic, slope)
}

/// Directional ellipticity of order `m` on the cone beyond radius `r`, with
/// the stability check under an order `m - 1` perturbation.
pub fn elliptic_in_direction(a: &DiscreteSymbol, xi0: &[f64], cone: &Cone, r: f64) -> Result<EllipticReport> {
    if !cone.contains(xi0) {
        return Err(Error::InvalidInput("the direction must lie in the cone".into()));
    }
    if cone.dim() != a.n {
        return Err(Error::DimensionMismatch { expected: a.n, got: cone.dim() });
    }
    let (constant, asymptotic_constant, slope) = ellipticity(a, cone, r);
    let elliptic = constant > 0.0 && slope >= -FIT_SLACK;

    // p = (1 + |xi|^2)^{(m-1)/2} (1 + cos(x_0) / 2) e^{0.3 i}, |p| <= 1.5 (1 + |xi|)^{m-1}
    let m1 = a.order - 1.0;
    let p = DiscreteSymbol::tabulate(a.n, m1, a.window, a.x_grid.max(4), |x, xi| {
        SymbolSpec::Bessel { order: m1 }.eval(x, xi) * (1.0 + 0.5 * x[0].cos()) * Complex64::from_polar(1.0, 0.3)
    })?;
    let mut b = a.add(&p)?;
    b.order = a.order;
    let perturbed_radius = if elliptic { r.max(2.0 * 1.5 / constant) } else { r };
    let perturbed_elliptic = (perturbed_radius < a.window as f64 / 2.0).then(|| {
        let (c, _, s) = ellipticity(&b, cone, perturbed_radius);
        c > 0.0 && s >= -FIT_SLACK
    });
    Ok(EllipticReport { elliptic, constant, asymptotic_constant, slope, perturbed_elliptic, perturbed_radius })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InclusionReport {
    pub order: f64,
    pub vanishing_on_cone: bool,
    pub input: DecayReport,
    pub output: DecayReport,
    /// Exponent the output must reach.
    pub required: f64,
}

/// Largest exponent a fit over these bands can resolve: a tail vanishing
/// first at the top band. Larger fitted exponents all mean "faster than the
/// window can see".
pub fn resolution_exponent(r: &DecayReport) -> f64 {
    let top = r.bands.last().map_or(1.0, |b| b.ln_lo);
    -crate::solver::decay::VANISH_FLOOR.ln() / top
}

/// Offending band: the one where the output sits furthest above the line
/// `ln c - required ln(1 + 2^m)`.
fn offending_band(out: &DecayReport, required: f64) -> u32 {
    out.bands
        .iter()
        .filter_map(|b| b.ln_sup.map(|v| (b.index, v + required * b.ln_lo)))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .map_or(0, |b| b.0)
}

/// Measures the decay of `a(x, D) u` on `inner ⋐ outer` against the decay of
/// `u` on `outer`. When `a` vanishes on `outer`, the output must decay rapidly
/// whatever `u` is.
pub fn verify_microlocal_inclusion(a: &DiscreteSymbol, u: &FourierField, outer: &Cone, inner: &Cone) -> Result<InclusionReport> {
    if !inner.is_compact_subcone_of(outer) {
        return Err(Error::InvalidInput("the inner cone must be compactly contained in the outer one".into()));
    }
    let vanishing = a.vanishes_on(|xi| outer.contains_lattice(xi));
    let input = cone_decay(u, outer, DEFAULT_K_MAX)?;
    if !vanishing && !input.is_rapid() {
        return Err(Error::HypothesisFailed(format!("input does not decay rapidly in the outer cone (k_hat = {:.2})", input.k_hat)));
    }
    let v = apply_symbol(a, u)?;
    let output = cone_decay(&v, inner, DEFAULT_K_MAX)?;
    let required = if vanishing {
        DEFAULT_K_MAX
    } else {
        input.k_hat.min(resolution_exponent(&output)) - a.order.max(0.0) - FIT_SLACK
    };
    // rapid input must give rapid output; finite exponents drop by at most m
    let ok = output.k_hat >= required && (!input.is_rapid() || output.is_rapid());
    if !ok {
        return Err(Error::AssertionFailure(format!(
            "output exponent {:.3} below {required:.3} (band {})",
            output.k_hat,
            offending_band(&output, required)
        )));
    }
    Ok(InclusionReport { order: a.order, vanishing_on_cone: vanishing, input, output, required })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GainReport {
    pub order: f64,
    /// Exponent of `a(x, D) u` on the outer cone.
    pub data_exponent: f64,
    /// Exponent of `u` on the inner cone.
    pub solution_exponent: f64,
    pub gain: f64,
    pub holds: bool,
    pub data_rapid: bool,
    pub solution_rapid: bool,
}

/// Regularity gain for a symbol elliptic on `outer`: `u` must decay on
/// `inner` at least `m - 0.5` faster than `a(x, D) u` does on `outer`, and
/// rapidly whenever the data do.
pub fn regularity_gain(a: &DiscreteSymbol, u: &FourierField, outer: &Cone, inner: &Cone) -> Result<GainReport> {
    if !inner.is_compact_subcone_of(outer) {
        return Err(Error::InvalidInput("the inner cone must be compactly contained in the outer one".into()));
    }
    let e = elliptic_in_direction(a, &outer.axis, outer, 1.0)?;
    if !e.elliptic {
        return Err(Error::HypothesisFailed("symbol is not elliptic on the outer cone".into()));
    }
    let f = apply_symbol(a, u)?;
    let fd = cone_decay(&f, outer, DEFAULT_K_MAX)?;
    let ud = cone_decay(u, inner, DEFAULT_K_MAX)?;
    let gain = ud.k_hat - fd.k_hat;
    let holds = if fd.is_rapid() { ud.is_rapid() } else { gain >= a.order - FIT_SLACK };
    Ok(GainReport {
        order: a.order,
        data_exponent: fd.k_hat,
        solution_exponent: ud.k_hat,
        gain,
        holds,
        data_rapid: fd.is_rapid(),
        solution_rapid: ud.is_rapid(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeAttempt {
    pub c: f64,
    pub u_rapid: bool,
    pub pu_rapid: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TConeReport {
    pub c: f64,
    pub u_decay: DecayReport,
    pub pu_decay: DecayReport,
    pub attempts: Vec<ConeAttempt>,
}

fn t_cone_samples(u: &PartialFourierField, c: f64, radius: f64) -> Vec<Sample> {
    let n = u.n();
    let t = u.t_window();
    let w = u.xi_window();
    let side = 2 * t + 1;
    let mut out = Vec::new();
    for xi in -w..=w {
        let block = u.block(xi);
        for i in 0..side.pow(n as u32) {
            let tau = tau_of(i, n, t);
            let tn = weights::norm(&tau);
            if (xi.abs() as f64) > c * tn || tn == 0.0 {
                continue;
            }
            let norm = (tn * tn + (xi * xi) as f64).sqrt();
            if norm >= radius {
                continue;
            }
            let v = block.map_or(0.0, |b| b.coeffs[i].norm());
            out.push(Sample::new(norm, v));
        }
    }
    out
}

/// Largest dyadic `c <= 1` such that `u` and `P u` both decay rapidly on the
/// region `|xi| <= c |tau|` of the full Fourier lattice.
pub fn t_elliptic_cone_decay(sys: &SystemSpec, u: &PartialFourierField, k_max: f64) -> Result<TConeReport> {
    let pu = apply_sum_of_squares(u, sys)?;
    let side = u.t_window().min(u.xi_window() as usize);
    let radius = band_radius(side);
    let mut attempts = Vec::new();
    let mut c = 1.0;
    while c >= 1.0 / side as f64 {
        let ud = decay_from_samples(&t_cone_samples(u, c, radius), None, k_max)?;
        let pd = decay_from_samples(&t_cone_samples(&pu, c, radius), None, k_max)?;
        attempts.push(ConeAttempt { c, u_rapid: ud.is_rapid(), pu_rapid: pd.is_rapid() });
        if ud.is_rapid() && pd.is_rapid() {
            return Ok(TConeReport { c, u_decay: ud, pu_decay: pd, attempts });
        }
        c /= 2.0;
    }
    Err(Error::NoConeFound(side as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::{liouville_tuple, ExactReal};
    use crate::microlocal::symbol::restrict_classical_symbol;
    use crate::microlocal::cone_sobolev_norm;
    use crate::solver::build_counterexample;
    use crate::spectral::{synthesize, ModeSpec};
    use std::f64::consts::PI;

    fn radial(n: usize, w: usize, f: impl Fn(f64) -> f64) -> FourierField {
        let mut u = TBlock::zeros(n, w);
        for (i, c) in u.coeffs.iter_mut().enumerate() {
            let xi = tau_of(i, n, w);
            let ph = xi.iter().enumerate().map(|(k, &x)| (k + 1) as f64 * x as f64).sum::<f64>();
            *c = Complex64::from_polar(f(weights::norm(&xi)), ph);
        }
        u
    }

    #[test]
    fn smooth_field_has_no_singular_directions() {
        let u = radial(2, 64, |r| (-r * r / 10.0).exp());
        let rep = singular_directions(&u, 8, 8.0).unwrap();
        assert!(rep.singular.is_empty(), "{:?}", rep.rows.iter().map(|r| r.k_hat).collect::<Vec<_>>());
        assert!(matches!(singular_directions(&radial(2, 16, |_| 1.0), 8, 8.0), Err(Error::InsufficientBands(_))));
    }

    #[test]
    fn flat_line_mass_on_first_axis() {
        let mut u = TBlock::zeros(2, 64);
        for k in -64i64..=64 {
            if k != 0 {
                u.set(&[k, 0], Complex64::new(1.0, 0.0)).unwrap();
            }
        }
        let rep = singular_directions(&u, 8, 8.0).unwrap();
        let mut s = rep.singular.clone();
        s.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(s.len(), 2);
        assert!((s[0][0] + 1.0).abs() < 1e-12 && (s[1][0] - 1.0).abs() < 1e-12);
        let one_d = singular_directions(&radial(1, 64, |_| 1.0), 8, 8.0).unwrap();
        assert_eq!(one_d.singular.len(), 2);
    }

    #[test]
    fn counterexample_singular_along_witness_direction() {
        let (alphas, w) = liouville_tuple(1, 2, 3).unwrap();
        let sys = SystemSpec::constant(alphas).unwrap();
        let ce = build_counterexample(&w, &sys, 3).unwrap();
        let u = full_fourier(&ce.field(128, 128).unwrap());
        let rep = singular_directions(&u, 8, 8.0).unwrap();
        // witness modes (-3, 4) and (-49, 64) point at about 127 degrees
        assert_eq!(rep.singular.len(), 1, "{:?}", rep.singular);
        let ax = &rep.singular[0];
        assert!((ax[1].atan2(ax[0]) - 0.75 * PI).abs() < 1e-12);
    }

    #[test]
    fn laplacian_and_axis_square_ellipticity() {
        let lap = restrict_classical_symbol(&SymbolSpec::Laplacian, 2, 64).unwrap();
        let g = Cone::new(vec![1.0, 1.0], PI / 6.0).unwrap();
        let r = elliptic_in_direction(&lap, &[1.0, 1.0], &g, 1.0).unwrap();
        assert!(r.elliptic && r.perturbed_elliptic == Some(true));
        assert!(r.asymptotic_constant > 0.9 && r.asymptotic_constant <= 1.0, "{}", r.asymptotic_constant);

        let tau2 = restrict_classical_symbol(&SymbolSpec::AxisSquare { axis: 0 }, 2, 64).unwrap();
        let along = Cone::new(vec![1.0, 0.0], PI / 6.0).unwrap();
        let r = elliptic_in_direction(&tau2, &[1.0, 0.0], &along, 1.0).unwrap();
        assert!(r.elliptic && r.perturbed_elliptic == Some(true), "{r:?}");
        let across = Cone::new(vec![0.0, 1.0], PI / 6.0).unwrap();
        let r = elliptic_in_direction(&tau2, &[0.0, 1.0], &across, 1.0).unwrap();
        assert!(!r.elliptic && r.perturbed_elliptic == Some(false), "{r:?}");
        assert!(elliptic_in_direction(&tau2, &[0.0, 1.0], &along, 1.0).is_err());
    }

    #[test]
    fn inclusion_identity_and_vanishing_symbol() {
        let outer = Cone::new(vec![1.0, 0.0], PI / 4.0).unwrap();
        let inner = Cone::new(vec![1.0, 0.0], PI / 8.0).unwrap();
        // smooth inside the outer cone, flat elsewhere
        let u = {
            let mut u = radial(2, 64, |_| 1.0);
            for (i, c) in u.coeffs.iter_mut().enumerate() {
                let xi = tau_of(i, 2, 64);
                if outer.contains_lattice(&xi) {
                    *c *= (-weights::norm(&xi).powi(2) / 10.0).exp();
                }
            }
            u
        };
        let id = restrict_classical_symbol(&SymbolSpec::Identity, 2, 64).unwrap();
        let r = verify_microlocal_inclusion(&id, &u, &outer, &inner).unwrap();
        assert!(!r.vanishing_on_cone && r.output.is_rapid());

        // cutoff around -e_0 vanishes on the outer cone; input rough everywhere
        let rough = radial(2, 64, |_| 1.0);
        let cut = restrict_classical_symbol(&SymbolSpec::ConeCutoff { axis: vec![-1.0, 0.0], aperture: PI / 2.0 }, 2, 64).unwrap();
        let r = verify_microlocal_inclusion(&cut, &rough, &outer, &inner).unwrap();
        assert!(r.vanishing_on_cone && r.output.is_rapid());
        assert!(matches!(verify_microlocal_inclusion(&id, &rough, &outer, &inner), Err(Error::HypothesisFailed(_))));
        assert!(verify_microlocal_inclusion(&id, &u, &inner, &outer).is_err());
    }

    #[test]
    fn order_two_symbol_drops_at_most_two() {
        let outer = Cone::new(vec![0.0, 1.0], PI / 4.0).unwrap();
        let inner = Cone::new(vec![0.0, 1.0], PI / 8.0).unwrap();
        let u = radial(2, 64, |r| (1.0 + r).powi(-12));
        let lap = restrict_classical_symbol(&SymbolSpec::Laplacian, 2, 64).unwrap();
        let r = verify_microlocal_inclusion(&lap, &u, &outer, &inner).unwrap();
        assert!(r.input.k_hat - r.output.k_hat <= 2.5, "{} -> {}", r.input.k_hat, r.output.k_hat);
    }

    #[test]
    fn elliptic_gain_orders_one_and_two() {
        let outer = Cone::new(vec![1.0, 0.0], PI / 4.0).unwrap();
        let inner = Cone::new(vec![1.0, 0.0], PI / 8.0).unwrap();
        let u = radial(2, 64, |r| (1.0 + r).powi(-4));
        for spec in [SymbolSpec::Bessel { order: 1.0 }, SymbolSpec::Bessel { order: 2.0 }, SymbolSpec::AxisSquare { axis: 0 }] {
            let a = restrict_classical_symbol(&spec, 2, 64).unwrap();
            let g = regularity_gain(&a, &u, &outer, &inner).unwrap();
            assert!(g.holds, "{spec:?}: {g:?}");
        }
        // rapid data force rapid solutions
        let smooth = radial(2, 64, |r| (-r * r / 10.0).exp());
        let a = restrict_classical_symbol(&SymbolSpec::Laplacian, 2, 64).unwrap();
        let g = regularity_gain(&a, &smooth, &outer, &inner).unwrap();
        assert!(g.data_rapid && g.solution_rapid && g.holds);
    }

    #[test]
    fn cone_norms_match_singular_set() {
        // mass on the e_0 axis only: cone norms around e_1 vanish for every s
        let mut u = TBlock::zeros(2, 64);
        for k in 1..=64i64 {
            u.set(&[k, 0], Complex64::new(1.0, 0.0)).unwrap();
        }
        let rep = singular_directions(&u, 8, 8.0).unwrap();
        for row in &rep.rows {
            let c = Cone::new(row.axis.clone(), rep.aperture * 0.9).unwrap();
            let finite_all = (0..=6).all(|s| cone_sobolev_norm(&u, s as f64, &c) == 0.0);
            assert_eq!(finite_all, row.rapid, "{:?}", row.axis);
        }
    }

    fn t_field(n: usize, w: i64, f: impl Fn(&[i64], i64) -> f64) -> PartialFourierField {
        let t = w as usize;
        let mut modes = Vec::new();
        let side = 2 * t + 1;
        for xi in -w..=w {
            for i in 0..side.pow(n as u32) {
                let tau = tau_of(i, n, t);
                let v = f(&tau, xi);
                if v != 0.0 {
                    modes.push(ModeSpec::plain(tau, xi, Complex64::new(v, 0.0)));
                }
            }
        }
        synthesize(n, w, t, &modes).unwrap()
    }

    #[test]
    fn t_cone_smooth_counterexample_and_failure() {
        let sys = SystemSpec::constant(vec![ExactReal::sqrt(2).unwrap()]).unwrap();
        let smooth = t_field(1, 32, |tau, xi| (-((tau[0] * tau[0] + xi * xi) as f64) / 4.0).exp());
        assert_eq!(t_elliptic_cone_decay(&sys, &smooth, 8.0).unwrap().c, 1.0);

        let (alphas, w) = liouville_tuple(1, 2, 3).unwrap();
        let lsys = SystemSpec::constant(alphas).unwrap();
        let ce = build_counterexample(&w, &lsys, 3).unwrap();
        let r = t_elliptic_cone_decay(&lsys, &ce.field(64, 64).unwrap(), 8.0).unwrap();
        assert!(r.c >= 0.125 && r.u_decay.is_rapid());

        let axis = t_field(1, 32, |tau, xi| if xi == 0 && tau[0] != 0 { 1.0 } else { 0.0 });
        assert!(matches!(t_elliptic_cone_decay(&sys, &axis, 8.0), Err(Error::NoConeFound(32))));
    }
}
