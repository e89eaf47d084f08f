//! Discrete symbols `a(x, xi)` on `T^N x Z^N`: tabulation, the measured
//! seminorm check, operator application and the `x`-Fourier decay constants.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::grid::{self, block_len, index_of, tau_of};
use crate::spectral::TBlock;
use crate::weights;

/// Full Fourier coefficients on `T^N` over the box `|xi|_inf <= window`
/// (`t_window` is the box half-width).
pub type FourierField = TBlock;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest accepted slope of a seminorm ratio against `ln(1 + |xi|)`.
pub const SEMINORM_SLOPE_TOLERANCE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seminorm {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub constant: f64,
}

/// Values on a uniform `x`-grid of `x_grid` points per axis times the
/// `xi`-box of half-width `window`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSymbol {
    pub n: usize,
    pub order: f64,
    pub window: usize,
    pub x_grid: usize,
    /// `values[x_index * (2 window + 1)^N + xi_index]`.
    pub values: Vec<Complex64>,
    pub declared_seminorms: Option<Vec<Seminorm>>,
}

/// Multi-indices with `|alpha| <= max` in `n` variables, by increasing order.
pub fn multi_indices_up_to(n: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for order in 0..=max {
        exact_order(n, order, &mut vec![], &mut out);
    }
    out
}

fn exact_order(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if cur.len() == n {
        if left == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for a in (0..=left).rev() {
        cur.push(a);
        exact_order(n, left - a, cur, out);
        cur.pop();
    }
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Dyadic band of `|xi|_2 >= 1`, kept only when the band fits the box.
pub(crate) fn band_of(norm: f64, window: usize) -> Option<usize> {
    if norm < 1.0 {
        return None;
    }
    let b = norm.log2().floor() as usize;
    (((1usize << (b + 1)) - 1) <= window).then_some(b)
}

/// Least-squares slope of `ln y` against `ln(1 + 2^band)` over positive entries.
pub(crate) fn band_slope(maxima: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = maxima
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|(b, &v)| (2f64.powi(b as i32).ln_1p(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return 0.0;
    }
    crate::diophantine::approx::ls_slope(&pts).map_or(0.0, |(s, _)| s)
}

/// [`band_slope`] over the upper half of the bands (at least three), where
/// bounded ratios have settled.
pub(crate) fn asymptotic_slope(maxima: &[f64]) -> f64 {
    let skip = (maxima.len() / 2).min(maxima.len().saturating_sub(3));
    let tail: Vec<f64> = maxima.iter().enumerate().map(|(b, &v)| if b < skip { 0.0 } else { v }).collect();
    band_slope(&tail)
}

impl DiscreteSymbol {
    pub fn tabulate(
        n: usize,
        order: f64,
        window: usize,
        x_grid: usize,
        f: impl Fn(&[f64], &[i64]) -> Complex64,
    ) -> Result<Self> {
        if n == 0 || x_grid == 0 {
            return Err(Error::InvalidInput("symbol needs N >= 1 and a nonempty x-grid".into()));
        }
        let nxi = block_len(n, window);
        let nx = x_grid.pow(n as u32);
        let mut values = Vec::with_capacity(nx * nxi);
        for xi_idx in 0..nx {
            let x = grid::grid_point(xi_idx, n, x_grid);
            for k in 0..nxi {
                values.push(f(&x, &tau_of(k, n, window)));
            }
        }
        Ok(DiscreteSymbol { n, order, window, x_grid, values, declared_seminorms: None })
    }

    fn nxi(&self) -> usize {
        block_len(self.n, self.window)
    }

    fn nx(&self) -> usize {
        self.x_grid.pow(self.n as u32)
    }

    /// Half-width of the `x`-frequencies resolved by the grid.
    pub fn x_bandwidth(&self) -> usize {
        (self.x_grid - 1) / 2
    }

    pub fn value(&self, x_index: usize, xi: &[i64]) -> Complex64 {
        index_of(xi, self.window).map_or(ZERO, |k| self.values[x_index * self.nxi() + k])
    }

    /// `x`-Fourier coefficients `a^(eta, xi)` for one `xi` index.
    fn x_coeffs_at(&self, k: usize) -> Vec<Complex64> {
        let col: Vec<Complex64> = (0..self.nx()).map(|x| self.values[x * self.nxi() + k]).collect();
        grid::analyze(&col, self.n, self.x_grid, self.x_bandwidth())
    }

    pub fn x_coefficients(&self) -> Vec<Vec<Complex64>> {
        (0..self.nxi()).map(|k| self.x_coeffs_at(k)).collect()
    }

    /// Re-tabulates on a finer `x`-grid by trigonometric interpolation.
    pub fn refined(&self, x_grid: usize) -> DiscreteSymbol {
        if x_grid <= self.x_grid {
            return self.clone();
        }
        let b = self.x_bandwidth();
        let nxi = self.nxi();
        let nx = x_grid.pow(self.n as u32);
        let mut values = vec![ZERO; nx * nxi];
        for k in 0..nxi {
            let v = grid::synthesize(&self.x_coeffs_at(k), self.n, b, x_grid);
            for (x, val) in v.into_iter().enumerate() {
                values[x * nxi + k] = val;
            }
        }
        DiscreteSymbol { x_grid, values, ..self.clone() }
    }

    /// Pointwise sum of two symbols on the finer of the two grids.
    pub fn add(&self, other: &DiscreteSymbol) -> Result<DiscreteSymbol> {
        if self.n != other.n || self.window != other.window {
            return Err(Error::DimensionMismatch { expected: self.window, got: other.window });
        }
        let m = self.x_grid.max(other.x_grid);
        let (a, b) = (self.refined(m), other.refined(m));
        let values = a.values.iter().zip(&b.values).map(|(p, q)| p + q).collect();
        Ok(DiscreteSymbol { order: self.order.max(other.order), values, declared_seminorms: None, ..a })
    }

    /// `x`-derivative `d_x^beta a` on the grid, laid out like `values`.
    fn x_derivative(&self, coeffs: &[Vec<Complex64>], beta: &[u32]) -> Vec<Complex64> {
        if beta.iter().all(|&b| b == 0) {
            return self.values.clone();
        }
        let b = self.x_bandwidth();
        let nxi = self.nxi();
        let mut out = vec![ZERO; self.values.len()];
        for (k, c) in coeffs.iter().enumerate() {
            let mut d = c.clone();
            for (i, v) in d.iter_mut().enumerate() {
                let eta = tau_of(i, self.n, b);
                for (e, &p) in eta.iter().zip(beta) {
                    *v *= Complex64::new(0.0, *e as f64).powu(p);
                }
            }
            for (x, val) in grid::synthesize(&d, self.n, b, self.x_grid).into_iter().enumerate() {
                out[x * nxi + k] = val;
            }
        }
        out
    }

    /// Measured seminorms for `|alpha|, |beta| <= 2` with forward differences
    /// in `xi`. A symbol is out of class when a ratio grows along the window
    /// (either against `(1 + |xi|)^{m - |alpha|}` or relative to `|a|` itself)
    /// or exceeds a declared constant.
    pub fn seminorm_check(&self) -> ClassReport {
        let n = self.n;
        let w = self.window as i64;
        let nxi = self.nxi();
        let nx = self.nx();
        let coeffs = self.x_coefficients();
        let betas = if self.x_bandwidth() == 0 { vec![vec![0; n]] } else { multi_indices_up_to(n, 2) };
        let n_bands = (self.window + 1).ilog2() as usize;
        let sup_x = |vals: &[Complex64], k: usize| (0..nx).map(|x| vals[x * nxi + k].norm()).fold(0.0, f64::max);
        let base_band: Vec<f64> = {
            let mut m = vec![0.0f64; n_bands];
            for k in 0..nxi {
                let xi = tau_of(k, n, self.window);
                if let Some(b) = band_of(weights::norm(&xi), self.window) {
                    m[b] = m[b].max(sup_x(&self.values, k));
                }
            }
            m
        };
        let mut rows = Vec::new();
        for beta in &betas {
            let d = self.x_derivative(&coeffs, beta);
            for alpha in multi_indices_up_to(n, 2) {
                let order_a: u32 = alpha.iter().sum();
                let subs: Vec<(Vec<i64>, f64)> = multi_indices_up_to(n, order_a)
                    .into_iter()
                    .filter(|g| g.iter().zip(&alpha).all(|(a, b)| a <= b))
                    .map(|g| {
                        let sign = if (order_a - g.iter().sum::<u32>()).is_multiple_of(2) { 1.0 } else { -1.0 };
                        let c: f64 = alpha.iter().zip(&g).map(|(&a, &b)| binom(a, b)).product();
                        (g.iter().map(|&x| x as i64).collect(), sign * c)
                    })
                    .collect();
                let mut constant = 0.0f64;
                let mut ratio_band = vec![0.0f64; n_bands];
                let mut diff_band = vec![0.0f64; n_bands];
                for k in 0..nxi {
                    let xi = tau_of(k, n, self.window);
                    if xi.iter().zip(&alpha).any(|(x, &a)| x + a as i64 > w) {
                        continue;
                    }
                    let mut sup = 0.0f64;
                    for x in 0..nx {
                        let mut acc = ZERO;
                        let mut scale = 0.0f64;
                        for (g, c) in &subs {
                            let shifted: Vec<i64> = xi.iter().zip(g).map(|(a, b)| a + b).collect();
                            let v = d[x * nxi + index_of(&shifted, self.window).expect("inside box")] * *c;
                            scale = scale.max(v.norm());
                            acc += v;
                        }
                        // cancellation down to rounding level counts as an exact zero
                        if acc.norm() > 1e-11 * scale {
                            sup = sup.max(acc.norm());
                        }
                    }
                    let norm = weights::norm(&xi);
                    let ratio = sup / (1.0 + norm).powf(self.order - order_a as f64);
                    constant = constant.max(ratio);
                    if let Some(b) = band_of(norm, self.window) {
                        ratio_band[b] = ratio_band[b].max(ratio);
                        diff_band[b] = diff_band[b].max(sup);
                    }
                }
                let growth_slope = asymptotic_slope(&ratio_band);
                let is_base = order_a == 0 && beta.iter().all(|&b| b == 0);
                let scale_slope = if is_base {
                    0.0
                } else {
                    let rel: Vec<f64> = diff_band
                        .iter()
                        .zip(&base_band)
                        .enumerate()
                        .map(|(b, (&dv, &av))| {
                            // an empty band borrows the next one, which the stencil reaches
                            let av = if av == 0.0 { base_band.get(b + 1).copied().unwrap_or(0.0) } else { av };
                            if dv == 0.0 {
                                0.0
                            } else if av == 0.0 {
                                f64::INFINITY
                            } else {
                                dv / av * (1.0 + 2f64.powi(b as i32)).powi(order_a as i32)
                            }
                        })
                        .collect();
                    if rel.iter().any(|v| v.is_infinite()) {
                        f64::INFINITY
                    } else {
                        asymptotic_slope(&rel)
                    }
                };
                rows.push(SeminormRow { alpha, beta: beta.clone(), constant, growth_slope, scale_slope });
            }
        }
        let mut reason = None;
        for r in &rows {
            if !r.constant.is_finite() {
                reason = Some(format!("non-finite seminorm at alpha {:?}, beta {:?}", r.alpha, r.beta));
            } else if r.growth_slope > SEMINORM_SLOPE_TOLERANCE {
                reason = Some(format!(
                    "alpha {:?}, beta {:?}: ratio to (1+|xi|)^(m-|alpha|) grows with slope {:.2}",
                    r.alpha, r.beta, r.growth_slope
                ));
            } else if r.scale_slope > SEMINORM_SLOPE_TOLERANCE {
                reason = Some(format!("alpha {:?}, beta {:?}: differences gain no decay (slope {:.2})", r.alpha, r.beta, r.scale_slope));
            }
            if reason.is_some() {
                break;
            }
        }
        if reason.is_none() {
            for s in self.declared_seminorms.iter().flatten() {
                if let Some(r) = rows.iter().find(|r| r.alpha == s.alpha && r.beta == s.beta) {
                    if r.constant > s.constant {
                        reason = Some(format!("alpha {:?}, beta {:?}: measured {:.3e} exceeds declared {:.3e}", r.alpha, r.beta, r.constant, s.constant));
                        break;
                    }
                }
            }
        }
        ClassReport { order: self.order, in_class: reason.is_none(), reason, rows }
    }

    /// `D_k = max |a^(eta, xi)| (1 + |eta|)^k / (1 + |xi|)^m` for `k <= k_max`.
    pub fn decay_constants(&self, k_max: u32) -> Vec<f64> {
        let b = self.x_bandwidth();
        let coeffs = self.x_coefficients();
        (0..=k_max)
            .map(|k| {
                let mut d = 0.0f64;
                for (ki, c) in coeffs.iter().enumerate() {
                    let xi = tau_of(ki, self.n, self.window);
                    let w = (1.0 + weights::norm(&xi)).powf(self.order);
                    for (i, v) in c.iter().enumerate() {
                        let eta = tau_of(i, self.n, b);
                        d = d.max(v.norm() * (1.0 + weights::norm(&eta)).powi(k as i32) / w);
                    }
                }
                d
            })
            .collect()
    }

    /// Whether `a(x, xi) = 0` for every `xi` satisfying `pred` and every grid `x`.
    pub fn vanishes_on(&self, pred: impl Fn(&[i64]) -> bool) -> bool {
        let nxi = self.nxi();
        (0..nxi).filter(|&k| pred(&tau_of(k, self.n, self.window))).all(|k| (0..self.nx()).all(|x| self.values[x * nxi + k] == ZERO))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormRow {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    /// `max |D^alpha_xi d^beta_x a| / (1 + |xi|)^{m - |alpha|}`.
    pub constant: f64,
    /// Growth of the band maxima of that ratio.
    pub growth_slope: f64,
    /// Growth of `(1 + |xi|)^{|alpha|} |D^alpha d^beta a| / |a|` per band.
    pub scale_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub order: f64,
    pub in_class: bool,
    pub reason: Option<String>,
    pub rows: Vec<SeminormRow>,
}

/// `a(x, D) u = sum_xi e^{i x xi} a(x, xi) u^(xi)`, computed exactly through
/// the `x`-Fourier coefficients of the symbol.
pub fn apply_symbol(a: &DiscreteSymbol, u: &FourierField) -> Result<FourierField> {
    if u.n != a.n {
        return Err(Error::DimensionMismatch { expected: a.n, got: u.n });
    }
    let b = a.x_bandwidth();
    let out_w = u.t_window + b;
    let mut out = TBlock::zeros(a.n, out_w);
    for (i, &v) in u.coeffs.iter().enumerate() {
        if v == ZERO {
            continue;
        }
        let xi = tau_of(i, u.n, u.t_window);
        let Some(k) = index_of(&xi, a.window) else {
            return Err(Error::WindowOverflow(format!("field frequency {xi:?} outside the symbol window {}", a.window)));
        };
        for (j, c) in a.x_coeffs_at(k).iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            let eta = tau_of(j, a.n, b);
            let zeta: Vec<i64> = xi.iter().zip(&eta).map(|(p, q)| p + q).collect();
            let idx = index_of(&zeta, out_w).expect("output window covers the shift");
            out.coeffs[idx] += c * v;
        }
    }
    Ok(out)
}

fn smooth_step(u: f64) -> f64 {
    let f = |v: f64| if v <= 0.0 { 0.0 } else { (-1.0 / v).exp() };
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        f(u) / (f(u) + f(1.0 - u))
    }
}

/// Closed-form symbols that can be tabulated by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SymbolSpec {
    Identity,
    /// `(1 + |xi|^2)^{m/2}`.
    Bessel { order: f64 },
    /// `|xi|^2`.
    Laplacian,
    /// `xi_axis^2`.
    AxisSquare { axis: usize },
    /// `i xi_axis`.
    Derivative { axis: usize },
    /// Smooth order-0 cutoff: 1 within half the aperture of `axis`, 0 outside
    /// the aperture and near the origin.
    ConeCutoff { axis: Vec<f64>, aperture: f64 },
    /// `e^{i x_axis}`.
    Modulation { axis: usize },
    /// `e^{|xi|}`, not a symbol of any finite order.
    Exponential,
}

impl SymbolSpec {
    pub fn order(&self) -> f64 {
        match self {
            SymbolSpec::Identity | SymbolSpec::ConeCutoff { .. } | SymbolSpec::Modulation { .. } => 0.0,
            SymbolSpec::Bessel { order } => *order,
            SymbolSpec::Laplacian | SymbolSpec::AxisSquare { .. } => 2.0,
            SymbolSpec::Derivative { .. } => 1.0,
            // nominal; the seminorm check rejects it at any order
            SymbolSpec::Exponential => 0.0,
        }
    }

    fn x_grid(&self) -> usize {
        match self {
            SymbolSpec::Modulation { .. } => 4,
            _ => 1,
        }
    }

    pub fn eval(&self, x: &[f64], xi: &[i64]) -> Complex64 {
        let r = weights::norm(xi);
        match self {
            SymbolSpec::Identity => Complex64::new(1.0, 0.0),
            SymbolSpec::Bessel { order } => Complex64::new((1.0 + r * r).powf(order / 2.0), 0.0),
            SymbolSpec::Laplacian => Complex64::new(r * r, 0.0),
            SymbolSpec::AxisSquare { axis } => Complex64::new((xi[*axis] * xi[*axis]) as f64, 0.0),
            SymbolSpec::Derivative { axis } => Complex64::new(0.0, xi[*axis] as f64),
            SymbolSpec::ConeCutoff { axis, aperture } => {
                if r == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let dot: f64 = axis.iter().zip(xi).map(|(a, &b)| a * b as f64).sum();
                let theta = (dot / r).clamp(-1.0, 1.0).acos();
                let half = aperture / 2.0;
                let ang = 1.0 - smooth_step((theta - half) / half);
                Complex64::new(ang * smooth_step(r - 1.0), 0.0)
            }
            SymbolSpec::Modulation { axis } => Complex64::from_polar(1.0, x[*axis]),
            SymbolSpec::Exponential => Complex64::new(r.exp(), 0.0),
        }
    }

    /// Parses catalogue names: `identity`, `bessel:<m>`, `laplacian`,
    /// `tau2`, `dx`, `cone-cutoff`, `exp-x`, `exp`.
    pub fn parse(name: &str, n: usize) -> Result<Self> {
        let mut e0 = vec![0.0; n];
        if n > 0 {
            e0[0] = 1.0;
        }
        Ok(match name {
            "identity" => SymbolSpec::Identity,
            "laplacian" => SymbolSpec::Laplacian,
            "tau2" => SymbolSpec::AxisSquare { axis: 0 },
            "dx" => SymbolSpec::Derivative { axis: 0 },
            "cone-cutoff" => SymbolSpec::ConeCutoff { axis: e0, aperture: std::f64::consts::FRAC_PI_2 },
            "exp-x" => SymbolSpec::Modulation { axis: 0 },
            "exp" => SymbolSpec::Exponential,
            other => match other.strip_prefix("bessel:") {
                Some(m) => SymbolSpec::Bessel { order: m.parse().map_err(|_| Error::InvalidInput(format!("bad bessel order `{m}`")))? },
                None => return Err(Error::InvalidInput(format!("unknown symbol `{other}`"))),
            },
        })
    }

    /// Tabulates on the natural `x`-grid of the symbol, without the class check.
    pub fn tabulate(&self, n: usize, window: usize) -> Result<DiscreteSymbol> {
        DiscreteSymbol::tabulate(n, self.order(), window, self.x_grid(), |x, xi| self.eval(x, xi))
    }

    /// The classical members used by the property suites.
    pub fn catalogue(n: usize) -> Vec<SymbolSpec> {
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        vec![
            SymbolSpec::Identity,
            SymbolSpec::Bessel { order: 1.0 },
            SymbolSpec::Bessel { order: 2.0 },
            SymbolSpec::Bessel { order: -1.0 },
            SymbolSpec::Laplacian,
            SymbolSpec::AxisSquare { axis: 0 },
            SymbolSpec::Derivative { axis: 0 },
            SymbolSpec::ConeCutoff { axis: e0, aperture: std::f64::consts::FRAC_PI_2 },
            SymbolSpec::Modulation { axis: 0 },
        ]
    }
}

/// Tabulates a catalogue symbol on the window and runs the seminorm check.
pub fn restrict_classical_symbol(spec: &SymbolSpec, n: usize, window: usize) -> Result<DiscreteSymbol> {
    let axis_ok = match spec {
        SymbolSpec::AxisSquare { axis } | SymbolSpec::Derivative { axis } | SymbolSpec::Modulation { axis } => *axis < n,
        SymbolSpec::ConeCutoff { axis, .. } => axis.len() == n,
        _ => true,
    };
    if !axis_ok {
        return Err(Error::DimensionMismatch { expected: n, got: 0 });
    }
    let a = spec.tabulate(n, window)?;
    let report = a.seminorm_check();
    if !report.in_class {
        return Err(Error::OutOfClass(report.reason.unwrap_or_default()));
    }
    Ok(a)
}
