//! Dyadic-band decay fits of `sup_t |u^(t, xi)|` against `1 + |xi|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::PartialFourierField;

/// Largest log-scale RMS residual accepted by a fit.
pub const FIT_TOLERANCE: f64 = 0.15;

/// Values below this fraction of the largest band are treated as vanished.
pub const VANISH_FLOOR: f64 = 1e-13;

/// Exponent reported for identically zero data.
pub const K_CAP: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DecayVerdict {
    RapidDecay(f64),
    PolynomialGrowth(f64),
    Inconclusive,
}

/// Maximum over `|xi| in [2^index, 2^{index+1})`, kept as a logarithm so
/// astronomically small values survive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub index: u32,
    /// `ln(1 + 2^index)`.
    pub ln_lo: f64,
    /// `ln` of the band maximum (`None` for an exactly zero band).
    pub ln_sup: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub bands: Vec<Band>,
    /// `-slope` of the least-squares line through the populated bands, raised
    /// to the vanishing-tail exponent when the tail drops below the floor.
    pub k_hat: f64,
    pub c_hat: f64,
    pub growth_order: Option<f64>,
    pub verdict: DecayVerdict,
    pub fit_residual: f64,
    pub monotone: bool,
    /// Exponent implied by the first band that vanishes relative to the peak.
    pub k_env: Option<f64>,
    pub threshold: f64,
}

impl DecayReport {
    pub fn is_rapid(&self) -> bool {
        matches!(self.verdict, DecayVerdict::RapidDecay(_))
    }

    /// CSV rows `band,ln_lo,ln_sup,ln_fit`.
    pub fn csv_rows(&self) -> Vec<[String; 4]> {
        let ln_c = self.c_hat.ln();
        self.bands
            .iter()
            .map(|b| {
                [
                    b.index.to_string(),
                    format!("{:.12e}", b.ln_lo),
                    b.ln_sup.map_or("-inf".into(), |v| format!("{v:.12e}")),
                    format!("{:.12e}", ln_c - self.k_hat * b.ln_lo),
                ]
            })
            .collect()
    }
}

/// A sample `(ln |xi|, ln value)`; `ln value = -inf` encodes zero. Both are
/// logarithms so frequencies beyond `f64` range can be fitted.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub ln_abs_xi: f64,
    pub ln_value: f64,
}

impl Sample {
    pub fn new(abs_xi: f64, value: f64) -> Self {
        Sample { ln_abs_xi: abs_xi.ln(), ln_value: value.ln() }
    }
}

fn band_index_ln(ln_x: f64) -> u32 {
    if ln_x < 700.0 {
        // snap only values that are integers up to rounding
        let x = ln_x.exp();
        let r = x.round();
        return band_index(if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { x });
    }
    (ln_x / std::f64::consts::LN_2).floor() as u32
}

fn ln_one_plus_pow2(m: u32) -> f64 {
    if m < 1000 {
        2f64.powi(m as i32).ln_1p()
    } else {
        m as f64 * std::f64::consts::LN_2
    }
}

fn band_index(abs_xi: f64) -> u32 {
    let mut m = abs_xi.log2().floor() as i64;
    // guard against rounding right at powers of two
    while m > 0 && 2f64.powi(m as i32) > abs_xi {
        m -= 1;
    }
    while 2f64.powi(m as i32 + 1) <= abs_xi {
        m += 1;
    }
    m.max(0) as u32
}

/// Fits band maxima of the samples. With a `window`, bands reaching past it
/// are dropped; `xi = 0` never enters a band.
pub fn decay_from_samples(samples: &[Sample], window: Option<f64>, threshold: f64) -> Result<DecayReport> {
    let mut maxima: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
    for s in samples {
        if s.ln_abs_xi.is_nan() || s.ln_abs_xi < 0.0 {
            continue;
        }
        let m = band_index_ln(s.ln_abs_xi);
        if let Some(w) = window {
            if 2f64.powi(m as i32 + 1) - 1.0 > w {
                continue;
            }
        }
        let e = maxima.entry(m).or_insert(f64::NEG_INFINITY);
        *e = e.max(s.ln_value);
    }
    if let Some(w) = window {
        // bands inside the window with no samples are exact zeros
        let top = band_index(w.max(1.0));
        for m in 0..=top {
            if 2f64.powi(m as i32 + 1) - 1.0 <= w {
                maxima.entry(m).or_insert(f64::NEG_INFINITY);
            }
        }
    }
    if maxima.len() < 3 {
        return Err(Error::InsufficientBands(maxima.len()));
    }
    let bands: Vec<Band> = maxima
        .iter()
        .map(|(&m, &v)| Band { index: m, ln_lo: ln_one_plus_pow2(m), ln_sup: v.is_finite().then_some(v) })
        .collect();
    Ok(fit_bands(bands, threshold))
}

fn fit_bands(bands: Vec<Band>, threshold: f64) -> DecayReport {
    let pts: Vec<(f64, f64)> = bands.iter().filter_map(|b| b.ln_sup.map(|v| (b.ln_lo, v))).collect();
    let peak = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if pts.is_empty() {
        return DecayReport {
            bands,
            k_hat: K_CAP,
            c_hat: 0.0,
            growth_order: None,
            verdict: DecayVerdict::RapidDecay(K_CAP),
            fit_residual: 0.0,
            monotone: true,
            k_env: Some(K_CAP),
            threshold,
        };
    }
    let ln_floor = peak + VANISH_FLOOR.ln();
    // vanishing tail: from some band on, every band is below the floor
    let mut k_env = None;
    let low = |b: &Band| b.ln_sup.is_none_or(|v| v <= ln_floor);
    // start of the trailing run of low bands; leading zero bands do not count,
    // but a single populated band is no evidence of a decaying profile
    let tail_start = bands.iter().rposition(|b| !low(b)).map(|i| i + 1);
    let populated = bands.iter().filter(|b| !low(b)).count();
    if let Some(i) = tail_start.filter(|&i| i < bands.len() && populated >= 2) {
        k_env = Some(((peak - ln_floor) / bands[i].ln_lo).min(K_CAP));
    }
    let (slope, intercept, resid) = if pts.len() >= 2 { ls_fit(&pts) } else { (0.0, pts[0].1, 0.0) };
    let fit_k = -slope;
    let k_hat = k_env.map_or(fit_k, |e| e.max(fit_k));
    let monotone = pts.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    let verdict = if k_hat >= threshold && (resid <= FIT_TOLERANCE || monotone || k_env.is_some()) {
        DecayVerdict::RapidDecay(k_hat)
    } else if k_hat <= 0.1 && resid <= FIT_TOLERANCE {
        DecayVerdict::PolynomialGrowth((-k_hat).max(0.0))
    } else {
        DecayVerdict::Inconclusive
    };
    let growth_order = matches!(verdict, DecayVerdict::PolynomialGrowth(_)).then_some((-k_hat).max(0.0));
    DecayReport { bands, k_hat, c_hat: intercept.exp(), growth_order, verdict, fit_residual: resid, monotone, k_env, threshold }
}

/// Least squares `y = b + s x`; returns `(s, b, rms residual)`.
fn ls_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let s = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - s * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - b - s * p.0).powi(2)).sum();
    (s, b, (rss / n).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DecayMode {
    SupT,
    AtPoint(Vec<f64>),
}

/// Decay of `sup_t |u^(t, xi)|` (or `|u^(s, xi)|`) over the field's `xi`-window.
pub fn decay_report(u: &PartialFourierField, mode: &DecayMode, threshold: f64) -> Result<DecayReport> {
    if let DecayMode::AtPoint(s) = mode {
        if s.len() != u.n() {
            return Err(Error::DimensionMismatch { expected: u.n(), got: s.len() });
        }
    }
    let samples: Vec<Sample> = u
        .blocks()
        .keys()
        .map(|&xi| {
            let v = match mode {
                DecayMode::SupT => u.sup_t(xi),
                DecayMode::AtPoint(s) => u.eval(s, xi).norm(),
            };
            Sample::new(xi.unsigned_abs() as f64, v)
        })
        .collect();
    decay_from_samples(&samples, Some(u.xi_window() as f64), threshold)
}
