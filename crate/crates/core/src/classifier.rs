//! Verdict engine: global hypoellipticity (GH), almost global
//! hypoellipticity (AGH) and global solvability (GS) for the system `X`, the
//! averaged system `X0` (coefficients `a_{j0}`) and the sum of squares `P`.
//!
//! Statuses for `P` and the AGH/GS family are derived from the `X` and `X0`
//! decisions, never assigned independently; [`check_equivalences`] re-checks
//! them from scratch.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coeffs::{finite_type_exists, FiniteTypeReport, SystemSpec};
use crate::diophantine::approx::{classify_sa, gs_condition_check, GsVerdict, SaCertificate, SaStatus};
use crate::diophantine::{DiophantineVerdict, ExactReal};
use crate::error::{Error, Result};
use crate::solver::{build_counterexample, decay_report, manufacture, propagation_check, solve_system, BaseSource, DecayMode};
use crate::spectral::{apply_system_field, synthesize, ModeSpec, PartialFourierField};
use crate::status::Status;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Property {
    #[serde(rename = "GH(X)")]
    GhX,
    #[serde(rename = "GH(P)")]
    GhP,
    #[serde(rename = "GH(X0)")]
    GhX0,
    #[serde(rename = "GS(X)")]
    GsX,
    #[serde(rename = "GS(P)")]
    GsP,
    #[serde(rename = "GS(X0)")]
    GsX0,
    #[serde(rename = "AGH(X)")]
    AghX,
    #[serde(rename = "AGH(P)")]
    AghP,
    #[serde(rename = "AGH(X0)")]
    AghX0,
}

impl Property {
    pub const ALL: [Property; 9] = [
        Property::GhX,
        Property::GhP,
        Property::GhX0,
        Property::GsX,
        Property::GsP,
        Property::GsX0,
        Property::AghX,
        Property::AghP,
        Property::AghX0,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Property::GhX => "GH(X)",
            Property::GhP => "GH(P)",
            Property::GhX0 => "GH(X0)",
            Property::GsX => "GS(X)",
            Property::GsP => "GS(P)",
            Property::GsX0 => "GS(X0)",
            Property::AghX => "AGH(X)",
            Property::AghP => "AGH(P)",
            Property::AghX0 => "AGH(X0)",
        }
    }
}

/// A value attained by `a_{j0}` (by continuity) that is a quadratic
/// irrational, placing a non-approximable tuple in the range of the means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeCertificate {
    pub j: usize,
    /// Values of `a_{j0}` bracketing the chosen irrational.
    #[serde(with = "crate::serde_big::rational")]
    pub lo: BigRational,
    #[serde(with = "crate::serde_big::rational")]
    pub hi: BigRational,
    pub value: ExactReal,
    /// `quarter-points` (exact values at `t in (pi/2) Z^n`) or `float-grid`.
    pub source: String,
    pub tuple: Vec<ExactReal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Certificate {
    FiniteType(FiniteTypeReport),
    Diophantine(DiophantineVerdict),
    Solvability(GsVerdict),
    Range(RangeCertificate),
    Note(String),
}

impl Certificate {
    /// SHA-256 of the canonical (compact, field-ordered) JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("certificates serialise");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reason {
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub property: Property,
    pub status: Status,
    pub reasons: Vec<Reason>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub xi_max: u64,
    pub finite_type: bool,
    pub verdicts: Vec<Verdict>,
    pub certificates: BTreeMap<String, Certificate>,
}

impl Classification {
    pub fn verdict(&self, p: Property) -> &Verdict {
        self.verdicts.iter().find(|v| v.property == p).expect("all nine properties present")
    }

    pub fn status(&self, p: Property) -> Status {
        self.verdict(p).status
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("classification serialises")
    }

    /// The first SA witness among the certificates backing `p`.
    pub fn witness(&self, p: Property) -> Option<&crate::diophantine::WitnessSequence> {
        self.verdict(p).reasons.iter().filter_map(|r| r.certificate.as_ref()).find_map(|h| match self.certificates.get(h) {
            Some(Certificate::Diophantine(DiophantineVerdict { status: SaStatus::SA, certificate: SaCertificate::Witness(w), .. })) => Some(w),
            Some(Certificate::Solvability(GsVerdict { certificate: SaCertificate::Witness(w), .. })) => Some(w),
            _ => None,
        })
    }
}

#[derive(Default)]
struct Ledger {
    certificates: BTreeMap<String, Certificate>,
}

impl Ledger {
    fn add(&mut self, c: Certificate) -> String {
        let h = c.hash();
        self.certificates.insert(h.clone(), c);
        h
    }
}

fn reason(tag: &str, cert: Option<&String>) -> Reason {
    Reason { tag: tag.into(), certificate: cert.cloned() }
}

struct Decision {
    status: Status,
    reasons: Vec<Reason>,
}

fn sa_to_gh(s: SaStatus) -> Status {
    match s {
        SaStatus::NotSA => Status::Holds,
        SaStatus::SA => Status::Fails,
        SaStatus::Undetermined => Status::Undetermined,
    }
}

/// A quadratic irrational strictly inside `(lo, hi)`: `lo + (hi - lo)(sqrt 2 - 1)`.
fn quadratic_between(lo: &BigRational, hi: &BigRational) -> Option<ExactReal> {
    let w = hi - lo;
    ExactReal::quadratic(lo - &w, w, 2).ok()
}

fn quarter_points(n: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|p: Vec<i64>| (0..4).map(move |q| [p.clone(), vec![q]].concat())).collect();
    }
    out
}

const QUARTER_POINT_LIMIT: usize = 6;

/// Bracketing values of a nonconstant mean: exact at quarter points when
/// they differ there, otherwise from a float grid shrunk by a safety margin.
fn mean_range(sys: &SystemSpec, j: usize) -> Option<(BigRational, BigRational, &'static str)> {
    let m = sys.trig_mean(j).ok()?;
    let n = sys.n();
    let (cl, ch) = sys.constants()[j].enclosure(64);
    if n <= QUARTER_POINT_LIMIT {
        let vals: Vec<BigRational> = quarter_points(n).iter().filter_map(|q| m.eval_quarter(q).ok()).collect();
        let lo = vals.iter().min()?;
        let hi = vals.iter().max()?;
        if lo < hi {
            let (a, b) = (lo + &ch, hi + &cl);
            if a < b {
                return Some((a, b, "quarter-points"));
            }
        }
    }
    let per_axis = 8 * (m.bandwidth() as usize + 1);
    let total = per_axis.checked_pow(n as u32).filter(|&t| t <= 1 << 20)?;
    let step = 2.0 * std::f64::consts::PI / per_axis as f64;
    let (mut fmin, mut fmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..total {
        let mut r = i;
        let t: Vec<f64> = (0..n)
            .map(|_| {
                let k = r % per_axis;
                r /= per_axis;
                k as f64 * step
            })
            .collect();
        let v = m.eval(&t).ok()?;
        fmin = fmin.min(v);
        fmax = fmax.max(v);
    }
    let margin = 1e-6 * (fmax - fmin) + 1e-9 * m.l1_norm();
    if fmax - fmin <= 2.0 * margin {
        return None;
    }
    let a = BigRational::from_float(fmin + margin)? + ch;
    let b = BigRational::from_float(fmax - margin)? + cl;
    (a < b).then_some((a, b, "float-grid"))
}

/// A value attained by `a_{j0}`: the exact constant, or the value at `t = 0`.
fn attained_value(sys: &SystemSpec, j: usize) -> Option<ExactReal> {
    if let Ok(Some(a)) = sys.alpha(j) {
        return Some(a);
    }
    let m = sys.trig_mean(j).ok()?;
    let v = m.eval_quarter(&vec![0; sys.n()]).ok()?;
    Some(sys.constants()[j].shifted(&v))
}

struct X0Decision {
    gh: Decision,
    gs: Decision,
}

fn decide_x0(sys: &SystemSpec, xi_max: u64, ledger: &mut Ledger) -> X0Decision {
    let undetermined = |tag: String| Decision { status: Status::Undetermined, reasons: vec![Reason { tag, certificate: None }] };
    if let Some(alphas) = sys.alphas() {
        let gh = match classify_sa(&alphas, xi_max) {
            Ok(v) => {
                let status = sa_to_gh(v.status);
                let h = ledger.add(Certificate::Diophantine(v));
                Decision { status, reasons: vec![reason("gh-iff-means-not-simultaneously-approximable", Some(&h))] }
            }
            Err(e) => undetermined(format!("sa-decision-error: {e}")),
        };
        let mut gs = match gs_condition_check(&alphas, xi_max) {
            Ok(v) => {
                let status = v.status;
                let h = ledger.add(Certificate::Solvability(v));
                Decision { status, reasons: vec![reason("gs-iff-lower-bound-off-resonance", Some(&h))] }
            }
            Err(e) => undetermined(format!("gs-decision-error: {e}")),
        };
        if gh.status == Status::Holds && gs.status != Status::Holds {
            gs.status = Status::Holds;
            gs.reasons.extend(gh.reasons.iter().cloned().map(|mut r| {
                r.tag = "gh-implies-gs".into();
                r
            }));
        }
        return X0Decision { gh, gs };
    }
    // some mean is nonconstant: look for a quadratic irrational in its range
    for j in 0..sys.n() {
        if matches!(sys.alpha(j), Ok(Some(_))) {
            continue;
        }
        let Some((lo, hi, source)) = mean_range(sys, j) else { continue };
        let Some(value) = quadratic_between(&lo, &hi) else { continue };
        let tuple: Option<Vec<ExactReal>> =
            (0..sys.n()).map(|i| if i == j { Some(value.clone()) } else { attained_value(sys, i) }).collect();
        let Some(tuple) = tuple else { continue };
        let Ok(sa) = classify_sa(&tuple, xi_max) else { continue };
        if sa.status != SaStatus::NotSA {
            continue;
        }
        let hr = ledger.add(Certificate::Range(RangeCertificate { j, lo, hi, value, source: source.into(), tuple }));
        let hd = ledger.add(Certificate::Diophantine(sa));
        let gh = Decision {
            status: Status::Holds,
            reasons: vec![reason("gh-iff-range-of-means-contains-not-sa-tuple", Some(&hr)), reason("not-sa-certificate", Some(&hd))],
        };
        let gs = Decision { status: Status::Holds, reasons: vec![reason("gh-implies-gs", Some(&hr))] };
        return X0Decision { gh, gs };
    }
    X0Decision { gh: undetermined("range-of-means-inconclusive".into()), gs: undetermined("range-of-means-inconclusive".into()) }
}

/// The nine verdicts. Never fails: errors surface as `Undetermined` with the
/// error recorded in the reason tag.
pub fn classify(sys: &SystemSpec, xi_max: u64) -> Classification {
    let mut ledger = Ledger::default();
    let ft = finite_type_exists(sys);
    let finite_type = ft.exists;
    let hf = ledger.add(Certificate::FiniteType(ft));
    let x0 = decide_x0(sys, xi_max, &mut ledger);

    let (gh_x, gs_x) = if finite_type {
        let mut gh = Decision { status: Status::Holds, reasons: vec![reason("finite-type-point-implies-gh", Some(&hf))] };
        // the disjunction is inclusive: report the averaged-system certificate too
        if x0.gh.status == Status::Holds {
            gh.reasons.extend(x0.gh.reasons.iter().cloned());
        }
        let gs = Decision { status: Status::Holds, reasons: vec![reason("gh-implies-gs-and-agh", Some(&hf))] };
        (gh, gs)
    } else {
        let mut gh = Decision { status: x0.gh.status, reasons: vec![reason("no-finite-type-conjugate-to-averaged-system", Some(&hf))] };
        gh.reasons.extend(x0.gh.reasons.iter().cloned());
        let mut gs = Decision { status: x0.gs.status, reasons: vec![reason("no-finite-type-conjugate-to-averaged-system", Some(&hf))] };
        gs.reasons.extend(x0.gs.reasons.iter().cloned());
        (gh, gs)
    };

    let derived = |src: &Decision, tag: &str| {
        let mut reasons = vec![Reason { tag: tag.into(), certificate: None }];
        reasons.extend(src.reasons.iter().cloned());
        (src.status, reasons)
    };
    let mut verdicts = Vec::with_capacity(9);
    for p in Property::ALL {
        let (status, reasons) = match p {
            Property::GhX => (gh_x.status, gh_x.reasons.clone()),
            Property::GhP => derived(&gh_x, "gh-of-p-equals-gh-of-x"),
            Property::GhX0 => (x0.gh.status, x0.gh.reasons.clone()),
            Property::GsX => (gs_x.status, gs_x.reasons.clone()),
            Property::GsP | Property::AghX | Property::AghP => derived(&gs_x, "gs-and-agh-equivalent-for-x-and-p"),
            Property::GsX0 => (x0.gs.status, x0.gs.reasons.clone()),
            Property::AghX0 => derived(&x0.gs, "agh-equivalent-to-gs-for-averaged-system"),
        };
        verdicts.push(Verdict { property: p, status, reasons });
    }
    Classification { xi_max, finite_type, verdicts, certificates: ledger.certificates }
}

/// Independent assertion pass over the equivalences between the nine
/// verdicts.
pub fn check_equivalences(c: &Classification) -> Result<()> {
    use Property::*;
    let s = |p| c.status(p);
    let fail = |msg: String| Err(Error::InconsistentVerdict(msg));
    if s(GhX) != s(GhP) {
        return fail(format!("GH(X) = {:?} but GH(P) = {:?}", s(GhX), s(GhP)));
    }
    let family = [GsX, GsP, AghX, AghP];
    if family.iter().any(|&p| s(p) != s(GsX)) {
        return fail(format!("GS/AGH family disagrees: {:?}", family.map(s)));
    }
    if s(GsX0) != s(AghX0) {
        return fail(format!("GS(X0) = {:?} but AGH(X0) = {:?}", s(GsX0), s(AghX0)));
    }
    for (gh, gs) in [(GhX, GsX), (GhX0, GsX0)] {
        if s(gh) == Status::Holds && s(gs) != Status::Holds {
            return fail(format!("{} holds but {} is {:?}", gh.label(), gs.label(), s(gs)));
        }
    }
    let ft = Status::from_bool(c.finite_type);
    if s(GhP) != s(GhX0).or(ft) {
        return fail(format!("GH(P) = {:?} but GH(X0) or finite type = {:?}", s(GhP), s(GhX0).or(ft)));
    }
    if s(GsX) != s(GsX0).or(ft) {
        return fail(format!("GS(X) = {:?} but GS(X0) or finite type = {:?}", s(GsX), s(GsX0).or(ft)));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossCheck {
    pub name: String,
    pub detail: String,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossReport {
    pub gh: Status,
    pub checks: Vec<CrossCheck>,
}

fn smooth_field(n: usize, window: i64, t: usize, skip_origin: bool) -> Result<PartialFourierField> {
    // e^{-40} at |xi| = window / 2, so the top dyadic band has vanished
    let taper = 160.0 / (window * window).max(1) as f64;
    let mut modes = Vec::new();
    let ti = t as i64;
    let side = 2 * ti + 1;
    for xi in -window..=window {
        for idx in 0..side.pow(n as u32) {
            let mut r = idx;
            let tau: Vec<i64> = (0..n)
                .map(|_| {
                    let k = r % side - ti;
                    r /= side;
                    k
                })
                .collect();
            if skip_origin && xi == 0 && tau.iter().all(|&k| k == 0) {
                continue;
            }
            let k2: i64 = tau.iter().map(|k| k * k).sum();
            let amp = (-taper * (xi * xi) as f64 - k2 as f64 / 2.0).exp();
            // phase depends on the mode so the field is not real-symmetric
            let ph = 0.3 * xi as f64 + 0.7 * tau.iter().sum::<i64>() as f64;
            modes.push(ModeSpec::plain(tau, xi, Complex64::from_polar(amp, ph)));
        }
    }
    synthesize(n, window, t, &modes)
}

/// Numerical consistency harness: exercises the verdict on concrete fields
/// and raises `InconsistentVerdict` on any mismatch.
pub fn cross_validate(sys: &SystemSpec, c: &Classification, window: i64) -> Result<CrossReport> {
    let gh = c.status(Property::GhX);
    let mut checks = Vec::new();
    let mismatch = |checks: &[CrossCheck]| {
        let bad: Vec<String> = checks.iter().filter(|c| !c.ok).map(|c| format!("{}: {}", c.name, c.detail)).collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InconsistentVerdict(bad.join("; ")))
        }
    };
    match gh {
        Status::Fails => {
            if let Some(w) = c.witness(Property::GhX) {
                let depth = w.len().min(4);
                let ce = build_counterexample(w, sys, depth)?;
                let r = &ce.report;
                let fields_ok = r.field_decay.iter().all(|d| d.is_rapid()) && r.p_decay.is_rapid();
                checks.push(CrossCheck {
                    name: "counterexample".into(),
                    detail: format!(
                        "depth {depth}: X_j u rapid = {:?}, P u rapid = {}, u rapid = {}",
                        r.field_decay.iter().map(|d| d.is_rapid()).collect::<Vec<_>>(),
                        r.p_decay.is_rapid(),
                        r.u_decay.is_rapid()
                    ),
                    ok: fields_ok && !r.u_decay.is_rapid(),
                });
            }
            let all_zero = sys.coefficients().iter().all(|p| p.is_zero()) && sys.constants().iter().all(|a| a.as_rational().is_some_and(|q| q.is_zero()));
            if all_zero {
                // u depends on x only and is not smooth
                let n = sys.n();
                let modes: Vec<ModeSpec> =
                    (-window..=window).filter(|&x| x != 0).map(|x| ModeSpec::plain(vec![0; n], x, Complex64::one())).collect();
                let u = synthesize(n, window, 1, &modes)?;
                let x_max = (0..n).map(|j| apply_system_field(&u, sys, j).map(|f| f.max_abs())).collect::<Result<Vec<_>>>()?;
                let ud = decay_report(&u, &DecayMode::SupT, 1.0)?;
                checks.push(CrossCheck {
                    name: "x-only-field".into(),
                    detail: format!("max |X_j u| = {x_max:?}, u verdict {:?}", ud.verdict),
                    ok: x_max.iter().all(|&m| m == 0.0) && !ud.is_rapid(),
                });
            }
        }
        Status::Holds if c.finite_type => {
            let u = smooth_field(sys.n(), window, 3, false)?;
            let input = manufacture(u, sys, vec![0.0; sys.n()])?;
            let r = propagation_check(&input, sys, 3, BaseSource::BracketTrick)?;
            checks.push(CrossCheck {
                name: "propagation".into(),
                detail: format!("status {:?}, worst ratio {:.3e}", r.status, r.worst_ratio),
                ok: r.status == Status::Holds,
            });
        }
        Status::Holds => {
            let u = smooth_field(sys.n(), window, 3, true)?;
            let f: Vec<PartialFourierField> = (0..sys.n()).map(|j| apply_system_field(&u, sys, j)).collect::<Result<_>>()?;
            let out = solve_system(&f, sys, 0.0)?;
            let err = out.field.sub(&u)?.l2_norm() / u.l2_norm();
            checks.push(CrossCheck {
                name: "manufactured-solution".into(),
                detail: format!("relative L2 error {err:.3e}, {} obstructions", out.obstructions.len()),
                ok: err <= 1e-8 && out.obstructions.is_empty(),
            });
        }
        Status::Undetermined => {}
    }
    mismatch(&checks)?;
    Ok(CrossReport { gh, checks })
}
