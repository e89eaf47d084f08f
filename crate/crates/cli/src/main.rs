//! `hypoell` command-line front end.
//!
//! Exit codes: 0 = holds / success, 1 = fails (with certificate),
//! 2 = undetermined, 3 = usage or input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hypoell::classifier::{classify, Property};
use hypoell::diophantine::{classify_sa, gs_condition_check, liouville_tuple, sa_scan, SaStatus};
use hypoell::microlocal::{
    apply_symbol, full_fourier, singular_directions, t_elliptic_cone_decay, SymbolSpec,
};
use hypoell::solver::{build_counterexample, decay_report, solve_system, DecayMode, DecayReport, DecayVerdict, ObstructionKind};
use hypoell::spectral::{apply_system_field, synthesize, ModeSpec};
use hypoell::{Error, PartialFourierField, Status, SystemSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "hypoell", version, about = "Global hypoellipticity and solvability of vector-field systems on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verdicts for GH / AGH / GS of X, X0 and P with certificates.
    Classify {
        system: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Simultaneous-approximation scan of the constant means.
    Scan {
        system: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Mode-by-mode solution of X_j u = f_j.
    Solve {
        system: PathBuf,
        /// Right-hand sides, one field file per j; manufactured from a seeded
        /// smooth u when omitted.
        #[arg(long = "rhs")]
        rhs: Vec<PathBuf>,
        /// Divisors below this floor are reported as obstructions.
        #[arg(long, default_value_t = 1e-8)]
        divisor_floor: f64,
        /// xi-window of the manufactured field.
        #[arg(long, default_value_t = 32)]
        xi_window: i64,
        #[command(flatten)]
        common: Common,
    },
    /// Non-smooth solution of X u, P u in C^infinity for a Liouville system.
    Counterexample {
        /// System whose means carry a witness; a Liouville tuple otherwise.
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        base: u32,
        #[arg(long, default_value_t = 3)]
        depth: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Dyadic decay fit of a partial Fourier field.
    Decay {
        field: PathBuf,
        /// Evaluate at this t (comma separated) instead of taking sup_t.
        #[arg(long, value_delimiter = ',')]
        at: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Symbol class check, singular directions and the t-elliptic cone.
    Microlocal {
        /// identity, bessel:<m>, laplacian, tau2, dx, cone-cutoff, exp-x, exp
        #[arg(long, default_value = "identity")]
        symbol: String,
        /// Frequency dimension when no field is given.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        fan_resolution: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value_t = 256)]
    xi_max: u64,
    #[arg(long, default_value_t = 32)]
    t_window: usize,
    #[arg(long, default_value_t = 8.0)]
    k_max: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Failures before any computation are usage errors; later ones leave the
/// question undetermined.
enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

struct Report {
    json: Value,
    csv: Vec<Vec<String>>,
    status: Status,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<SystemSpec, Failure> {
    SystemSpec::from_json(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_field(path: &Path) -> Result<PartialFourierField, Failure> {
    PartialFourierField::from_json(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn validate(c: &Common) -> Result<(), Failure> {
    if c.xi_max < 2 {
        return Err(usage("--xi-max must be at least 2"));
    }
    if c.t_window == 0 {
        return Err(usage("--t-window must be positive"));
    }
    if !(c.k_max.is_finite() && c.k_max > 0.0) {
        return Err(usage("--k-max must be positive"));
    }
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serialises")
}

fn decay_status(d: &DecayReport) -> Status {
    match d.verdict {
        DecayVerdict::RapidDecay(_) => Status::Holds,
        DecayVerdict::PolynomialGrowth(_) => Status::Fails,
        DecayVerdict::Inconclusive => Status::Undetermined,
    }
}

fn decay_csv(d: &DecayReport) -> Vec<Vec<String>> {
    let mut rows = vec![vec!["band".into(), "ln_lo".into(), "ln_sup".into(), "ln_fit".into()]];
    rows.extend(d.csv_rows().into_iter().map(|r| r.to_vec()));
    rows
}

fn run_classify(system: &Path, c: &Common) -> Result<Report, Failure> {
    let sys = load_system(system)?;
    validate(c)?;
    let cls = classify(&sys, c.xi_max);
    let mut csv = vec![vec!["property".into(), "status".into(), "tags".into(), "certificates".into()]];
    for v in &cls.verdicts {
        csv.push(vec![
            v.property.label().into(),
            format!("{:?}", v.status),
            v.reasons.iter().map(|r| r.tag.clone()).collect::<Vec<_>>().join(";"),
            v.reasons.iter().filter_map(|r| r.certificate.clone()).collect::<Vec<_>>().join(";"),
        ]);
    }
    Ok(Report { json: serde_json::from_str(&cls.to_json()).expect("valid json"), csv, status: cls.status(Property::GhX) })
}

fn run_scan(system: &Path, c: &Common) -> Result<Report, Failure> {
    let sys = load_system(system)?;
    validate(c)?;
    let alphas = sys.alphas().ok_or_else(|| usage("scan needs constant means a_j0"))?;
    let table = sa_scan(&alphas, c.xi_max)?;
    let sa = classify_sa(&alphas, c.xi_max)?;
    let gs = gs_condition_check(&alphas, c.xi_max)?;
    let status = match sa.status {
        SaStatus::NotSA => Status::Holds,
        SaStatus::SA => Status::Fails,
        SaStatus::Undetermined => Status::Undetermined,
    };
    let mut csv = vec![vec!["xi".into(), "m_lo".into(), "m_hi".into(), "m".into()]];
    for r in &table.rows {
        csv.push(vec![r.xi.to_string(), r.m_lo.to_string(), r.m_hi.to_string(), format!("{:e}", r.m())]);
    }
    let json = json!({
        "alphas": to_value(&alphas),
        "xi_max": c.xi_max,
        "simultaneous_approximation": {"status": to_value(&sa.status), "certificate": to_value(&sa.certificate)},
        "solvability": to_value(&gs),
        "rho_hat": table.rho_hat,
        "rows": to_value(&table.rows),
    });
    Ok(Report { json, csv, status })
}

/// Smooth field with seeded phases and Gaussian envelope vanishing inside the window.
fn seeded_field(n: usize, xi_window: i64, t_window: usize, seed: u64) -> Result<PartialFourierField, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taper = 160.0 / (xi_window * xi_window).max(1) as f64;
    let t = t_window.min(8) as i64;
    let side = 2 * t + 1;
    let mut modes = Vec::new();
    for xi in -xi_window..=xi_window {
        for idx in 0..side.pow(n as u32) {
            let mut r = idx;
            let tau: Vec<i64> = (0..n)
                .map(|_| {
                    let k = r % side - t;
                    r /= side;
                    k
                })
                .collect();
            let k2: i64 = tau.iter().map(|k| k * k).sum();
            let amp = (-taper * (xi * xi) as f64 - k2 as f64 / 2.0).exp();
            let ph = rng.gen_range(0.0..std::f64::consts::TAU);
            modes.push(ModeSpec::plain(tau, xi, Complex64::from_polar(amp, ph)));
        }
    }
    Ok(synthesize(n, xi_window, t_window, &modes)?)
}

fn run_solve(system: &Path, rhs: &[PathBuf], floor: f64, xi_window: i64, c: &Common) -> Result<Report, Failure> {
    let sys = load_system(system)?;
    validate(c)?;
    if !(floor.is_finite() && floor >= 0.0) {
        return Err(usage("--divisor-floor must be non-negative"));
    }
    if xi_window < 4 {
        return Err(usage("--xi-window must be at least 4"));
    }
    let n = sys.n();
    let (f_list, manufactured) = if rhs.is_empty() {
        let u = seeded_field(n, xi_window, c.t_window, c.seed)?;
        ((0..n).map(|j| apply_system_field(&u, &sys, j)).collect::<Result<Vec<_>, _>>()?, true)
    } else {
        if rhs.len() != n {
            return Err(usage(format!("expected {n} --rhs files, got {}", rhs.len())));
        }
        (rhs.iter().map(|p| load_field(p)).collect::<Result<Vec<_>, _>>()?, false)
    };
    let out = solve_system(&f_list, &sys, floor)?;
    let decay = decay_report(&out.field, &DecayMode::SupT, c.k_max)?;
    let max_residual = out.residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
    let status = if out.obstructions.is_empty() {
        if max_residual <= 1e-8 {
            Status::Holds
        } else {
            Status::Undetermined
        }
    } else if out.obstructions.iter().any(|o| matches!(o.kind, ObstructionKind::Incompatible { .. })) {
        Status::Fails
    } else {
        Status::Undetermined
    };
    let json = json!({
        "decay": to_value(&decay),
        "obstructions": to_value(&out.obstructions),
        "verdict": {
            "status": to_value(&status),
            "manufactured_rhs": manufactured,
            "seed": manufactured.then_some(c.seed),
            "max_residual": max_residual,
            "solved_modes": out.residuals.len(),
        },
    });
    Ok(Report { json, csv: decay_csv(&decay), status })
}

fn run_counterexample(system: Option<&Path>, n: usize, base: u32, depth: u32, c: &Common) -> Result<Report, Failure> {
    validate(c)?;
    let (sys, witness) = match system {
        Some(p) => {
            let sys = load_system(p)?;
            let cls = classify(&sys, c.xi_max);
            let w = cls
                .witness(Property::GhX0)
                .or_else(|| cls.witness(Property::GhX))
                .cloned()
                .ok_or_else(|| Failure::Compute(Error::HypothesisFailed("no witness sequence for this system".into())))?;
            (sys, w)
        }
        None => {
            if n == 0 || base < 2 || depth < 3 {
                return Err(usage("need --n >= 1, --base >= 2 and --depth >= 3"));
            }
            let (alphas, w) = liouville_tuple(n, base, depth)?;
            (SystemSpec::constant(alphas)?, w)
        }
    };
    let ce = build_counterexample(&witness, &sys, witness.len())?;
    let r = &ce.report;
    let confirmed = !r.u_decay.is_rapid() && r.p_decay.is_rapid() && r.field_decay.iter().all(|d| d.is_rapid());
    let status = if confirmed { Status::Fails } else { Status::Undetermined };
    let json = json!({
        "system": serde_json::from_str::<Value>(&sys.to_json()).expect("valid json"),
        "witness": to_value(&witness),
        "report": to_value(r),
        "gh_fails_confirmed": confirmed,
    });
    Ok(Report { json, csv: decay_csv(&r.u_decay), status })
}

fn run_decay(field: &Path, at: Option<&[f64]>, c: &Common) -> Result<Report, Failure> {
    let u = load_field(field)?;
    validate(c)?;
    let mode = match at {
        Some(t) if t.len() != u.n() => return Err(usage(format!("--at needs {} coordinates, got {}", u.n(), t.len()))),
        Some(t) => DecayMode::AtPoint(t.to_vec()),
        None => DecayMode::SupT,
    };
    let d = decay_report(&u, &mode, c.k_max)?;
    Ok(Report { json: to_value(&d), csv: decay_csv(&d), status: decay_status(&d) })
}

fn run_microlocal(
    symbol: &str,
    n: usize,
    field: Option<&Path>,
    system: Option<&Path>,
    fan: usize,
    c: &Common,
) -> Result<Report, Failure> {
    validate(c)?;
    let u = field.map(load_field).transpose()?;
    let sys = system.map(load_system).transpose()?;
    let dim = u.as_ref().map_or(n, |u| u.n() + 1);
    if dim == 0 {
        return Err(usage("--n must be positive"));
    }
    let spec = SymbolSpec::parse(symbol, dim).map_err(|e| usage(e.to_string()))?;
    let a = spec.tabulate(dim, c.t_window).map_err(|e| usage(e.to_string()))?;
    let class = a.seminorm_check();
    let mut status = Status::from_bool(class.in_class);
    let mut json = json!({"symbol": to_value(&spec), "dimension": dim, "class": to_value(&class)});
    let mut csv = vec![vec!["alpha".into(), "beta".into(), "constant".into(), "growth_slope".into(), "scale_slope".into()]];
    for r in &class.rows {
        csv.push(vec![
            format!("{:?}", r.alpha),
            format!("{:?}", r.beta),
            format!("{:e}", r.constant),
            format!("{:.6}", r.growth_slope),
            format!("{:.6}", r.scale_slope),
        ]);
    }
    if let Some(u) = &u {
        let full = full_fourier(u);
        let sing = singular_directions(&full, fan, c.k_max)?;
        json["singular_directions"] = to_value(&sing);
        if class.in_class {
            let v = apply_symbol(&a, &full)?;
            let out = singular_directions(&v, fan, c.k_max)?;
            // a(x, D) cannot create new singular directions
            let new: Vec<_> = out.singular.iter().filter(|d| !sing.singular.contains(d)).cloned().collect();
            if !new.is_empty() {
                status = Status::Undetermined;
            }
            json["applied_singular_directions"] = to_value(&out);
            json["new_directions"] = to_value(&new);
        }
        if let Some(sys) = &sys {
            json["t_elliptic_cone"] = match t_elliptic_cone_decay(sys, u, c.k_max) {
                Ok(r) => to_value(&r),
                Err(e) => json!({"error": e.to_string()}),
            };
        }
    }
    Ok(Report { json, csv, status })
}

fn emit(report: &Report, c: &Common) -> Result<(), Failure> {
    let body = match c.format {
        Format::Json => serde_json::to_string_pretty(&report.json).expect("report serialises") + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &report.csv {
                w.write_record(row).map_err(|e| usage(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| usage(e.to_string()))?).expect("utf8 csv")
        }
    };
    match &c.out {
        Some(p) => fs::write(p, body).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn configure_workers() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("HYPOELL_WORKERS") {
        let k: usize = v.parse().map_err(|_| usage(format!("HYPOELL_WORKERS must be a positive integer, got `{v}`")))?;
        if k == 0 {
            return Err(usage("HYPOELL_WORKERS must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Status, Failure> {
    configure_workers()?;
    let (report, common) = match &cli.command {
        Command::Classify { system, common } => (run_classify(system, common)?, common),
        Command::Scan { system, common } => (run_scan(system, common)?, common),
        Command::Solve { system, rhs, divisor_floor, xi_window, common } => {
            (run_solve(system, rhs, *divisor_floor, *xi_window, common)?, common)
        }
        Command::Counterexample { system, n, base, depth, common } => {
            (run_counterexample(system.as_deref(), *n, *base, *depth, common)?, common)
        }
        Command::Decay { field, at, common } => (run_decay(field, at.as_deref(), common)?, common),
        Command::Microlocal { symbol, n, field, system, fan_resolution, common } => {
            (run_microlocal(symbol, *n, field.as_deref(), system.as_deref(), *fan_resolution, common)?, common)
        }
    };
    emit(&report, common)?;
    Ok(report.status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(s) => ExitCode::from(s.exit_code() as u8),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("undetermined: {e}");
            ExitCode::from(2)
        }
    }
}
