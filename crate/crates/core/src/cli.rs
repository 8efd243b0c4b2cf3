//! Command-line front end. `run` never exits the process; it returns the
//! exit code: 0 all checks pass, 1 a check failed or a run aborted,
//! 2 usage or configuration error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{family_from, parse_cx, parse_cx_list, ModelConfig};
use crate::dynamics::{integrate, isospectrality_report, write_csv, IntegratorConfig};
use crate::error::Error;
use crate::model::{cm_rmx_residual, exchange_residual, lax_residual, random_positions, PhaseState};
use crate::rmatrix::{certify, RMatrixFamily};
use crate::rng::SampleRng;
use crate::specfun::{scalar_identity_report, Flavor, SAMPLE_MARGIN};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seed offset for spectral-parameter draws in the check commands.
const SPECTRAL_STREAM: u64 = 0x2545_f491_4f6c_dd1d;

#[derive(Parser, Debug)]
#[command(name = "intops", version, about = "Interacting integrable tops: certification and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FlavorArg {
    Rational,
    Trig,
    Elliptic,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scalar identity suite for one function flavor.
    CertifyFunctions {
        #[arg(long, value_enum)]
        flavor: FlavorArg,
        #[arg(long, value_parser = parse_cx, allow_hyphen_values = true)]
        tau: Option<Complex64>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Property certification of an R-matrix family.
    CertifyRmatrix {
        #[arg(long)]
        family: String,
        #[arg(long, value_parser = parse_cx, allow_hyphen_values = true)]
        c: Option<Complex64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_parser = parse_cx, allow_hyphen_values = true)]
        tau: Option<Complex64>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Lax equation residual at random spectral parameters.
    CheckLax {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        z_samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Classical exchange relation residual at random (z, w) pairs.
    CheckExchange {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        pairs: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Residual of the R-matrix-valued Calogero-Moser Lax equation.
    CheckCmRmx {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: usize,
        #[arg(long, value_parser = parse_cx, allow_hyphen_values = true)]
        nu: Complex64,
        #[arg(long, value_parser = parse_cx, allow_hyphen_values = true)]
        c: Option<Complex64>,
        #[arg(long, value_parser = parse_cx, allow_hyphen_values = true)]
        tau: Option<Complex64>,
        #[arg(long, default_value_t = 5)]
        z_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// RK4 trajectory with monitored invariants.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Spectral monitor points, "RE,IM;RE,IM".
        #[arg(long, value_parser = parse_points, allow_hyphen_values = true)]
        monitor_z: Option<Points>,
        #[arg(long, default_value_t = 10)]
        monitor_every: usize,
        #[arg(long)]
        out: PathBuf,
        /// Bound on the instantaneous Lax residual along the trajectory.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

/// A `;`-separated list of complex points, parsed as one flag value.
#[derive(Clone, Debug)]
struct Points(Vec<Complex64>);

fn parse_points(s: &str) -> Result<Points, String> {
    parse_cx_list(s).map(Points)
}

/// Failure classes mapped onto exit codes.
enum Fail {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::DimensionMismatch(_)
            | Error::BadModulus { .. }
            | Error::ScaleExceeded { .. }
            | Error::ConstraintViolation { .. } => Fail::Usage(e.to_string()),
            other => Fail::Runtime(other.to_string()),
        }
    }
}

fn cx_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Report envelope shared by every command.
fn envelope(command: &str, seed: u64, config_echo: Value, pass: bool, body: Value) -> Value {
    let mut v = json!({
        "tool_version": TOOL_VERSION,
        "command": command,
        "seed": seed,
        "config_echo": config_echo,
        "pass": pass,
    });
    if let (Some(o), Value::Object(b)) = (v.as_object_mut(), body) {
        o.extend(b);
    }
    v
}

fn load_config(path: &PathBuf) -> Result<ModelConfig, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| Fail::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(ModelConfig::from_json_str(&text)?)
}

/// Spectral parameters keeping `margin` off the poles of `L(z)` at `st`.
fn spectral_points(st: &PhaseState, k: usize, seed: u64, pairs: bool) -> Result<Vec<(Complex64, Complex64)>, Fail> {
    let fl = st.family().flavor();
    let mut rng = SampleRng::new(seed ^ SPECTRAL_STREAM);
    let mut out = Vec::with_capacity(k);
    let ok = |z: Complex64| fl.guard_eps(z, SAMPLE_MARGIN).is_ok() && crate::model::lax_l(st, z).is_ok();
    while out.len() < k {
        let z = fl.sample_point(&mut rng);
        let w = if pairs { fl.sample_point(&mut rng) } else { z };
        if ok(z) && (!pairs || (ok(w) && fl.guard_eps(z - w, SAMPLE_MARGIN).is_ok())) {
            out.push((z, w));
        }
    }
    Ok(out)
}

fn certify_functions(flavor: FlavorArg, tau: Option<Complex64>, samples: usize, seed: u64, tol: f64) -> Result<(Value, bool), Fail> {
    let fl = match flavor {
        FlavorArg::Rational => Flavor::rational(),
        FlavorArg::Trig => Flavor::trigonometric(),
        FlavorArg::Elliptic => Flavor::elliptic(tau.ok_or_else(|| Fail::Usage("--tau is required for the elliptic flavor".into()))?)?,
    };
    let rep = scalar_identity_report(&fl, samples, seed);
    let pass = rep.worst() < tol;
    let echo = json!({"flavor": flavor, "tau": tau.map(cx_json), "samples": samples, "tol": tol});
    let body = json!({"max_residual": rep.worst(), "report": rep});
    Ok((envelope("certify-functions", seed, echo, pass, body), pass))
}

fn certify_rmatrix(
    family: &str,
    c: Option<Complex64>,
    n: Option<usize>,
    tau: Option<Complex64>,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<(Value, bool), Fail> {
    let fam = family_from(family, n, tau, c)?;
    let rep = certify(&fam, samples, seed, tol);
    let echo = json!({"family": family, "N": fam.n(), "C": c.map(cx_json), "tau": tau.map(cx_json), "samples": samples, "tol": tol});
    let failures: Vec<String> = rep.failures().iter().map(|s| s.to_string()).collect();
    let pass = rep.pass;
    let body = json!({"failures": failures, "report": rep});
    Ok((envelope("certify-rmatrix", seed, echo, pass, body), pass))
}

fn check_lax(config: &PathBuf, k: usize, tol: f64) -> Result<(Value, bool), Fail> {
    let cfg = load_config(config)?;
    let st = cfg.build_state()?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (z, _) in spectral_points(&st, k, cfg.seed, false)? {
        let r = lax_residual(&st, z)?;
        worst = worst.max(r);
        rows.push(json!({"z": cx_json(z), "residual": r}));
    }
    let pass = worst < tol;
    let echo = serde_json::to_value(&cfg).expect("config serializes");
    let body = json!({"tol": tol, "max_residual": worst, "samples": rows});
    Ok((envelope("check-lax", cfg.seed, echo, pass, body), pass))
}

fn check_exchange(config: &PathBuf, k: usize, tol: f64) -> Result<(Value, bool), Fail> {
    let cfg = load_config(config)?;
    let st = cfg.build_state()?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (z, w) in spectral_points(&st, k, cfg.seed, true)? {
        let r = exchange_residual(&st, z, w)?;
        worst = worst.max(r);
        rows.push(json!({"z": cx_json(z), "w": cx_json(w), "residual": r}));
    }
    let pass = worst < tol;
    let echo = serde_json::to_value(&cfg).expect("config serializes");
    let body = json!({"tol": tol, "max_residual": worst, "samples": rows});
    Ok((envelope("check-exchange", cfg.seed, echo, pass, body), pass))
}

#[allow(clippy::too_many_arguments)]
fn check_cm_rmx(
    family: &str,
    n: Option<usize>,
    m: usize,
    nu: Complex64,
    c: Option<Complex64>,
    tau: Option<Complex64>,
    k: usize,
    seed: u64,
    tol: f64,
) -> Result<(Value, bool), Fail> {
    if m == 0 {
        return Err(Fail::Usage("invalid parameter `m`: must be >= 1".into()));
    }
    let fam: RMatrixFamily = family_from(family, n, tau, c)?;
    let fl = fam.flavor();
    let mut rng = SampleRng::new(seed);
    let q = random_positions(&fam, m, &mut rng);
    let p: Vec<Complex64> = (0..m).map(|_| rng.centered(0.5)).collect();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    while rows.len() < k {
        let z = fl.sample_point(&mut rng);
        if fl.guard_eps(z, SAMPLE_MARGIN).is_err() {
            continue;
        }
        let r = match cm_rmx_residual(&q, &p, nu, &fam, z) {
            Err(Error::PoleProximity { .. }) => continue,
            other => other?,
        };
        worst = worst.max(r);
        rows.push(json!({"z": cx_json(z), "residual": r}));
    }
    let pass = worst < tol;
    let echo = json!({"family": family, "N": fam.n(), "M": m, "nu": cx_json(nu), "C": c.map(cx_json), "tau": tau.map(cx_json), "z_samples": k, "tol": tol});
    let body = json!({
        "q": q.iter().map(|z| cx_json(*z)).collect::<Vec<_>>(),
        "p": p.iter().map(|z| cx_json(*z)).collect::<Vec<_>>(),
        "max_residual": worst,
        "samples": rows,
    });
    Ok((envelope("check-cm-rmx", seed, echo, pass, body), pass))
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    config: &PathBuf,
    dt: f64,
    steps: usize,
    monitor_z: Option<Points>,
    monitor_every: usize,
    out: &PathBuf,
    tol: f64,
) -> Result<(Value, bool), Fail> {
    let cfg = load_config(config)?;
    let st = cfg.build_state()?;
    let zs = match monitor_z {
        Some(Points(z)) if !z.is_empty() => z,
        Some(_) => return Err(Fail::Usage("--monitor-z lists no points".into())),
        None => spectral_points(&st, 2, cfg.seed, false)?.into_iter().map(|p| p.0).collect(),
    };
    for &z in &zs {
        crate::model::lax_l(&st, z).map_err(|e| Fail::Usage(format!("monitor point {z} rejected: {e}")))?;
    }
    let icfg = IntegratorConfig::new(dt, steps, zs.clone(), monitor_every)?;
    let rec = integrate(&st, &icfg)?;
    let mut file = std::fs::File::create(out).map_err(|e| Fail::Usage(format!("cannot create {}: {e}", out.display())))?;
    write_csv(&rec, &mut file).map_err(|e| Fail::Runtime(format!("writing {}: {e}", out.display())))?;
    let drift = isospectrality_report(&rec)?;
    let pass = drift.max_lax_residual < tol;
    let mut echo = serde_json::to_value(&cfg).expect("config serializes");
    echo["integrator"] = json!({
        "dt": dt, "steps": steps, "scheme": "rk4", "monitor_every": monitor_every,
        "monitor_z": zs.iter().map(|z| cx_json(*z)).collect::<Vec<_>>(), "tol": tol,
    });
    let table: Vec<Value> = drift
        .labelled()
        .into_iter()
        .map(|(name, d)| json!({"invariant": name, "relative_drift": d}))
        .collect();
    let last = rec.rows.last().expect("record has the initial row");
    let body = json!({
        "rows": rec.rows.len(),
        "t_final": last.t,
        "csv": out.display().to_string(),
        "drift": table,
        "max_lax_residual": drift.max_lax_residual,
    });
    Ok((envelope("simulate", cfg.seed, echo, pass, body), pass))
}

fn dispatch(cmd: Command) -> Result<(Value, bool), Fail> {
    match cmd {
        Command::CertifyFunctions { flavor, tau, samples, seed, tol } => certify_functions(flavor, tau, samples, seed, tol),
        Command::CertifyRmatrix { family, c, n, tau, samples, seed, tol } => certify_rmatrix(&family, c, n, tau, samples, seed, tol),
        Command::CheckLax { config, z_samples, tol } => check_lax(&config, z_samples, tol),
        Command::CheckExchange { config, pairs, tol } => check_exchange(&config, pairs, tol),
        Command::CheckCmRmx { family, n, m, nu, c, tau, z_samples, seed, tol } => {
            check_cm_rmx(&family, n, m, nu, c, tau, z_samples, seed, tol)
        }
        Command::Simulate { config, dt, steps, monitor_z, monitor_every, out, tol } => {
            simulate(&config, dt, steps, monitor_z, monitor_every, &out, tol)
        }
    }
}

/// Runs one invocation; `args[0]` is the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok((report, pass)) => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if pass {
                0
            } else {
                let _ = writeln!(err, "check failed: max residual above tolerance");
                1
            }
        }
        Err(Fail::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Fail::Runtime(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
    }
}
