//! `slowvary`: construct slowly-varying models and check them numerically.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use slowvary::linreduce::{emit_slow_pde, reduce_linear};
use slowvary::nlreduce::{emit_model, reduce_nonlinear, reduce_nonlinear_direct};
use slowvary::normform::{check_exact, separate, slow_pde_with_error};
use slowvary::problems::{builtin_with, catalog, parse_overrides, parse_problem_file, validate_spec, ProblemSpec, BUILTINS};
use slowvary::ModelReport;
use slowvary_verify::dispersion::{carrier, dispersion_table, error_scaling_experiment, EXACT_TOLERANCE};
use slowvary_verify::emergence::emergence_experiment;
use slowvary_verify::grid::Scheme;
use slowvary_verify::numeric::Values;
use slowvary_verify::output;
use slowvary_verify::sim::{InitialCondition, SimConfig};

const SEED_VAR: &str = "SLOWVARY_SEED";

#[derive(Parser)]
#[command(name = "slowvary", version, about = "Slowly-varying macroscale models of PDEs on thin domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a model and print its report.
    Reduce(ReduceArgs),
    /// Check a model numerically against the full system.
    Verify(VerifyArgs),
    /// List the built-in problems.
    List {
        #[arg(long)]
        verbose: bool,
        #[arg(long)]
        problem: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Linear recursion for the coefficients A_n.
    Linear,
    /// Normal-form separation of the local ODEs.
    NormalForm,
    /// Generating-polynomial slow manifold.
    Generating,
    /// Slow manifold of the local Taylor-coefficient ODEs.
    Direct,
}

#[derive(Args)]
struct ReduceArgs {
    /// Built-in problem name or path to a problem file.
    #[arg(long)]
    problem: String,
    #[arg(long)]
    order: Option<u32>,
    /// Use the generating-polynomial construction.
    #[arg(long)]
    nonlinear: bool,
    #[arg(long, value_enum, conflicts_with = "nonlinear")]
    method: Option<Method>,
    /// Parameter override `key=value`, where value is a rational or a symbol.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Write the text report here and the structured report to `<path>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Dispersion,
    Emergence,
    ErrorScaling,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Spectral,
    Fd,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    #[arg(long)]
    problem: String,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    kmin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kmax: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 256)]
    grid: usize,
    /// Domain length; defaults to one whose top seeded harmonic has wavenumber 0.1.
    #[arg(long)]
    length: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 5.0)]
    tmax: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    amplitude: f64,
    #[arg(long, value_enum, default_value = "spectral")]
    scheme: SchemeArg,
    /// Start of the emergence fit window.
    #[arg(long, default_value_t = 1.0)]
    fit_start: f64,
    /// Accepted emergence rates.
    #[arg(long, default_value_t = 0.8)]
    rate_min: f64,
    #[arg(long, default_value_t = 1.1)]
    rate_max: f64,
    /// Tolerance on the error-scaling slope, or on the dispersion error.
    #[arg(long)]
    tol: Option<f64>,
    /// Numeric parameter value `name=number`.
    #[arg(long = "param", value_name = "NAME=NUMBER")]
    params: Vec<String>,
    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(m: impl ToString) -> Self {
        Failure { code: 2, message: m.to_string() }
    }
    fn validation(m: impl ToString) -> Self {
        Failure { code: 3, message: m.to_string() }
    }
    fn construction(m: impl ToString) -> Self {
        Failure { code: 4, message: m.to_string() }
    }
    fn acceptance(m: impl ToString) -> Self {
        Failure { code: 5, message: m.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Reduce(a) => cmd_reduce(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::List { verbose, problem } => cmd_list(verbose, problem.as_deref()),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("slowvary: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// A built-in name or a problem file, with the file's order if any.
fn load_problem(name: &str, params: &[String]) -> Result<(ProblemSpec, Option<u32>), Failure> {
    if BUILTINS.contains(&name) {
        let overrides = parse_overrides(params.iter().map(String::as_str)).map_err(Failure::usage)?;
        return Ok((builtin_with(name, &overrides).map_err(Failure::usage)?, None));
    }
    let path = Path::new(name);
    if !path.is_file() {
        return Err(Failure::usage(format!("unknown problem '{name}' (try `slowvary list`)")));
    }
    if !params.is_empty() {
        return Err(Failure::usage("--param applies to built-in problems; problem files use [params]"));
    }
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{name}: {e}")))?;
    let (spec, order) = parse_problem_file(&text).map_err(|e| Failure::validation(format!("{name}: {e}")))?;
    Ok((spec, Some(order)))
}

fn cmd_reduce(a: &ReduceArgs) -> Result<(), Failure> {
    let (spec, file_order) = load_problem(&a.problem, &a.params)?;
    let order = a.order.or(file_order).unwrap_or(spec.default_order);
    validate_spec(&spec, order).map_err(Failure::validation)?;
    let method = match (a.method, a.nonlinear) {
        (Some(m), _) => m,
        (None, true) => Method::Generating,
        (None, false) if spec.is_linear() => Method::Linear,
        (None, false) => Method::Generating,
    };
    let report = build_report(&spec, order, method).map_err(Failure::construction)?;
    let text = report.to_string();
    match &a.out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let mut json = path.clone().into_os_string();
            json.push(".json");
            fs::write(&json, report.to_json() + "\n").map_err(|e| Failure::usage(format!("{json:?}: {e}")))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn build_report(spec: &ProblemSpec, order: u32, method: Method) -> slowvary::Result<ModelReport> {
    match method {
        Method::Linear => {
            if !spec.is_linear() {
                return Err(slowvary::Error::Invalid(
                    "the linear recursion needs a linear problem; use --nonlinear".into(),
                ));
            }
            emit_slow_pde(spec, &reduce_linear(spec, order)?)
        }
        Method::NormalForm => {
            let nf = separate(spec, order)?;
            check_exact(&nf, spec)?;
            slow_pde_with_error(&nf, spec)
        }
        Method::Generating => emit_model(spec, &reduce_nonlinear(spec, order)?),
        Method::Direct => emit_model(spec, &reduce_nonlinear_direct(spec, order)?),
    }
}

fn numeric_values(params: &[String]) -> Result<Values, Failure> {
    let mut out = Values::new();
    for p in params {
        let (k, v) = p.split_once('=').ok_or_else(|| Failure::usage(format!("'{p}' is not name=number")))?;
        let x: f64 = v.trim().parse().map_err(|_| Failure::usage(format!("'{v}' is not a number")))?;
        out.insert(k.trim().to_string(), x);
    }
    Ok(out)
}

fn seed(arg: u64) -> Result<u64, Failure> {
    match std::env::var(SEED_VAR) {
        Ok(s) => s.trim().parse().map_err(|_| Failure::usage(format!("{SEED_VAR}='{s}' is not an integer"))),
        Err(_) => Ok(arg),
    }
}

/// Where the CSV goes.
fn csv_sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => Ok(Box::new(fs::File::create(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?)),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), Failure> {
    let (spec, file_order) = load_problem(&a.problem, &[])?;
    let order = a.order.or(file_order).unwrap_or(spec.default_order);
    let values = numeric_values(&a.params)?;
    let sink = csv_sink(&a.csv)?;
    let verify_err = |e: slowvary_verify::VerifyError| match e {
        slowvary_verify::VerifyError::Construction(e) => Failure::construction(e),
        slowvary_verify::VerifyError::Csv(_) | slowvary_verify::VerifyError::Io(_) => Failure::usage(e),
        other => Failure::validation(other),
    };
    match a.experiment {
        Experiment::Dispersion => {
            let fourier = carrier(&spec) != 0.0;
            let (kmin, kmax) = (a.kmin.unwrap_or(if fourier { -0.3 } else { 0.0 }), a.kmax.unwrap_or(if fourier { 0.3 } else { 0.1 }));
            let d = dispersion_table(&spec, order, kmin, kmax, a.samples.unwrap_or(61), &values).map_err(verify_err)?;
            output::write_dispersion(sink, &d.rows).map_err(verify_err)?;
            let tol = a.tol.unwrap_or(EXACT_TOLERANCE);
            eprintln!("max |lambda_full - lambda_model| = {:e}", d.max_err);
            if d.max_err >= tol {
                return Err(Failure::acceptance(format!("dispersion error {:e} is not below {tol:e}", d.max_err)));
            }
        }
        Experiment::ErrorScaling => {
            let s = error_scaling_experiment(
                &spec,
                order,
                a.kmin.unwrap_or(0.02),
                a.kmax.unwrap_or(0.1),
                a.samples.unwrap_or(8),
                &values,
            )
            .map_err(verify_err)?;
            output::write_dispersion(sink, &s.rows).map_err(verify_err)?;
            let tol = a.tol.unwrap_or(0.3);
            match (s.slope, s.expected) {
                (Some(m), Some(e)) => eprintln!("slope = {m:.4} (expected {e} +- {tol})"),
                (Some(m), None) => eprintln!("slope = {m:.4} (model expected exact)"),
                (None, _) => eprintln!("model exact: max error {:e}", s.max_err),
            }
            if !s.accepted(tol) {
                let got = s.slope.map_or(format!("max error {:e}", s.max_err), |m| format!("slope {m:.4}"));
                return Err(Failure::acceptance(format!("error scaling outside the band: {got}")));
            }
        }
        Experiment::Emergence => {
            let mut cfg = SimConfig::new(a.grid, a.length.unwrap_or(2.0 * std::f64::consts::PI * (a.grid / 8) as f64 / 0.1));
            cfg.dt = a.dt;
            cfg.tmax = a.tmax;
            cfg.stride = ((0.1 / a.dt).round() as usize).max(1);
            cfg.scheme = match a.scheme {
                SchemeArg::Spectral => Scheme::Spectral,
                SchemeArg::Fd => Scheme::FiniteDifference,
            };
            cfg.values = values;
            cfg.initial = InitialCondition::Random { seed: seed(a.seed)?, amplitude: a.amplitude, max_harmonic: a.grid / 8 };
            let (e, _) = emergence_experiment(&spec, order, &cfg, (a.fit_start, a.tmax)).map_err(verify_err)?;
            output::write_emergence(sink, &e).map_err(verify_err)?;
            match &e.fit {
                Some(f) => eprintln!("rate = {:.4} (R^2 = {:.4}, accepted [{}, {}])", f.rate, f.r2, a.rate_min, a.rate_max),
                None => eprintln!("no fit: the distance vanished in the window"),
            }
            if !e.rate_in(a.rate_min, a.rate_max) {
                let got = e.fit.map_or("no fit".to_string(), |f| format!("rate {:.4}, R^2 {:.4}", f.rate, f.r2));
                return Err(Failure::acceptance(format!("emergence outside the band: {got}")));
            }
        }
    }
    Ok(())
}

fn cmd_list(verbose: bool, problem: Option<&str>) -> Result<(), Failure> {
    let specs: Vec<ProblemSpec> = catalog().into_iter().filter(|s| problem.is_none_or(|p| s.name == p)).collect();
    if specs.is_empty() {
        return Err(Failure::usage(format!("unknown problem '{}'", problem.unwrap_or_default())));
    }
    let mut out = io::stdout().lock();
    for s in specs {
        let _ = write!(out, "{}", s.describe(verbose));
    }
    Ok(())
}
