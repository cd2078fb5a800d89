//! The `equator-forge` command line.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 usage or input error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use evalexpr::{Context, EvalexprError, EvalexprResult, Node};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::jacobi::default_order;
use crate::analysis::{
    area_scan, equator_area_with_error, funk_radon, jacobi_spectrum_probe, left_invariant_metric, relative_spread,
    write_area_csv, write_convergence_csv, write_spectrum_csv, SpectrumReport,
};
use crate::correspondence::{metric_from_curv, ConstructionOptions, MetricField};
use crate::error::{Error, Result};
use crate::io::{
    bump_to_json, read_matrix, read_metric_source, read_tensor, tensor_to_json, write_atomic, MetricSource,
};
use crate::sphere::{random_equator, Equator};
use crate::tensor::{act, fubini_study, random_positive, round};
use crate::verification::{verify_metric, verify_tensor, BumpMetric, SuiteConfig, Tolerances};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "EQUATOR_FORGE_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "equator-forge",
    version,
    about = "Metrics on spheres whose equators are all minimal"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generator tensor (or the bump fixture) as JSON.
    Gen(GenArgs),
    /// Run the verification suite on a tensor or metric file.
    Verify(VerifyArgs),
    /// Areas of seeded random equators, as CSV.
    Area(AreaArgs),
    /// Galerkin spectrum of the Jacobi operator of one equator in S^3, as CSV.
    Spectrum(SpectrumArgs),
    /// Funk-Radon transform of a function over seeded random equators, as CSV.
    Radon(RadonArgs),
    /// Apply a linear map to a tensor: (R.T)(x,y,z,w) = |det T|^(-4/(n+1)) R(Tx,Ty,Tz,Tw).
    Act(ActArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Round,
    FubiniStudy,
    LeftInvariant,
    Random,
    /// Negative-control metric fixture (not a tensor).
    Bump,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    /// Sphere dimension (round, random, bump).
    #[arg(long)]
    pub n: Option<usize>,
    /// Complex dimension of CP^m for fubini-study; the sphere is S^(2m+1).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Perturbation size for random tensors, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub equators: usize,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, default_value_t = 100)]
    pub circles: usize,
    /// Samples per great circle, per group element, and for the pointwise checks.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 5)]
    pub group_elements: usize,
    #[arg(long)]
    pub tol_roundtrip: Option<f64>,
    #[arg(long)]
    pub tol_mean_curvature: Option<f64>,
    #[arg(long)]
    pub tol_killing: Option<f64>,
    #[arg(long)]
    pub tol_metric_equation: Option<f64>,
    #[arg(long)]
    pub tol_equivariance: Option<f64>,
    #[arg(long)]
    pub tol_antipodal: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub equators: usize,
    /// Quadrature order (Gauss-Legendre nodes per axis on S^2, samples scale for Monte Carlo).
    #[arg(long, default_value_t = 32)]
    pub order: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// CSV destination; a JSON run summary then goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AreaArgs {
    #[command(flatten)]
    pub scan: ScanArgs,
}

#[derive(Debug, Args)]
pub struct RadonArgs {
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Expression in the ambient coordinates x0, ..., xn, e.g. "1 + 0.5 * x0^2".
    #[arg(long, default_value = "1")]
    pub function: String,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    pub input: PathBuf,
    /// Harmonic degree L of the Galerkin basis.
    #[arg(long, default_value_t = 12)]
    pub degree: usize,
    /// Run several degrees and write the convergence table instead, e.g. "8,12,16".
    #[arg(long, value_delimiter = ',')]
    pub convergence: Vec<usize>,
    /// Quadrature order; defaults to max(L + 8, 24).
    #[arg(long)]
    pub order: Option<usize>,
    /// Equator normal as comma-separated coordinates; seeded random when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub normal: Vec<f64>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Eigenvalues with |λ| at most this count as null.
    #[arg(long, default_value_t = 1e-3)]
    pub tol_nullity: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ActArgs {
    pub input: PathBuf,
    /// JSON matrix: {"format": "matrix-v1", "rows": [...]} or a bare array of rows.
    pub matrix: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| Error::Domain(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a, stdout),
        Command::Verify(a) => cmd_verify(&a, stdout),
        Command::Area(a) => cmd_area(&a, stdout),
        Command::Spectrum(a) => cmd_spectrum(&a, stdout),
        Command::Radon(a) => cmd_radon(&a, stdout),
        Command::Act(a) => cmd_act(&a, stdout),
    }
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => Ok(stdout.write_all(bytes)?),
    }
}

/// Run summaries go to stdout when the data went to a file, otherwise to stderr.
fn summary(out: Option<&Path>, stdout: &mut dyn Write, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    if out.is_some() {
        stdout.write_all(text.as_bytes())?;
    } else {
        eprint!("{text}");
    }
    Ok(())
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

fn cmd_gen(a: &GenArgs, stdout: &mut dyn Write) -> Result<i32> {
    let tag = |mut v: Value| {
        v["version"] = json!(VERSION);
        Some(v)
    };
    let text = match a.kind {
        GenKind::Round => {
            let n = a.n.ok_or_else(|| usage("gen round needs --n"))?;
            tensor_to_json(&round(n)?, tag(json!({"kind": "round", "n": n})))?
        }
        GenKind::FubiniStudy => {
            let m = a.m.ok_or_else(|| usage("gen fubini-study needs --m"))?;
            if m < 2 {
                return Err(usage(format!("fubini-study needs m >= 2, got {m}")));
            }
            tensor_to_json(&fubini_study(m)?, tag(json!({"kind": "fubini-study", "m": m})))?
        }
        GenKind::LeftInvariant => {
            if a.n.is_some_and(|n| n != 3) {
                return Err(usage("left-invariant metrics exist only for n = 3"));
            }
            let li = left_invariant_metric(a.a, a.b, a.c)?;
            let construction = json!({
                "kind": "left-invariant",
                "a": a.a, "b": a.b, "c": a.c,
                "recovery_residual": li.recovery_residual,
                "metric_equation_residual": li.metric_equation_residual,
            });
            tensor_to_json(&li.generator, tag(construction))?
        }
        GenKind::Random => {
            let n = a.n.ok_or_else(|| usage("gen random needs --n"))?;
            if !(0.0..=1.0).contains(&a.eps) {
                return Err(usage(format!("--eps must lie in [0, 1], got {}", a.eps)));
            }
            let r = random_positive(n, a.eps, a.seed)?;
            eprintln!("positivity margin {:.6} at eps {:.6}", r.margin, r.eps);
            let construction = json!({
                "kind": "random", "n": n, "seed": a.seed,
                "eps_requested": a.eps, "eps": r.eps, "margin": r.margin,
            });
            tensor_to_json(&r.tensor, tag(construction))?
        }
        GenKind::Bump => {
            let b = BumpMetric::standard(a.n.unwrap_or(3));
            b.validate()?;
            bump_to_json(&b)?
        }
    };
    emit(a.out.as_deref(), stdout, text.as_bytes())?;
    Ok(EXIT_OK)
}

fn suite_config(a: &VerifyArgs) -> SuiteConfig {
    let d = Tolerances::default();
    SuiteConfig {
        seed: a.seed,
        equators: a.equators,
        points_per_equator: a.points,
        circles: a.circles,
        samples_per_circle: a.samples,
        group_elements: a.group_elements,
        samples: a.samples,
        tolerances: Tolerances {
            roundtrip: a.tol_roundtrip.unwrap_or(d.roundtrip),
            mean_curvature: a.tol_mean_curvature.unwrap_or(d.mean_curvature),
            killing_constancy: a.tol_killing.unwrap_or(d.killing_constancy),
            metric_equation: a.tol_metric_equation.unwrap_or(d.metric_equation),
            equivariance: a.tol_equivariance.unwrap_or(d.equivariance),
            antipodal: a.tol_antipodal.unwrap_or(d.antipodal),
        },
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    input: String,
    seed: u64,
    #[serde(flatten)]
    body: &'a T,
}

fn envelope<'a, T: Serialize>(command: &'static str, input: &Path, seed: u64, body: &'a T) -> Envelope<'a, T> {
    Envelope {
        tool: "equator-forge",
        version: VERSION,
        command,
        input: input.display().to_string(),
        seed,
        body,
    }
}

fn cmd_verify(a: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = suite_config(a);
    let source = read_metric_source(&a.input)?;
    let report = match &source {
        MetricSource::Tensor(t) => verify_tensor(&t.tensor, &cfg)?,
        MetricSource::Bump(b) => verify_metric(b, &cfg)?,
    };
    let body = json!({
        "config": cfg,
        "checks": report,
        "failed": report.failed(),
        "pass": report.passed(),
    });
    let text = serde_json::to_string_pretty(&envelope("verify", &a.input, a.seed, &body))? + "\n";
    emit(a.out.as_deref(), stdout, text.as_bytes())?;
    for name in report.failed() {
        let c = &report.checks[name];
        eprintln!("FAILED {name}: residual {:e} > tolerance {:e}", c.residual, c.tolerance);
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Loads a tensor file (building `g_R`) or the bump fixture.
fn load_metric(path: &Path) -> Result<Box<dyn MetricField>> {
    Ok(match read_metric_source(path)? {
        MetricSource::Tensor(t) => Box::new(metric_from_curv(&t.tensor, ConstructionOptions::default())?),
        MetricSource::Bump(b) => Box::new(b),
    })
}

fn seeded_equators(n: usize, count: usize, seed: u64) -> Vec<Equator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_equator(&mut rng, n)).collect()
}

fn scan_summary(command: &'static str, s: &ScanArgs, values: &[f64], extra: Value) -> Result<Value> {
    let mut body = json!({
        "equators": s.equators,
        "order": s.order,
        "relative_spread": relative_spread(values),
        "min": values.iter().cloned().fold(f64::INFINITY, f64::min),
        "max": values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    });
    if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
        b.extend(e);
    }
    Ok(serde_json::to_value(envelope(command, &s.input, s.seed, &body))?)
}

fn check_scan(s: &ScanArgs) -> Result<()> {
    if s.equators == 0 || s.order == 0 {
        return Err(usage("--equators and --order must be positive"));
    }
    Ok(())
}

fn cmd_area(a: &AreaArgs, stdout: &mut dyn Write) -> Result<i32> {
    let s = &a.scan;
    check_scan(s)?;
    let g = load_metric(&s.input)?;
    let equators = seeded_equators(g.n(), s.equators, s.seed);
    let areas = area_scan(g.as_ref(), &equators, s.order, s.seed)?;
    let (_, err) = equator_area_with_error(g.as_ref(), &equators[0], s.order, s.seed)?;
    let mut buf = Vec::new();
    write_area_csv(&mut buf, &equators, &areas)?;
    emit(s.out.as_deref(), stdout, &buf)?;
    let info = scan_summary("area", s, &areas, json!({"error_estimate": err}))?;
    summary(s.out.as_deref(), stdout, &info)?;
    Ok(EXIT_OK)
}

/// A user expression in `x0, ..., xn`.
pub struct SphereFunction {
    node: Node,
    dim: usize,
}

struct Coords(Vec<evalexpr::Value>);

impl Context for Coords {
    fn get_value(&self, identifier: &str) -> Option<&evalexpr::Value> {
        let i: usize = identifier.strip_prefix('x')?.parse().ok()?;
        self.0.get(i)
    }

    fn call_function(&self, identifier: &str, _argument: &evalexpr::Value) -> EvalexprResult<evalexpr::Value> {
        Err(EvalexprError::FunctionIdentifierNotFound(identifier.to_string()))
    }

    fn are_builtin_functions_disabled(&self) -> bool {
        false
    }

    fn set_builtin_functions_disabled(&mut self, _disabled: bool) -> EvalexprResult<()> {
        Err(EvalexprError::CustomMessage(
            "builtin functions cannot be toggled".into(),
        ))
    }
}

impl SphereFunction {
    /// Parses `expr` and checks that it evaluates to a number on `R^dim`.
    pub fn parse(expr: &str, dim: usize) -> Result<Self> {
        let node = evalexpr::build_operator_tree(expr).map_err(|e| usage(format!("bad --function: {e}")))?;
        let f = Self { node, dim };
        f.try_eval(&DVector::from_element(dim, 0.5))?;
        Ok(f)
    }

    fn try_eval(&self, x: &DVector<f64>) -> Result<f64> {
        let ctx = Coords(x.iter().map(|c| evalexpr::Value::Float(*c)).collect());
        self.node
            .eval_number_with_context(&ctx)
            .map_err(|e| usage(format!("--function cannot be evaluated in x0..x{}: {e}", self.dim - 1)))
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.try_eval(x).unwrap_or(f64::NAN)
    }
}

fn cmd_radon(a: &RadonArgs, stdout: &mut dyn Write) -> Result<i32> {
    let s = &a.scan;
    check_scan(s)?;
    let g = load_metric(&s.input)?;
    let f = SphereFunction::parse(&a.function, g.n() + 1)?;
    let equators = seeded_equators(g.n(), s.equators, s.seed);
    let values = equators
        .iter()
        .map(|v| funk_radon(g.as_ref(), &|x| f.eval(x), v, s.order, s.seed))
        .collect::<Result<Vec<f64>>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(usage("--function produced a non-finite value"));
    }
    let mut buf = Vec::new();
    write_area_csv(&mut buf, &equators, &values)?;
    // same columns as `area`, with the transform in place of the area
    let text = String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?;
    let text = text.replacen(",area\n", ",radon\n", 1);
    emit(s.out.as_deref(), stdout, text.as_bytes())?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let info = scan_summary("radon", s, &values, json!({"function": a.function, "mean": mean}))?;
    summary(s.out.as_deref(), stdout, &info)?;
    Ok(EXIT_OK)
}

fn cmd_spectrum(a: &SpectrumArgs, stdout: &mut dyn Write) -> Result<i32> {
    let g = load_metric(&a.input)?;
    if g.n() != 3 {
        return Err(Error::Unsupported(format!(
            "spectrum needs a metric on S^3, got S^{}",
            g.n()
        )));
    }
    let v = if a.normal.is_empty() {
        seeded_equators(3, 1, a.seed).remove(0)
    } else {
        Equator::from_slice(&a.normal)?
    };
    let degrees = if a.convergence.is_empty() {
        vec![a.degree]
    } else {
        a.convergence.clone()
    };
    let reports = degrees
        .iter()
        .map(|&l| jacobi_spectrum_probe(g.as_ref(), &v, l, a.order.unwrap_or(default_order(l)), a.tol_nullity))
        .collect::<Result<Vec<SpectrumReport>>>()?;
    let mut buf = Vec::new();
    if a.convergence.is_empty() {
        write_spectrum_csv(&mut buf, &reports[0].eigenvalues)?;
    } else {
        write_convergence_csv(&mut buf, &reports)?;
    }
    emit(a.out.as_deref(), stdout, &buf)?;
    let counts: Vec<Value> = reports
        .iter()
        .map(|r| json!({"degree": r.degree, "negative": r.negative, "near_zero": r.near_zero}))
        .collect();
    let body = json!({
        "normal": v.normal().as_slice(),
        "tol_nullity": a.tol_nullity,
        "order": a.order,
        "counts": counts,
    });
    let info = serde_json::to_value(envelope("spectrum", &a.input, a.seed, &body))?;
    summary(a.out.as_deref(), stdout, &info)?;
    Ok(EXIT_OK)
}

fn cmd_act(a: &ActArgs, stdout: &mut dyn Write) -> Result<i32> {
    let r = read_tensor(&a.input)?;
    let t = read_matrix(&a.matrix)?;
    let out = act(&r.tensor, &t)?;
    let rows: Vec<Vec<f64>> = (0..t.matrix().nrows())
        .map(|i| t.matrix().row(i).iter().cloned().collect())
        .collect();
    let construction = json!({
        "kind": "act",
        "matrix": rows,
        "source": r.construction,
        "version": VERSION,
    });
    emit(
        a.out.as_deref(),
        stdout,
        tensor_to_json(&out, Some(construction))?.as_bytes(),
    )?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (Result<i32>, String) {
        let cli = Cli::try_parse_from(std::iter::once("equator-forge").chain(args.iter().cloned())).unwrap();
        let mut out = Vec::new();
        let code = run(cli, &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn gen_round_writes_a_tensor_to_stdout() {
        let (code, text) = run_args(&["gen", "round", "--n", "2"]);
        assert_eq!(code.unwrap(), EXIT_OK);
        let t = crate::io::parse_tensor(&text).unwrap();
        assert_eq!(t.tensor.coeffs(), round(2).unwrap().coeffs());
        assert_eq!(t.construction.unwrap()["version"], VERSION);
    }

    #[test]
    fn invalid_parameters_are_usage_errors() {
        assert!(run_args(&["gen", "fubini-study", "--m", "1"]).0.is_err());
        assert!(run_args(&["gen", "round"]).0.is_err());
        assert!(run_args(&["gen", "random", "--n", "3", "--eps", "2"]).0.is_err());
        assert!(run_args(&["gen", "left-invariant", "--a", "0"]).0.is_err());
        assert!(Cli::try_parse_from(["equator-forge", "gen", "hyperbolic"]).is_err());
    }

    #[test]
    fn sphere_functions() {
        let f = SphereFunction::parse("1 + 0.5 * x0^2 - x3", 4).unwrap();
        let x = DVector::from_vec(vec![2.0, 0.0, 0.0, 1.0]);
        assert_eq!(f.eval(&x), 2.0);
        assert_eq!(SphereFunction::parse("1", 3).unwrap().eval(&x), 1.0);
        assert!(SphereFunction::parse("x9", 4).is_err());
        assert!(SphereFunction::parse("y + 1", 4).is_err());
        assert!(SphereFunction::parse("1 +", 4).is_err());
    }
}
