mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde_json::{json, Map, Value};
use volform_core::formulas::{jac_cholesky, jac_sd_expanded, jac_svd_measure};
use volform_core::integrator::{
    mc_pinv_check_with, mc_sd_factorization_check_with, PinvVariant, SdVariant,
};
use volform_core::oracle::{verify_suite, Suite};
use volform_core::{
    cholesky, classify_rect, classify_symmetric, jacobian_for, Error, MatrixClass, McResult,
    Spectrum, TolerancePolicy, Transform,
};

use report::{FactorOut, Format, Report, RunConfig, SCHEMA};

const Z_MAX: f64 = 3.0;

#[derive(Parser)]
#[command(
    name = "volform",
    version,
    about = "Jacobians of matrix factorizations, with oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Relative threshold below which eigen/singular values count as zero.
    #[arg(long, global = true, default_value_t = 1e-10)]
    rank_tol: f64,
    /// Relative gap below which two values are treated as equal.
    #[arg(long, global = true, default_value_t = 1e-8)]
    cluster_tol: f64,
    #[arg(long, global = true, default_value_t = 100)]
    trials: usize,
    #[arg(long, global = true, env = "VOLFORM_SEED", default_value_t = 0)]
    seed: u64,
    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 1e-9)]
    rel_tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Include wall-clock time in the report (makes it non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a matrix by signature, rank and multiplicity.
    Classify {
        #[arg(long)]
        input: PathBuf,
    },
    /// Evaluate a closed-form Jacobian at a matrix.
    Jacobian {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        transform: TransformArg,
    },
    /// Check the closed forms against wedge-product and composition oracles.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
    /// Monte Carlo change-of-variables checks.
    Integrate {
        #[arg(long = "case", value_enum)]
        case: IntegrateCase,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    Sd,
    Svd,
    Cholesky,
    Pinv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    #[value(name = "all")]
    All,
    #[value(name = "T1")]
    T1,
    #[value(name = "T2")]
    T2,
    #[value(name = "T3")]
    T3,
    #[value(name = "Eq2")]
    Eq2,
    #[value(name = "SDfull")]
    SdFull,
    #[value(name = "composition")]
    Composition,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::All => Suite::All,
            SuiteArg::T1 => Suite::T1,
            SuiteArg::T2 => Suite::T2,
            SuiteArg::T3 => Suite::T3,
            SuiteArg::Eq2 => Suite::Eq2,
            SuiteArg::SdFull => Suite::SdFull,
            SuiteArg::Composition => Suite::Composition,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegrateCase {
    Sd2,
    Sd3,
    Pinv,
}

/// Failure modes mapped onto exit codes.
enum Failure {
    Input(String),
    Domain(String),
    Internal(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Domain(_) => 3,
            Failure::Internal(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Domain(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Input(_) | Error::Dimension { .. } => Failure::Input(e.to_string()),
            Error::Domain(_) | Error::Unsupported(_) => Failure::Domain(e.to_string()),
            Error::Consistency(_) => Failure::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(pass) => ExitCode::from(if pass { 0 } else { 1 }),
        Err(f) => {
            eprintln!("volform: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let policy = TolerancePolicy::new(cli.rank_tol, cli.cluster_tol)?;
    if cli.rel_tol.is_nan() || cli.rel_tol <= 0.0 {
        return Err(Failure::Input("--rel-tol must be positive".into()));
    }
    let start = Instant::now();
    let (name, input_path, results) = match &cli.command {
        Command::Classify { input } => {
            let a = load(input)?;
            ("classify", Some(input), vec![classify(&a, &policy)?])
        }
        Command::Jacobian { input, transform } => {
            let a = load(input)?;
            (
                "jacobian",
                Some(input),
                vec![jacobian(&a, *transform, &policy)?],
            )
        }
        Command::Verify { suite } => {
            let reports = verify_suite((*suite).into(), cli.trials, cli.seed, cli.rel_tol)?;
            let values = reports.iter().map(to_value).collect();
            ("verify", None, values)
        }
        Command::Integrate { case } => ("integrate", None, integrate(*case, cli)?),
    };
    let pass = results
        .iter()
        .all(|r| r.get("pass").and_then(Value::as_bool).unwrap_or(true));
    let report = Report {
        schema: SCHEMA,
        command: name.to_string(),
        config: RunConfig {
            command: name.to_string(),
            input_path: input_path.map(|p| p.display().to_string()),
            rank_tol: cli.rank_tol,
            cluster_tol: cli.cluster_tol,
            trials: cli.trials,
            seed: cli.seed,
            rel_tol: cli.rel_tol,
            n_samples: cli.samples,
            output_format: cli.format,
        },
        results,
        pass,
        runtime_ms: cli.timing.then(|| start.elapsed().as_millis()),
    };
    let text = report::render(&report, cli.format);
    match &cli.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(pass)
}

fn load(path: &std::path::Path) -> Result<DMatrix<f64>, Failure> {
    input::read_matrix(path).map_err(Failure::Input)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// Symmetric classification for square symmetric input, rectangular otherwise.
fn classify_any(
    a: &DMatrix<f64>,
    policy: &TolerancePolicy,
) -> Result<(MatrixClass, Spectrum), Failure> {
    if a.is_square() {
        match classify_symmetric(a, policy) {
            Err(Error::Input(msg)) if msg.contains("not symmetric") => {}
            other => return Ok(other?),
        }
    }
    Ok(classify_rect(a, policy)?)
}

fn class_object(class: &MatrixClass, spectrum: &Spectrum) -> Map<String, Value> {
    let Value::Object(mut obj) = to_value(class) else {
        unreachable!("classes serialize as objects")
    };
    obj.insert("spectrum".into(), to_value(spectrum));
    obj
}

fn classify(a: &DMatrix<f64>, policy: &TolerancePolicy) -> Result<Value, Failure> {
    let (class, spectrum) = classify_any(a, policy)?;
    Ok(Value::Object(class_object(&class, &spectrum)))
}

fn jacobian(
    a: &DMatrix<f64>,
    transform: TransformArg,
    policy: &TolerancePolicy,
) -> Result<Value, Failure> {
    let mut out = Map::new();
    match transform {
        TransformArg::Cholesky => {
            let parts = cholesky(a, policy)?;
            out.insert("transform".into(), json!("cholesky"));
            out.insert("m".into(), json!(parts.dim()));
            out.insert("diagonal".into(), json!(parts.diagonal()));
            out.insert(
                "jacobian".into(),
                to_value(&FactorOut::from(jac_cholesky(&parts)?)),
            );
        }
        TransformArg::Sd => {
            let (class, spectrum) = classify_symmetric(a, policy)?;
            out = class_object(&class, &spectrum);
            out.insert("transform".into(), json!("sd"));
            let m = a.nrows();
            // Ties annihilate the expanded product; the multiplicity
            // convention evaluates on distinct values instead.
            let full = jac_sd_expanded(&spectrum, m)?;
            out.insert("jacobian".into(), to_value(&FactorOut::from(full)));
            if spectrum.has_multiplicity() {
                let eval = jacobian_for(&class, &spectrum, Transform::SdMeasure)?;
                out.insert(
                    "multiplicity_convention".into(),
                    to_value(&FactorOut::from(eval.factor)),
                );
            }
        }
        TransformArg::Svd => {
            let (class, spectrum) = classify_rect(a, policy)?;
            out = class_object(&class, &spectrum);
            out.insert("transform".into(), json!("svd"));
            let (n, m) = a.shape();
            let sigma = spectrum.positive_clusters().expanded();
            out.insert(
                "jacobian".into(),
                to_value(&FactorOut::from(jac_svd_measure(&sigma, n, m)?)),
            );
            if spectrum.has_multiplicity() {
                let eval = jacobian_for(&class, &spectrum, Transform::SvdMeasure)?;
                out.insert(
                    "multiplicity_convention".into(),
                    to_value(&FactorOut::from(eval.factor)),
                );
            }
        }
        TransformArg::Pinv => {
            let (class, spectrum) = classify_any(a, policy)?;
            out = class_object(&class, &spectrum);
            out.insert("transform".into(), json!("pinv"));
            let eval = jacobian_for(&class, &spectrum, Transform::Pinv)?;
            out.insert("jacobian".into(), to_value(&FactorOut::from(eval.factor)));
            if let Some(c) = eval.composition {
                out.insert("composition".into(), to_value(&FactorOut::from(c)));
                out.insert("discrepancy".into(), json!(eval.discrepancy));
            }
        }
    }
    Ok(Value::Object(out))
}

fn mc_value(r: &McResult, role: &str, pass: bool) -> Value {
    let Value::Object(mut obj) = to_value(r) else {
        unreachable!()
    };
    obj.insert("role".into(), json!(role));
    obj.insert("pass".into(), json!(pass));
    Value::Object(obj)
}

fn integrate(case: IntegrateCase, cli: &Cli) -> Result<Vec<Value>, Failure> {
    let (n, seed) = (cli.samples, cli.seed);
    let mut out = Vec::new();
    match case {
        IntegrateCase::Sd2 | IntegrateCase::Sd3 => {
            let m = if matches!(case, IntegrateCase::Sd2) {
                2
            } else {
                3
            };
            let r = mc_sd_factorization_check_with(m, n, seed, SdVariant::Faithful)?;
            out.push(mc_value(&r, "check", r.passes(Z_MAX)));
            for v in [SdVariant::DropPow2, SdVariant::PerturbExponent] {
                let r = mc_sd_factorization_check_with(m, n, seed, v)?;
                out.push(mc_value(&r, "control", true));
            }
        }
        IntegrateCase::Pinv => {
            let r = mc_pinv_check_with(3, 2, 2, n, seed, PinvVariant::Faithful)?;
            out.push(mc_value(&r, "check", r.passes(Z_MAX)));
            let r = mc_pinv_check_with(3, 2, 2, n, seed, PinvVariant::PerturbExponent)?;
            out.push(mc_value(&r, "control", true));
        }
    }
    Ok(out)
}
