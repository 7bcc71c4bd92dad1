//! Argument handling and report rendering for the `fuzzy-dirac` binary.
//!
//! [`run`] takes the raw arguments and the value of `FUZZY_DIRAC_TOL` and
//! returns the exit code together with everything that would be written, so
//! the binary itself is a thin shell around it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use fuzzy_dirac::dirac::{lichnerowicz_table, spectrum};
use fuzzy_dirac::distance::{distance_n2_analytic, distance_numeric, DistanceOptions};
use fuzzy_dirac::geometry::{metric_compatibility_residual, torsion_residual};
use fuzzy_dirac::hilbert::{adjointness_check, verify_integral_laws};
use fuzzy_dirac::reduced::{reduction_report, spin_matrices};
use fuzzy_dirac::spin::verify_axioms;
use fuzzy_dirac::{
    Error, FuzzySphere, InnerProductContext, Parameters, QuantumMetric, SpinData, State, C64, DEFAULT_TOL,
};

pub const SCHEMA: &str = "fuzzy-dirac/1";
pub const TOL_ENV: &str = "FUZZY_DIRAC_TOL";

const DEFAULT_LAMBDA: f64 = 0.25;
const DEFAULT_TRUNCATION: usize = 3;
const SAMPLES: usize = 20;
const SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "fuzzy-dirac", version, about = "Dirac operators and spectral triples on the fuzzy sphere")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// `round`, `diag:a,b,c` or nine comma-separated entries, row-major
    #[arg(long)]
    pub metric: Option<String>,
    /// Deformation parameter
    #[arg(long = "lambda-p", allow_negative_numbers = true)]
    pub lambda_p: Option<f64>,
    /// Truncation degree
    #[arg(long = "L")]
    pub truncation: Option<usize>,
    /// Numerical tolerance; overrides the config file and FUZZY_DIRAC_TOL
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// JSON file supplying defaults for any flag
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the report to this file instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectrum of iD on each block S_l, l ≤ L
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Spin-structure axioms, connection, integral laws and adjointness
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare the model at lambda_p = 1/n with its n×n matrix image
    Reduce {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Spectral distance between two states of M_n
    Distance {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        n: Option<usize>,
        /// Spin coherent state "theta,phi"
        #[arg(long = "state-a", allow_hyphen_values = true)]
        state_a: Option<String>,
        #[arg(long = "state-b", allow_hyphen_values = true)]
        state_b: Option<String>,
        /// Density matrix as JSON rows; entries are numbers or [re, im]
        #[arg(long = "rho-a")]
        rho_a: Option<String>,
        #[arg(long = "rho-b")]
        rho_b: Option<String>,
    },
    /// Residual of D² = Δ_S + curvature on each block
    Lichnerowicz {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub metric: Option<String>,
    pub lambda_p: Option<f64>,
    #[serde(rename = "L")]
    pub truncation: Option<usize>,
    pub tol: Option<f64>,
    pub format: Option<Format>,
    pub n: Option<usize>,
    pub output: Option<PathBuf>,
}

/// RunConfig after merging flags, config file, environment and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub metric: QuantumMetric,
    pub lambda_p: f64,
    pub truncation: usize,
    pub tol: f64,
    pub format: Format,
    pub n: Option<usize>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    fn params(&self) -> Result<Parameters, Failure> {
        Parameters::new(self.lambda_p, self.truncation, self.tol).map_err(usage)
    }

    fn header(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("lambda_p".into(), json!(self.lambda_p));
        m.insert("L".into(), json!(self.truncation));
        m.insert("tol".into(), json!(self.tol));
        m.insert("metric".into(), json!(self.metric.to_row_major()));
        m
    }
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    /// A computation refused the input; reported as a failed check.
    Check(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn check(e: Error) -> Failure {
    match e {
        Error::InvalidParameters(_) | Error::MetricParse(_) | Error::InvalidMatrixSize(_) | Error::InvalidState(_) => {
            Failure::Usage(e.to_string())
        }
        _ => Failure::Check(e.to_string()),
    }
}

struct Report {
    command: &'static str,
    passed: bool,
    body: Map<String, Value>,
    csv: Option<String>,
}

pub fn run<I, T>(args: I, env_tol: Option<&str>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome { code: 0, stdout: text, stderr: String::new() },
                _ => Outcome { code: 2, stdout: String::new(), stderr: text },
            };
        }
    };
    let name = command_name(&cli.command);
    let (report, output) = match execute(&cli.command, env_tol) {
        Ok(r) => r,
        Err(Failure::Usage(msg)) => {
            return Outcome { code: 2, stdout: String::new(), stderr: format!("error: {msg}\n") };
        }
        Err(Failure::Check(msg)) => {
            let mut body = Map::new();
            body.insert("error".into(), json!(msg));
            let report = Report { command: name, passed: false, body, csv: None };
            return emit(&report, None, format!("error: {msg}\n"));
        }
    };
    emit(&report, output.as_deref(), String::new())
}

fn emit(report: &Report, output: Option<&Path>, mut stderr: String) -> Outcome {
    let text = match &report.csv {
        Some(csv) => csv.clone(),
        None => {
            let mut m = Map::new();
            m.insert("schema".into(), json!(SCHEMA));
            m.insert("command".into(), json!(report.command));
            m.insert("passed".into(), json!(report.passed));
            m.extend(report.body.clone());
            let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("report serialises");
            s.push('\n');
            s
        }
    };
    let mut code = if report.passed { 0 } else { 1 };
    let stdout = match output {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                code = 2;
            }
            String::new()
        }
        None => text,
    };
    Outcome { code, stdout, stderr }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Spectrum { .. } => "spectrum",
        Command::Verify { .. } => "verify",
        Command::Reduce { .. } => "reduce",
        Command::Distance { .. } => "distance",
        Command::Lichnerowicz { .. } => "lichnerowicz",
    }
}

fn load_config(path: &Path) -> Result<FileConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))
}

/// Merges flag > config file > environment > default.
pub fn resolve(
    common: &CommonArgs,
    format: Option<Format>,
    n: Option<usize>,
    env_tol: Option<&str>,
) -> Result<RunConfig, String> {
    let file = match &common.config {
        Some(p) => load_config(p).map_err(|f| match f {
            Failure::Usage(m) | Failure::Check(m) => m,
        })?,
        None => FileConfig::default(),
    };
    let env = match env_tol {
        Some(v) => Some(
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("{TOL_ENV}={v:?} is not a number: {e}"))?,
        ),
        None => None,
    };
    let tol = common.tol.or(file.tol).or(env).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(format!("tol must be positive and finite, got {tol}"));
    }
    let metric_text = common.metric.clone().or(file.metric).unwrap_or_else(|| "round".into());
    let metric: QuantumMetric = metric_text.parse().map_err(|e: Error| format!("--metric {metric_text:?}: {e}"))?;
    Ok(RunConfig {
        metric,
        lambda_p: common.lambda_p.or(file.lambda_p).unwrap_or(DEFAULT_LAMBDA),
        truncation: common.truncation.or(file.truncation).unwrap_or(DEFAULT_TRUNCATION),
        tol,
        format: format.or(file.format).unwrap_or(Format::Json),
        n: n.or(file.n),
        output: common.output.clone().or(file.output),
    })
}

fn execute(command: &Command, env_tol: Option<&str>) -> Result<(Report, Option<PathBuf>), Failure> {
    let (common, format, n) = match command {
        Command::Spectrum { common, format } => (common, *format, None),
        Command::Verify { common } | Command::Lichnerowicz { common } => (common, None, None),
        Command::Reduce { common, n } | Command::Distance { common, n, .. } => (common, None, *n),
    };
    let settings = resolve(common, format, n, env_tol).map_err(Failure::Usage)?;
    if settings.format == Format::Csv && !matches!(command, Command::Spectrum { .. }) {
        return Err(Failure::Usage("format csv is only available for spectrum".into()));
    }
    let report = match command {
        Command::Spectrum { .. } => run_spectrum(&settings)?,
        Command::Verify { .. } => run_verify(&settings)?,
        Command::Reduce { common, .. } => run_reduce(&settings, common.lambda_p.is_some())?,
        Command::Distance { state_a, state_b, rho_a, rho_b, .. } => {
            run_distance(&settings, (state_a, rho_a), (state_b, rho_b))?
        }
        Command::Lichnerowicz { .. } => run_lichnerowicz(&settings)?,
    };
    Ok((report, settings.output))
}

fn spin_data(s: &RunConfig) -> Result<SpinData, Failure> {
    SpinData::from_metric(&s.metric, [C64::from(0.0); 3], s.tol).map_err(check)
}

fn require_euclidean(s: &RunConfig, what: &str) -> Result<(), Failure> {
    if s.metric.is_euclidean() {
        Ok(())
    } else {
        let (p, q) = s.metric.signature();
        Err(Failure::Usage(format!(
            "{what} needs a positive-definite metric, got signature ({p}, {q})"
        )))
    }
}

fn run_spectrum(s: &RunConfig) -> Result<Report, Failure> {
    require_euclidean(s, "spectrum")?;
    let data = spin_data(s)?;
    let sphere = FuzzySphere::new(s.params()?);
    let ctx = InnerProductContext::new(&sphere, s.truncation).map_err(check)?;
    let report = spectrum(&sphere, &data, &ctx).map_err(check)?;
    let passed = report.round_formula_residual.is_none_or(|r| r <= 100.0 * s.tol);
    let csv = (s.format == Format::Csv).then(|| {
        let mut out = String::from("l,eigenvalue,multiplicity\n");
        for block in &report.blocks {
            for c in &block.eigenvalues {
                let _ = writeln!(out, "{},{:.12},{}", block.l, c.value + 0.0, c.multiplicity);
            }
        }
        out
    });
    let mut body = s.header();
    body.insert("metric_is_round".into(), json!(s.metric.is_round(s.tol)));
    body.insert("blocks".into(), json!(report.blocks));
    body.insert("spectrum".into(), json!(report.spectrum));
    body.insert("max_hermiticity_residual".into(), json!(report.max_hermiticity_residual));
    body.insert("max_invariance_residual".into(), json!(report.max_invariance_residual));
    body.insert("round_formula_residual".into(), json!(report.round_formula_residual));
    Ok(Report { command: "spectrum", passed, body, csv })
}

fn run_verify(s: &RunConfig) -> Result<Report, Failure> {
    let data = spin_data(s)?;
    let axioms = verify_axioms(&data, s.tol);
    let torsion = torsion_residual(&data.christoffel);
    let compat = metric_compatibility_residual(&s.metric, &data.christoffel);

    let sphere = FuzzySphere::new(s.params()?);
    let laws = verify_integral_laws(&sphere, SAMPLES, SEED).map_err(check)?;
    let mut passed = axioms.max_residual() <= s.tol
        && torsion <= s.tol
        && compat <= s.tol
        && laws.derivative <= s.tol
        && laws.trace <= s.tol
        && laws.star <= s.tol
        && laws.min_gram_eigenvalue > s.tol;

    let mut body = s.header();
    let axiom_value = serde_json::to_value(&axioms).expect("axiom report serialises");
    if let Value::Object(m) = axiom_value {
        body.extend(m);
    }
    body.insert(
        "geometry".into(),
        json!({ "torsion_residual": torsion, "compatibility_residual": compat }),
    );
    body.insert("integral_laws".into(), json!(laws));
    let adjointness = if s.metric.is_euclidean() && laws.min_gram_eigenvalue > s.tol {
        let ctx = InnerProductContext::new(&sphere, s.truncation).map_err(check)?;
        let r = adjointness_check(&sphere, &data, &ctx, 4, SEED).map_err(check)?;
        let scale = 1.0 + s.truncation as f64;
        passed &= r.dirac_symmetry <= s.tol * scale * scale
            && r.j_isometry <= s.tol * scale
            && r.conjugate_symmetry <= s.tol;
        json!(r)
    } else {
        Value::Null
    };
    body.insert("adjointness".into(), adjointness);
    Ok(Report { command: "verify", passed, body, csv: None })
}

fn run_reduce(s: &RunConfig, lambda_given: bool) -> Result<Report, Failure> {
    let n = match s.n {
        Some(n) => n,
        None => {
            let inv = 1.0 / s.lambda_p;
            if inv.is_finite() && inv >= 2.0 && (inv - inv.round()).abs() < 1e-12 {
                inv.round() as usize
            } else {
                return Err(Failure::Usage(format!(
                    "reduce needs --n or lambda_p = 1/n for an integer n ≥ 2, got lambda_p = {}",
                    s.lambda_p
                )));
            }
        }
    };
    if n < 2 {
        return Err(Failure::Usage(format!("--n must be at least 2, got {n}")));
    }
    if lambda_given && s.n.is_some() && (s.lambda_p - 1.0 / n as f64).abs() > 1e-12 {
        return Err(Failure::Usage(format!(
            "lambda_p = {} does not equal 1/n for n = {n}",
            s.lambda_p
        )));
    }
    let data = spin_data(s)?;
    let r = reduction_report(n, &data, SAMPLES, SEED, s.tol).map_err(check)?;
    let passed = r.commutator_residual <= s.tol
        && r.casimir_residual <= s.tol
        && r.homomorphism_residual <= s.tol
        && r.integral_residual <= s.tol
        && r.spectrum_distance.is_none_or(|d| d <= 100.0 * s.tol);
    let mut body = Map::new();
    body.insert("tol".into(), json!(s.tol));
    body.insert("metric".into(), json!(s.metric.to_row_major()));
    if let Value::Object(m) = serde_json::to_value(&r).expect("reduction report serialises") {
        body.extend(m);
    }
    Ok(Report { command: "reduce", passed, body, csv: None })
}

fn parse_angles(text: &str) -> Result<(f64, f64), Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [t, p] = parts.as_slice() else {
        return Err(Failure::Usage(format!("state {text:?} must be \"theta,phi\"")));
    };
    let parse = |x: &str| x.parse::<f64>().map_err(|e| Failure::Usage(format!("state {text:?}: {x:?}: {e}")));
    Ok((parse(t)?, parse(p)?))
}

fn parse_density(text: &str) -> Result<DMatrix<C64>, Failure> {
    let bad = |msg: &str| Failure::Usage(format!("density matrix {text:?}: {msg}"));
    let rows: Vec<Vec<Value>> = serde_json::from_str(text).map_err(|e| bad(&e.to_string()))?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(bad("expected a square array of rows"));
    }
    let entry = |v: &Value| -> Option<C64> {
        match v {
            Value::Number(x) => Some(C64::from(x.as_f64()?)),
            Value::Array(a) if a.len() == 2 => Some(C64::new(a[0].as_f64()?, a[1].as_f64()?)),
            _ => None,
        }
    };
    let mut m = DMatrix::zeros(n, n);
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            m[(r, c)] = entry(v).ok_or_else(|| bad("entries must be numbers or [re, im]"))?;
        }
    }
    Ok(m)
}

fn make_state(
    n: usize,
    label: &str,
    (angles, rho): (&Option<String>, &Option<String>),
    tol: f64,
) -> Result<(State, Option<(f64, f64)>), Failure> {
    match (angles, rho) {
        (Some(a), None) => {
            let (theta, phi) = parse_angles(a)?;
            Ok((State::spin_coherent(n, theta, phi).map_err(check)?, Some((theta, phi))))
        }
        (None, Some(r)) => Ok((State::new(parse_density(r)?, tol.max(1e-12)).map_err(check)?, None)),
        _ => Err(Failure::Usage(format!("give exactly one of --state-{label} and --rho-{label}"))),
    }
}

fn run_distance(
    s: &RunConfig,
    a: (&Option<String>, &Option<String>),
    b: (&Option<String>, &Option<String>),
) -> Result<Report, Failure> {
    require_euclidean(s, "distance")?;
    let n = s.n.unwrap_or(2);
    let rep = spin_matrices(n).map_err(check)?;
    let (sa, angles_a) = make_state(n, "a", a, s.tol)?;
    let (sb, angles_b) = make_state(n, "b", b, s.tol)?;
    for (label, st) in [("a", &sa), ("b", &sb)] {
        if st.dim() != n {
            return Err(Failure::Usage(format!(
                "state {label} has dimension {} but --n is {n}",
                st.dim()
            )));
        }
    }
    let data = spin_data(s)?;
    let result = distance_numeric(&sa, &sb, &rep, &data, &DistanceOptions::default()).map_err(check)?;
    let analytic = match (n, angles_a, angles_b) {
        (2, Some((t1, p1)), Some((t2, p2))) => Some(distance_n2_analytic(t1, p1, t2, p2)),
        _ => None,
    };
    let passed = result.converged && result.certificate_seminorm <= 1.0 + 100.0 * s.tol;
    let mut body = Map::new();
    body.insert("n".into(), json!(n));
    body.insert("tol".into(), json!(s.tol));
    body.insert("metric".into(), json!(s.metric.to_row_major()));
    body.insert("value".into(), json!(result.value));
    body.insert("lower".into(), json!(result.lower));
    body.insert("upper".into(), json!(result.upper));
    body.insert("converged".into(), json!(result.converged));
    body.insert("newton_steps".into(), json!(result.newton_steps));
    body.insert("certificate_seminorm".into(), json!(result.certificate_seminorm));
    body.insert("certificate".into(), json!(result.certificate));
    body.insert("analytic".into(), json!(analytic));
    Ok(Report { command: "distance", passed, body, csv: None })
}

fn run_lichnerowicz(s: &RunConfig) -> Result<Report, Failure> {
    let data = spin_data(s)?;
    let sphere = FuzzySphere::new(s.params()?);
    let ctx = InnerProductContext::new(&sphere, s.truncation).map_err(check)?;
    let rows = lichnerowicz_table(&sphere, &data, &ctx).map_err(check)?;
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let mut body = s.header();
    body.insert("max_residual".into(), json!(worst));
    body.insert("blocks".into(), json!(rows));
    Ok(Report { command: "lichnerowicz", passed: worst <= s.tol, body, csv: None })
}
