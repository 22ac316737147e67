//! Command-line front end for the `calque` library: JSON problem files in,
//! reports, traces, and solutions out.
//!
//! Every command reads one problem file, applies `--set` dotted-path
//! overrides, runs the matching pipeline, and writes into `--out`:
//!
//! * `certify` writes `report.json`
//! * `solve` and `fixed-point` write `trace.csv`
//! * `elliptic` and `ns-steady` write `trace.csv` and `solution.csv`
//! * `ns-evolve` writes `trace.csv`, `solution.csv`, and `energy.csv`
//! * `sweep` writes `sweep.csv`
//!
//! Stdout carries exactly one JSON line summarizing the run. Exit codes:
//! 0 for converged / PASS, 2 for a determinate negative (FAIL, INCONCLUSIVE,
//! non-convergence, violated coefficient envelope), 3 for I/O or
//! configuration problems. Same input file and seed means byte-identical
//! output files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use calque::certify::{run_certification, CertificateReport, SamplerConfig};
use calque::pde::elliptic::{sample_on_grid, solve_elliptic, EllipticProblem};
use calque::pde::ns::{
    build_ns, evolve_ns, solve_ns_steady, verify_ns_conditions, EvolveStatus, NsConfig, NsProblem,
};
use calque::registry::{self, Fixture, FixtureSpec};
use calque::solve::{solve_comparison, solve_fixed_point, Outcome, SolveConfig, SolveTrace};
use calque::spaces::{ScalarFunction, SpaceDescriptor, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Certify,
    Solve,
    FixedPoint,
    Elliptic,
    NsSteady,
    NsEvolve,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Solve => "solve",
            Command::FixedPoint => "fixed-point",
            Command::Elliptic => "elliptic",
            Command::NsSteady => "ns-steady",
            Command::NsEvolve => "ns-evolve",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Raw `key=value` pairs; keys address the problem file with dots.
    pub overrides: Vec<String>,
}

#[derive(Debug)]
pub enum CliError {
    Io(std::io::Error),
    Parse { message: String, line: usize, column: usize },
    Override(String),
    Config(String),
    Lib(calque::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Parse { message, line, column } => {
                write!(f, "config parse error at line {line}, column {column}: {message}")
            }
            CliError::Override(s) => write!(f, "bad override: {s}"),
            CliError::Config(s) => write!(f, "{s}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<calque::Error> for CliError {
    fn from(e: calque::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    /// 2 for determinate mathematical negatives, 3 for plumbing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) => match e {
                calque::Error::CoefficientEnvelopeViolated { .. }
                | calque::Error::QuadratureUnderResolved { .. }
                | calque::Error::RadiusGuard { .. }
                | calque::Error::SurrogateSolveFailed { .. }
                | calque::Error::SingularJacobian { .. }
                | calque::Error::DegenerateDenominator { .. }
                | calque::Error::AllPairsDegenerate => 2,
                _ => 3,
            },
            _ => 3,
        }
    }

    /// Wire name of the error kind, for the stdout summary.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "Io",
            CliError::Parse { .. } => "ConfigParse",
            CliError::Override(_) => "BadOverride",
            CliError::Config(_) => "Config",
            CliError::Lib(e) => match e {
                calque::Error::NonFiniteEntry { .. } => "NonFiniteEntry",
                calque::Error::DimensionMismatch { .. } => "DimensionMismatch",
                calque::Error::UnsupportedNorm { .. } => "UnsupportedNorm",
                calque::Error::OutOfDomain { .. } => "OutOfDomain",
                calque::Error::SingularJacobian { .. } => "SingularJacobian",
                calque::Error::SurrogateSolveFailed { .. } => "SurrogateSolveFailed",
                calque::Error::DegenerateDenominator { .. } => "DegenerateDenominator",
                calque::Error::AllPairsDegenerate => "AllPairsDegenerate",
                calque::Error::CoefficientEnvelopeViolated { .. } => {
                    "CoefficientEnvelopeViolated"
                }
                calque::Error::QuadratureUnderResolved { .. } => "QuadratureUnderResolved",
                calque::Error::RadiusGuard { .. } => "RadiusGuard",
                calque::Error::InvalidParameter { .. } => "InvalidParameter",
            },
        }
    }
}

/// The problem file. Every field is optional at parse time; each command
/// states what it actually needs.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    /// Registry name ("linear", "sin-perturbed", "diag-monotone",
    /// "elliptic-1d", "elliptic-2d", "ns-steady-2d"; "cos-contraction" for
    /// the fixed-point command).
    pub operator: Option<String>,
    /// Alternative to `operator` for PDE problems: "elliptic", "ns-steady",
    /// or "ns-evolve", with the parameters spelled out here.
    #[serde(rename = "type")]
    pub kind: Option<String>,
    pub dim: Option<usize>,
    pub radius: Option<f64>,
    pub scale: Option<f64>,
    pub identity_surrogate: Option<bool>,
    pub amplitude: Option<f64>,
    pub grid_n: Option<usize>,
    pub envelope_b: Option<f64>,
    pub envelope_c: Option<f64>,
    pub modes: Option<usize>,
    pub nu: Option<f64>,
    pub delta: Option<f64>,
    pub mu: Option<f64>,
    pub quad_points: Option<usize>,
    pub phi: Option<PhiSpec>,
    /// Explicit target entries in the codomain.
    pub target: Option<Vec<f64>>,
    /// Target magnitude; the direction is drawn from the run seed.
    pub target_norm: Option<f64>,
    pub forcing: Option<ForcingSpec>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub solver: Option<SolverSpec>,
    pub sampler: Option<SamplerSpec>,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSpec {
    /// "one" or "rational".
    pub kind: String,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub rho: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    /// Raw entries: grid values for elliptic problems, coefficient
    /// functionals for Galerkin ones.
    pub entries: Option<Vec<f64>>,
    /// `amplitude_* sin(pi x) sin(pi y)` body force components (Galerkin).
    pub amplitude_x: Option<f64>,
    pub amplitude_y: Option<f64>,
    /// Elliptic only: take the manufactured product-of-sines solution and
    /// use its image as the right-hand side, so the solve must recover it.
    pub manufactured: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub radius_guard: Option<bool>,
    pub sigma_hint: Option<f64>,
    pub m0_hint: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub n_sphere: Option<usize>,
    pub n_radii: Option<usize>,
    pub n_pairs: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub radii: Vec<f64>,
    /// Fraction of each row's certified radius used as the target magnitude
    /// (default 0.9). Ignored for rows listed in `ynorms`.
    pub target_fraction: Option<f64>,
    /// Explicit per-row target magnitudes, paired with `radii`.
    pub ynorms: Option<Vec<f64>>,
}

/// Runs one command end to end and prints the single-line JSON summary.
/// Never panics on bad input; every failure maps to exit 2 or 3.
pub fn run(cfg: &RunConfig) -> i32 {
    match execute(cfg) {
        Ok((mut summary, code)) => {
            attach(&mut summary, cfg.command, code);
            println!("{summary}");
            code
        }
        Err(e) => {
            let code = e.exit_code();
            let mut summary = json!({ "error": e.to_string(), "kind": e.kind() });
            attach(&mut summary, cfg.command, code);
            println!("{summary}");
            code
        }
    }
}

fn attach(summary: &mut Value, command: Command, code: i32) {
    if let Value::Object(map) = summary {
        map.insert("command".into(), Value::String(command.name().into()));
        map.insert("exit".into(), Value::Number(code.into()));
    }
}

fn execute(cfg: &RunConfig) -> Result<(Value, i32), CliError> {
    let file = load_problem(&cfg.input_path, &cfg.overrides)?;
    fs::create_dir_all(&cfg.output_dir)?;
    match cfg.command {
        Command::Certify => cmd_certify(cfg, &file),
        Command::Solve => cmd_solve(cfg, &file),
        Command::FixedPoint => cmd_fixed_point(cfg, &file),
        Command::Elliptic => cmd_elliptic(cfg, &file),
        Command::NsSteady => cmd_ns_steady(cfg, &file),
        Command::NsEvolve => cmd_ns_evolve(cfg, &file),
        Command::Sweep => cmd_sweep(cfg, &file),
    }
}

/// Reads the JSON file, applies dotted-path overrides, and deserializes.
pub fn load_problem(path: &Path, overrides: &[String]) -> Result<ProblemFile, CliError> {
    let text = fs::read_to_string(path)?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        message: e.to_string(),
        line: e.line(),
        column: e.column(),
    })?;
    for pair in overrides {
        apply_override(&mut value, pair)?;
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
}

/// `a.b.c=VALUE`: descends (creating objects as needed) and sets the leaf.
/// The value is parsed as JSON when possible, kept as a string otherwise.
fn apply_override(root: &mut Value, pair: &str) -> Result<(), CliError> {
    let (key, raw) = pair
        .split_once('=')
        .ok_or_else(|| CliError::Override(format!("{pair} (expected key=value)")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Override(format!("{pair} (empty key segment)")));
    }
    let leaf: Value = serde_json::from_str(raw).unwrap_or(Value::String(raw.to_string()));
    let mut node = root;
    let mut segments = key.split('.').peekable();
    while let Some(seg) = segments.next() {
        let map = node
            .as_object_mut()
            .ok_or_else(|| CliError::Override(format!("{key} crosses a non-object value")))?;
        if segments.peek().is_none() {
            map.insert(seg.to_string(), leaf);
            return Ok(());
        }
        node = map.entry(seg.to_string()).or_insert_with(|| json!({}));
    }
    unreachable!("split('.') yields at least one segment");
}

fn fixture_spec(file: &ProblemFile) -> FixtureSpec {
    FixtureSpec {
        dim: file.dim,
        radius: file.radius,
        scale: file.scale,
        identity_surrogate: file.identity_surrogate,
        amplitude: file.amplitude,
        grid_n: file.grid_n,
        envelope_b: file.envelope_b,
        envelope_c: file.envelope_c,
        modes: file.modes,
        nu: file.nu,
    }
}

fn build_phi(spec: &PhiSpec) -> Result<ScalarFunction, CliError> {
    match spec.kind.as_str() {
        "one" => Ok(ScalarFunction::one()),
        "rational" => {
            let c0 = spec
                .c0
                .ok_or_else(|| CliError::Config("rational phi needs c0".into()))?;
            ScalarFunction::rational(
                c0,
                spec.c1.unwrap_or(1.0),
                spec.rho.unwrap_or(1.0),
                spec.sigma.unwrap_or(1.0),
            )
            .map_err(CliError::Lib)
        }
        other => Err(CliError::Config(format!("unknown phi kind \"{other}\""))),
    }
}

fn ns_config(file: &ProblemFile) -> Result<NsConfig, CliError> {
    Ok(NsConfig {
        modes: file.modes.unwrap_or(8),
        nu: file.nu.unwrap_or(0.1),
        radius: file.radius.unwrap_or(8.0),
        quad_points: file.quad_points,
        phi: file.phi.as_ref().map(build_phi).transpose()?,
        delta: file.delta,
        mu: file.mu.unwrap_or(0.0),
    })
}

fn build_fixture(file: &ProblemFile) -> Result<Fixture, CliError> {
    if let Some(name) = &file.operator {
        return registry::build(name, &fixture_spec(file)).map_err(CliError::Lib);
    }
    match file.kind.as_deref() {
        Some("elliptic") => {
            let name = if file.dim == Some(2) { "elliptic-2d" } else { "elliptic-1d" };
            registry::build(name, &fixture_spec(file)).map_err(CliError::Lib)
        }
        Some("ns-steady") | Some("ns-evolve") => {
            build_ns(&ns_config(file)?).map(Fixture::Ns).map_err(CliError::Lib)
        }
        Some(other) => Err(CliError::Config(format!("unknown problem type \"{other}\""))),
        None => Err(CliError::Config("problem file needs \"operator\" or \"type\"".into())),
    }
}

fn solve_config(file: &ProblemFile) -> SolveConfig {
    let mut cfg = SolveConfig::default();
    if let Some(s) = &file.solver {
        if let Some(tol) = s.tol {
            cfg.tol = tol;
        }
        if let Some(n) = s.max_iter {
            cfg.max_iter = n;
        }
        if let Some(g) = s.radius_guard {
            cfg.radius_guard = g;
        }
        cfg.sigma_hint = s.sigma_hint.or(cfg.sigma_hint);
        cfg.m0_hint = s.m0_hint.or(cfg.m0_hint);
    }
    cfg
}

fn sampler_config(file: &ProblemFile, seed: u64) -> SamplerConfig {
    let mut cfg = SamplerConfig { seed, ..SamplerConfig::default() };
    if let Some(s) = &file.sampler {
        if let Some(n) = s.n_sphere {
            cfg.n_sphere = n;
        }
        if let Some(n) = s.n_radii {
            cfg.n_radii = n;
        }
        if let Some(n) = s.n_pairs {
            cfg.n_pairs = n;
        }
    }
    cfg
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let v = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        if v.is_finite() {
            return v;
        }
    }
}

/// A unit-norm direction in `space`, scaled to `magnitude`.
fn seeded_target(
    space: &SpaceDescriptor,
    magnitude: f64,
    seed: u64,
) -> Result<Vector, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x7461);
    loop {
        let entries: Vec<f64> = (0..space.dim()).map(|_| gaussian(&mut rng)).collect();
        let v = Vector::new(space.clone(), entries).map_err(CliError::Lib)?;
        let n = v.norm().map_err(CliError::Lib)?;
        if n > 1e-12 {
            return Ok(v.scaled(magnitude / n));
        }
    }
}

fn target_vector(file: &ProblemFile, fixture: &Fixture, seed: u64) -> Result<Vector, CliError> {
    let codomain = fixture.decomposition().f().codomain().clone();
    if let Some(entries) = &file.target {
        return Vector::new(codomain, entries.clone()).map_err(CliError::Lib);
    }
    if let Some(n) = file.target_norm {
        return seeded_target(&codomain, n, seed);
    }
    Err(CliError::Config("solve needs \"target\" or \"target_norm\"".into()))
}

fn outcome_name(o: &Outcome) -> &'static str {
    match o {
        Outcome::Converged { .. } => "Converged",
        Outcome::NonContractive { .. } => "NonContractive",
        Outcome::LeftBall { .. } => "LeftBall",
        Outcome::MaxIter { .. } => "MaxIter",
        Outcome::SurrogateFailure { .. } => "SurrogateFailure",
        Outcome::PatchStall { .. } => "PatchStall",
    }
}

fn outcome_residual(o: &Outcome) -> Option<f64> {
    match o {
        Outcome::Converged { residual, .. }
        | Outcome::MaxIter { residual, .. }
        | Outcome::PatchStall { residual, .. } => Some(*residual),
        _ => None,
    }
}

// ---- writers ----------------------------------------------------------

#[derive(Serialize)]
struct JsonReport<'a> {
    mu: &'a [(f64, f64)],
    nu: &'a [(f64, f64)],
    k: f64,
    k1: f64,
    sigma: Option<f64>,
    m0: Option<usize>,
    delta0: f64,
    r1: Option<f64>,
    verdict: &'a str,
    gaps: &'a [String],
    seed: u64,
}

fn write_report(dir: &Path, report: &CertificateReport) -> Result<(), CliError> {
    let doc = JsonReport {
        mu: &report.mu,
        nu: &report.nu,
        k: report.k,
        k1: report.k1,
        sigma: report.sigma,
        m0: report.m0,
        delta0: report.delta0,
        r1: report.r1,
        verdict: report.verdict.as_str(),
        gaps: &report.gaps,
        seed: report.seed,
    };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    Ok(())
}

#[derive(Serialize)]
struct TraceSummary<'a> {
    outcome: &'a str,
    iterations: usize,
    shift_norm: f64,
    residual: Option<f64>,
    telescoping_defect: f64,
    reanchor_count: usize,
}

fn write_trace(dir: &Path, trace: &SolveTrace) -> Result<(), CliError> {
    let mut text = String::from("m,res_norm,df0_norm,step_norm\n");
    for r in &trace.records {
        text.push_str(&format!("{},{},{},{}\n", r.m, r.res_norm, r.df0_norm, r.step_norm));
    }
    let summary = TraceSummary {
        outcome: outcome_name(&trace.outcome),
        iterations: trace.records.len(),
        shift_norm: trace.shift_norm,
        residual: outcome_residual(&trace.outcome),
        telescoping_defect: trace.telescoping_defect,
        reanchor_count: trace.reanchor_count,
    };
    text.push_str(&serde_json::to_string(&summary).map_err(|e| CliError::Config(e.to_string()))?);
    text.push('\n');
    fs::write(dir.join("trace.csv"), text)?;
    Ok(())
}

fn write_grid_solution(dir: &Path, problem: &EllipticProblem, u: &Vector) -> Result<(), CliError> {
    let grid = problem.grid();
    let n = grid.n();
    let h = grid.h();
    let mut text = String::new();
    if grid.dim() == 1 {
        text.push_str("x,value\n");
        for (i, v) in u.entries().iter().enumerate() {
            text.push_str(&format!("{},{}\n", (i as f64 + 1.0) * h, v));
        }
    } else {
        text.push_str("x,y,value\n");
        for j in 0..n {
            for i in 0..n {
                let v = u.entries()[j * n + i];
                text.push_str(&format!(
                    "{},{},{}\n",
                    (i as f64 + 1.0) * h,
                    (j as f64 + 1.0) * h,
                    v
                ));
            }
        }
    }
    fs::write(dir.join("solution.csv"), text)?;
    Ok(())
}

fn write_mode_solution(dir: &Path, prob: &NsProblem, c: &Vector) -> Result<(), CliError> {
    let mut text = String::from("i,j,coefficient\n");
    for ((i, j), v) in prob.modes().iter().zip(c.entries()) {
        text.push_str(&format!("{i},{j},{v}\n"));
    }
    fs::write(dir.join("solution.csv"), text)?;
    Ok(())
}

// ---- commands ---------------------------------------------------------

fn cmd_certify(cfg: &RunConfig, file: &ProblemFile) -> Result<(Value, i32), CliError> {
    let fixture = build_fixture(file)?;
    let sampler = sampler_config(file, cfg.seed);
    let report = run_certification(fixture.decomposition(), &sampler)?;
    write_report(&cfg.output_dir, &report)?;
    let code = if report.verdict == calque::certify::Verdict::Pass { 0 } else { 2 };
    let summary = json!({
        "verdict": report.verdict.as_str(),
        "sigma": report.sigma,
        "delta0": report.delta0,
        "r1": report.r1,
    });
    Ok((summary, code))
}

fn solve_summary(trace: &SolveTrace) -> (Value, i32) {
    let code = if trace.outcome.converged().is_some() { 0 } else { 2 };
    let summary = json!({
        "outcome": outcome_name(&trace.outcome),
        "iterations": trace.records.len(),
        "residual": outcome_residual(&trace.outcome),
    });
    (summary, code)
}

fn cmd_solve(cfg: &RunConfig, file: &ProblemFile) -> Result<(Value, i32), CliError> {
    let fixture = build_fixture(file)?;
    let y = target_vector(file, &fixture, cfg.seed)?;
    let trace =
        solve_comparison(fixture.decomposition(), &y, &fixture.start(), &solve_config(file))?;
    write_trace(&cfg.output_dir, &trace)?;
    Ok(solve_summary(&trace))
}

fn cmd_fixed_point(cfg: &RunConfig, file: &ProblemFile) -> Result<(Value, i32), CliError> {
    let name = file.operator.as_deref().unwrap_or("cos-contraction");
    let f1 = registry::build_f1(name, &fixture_spec(file))?;
    let space = f1.domain().clone();
    let y = match (&file.target, file.target_norm) {
        (Some(entries), _) => Vector::new(space.clone(), entries.clone())?,
        (None, Some(n)) => seeded_target(&space, n, cfg.seed)?,
        (None, None) => Vector::zeros(space.clone()),
    };
    let start = Vector::zeros(space);
    let trace = solve_fixed_point(&f1, &y, &start, &solve_config(file))?;
    write_trace(&cfg.output_dir, &trace)?;
    let (mut summary, code) = solve_summary(&trace);
    if let (Value::Object(map), Some((x, _))) = (&mut summary, trace.outcome.converged()) {
        if x.entries().len() == 1 {
            map.insert("fixed_point".into(), json!(x.entries()[0]));
        }
    }
    Ok((summary, code))
}

/// Manufactured solution of the elliptic entries: the product of sines, and
/// the right-hand side is its image, so the solve must reproduce it.
fn manufactured_rhs(problem: &EllipticProblem) -> Result<(Vector, Vector), CliError> {
    let grid = problem.grid();
    let samples = if grid.dim() == 1 {
        sample_on_grid(grid, |x, _| (std::f64::consts::PI * x).sin())
    } else {
        sample_on_grid(grid, |x, y| {
            (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin()
        })
    };
    let u_star = Vector::new(problem.domain().clone(), samples)?;
    let rhs = problem.decomposition().f().eval(&u_star)?;
    Ok((u_star, rhs))
}

fn cmd_elliptic(cfg: &RunConfig, file: &ProblemFile) -> Result<(Value, i32), CliError> {
    let fixture = build_fixture(file)?;
    let problem = fixture
        .as_elliptic()
        .ok_or_else(|| CliError::Config("elliptic command needs an elliptic problem".into()))?;

    let explicit = file.forcing.as_ref().and_then(|f| f.entries.clone());
    let (reference, rhs) = match explicit {
        Some(entries) => (None, Vector::new(problem.codomain().clone(), entries)?),
        None => {
            let (u_star, rhs) = manufactured_rhs(problem)?;
            (Some(u_star), rhs)
        }
    };

    let trace = solve_elliptic(problem, &rhs, &solve_config(file))?;
    write_trace(&cfg.output_dir, &trace)?;
    let (mut summary, code) = solve_summary(&trace);
    if let Some((u, _)) = trace.outcome.converged() {
        write_grid_solution(&cfg.output_dir, problem, u)?;
        if let (Value::Object(map), Some(u_star)) = (&mut summary, reference) {
            let err = u.sub(&u_star)?.norm()?;
            map.insert("manufactured_error".into(), json!(err));
        }
    }
    Ok((summary, code))
}

fn ns_forcing(file: &ProblemFile, prob: &NsProblem) -> Result<Vector, CliError> {
    match &file.forcing {
        Some(f) if f.entries.is_some() => {
            let entries = f.entries.clone().expect("checked");
            Vector::new(prob.coefficient_space().clone(), entries).map_err(CliError::Lib)
        }
        Some(f) => {
            let ax = f.amplitude_x.unwrap_or(0.0);
            let ay = f.amplitude_y.unwrap_or(0.0);
            prob.forcing_from_field(|x, y| {
                let s = (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin();
                (ax * s, ay * s)
            })
            .map_err(CliError::Lib)
        }
        None => Ok(Vector::zeros(prob.coefficient_space().clone())),
    }
}

fn cmd_ns_steady(cfg: &RunConfig, file: &ProblemFile) -> Result<(Value, i32), CliError> {
    let fixture = build_fixture(file)?;
    let prob = fixture
        .as_ns()
        .ok_or_else(|| CliError::Config("ns-steady needs a Galerkin flow problem".into()))?;

    let conditions = verify_ns_conditions(prob, 64, cfg.seed)?;
    if !conditions.all_pass() {
        let failed: Vec<&str> = conditions
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.label)
            .collect();
        return Ok((json!({ "conditions": "FAIL", "failed": failed }), 2));
    }

    let forcing = ns_forcing(file, prob)?;
    let trace = solve_ns_steady(prob, &forcing, &solve_config(file))?;
    write_trace(&cfg.output_dir, &trace)?;
    let (mut summary, code) = solve_summary(&trace);
    if let Some((c, _)) = trace.outcome.converged() {
        write_mode_solution(&cfg.output_dir, prob, c)?;
        if let Value::Object(map) = &mut summary {
            map.insert("conditions".into(), json!("PASS"));
            map.insert("velocity_norm".into(), json!(prob.v_norm(c)));
        }
    }
    Ok((summary, code))
}

fn cmd_ns_evolve(cfg: &RunConfig, file: &ProblemFile) -> Result<(Value, i32), CliError> {
    let fixture = build_fixture(file)?;
    let prob = fixture
        .as_ns()
        .ok_or_else(|| CliError::Config("ns-evolve needs a Galerkin flow problem".into()))?;
    let forcing = ns_forcing(file, prob)?;
    let dt = file.dt.unwrap_or(0.1);
    let t_end = file.t_end.unwrap_or(1.0);

    let evo = evolve_ns(prob, &forcing, dt, t_end, &solve_config(file))?;

    let mut energy = String::from("step,time,kinetic,dissipation,work,slack,satisfied\n");
    for r in &evo.records {
        energy.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.step, r.time, r.kinetic, r.dissipation, r.work, r.slack, r.satisfied
        ));
    }
    fs::write(cfg.output_dir.join("energy.csv"), energy)?;
    if let Some(trace) = evo.traces.last() {
        write_trace(&cfg.output_dir, trace)?;
    }
    let last = evo.states.last().expect("initial state always present");
    write_mode_solution(&cfg.output_dir, prob, last)?;

    let (status, code) = match evo.status {
        EvolveStatus::Completed => ("Completed".to_string(), 0),
        EvolveStatus::StepRejected { step } => (format!("StepRejected at step {step}"), 2),
    };
    let summary = json!({
        "status": status,
        "steps": evo.records.len(),
        "final_kinetic": evo.records.last().map(|r| r.kinetic),
    });
    Ok((summary, code))
}

fn cmd_sweep(cfg: &RunConfig, file: &ProblemFile) -> Result<(Value, i32), CliError> {
    let sw = file
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a \"sweep\" section".into()))?;
    if sw.radii.is_empty() {
        return Err(CliError::Config("sweep needs at least one radius".into()));
    }
    let fraction = sw.target_fraction.unwrap_or(0.9);

    let mut text = String::from("r,ynorm,sigma,delta0,outcome\n");
    let mut all_converged = true;
    for (row, &r) in sw.radii.iter().enumerate() {
        let mut row_file = file.clone();
        row_file.radius = Some(r);
        let fixture = build_fixture(&row_file)?;
        let report = run_certification(fixture.decomposition(), &sampler_config(file, cfg.seed))?;

        let ynorm = match sw.ynorms.as_ref().and_then(|v| v.get(row)) {
            Some(&n) => n,
            None => fraction * report.r1.unwrap_or(r),
        };
        let y = seeded_target(
            fixture.decomposition().f().codomain(),
            ynorm,
            cfg.seed.wrapping_add(row as u64),
        )?;
        let trace =
            solve_comparison(fixture.decomposition(), &y, &fixture.start(), &solve_config(file))?;
        if trace.outcome.converged().is_none() {
            all_converged = false;
        }
        let sigma = report.sigma.map(|s| s.to_string()).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r,
            ynorm,
            sigma,
            report.delta0,
            outcome_name(&trace.outcome)
        ));
    }
    fs::write(cfg.output_dir.join("sweep.csv"), text)?;
    let code = if all_converged { 0 } else { 2 };
    Ok((json!({ "rows": sw.radii.len(), "all_converged": all_converged }), code))
}
