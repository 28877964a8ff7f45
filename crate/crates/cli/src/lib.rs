//! The `betatree` command line: eigenvalues, β sweeps, heat-flow runs,
//! resolvent solves, the property suites, and the `β ≥ 1/2` diagnostic.
//!
//! Exit codes: 0 on success, 1 on configuration or domain errors (one line on
//! stderr naming the offending flag), 2 when `verify` records violations.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use betatree::evolution::{decay_rate, solve, EvolutionConfig, Scheme};
use betatree::io::{
    level_function_csv, parse_level_function_csv, parse_tree_function_csv, supnorm_csv, to_json_pretty,
    tree_function_csv, write_atomic, EigenReport, EvolutionSummary,
};
use betatree::spectrum::{
    default_depth, fit_inverse_square, principal_eigenvalue, solve_resolvent, supercritical_diagnostic,
    DepthEigenvalue, InverseSquareFit, DEFAULT_TOL,
};
use betatree::verify::{run_all, VerifyConfig};
use betatree::{BetaWeight, TreeFunction, TruncatedTree};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "betatree", version, about = "The beta-Laplacian on regular m-branching trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Principal Dirichlet eigenvalue for beta in (0, 1/2).
    Eigen(EigenArgs),
    /// lambda1 over an evenly spaced beta grid, as CSV.
    Sweep(SweepArgs),
    /// Heat flow u_t = Δ_β u on a truncated tree.
    Evolve(EvolveArgs),
    /// Solves Δ_β φ + λ φ = -1 on the level chain.
    Resolvent(ResolventArgs),
    /// Runs the operator, spectrum and evolution property suites.
    Verify(VerifyArgs),
    /// Truncated eigenvalues for beta in [1/2, 1), where no principal eigenvalue exists.
    DiagnoseSupercritical(DiagnoseArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct EigenArgs {
    #[arg(long)]
    beta: f64,
    /// Truncation depth L; defaults to min(400, largest depth without overflow).
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Branching number, recorded in the report (the eigenvalue does not depend on it).
    #[arg(long)]
    m: Option<usize>,
    /// JSON report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Eigenfunction as "level,value" CSV.
    #[arg(long)]
    eigenfunction_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.05)]
    beta_min: f64,
    #[arg(long, default_value_t = 0.45)]
    beta_max: f64,
    /// Number of grid points, endpoints included.
    #[arg(long, default_value_t = 9)]
    steps: usize,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// CSV "beta,lambda1,lower,upper,residual"; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
enum Initial {
    Eigen,
    RootIndicator,
    Constant(f64),
    File(PathBuf),
}

impl FromStr for Initial {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eigen" => Ok(Initial::Eigen),
            "root-indicator" => Ok(Initial::RootIndicator),
            _ => {
                if let Some(c) = s.strip_prefix("constant:") {
                    let c: f64 = c.parse().map_err(|e| format!("bad constant {c:?}: {e}"))?;
                    if !c.is_finite() {
                        return Err(format!("constant must be finite, got {c}"));
                    }
                    Ok(Initial::Constant(c))
                } else if let Some(p) = s.strip_prefix("file:") {
                    Ok(Initial::File(PathBuf::from(p)))
                } else {
                    Err(format!("expected eigen, root-indicator, constant:<c> or file:<path>, got {s:?}"))
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Implicit,
    Picard,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct EvolveArgs {
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    depth: usize,
    /// eigen | root-indicator | constant:<c> | file:<path> (tree "path,value" or "level,value" CSV).
    #[arg(long, default_value = "root-indicator")]
    initial: Initial,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Implicit)]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 1e-10)]
    picard_tol: f64,
    #[arg(long, default_value_t = 200)]
    picard_max_iter: usize,
    /// Trapezoid points per step for the Picard kernel; 0 integrates it exactly.
    #[arg(long, default_value_t = 1)]
    quad_points: usize,
    /// Backward Euler runs at dt, dt/2, ... combined by Richardson extrapolation.
    #[arg(long, default_value_t = 1)]
    extrapolation: usize,
    /// Start of the window [fit-from, t-end] for the fitted decay rate.
    #[arg(long, default_value_t = 0.0)]
    fit_from: f64,
    /// JSON summary; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV "t,supnorm".
    #[arg(long)]
    supnorm_out: Option<PathBuf>,
    /// Final state as "path,value" CSV.
    #[arg(long)]
    snapshot_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
#[command(group(ArgGroup::new("level").required(true).args(["lambda", "lambda_frac"])))]
struct ResolventArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    depth: usize,
    #[arg(long)]
    lambda: Option<f64>,
    /// λ as a fraction of the truncated principal eigenvalue.
    #[arg(long)]
    lambda_frac: Option<f64>,
    /// "level,value" CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    operator_cases: usize,
    #[arg(long, default_value_t = 1e-12)]
    commutation_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    eigen_tol: f64,
    #[arg(long, default_value_t = 100)]
    comparison_pairs: usize,
    #[arg(long, default_value_t = 1e-12)]
    comparison_tol: f64,
    /// JSON report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct DiagnoseArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    depths: Vec<usize>,
    /// Relative bisection tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure attributed to a flag, printed as one line.
#[derive(Debug)]
struct Failure {
    flag: &'static str,
    message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.flag, self.message)
    }
}

fn blame(flag: &'static str) -> impl Fn(betatree::Error) -> Failure {
    move |e| Failure { flag, message: e.to_string() }
}

fn fail<T>(flag: &'static str, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure { flag, message: message.into() })
}

enum Outcome {
    Done,
    Violations(usize),
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Eigen(a) => eigen(a),
        Command::Sweep(a) => sweep(a),
        Command::Evolve(a) => evolve(a),
        Command::Resolvent(a) => resolvent(a),
        Command::Verify(a) => verify(a),
        Command::DiagnoseSupercritical(a) => diagnose(a),
    };
    match result {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::Violations(n)) => {
            eprintln!("verify: {n} violation(s); see the report for details");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn emit(path: Option<&Path>, flag: &'static str, contents: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_atomic(p, contents.as_bytes()).map_err(blame(flag)),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn weight(beta: f64) -> Result<BetaWeight, Failure> {
    BetaWeight::new(beta).map_err(blame("--beta"))
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if !(tol > 0.0 && tol.is_finite()) {
        return fail("--tol", format!("must be positive, got {tol}"));
    }
    Ok(())
}

fn depth_for(bw: &BetaWeight, depth: Option<usize>) -> Result<usize, Failure> {
    let depth = depth.unwrap_or_else(|| default_depth(bw));
    bw.check_depth(depth).map_err(blame("--depth"))?;
    Ok(depth)
}

fn principal(bw: &BetaWeight, depth: usize, tol: f64) -> Result<betatree::EigenResult, Failure> {
    principal_eigenvalue(bw, depth, tol).map_err(|e| match e {
        betatree::Error::Domain(ref msg) if msg.contains("depth") => blame("--depth")(e),
        e => blame("--beta")(e),
    })
}

fn eigen(a: EigenArgs) -> Result<Outcome, Failure> {
    let bw = weight(a.beta)?;
    check_tol(a.tol)?;
    if let Some(m) = a.m {
        if m < 2 {
            return fail("--m", format!("branching number must be at least 2, got {m}"));
        }
    }
    let depth = depth_for(&bw, a.depth)?;
    let r = principal(&bw, depth, a.tol)?;
    let json = to_json_pretty(&EigenReport::new(&r, a.m)).map_err(blame("--out"))?;
    if let Some(p) = &a.eigenfunction_out {
        emit(Some(p), "--eigenfunction-out", &level_function_csv(&r.eigenfunction))?;
    }
    emit(a.out.as_deref(), "--out", &json)?;
    Ok(Outcome::Done)
}

fn sweep(a: SweepArgs) -> Result<Outcome, Failure> {
    check_tol(a.tol)?;
    if !(a.beta_min > 0.0 && a.beta_min < 0.5) {
        return fail("--beta-min", format!("must lie in (0, 1/2), got {}", a.beta_min));
    }
    if !(a.beta_max >= a.beta_min && a.beta_max < 0.5) {
        return fail("--beta-max", format!("must lie in [--beta-min, 1/2), got {}", a.beta_max));
    }
    if a.steps == 0 || (a.steps == 1 && a.beta_max != a.beta_min) {
        return fail("--steps", format!("need at least 2 points for a range, got {}", a.steps));
    }
    let grid: Vec<f64> = (0..a.steps)
        .map(|i| {
            if a.steps == 1 {
                a.beta_min
            } else {
                a.beta_min + (a.beta_max - a.beta_min) * i as f64 / (a.steps - 1) as f64
            }
        })
        .collect();
    // Validate every grid point before computing any of them.
    let weights = grid
        .iter()
        .map(|&b| {
            let bw = weight(b)?;
            let depth = depth_for(&bw, a.depth)?;
            Ok((bw, depth))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let rows = weights
        .par_iter()
        .map(|(bw, depth)| principal(bw, *depth, a.tol))
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut csv = String::from("beta,lambda1,lower,upper,residual\n");
    for r in &rows {
        csv.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?}\n",
            r.beta, r.lambda1, r.bounds.lower, r.bounds.upper, r.interior_residual
        ));
    }
    emit(a.out.as_deref(), "--out", &csv)?;
    Ok(Outcome::Done)
}

fn initial_datum(a: &EvolveArgs, bw: &BetaWeight, tree: &TruncatedTree) -> Result<TreeFunction, Failure> {
    match &a.initial {
        Initial::Eigen => {
            if !(a.beta > 0.0 && a.beta < 0.5) {
                return fail("--initial", format!("eigen needs --beta in (0, 1/2), got {}", a.beta));
            }
            let r = principal(bw, a.depth, DEFAULT_TOL)?;
            r.eigenfunction.to_tree(tree).map_err(blame("--initial"))
        }
        Initial::RootIndicator => TreeFunction::from_fn(tree, |i| if i == 0 { 1.0 } else { 0.0 }).map_err(blame("--initial")),
        Initial::Constant(c) => TreeFunction::from_fn(tree, |_| *c).map_err(blame("--initial")),
        Initial::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure { flag: "--initial", message: format!("cannot read {}: {e}", path.display()) })?;
            let parsed = if text.trim_start().starts_with("level") {
                parse_level_function_csv(&text).and_then(|l| {
                    if l.depth() != tree.depth() {
                        return Err(betatree::Error::Shape(format!(
                            "file has {} levels, --depth {} needs {}",
                            l.depth() + 1,
                            tree.depth(),
                            tree.depth() + 1
                        )));
                    }
                    l.to_tree(tree)
                })
            } else {
                parse_tree_function_csv(&text, tree)
            };
            parsed.map_err(|e| Failure { flag: "--initial", message: format!("{}: {e}", path.display()) })
        }
    }
}

fn evolve(a: EvolveArgs) -> Result<Outcome, Failure> {
    let bw = weight(a.beta)?;
    let tree = TruncatedTree::new(a.m, a.depth).map_err(blame("--m"))?;
    bw.check_depth(a.depth).map_err(blame("--depth"))?;
    let config = EvolutionConfig {
        scheme: match a.scheme {
            SchemeArg::Implicit => Scheme::Implicit,
            SchemeArg::Picard => Scheme::Picard,
        },
        dt: a.dt,
        t_end: a.t_end,
        picard_tol: a.picard_tol,
        picard_max_iter: a.picard_max_iter,
        quad_points_per_dt: a.quad_points,
        extrapolation: a.extrapolation,
    };
    config.steps().map_err(blame("--dt"))?;
    if !(a.fit_from >= 0.0 && a.fit_from < a.t_end) {
        return fail("--fit-from", format!("must lie in [0, --t-end), got {}", a.fit_from));
    }
    let f = initial_datum(&a, &bw, &tree)?;
    let lambda1_ref = (a.beta > 0.0 && a.beta < 0.5 && a.depth >= 2)
        .then(|| principal_eigenvalue(&bw, a.depth, DEFAULT_TOL).ok().map(|r| r.lambda1))
        .flatten();
    let traj = solve(&bw, &f, &config).map_err(|e| match e {
        betatree::Error::IterationLimit { .. } => blame("--picard-max-iter")(e),
        e => blame("--scheme")(e),
    })?;
    let fitted_rate = decay_rate(&traj, (a.fit_from, a.t_end)).map_err(blame("--fit-from"))?;
    let summary = EvolutionSummary {
        beta: a.beta,
        m: Some(a.m),
        depth: a.depth,
        scheme: config.scheme,
        dt: a.dt,
        t_end: a.t_end,
        fitted_rate: Some(fitted_rate),
        lambda1_ref,
    };
    if let Some(p) = &a.supnorm_out {
        emit(Some(p), "--supnorm-out", &supnorm_csv(&traj))?;
    }
    if let Some(p) = &a.snapshot_out {
        let last = traj.tree_state(&tree, traj.states.len() - 1).map_err(blame("--snapshot-out"))?;
        emit(Some(p), "--snapshot-out", &tree_function_csv(&last))?;
    }
    emit(a.out.as_deref(), "--out", &to_json_pretty(&summary).map_err(blame("--out"))?)?;
    Ok(Outcome::Done)
}

fn resolvent(a: ResolventArgs) -> Result<Outcome, Failure> {
    let bw = weight(a.beta)?;
    bw.check_depth(a.depth).map_err(blame("--depth"))?;
    let lambda = match (a.lambda, a.lambda_frac) {
        (Some(l), None) => l,
        (None, Some(frac)) => {
            if !(frac > 0.0 && frac < 1.0) {
                return fail("--lambda-frac", format!("must lie in (0, 1), got {frac}"));
            }
            frac * principal(&bw, a.depth, DEFAULT_TOL)?.lambda1
        }
        _ => return fail("--lambda", "give exactly one of --lambda and --lambda-frac"),
    };
    let flag = if a.lambda.is_some() { "--lambda" } else { "--lambda-frac" };
    let phi = solve_resolvent(&bw, lambda, a.depth).map_err(blame(flag))?;
    emit(a.out.as_deref(), "--out", &level_function_csv(&phi))?;
    Ok(Outcome::Done)
}

fn verify(a: VerifyArgs) -> Result<Outcome, Failure> {
    for (flag, tol) in [("--commutation-tol", a.commutation_tol), ("--eigen-tol", a.eigen_tol), ("--comparison-tol", a.comparison_tol)] {
        if !(tol > 0.0 && tol.is_finite()) {
            return fail(flag, format!("must be positive, got {tol}"));
        }
    }
    let config = VerifyConfig {
        seed: a.seed,
        operator_cases: a.operator_cases,
        commutation_tol: a.commutation_tol,
        eigen_tol: a.eigen_tol,
        comparison_pairs: a.comparison_pairs,
        comparison_tol: a.comparison_tol,
        ..Default::default()
    };
    let report = run_all(&config).map_err(blame("--seed"))?;
    emit(a.out.as_deref(), "--out", &to_json_pretty(&report).map_err(blame("--out"))?)?;
    match report.violation_count() {
        0 => Ok(Outcome::Done),
        n => Ok(Outcome::Violations(n)),
    }
}

#[derive(Serialize)]
struct Diagnosis {
    beta: f64,
    table: Vec<DepthEigenvalue>,
    fit: Option<InverseSquareFit>,
}

fn diagnose(a: DiagnoseArgs) -> Result<Outcome, Failure> {
    let bw = weight(a.beta)?;
    if a.beta < 0.5 {
        return fail("--beta", format!("diagnose-supercritical needs beta in [1/2, 1), got {}; use eigen", a.beta));
    }
    check_tol(a.tol)?;
    if a.depths.is_empty() {
        return fail("--depths", "need at least one depth");
    }
    for &d in &a.depths {
        bw.check_depth(d).map_err(blame("--depths"))?;
    }
    let table = supercritical_diagnostic(&bw, &a.depths, a.tol).map_err(blame("--beta"))?;
    let fit = fit_inverse_square(&table).ok();
    let json = to_json_pretty(&Diagnosis { beta: a.beta, table, fit }).map_err(blame("--out"))?;
    emit(a.out.as_deref(), "--out", &json)?;
    Ok(Outcome::Done)
}
