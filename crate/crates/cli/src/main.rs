//! `suborder`: command-line driver for subspace-ordering experiments.
//!
//! Exit codes: 0 success, 2 invalid input, 3 realization refused,
//! 4 internal bound violation, 5 simulation impossible.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use suborder_core::examples::{four_lines, greedy_trap_family, random_lines, random_matrix, FamilyParams};
use suborder_core::fmatrix::{from_constellation, realize, realize_clamped};
use suborder_core::io::{self, Input};
use suborder_core::mapsim::error_norms_tol;
use suborder_core::ordering::{additive_cost, greedy, optimal, report, tsp_to_mtsp};
use suborder_core::{Constellation, Error, FriedrichsMatrix, Permutation, WeightedGraph, DEFAULT_TOL};

#[derive(Parser)]
#[command(name = "suborder", version, about = "Subspace orderings for alternating projections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build subspaces whose Friedrichs matrix is the given matrix.
    Realize(RealizeArgs),
    /// Compare the greedy ordering with the optimal one.
    Report(ReportArgs),
    /// Run alternating projections and record ||T^n - P_M||.
    Simulate(SimulateArgs),
    /// Reduce an additive TSP instance to an ordering problem and solve it.
    Tsp(TspArgs),
    /// Write a generated matrix or constellation.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Intersection-detection tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args)]
struct MatrixSource {
    /// Matrix (.json or .csv) or constellation (.json) file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Use the four-line example where greedy is not optimal.
    #[arg(long, alias = "paper-example")]
    four_lines: bool,
    /// Family instance `n,c,delta` (matrix of size 2n).
    #[arg(long, value_parser = parse_family)]
    family: Option<FamilyParams>,
}

#[derive(Args)]
struct RealizeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Replace entries equal to 1 by 1 - eta instead of refusing.
    #[arg(long)]
    clamp: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    source: MatrixSource,
    /// Human-readable output with a 4-decimal matrix table.
    #[arg(long)]
    pretty: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimulateArgs {
    /// Matrix (realized before simulating) or constellation file.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, alias = "paper-example")]
    four_lines: bool,
    /// Random lines: number of lines.
    #[arg(long)]
    lines: Option<usize>,
    /// Ambient dimension for --lines (default: number of lines).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ordering as 1-based indices, e.g. 1,4,2,3.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["greedy", "optimal"])]
    sigma: Option<Vec<usize>>,
    #[arg(long, conflicts_with = "optimal")]
    greedy: bool,
    #[arg(long)]
    optimal: bool,
    /// Number of cycles.
    #[arg(long = "n", default_value_t = 10)]
    n_max: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Clamp 1-entries of a matrix input to 1 - eta so it can be realized.
    #[arg(long)]
    clamp: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TspArgs {
    /// Additive instance `{"n": N, "weights": [[...]]}`.
    #[arg(long)]
    input: PathBuf,
    /// Where to write the reduced matrix (JSON).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, alias = "paper-example")]
    four_lines: bool,
    #[arg(long, value_parser = parse_family)]
    family: Option<FamilyParams>,
    /// Random matrix of this size.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    /// Resample until all off-diagonal values differ.
    #[arg(long)]
    distinct: bool,
    /// Random lines constellation with this many lines.
    #[arg(long)]
    lines: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit the Friedrichs matrix of a constellation source instead of the constellation.
    #[arg(long)]
    matrix: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    pretty: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<FamilyParams, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err("expected n,c,delta".into());
    }
    let n = parts[0].parse::<usize>().map_err(|e| e.to_string())?;
    let c = parts[1].parse::<f64>().map_err(|e| e.to_string())?;
    let delta = parts[2].parse::<f64>().map_err(|e| e.to_string())?;
    FamilyParams::new(n, c, delta).map_err(|e| e.to_string())
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl fmt::Display) -> Self {
        Failure { code, message: message.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnitEntry { .. } => 3,
            Error::BoundViolation(_) => 4,
            _ => 2,
        };
        Failure::new(code, e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::new(2, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> CliResult<Input> {
    io::load_input(path).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn load_matrix(src: &MatrixSource, tol: f64) -> CliResult<FriedrichsMatrix> {
    let chosen = [src.input.is_some(), src.four_lines, src.family.is_some()]
        .iter()
        .filter(|&&b| b)
        .count();
    if chosen != 1 {
        return Err(Failure::new(2, "give exactly one of --input, --four-lines, --family"));
    }
    if let Some(p) = &src.input {
        return Ok(match load(p)? {
            Input::Matrix(c) => c,
            Input::Constellation(k) => from_constellation(&k, tol)?,
        });
    }
    if src.four_lines {
        return Ok(from_constellation(&four_lines(), tol)?);
    }
    Ok(greedy_trap_family(src.family.as_ref().expect("checked above"))?)
}

fn cmd_realize(args: RealizeArgs) -> CliResult<()> {
    let c = match load(&args.input)? {
        Input::Matrix(c) => c,
        Input::Constellation(_) => return Err(Failure::new(2, "realize expects a matrix file")),
    };
    let k: Constellation = match args.clamp {
        Some(eta) => {
            if c.has_unit_entry() {
                eprintln!("warning: entries equal to 1 clamped to {}", 1.0 - eta);
            }
            realize_clamped(&c, eta)?
        }
        None => realize(&c)?,
    };
    let back = from_constellation(&k, args.common.tol)?;
    emit(args.common.output.as_deref(), &(io::constellation_to_json(&k)? + "\n"))?;
    eprintln!("round-trip max entrywise error: {}", io::fmt_f64(back.max_abs_diff(&c)));
    Ok(())
}

fn cmd_report(args: ReportArgs) -> CliResult<()> {
    let c = load_matrix(&args.source, args.common.tol)?;
    let r = report(&c)?;
    let text = if args.pretty {
        let mut s = io::matrix_pretty(&c);
        s.push_str(&format!(
            "r_* = {:.4e} at {}\nr_G = {:.4e} at {}\nr_G / sqrt(r_*) = {:.4}\ngeneric: {}\nr_* <= r_G: {}\nr_G <= sqrt(r_*): {} (strict: {})\n",
            r.r_star, r.sigma_star, r.r_greedy, r.sigma_greedy, r.ratio, r.generic, r.lower_ok, r.upper_ok, r.upper_strict
        ));
        s
    } else {
        io::to_json(&r)? + "\n"
    };
    emit(args.common.output.as_deref(), &text)
}

fn simulation_source(args: &SimulateArgs) -> CliResult<Constellation> {
    let chosen = [args.input.is_some(), args.four_lines, args.lines.is_some()]
        .iter()
        .filter(|&&b| b)
        .count();
    if chosen != 1 {
        return Err(Failure::new(2, "give exactly one of --input, --four-lines, --lines"));
    }
    if args.four_lines {
        return Ok(four_lines());
    }
    if let Some(n) = args.lines {
        return Ok(random_lines(n, args.dim.unwrap_or(n), args.seed)?);
    }
    match load(args.input.as_ref().expect("checked above"))? {
        Input::Constellation(k) => Ok(k),
        Input::Matrix(c) => match args.clamp {
            Some(eta) => Ok(realize_clamped(&c, eta)?),
            None => realize(&c).map_err(|e| match e {
                Error::UnitEntry { .. } => Failure::new(
                    5,
                    format!("{e}; pass a constellation or --clamp to simulate"),
                ),
                other => other.into(),
            }),
        },
    }
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let k = simulation_source(&args)?;
    let tol = args.common.tol;
    let sigma = if let Some(s) = &args.sigma {
        Permutation::from_one_based(s)?
    } else if args.greedy || args.optimal {
        let c = from_constellation(&k, tol)?;
        if args.greedy {
            greedy(&c)?.ordering.sigma
        } else {
            optimal(&c)?.sigma
        }
    } else {
        Permutation::identity(k.len())
    };
    let curve = error_norms_tol(&k, &sigma, args.n_max, tol)?;
    let text = match args.format {
        Format::Csv => io::curve_to_csv(&curve),
        Format::Json => io::to_json(&curve)? + "\n",
    };
    emit(args.common.output.as_deref(), &text)?;

    let est = curve.rate_estimate.map_or("n/a".to_string(), io::fmt_f64);
    eprintln!("ordering {sigma}: rate estimate {est}, r_sigma {}", io::fmt_f64(curve.cycle_rate));
    if curve.underflow {
        eprintln!("note: errors below 1e-300 reported as 0");
    }
    if curve.bound_values.is_none() {
        eprintln!("note: c(M_sigma(1), M_sigma(N)) = 0; bound inapplicable, convergence in <= 2 steps");
    }
    if k.len() == 2 && curve.intersection_dim == 0 {
        let c = curve.cycle_rate.sqrt();
        let dev = curve
            .ns
            .iter()
            .zip(&curve.errors)
            .map(|(&n, e)| (e - c.powi(2 * n as i32 - 1)).abs())
            .fold(0.0, f64::max);
        let verdict = if dev <= 1e-10 { "verified" } else { "FAILED" };
        eprintln!("two-subspace identity ||T^n - P_M|| = c^(2n-1): max deviation {} {verdict}", io::fmt_f64(dev));
    }
    Ok(())
}

#[derive(Serialize)]
struct AdditiveOptimum {
    sigma: Permutation,
    cost: f64,
}

#[derive(Serialize)]
struct TspOutput {
    matrix: FriedrichsMatrix,
    report: suborder_core::SuboptimalityReport,
    additive_optimal: AdditiveOptimum,
}

fn cmd_tsp(args: TspArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| Failure::new(2, format!("{}: {e}", args.input.display())))?;
    let g: WeightedGraph = serde_json::from_str(&text)
        .map_err(|e| Failure::new(2, format!("{}: {e}", args.input.display())))?;
    let c = tsp_to_mtsp(&g)?;
    let r = report(&c)?;
    let cost = additive_cost(&g, &r.sigma_star)?;
    if let Some(p) = &args.output {
        emit(Some(p), &(io::to_json(&c)? + "\n"))?;
    }
    eprintln!("optimal additive cycle {} with cost {}", r.sigma_star, io::fmt_f64(cost));
    let out = TspOutput {
        matrix: c,
        additive_optimal: AdditiveOptimum { sigma: r.sigma_star.clone(), cost },
        report: r,
    };
    emit(None, &(io::to_json(&out)? + "\n"))
}

fn cmd_generate(args: GenerateArgs) -> CliResult<()> {
    let chosen = [args.four_lines, args.family.is_some(), args.random.is_some(), args.lines.is_some()]
        .iter()
        .filter(|&&b| b)
        .count();
    if chosen != 1 {
        return Err(Failure::new(2, "give exactly one of --four-lines, --family, --random, --lines"));
    }
    let source = if let Some(p) = &args.family {
        Input::Matrix(greedy_trap_family(p)?)
    } else if let Some(n) = args.random {
        Input::Matrix(random_matrix(n, args.seed, args.lo, args.hi, args.distinct)?)
    } else if let Some(n) = args.lines {
        Input::Constellation(random_lines(n, args.dim.unwrap_or(n), args.seed)?)
    } else {
        Input::Constellation(four_lines())
    };
    let source = match source {
        Input::Constellation(k) if args.matrix || matches!(args.format, Format::Csv) || args.pretty => {
            Input::Matrix(from_constellation(&k, DEFAULT_TOL)?)
        }
        other => other,
    };
    let text = match (&source, args.format) {
        (Input::Matrix(c), _) if args.pretty => io::matrix_pretty(c),
        (Input::Matrix(c), Format::Csv) => io::matrix_to_csv(c),
        (Input::Matrix(c), Format::Json) => io::to_json(c)? + "\n",
        (Input::Constellation(k), _) => io::constellation_to_json(k)? + "\n",
    };
    emit(args.output.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Realize(a) => cmd_realize(a),
        Command::Report(a) => cmd_report(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Tsp(a) => cmd_tsp(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
