use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use utamp_core::harness::{
    cmd_certify, cmd_compare, cmd_gen, cmd_solve, parse_algorithms, parse_config_file, parse_ensemble,
    ExperimentConfig, MatrixSource,
};
use utamp_core::io::format_matrix;
use utamp_core::model::Field;
use utamp_core::{Error, Result};

/// AMP, scalar AMP and UT-AMP solvers with convergence certificates.
#[derive(Parser)]
#[command(name = "utamp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a matrix from a seeded ensemble, e.g. `gen ill_conditioned 64 64 kappa=1e6`.
    Gen {
        /// Ensemble kind, dimensions and key=value parameters.
        #[arg(required = true, num_args = 1..)]
        spec: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run solvers and write one CSV trace per algorithm.
    Solve(RunArgs),
    /// Print a UT-AMP convergence certificate (Gaussian priors only).
    Certify {
        #[command(flatten)]
        common: RunArgs,
        /// Also assemble the iteration matrix and report the eigenvalue discrepancy.
        #[arg(long)]
        check_numeric: bool,
    },
    /// Run several algorithms on one instance and tabulate the outcomes.
    Compare(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Ensemble tokens, e.g. `nonzero_mean 64 64 mu=10`; alternative to --matrix.
    ensemble: Vec<String>,
    /// Matrix file in the text format written by `gen`.
    #[arg(long, conflicts_with = "ensemble")]
    matrix: Option<PathBuf>,
    /// Observation vector file; synthesized from the prior when absent.
    #[arg(long)]
    y: Option<PathBuf>,
    /// key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the matrix, signal and noise draws [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Noise variance [default: 0.1].
    #[arg(long)]
    sigma2: Option<f64>,
    /// `gaussian(x0=..,tau0=..)` or `bg(rho=..,mu=..,v=..)`.
    #[arg(long)]
    prior: Option<String>,
    /// Comma list of amp-vec, amp-scalar, utamp, utamp-svd, utamp-dft.
    #[arg(long)]
    algorithms: Option<String>,
    /// auto, svd or dft.
    #[arg(long)]
    factorization: Option<String>,
    /// Declare a matrix file circulant.
    #[arg(long)]
    circulant: bool,
    /// Iteration cap [default: 1000].
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stop when the relative change in x drops to this [default: 1e-10].
    #[arg(long)]
    x_tol: Option<f64>,
    /// Output directory for CSV traces.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match (flag, file.get(key)) {
        (Some(v), _) => Ok(Some(v)),
        (None, Some(raw)) => {
            raw.parse().map(Some).map_err(|_| Error::InvalidInput(format!("config key '{key}': bad value '{raw}'")))
        }
        (None, None) => Ok(None),
    }
}

fn build_config(args: RunArgs, default_algorithms: &str) -> Result<ExperimentConfig> {
    let file = match &args.config {
        Some(p) => parse_config_file(&std::fs::read_to_string(p)?)?,
        None => BTreeMap::new(),
    };
    for key in file.keys() {
        const KNOWN: [&str; 12] = [
            "ensemble",
            "matrix",
            "y",
            "seed",
            "sigma2",
            "prior",
            "algorithms",
            "factorization",
            "circulant",
            "max_iters",
            "x_tol",
            "out",
        ];
        if !KNOWN.contains(&key.as_str()) {
            return Err(Error::InvalidInput(format!("unknown config key '{key}'")));
        }
    }
    let seed = pick(args.seed, &file, "seed")?.unwrap_or(0);
    let matrix: Option<PathBuf> = pick(args.matrix, &file, "matrix")?;
    let source = if !args.ensemble.is_empty() {
        MatrixSource::Ensemble(parse_ensemble(&args.ensemble, seed)?)
    } else if let Some(p) = matrix {
        MatrixSource::File(p)
    } else if let Some(tokens) = file.get("ensemble") {
        MatrixSource::Ensemble(parse_ensemble(&[tokens], seed)?)
    } else {
        return Err(Error::InvalidInput("no matrix given: pass ensemble tokens or --matrix".into()));
    };
    let mut cfg = ExperimentConfig::new(source);
    cfg.seed = seed;
    cfg.y_path = pick(args.y, &file, "y")?;
    if let Some(p) = pick::<String>(args.prior, &file, "prior")? {
        cfg.prior = p.parse()?;
    }
    if let Some(v) = pick(args.sigma2, &file, "sigma2")? {
        cfg.sigma2 = v;
    }
    let algorithms = pick::<String>(args.algorithms, &file, "algorithms")?;
    cfg.algorithms = parse_algorithms(algorithms.as_deref().unwrap_or(default_algorithms))?;
    if let Some(f) = pick::<String>(args.factorization, &file, "factorization")? {
        cfg.factorization = f.parse()?;
    }
    cfg.circulant = args.circulant || pick::<bool>(None, &file, "circulant")?.unwrap_or(false);
    if let Some(v) = pick(args.max_iters, &file, "max_iters")? {
        cfg.max_iters = v;
    }
    if let Some(v) = pick(args.x_tol, &file, "x_tol")? {
        cfg.x_tol = v;
    }
    if let Some(v) = pick(args.out, &file, "out")? {
        cfg.out_dir = v;
    }
    Ok(cfg)
}

/// Exit status 2 when every requested algorithm diverged.
fn execute(cli: Cli) -> Result<u8> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Gen { spec, seed, out: path } => {
            let spec = parse_ensemble(&spec, seed)?;
            match path {
                Some(p) => {
                    cmd_gen(&spec, &p, &mut out)?;
                }
                None => {
                    let a = utamp_core::ensemble::generate_matrix(&spec)?;
                    out.write_all(format_matrix(&a, Field::of(a.iter().copied())).as_bytes())?;
                    let stats = utamp_core::harness::matrix_stats(&a);
                    eprintln!("rank: {}", stats.rank);
                    eprintln!("condition_number: {:e}", stats.condition_number);
                }
            }
            Ok(0)
        }
        Command::Solve(args) => {
            let cfg = build_config(args, "utamp")?;
            let reports = cmd_solve(&cfg, &mut out)?;
            let all_diverged = reports.iter().all(|r| r.status == utamp_core::solver::Status::Diverged);
            Ok(if all_diverged { 2 } else { 0 })
        }
        Command::Certify { common, check_numeric } => {
            let cfg = build_config(common, "utamp")?;
            cmd_certify(&cfg, check_numeric, &mut out)?;
            Ok(0)
        }
        Command::Compare(args) => {
            let cfg = build_config(args, "amp-vec,amp-scalar,utamp")?;
            let report = cmd_compare(&cfg, &mut out)?;
            Ok(if report.all_diverged() { 2 } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
