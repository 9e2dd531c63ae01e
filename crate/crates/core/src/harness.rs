//! Experiment plumbing behind the `utamp` binary: ensemble and prior parsing,
//! factorization dispatch, and the `gen`, `solve`, `certify` and `compare`
//! commands. Command functions write human-readable output to a caller-supplied
//! writer and CSV files under the configured output directory.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::denoise::{BernoulliGaussianPrior, GaussianPrior, Prior};
use crate::ensemble::{generate_matrix, synthesize_instance, EnsembleKind, EnsembleSpec};
use crate::io::{read_matrix, read_vector, write_matrix};
use crate::lmmse::lmmse_solve;
use crate::model::{circulant_factorize, svd_factorize, Factorization, FactorizationKind, LinearModel};
use crate::solver::{relative_distance, run, Algorithm, RunOptions, Status, Trace};
use crate::spectral::{certify, ConvergenceCertificate};
use crate::{CMatrix, Error, Result, C64};

/// Singular values below `RANK_TOL · σ₁` count as zero.
pub const RANK_TOL: f64 = 1e-10;

pub const DEFAULT_OUT_DIR: &str = "utamp-out";

// ---------------------------------------------------------------------------
// key=value helpers

fn split_kv(token: &str) -> Option<(&str, &str)> {
    let (k, v) = token.split_once('=')?;
    Some((k.trim(), v.trim()))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| Error::invalid(format!("{key}: expected a number, got '{v}'")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| Error::invalid(format!("{key}: expected a non-negative integer, got '{v}'")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let inner = v.trim().trim_start_matches('[').trim_end_matches(']');
    inner.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_f64(key, s)).collect()
}

/// `key = value` lines; blank lines and `#` comments are ignored.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = split_kv(line)
            .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key=value, got '{line}'") })?;
        if k.is_empty() {
            return Err(Error::Parse { line: i + 1, msg: "empty key".into() });
        }
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// ensembles

/// Parses e.g. `ill_conditioned 64 64 kappa=1e6 seed=7`,
/// `kind=rank_deficient M=8 N=8 r=5` or `circulant taps=[2,1,0,1]`.
/// `default_seed` applies when no `seed=` token is present.
pub fn parse_ensemble<S: AsRef<str>>(tokens: &[S], default_seed: u64) -> Result<EnsembleSpec> {
    let mut kind: Option<EnsembleKind> = None;
    let mut dims: Vec<usize> = Vec::new();
    let mut m: Option<usize> = None;
    let mut n: Option<usize> = None;
    let mut seed = default_seed;
    let mut params = crate::ensemble::EnsembleParams::default();
    for tok in tokens.iter().flat_map(|t| t.as_ref().split_whitespace()) {
        match split_kv(tok) {
            Some((k, v)) => match k.to_ascii_lowercase().as_str() {
                "kind" => kind = Some(v.parse()?),
                "m" | "rows" => m = Some(parse_usize(k, v)?),
                "n" | "cols" => n = Some(parse_usize(k, v)?),
                "seed" => seed = v.parse().map_err(|_| Error::invalid(format!("seed: bad value '{v}'")))?,
                "mu" | "mu_a" | "mean_shift" => params.mean_shift = Some(parse_f64(k, v)?),
                "kappa" | "condition_number" => params.kappa = Some(parse_f64(k, v)?),
                "r" | "rank" => params.rank = Some(parse_usize(k, v)?),
                "rho" | "rho_c" | "correlation" => params.correlation = Some(parse_f64(k, v)?),
                "taps" => params.taps = Some(parse_list(k, v)?),
                other => return Err(Error::invalid(format!("unknown ensemble parameter '{other}'"))),
            },
            None if kind.is_none() => kind = Some(tok.parse()?),
            None => dims.push(parse_usize("dimension", tok)?),
        }
    }
    let kind = kind.ok_or_else(|| Error::invalid("ensemble kind missing"))?;
    if dims.len() > 2 {
        return Err(Error::invalid(format!("at most two dimensions expected, got {}", dims.len())));
    }
    let m = m.or(dims.first().copied());
    let n = n.or(dims.get(1).copied()).or(m.filter(|_| kind == EnsembleKind::Circulant));
    let (m, n) = match (m, n, &params.taps) {
        (Some(m), Some(n), _) => (m, n),
        (None, None, Some(t)) if kind == EnsembleKind::Circulant => (t.len(), t.len()),
        _ => return Err(Error::invalid("ensemble dimensions M and N are required")),
    };
    let spec = EnsembleSpec { kind, m, n, params, seed };
    spec.validate()?;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// priors

#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    Gaussian { x0: f64, tau0: f64 },
    BernoulliGaussian { rho: f64, mu: f64, v: f64 },
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::Gaussian { x0: 0.0, tau0: 1.0 }
    }
}

impl PriorSpec {
    /// i.i.d. prior of length `n`.
    pub fn build(&self, n: usize) -> Result<Prior> {
        Ok(match *self {
            PriorSpec::Gaussian { x0, tau0 } => Prior::Gaussian(GaussianPrior::iid(n, C64::new(x0, 0.0), tau0)?),
            PriorSpec::BernoulliGaussian { rho, mu, v } => {
                Prior::BernoulliGaussian(BernoulliGaussianPrior::new(rho, C64::new(mu, 0.0), v)?)
            }
        })
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, PriorSpec::Gaussian { .. })
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::Gaussian { x0, tau0 } => write!(f, "gaussian(x0={x0},tau0={tau0})"),
            PriorSpec::BernoulliGaussian { rho, mu, v } => write!(f, "bg(rho={rho},mu={mu},v={v})"),
        }
    }
}

impl FromStr for PriorSpec {
    type Err = Error;

    /// `gaussian(x0=0,tau0=1)` or `bg(rho=0.1,mu=0,v=1)`; omitted keys take
    /// those defaults.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once('(') {
            Some((name, rest)) => {
                let args =
                    rest.strip_suffix(')').ok_or_else(|| Error::invalid(format!("prior '{s}' is missing ')'")))?;
                (name.trim(), args)
            }
            None => (s, ""),
        };
        let mut kv = BTreeMap::new();
        for part in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) =
                split_kv(part).ok_or_else(|| Error::invalid(format!("prior argument '{part}' is not key=value")))?;
            kv.insert(k.to_ascii_lowercase(), parse_f64(k, v)?);
        }
        let mut take = |key: &str, default: f64| kv.remove(key).unwrap_or(default);
        let spec = match name.to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" => PriorSpec::Gaussian { x0: take("x0", 0.0), tau0: take("tau0", 1.0) },
            "bg" | "bernoulli_gaussian" => {
                PriorSpec::BernoulliGaussian { rho: take("rho", 0.1), mu: take("mu", 0.0), v: take("v", 1.0) }
            }
            other => return Err(Error::invalid(format!("unknown prior '{other}'"))),
        };
        if let Some(k) = kv.keys().next() {
            return Err(Error::invalid(format!("unknown prior parameter '{k}'")));
        }
        // validates ranges
        spec.build(1)?;
        Ok(spec)
    }
}

// ---------------------------------------------------------------------------
// algorithms and factorizations

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorizationChoice {
    #[default]
    Auto,
    Svd,
    Dft,
}

impl FromStr for FactorizationChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(FactorizationChoice::Auto),
            "svd" => Ok(FactorizationChoice::Svd),
            "dft" => Ok(FactorizationChoice::Dft),
            other => Err(Error::invalid(format!("unknown factorization '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlgoChoice {
    pub algorithm: Algorithm,
    /// Per-run override of the configured factorization (UT-AMP only).
    pub factorization: Option<FactorizationChoice>,
}

impl AlgoChoice {
    pub fn label(&self) -> String {
        match (self.algorithm, self.factorization) {
            (Algorithm::UtAmp, Some(FactorizationChoice::Svd)) => "utamp-svd".into(),
            (Algorithm::UtAmp, Some(FactorizationChoice::Dft)) => "utamp-dft".into(),
            (a, _) => a.name().into(),
        }
    }
}

impl FromStr for AlgoChoice {
    type Err = Error;

    /// `amp-vec`, `amp-scalar`, `utamp`, `utamp-svd` / `utamp(svd)`,
    /// `utamp-dft` / `utamp(dft)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let plain = |algorithm| Ok(AlgoChoice { algorithm, factorization: None });
        match s {
            "amp-vec" | "amp_vector" => plain(Algorithm::AmpVector),
            "amp-scalar" | "amp_scalar" => plain(Algorithm::AmpScalar),
            "utamp" | "ut_amp" => plain(Algorithm::UtAmp),
            _ => {
                let fact = s
                    .strip_prefix("utamp-")
                    .or_else(|| s.strip_prefix("utamp(").and_then(|r| r.strip_suffix(')')))
                    .ok_or_else(|| Error::invalid(format!("unknown algorithm '{s}'")))?;
                Ok(AlgoChoice { algorithm: Algorithm::UtAmp, factorization: Some(fact.parse()?) })
            }
        }
    }
}

/// Comma-separated algorithm list; parentheses may contain no commas.
pub fn parse_algorithms(s: &str) -> Result<Vec<AlgoChoice>> {
    let list: Vec<AlgoChoice> =
        s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect::<Result<_>>()?;
    if list.is_empty() {
        return Err(Error::invalid("at least one algorithm is required"));
    }
    Ok(list)
}

// ---------------------------------------------------------------------------
// configuration

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Ensemble(EnsembleSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: MatrixSource,
    /// Observation file; when absent `y` is synthesized from the prior.
    pub y_path: Option<PathBuf>,
    pub prior: PriorSpec,
    pub sigma2: f64,
    pub algorithms: Vec<AlgoChoice>,
    pub factorization: FactorizationChoice,
    /// Declares a file-based matrix circulant.
    pub circulant: bool,
    pub max_iters: usize,
    pub x_tol: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(source: MatrixSource) -> Self {
        let defaults = RunOptions::default();
        ExperimentConfig {
            source,
            y_path: None,
            prior: PriorSpec::default(),
            sigma2: 0.1,
            algorithms: vec![AlgoChoice { algorithm: Algorithm::UtAmp, factorization: None }],
            factorization: FactorizationChoice::Auto,
            circulant: false,
            max_iters: defaults.max_iters,
            x_tol: defaults.x_tol,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::invalid("at least one algorithm is required"));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::invalid(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if !(self.x_tol > 0.0) {
            return Err(Error::InvalidOptions(format!("x_tol must be positive, got {}", self.x_tol)));
        }
        Ok(())
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions { max_iters: self.max_iters, x_tol: self.x_tol, ..RunOptions::default() }
    }
}

/// The assembled problem: matrix, instance, and circulant first column when
/// the input is circulant (declared, generated, or detected exactly).
pub struct Instance {
    pub model: LinearModel,
    pub prior: Prior,
    pub circulant_column: Option<Vec<C64>>,
}

fn exact_circulant_column(a: &CMatrix) -> Option<Vec<C64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return None;
    }
    let col: Vec<C64> = a.column(0).iter().copied().collect();
    let ok = (0..n).all(|j| (0..n).all(|i| a[(i, j)] == col[(i + n - j) % n]));
    ok.then_some(col)
}

pub fn load_matrix(source: &MatrixSource) -> Result<(CMatrix, Option<Vec<C64>>)> {
    match source {
        MatrixSource::Ensemble(spec) => Ok((generate_matrix(spec)?, spec.circulant_column())),
        MatrixSource::File(p) => {
            let a = read_matrix(p)?;
            let col = exact_circulant_column(&a);
            Ok((a, col))
        }
    }
}

pub fn build_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    let (a, circulant_column) = load_matrix(&cfg.source)?;
    if cfg.circulant && circulant_column.is_none() {
        return Err(Error::invalid("matrix declared circulant but it is not"));
    }
    let prior = cfg.prior.build(a.ncols())?;
    let model = match &cfg.y_path {
        Some(p) => LinearModel::new(a, read_vector(p)?, cfg.sigma2)?,
        None => synthesize_instance(&a, &prior, cfg.sigma2, cfg.seed)?,
    };
    Ok(Instance { model, prior, circulant_column })
}

/// Resolves `choice`: `auto` is `dft` for circulant input and `svd`
/// otherwise; `dft` needs a circulant input.
pub fn factorize(a: &CMatrix, circulant_column: Option<&[C64]>, choice: FactorizationChoice) -> Result<Factorization> {
    match (choice, circulant_column) {
        (FactorizationChoice::Dft | FactorizationChoice::Auto, Some(col)) => circulant_factorize(col),
        (FactorizationChoice::Dft, None) => {
            Err(Error::InvalidOptions("dft factorization requires a circulant matrix".into()))
        }
        (_, _) => svd_factorize(a),
    }
}

impl Instance {
    pub fn factorize(&self, choice: FactorizationChoice) -> Result<Factorization> {
        factorize(self.model.a(), self.circulant_column.as_deref(), choice)
    }
}

// ---------------------------------------------------------------------------
// gen

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixStats {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub condition_number: f64,
    pub sigma_max: f64,
}

/// Numerical rank (singular values above `RANK_TOL · σ₁`) and
/// `σ_max / σ_min` over all `min(M, N)` singular values.
pub fn matrix_stats(a: &CMatrix) -> MatrixStats {
    let s = a.clone().singular_values();
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    let rank = if max > 0.0 { s.iter().filter(|&&v| v > RANK_TOL * max).count() } else { 0 };
    let condition_number = if min > 0.0 { max / min } else { f64::INFINITY };
    MatrixStats { rows: a.nrows(), cols: a.ncols(), rank, condition_number, sigma_max: max }
}

/// Writes the generated matrix to `out` and reports its shape, rank and
/// condition number on `log`.
pub fn cmd_gen(spec: &EnsembleSpec, out: &Path, log: &mut dyn Write) -> Result<MatrixStats> {
    let a = generate_matrix(spec)?;
    write_matrix(out, &a)?;
    let stats = matrix_stats(&a);
    writeln!(log, "wrote {} ({}x{} {})", out.display(), stats.rows, stats.cols, spec.kind)?;
    writeln!(log, "rank: {}", stats.rank)?;
    writeln!(log, "condition_number: {:e}", stats.condition_number)?;
    Ok(stats)
}

// ---------------------------------------------------------------------------
// solve / compare

#[derive(Debug, Clone)]
pub struct RunReport {
    pub label: String,
    pub algorithm: Algorithm,
    /// Factorization used by UT-AMP.
    pub factorization: Option<FactorizationKind>,
    pub status: Status,
    pub iterations: usize,
    pub nmse_db: Option<f64>,
    pub residual: f64,
    /// `‖x̂ − x_LMMSE‖ / ‖x_LMMSE‖` (Gaussian priors only).
    pub lmmse_gap: Option<f64>,
    pub x_hat: Vec<C64>,
    pub trace: Trace,
    pub csv_path: PathBuf,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into())
}

impl RunReport {
    pub fn summary_line(&self) -> String {
        format!(
            "algo={} status={} iters={} nmse_db={} lmmse_gap={}",
            self.label,
            self.status,
            self.iterations,
            self.nmse_db.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            fmt_opt(self.lmmse_gap)
        )
    }
}

/// `10·log10(‖x̂ − x‖² / ‖x‖²)`.
pub fn nmse_db(x_hat: &[C64], x_true: &[C64]) -> f64 {
    let err: f64 = x_hat.iter().zip(x_true).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = x_true.iter().map(|z| z.norm_sqr()).sum();
    10.0 * (err / den).log10()
}

fn run_one(inst: &Instance, cfg: &ExperimentConfig, choice: &AlgoChoice, x_lmmse: Option<&[C64]>) -> Result<RunReport> {
    let fact = match choice.algorithm {
        Algorithm::UtAmp => Some(inst.factorize(choice.factorization.unwrap_or(cfg.factorization))?),
        _ => None,
    };
    let (state, trace) = run(choice.algorithm, &inst.model, fact.as_ref(), &inst.prior, &cfg.run_options())?;
    let label = choice.label();
    let csv_path = cfg.out_dir.join(format!("{label}.csv"));
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    fs::write(&csv_path, buf)?;
    let x_hat: Vec<C64> = state.x.iter().copied().collect();
    Ok(RunReport {
        label,
        algorithm: choice.algorithm,
        factorization: fact.as_ref().map(Factorization::kind),
        status: trace.status,
        iterations: trace.iterations(),
        nmse_db: inst.model.x_true().map(|xt| nmse_db(&x_hat, xt.as_slice())),
        residual: trace.records.last().map(|r| r.residual).unwrap_or(f64::NAN),
        lmmse_gap: x_lmmse.map(|xl| relative_distance(&x_hat, xl)),
        x_hat,
        trace,
        csv_path,
    })
}

fn lmmse_reference(inst: &Instance) -> Result<Option<Vec<C64>>> {
    match inst.prior.as_gaussian() {
        Some(g) => Ok(Some(lmmse_solve(&inst.model, g)?.iter().copied().collect())),
        None => Ok(None),
    }
}

fn describe_factorizations(inst: &Instance, cfg: &ExperimentConfig, log: &mut dyn Write) -> Result<()> {
    for choice in cfg.algorithms.iter().filter(|c| c.algorithm == Algorithm::UtAmp) {
        let requested = choice.factorization.unwrap_or(cfg.factorization);
        if requested == FactorizationChoice::Auto {
            let path = if inst.circulant_column.is_some() { "dft (circulant input)" } else { "svd" };
            writeln!(log, "factorization=auto selected {path} for {}", choice.label())?;
        }
    }
    Ok(())
}

/// Runs every configured algorithm, writing `<out>/<label>.csv` and one
/// summary line per run.
pub fn cmd_solve(cfg: &ExperimentConfig, log: &mut dyn Write) -> Result<Vec<RunReport>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let inst = build_instance(cfg)?;
    describe_factorizations(&inst, cfg, log)?;
    let x_lmmse = lmmse_reference(&inst)?;
    let mut reports = Vec::with_capacity(cfg.algorithms.len());
    for choice in &cfg.algorithms {
        let rep = run_one(&inst, cfg, choice, x_lmmse.as_deref())?;
        writeln!(log, "{}", rep.summary_line())?;
        reports.push(rep);
    }
    Ok(reports)
}

pub struct ComparisonReport {
    pub runs: Vec<RunReport>,
    /// UT-AMP certificate; `None` for non-Gaussian priors.
    pub certificate: Option<ConvergenceCertificate>,
}

pub const COMPARE_CSV_HEADER: &str = "algo,factorization,status,iters,nmse_db,residual,lmmse_gap";

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(COMPARE_CSV_HEADER);
        out.push('\n');
        for r in &self.runs {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{:e},{}\n",
                r.label,
                r.factorization.map(|k| k.to_string()).unwrap_or_default(),
                r.status,
                r.iterations,
                opt(r.nmse_db),
                r.residual,
                opt(r.lmmse_gap)
            ));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<12} {:<10} {:>7} {:>10} {:>13} {:>13}\n",
            "algo", "status", "iters", "nmse_db", "residual", "lmmse_gap"
        );
        for r in &self.runs {
            out.push_str(&format!(
                "{:<12} {:<10} {:>7} {:>10} {:>13} {:>13}\n",
                r.label,
                r.status.as_str(),
                r.iterations,
                r.nmse_db.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
                format!("{:.6e}", r.residual),
                fmt_opt(r.lmmse_gap)
            ));
        }
        out
    }

    pub fn all_diverged(&self) -> bool {
        !self.runs.is_empty() && self.runs.iter().all(|r| r.status == Status::Diverged)
    }
}

/// Runs all configured algorithms on one instance (in parallel), then writes
/// `compare.csv` and, for Gaussian priors, `certificate.txt`. AMP outcomes are
/// reported as observed.
pub fn cmd_compare(cfg: &ExperimentConfig, log: &mut dyn Write) -> Result<ComparisonReport> {
    cfg.validate()?;
    if cfg.algorithms.len() < 2 {
        return Err(Error::invalid("compare needs at least two algorithms"));
    }
    let labels: Vec<String> = cfg.algorithms.iter().map(AlgoChoice::label).collect();
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::invalid(format!("algorithm '{l}' listed twice")));
        }
    }
    fs::create_dir_all(&cfg.out_dir)?;
    let inst = build_instance(cfg)?;
    describe_factorizations(&inst, cfg, log)?;
    let x_lmmse = lmmse_reference(&inst)?;
    let runs: Vec<RunReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .algorithms
            .iter()
            .map(|choice| {
                let (inst, xl) = (&inst, x_lmmse.as_deref());
                scope.spawn(move || run_one(inst, cfg, choice, xl))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect::<Result<_>>()
    })?;
    let certificate = if cfg.prior.is_gaussian() {
        let fact = inst.factorize(cfg.factorization)?;
        Some(certify(&fact, &inst.prior, inst.model.sigma2(), false)?)
    } else {
        None
    };
    let report = ComparisonReport { runs, certificate };
    fs::write(cfg.out_dir.join("compare.csv"), report.to_csv())?;
    write!(log, "{}", report.to_table())?;
    match &report.certificate {
        Some(cert) => {
            fs::write(cfg.out_dir.join("certificate.txt"), cert.to_report())?;
            writeln!(log, "utamp certificate (full report in certificate.txt):")?;
            for line in cert.to_report().lines().filter(|l| !l.starts_with("beta:") && !l.starts_with("eigenvalues:")) {
                writeln!(log, "  {line}")?;
            }
        }
        None => writeln!(log, "utamp certificate: not available for non-Gaussian priors")?,
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// certify

/// Certificate for the configured matrix (the instance's `y` plays no role).
pub fn cmd_certify(cfg: &ExperimentConfig, check_numeric: bool, log: &mut dyn Write) -> Result<ConvergenceCertificate> {
    if !cfg.prior.is_gaussian() {
        return Err(Error::UnsupportedPrior(format!("certification needs a Gaussian prior, got {}", cfg.prior)));
    }
    if !(cfg.sigma2 > 0.0) {
        return Err(Error::invalid(format!("sigma2 must be positive, got {}", cfg.sigma2)));
    }
    let (a, col) = load_matrix(&cfg.source)?;
    let prior = cfg.prior.build(a.ncols())?;
    let fact = factorize(&a, col.as_deref(), cfg.factorization)?;
    let cert = certify(&fact, &prior, cfg.sigma2, check_numeric)?;
    write!(log, "{}", cert.to_report())?;
    Ok(cert)
}
