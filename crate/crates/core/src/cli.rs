//! Command-line front end: `select`, `cluster`, `synth`, `verify`.
//!
//! Exit codes: 0 success, 1 validation error, 2 numerical or pipeline error
//! (including a failed verification suite), 3 I/O error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::Error;
use crate::kmeans::{cluster, objective, Backend, Clustering, ClusteringJson, BRUTE_FORCE_MAX_POINTS};
use crate::matrix::{singular_values, DenseMatrix};
use crate::pipelines::{select_then_cluster, Method};
use crate::verify::{run_suite, Suite};

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::DimensionMismatch(_)
            | Error::NonFinite
            | Error::EmptyCluster(_)
            | Error::Resource(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "featsel", version, about = "Feature selection for k-means clustering with checked guarantees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select r features, cluster them, and check the approximation bound.
    Select(SelectArgs),
    /// Cluster the full dataset without feature selection.
    Cluster(ClusterArgs),
    /// Generate a Gaussian-mixture dataset with ground-truth labels.
    Synth(SynthArgs),
    /// Run a named verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Supervised,
    Unsupervised,
    Randomized,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Supervised => Method::Supervised,
            MethodArg::Unsupervised => Method::Unsupervised,
            MethodArg::Randomized => Method::Randomized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Lloyd,
    Brute,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file, one point per row.
    #[arg(long)]
    pub input: PathBuf,
    /// The first CSV row is a header.
    #[arg(long)]
    pub has_header: bool,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value = "lloyd")]
    pub backend: BackendArg,
    /// Lloyd restarts.
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
}

impl BackendArgs {
    fn backend(&self, m: usize) -> CliResult<Backend> {
        match self.backend {
            BackendArg::Brute if m > BRUTE_FORCE_MAX_POINTS => Err(CliError::Validation(format!(
                "the brute backend needs at most {BRUTE_FORCE_MAX_POINTS} points, input has {m}"
            ))),
            BackendArg::Brute => Ok(Backend::Brute),
            BackendArg::Lloyd if self.restarts == 0 => {
                Err(CliError::Validation("--restarts must be at least 1".into()))
            }
            BackendArg::Lloyd => Ok(Backend::lloyd(self.restarts)),
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Labels file (one 1-based label per line), supervised method only.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "unsupervised")]
    pub method: MethodArg,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub clustering: BackendArgs,
    /// Report path, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub clustering: BackendArgs,
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// Standard deviation of the blob centres.
    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,
    /// Standard deviation of the isotropic noise around each centre.
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV path, `-` for standard output.
    #[arg(long)]
    pub output: String,
    /// Labels path; defaults to `<output>.labels` when writing to a file.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub suite: String,
    /// Defaults to the suite's own trial count.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "-")]
    pub output: String,
}

/// Reads a CSV matrix: rows are points, columns features.
pub fn read_matrix_csv(reader: impl Read, has_header: bool) -> CliResult<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Validation(format!("CSV: {e}")))?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CliError::Validation(format!("CSV record {}: '{f}' is not a real number", line + 1))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Validation("CSV contains no data rows".into()));
    }
    Ok(DenseMatrix::from_rows(&rows)?)
}

/// Writes every value in shortest round-trip form.
pub fn write_matrix_csv(writer: impl Write, a: &DenseMatrix) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for i in 0..a.rows() {
        w.write_record(a.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()
}

/// One 1-based label per line; blank lines are skipped.
pub fn read_labels(reader: impl BufRead) -> CliResult<Vec<usize>> {
    let mut labels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::Io(e.to_string()))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let l: usize = t
            .parse()
            .map_err(|_| CliError::Validation(format!("labels line {}: '{t}' is not a positive integer", i + 1)))?;
        if l == 0 {
            return Err(CliError::Validation(format!("labels line {}: labels are 1-based", i + 1)));
        }
        labels.push(l);
    }
    Ok(labels)
}

fn load_matrix(data: &DataArgs) -> CliResult<DenseMatrix> {
    let file = File::open(&data.input).map_err(|e| io_err(&data.input, e))?;
    read_matrix_csv(BufReader::new(file), data.has_header)
}

fn emit(output: &str, bytes: &[u8]) -> CliResult<()> {
    if output == "-" {
        io::stdout().write_all(bytes).map_err(|e| CliError::Io(format!("stdout: {e}")))
    } else {
        std::fs::write(output, bytes).map_err(|e| io_err(Path::new(output), e))
    }
}

fn emit_json(output: &str, value: &impl Serialize) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    emit(output, s.as_bytes())
}

fn cmd_select(args: &SelectArgs) -> CliResult<()> {
    let method: Method = args.method.into();
    let labels_path = match (method, &args.labels) {
        (Method::Supervised, None) => {
            return Err(CliError::Validation("the supervised method requires --labels".into()))
        }
        (Method::Supervised, Some(p)) => Some(p),
        (_, Some(_)) => {
            return Err(CliError::Validation("--labels is only read by the supervised method".into()))
        }
        _ => None,
    };
    if args.k == 0 || args.k >= args.r {
        return Err(CliError::Validation(format!(
            "k must satisfy 1 ≤ k < r, got k = {}, r = {}",
            args.k, args.r
        )));
    }
    let a = load_matrix(&args.data)?;
    let backend = args.clustering.backend(a.rows())?;
    let given = match labels_path {
        Some(p) => {
            let file = File::open(p).map_err(|e| io_err(p, e))?;
            let labels = read_labels(BufReader::new(file))?;
            if labels.len() != a.rows() {
                return Err(CliError::Validation(format!(
                    "{} labels for {} points",
                    labels.len(),
                    a.rows()
                )));
            }
            Some(Clustering::from_one_based(args.k, &labels)?)
        }
        None => None,
    };
    let report = select_then_cluster(&a, args.k, args.r, method, given.as_ref(), backend, args.seed.unwrap_or(0))?;
    emit_json(&args.output, &report)
}

#[derive(Serialize)]
struct ClusterReport {
    backend: Backend,
    gamma_certified: bool,
    clustering: ClusteringJson,
    /// `‖A - A_k‖_F²`, a lower bound on the optimal objective.
    rank_k_lower_bound: f64,
}

fn cmd_cluster(args: &ClusterArgs) -> CliResult<()> {
    let a = load_matrix(&args.data)?;
    let backend = args.clustering.backend(a.rows())?;
    let c = cluster(&a, args.k, backend, args.seed)?;
    let report = ClusterReport {
        backend,
        gamma_certified: backend.certified_gamma().is_some(),
        clustering: ClusteringJson {
            k: args.k,
            assignment: c.assignment().iter().map(|l| l + 1).collect(),
            objective: objective(&a, &c)?,
        },
        rank_k_lower_bound: singular_values(&a).iter().skip(args.k).map(|s| s * s).sum(),
    };
    emit_json(&args.output, &report)
}

/// `m` points around `k` centres drawn from `N(0, separation²)`; point `i`
/// belongs to blob `i mod k` and adds `N(0, noise²)` noise per coordinate.
pub fn synthesize(
    m: usize,
    n: usize,
    k: usize,
    separation: f64,
    noise: f64,
    seed: u64,
) -> crate::Result<(DenseMatrix, Clustering)> {
    if m == 0 || n == 0 || k == 0 || k > m {
        return Err(Error::InvalidArgument(format!(
            "need m, n ≥ 1 and 1 ≤ k ≤ m, got m = {m}, n = {n}, k = {k}"
        )));
    }
    let spread = |name: &str, v: f64| {
        let bad = || Error::InvalidArgument(format!("{name} must be a finite real ≥ 0"));
        if !(v.is_finite() && v >= 0.0) {
            return Err(bad());
        }
        Normal::new(0.0, v).map_err(|_| bad())
    };
    let centre_dist = spread("separation", separation)?;
    let noise_dist = spread("noise", noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres = DenseMatrix::from_fn(k, n, |_, _| centre_dist.sample(&mut rng));
    let a = DenseMatrix::from_fn(m, n, |i, j| centres[(i % k, j)] + noise_dist.sample(&mut rng));
    Ok((a, Clustering::new(k, (0..m).map(|i| i % k).collect())?))
}

fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let (a, truth) = synthesize(args.m, args.n, args.k, args.separation, args.noise, args.seed)?;
    let mut csv_bytes = Vec::new();
    write_matrix_csv(&mut csv_bytes, &a).map_err(|e| CliError::Io(e.to_string()))?;
    emit(&args.output, &csv_bytes)?;
    let labels_path = match (&args.labels, args.output.as_str()) {
        (Some(p), _) => Some(p.clone()),
        (None, "-") => None,
        (None, out) => Some(PathBuf::from(format!("{out}.labels"))),
    };
    if let Some(p) = labels_path {
        let text: String = truth.assignment().iter().map(|l| format!("{}\n", l + 1)).collect();
        std::fs::write(&p, text).map_err(|e| io_err(&p, e))?;
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    let suite: Suite = args.suite.parse()?;
    let outcome = run_suite(suite, args.trials.unwrap_or(suite.default_trials()), args.seed)?;
    emit_json(&args.output, &outcome)?;
    if outcome.succeeded {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "suite {} failed: {}/{} passed, {} required",
            outcome.suite, outcome.passed, outcome.trials, outcome.required
        )))
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Select(a) => cmd_select(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Parses `args`, runs the command, reports errors on stderr, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("featsel: {}", e.message());
            e.exit_code()
        }
    }
}
