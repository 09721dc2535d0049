//! Command-line front end for shearlab experiments. Each subcommand maps onto one family of
//! computations and writes a CSV table plus a JSON run manifest.
//!
//! Exit codes: 0 success, 1 computation failure, 2 validation error (no output files),
//! 3 budget exhausted (partial output written when available).

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod selftest;

#[cfg(test)]
mod e2e;

use clap::{Args, Parser};
use config::{ExperimentConfig, Subcommand};
use error::CliError;
use shearlab::eisenstein::Route;
use shearlab::orbit::{FitModel, Norm};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

/// Environment variable read when `--threads` is not given.
pub const THREADS_ENV: &str = "SHEARLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "shearlab", version, about = "Experiments on sheared cuspidal rays, orbit counts, Eisenstein series and second moments")]
struct Cli {
    /// Worker thread cap (falls back to SHEARLAB_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// CSV output path; a manifest is written next to it. Without it the CSV goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Count orbit points x0·Γ of norm below each T.
    Count(CountArgs),
    /// Count orbit points per coset of Γ(q).
    CosetCount {
        #[command(flatten)]
        count: CountArgs,
        /// Congruence level.
        #[arg(long)]
        q: i64,
    },
    /// Fit counting laws to a CSV written by `count`.
    Fit(FitArgs),
    /// Ray measure μ_T, strip measure and residual against the predicted main term.
    Shear(ShearArgs),
    /// Eisenstein series values E(z, s).
    Eisenstein(EisensteinArgs),
    /// Second moment of Δ along the sheared ray against its predicted main term.
    Moment(MomentArgs),
    /// Kronecker-type limit formula check for Δ.
    Kronecker(TermsArgs),
    /// Run the seeded invariant suites.
    Selftest,
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct GroupArg {
    /// Built-in group (psl2z, thin4) or path to a group JSON file.
    #[arg(long, default_value = "psl2z")]
    group: String,
}

#[derive(Debug, Args)]
struct CountArgs {
    #[command(flatten)]
    group: GroupArg,
    /// Base point (p,q,r) of the binary form.
    #[arg(long, value_delimiter = ',', default_value = "0,1,0", allow_hyphen_values = true)]
    x0: Vec<i64>,
    /// Radii, comma separated and increasing.
    #[arg(long = "T", value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[arg(long, value_enum, default_value = "sup")]
    norm: NormArg,
    /// Node budget of the orbit search.
    #[arg(long, default_value_t = 50_000_000)]
    max_nodes: usize,
    /// Nodes of norm at least slack·max(max T, |x0|) are not expanded.
    #[arg(long, default_value_t = 2.0)]
    slack: f64,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum NormArg {
    Sup,
    Euclidean,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Counting CSV (columns T, count, saturated).
    #[arg(long)]
    input: PathBuf,
    /// Models to fit; all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    model: Vec<ModelArg>,
    /// Rows with T below this are excluded.
    #[arg(long, default_value_t = 10.0)]
    min_t: f64,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ModelArg {
    TLogTPlusT,
    LinearPlusPower,
    PurePower,
    Linear,
    TLogT,
}

#[derive(Debug, Args)]
struct ShearArgs {
    #[command(flatten)]
    group: GroupArg,
    /// Test function: bump:default, bump:cx=..,cy=..,rx=..,ry=..,beta=.., or delta[:N].
    #[arg(long, default_value = "bump:default")]
    psi: String,
    /// Shear parameters, comma separated and increasing.
    #[arg(long = "T", value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Debug, Args)]
struct EisensteinArgs {
    #[command(flatten)]
    group: GroupArg,
    /// Evaluation point x,y (repeatable).
    #[arg(long, value_parser = parse_point, required = true, allow_hyphen_values = true)]
    z: Vec<[f64; 2]>,
    /// Spectral parameters, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    s: Vec<f64>,
    #[arg(long, value_enum)]
    route: Option<RouteArg>,
    /// Coset sums keep terms with Im(γz) at least this.
    #[arg(long)]
    min_height: Option<f64>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum RouteArg {
    Fourier,
    Coset,
}

#[derive(Debug, Args)]
struct TermsArgs {
    /// Length of the q-expansion of Δ.
    #[arg(long, default_value_t = 4000)]
    terms: usize,
}

#[derive(Debug, Args)]
struct MomentArgs {
    #[arg(long = "T", value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[command(flatten)]
    terms: TermsArgs,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let x = x.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = y.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok([x, y])
}

fn count_config(sub: Subcommand, a: CountArgs) -> Result<ExperimentConfig, CliError> {
    let mut c = ExperimentConfig::new(sub);
    c.group = a.group.group;
    c.x0 = a.x0.try_into().map_err(|_| CliError::Validation("--x0 needs three integers p,q,r".into()))?;
    c.t = a.t;
    c.norm = match a.norm {
        NormArg::Sup => Norm::Sup,
        NormArg::Euclidean => Norm::Euclidean,
    };
    c.max_nodes = a.max_nodes;
    c.slack = a.slack;
    Ok(c)
}

fn build_config(cli: Cli) -> Result<ExperimentConfig, CliError> {
    let mut c = match cli.command {
        Command::Count(a) => count_config(Subcommand::Count, a)?,
        Command::CosetCount { count, q } => {
            let mut c = count_config(Subcommand::CosetCount, count)?;
            c.q = Some(q);
            c
        }
        Command::Fit(a) => {
            let mut c = ExperimentConfig::new(Subcommand::Fit);
            c.input = Some(a.input);
            c.min_t = a.min_t;
            c.models = a
                .model
                .into_iter()
                .map(|m| match m {
                    ModelArg::TLogTPlusT => FitModel::TLogTPlusT,
                    ModelArg::LinearPlusPower => FitModel::LinearPlusPower,
                    ModelArg::PurePower => FitModel::PurePower,
                    ModelArg::Linear => FitModel::Linear,
                    ModelArg::TLogT => FitModel::TLogT,
                })
                .collect();
            c
        }
        Command::Shear(a) => {
            let mut c = ExperimentConfig::new(Subcommand::Shear);
            c.group = a.group.group;
            c.psi = a.psi;
            c.t = a.t;
            c.tol = a.tol;
            c
        }
        Command::Eisenstein(a) => {
            let mut c = ExperimentConfig::new(Subcommand::Eisenstein);
            c.group = a.group.group;
            c.z = a.z;
            c.s = a.s;
            c.route = a.route.map(|r| match r {
                RouteArg::Fourier => Route::Fourier,
                RouteArg::Coset => Route::CosetSum,
            });
            c.min_height = a.min_height;
            c
        }
        Command::Moment(a) => {
            let mut c = ExperimentConfig::new(Subcommand::Moment);
            c.t = a.t;
            c.terms = a.terms.terms;
            c
        }
        Command::Kronecker(a) => {
            let mut c = ExperimentConfig::new(Subcommand::Kronecker);
            c.terms = a.terms;
            c
        }
        Command::Selftest => ExperimentConfig::new(Subcommand::Selftest),
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", config.display())))?;
            ExperimentConfig::from_json(&text)?
        }
    };
    // flags given on the command line override the config file
    if cli.out.is_some() {
        c.out = cli.out;
    }
    if let Some(seed) = cli.seed {
        c.seed = seed;
    }
    if cli.threads.is_some() {
        c.threads = cli.threads;
    }
    Ok(c)
}

/// Thread cap from the config, else from SHEARLAB_THREADS.
fn thread_count(c: &ExperimentConfig) -> Result<Option<usize>, CliError> {
    if c.threads.is_some() {
        return Ok(c.threads);
    }
    threads_from_env(std::env::var(THREADS_ENV).ok().as_deref())
}

fn threads_from_env(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value {
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Validation(format!("{THREADS_ENV}='{v}' is not a positive integer"))),
        },
        None => Ok(None),
    }
}

/// Runs a full command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{text}");
                0
            } else {
                let _ = write!(stderr, "{text}");
                2
            };
        }
    };
    match build_config(cli) {
        Ok(c) => run_config(&c, stdout, stderr),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Validates and runs one experiment.
pub fn run_config(c: &ExperimentConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let fail = |e: CliError, stderr: &mut dyn Write| {
        let _ = writeln!(stderr, "error: {e}");
        e.exit_code()
    };
    if let Err(e) = c.validate() {
        return fail(e, stderr);
    }
    let threads = match thread_count(c) {
        Ok(t) => t,
        Err(e) => return fail(e, stderr),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => return fail(CliError::Validation(format!("thread pool: {e}")), stderr),
    };
    let start = Instant::now();
    let outcome = match pool.install(|| commands::dispatch(c)) {
        Ok(o) => o,
        Err(e) => return fail(e, stderr),
    };
    let code = if outcome.budget_exhausted {
        3
    } else if outcome.failure.is_some() {
        1
    } else {
        0
    };
    if let Err(e) = output::emit(c, &outcome, code, start.elapsed().as_secs_f64(), stdout) {
        return fail(e, stderr);
    }
    if outcome.budget_exhausted {
        let _ = writeln!(stderr, "budget exhausted: partial results written");
    }
    if let Some(f) = &outcome.failure {
        let _ = writeln!(stderr, "{f}");
    }
    code
}
