//! `cq`: nested quadrature, reduced cubature and Smolyak rules from the command line.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

#[derive(Parser, Debug)]
#[command(name = "cq", version, about = "Positive nested quadrature and reduced cubature rules")]
struct Cli {
    /// JSON object of default flag values for the subcommand, keyed by long flag name.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gauss or Clenshaw-Curtis rule, or its tensor product.
    Quad(QuadArgs),
    /// Reduce a rule file, writing every intermediate rule.
    Reduce(ReduceArgs),
    /// Smolyak sparse grid from Clenshaw-Curtis, Gauss or family files.
    Smolyak(SmolyakArgs),
    /// Node counts of the cubature constructions per dimension and degree.
    Counts(CountsArgs),
    /// Condition numbers `sum |w| / sum w` of rule files or a Smolyak series.
    Condition(ConditionArgs),
    /// Genz convergence study.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Output format; defaults to the extension of `--out`, else JSON.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum QuadKind {
    Gauss,
    #[value(alias = "clenshaw-curtis")]
    Cc,
}

#[derive(Args, Debug)]
struct QuadArgs {
    /// Distribution: `uniform:LO,HI`, `beta:A,B[:LO,HI]` or `normal:MEAN,SD`.
    #[arg(long)]
    dist: String,

    #[arg(long, value_enum)]
    kind: QuadKind,

    /// Number of nodes.
    #[arg(short, long)]
    n: usize,

    /// Tensor product over this many axes when above 1.
    #[arg(short, long, default_value_t = 1)]
    dim: usize,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    /// Rule file (`cq-rule/1`) holding a quadrature or cubature rule.
    #[arg(short, long, value_name = "FILE")]
    input: PathBuf,

    /// `positive`, `symmetric` or `negative`.
    #[arg(long, default_value = "positive")]
    mode: String,

    /// Branch criterion: `prior`, `weight`, `first` or `second`.
    #[arg(long, default_value = "prior")]
    criterion: String,

    /// Stop once a 1D rule has at most this many nodes.
    #[arg(long)]
    target_size: Option<usize>,

    /// Lowest degree to reduce to; one reduction per degree.
    #[arg(long)]
    target_degree: Option<usize>,

    /// Directory receiving one file per rule.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,

    /// File name prefix.
    #[arg(long, default_value = "rule")]
    prefix: String,

    /// Also write the 1D family as one file.
    #[arg(long, value_name = "FILE")]
    family_out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct SmolyakArgs {
    /// Clenshaw-Curtis rules of `--dist` on every axis.
    #[arg(long, conflicts_with_all = ["gauss", "family"])]
    cc: bool,

    /// Gauss rules of `--dist` on every axis.
    #[arg(long, conflicts_with = "family")]
    gauss: bool,

    /// Family files: one shared by all axes or one per axis.
    #[arg(long, value_name = "FILE", num_args = 1..)]
    family: Vec<PathBuf>,

    #[arg(long, default_value = "uniform:-1,1")]
    dist: String,

    /// Smolyak level `K >= d`.
    #[arg(short = 'K', long)]
    level: usize,

    #[arg(short, long)]
    dim: usize,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CountsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,

    /// Odd total degrees.
    #[arg(long, value_delimiter = ',', required = true)]
    degrees: Vec<usize>,

    /// Columns among `dim`, `smolyak`, `smolyak_reduced`, `tensor`,
    /// `positive`, `symmetric`, `negative`.
    #[arg(long, value_delimiter = ',', default_value = "dim,smolyak")]
    modes: Vec<String>,

    #[arg(long, default_value = "uniform:-1,1")]
    dist: String,

    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConditionArgs {
    /// Rule files.
    #[arg(value_name = "FILE")]
    inputs: Vec<PathBuf>,

    /// Also tabulate Clenshaw-Curtis Smolyak rules in this dimension.
    #[arg(long, value_name = "D")]
    smolyak_dim: Option<usize>,

    /// Highest degree of the Smolyak series.
    #[arg(long, default_value_t = 9, requires = "smolyak_dim")]
    max_degree: usize,

    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Genz family, `f1`..`f6` or its name.
    #[arg(long)]
    family: String,

    #[arg(long)]
    dim: usize,

    #[arg(long, default_value_t = 20)]
    runs: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Rule files to compare.
    #[arg(long, value_name = "FILE", num_args = 1..)]
    rules: Vec<PathBuf>,

    /// Constructions to build, e.g. `tensor,smolyak_cc,reduced_negative`.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,

    /// Odd degrees of the built constructions.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    degrees: Vec<usize>,

    #[arg(long, default_value = "uniform:0,1")]
    dist: String,

    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,

    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn run(cli: Cli, invocation: &str) -> anyhow::Result<()> {
    match cli.command {
        Command::Quad(a) => commands::quad(&a, invocation),
        Command::Reduce(a) => commands::reduce(&a, invocation),
        Command::Smolyak(a) => commands::smolyak(&a, invocation),
        Command::Counts(a) => commands::counts(&a, invocation),
        Command::Condition(a) => commands::condition(&a, invocation),
        Command::Benchmark(a) => commands::benchmark(&a, invocation),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match config::parse_with_config(&argv) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    let invocation = std::iter::once("cq")
        .chain(argv.iter().skip(1).map(String::as_str))
        .collect::<Vec<_>>()
        .join(" ");
    match run(cli, &invocation) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(output::exit_code(&e))
        }
    }
}
