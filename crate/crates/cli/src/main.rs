use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use gwrk::{CliError, CliResult, ExperimentConfig, Verb};

/// Binary Galton–Watson forests, their exploration paths, and Monte Carlo
/// checks of the Ray–Knight identities.
///
/// Exit codes: 0 success, 1 usage error, 2 invalid parameters or I/O
/// failure, 3 a check failed under --assert. Errors are reported on stderr
/// as a single line `gwrk: error[<kind>]: <reason>`.
#[derive(Parser, Debug)]
#[command(name = "gwrk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a reflected exploration path: CSV `time,height` plus a JSON
    /// sidecar next to it (stdout gets the CSV only).
    SamplePath(Flags),
    /// Sample a killed binary Galton–Watson forest directly; forest JSON.
    SampleTree(Flags),
    /// Gillespie simulation of the population started from [N x]
    /// individuals with birth rate sigma^2 N/2 + alpha and death rate
    /// sigma^2 N/2 + beta; CSV `time,count,x`.
    Population(Flags),
    /// Euler scheme for dX = (alpha - beta) X dt + sigma sqrt(X) dB; CSV
    /// `time,value`.
    Feller(Flags),
    /// Decode a path CSV (with sidecar) given by --input into its forest.
    ToTree(Flags),
    /// Encode a forest JSON given by --input as its exploration path.
    ToPath(Flags),
    /// Exact coupling check: on every sampled path, the local time at each
    /// level strictly between extremum heights equals the number of
    /// individuals alive at that time in the decoded forest.
    VerifyRkDiscrete(Flags),
    /// Law of decoded paths vs directly simulated forests: KS tests on total
    /// size, extinction time and the alive count at time 0.5.
    VerifyLaw(Flags),
    /// Paths sampled with ceiling --ceiling and chopped above --excise-at vs
    /// paths sampled with ceiling --excise-at: KS tests on size, duration,
    /// ceiling hits and a local time.
    VerifyChop(Flags),
    /// Martingale part of the renormalized height process: zero mean at
    /// each of --times, E[M^2]/s within 10% of 4/sigma^2, and every jump of
    /// size 2/(N sigma^2).
    VerifyMartingale(Flags),
    /// Local times of renormalized paths at --levels vs 4/sigma^2 times the
    /// Feller diffusion (moments and KS) and vs the rescaled population at
    /// the same N (KS).
    VerifyRkLimit(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON experiment config; flags given here override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Death rate.
    #[arg(long)]
    lambda: Option<f64>,
    /// Birth rate.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Killing / reflection level; `inf` for none.
    #[arg(long)]
    ceiling: Option<f64>,
    #[arg(long)]
    ancestors: Option<usize>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    big_n: Option<u64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Feller time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Path slope.
    #[arg(long)]
    slope: Option<f64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    excise_at: Option<f64>,
    /// Comma-separated levels.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    /// Comma-separated evaluation times.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with code 3 when a check fails.
    #[arg(long)]
    assert: bool,
}

impl Command {
    fn split(self) -> (Verb, Flags) {
        match self {
            Self::SamplePath(f) => (Verb::SamplePath, f),
            Self::SampleTree(f) => (Verb::SampleTree, f),
            Self::Population(f) => (Verb::Population, f),
            Self::Feller(f) => (Verb::Feller, f),
            Self::ToTree(f) => (Verb::ToTree, f),
            Self::ToPath(f) => (Verb::ToPath, f),
            Self::VerifyRkDiscrete(f) => (Verb::VerifyRkDiscrete, f),
            Self::VerifyLaw(f) => (Verb::VerifyLaw, f),
            Self::VerifyChop(f) => (Verb::VerifyChop, f),
            Self::VerifyMartingale(f) => (Verb::VerifyMartingale, f),
            Self::VerifyRkLimit(f) => (Verb::VerifyRkLimit, f),
        }
    }
}

fn build_config(verb: Verb, f: Flags) -> CliResult<ExperimentConfig> {
    let mut c = match &f.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    c.verb = Some(verb);
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = f.$field {
                c.$field = v;
            }
        )*};
    }
    set!(lambda, mu, alpha, beta, sigma, ancestors, x, big_n, horizon, dt, slope, replicas, seed, levels, times);
    if let Some(a) = f.ceiling {
        c.ceiling = a.is_finite().then_some(a);
    }
    if f.excise_at.is_some() {
        c.excise_at = f.excise_at;
    }
    if f.threads.is_some() {
        c.threads = f.threads;
    }
    if f.input.is_some() {
        c.input = f.input;
    }
    if f.out.is_some() {
        c.out = f.out;
    }
    c.assert |= f.assert;
    Ok(c)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    let reason = e.to_string();
                    let first = reason.lines().next().unwrap_or("bad arguments");
                    let first = first.strip_prefix("error: ").unwrap_or(first);
                    eprintln!("{}", CliError::Usage(first.to_string()).one_line());
                    ExitCode::from(1)
                }
            };
        }
    };
    let (verb, flags) = cli.command.split();
    let result = build_config(verb, flags).and_then(|c| gwrk::run(&c, &mut std::io::stdout().lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.one_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
