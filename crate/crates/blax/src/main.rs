use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use blax::driver::{self, CommandOutcome, RunConfig};
use blax::Error;

#[derive(Parser)]
#[command(
    name = "blax",
    about = "State-space constructions and verification for shift-invariant \
             subspaces of weighted Bergman spaces",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the power-series and binomial identities for one weight index.
    Series {
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long = "k-max", default_value_t = 10)]
        k_max: u32,
        #[arg(long = "coeff-max", default_value_t = 40)]
        coeff_max: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute plain and shifted gramians for a pair given as JSON.
    Gramian {
        #[arg(long)]
        pair: PathBuf,
        #[arg(short = 'K', long, default_value_t = 8)]
        stages: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a subspace representation (approach 1, 2, 3 or 4).
    Blrep {
        #[arg(long)]
        approach: u8,
        #[arg(long)]
        pair: Option<PathBuf>,
        /// Taylor table JSON for approach 2.
        #[arg(long)]
        theta: Option<PathBuf>,
        /// Weight index for approach 2.
        #[arg(long)]
        n: Option<usize>,
        /// Optional zero location "re,im" for the approach-2 range check.
        #[arg(long)]
        zero: Option<String>,
        #[arg(short = 'K', long, default_value_t = 8)]
        stages: usize,
        #[arg(short = 'N', long, default_value_t = 256)]
        truncation: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and verify a full inner family for a pair given as JSON.
    InnerFamily {
        #[arg(long)]
        pair: PathBuf,
        #[arg(short = 'K', long, default_value_t = 8)]
        stages: usize,
        #[arg(short = 'N', long, default_value_t = 256)]
        truncation: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the time-varying system from a spec JSON and an input CSV.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(short = 'T', long, default_value_t = 30)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the closed-form record for the one-zero subspace.
    Oracle {
        /// Zero location as "re,im".
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(short = 'K', long, default_value_t = 4)]
        stages: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the complete verification suite and write a JSON report.
    VerifyAll {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short = 'N', long, default_value_t = 256)]
        truncation: usize,
        #[arg(short = 'K', long, default_value_t = 8)]
        stages: usize,
        /// Multiplier applied to every pass threshold.
        #[arg(long, default_value_t = 1.0)]
        tol_factor: f64,
        /// Worker threads for the independent check groups.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::MalformedInput(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::Io(_)
        | Error::Dimension { .. }
        | Error::Domain(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<CommandOutcome, Error> {
    match cli.command {
        Command::Series { n, k_max, coeff_max, out } => {
            driver::cmd_series(n, k_max, coeff_max, out.as_ref())
        }
        Command::Gramian { pair, stages, out } => driver::cmd_gramian(&pair, stages, out.as_ref()),
        Command::Blrep {
            approach,
            pair,
            theta,
            n,
            zero,
            stages,
            truncation,
            out,
        } => {
            let zero_at = zero.as_deref().map(driver::parse_complex).transpose()?;
            driver::cmd_blrep(
                approach,
                pair.as_ref(),
                theta.as_ref(),
                n,
                zero_at,
                stages,
                truncation,
                out.as_ref(),
            )
        }
        Command::InnerFamily { pair, stages, truncation, out } => {
            driver::cmd_inner_family(&pair, stages, truncation, out.as_ref())
        }
        Command::Simulate { spec, input, horizon, out } => {
            driver::cmd_simulate(&spec, input.as_ref(), horizon, out.as_ref())
        }
        Command::Oracle { alpha, n, stages, out } => {
            let alpha = driver::parse_complex(&alpha)?;
            driver::cmd_oracle(alpha, n, stages, out.as_ref())
        }
        Command::VerifyAll {
            seed,
            truncation,
            stages,
            tol_factor,
            jobs,
            out,
        } => {
            // the BLAX_SEED environment variable overrides the flag
            let seed = std::env::var("BLAX_SEED")
                .ok()
                .and_then(|s| s.parse().ok())
                .or(seed)
                .unwrap_or(42);
            let config = RunConfig {
                seed,
                truncation,
                stages,
                tol_factor,
                jobs,
            };
            driver::cmd_verify_all(&config, out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err) as u8)
        }
    }
}
