//! Command-line front end: `pencilcrt synth|estimate|bench|compare`.

pub mod commands;
pub mod config;
pub mod stream_io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_bench, cmd_compare, cmd_estimate, cmd_synth, ExitStatus};
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "pencilcrt",
    version,
    about = "Dual-rate sub-Nyquist tone estimation with a matrix pencil and CRT de-aliasing",
    after_long_help = config::CONFIG_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one noisy stream file per channel: <out>.ch1.snyq, <out>.ch2.snyq
    Synth {
        #[arg(long)]
        config: PathBuf,
        /// Output prefix (default: config `output`, else "pencilcrt")
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides every seed in the config
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate tones from two stream files; writes freq_hz,amplitude,phase_rad,k1,k2,residual_hz
    Estimate {
        stream1: PathBuf,
        stream2: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV path (default: config `output`, else stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte Carlo sweep of both methods over SNR and sample length
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// CSV path (default: config `output`, else "bench.csv"); a long-format copy goes to <stem>.long.csv
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Per-tone errors of both methods on one noisy realization
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Parses arguments and runs a subcommand; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitStatus::ConfigError.code()
            } else {
                ExitStatus::Success.code()
            };
        }
    };
    let status = match &cli.command {
        Command::Synth { config, out, seed } => cmd_synth(config, out.as_deref(), *seed),
        Command::Estimate {
            stream1,
            stream2,
            config,
            out,
            seed,
        } => cmd_estimate(stream1, stream2, config.as_deref(), out.as_deref(), *seed),
        Command::Bench { config, out, seed } => cmd_bench(config, out.as_deref(), *seed),
        Command::Compare { config, out, seed } => cmd_compare(config, out.as_deref(), *seed),
    };
    status.code()
}
