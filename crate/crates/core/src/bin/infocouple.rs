use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use infocouple::report::{
    cmd_broadcast, cmd_dtm, cmd_p2p, cmd_verify, cmd_windmill, CliError, Flags, Report,
};

#[derive(Parser)]
#[command(
    name = "infocouple",
    version,
    about = "Local information coupling analysis of discrete channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Output format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed for randomized solver starts
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Points of the exhaustive direction sweep
    #[arg(long, default_value_t = 100_000)]
    grid: usize,
    /// Solver tolerance
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Perturbation scale used for exact checks and emitted ensembles
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
}

#[derive(Subcommand)]
enum Command {
    /// DTM, its SVD and local capacity for every channel in a spec
    Dtm {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Point-to-point coupling for a single-channel spec
    P2p {
        spec: PathBuf,
        /// Compare exact mutual information against the quadratic prediction
        #[arg(long)]
        verify_exact: bool,
        /// Comma-separated scales for the exact comparison
        #[arg(long, value_delimiter = ',')]
        eps_list: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Common-message coupling for two or more channels
    Broadcast {
        spec: PathBuf,
        /// Number of letters for the multi-letter construction
        #[arg(long, default_value_t = 1)]
        letters: usize,
        /// Largest allowed ensemble cardinality |U|
        #[arg(long)]
        cardinality: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Divergence approximation sweeps and the Kronecker spectrum check
    Verify {
        spec: PathBuf,
        /// Comma-separated scales, each half the previous
        #[arg(long, value_delimiter = ',')]
        eps_list: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// The k-receiver windmill example
    Windmill {
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Letters in the rotation schedule (default k)
        #[arg(long, default_value_t = 0)]
        letters: usize,
        /// Rotation offset of the schedule
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta: f64,
        /// Largest allowed ensemble cardinality |U|
        #[arg(long)]
        cardinality: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn flags(common: &Common) -> Flags {
    Flags {
        eps: common.eps,
        grid: common.grid,
        seed: common.seed,
        tol: common.tol,
        ..Flags::default()
    }
}

fn run(cli: Cli) -> Result<(Report, Format, Option<PathBuf>), CliError> {
    let (report, common) = match cli.command {
        Command::Dtm { spec, common } => (cmd_dtm(&spec, &flags(&common))?, common),
        Command::P2p {
            spec,
            verify_exact,
            eps_list,
            common,
        } => {
            let f = Flags {
                verify_exact,
                eps_list,
                ..flags(&common)
            };
            (cmd_p2p(&spec, &f)?, common)
        }
        Command::Broadcast {
            spec,
            letters,
            cardinality,
            common,
        } => {
            let f = Flags {
                letters,
                cardinality,
                ..flags(&common)
            };
            (cmd_broadcast(&spec, &f)?, common)
        }
        Command::Verify {
            spec,
            eps_list,
            common,
        } => {
            let f = Flags {
                eps_list,
                ..flags(&common)
            };
            (cmd_verify(&spec, &f)?, common)
        }
        Command::Windmill {
            k,
            letters,
            theta,
            cardinality,
            common,
        } => {
            let f = Flags {
                cardinality,
                ..flags(&common)
            };
            (cmd_windmill(k, letters, theta, &f)?, common)
        }
    };
    Ok((report, common.format, common.output))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli).and_then(|(report, format, output)| {
        let text = match format {
            Format::Json => report.to_json(),
            Format::Csv => report.to_csv()?,
        };
        match output {
            Some(path) => std::fs::write(&path, text)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
