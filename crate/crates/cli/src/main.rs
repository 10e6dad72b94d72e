use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fliplab::acceptance::Suite;
use fliplab::commands::{self, CertifyArgs, CmdResult};

/// Exact triangulations and flips of products of simplices.
///
/// Exit codes: 0 success, 1 a check failed, 2 parse/schema/usage error,
/// 3 node budget exhausted, 4 retries exhausted.
#[derive(Parser)]
#[command(name = "fliplab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Small,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Flip graph component of a regular triangulation of a configuration.
    Flipgraph {
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Certificate for the large 3-permutohedron at N copies.
    CertifyZono {
        #[arg(long = "N", alias = "n")]
        n: u32,
        #[arg(long, required_unless_present = "identity", conflicts_with = "identity")]
        seed: Option<u64>,
        /// All-zero bits instead of sampled ones.
        #[arg(long)]
        identity: bool,
        /// Try seeds seed, seed+1, … up to this many times.
        #[arg(long, conflicts_with = "identity")]
        retry: Option<u64>,
        #[arg(long, default_value = "certificate.json")]
        out: PathBuf,
    },
    /// Re-run every check of a certificate or ensemble file.
    Verify {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria.
    Acceptance {
        #[arg(long, value_enum, default_value = "small")]
        suite: SuiteArg,
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Instance description for Δ⁴ × Δⁿ⁻¹ at N copies per block.
    BuildInstance {
        #[arg(long = "N", alias = "n")]
        n: u32,
        #[arg(long, default_value = "instance.json")]
        out: PathBuf,
    },
    /// Certify all blocks and check the ensemble properties.
    CheckEnsemble2 {
        #[arg(long = "N", alias = "n")]
        n: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        retry: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Triangulation of one sector of the product at one copy per block.
    #[command(name = "build-T", alias = "build-t")]
    BuildT {
        #[arg(long, default_value_t = 1)]
        i: u8,
        #[arg(long, default_value_t = 2)]
        j: u8,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        prime_seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Extend a triangulation of a two-rows-per-column configuration to the full product.
    Extend {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        triangulation: PathBuf,
        #[arg(long, default_value_t = 1)]
        prime_seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Flip-closure audit for a certificate's assignment.
    Audit {
        certificate: PathBuf,
        /// Cell to centre the window on when N exceeds the build guard.
        #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0i64, 0, 0, 0])]
        x: Vec<i64>,
        #[arg(long, default_value_t = 4)]
        window: u32,
        /// Audit the whole collection rather than its ensemble core.
        #[arg(long)]
        full_collection: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Flipgraph { config, seed, budget, out } => commands::flipgraph(&config, seed, budget, &out),
        Command::CertifyZono { n, seed, identity, retry, out } => {
            commands::certify_zono(&CertifyArgs { n, seed, identity, retry, out })
        }
        Command::Verify { file, out } => commands::verify(&file, out.as_deref()),
        Command::Acceptance { suite, only, out } => {
            let suite = match suite {
                SuiteArg::Small => Suite::Small,
                SuiteArg::Full => Suite::Full,
            };
            commands::acceptance(suite, &only, out.as_deref())
        }
        Command::BuildInstance { n, out } => commands::build_instance_cmd(n, &out),
        Command::CheckEnsemble2 { n, seed, retry, out } => commands::check_ensemble2_cmd(n, seed, retry, &out),
        Command::BuildT { i, j, seed, prime_seed, out } => commands::build_t(i, j, seed, prime_seed, &out),
        Command::Extend { config, triangulation, prime_seed, out } => {
            commands::extend(&config, &triangulation, prime_seed, &out)
        }
        Command::Audit { certificate, x, window, full_collection, out } => {
            let x: [i64; 4] = x.try_into().map_err(|_| commands::CmdError::usage("--x takes four integers"))?;
            commands::audit(&certificate, x, window, full_collection, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("FLIPLAB_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|&n| n > 0) {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    };
    ExitCode::from(code as u8)
}
