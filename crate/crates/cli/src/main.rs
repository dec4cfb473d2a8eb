//! `strongsec`: command-line front end for the term, frame, process and
//! secrecy analyses, and the self-test over the protocol corpus.

mod commands;
mod corpus;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, Outcome};

#[derive(Parser, Debug)]
#[command(
    name = "strongsec",
    version,
    about = "Syntactic and strong secrecy analysis of cryptographic protocol processes"
)]
struct Cli {
    /// Print a machine-readable JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct BoundArgs {
    /// Copies of each replicated process.
    #[arg(long = "unfold", default_value_t = 1)]
    pub unfold: usize,
    /// Constructor nesting of adversary messages.
    #[arg(long = "recipe-depth", default_value_t = 2)]
    pub recipe_depth: usize,
    /// Maximal number of inputs and outputs along a trace.
    #[arg(long = "max-trace", default_value_t = 12)]
    pub max_trace: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normal form of a term.
    Normalize {
        term: String,
        /// Print every rewriting step.
        #[arg(long)]
        trace: bool,
    },
    /// Whether a frame deduces a ground term, with a recipe.
    Deduce { frame: PathBuf, term: String },
    /// Static equivalence of two frames.
    Equiv {
        frame1: PathBuf,
        frame2: PathBuf,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Use the exhaustive recipe enumeration instead of the decision procedure.
        #[arg(long)]
        brute: bool,
    },
    /// Well-formedness of a frame for a secret.
    CheckFrame {
        frame: PathBuf,
        #[arg(long)]
        secret: String,
        /// Check the extended definition for frames produced by processes.
        #[arg(long)]
        extended: bool,
    },
    /// Strong secrecy of a frame against a passive attacker.
    Passive {
        frame: PathBuf,
        #[arg(long)]
        secret: String,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Instantiation pairs `M1,M1';M2,M2'`.
        #[arg(long)]
        samples: Option<String>,
    },
    /// Bounded exploration of a process for syntactic secrecy.
    Explore {
        process: PathBuf,
        #[arg(long)]
        secret: String,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Marked ciphers, openers, output destructors and tested operands.
    Esets {
        process: PathBuf,
        #[arg(long)]
        secret: String,
    },
    /// Full analysis of a process and the resulting verdict.
    Analyze {
        process: PathBuf,
        #[arg(long)]
        secret: String,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Runs the corpus against its manifest and golden files.
    Corpus {
        /// Corpus directory holding `manifest.json`.
        #[arg(long, default_value = "corpus")]
        dir: PathBuf,
        /// Run a single entry.
        #[arg(long)]
        only: Option<String>,
        /// Rewrite the golden files from the current results.
        #[arg(long)]
        update_goldens: bool,
    },
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Normalize { term, trace } => commands::normalize(term, *trace),
        Command::Deduce { frame, term } => commands::deduce(frame, term),
        Command::Equiv { frame1, frame2, depth, brute } => commands::equiv(frame1, frame2, *depth, *brute),
        Command::CheckFrame { frame, secret, extended } => commands::check_frame(frame, secret, *extended),
        Command::Passive { frame, secret, depth, samples } => {
            commands::passive(frame, secret, *depth, samples.as_deref())
        }
        Command::Explore { process, secret, bounds } => commands::explore(process, secret, *bounds),
        Command::Esets { process, secret } => commands::esets(process, secret),
        Command::Analyze { process, secret, bounds } => commands::analyze(process, secret, *bounds),
        Command::Corpus { dir, only, update_goldens } => corpus::selftest(dir, only.as_deref(), *update_goldens),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let start = std::time::Instant::now();
    match run(&cli) {
        Ok(outcome) => {
            if cli.json {
                println!("{}", outcome.envelope(&argv, start.elapsed()));
            } else {
                println!("{}", outcome.human);
            }
            ExitCode::from(outcome.exit)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
