use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nnclass::bench::{self, BenchManifest, EmitOptions, RunOptions};

#[derive(Parser)]
#[command(name = "bench", about = "Run KNN, ENN, SVM and LMNN over a dataset manifest")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every dataset × algorithm cell and write the report files.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory; overrides the manifest's `outputs`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Score on the training portion (diagnostic only).
        #[arg(long)]
        eval_on_train: bool,
        /// Also fill wall_time_s in results.csv (breaks byte-reproducibility).
        #[arg(long)]
        wall_time: bool,
    },
    /// Check the manifest and that every dataset file loads.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
}

const EXIT_DATASET: u8 = 1;
const EXIT_MANIFEST: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { manifest, out, jobs, eval_on_train, wall_time } => {
            let manifest = match BenchManifest::load(&manifest) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("manifest error: {e}");
                    return ExitCode::from(EXIT_MANIFEST);
                }
            };
            let dir = out.unwrap_or_else(|| manifest.outputs.clone());
            if let Err(e) = bench::check_output_dir(&dir) {
                eprintln!("{e}");
                return ExitCode::from(EXIT_MANIFEST);
            }
            let outcome = match bench::run(&manifest, &RunOptions { jobs, eval_on_train }) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("run failed: {e}");
                    return ExitCode::from(EXIT_MANIFEST);
                }
            };
            if let Err(e) = bench::emit(&outcome, &dir, &EmitOptions { wall_time_in_results: wall_time }) {
                eprintln!("writing results: {e}");
                return ExitCode::from(EXIT_DATASET);
            }
            print!("{}", outcome.table_markdown());
            eprintln!("wrote {}", dir.display());
            for e in &outcome.errors {
                eprintln!("dataset {}: {}", e.dataset, e.message);
            }
            if outcome.errors.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_DATASET) }
        }
        Command::Validate { manifest } => {
            let manifest = match BenchManifest::load(&manifest) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("manifest error: {e}");
                    return ExitCode::from(EXIT_MANIFEST);
                }
            };
            let mut failed = false;
            for entry in &manifest.datasets {
                match entry.load() {
                    Ok(l) => println!(
                        "ok   {:<16} {} samples, {} features, {} classes{}",
                        entry.id,
                        l.dataset.n_samples(),
                        l.dataset.n_features(),
                        l.dataset.n_classes(),
                        if l.dropped_rows > 0 { format!(", {} rows dropped", l.dropped_rows) } else { String::new() }
                    ),
                    Err(e) => {
                        failed = true;
                        println!("FAIL {:<16} {}: {e}", entry.id, entry.path.display());
                    }
                }
            }
            if failed { ExitCode::from(EXIT_DATASET) } else { ExitCode::SUCCESS }
        }
    }
}
