use std::process::ExitCode;

use clap::{Parser, Subcommand};
use classgit_bench::{run_concurrency_bench, run_race_bench, run_storage_bench, BenchReport, Content, Target, Workload};

#[derive(Parser)]
#[command(name = "bench", about = "classgit storage and concurrency benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simultaneous clone/commit/push by independent students.
    Concurrency {
        #[arg(long, default_value_t = 30)]
        clients: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Existing server; by default one is started for the run.
        #[arg(long)]
        server: Option<String>,
    },
    /// Teammates pushing to one branch, retrying after each rejection.
    Race {
        #[arg(long, default_value_t = 10)]
        clients: usize,
        #[arg(long)]
        server: Option<String>,
    },
    /// Content-addressed storage against one ZIP per submission.
    Storage {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        students: usize,
        #[arg(long, default_value_t = 0.1)]
        change_rate: f64,
        /// Use incompressible file bodies instead of source-like text.
        #[arg(long)]
        random: bool,
    },
}

fn target(server: Option<String>) -> Result<Target, classgit_bench::BenchError> {
    match server {
        Some(url) => Ok(Target::Remote(url)),
        None => Target::embedded(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report: Result<BenchReport, _> = match cli.command {
        Command::Concurrency { clients, seed, server } => {
            target(server).and_then(|t| run_concurrency_bench(&t, clients, &Workload::canonical(seed)))
        }
        Command::Race { clients, server } => target(server).and_then(|t| run_race_bench(&t, clients)),
        Command::Storage {
            seed,
            students,
            change_rate,
            random,
        } => run_storage_bench(&Workload {
            students,
            change_rate,
            content: if random { Content::Random } else { Content::Text },
            ..Workload::canonical(seed)
        }),
    };
    match report {
        Ok(r) => {
            println!("{}", serde_json::to_string_pretty(&r).expect("serializable"));
            eprint!("{r}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::from(2)
        }
    }
}
