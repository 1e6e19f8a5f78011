use std::path::PathBuf;
use std::process::ExitCode;

use chartlab::{execute, exit_code, Command, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chartlab", version, about = "Cross-scenario CSI embedding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write scenario containers and spec sidecars
    Generate(Common),
    /// Train embeddings and downstream heads
    Train(Common),
    /// Write metric tables, chart exports and plots
    Eval(Common),
    /// Retrain over the embedding-size grid
    Sweep(Common),
    /// generate, train, eval and sweep in order
    Run(Common),
    /// Print the default configuration
    DefaultConfig,
}

#[derive(Args)]
struct Common {
    /// JSON config; defaults are used when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Top-level seed, overriding the config
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted-path override, e.g. `train.epochs=10`; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Generate(c) => (Command::Generate, c),
        Cmd::Train(c) => (Command::Train, c),
        Cmd::Eval(c) => (Command::Eval, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Run(c) => (Command::Run, c),
        Cmd::DefaultConfig => {
            let cfg = ExperimentConfig::default();
            println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
            return ExitCode::SUCCESS;
        }
    };
    let result = ExperimentConfig::load(common.config.as_deref(), &common.set, common.seed).and_then(|cfg| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(common.jobs.max(1))
            .build()
            .map_err(|e| chartlab_core::Error::Config(format!("--jobs: {e}")))?;
        pool.install(|| execute(command, &cfg))
    });
    match result {
        Ok(summary) => {
            for s in &summary.ran {
                println!("ran     {s}");
            }
            for s in &summary.skipped {
                println!("skipped {s}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
