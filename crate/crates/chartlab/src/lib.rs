//! Config-driven experiment runner: scenario generation, embedding and
//! head training, evaluation tables and plots, and the embedding-size
//! sweep, all recorded in a content-hashed manifest.

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod svg;

pub use config::{ExperimentConfig, Method, ScenarioEntry, Task};
pub use manifest::{Manifest, Workspace};
pub use pipeline::Summary;

use chartlab_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Generate,
    Train,
    Eval,
    Sweep,
    Run,
}

/// Runs one subcommand against `cfg.output_dir`.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Summary> {
    if command == Command::Generate || command == Command::Run {
        // reject bad specs before anything touches the disk
        for s in cfg.generated_specs()? {
            s.validate()?;
        }
    }
    let mut ws = Workspace::open(&cfg.output_dir, &cfg.hash())?;
    match command {
        Command::Generate => pipeline::generate(cfg, &mut ws),
        Command::Train => pipeline::train(cfg, &mut ws),
        Command::Eval => pipeline::eval(cfg, &mut ws),
        Command::Sweep => pipeline::sweep(cfg, &mut ws),
        Command::Run => pipeline::run(cfg, &mut ws),
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Numeric(_) => 4,
        Error::Data(_) | Error::Io(_) | Error::Contract(_) | Error::Json(_) => 3,
    }
}
