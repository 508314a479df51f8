use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sarfocus::config::EngineKind;
use sarfocus::experiment::{output_dir, Experiment};
use sarfocus::{ExperimentConfig, HarnessError};

/// Joint SAR image reconstruction and phase-error autofocus experiments.
#[derive(Debug, Parser)]
#[command(name = "sarfocus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a corrupted phase history from the configured scene.
    Simulate(Common),
    /// Autofocus the phase history in the output directory.
    Autofocus(Common),
    /// Score the autofocused images and write the report.
    Evaluate(Common),
    /// Simulate, autofocus and evaluate in one go.
    Run(Common),
    /// Print the default configuration.
    Defaults,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the configured engines.
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Phase-error seed; the noise seed becomes N + 1.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Write per-iteration cost traces.
    #[arg(long)]
    trace: bool,
    /// Percentile contrast stretch for graymap images.
    #[arg(long)]
    contrast: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Cfba,
    Wama,
    Both,
}

impl Common {
    fn resolve(&self) -> Result<(Experiment, PathBuf), HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        match self.engine {
            Some(EngineArg::Cfba) => cfg.autofocus.engines = vec![EngineKind::Cfba],
            Some(EngineArg::Wama) => cfg.autofocus.engines = vec![EngineKind::Wama],
            Some(EngineArg::Both) => cfg.autofocus.engines = vec![EngineKind::Cfba, EngineKind::Wama],
            None => {}
        }
        if let Some(seed) = self.seed {
            cfg.reseed(seed);
        }
        cfg.output.trace |= self.trace;
        cfg.output.contrast |= self.contrast;
        let dir = output_dir(&cfg, self.out.clone());
        Ok((Experiment::prepare(cfg)?, dir))
    }
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Defaults => print!("{}", ExperimentConfig::defaults_toml()),
        Command::Simulate(args) => {
            let (exp, dir) = args.resolve()?;
            exp.simulate(&dir)?;
            eprintln!("wrote simulation to {}", dir.display());
        }
        Command::Autofocus(args) => {
            let (exp, dir) = args.resolve()?;
            for &kind in &exp.config.autofocus.engines {
                let result = exp.autofocus(&dir, kind)?;
                eprintln!(
                    "{}: {} outer iterations, converged {}",
                    kind.name(),
                    result.iterations,
                    result.converged
                );
            }
        }
        Command::Evaluate(args) => {
            let (exp, dir) = args.resolve()?;
            print!("{}", exp.evaluate(&dir)?.to_text());
        }
        Command::Run(args) => {
            let (exp, dir) = args.resolve()?;
            exp.simulate(&dir)?;
            for &kind in &exp.config.autofocus.engines {
                exp.autofocus(&dir, kind)?;
            }
            print!("{}", exp.evaluate(&dir)?.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(inner) = source {
                eprintln!("  caused by: {inner}");
                source = inner.source();
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
