use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cteq::experiment::{cmd_generate, cmd_report, cmd_train_source, cmd_transfer, selftest, ExperimentConfig};

#[derive(Parser)]
#[command(name = "cteq", version, about = "Conv+biLSTM equalizer transfer-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and store the source and target datasets.
    Generate(Common),
    /// Train the source model on the source dataset.
    TrainSource(Common),
    /// Run transfer, from-scratch and baseline curves for every target.
    Transfer(Common),
    /// Merge curves into panel CSVs and write the summary table.
    Report(Common),
    /// Run the oracle and gradient checks.
    Selftest,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training seed (model initialization and shuffling).
    #[arg(long)]
    seed: Option<u64>,
    /// Use the full 262144-symbol training split.
    #[arg(long)]
    paper_scale: bool,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Disable amplifier noise.
    #[arg(long)]
    noise_off: bool,
}

impl Common {
    fn config(&self) -> cteq::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.train.seed = s;
        }
        if self.paper_scale {
            cfg.apply_paper_scale();
        }
        if self.noise_off {
            cfg.link.noise_off = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> cteq::Result<bool> {
    match cli.command {
        Command::Generate(c) => {
            for g in cmd_generate(&c.config()?, c.jobs)? {
                println!(
                    "{} -> {} (no-NN Q {:.3} dB{})",
                    g.system.label(),
                    g.path.display(),
                    g.no_nn.q_db,
                    if g.no_nn.clipped { ", clipped" } else { "" }
                );
            }
        }
        Command::TrainSource(c) => {
            let run = cmd_train_source(&c.config()?)?;
            let last = run.log.records.last().expect("at least one epoch");
            println!(
                "source: final test Q {:.3} dB, best validation at epoch {}",
                last.test_q_db,
                run.log.selected_epoch.unwrap_or(0)
            );
        }
        Command::Transfer(c) => {
            let out = cmd_transfer(&c.config()?, c.jobs)?;
            println!("source checkpoint sha256 {}", out.source_sha256);
            for t in &out.targets {
                println!("{}: {} curves, manifest {}", t.system.label(), t.logs.len(), t.manifest.display());
            }
        }
        Command::Report(c) => {
            let report = cmd_report(&c.config()?.output_dir)?;
            print!("{}", std::fs::read_to_string(&report.summary_path).map_err(|e| cteq::Error::io(&report.summary_path, e))?);
        }
        Command::Selftest => {
            let results = selftest();
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            return Ok(results.iter().all(|r| r.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
