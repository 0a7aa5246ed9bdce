//! Runs generate -> train-source -> transfer -> report on a miniature
//! configuration and prints the summary.
//!
//!   cargo run --release --example experiment_matrix -- [output_dir]

use cteq::experiment::{cmd_generate, cmd_report, cmd_train_source, cmd_transfer, ExperimentConfig};

const CONFIG: &str = r#"
fractions = [1.0, 0.1]
source_epochs = 3

[[targets]]
format = "QAM32"
power_dbm = 2.0

[tx]
n_symbols = 8192

[topology]
window_half = 4
conv_filters = 8
conv_kernel = 5
lstm_hidden = 8

[train]
epochs = 3
"#;

fn main() -> cteq::Result<()> {
    let mut cfg = ExperimentConfig::from_toml(CONFIG)?;
    cfg.output_dir = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("cteq_experiment_matrix"), Into::into);
    for d in cmd_generate(&cfg, 1)? {
        println!("{}: no-NN Q {:.2} dB", d.system.label(), d.no_nn.q_db);
    }
    cmd_train_source(&cfg)?;
    let out = cmd_transfer(&cfg, 1)?;
    println!("source checkpoint sha256 {}", out.source_sha256);
    let report = cmd_report(&cfg.output_dir)?;
    print!("{}", std::fs::read_to_string(&report.summary_path).expect("summary written"));
    Ok(())
}
