//! Experiment configuration and the commands behind the `cteq` binary.

mod commands;
mod config;
mod pool;
mod report;
mod selftest;

pub use commands::{
    cmd_generate, cmd_train_source, cmd_transfer, dataset_path, load_or_generate, source_checkpoint_path,
    GeneratedDataset, TargetOutcome, TransferOutcome,
};
pub use config::{ExperimentConfig, SystemSpec, PAPER_SCALE_SYMBOLS};
pub use pool::run_pool;
pub use report::{cmd_report, panel_csv, PanelSummary, Report};
pub use selftest::{selftest, CheckOutcome};
