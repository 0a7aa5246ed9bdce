//! Source training, conv-only transfer and target-data subsampling.

mod config;
mod log;
mod mask;
mod train;

pub use config::TrainConfig;
pub use log::{EpochRecord, RunMode, TrainLog, CSV_HEADER};
pub use mask::{make_transfer_mask, FreezeMask};
pub use train::{
    evaluate_snn, frozen_digest, subsample, subsample_len, train, train_from_scratch, train_source, transfer, Splits,
    TrainRun,
};
