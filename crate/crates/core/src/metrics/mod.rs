//! BER counting, Q-factor conversion and curve utilities.
//!
//! Q-factor is defined from BER through the Gaussian tail relation
//! `Q = 20·log10(√2 · erfcinv(2·BER))` dB. BER is counted jointly over both
//! polarizations.

mod quality;
mod special;

pub use quality::{
    ber_to_q_db, count_ber, epochs_to_reach, model_q, no_nn_q, q_db_to_ber, q_report, reduction_percent,
    reference_baselines, BerReport, QReport,
};
pub use special::{erfc, erfcinv};
