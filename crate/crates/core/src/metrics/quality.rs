use num_complex::Complex64;

use super::special::{erfc, erfcinv};
use crate::channel::{qam_demap_hard, Dataset, ModulationFormat};
use crate::equalizer::{equalize_dataset, EqualizerModel};
use crate::error::{Error, Result};
use crate::transfer::TrainLog;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerReport {
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
}

impl BerReport {
    pub fn new(bit_errors: u64, bits_total: u64) -> Self {
        assert!(bit_errors <= bits_total);
        Self {
            bit_errors,
            bits_total,
            ber: bit_errors as f64 / bits_total.max(1) as f64,
        }
    }

    pub fn merge(self, other: BerReport) -> BerReport {
        BerReport::new(self.bit_errors + other.bit_errors, self.bits_total + other.bits_total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QReport {
    pub q_db: f64,
    pub ber_source: BerReport,
    /// Set when no bit errors were observed and the BER was floored at
    /// `1 / (2 · bits_total)`.
    pub clipped: bool,
}

/// Hard-decision bit errors of equalized symbols against transmitted
/// labels, pooled over both polarizations.
pub fn count_ber(
    symbols: (&[Complex64], &[Complex64]),
    labels: (&[u32], &[u32]),
    format: ModulationFormat,
) -> Result<BerReport> {
    if symbols.0.len() != labels.0.len() || symbols.1.len() != labels.1.len() {
        return Err(Error::Shape(format!(
            "{}+{} symbols vs {}+{} labels",
            symbols.0.len(),
            symbols.1.len(),
            labels.0.len(),
            labels.1.len()
        )));
    }
    let errors: u64 = [(symbols.0, labels.0), (symbols.1, labels.1)]
        .iter()
        .flat_map(|(s, l)| s.iter().zip(l.iter()))
        .map(|(s, &l)| (qam_demap_hard(*s, format) ^ l).count_ones() as u64)
        .sum();
    let n = (symbols.0.len() + symbols.1.len()) as u64;
    Ok(BerReport::new(errors, n * format.bits_per_symbol() as u64))
}

/// `20·log10(√2 · erfcinv(2·BER))`, defined for 0 < BER < 0.5.
pub fn ber_to_q_db(ber: f64) -> Result<f64> {
    if !(ber < 0.5) {
        return Err(Error::NoSignal(ber));
    }
    if !(ber > 0.0) {
        return Err(Error::Config(format!("BER {ber} must be positive; use q_report for clipping")));
    }
    Ok(20.0 * (std::f64::consts::SQRT_2 * erfcinv(2.0 * ber)).log10())
}

pub fn q_db_to_ber(q_db: f64) -> f64 {
    let q = 10f64.powf(q_db / 20.0);
    0.5 * erfc(q / std::f64::consts::SQRT_2)
}

pub fn q_report(ber: BerReport) -> Result<QReport> {
    if ber.bits_total == 0 {
        return Err(Error::Shape("no bits counted".into()));
    }
    let clipped = ber.bit_errors == 0;
    let effective = if clipped {
        1.0 / (2.0 * ber.bits_total as f64)
    } else {
        ber.ber
    };
    Ok(QReport {
        q_db: ber_to_q_db(effective)?,
        ber_source: ber,
        clipped,
    })
}

/// First logged epoch whose test Q reaches `q_target`.
pub fn epochs_to_reach(log: &TrainLog, q_target: f64) -> Option<usize> {
    log.records.iter().find(|r| r.test_q_db >= q_target).map(|r| r.epoch)
}

/// `100 · (baseline − reduced) / baseline`.
pub fn reduction_percent(baseline: f64, reduced: f64) -> f64 {
    100.0 * (baseline - reduced) / baseline
}

/// Q of the CDC-only received symbols (after the dataset's scalar
/// alignment), i.e. no neural equalization.
pub fn no_nn_q(ds: &Dataset) -> Result<QReport> {
    let (ax, ay) = ds.aligned_rx();
    let (lx, ly) = ds.tx_labels();
    q_report(count_ber((&ax, &ay), (&lx, &ly), ds.format)?)
}

/// Q of a model's equalized output. Edge symbols without a full window
/// are excluded.
pub fn model_q(model: &EqualizerModel, ds: &Dataset) -> Result<QReport> {
    let m = model.topology.window_half;
    let (ex, ey) = equalize_dataset(model, ds)?;
    let (lx, ly) = ds.tx_labels();
    let n = ds.len();
    q_report(count_ber((&ex, &ey), (&lx[m..n - m], &ly[m..n - m]), ds.format)?)
}

/// `(no-NN Q, source-model Q)` on a target dataset.
pub fn reference_baselines(source: &EqualizerModel, target: &Dataset) -> Result<(QReport, QReport)> {
    Ok((no_nn_q(target)?, model_q(source, target)?))
}
