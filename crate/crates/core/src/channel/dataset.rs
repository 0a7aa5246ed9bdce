use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::modulation::{qam_demap_hard, ModulationFormat};
use crate::error::{Error, Result};

/// Aligned received/transmitted symbol pairs for both polarizations.
///
/// `rx_*` are phase/amplitude-aligned to the transmitted symbols by a
/// least-squares complex scalar per polarization and then divided by
/// `normalization_scale`, so the joint mean power over both polarizations
/// is 1. Multiplying `rx_*` by `normalization_scale` gives back the aligned
/// symbols in constellation units; `tx_*` are exact constellation points.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rx_x: Vec<Complex64>,
    pub rx_y: Vec<Complex64>,
    pub tx_x: Vec<Complex64>,
    pub tx_y: Vec<Complex64>,
    pub format: ModulationFormat,
    pub launch_power_dbm: f64,
    pub seed: u64,
    pub normalization_scale: f64,
}

/// Contiguous train/validation/test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub validate: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            validate: 0.1,
            test: 0.1,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validate, self.test];
        if parts.iter().any(|p| !(*p >= 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions {parts:?} must be non-negative and sum to 1"
            )));
        }
        Ok(())
    }

    /// Symbol counts for a dataset of `n` symbols.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let train = ((self.train * n as f64).round() as usize).min(n);
        let validate = ((self.validate * n as f64).round() as usize).min(n - train);
        (train, validate, n - train - validate)
    }
}

fn ls_gain(rx: &[Complex64], tx: &[Complex64]) -> Result<Complex64> {
    let num: Complex64 = rx.iter().zip(tx).map(|(r, t)| r.conj() * t).sum();
    let den: f64 = rx.iter().map(|r| r.norm_sqr()).sum();
    if !(den > 0.0) || !num.re.is_finite() || !num.im.is_finite() {
        return Err(Error::NonFinite("received symbols (zero or invalid power)"));
    }
    Ok(num / den)
}

impl Dataset {
    /// Aligns and normalizes received symbols against the transmitted ones.
    pub fn from_received(
        rx_x: Vec<Complex64>,
        rx_y: Vec<Complex64>,
        tx_x: Vec<Complex64>,
        tx_y: Vec<Complex64>,
        format: ModulationFormat,
        launch_power_dbm: f64,
        seed: u64,
    ) -> Result<Self> {
        let n = tx_x.len();
        if rx_x.len() != n || rx_y.len() != n || tx_y.len() != n {
            return Err(Error::Misaligned(format!(
                "rx_x {}, rx_y {}, tx_x {}, tx_y {}",
                rx_x.len(),
                rx_y.len(),
                n,
                tx_y.len()
            )));
        }
        if n == 0 {
            return Err(Error::Misaligned("empty symbol streams".into()));
        }
        let gx = ls_gain(&rx_x, &tx_x)?;
        let gy = ls_gain(&rx_y, &tx_y)?;
        let mut rx_x: Vec<Complex64> = rx_x.into_iter().map(|r| r * gx).collect();
        let mut rx_y: Vec<Complex64> = rx_y.into_iter().map(|r| r * gy).collect();
        let power = rx_x.iter().chain(&rx_y).map(|r| r.norm_sqr()).sum::<f64>() / (2 * n) as f64;
        let scale = power.sqrt();
        for r in rx_x.iter_mut().chain(rx_y.iter_mut()) {
            *r /= scale;
        }
        Ok(Self {
            rx_x,
            rx_y,
            tx_x,
            tx_y,
            format,
            launch_power_dbm,
            seed,
            normalization_scale: scale,
        })
    }

    pub fn len(&self) -> usize {
        self.tx_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx_x.is_empty()
    }

    pub fn slice(&self, range: Range<usize>) -> Dataset {
        Dataset {
            rx_x: self.rx_x[range.clone()].to_vec(),
            rx_y: self.rx_y[range.clone()].to_vec(),
            tx_x: self.tx_x[range.clone()].to_vec(),
            tx_y: self.tx_y[range].to_vec(),
            ..*self
        }
    }

    /// Contiguous train/validation/test blocks.
    pub fn split(&self, fractions: &SplitFractions) -> Result<(Dataset, Dataset, Dataset)> {
        fractions.validate()?;
        let (a, b, _) = fractions.sizes(self.len());
        Ok((
            self.slice(0..a),
            self.slice(a..a + b),
            self.slice(a + b..self.len()),
        ))
    }

    /// Received symbols scaled back to constellation units (the unequalized
    /// decision input).
    pub fn aligned_rx(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let s = self.normalization_scale;
        (
            self.rx_x.iter().map(|r| r * s).collect(),
            self.rx_y.iter().map(|r| r * s).collect(),
        )
    }

    /// Bit labels of the transmitted symbols.
    pub fn tx_labels(&self) -> (Vec<u32>, Vec<u32>) {
        let demap = |v: &[Complex64]| v.iter().map(|p| qam_demap_hard(*p, self.format)).collect();
        (demap(&self.tx_x), demap(&self.tx_y))
    }

    /// Mean squared error between aligned rx and tx over both polarizations.
    pub fn mse(&self) -> f64 {
        let (ax, ay) = self.aligned_rx();
        let sum: f64 = ax
            .iter()
            .zip(&self.tx_x)
            .chain(ay.iter().zip(&self.tx_y))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        sum / (2 * self.len()).max(1) as f64
    }
}

/// Aligns received symbols and cuts the result into contiguous splits.
#[allow(clippy::too_many_arguments)]
pub fn build_dataset(
    rx_x: Vec<Complex64>,
    rx_y: Vec<Complex64>,
    tx_x: Vec<Complex64>,
    tx_y: Vec<Complex64>,
    format: ModulationFormat,
    launch_power_dbm: f64,
    split: &SplitFractions,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    Dataset::from_received(rx_x, rx_y, tx_x, tx_y, format, launch_power_dbm, seed)?.split(split)
}
