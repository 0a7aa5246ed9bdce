use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::amplifier::{add_ase, Amplifier};
use super::dataset::Dataset;
use super::fiber::{cdc_compensate, propagate_span, FiberParams};
use super::modulation::{gen_symbols, ModulationFormat};
use super::pulse::{downsample, matched_filter, rrc_shape};
use super::waveform::DualPolWaveform;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Transmitter settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TxConfig {
    pub symbol_rate_gbd: f64,
    pub launch_power_dbm: f64,
    pub rolloff: f64,
    pub sps_sim: usize,
    pub n_symbols: usize,
    pub seed: u64,
}

impl Default for TxConfig {
    fn default() -> Self {
        Self {
            symbol_rate_gbd: 34.4,
            launch_power_dbm: 5.0,
            rolloff: 0.1,
            sps_sim: 8,
            n_symbols: 81_920,
            seed: 1,
        }
    }
}

impl TxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_rate_gbd > 0.0) {
            return Err(Error::Config("symbol rate must be positive".into()));
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(Error::Config(format!("roll-off {} outside (0, 1]", self.rolloff)));
        }
        if self.sps_sim < 4 || !self.sps_sim.is_power_of_two() {
            return Err(Error::Config(format!(
                "sps_sim {} must be a power of two ≥ 4",
                self.sps_sim
            )));
        }
        if self.n_symbols == 0 {
            return Err(Error::Config("n_symbols must be positive".into()));
        }
        if !self.launch_power_dbm.is_finite() {
            return Err(Error::Config("launch power must be finite".into()));
        }
        Ok(())
    }

    pub fn symbol_rate_hz(&self) -> f64 {
        self.symbol_rate_gbd * 1e9
    }
}

/// Fiber plus amplification and integration settings for the whole link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkParams {
    pub fiber: FiberParams,
    pub noise_figure_db: f64,
    pub step_km: f64,
    /// Test hook: EDFAs add no ASE.
    pub noise_off: bool,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            fiber: FiberParams::default(),
            noise_figure_db: 4.5,
            step_km: 0.5,
            noise_off: false,
        }
    }
}

impl LinkParams {
    /// EDFA whose gain exactly restores one span's loss.
    pub fn span_amplifier(&self) -> Amplifier {
        Amplifier {
            gain_db: self.fiber.span_loss_db(),
            noise_figure_db: self.noise_figure_db,
            wavelength_nm: self.fiber.ref_wavelength_nm,
            noise_off: self.noise_off,
        }
    }
}

/// `n_spans` × (fiber span, loss-compensating EDFA). Span `k` draws its
/// noise from a seed derived from `(seed, k)`.
pub fn propagate_link(w: &DualPolWaveform, link: &LinkParams, seed: u64) -> Result<DualPolWaveform> {
    link.fiber.validate()?;
    let amp = link.span_amplifier();
    let mut current = w.clone();
    for span in 0..link.fiber.n_spans {
        current = propagate_span(&current, &link.fiber, link.step_km)?;
        current = add_ase(&current, &amp, derive_seed(seed, span as u64))?;
    }
    Ok(current)
}

/// Receiver front end: CDC, matched filter and symbol-rate sampling.
pub fn receive(w: &DualPolWaveform, tx: &TxConfig, fiber: &FiberParams) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let compensated = cdc_compensate(w, fiber);
    let filtered = matched_filter(&compensated, tx.rolloff, tx.sps_sim)?;
    Ok((
        downsample(&filtered.x_pol, tx.sps_sim, 0),
        downsample(&filtered.y_pol, tx.sps_sim, 0),
    ))
}

/// Full transmission: symbols → link → receiver → aligned, normalized dataset.
pub fn simulate(format: ModulationFormat, tx: &TxConfig, link: &LinkParams) -> Result<Dataset> {
    tx.validate()?;
    let symbols = gen_symbols(format, tx.n_symbols, derive_seed(tx.seed, 0));
    let launched = rrc_shape(
        &symbols.x,
        &symbols.y,
        tx.rolloff,
        tx.sps_sim,
        tx.symbol_rate_hz(),
        tx.launch_power_dbm,
    )?;
    let received = propagate_link(&launched, link, derive_seed(tx.seed, 1))?;
    let (rx_x, rx_y) = receive(&received, tx, &link.fiber)?;
    Dataset::from_received(
        rx_x,
        rx_y,
        symbols.x,
        symbols.y,
        format,
        tx.launch_power_dbm,
        tx.seed,
    )
}
