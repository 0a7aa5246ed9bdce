//! Root-raised-cosine shaping and matched filtering.
//!
//! The filter is applied as an exact frequency response over the whole
//! periodic block rather than as truncated taps, so shaping followed by
//! matched filtering and symbol-rate sampling is ISI-free to rounding error.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::spectral::{bin_frequencies, Spectral};
use super::waveform::DualPolWaveform;
use crate::error::{Error, Result};

/// Raised-cosine spectrum, frequency in units of the symbol rate, peak 1.
fn raised_cosine(f: f64, rolloff: f64) -> f64 {
    let f = f.abs();
    let lo = (1.0 - rolloff) / 2.0;
    let hi = (1.0 + rolloff) / 2.0;
    if f <= lo {
        1.0
    } else if f <= hi {
        0.5 * (1.0 + (PI / rolloff * (f - lo)).cos())
    } else {
        0.0
    }
}

/// RRC response on the DFT grid of a block of `len` samples at `sps`.
///
/// Scaled so the discrete impulse response has unit energy.
fn rrc_response(len: usize, sps: usize, rolloff: f64) -> Vec<Complex64> {
    bin_frequencies(len, sps as f64)
        .into_iter()
        .map(|f| Complex64::new((sps as f64 * raised_cosine(f, rolloff)).sqrt(), 0.0))
        .collect()
}

fn check_params(rolloff: f64, sps: usize) -> Result<()> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(Error::Config(format!("roll-off {rolloff} outside (0, 1]")));
    }
    if sps < 4 || !sps.is_power_of_two() {
        return Err(Error::Config(format!(
            "oversampling {sps} must be a power of two ≥ 4"
        )));
    }
    Ok(())
}

fn upsample(symbols: &[Complex64], sps: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); symbols.len() * sps];
    for (i, s) in symbols.iter().enumerate() {
        out[i * sps] = *s;
    }
    out
}

/// Impulse response of the RRC filter on a block of `n_symbols` symbols,
/// circularly centered at sample `len / 2`.
pub fn rrc_impulse_response(n_symbols: usize, sps: usize, rolloff: f64) -> Result<Vec<f64>> {
    check_params(rolloff, sps)?;
    let len = n_symbols * sps;
    let mut h = rrc_response(len, sps, rolloff);
    Spectral::new(len).inverse(&mut h);
    let half = len / 2;
    Ok((0..len).map(|i| h[(i + len - half) % len].re).collect())
}

/// Upsamples and RRC-filters both polarizations without power scaling.
pub fn shape_symbols(
    x: &[Complex64],
    y: &[Complex64],
    rolloff: f64,
    sps: usize,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_params(rolloff, sps)?;
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::Misaligned(format!(
            "polarization symbol counts {} and {}",
            x.len(),
            y.len()
        )));
    }
    let len = x.len() * sps;
    let response = rrc_response(len, sps, rolloff);
    let mut plan = Spectral::new(len);
    let mut ux = upsample(x, sps);
    let mut uy = upsample(y, sps);
    plan.filter(&mut ux, &response);
    plan.filter(&mut uy, &response);
    Ok((ux, uy))
}

/// Pulse-shapes symbols and scales the result so that the mean of
/// |x|² + |y|² equals the launch power.
pub fn rrc_shape(
    x: &[Complex64],
    y: &[Complex64],
    rolloff: f64,
    sps: usize,
    symbol_rate_hz: f64,
    launch_power_dbm: f64,
) -> Result<DualPolWaveform> {
    let (ux, uy) = shape_symbols(x, y, rolloff, sps)?;
    let power_w = dbm_to_watts(launch_power_dbm);
    let mut w = DualPolWaveform::new(ux, uy, symbol_rate_hz * sps as f64, power_w)?;
    let current = w.mean_power();
    if current > 0.0 {
        w.scale((power_w / current).sqrt());
    }
    Ok(w)
}

/// Applies the RRC matched filter to both polarizations.
pub fn matched_filter(w: &DualPolWaveform, rolloff: f64, sps: usize) -> Result<DualPolWaveform> {
    check_params(rolloff, sps)?;
    if w.len() % sps != 0 {
        return Err(Error::Misaligned(format!(
            "{} samples is not a whole number of {sps}-sample symbols",
            w.len()
        )));
    }
    let response = rrc_response(w.len(), sps, rolloff);
    let mut plan = Spectral::new(w.len());
    let mut out = w.clone();
    plan.filter(&mut out.x_pol, &response);
    plan.filter(&mut out.y_pol, &response);
    Ok(out)
}

/// Takes every `sps`-th sample starting at `phase`.
pub fn downsample(samples: &[Complex64], sps: usize, phase: usize) -> Vec<Complex64> {
    samples.iter().skip(phase).step_by(sps).copied().collect()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_symbols, ModulationFormat};

    #[test]
    fn unit_energy_impulse_peaks_at_center() {
        let h = rrc_impulse_response(256, 8, 0.1).unwrap();
        let energy: f64 = h.iter().map(|v| v * v).sum();
        assert!((energy - 1.0).abs() < 1e-9, "{energy}");
        let (peak, _) = h
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(peak, h.len() / 2);
    }

    #[test]
    fn single_symbol_shape_peaks_on_its_slot() {
        let mut x = vec![Complex64::new(0.0, 0.0); 64];
        x[20] = Complex64::new(1.0, 0.0);
        let (ux, _) = shape_symbols(&x, &x, 0.1, 8).unwrap();
        let (peak, _) = ux
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert_eq!(peak, 20 * 8);
        let energy: f64 = ux.iter().map(|v| v.norm_sqr()).sum();
        assert!((energy - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shape_match_sample_recovers_symbols() {
        let s = gen_symbols(ModulationFormat::Qam16, 2048, 5);
        let (ux, uy) = shape_symbols(&s.x, &s.y, 0.1, 8).unwrap();
        let w = DualPolWaveform::new(ux, uy, 8.0, 1.0).unwrap();
        let m = matched_filter(&w, 0.1, 8).unwrap();
        let rx = downsample(&m.x_pol, 8, 0);
        let rms = (rx
            .iter()
            .zip(&s.x)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / rx.len() as f64)
            .sqrt();
        assert!(rms < 1e-6, "rms {rms}");
    }

    #[test]
    fn launch_power_sets_mean_power() {
        let s = gen_symbols(ModulationFormat::Qam16, 1024, 1);
        let w = rrc_shape(&s.x, &s.y, 0.1, 8, 34.4e9, 5.0).unwrap();
        let expect = 3.1623e-3;
        assert!((w.mean_power() - expect).abs() / expect < 1e-3);
        assert!((w.sample_rate_hz - 8.0 * 34.4e9).abs() < 1.0);
    }

    #[test]
    fn rejects_bad_oversampling() {
        let x = vec![Complex64::new(1.0, 0.0); 4];
        assert!(shape_symbols(&x, &x, 0.1, 6).is_err());
        assert!(shape_symbols(&x, &x, 0.1, 2).is_err());
        assert!(shape_symbols(&x, &x, 0.0, 8).is_err());
    }
}
