use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex baseband field of both polarizations, in √W.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPolWaveform {
    pub x_pol: Vec<Complex64>,
    pub y_pol: Vec<Complex64>,
    pub sample_rate_hz: f64,
    /// Nominal launch power in watts.
    pub center_power_w: f64,
}

impl DualPolWaveform {
    pub fn new(
        x_pol: Vec<Complex64>,
        y_pol: Vec<Complex64>,
        sample_rate_hz: f64,
        center_power_w: f64,
    ) -> Result<Self> {
        if x_pol.len() != y_pol.len() {
            return Err(Error::Misaligned(format!(
                "x_pol has {} samples, y_pol has {}",
                x_pol.len(),
                y_pol.len()
            )));
        }
        if !(sample_rate_hz > 0.0) {
            return Err(Error::Config(format!("sample rate {sample_rate_hz} must be positive")));
        }
        Ok(Self {
            x_pol,
            y_pol,
            sample_rate_hz,
            center_power_w,
        })
    }

    pub fn len(&self) -> usize {
        self.x_pol.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_pol.is_empty()
    }

    /// Mean of |x|² + |y|² over all samples (W).
    pub fn mean_power(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.energy() / self.len() as f64
    }

    /// Σ |x|² + |y|².
    pub fn energy(&self) -> f64 {
        self.x_pol
            .iter()
            .chain(&self.y_pol)
            .map(|s| s.norm_sqr())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.x_pol
            .iter()
            .chain(&self.y_pol)
            .all(|s| s.re.is_finite() && s.im.is_finite())
    }

    pub(crate) fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite("waveform samples"))
        }
    }

    /// Root-mean-square difference to another waveform over both polarizations.
    pub fn rms_diff(&self, other: &DualPolWaveform) -> f64 {
        let n = self.len().max(1) as f64;
        let sum: f64 = self
            .x_pol
            .iter()
            .zip(&other.x_pol)
            .chain(self.y_pol.iter().zip(&other.y_pol))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (sum / (2.0 * n)).sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.x_pol.iter_mut().chain(self.y_pol.iter_mut()) {
            *s *= factor;
        }
    }
}
