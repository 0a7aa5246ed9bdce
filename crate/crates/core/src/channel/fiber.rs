//! Symmetric split-step Fourier integration of the Manakov equations.
//!
//! Linear part per step: `exp(i β₂/2 ω² h − α/2 h)` applied in the frequency
//! domain. Nonlinear part: `exp(i γ 8/9 (|x|²+|y|²) L_eff)` on both
//! polarizations, where `L_eff = 2 sinh(αh/2)/α` integrates the power profile
//! around the step midpoint. Consecutive linear half steps are fused, so each
//! step costs one forward and one inverse FFT per polarization.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::amplifier::SPEED_OF_LIGHT;
use super::spectral::{bin_frequencies, Spectral};
use super::waveform::DualPolWaveform;
use crate::error::{Error, Result};

const MANAKOV_FACTOR: f64 = 8.0 / 9.0;

/// Fiber and span layout. Defaults are TrueWave Classic values for a
/// 9 × 50 km link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberParams {
    pub alpha_db_per_km: f64,
    /// Dispersion parameter D in ps/(nm·km).
    pub dispersion_ps_nm_km: f64,
    /// Kerr coefficient γ in 1/(W·km).
    pub gamma_per_w_km: f64,
    pub span_km: f64,
    pub n_spans: usize,
    pub ref_wavelength_nm: f64,
}

impl Default for FiberParams {
    fn default() -> Self {
        Self {
            alpha_db_per_km: 0.23,
            dispersion_ps_nm_km: 2.8,
            gamma_per_w_km: 2.5,
            span_km: 50.0,
            n_spans: 9,
            ref_wavelength_nm: 1550.0,
        }
    }
}

impl FiberParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.alpha_db_per_km,
            self.dispersion_ps_nm_km,
            self.gamma_per_w_km,
            self.span_km,
            self.ref_wavelength_nm,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("fiber parameters must be finite".into()));
        }
        if self.alpha_db_per_km < 0.0 {
            return Err(Error::Config(format!(
                "attenuation {} dB/km is negative",
                self.alpha_db_per_km
            )));
        }
        if self.span_km <= 0.0 {
            return Err(Error::Config(format!("span length {} km", self.span_km)));
        }
        if self.n_spans == 0 {
            return Err(Error::Config("at least one span is required".into()));
        }
        if self.ref_wavelength_nm <= 0.0 {
            return Err(Error::Config("wavelength must be positive".into()));
        }
        Ok(())
    }

    /// Group-velocity dispersion β₂ in s²/km.
    pub fn beta2_s2_per_km(&self) -> f64 {
        let lambda_m = self.ref_wavelength_nm * 1e-9;
        // ps/(nm km) -> s/(m km)
        let d = self.dispersion_ps_nm_km * 1e-3;
        -d * lambda_m * lambda_m / (2.0 * PI * SPEED_OF_LIGHT)
    }

    /// Power attenuation coefficient in 1/km.
    pub fn alpha_per_km(&self) -> f64 {
        self.alpha_db_per_km * std::f64::consts::LN_10 / 10.0
    }

    pub fn span_loss_db(&self) -> f64 {
        self.alpha_db_per_km * self.span_km
    }

    pub fn link_length_km(&self) -> f64 {
        self.span_km * self.n_spans as f64
    }

    /// Dispersion length T0²/|β₂| in km for a pulse of 1/e half-width `t0_s`.
    pub fn dispersion_length_km(&self, t0_s: f64) -> f64 {
        t0_s * t0_s / self.beta2_s2_per_km().abs()
    }
}

fn angular_frequencies(len: usize, sample_rate: f64) -> Vec<f64> {
    bin_frequencies(len, sample_rate)
        .into_iter()
        .map(|f| 2.0 * PI * f)
        .collect()
}

fn linear_operator(omega: &[f64], beta2: f64, field_loss: f64, length_km: f64) -> Vec<Complex64> {
    omega
        .iter()
        .map(|w| Complex64::from_polar((-field_loss * length_km).exp(), 0.5 * beta2 * w * w * length_km))
        .collect()
}

fn multiply(data: &mut [Complex64], op: &[Complex64]) {
    for (a, b) in data.iter_mut().zip(op) {
        *a *= b;
    }
}

fn nonlinear_step(x: &mut [Complex64], y: &mut [Complex64], coeff: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let phi = coeff * (a.norm_sqr() + b.norm_sqr());
        let (s, c) = phi.sin_cos();
        let rot = Complex64::new(c, s);
        *a *= rot;
        *b *= rot;
    }
}

fn steps_per_span(span_km: f64, step_km: f64) -> Result<usize> {
    if !(step_km > 0.0) {
        return Err(Error::Config(format!("step {step_km} km must be positive")));
    }
    let n = (span_km / step_km).round();
    if n < 1.0 || (n * step_km - span_km).abs() > 1e-9 * span_km.max(1.0) {
        return Err(Error::Config(format!(
            "step {step_km} km does not divide span {span_km} km"
        )));
    }
    Ok(n as usize)
}

/// Propagates one fiber span. The output carries the full span loss.
pub fn propagate_span(w: &DualPolWaveform, fiber: &FiberParams, step_km: f64) -> Result<DualPolWaveform> {
    fiber.validate()?;
    w.ensure_finite()?;
    let n_steps = steps_per_span(fiber.span_km, step_km)?;
    let h = fiber.span_km / n_steps as f64;
    let alpha = fiber.alpha_per_km();
    let omega = angular_frequencies(w.len(), w.sample_rate_hz);
    let beta2 = fiber.beta2_s2_per_km();
    let half = linear_operator(&omega, beta2, alpha / 2.0, h / 2.0);
    let full = linear_operator(&omega, beta2, alpha / 2.0, h);
    let l_eff = if alpha > 0.0 {
        2.0 * (alpha * h / 2.0).sinh() / alpha
    } else {
        h
    };
    let nl_coeff = fiber.gamma_per_w_km * MANAKOV_FACTOR * l_eff;

    let mut out = w.clone();
    let mut plan = Spectral::new(w.len());
    let (x, y) = (&mut out.x_pol, &mut out.y_pol);
    plan.forward(x);
    plan.forward(y);
    multiply(x, &half);
    multiply(y, &half);
    for step in 0..n_steps {
        plan.inverse(x);
        plan.inverse(y);
        nonlinear_step(x, y, nl_coeff);
        plan.forward(x);
        plan.forward(y);
        let op = if step + 1 == n_steps { &half } else { &full };
        multiply(x, op);
        multiply(y, op);
    }
    plan.inverse(x);
    plan.inverse(y);
    out.ensure_finite()?;
    Ok(out)
}

/// Applies pure chromatic dispersion over `length_km` (negative undoes it).
pub fn apply_dispersion(w: &DualPolWaveform, beta2_s2_per_km: f64, length_km: f64) -> DualPolWaveform {
    let omega = angular_frequencies(w.len(), w.sample_rate_hz);
    let op = linear_operator(&omega, beta2_s2_per_km, 0.0, length_km);
    let mut out = w.clone();
    let mut plan = Spectral::new(w.len());
    plan.filter(&mut out.x_pol, &op);
    plan.filter(&mut out.y_pol, &op);
    out
}

/// All-pass filter inverting the dispersion of the whole link.
pub fn cdc_compensate(w: &DualPolWaveform, fiber: &FiberParams) -> DualPolWaveform {
    apply_dispersion(w, fiber.beta2_s2_per_km(), -fiber.link_length_km())
}
