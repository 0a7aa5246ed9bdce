use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use super::waveform::DualPolWaveform;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Lumped EDFA with ASE noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplifier {
    pub gain_db: f64,
    pub noise_figure_db: f64,
    pub wavelength_nm: f64,
    /// Test hook: amplify without adding noise.
    pub noise_off: bool,
}

impl Amplifier {
    pub fn gain_linear(&self) -> f64 {
        10f64.powf(self.gain_db / 10.0)
    }

    /// Spontaneous-emission factor n_sp = 10^(NF/10) / 2.
    pub fn n_sp(&self) -> f64 {
        10f64.powf(self.noise_figure_db / 10.0) / 2.0
    }

    /// One-sided ASE power spectral density per polarization (W/Hz).
    pub fn ase_psd(&self) -> f64 {
        if self.noise_off {
            return 0.0;
        }
        let nu = SPEED_OF_LIGHT / (self.wavelength_nm * 1e-9);
        self.n_sp() * PLANCK * nu * (self.gain_linear() - 1.0)
    }

    /// Noise variance E|n|² per complex sample and polarization.
    pub fn noise_variance(&self, sample_rate_hz: f64) -> f64 {
        self.ase_psd() * sample_rate_hz
    }
}

/// Amplifies the field by the configured gain and adds circular complex
/// Gaussian ASE to each polarization.
pub fn add_ase(w: &DualPolWaveform, amp: &Amplifier, seed: u64) -> Result<DualPolWaveform> {
    if !(amp.gain_db >= 0.0) {
        return Err(Error::Config(format!("amplifier gain {} dB", amp.gain_db)));
    }
    let field_gain = amp.gain_linear().sqrt();
    let mut out = w.clone();
    out.scale(field_gain);
    let variance = amp.noise_variance(w.sample_rate_hz);
    if variance > 0.0 {
        let sigma = (variance / 2.0).sqrt();
        for (pol, samples) in [&mut out.x_pol, &mut out.y_pol].into_iter().enumerate() {
            let mut rng = seeded(derive_seed(seed, pol as u64));
            for s in samples.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *s += Complex64::new(sigma * re, sigma * im);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amp(noise_off: bool) -> Amplifier {
        Amplifier {
            gain_db: 11.5,
            noise_figure_db: 4.5,
            wavelength_nm: 1550.0,
            noise_off,
        }
    }

    fn tone(n: usize, power: f64) -> DualPolWaveform {
        let s = vec![Complex64::new(power.sqrt(), 0.0); n];
        DualPolWaveform::new(s.clone(), s, 275.2e9, power).unwrap()
    }

    #[test]
    fn noise_off_is_pure_gain() {
        let w = tone(256, 1e-3);
        let a = add_ase(&w, &amp(true), 1).unwrap();
        let b = add_ase(&w, &amp(true), 2).unwrap();
        assert_eq!(a, b);
        let g = 10f64.powf(1.15);
        assert!((a.mean_power() / w.mean_power() - g).abs() < 1e-12);
    }

    #[test]
    fn measured_noise_variance_matches_psd() {
        let n = 1 << 20;
        let w = tone(n, 0.0);
        let a = amp(false);
        let out = add_ase(&w, &a, 11).unwrap();
        let expect = a.noise_variance(w.sample_rate_hz);
        for pol in [&out.x_pol, &out.y_pol] {
            let measured = pol.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
            assert!((measured / expect - 1.0).abs() < 0.02, "{measured} vs {expect}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let w = tone(128, 1e-3);
        assert_eq!(add_ase(&w, &amp(false), 5).unwrap(), add_ase(&w, &amp(false), 5).unwrap());
        assert_ne!(add_ase(&w, &amp(false), 5).unwrap(), add_ase(&w, &amp(false), 6).unwrap());
    }

    #[test]
    fn negative_gain_rejected() {
        let mut a = amp(true);
        a.gain_db = -1.0;
        assert!(add_ase(&tone(4, 1.0), &a, 0).is_err());
    }
}
