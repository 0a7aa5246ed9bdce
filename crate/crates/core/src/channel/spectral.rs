use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse plan pair for one transform length.
pub(crate) struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    len: usize,
}

impl Spectral {
    pub(crate) fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            len,
        }
    }

    pub(crate) fn forward(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len);
        self.forward.process_with_scratch(data, &mut self.scratch);
    }

    /// Inverse transform including the 1/N normalization.
    pub(crate) fn inverse(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len);
        self.inverse.process_with_scratch(data, &mut self.scratch);
        let norm = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v *= norm;
        }
    }

    /// Applies a frequency-domain transfer function in place.
    pub(crate) fn filter(&mut self, data: &mut [Complex64], response: &[Complex64]) {
        self.forward(data);
        for (v, h) in data.iter_mut().zip(response) {
            *v *= h;
        }
        self.inverse(data);
    }
}

/// DFT bin frequencies in units of `sample_rate` (fftfreq ordering).
pub(crate) fn bin_frequencies(len: usize, sample_rate: f64) -> Vec<f64> {
    let n = len as f64;
    (0..len)
        .map(|k| {
            let k = if k < len.div_ceil(2) { k as f64 } else { k as f64 - n };
            k * sample_rate / n
        })
        .collect()
}
