use num_complex::Complex64;

use crate::channel::Dataset;
use crate::error::{Error, Result};
use crate::tensor::NumArray;

/// Features per symbol slot: Re x, Im x, Re y, Im y.
pub const N_FEATURES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    X,
    Y,
}

/// One training/inference example.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedExample {
    /// `[(2M+1) × 4]`, consecutive symbol slots centered on the label.
    pub features: NumArray,
    /// Normalized (Re, Im) of the transmitted central symbol.
    pub label: NumArray,
}

/// Zero-copy window access over one polarization of a dataset.
///
/// Feature rows are stored once for the whole sequence; window `k` is the
/// contiguous row block `k..k + 2M + 1`, labelled by symbol `k + M`.
#[derive(Debug, Clone)]
pub struct WindowView {
    rows: Vec<f64>,
    labels: Vec<f64>,
    half: usize,
    n_symbols: usize,
}

impl WindowView {
    pub fn new(ds: &Dataset, half: usize, pol: Polarization) -> Result<Self> {
        let n = ds.len();
        if n <= 2 * half {
            return Err(Error::Shape(format!(
                "dataset of {n} symbols is too short for windows of {}",
                2 * half + 1
            )));
        }
        let (own, other, tx) = match pol {
            Polarization::X => (&ds.rx_x, &ds.rx_y, &ds.tx_x),
            Polarization::Y => (&ds.rx_y, &ds.rx_x, &ds.tx_y),
        };
        let mut rows = Vec::with_capacity(n * N_FEATURES);
        for (a, b) in own.iter().zip(other) {
            rows.extend_from_slice(&[a.re, a.im, b.re, b.im]);
        }
        let inv = 1.0 / ds.normalization_scale;
        let labels = tx.iter().flat_map(|t| [t.re * inv, t.im * inv]).collect();
        Ok(Self {
            rows,
            labels,
            half,
            n_symbols: n,
        })
    }

    pub fn len(&self) -> usize {
        self.n_symbols - 2 * self.half
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn window_len(&self) -> usize {
        2 * self.half + 1
    }

    pub fn features(&self, k: usize) -> &[f64] {
        &self.rows[k * N_FEATURES..(k + self.window_len()) * N_FEATURES]
    }

    pub fn label(&self, k: usize) -> [f64; 2] {
        let c = k + self.half;
        [self.labels[2 * c], self.labels[2 * c + 1]]
    }

    pub fn example(&self, k: usize) -> WindowedExample {
        WindowedExample {
            features: NumArray::from_vec(&[self.window_len(), N_FEATURES], self.features(k).to_vec())
                .expect("window shape"),
            label: NumArray::from_vec(&[2], self.label(k).to_vec()).expect("label shape"),
        }
    }
}

/// Materializes all X-polarization windows of a dataset.
pub fn window_dataset(ds: &Dataset, half: usize) -> Result<Vec<WindowedExample>> {
    let view = WindowView::new(ds, half, Polarization::X)?;
    Ok((0..view.len()).map(|k| view.example(k)).collect())
}

/// Swaps the (x, y) feature pairs of every row of a `[T × 4]` window.
pub fn swap_polarizations(features: &NumArray) -> NumArray {
    let data = features
        .data()
        .chunks_exact(N_FEATURES)
        .flat_map(|r| [r[2], r[3], r[0], r[1]])
        .collect();
    NumArray::from_vec(features.shape(), data).expect("same shape")
}

pub(crate) fn to_complex(values: &[[f64; 2]], scale: f64) -> Vec<Complex64> {
    values.iter().map(|v| Complex64::new(v[0] * scale, v[1] * scale)).collect()
}
