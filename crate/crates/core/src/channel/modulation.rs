use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::seeded;

/// QAM formats supported by the transmitter.
///
/// Square formats (16, 64) use a per-axis binary-reflected Gray code. Cross
/// formats (32, 128) start from a Gray-mapped `2^⌈k/2⌉ × 2^⌊k/2⌋` rectangle and
/// fold its outermost columns onto new rows above and below the square core,
/// which keeps labels unique and nearly Gray along the fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModulationFormat {
    #[serde(rename = "QAM16")]
    Qam16,
    #[serde(rename = "QAM32")]
    Qam32,
    #[serde(rename = "QAM64")]
    Qam64,
    #[serde(rename = "QAM128")]
    Qam128,
}

impl ModulationFormat {
    pub const ALL: [ModulationFormat; 4] = [
        ModulationFormat::Qam16,
        ModulationFormat::Qam32,
        ModulationFormat::Qam64,
        ModulationFormat::Qam128,
    ];

    pub fn bits_per_symbol(self) -> u32 {
        match self {
            ModulationFormat::Qam16 => 4,
            ModulationFormat::Qam32 => 5,
            ModulationFormat::Qam64 => 6,
            ModulationFormat::Qam128 => 7,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    pub fn is_square(self) -> bool {
        self.bits_per_symbol() % 2 == 0
    }

    pub fn name(self) -> &'static str {
        match self {
            ModulationFormat::Qam16 => "QAM16",
            ModulationFormat::Qam32 => "QAM32",
            ModulationFormat::Qam64 => "QAM64",
            ModulationFormat::Qam128 => "QAM128",
        }
    }

    /// Lower-case tag used in file names.
    pub fn tag(self) -> String {
        self.name().to_ascii_lowercase()
    }

    /// Constellation indexed by bit label, unit average energy.
    pub fn constellation(self) -> &'static [Complex64] {
        static TABLES: [OnceLock<Vec<Complex64>>; 4] = [
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
        ];
        let slot = match self {
            ModulationFormat::Qam16 => 0,
            ModulationFormat::Qam32 => 1,
            ModulationFormat::Qam64 => 2,
            ModulationFormat::Qam128 => 3,
        };
        TABLES[slot].get_or_init(|| build_constellation(self.bits_per_symbol()))
    }

    /// Unnormalized integer grid coordinates (odd integers) of each label.
    pub fn grid_point(self, label: u32) -> (i32, i32) {
        grid_point(self.bits_per_symbol(), label)
    }

    pub fn point(self, label: u32) -> Complex64 {
        self.constellation()[label as usize]
    }
}

impl fmt::Display for ModulationFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModulationFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase().replace(['-', '_'], "");
        ModulationFormat::ALL
            .into_iter()
            .find(|f| f.name() == upper)
            .ok_or_else(|| Error::Config(format!("unknown modulation format '{s}'")))
    }
}

fn gray_to_index(mut g: u32) -> u32 {
    let mut idx = g;
    while g > 0 {
        g >>= 1;
        idx ^= g;
    }
    idx
}

fn level(bits: u32, n_bits: u32) -> i32 {
    let levels = 1i32 << n_bits;
    2 * gray_to_index(bits) as i32 - (levels - 1)
}

fn grid_point(k: u32, label: u32) -> (i32, i32) {
    let q_bits = k / 2;
    let i_bits = k - q_bits;
    let i = level(label >> q_bits, i_bits);
    let q = level(label & ((1 << q_bits) - 1), q_bits);
    if k % 2 == 0 {
        return (i, q);
    }
    // cross: fold columns with |I| beyond the square core onto outer rows
    let half = 1i32 << (q_bits - 1);
    if i.abs() > 3 * half - 1 {
        let q_new = q.signum() * (i.abs() - half);
        let i_new = i.signum() * ((1i32 << q_bits) - q.abs());
        (i_new, q_new)
    } else {
        (i, q)
    }
}

fn build_constellation(k: u32) -> Vec<Complex64> {
    let raw: Vec<Complex64> = (0..1u32 << k)
        .map(|label| {
            let (i, q) = grid_point(k, label);
            Complex64::new(i as f64, q as f64)
        })
        .collect();
    let energy = raw.iter().map(|p| p.norm_sqr()).sum::<f64>() / raw.len() as f64;
    let scale = energy.sqrt().recip();
    raw.into_iter().map(|p| p * scale).collect()
}

/// Transmitted symbols for both polarizations and their bit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStreams {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub labels_x: Vec<u32>,
    pub labels_y: Vec<u32>,
}

/// Draws `n` i.i.d. uniform symbols per polarization.
pub fn gen_symbols(format: ModulationFormat, n: usize, seed: u64) -> SymbolStreams {
    let mut rng = seeded(seed);
    let order = format.order() as u32;
    let mut labels_x = Vec::with_capacity(n);
    let mut labels_y = Vec::with_capacity(n);
    for _ in 0..n {
        labels_x.push(rng.gen_range(0..order));
        labels_y.push(rng.gen_range(0..order));
    }
    let table = format.constellation();
    SymbolStreams {
        x: labels_x.iter().map(|&l| table[l as usize]).collect(),
        y: labels_y.iter().map(|&l| table[l as usize]).collect(),
        labels_x,
        labels_y,
    }
}

/// Hard decision: label of the Euclidean-nearest point, ties to the smaller label.
pub fn qam_demap_hard(point: Complex64, format: ModulationFormat) -> u32 {
    let mut best = 0u32;
    let mut best_d = f64::INFINITY;
    for (label, p) in format.constellation().iter().enumerate() {
        let d = (point - p).norm_sqr();
        if d < best_d {
            best_d = d;
            best = label as u32;
        }
    }
    best
}
