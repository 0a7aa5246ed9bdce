//! Transmitter, fiber link and receiver simulation.
//!
//! The signal path is: random QAM symbols → root-raised-cosine shaping →
//! `n_spans` × (split-step fiber span, EDFA) → chromatic dispersion
//! compensation → matched filter → symbol-rate sampling → data-aided
//! alignment and normalization into a [`Dataset`].

mod amplifier;
mod dataset;
mod fiber;
pub mod io;
mod link;
mod modulation;
mod pulse;
mod spectral;
mod waveform;

pub use amplifier::{add_ase, Amplifier, PLANCK, SPEED_OF_LIGHT};
pub use dataset::{build_dataset, Dataset, SplitFractions};
pub use fiber::{apply_dispersion, cdc_compensate, propagate_span, FiberParams};
pub use link::{propagate_link, simulate, LinkParams, TxConfig};
pub use modulation::{gen_symbols, qam_demap_hard, ModulationFormat, SymbolStreams};
pub use pulse::{downsample, matched_filter, rrc_impulse_response, rrc_shape, shape_symbols};
pub use waveform::DualPolWaveform;
