//! Conv1d + biLSTM + dense equalizer over sliding symbol windows.
//!
//! A window of `2M + 1` symbol slots with four features each
//! (Re x, Im x, Re y, Im y) is convolved (same padding, LeakyReLU), fed to a
//! bidirectional LSTM, and the hidden states of both directions at the
//! central slot are mapped by a dense layer to (Re, Im) of the central
//! X-polarization symbol. The Y polarization is equalized by the same model
//! after swapping the (x, y) feature pairs.

mod model;
mod topology;
mod window;

pub use model::{equalize_dataset, EqualizerModel, Workspace};
pub use topology::EqualizerTopology;
pub use window::{swap_polarizations, window_dataset, Polarization, WindowView, WindowedExample, N_FEATURES};
