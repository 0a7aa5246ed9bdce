//! Coherent optical link simulation and transfer learning for neural-network
//! nonlinear equalizers.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`channel`] generates dual-polarization QAM transmissions, propagates them
//!   over amplified fiber spans with the split-step Fourier method and turns the
//!   received samples into aligned symbol datasets.
//! * [`tensor`] holds the small dense-array core with hand-derived backward
//!   passes for convolution, bidirectional LSTM and dense layers, plus MSE and
//!   Adam.
//! * [`equalizer`] assembles the conv + biLSTM + dense equalizer and the sliding
//!   window view of a dataset.
//! * [`transfer`] trains models, builds freeze masks and runs the
//!   conv-only retraining used to move a source equalizer to a new system.
//! * [`metrics`] converts equalized symbols into BER and Q-factor.
//! * [`experiment`] wires everything into the experiment matrix driven by the
//!   `cteq` binary.

pub mod channel;
pub mod equalizer;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod rng;
pub mod tensor;
pub mod transfer;

pub use error::{Error, Result};
