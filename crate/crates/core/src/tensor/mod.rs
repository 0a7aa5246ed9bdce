//! Dense f64 arrays and the layer kernels of the equalizer, each with an
//! exact hand-derived backward pass.
//!
//! Public functions take and return [`NumArray`]s; the `*_raw` variants used
//! by the model work on slices and accumulate gradients in place.

mod adam;
mod array;
mod conv;
mod dense;
mod loss;
mod lstm;
mod param;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use array::NumArray;
pub use conv::{
    conv1d_backward, conv1d_backward_raw, conv1d_forward, conv1d_forward_raw, leaky_relu,
    leaky_relu_grad, Conv1dGrads, Conv1dShape, LEAKY_SLOPE,
};
pub use dense::{dense_backward, dense_backward_raw, dense_forward, dense_forward_raw, DenseGrads};
pub use loss::mse_loss;
pub use lstm::{
    bilstm_backward, bilstm_forward, lstm_backward_raw, lstm_forward_raw, BiLstmCache,
    BiLstmGrads, LstmCache, LstmDirection, LstmGradMut, LstmRef, PackedLstm, GATES,
};
pub use param::ParamGroup;
