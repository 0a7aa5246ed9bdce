use serde::{Deserialize, Serialize};

use super::window::N_FEATURES;
use crate::error::{Error, Result};
use crate::tensor::GATES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EqualizerTopology {
    /// Symbols of memory on each side of the equalized symbol (M).
    pub window_half: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub lstm_hidden: usize,
}

impl Default for EqualizerTopology {
    fn default() -> Self {
        Self {
            window_half: 15,
            conv_filters: 32,
            conv_kernel: 11,
            lstm_hidden: 32,
        }
    }
}

pub const OUTPUT_DIM: usize = 2;

impl EqualizerTopology {
    pub fn validate(&self) -> Result<()> {
        if self.conv_kernel % 2 == 0 {
            return Err(Error::Config(format!(
                "conv_kernel {} must be odd",
                self.conv_kernel
            )));
        }
        if self.conv_filters == 0 || self.lstm_hidden == 0 {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn window_len(&self) -> usize {
        2 * self.window_half + 1
    }

    pub fn conv_param_count(&self) -> usize {
        self.conv_kernel * N_FEATURES * self.conv_filters + self.conv_filters
    }

    pub fn lstm_param_count(&self) -> usize {
        let (f, h) = (self.conv_filters, self.lstm_hidden);
        2 * GATES * (f * h + h * h + h)
    }

    pub fn dense_param_count(&self) -> usize {
        2 * self.lstm_hidden * OUTPUT_DIM + OUTPUT_DIM
    }

    /// Closed-form parameter count.
    pub fn param_count(&self) -> usize {
        self.conv_param_count() + self.lstm_param_count() + self.dense_param_count()
    }

    /// Single-line text form stored in checkpoints.
    pub fn descriptor(&self) -> String {
        format!(
            "conv1d_bilstm_dense window_half={} conv_filters={} conv_kernel={} lstm_hidden={} features={} outputs={} activation=leaky_relu readout=center",
            self.window_half, self.conv_filters, self.conv_kernel, self.lstm_hidden, N_FEATURES, OUTPUT_DIM
        )
    }

    pub fn from_descriptor(text: &str) -> Result<Self> {
        let bad = || Error::format("checkpoint", format!("bad topology descriptor {text:?}"));
        let mut parts = text.split_whitespace();
        if parts.next() != Some("conv1d_bilstm_dense") {
            return Err(bad());
        }
        let mut topo = EqualizerTopology::default();
        for part in parts {
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            let num = || v.parse::<usize>().map_err(|_| bad());
            match k {
                "window_half" => topo.window_half = num()?,
                "conv_filters" => topo.conv_filters = num()?,
                "conv_kernel" => topo.conv_kernel = num()?,
                "lstm_hidden" => topo.lstm_hidden = num()?,
                "features" if num()? == N_FEATURES => {}
                "outputs" if num()? == OUTPUT_DIM => {}
                "activation" if v == "leaky_relu" => {}
                "readout" if v == "center" => {}
                _ => return Err(bad()),
            }
        }
        if topo.descriptor() != text {
            return Err(bad());
        }
        topo.validate()?;
        Ok(topo)
    }
}
