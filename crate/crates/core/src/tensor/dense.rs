use super::array::NumArray;
use crate::error::Result;

/// `out[m] = b[m] + Σ_n input[n] W[n, m]`.
pub fn dense_forward_raw(input: &[f64], w: &[f64], b: &[f64], out: &mut [f64]) {
    let m = b.len();
    out.copy_from_slice(b);
    for (n, &x) in input.iter().enumerate() {
        for (o, &wv) in out.iter_mut().zip(&w[n * m..(n + 1) * m]) {
            *o += x * wv;
        }
    }
}

/// Accumulates parameter gradients; writes (not accumulates) `grad_input`.
pub fn dense_backward_raw(
    grad_out: &[f64],
    input: &[f64],
    w: &[f64],
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    grad_input: Option<&mut [f64]>,
) {
    let m = grad_out.len();
    for (gb, &g) in grad_b.iter_mut().zip(grad_out) {
        *gb += g;
    }
    for (n, &x) in input.iter().enumerate() {
        for (gw, &g) in grad_w[n * m..(n + 1) * m].iter_mut().zip(grad_out) {
            *gw += x * g;
        }
    }
    if let Some(gi) = grad_input {
        for (n, g) in gi.iter_mut().enumerate() {
            *g = w[n * m..(n + 1) * m].iter().zip(grad_out).map(|(a, b)| a * b).sum();
        }
    }
}

pub fn dense_forward(input: &NumArray, w: &NumArray, b: &NumArray) -> Result<NumArray> {
    input.expect_rank(1, "dense input")?;
    let (n, m) = (input.len(), b.len());
    w.expect_shape(&[n, m], "dense weight")?;
    b.expect_shape(&[m], "dense bias")?;
    let mut out = NumArray::zeros(&[m]);
    dense_forward_raw(input.data(), w.data(), b.data(), out.data_mut());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub input: NumArray,
    pub weight: NumArray,
    pub bias: NumArray,
}

pub fn dense_backward(grad_out: &NumArray, input: &NumArray, w: &NumArray) -> Result<DenseGrads> {
    let (n, m) = (input.len(), grad_out.len());
    w.expect_shape(&[n, m], "dense weight")?;
    let mut grads = DenseGrads {
        input: NumArray::zeros(&[n]),
        weight: NumArray::zeros(&[n, m]),
        bias: NumArray::zeros(&[m]),
    };
    dense_backward_raw(
        grad_out.data(),
        input.data(),
        w.data(),
        grads.weight.data_mut(),
        grads.bias.data_mut(),
        Some(grads.input.data_mut()),
    );
    Ok(grads)
}
