use super::array::NumArray;
use crate::error::{Error, Result};

/// Negative-side slope of the activation that follows the convolution.
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv1dShape {
    pub len: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
}

impl Conv1dShape {
    fn pad(&self) -> usize {
        (self.kernel - 1) / 2
    }
}

/// Same-padded cross-correlation, no activation.
///
/// `input` is `[len × c_in]`, `kernel` is `[kernel × c_in × c_out]`, `out`
/// receives `[len × c_out]`.
pub fn conv1d_forward_raw(input: &[f64], kernel: &[f64], bias: &[f64], s: Conv1dShape, out: &mut [f64]) {
    let pad = s.pad() as isize;
    for t in 0..s.len {
        let row = &mut out[t * s.c_out..(t + 1) * s.c_out];
        row.copy_from_slice(bias);
        for k in 0..s.kernel {
            let src = t as isize + k as isize - pad;
            if src < 0 || src >= s.len as isize {
                continue;
            }
            let x = &input[src as usize * s.c_in..(src as usize + 1) * s.c_in];
            let w = &kernel[k * s.c_in * s.c_out..(k + 1) * s.c_in * s.c_out];
            for (c, &xc) in x.iter().enumerate() {
                let wc = &w[c * s.c_out..(c + 1) * s.c_out];
                for (o, &wv) in row.iter_mut().zip(wc) {
                    *o += xc * wv;
                }
            }
        }
    }
}

/// Accumulates (`+=`) gradients of the forward map.
pub fn conv1d_backward_raw(
    grad_out: &[f64],
    input: &[f64],
    kernel: &[f64],
    s: Conv1dShape,
    mut grad_input: Option<&mut [f64]>,
    grad_kernel: &mut [f64],
    grad_bias: &mut [f64],
) {
    let pad = s.pad() as isize;
    for t in 0..s.len {
        let g = &grad_out[t * s.c_out..(t + 1) * s.c_out];
        for (b, &gv) in grad_bias.iter_mut().zip(g) {
            *b += gv;
        }
        for k in 0..s.kernel {
            let src = t as isize + k as isize - pad;
            if src < 0 || src >= s.len as isize {
                continue;
            }
            let src = src as usize;
            let block = k * s.c_in * s.c_out..(k + 1) * s.c_in * s.c_out;
            let x = &input[src * s.c_in..(src + 1) * s.c_in];
            let gk = &mut grad_kernel[block.clone()];
            for (c, &xc) in x.iter().enumerate() {
                for (w, &gv) in gk[c * s.c_out..(c + 1) * s.c_out].iter_mut().zip(g) {
                    *w += xc * gv;
                }
            }
            if let Some(gi) = grad_input.as_deref_mut() {
                let w = &kernel[block];
                let gx = &mut gi[src * s.c_in..(src + 1) * s.c_in];
                for (c, gxc) in gx.iter_mut().enumerate() {
                    let wc = &w[c * s.c_out..(c + 1) * s.c_out];
                    *gxc += wc.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
    }
}

fn conv_shape(input: &NumArray, kernel: &NumArray, bias: &NumArray) -> Result<Conv1dShape> {
    input.expect_rank(2, "conv1d input")?;
    kernel.expect_rank(3, "conv1d kernel")?;
    let (len, c_in) = (input.shape()[0], input.shape()[1]);
    let (k, kc_in, c_out) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[2]);
    if kc_in != c_in {
        return Err(Error::Shape(format!(
            "conv1d kernel expects {kc_in} input channels, input has {c_in}"
        )));
    }
    if k % 2 == 0 {
        return Err(Error::Shape(format!("conv1d kernel size {k} must be odd")));
    }
    bias.expect_shape(&[c_out], "conv1d bias")?;
    Ok(Conv1dShape {
        len,
        c_in,
        c_out,
        kernel: k,
    })
}

/// `[T × C_in] ⋆ [K × C_in × C_out] + bias → [T × C_out]`, zero padding
/// `(K−1)/2` on each side. Activation is applied separately with
/// [`leaky_relu`].
pub fn conv1d_forward(input: &NumArray, kernel: &NumArray, bias: &NumArray) -> Result<NumArray> {
    let s = conv_shape(input, kernel, bias)?;
    let mut out = NumArray::zeros(&[s.len, s.c_out]);
    conv1d_forward_raw(input.data(), kernel.data(), bias.data(), s, out.data_mut());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dGrads {
    pub input: NumArray,
    pub kernel: NumArray,
    pub bias: NumArray,
}

pub fn conv1d_backward(grad_out: &NumArray, input: &NumArray, kernel: &NumArray) -> Result<Conv1dGrads> {
    let bias = NumArray::zeros(&[kernel.shape().get(2).copied().unwrap_or(0)]);
    let s = conv_shape(input, kernel, &bias)?;
    grad_out.expect_shape(&[s.len, s.c_out], "conv1d grad_out")?;
    let mut grads = Conv1dGrads {
        input: NumArray::zeros(input.shape()),
        kernel: NumArray::zeros(kernel.shape()),
        bias,
    };
    conv1d_backward_raw(
        grad_out.data(),
        input.data(),
        kernel.data(),
        s,
        Some(grads.input.data_mut()),
        grads.kernel.data_mut(),
        grads.bias.data_mut(),
    );
    Ok(grads)
}

pub fn leaky_relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

/// Derivative of [`leaky_relu`] evaluated at the pre-activation.
pub fn leaky_relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random(shape: &[usize], rng: &mut impl Rng) -> NumArray {
        let n = shape.iter().product();
        NumArray::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Direct triple loop over (t, o, k, c) with explicit bounds checks.
    fn reference_conv(input: &NumArray, kernel: &NumArray, bias: &NumArray) -> Vec<f64> {
        let (t_len, c_in) = (input.shape()[0], input.shape()[1]);
        let (k_len, c_out) = (kernel.shape()[0], kernel.shape()[2]);
        let pad = (k_len - 1) / 2;
        let mut out = vec![0.0; t_len * c_out];
        for t in 0..t_len {
            for o in 0..c_out {
                let mut acc = bias.data()[o];
                for k in 0..k_len {
                    let src = t as i64 + k as i64 - pad as i64;
                    if src < 0 || src >= t_len as i64 {
                        continue;
                    }
                    for c in 0..c_in {
                        acc += input.at2(src as usize, c) * kernel.data()[(k * c_in + c) * c_out + o];
                    }
                }
                out[t * c_out + o] = acc;
            }
        }
        out
    }

    #[test]
    fn identity_kernel_passes_input() {
        let mut rng = crate::rng::seeded(1);
        let input = random(&[6, 3], &mut rng);
        let mut kernel = NumArray::zeros(&[1, 3, 3]);
        for c in 0..3 {
            kernel.data_mut()[c * 3 + c] = 1.0;
        }
        let out = conv1d_forward(&input, &kernel, &NumArray::zeros(&[3])).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn zero_input_gives_bias() {
        let mut rng = crate::rng::seeded(2);
        let kernel = random(&[5, 4, 3], &mut rng);
        let bias = random(&[3], &mut rng);
        let out = conv1d_forward(&NumArray::zeros(&[7, 4]), &kernel, &bias).unwrap();
        for t in 0..7 {
            assert_eq!(out.row(t), bias.data());
        }
    }

    #[test]
    fn matches_triple_loop() {
        let mut rng = crate::rng::seeded(3);
        let input = random(&[8, 2], &mut rng);
        let kernel = random(&[3, 2, 2], &mut rng);
        let bias = random(&[2], &mut rng);
        let out = conv1d_forward(&input, &kernel, &bias).unwrap();
        for (a, b) in out.data().iter().zip(reference_conv(&input, &kernel, &bias)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = crate::rng::seeded(4);
        let input = random(&[9, 3], &mut rng);
        let kernel = random(&[5, 3, 4], &mut rng);
        let bias = random(&[4], &mut rng);
        let weights = random(&[9, 4], &mut rng);
        // scalar objective L = Σ weights ⊙ conv(input)
        let objective = |i: &NumArray, k: &NumArray, b: &NumArray| -> f64 {
            reference_conv(i, k, b).iter().zip(weights.data()).map(|(a, w)| a * w).sum()
        };
        let grads = conv1d_backward(&weights, &input, &kernel).unwrap();
        let h = 1e-6;
        for _ in 0..25 {
            let which = rng.gen_range(0..3);
            let (analytic, numeric) = match which {
                0 => {
                    let idx = rng.gen_range(0..kernel.len());
                    let (mut p, mut m) = (kernel.clone(), kernel.clone());
                    p.data_mut()[idx] += h;
                    m.data_mut()[idx] -= h;
                    (grads.kernel.data()[idx], (objective(&input, &p, &bias) - objective(&input, &m, &bias)) / (2.0 * h))
                }
                1 => {
                    let idx = rng.gen_range(0..bias.len());
                    let (mut p, mut m) = (bias.clone(), bias.clone());
                    p.data_mut()[idx] += h;
                    m.data_mut()[idx] -= h;
                    (grads.bias.data()[idx], (objective(&input, &kernel, &p) - objective(&input, &kernel, &m)) / (2.0 * h))
                }
                _ => {
                    let idx = rng.gen_range(0..input.len());
                    let (mut p, mut m) = (input.clone(), input.clone());
                    p.data_mut()[idx] += h;
                    m.data_mut()[idx] -= h;
                    (grads.input.data()[idx], (objective(&p, &kernel, &bias) - objective(&m, &kernel, &bias)) / (2.0 * h))
                }
            };
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(rel < 1e-6, "rel err {rel}: {analytic} vs {numeric}");
        }
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = crate::rng::seeded(5);
        let input = random(&[6, 2], &mut rng);
        let kernel = random(&[3, 2, 3], &mut rng);
        let g = conv1d_backward(&NumArray::zeros(&[6, 3]), &input, &kernel).unwrap();
        assert!(g.input.data().iter().chain(g.kernel.data()).chain(g.bias.data()).all(|v| *v == 0.0));
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let mut rng = crate::rng::seeded(6);
        let input = random(&[7, 2], &mut rng);
        let kernel = random(&[3, 2, 3], &mut rng);
        let g1 = random(&[7, 3], &mut rng);
        let g2 = random(&[7, 3], &mut rng);
        let (a, b) = (0.7, -1.3);
        let combo = NumArray::from_vec(
            &[7, 3],
            g1.data().iter().zip(g2.data()).map(|(x, y)| a * x + b * y).collect(),
        )
        .unwrap();
        let r = conv1d_backward(&combo, &input, &kernel).unwrap();
        let r1 = conv1d_backward(&g1, &input, &kernel).unwrap();
        let r2 = conv1d_backward(&g2, &input, &kernel).unwrap();
        for (pairs, got) in [
            (r1.kernel.data().iter().zip(r2.kernel.data()), r.kernel.data()),
            (r1.input.data().iter().zip(r2.input.data()), r.input.data()),
            (r1.bias.data().iter().zip(r2.bias.data()), r.bias.data()),
        ] {
            for ((x, y), z) in pairs.zip(got) {
                assert!((a * x + b * y - z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let input = NumArray::zeros(&[5, 3]);
        assert!(conv1d_forward(&input, &NumArray::zeros(&[2, 3, 2]), &NumArray::zeros(&[2])).is_err());
        assert!(conv1d_forward(&input, &NumArray::zeros(&[3, 2, 2]), &NumArray::zeros(&[2])).is_err());
        assert!(conv1d_forward(&input, &NumArray::zeros(&[3, 3, 2]), &NumArray::zeros(&[3])).is_err());
    }

    #[test]
    fn leaky_relu_as_declared() {
        assert_eq!(leaky_relu(2.0), 2.0);
        assert_eq!(leaky_relu(-2.0), -0.02);
        assert_eq!(leaky_relu_grad(-0.5), 0.01);
        assert_eq!(leaky_relu_grad(0.5), 1.0);
    }
}
