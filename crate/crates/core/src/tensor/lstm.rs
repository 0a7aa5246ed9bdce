//! LSTM recurrences and backpropagation through time.
//!
//! Gate order is (i, f, g, o) with sigmoid/sigmoid/tanh/sigmoid activations:
//!
//! ```text
//! z_k = x_t W_k + h_{t-1} U_k + b_k
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```
//!
//! Input weights `W_k` are `[C × H]`, recurrent weights `U_k` are `[H × H]`,
//! biases `[H]`. Initial states are zero.

use super::array::NumArray;
use crate::error::{Error, Result};

pub const GATES: usize = 4;
const GATE_I: usize = 0;
const GATE_F: usize = 1;
const GATE_G: usize = 2;
const GATE_O: usize = 3;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// tanh through a single `exp`; absolute error stays near 1e-16, about
/// three times cheaper than the libm routine.
fn tanh(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

/// Borrowed parameters of one direction.
#[derive(Clone, Copy)]
pub struct LstmRef<'a> {
    pub w: [&'a [f64]; GATES],
    pub u: [&'a [f64]; GATES],
    pub b: [&'a [f64]; GATES],
    pub input: usize,
    pub hidden: usize,
}

/// Gradient accumulators of one direction.
pub struct LstmGradMut<'a> {
    pub w: [&'a mut [f64]; GATES],
    pub u: [&'a mut [f64]; GATES],
    pub b: [&'a mut [f64]; GATES],
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct LstmCache {
    steps: usize,
    input: usize,
    hidden: usize,
    x: Vec<f64>,
    /// `(steps + 1) × H`, row 0 is the zero initial state.
    h: Vec<f64>,
    c: Vec<f64>,
    /// `steps × 4 × H` post-activation gate values.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmCache {
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Hidden state after processing step `s` (0-based).
    pub fn hidden_at(&self, s: usize) -> &[f64] {
        &self.h[(s + 1) * self.hidden..(s + 2) * self.hidden]
    }

    pub fn last_hidden(&self) -> &[f64] {
        self.hidden_at(self.steps - 1)
    }
}

/// One direction with the four gates fused column-wise: `w` is `[C × 4H]`,
/// `u` is `[H × 4H]`, `b` is `[4H]`, gate k in columns `k*H..(k+1)*H`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PackedLstm {
    pub input: usize,
    pub hidden: usize,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: Vec<f64>,
}

fn gather(dst: &mut Vec<f64>, src: &[&[f64]; GATES], rows: usize, hid: usize) {
    dst.clear();
    for r in 0..rows {
        for part in src {
            dst.extend_from_slice(&part[r * hid..(r + 1) * hid]);
        }
    }
}

fn scatter_add(src: &[f64], dst: &mut [&mut [f64]; GATES], hid: usize) {
    for (r, row) in src.chunks_exact(GATES * hid).enumerate() {
        for (part, block) in dst.iter_mut().zip(row.chunks_exact(hid)) {
            for (d, &v) in part[r * hid..(r + 1) * hid].iter_mut().zip(block) {
                *d += v;
            }
        }
    }
}

impl PackedLstm {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let mut p = Self::default();
        p.reset(input, hidden);
        p
    }

    pub fn from_ref(p: &LstmRef<'_>) -> Self {
        let mut out = Self::default();
        out.pack(p);
        out
    }

    /// Resizes to `input × hidden` and zero-fills.
    pub fn reset(&mut self, input: usize, hidden: usize) {
        self.input = input;
        self.hidden = hidden;
        for (v, n) in [(&mut self.w, input), (&mut self.u, hidden), (&mut self.b, 1)] {
            v.clear();
            v.resize(n * GATES * hidden, 0.0);
        }
    }

    /// Copies per-gate parameters into the fused layout.
    pub fn pack(&mut self, p: &LstmRef<'_>) {
        self.input = p.input;
        self.hidden = p.hidden;
        gather(&mut self.w, &p.w, p.input, p.hidden);
        gather(&mut self.u, &p.u, p.hidden, p.hidden);
        gather(&mut self.b, &p.b, 1, p.hidden);
    }

    /// Adds fused gradients into per-gate accumulators.
    pub fn add_into(&self, g: &mut LstmGradMut<'_>) {
        scatter_add(&self.w, &mut g.w, self.hidden);
        scatter_add(&self.u, &mut g.u, self.hidden);
        scatter_add(&self.b, &mut g.b, self.hidden);
    }
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += a * xv;
    }
}

/// Dot product with four interleaved partial sums.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    let mut acc = [0.0; 4];
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Runs one direction over `x` (`steps × C`, rows in processing order).
pub fn lstm_forward_raw(p: &PackedLstm, x: &[f64], cache: &mut LstmCache) {
    let (c_in, hid) = (p.input, p.hidden);
    let width = GATES * hid;
    let steps = x.len() / c_in;
    cache.steps = steps;
    cache.input = c_in;
    cache.hidden = hid;
    cache.x.clear();
    cache.x.extend_from_slice(x);
    cache.h.clear();
    cache.h.resize((steps + 1) * hid, 0.0);
    cache.c.clear();
    cache.c.resize((steps + 1) * hid, 0.0);
    cache.gates.clear();
    cache.gates.resize(steps * width, 0.0);
    cache.tanh_c.clear();
    cache.tanh_c.resize(steps * hid, 0.0);

    for s in 0..steps {
        let xt = &x[s * c_in..(s + 1) * c_in];
        let (h_done, h_rest) = cache.h.split_at_mut((s + 1) * hid);
        let h_prev = &h_done[s * hid..];
        let z = &mut cache.gates[s * width..(s + 1) * width];
        z.copy_from_slice(&p.b);
        for (&xv, wrow) in xt.iter().zip(p.w.chunks_exact(width)) {
            axpy(z, xv, wrow);
        }
        for (&hv, urow) in h_prev.iter().zip(p.u.chunks_exact(width)) {
            axpy(z, hv, urow);
        }
        let (c_done, c_rest) = cache.c.split_at_mut((s + 1) * hid);
        let c_prev = &c_done[s * hid..];
        let c_now = &mut c_rest[..hid];
        let h_now = &mut h_rest[..hid];
        let tc = &mut cache.tanh_c[s * hid..(s + 1) * hid];
        for j in 0..hid {
            let i = sigmoid(z[GATE_I * hid + j]);
            let f = sigmoid(z[GATE_F * hid + j]);
            let g = tanh(z[GATE_G * hid + j]);
            let o = sigmoid(z[GATE_O * hid + j]);
            z[GATE_I * hid + j] = i;
            z[GATE_F * hid + j] = f;
            z[GATE_G * hid + j] = g;
            z[GATE_O * hid + j] = o;
            let c = f * c_prev[j] + i * g;
            c_now[j] = c;
            tc[j] = tanh(c);
            h_now[j] = o * tc[j];
        }
    }
}

/// BPTT for one direction. `grad_h` is `steps × H` (loss gradient w.r.t.
/// each emitted hidden state); gradients are accumulated with `+=` in the
/// fused layout. Parameter gradients are skipped when `grads` is `None`.
pub fn lstm_backward_raw(
    p: &PackedLstm,
    cache: &LstmCache,
    grad_h: &[f64],
    mut grads: Option<&mut PackedLstm>,
    mut grad_x: Option<&mut [f64]>,
    scratch: &mut Vec<f64>,
) {
    let (c_in, hid) = (p.input, p.hidden);
    let width = GATES * hid;
    scratch.clear();
    scratch.resize(2 * hid + width, 0.0);
    let (dh_next, rest) = scratch.split_at_mut(hid);
    let (dc_next, dz) = rest.split_at_mut(hid);
    for s in (0..cache.steps).rev() {
        let gates = &cache.gates[s * width..(s + 1) * width];
        let tc = &cache.tanh_c[s * hid..(s + 1) * hid];
        let c_prev = &cache.c[s * hid..(s + 1) * hid];
        let h_prev = &cache.h[s * hid..(s + 1) * hid];
        let xt = &cache.x[s * c_in..(s + 1) * c_in];
        for j in 0..hid {
            let i = gates[GATE_I * hid + j];
            let f = gates[GATE_F * hid + j];
            let g = gates[GATE_G * hid + j];
            let o = gates[GATE_O * hid + j];
            let dh = grad_h[s * hid + j] + dh_next[j];
            let dc = dc_next[j] + dh * o * (1.0 - tc[j] * tc[j]);
            dz[GATE_O * hid + j] = dh * tc[j] * o * (1.0 - o);
            dz[GATE_I * hid + j] = dc * g * i * (1.0 - i);
            dz[GATE_G * hid + j] = dc * i * (1.0 - g * g);
            dz[GATE_F * hid + j] = dc * c_prev[j] * f * (1.0 - f);
            dc_next[j] = dc * f;
        }
        if let Some(g) = grads.as_deref_mut() {
            axpy(&mut g.b, 1.0, dz);
            for (&xv, grow) in xt.iter().zip(g.w.chunks_exact_mut(width)) {
                axpy(grow, xv, dz);
            }
            for (&hv, grow) in h_prev.iter().zip(g.u.chunks_exact_mut(width)) {
                axpy(grow, hv, dz);
            }
        }
        for (d, urow) in dh_next.iter_mut().zip(p.u.chunks_exact(width)) {
            *d = dot(urow, dz);
        }
        if let Some(gx) = grad_x.as_deref_mut() {
            let gx = &mut gx[s * c_in..(s + 1) * c_in];
            for (g, wrow) in gx.iter_mut().zip(p.w.chunks_exact(width)) {
                *g += dot(wrow, dz);
            }
        }
    }
}

/// Owned parameters (or gradients) of one LSTM direction.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmDirection {
    pub w: [NumArray; GATES],
    pub u: [NumArray; GATES],
    pub b: [NumArray; GATES],
}

impl LstmDirection {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: std::array::from_fn(|_| NumArray::zeros(&[input, hidden])),
            u: std::array::from_fn(|_| NumArray::zeros(&[hidden, hidden])),
            b: std::array::from_fn(|_| NumArray::zeros(&[hidden])),
        }
    }

    pub fn input(&self) -> usize {
        self.w[0].shape()[0]
    }

    pub fn hidden(&self) -> usize {
        self.u[0].shape()[0]
    }

    fn validate(&self) -> Result<()> {
        let (c, h) = (self.input(), self.hidden());
        for k in 0..GATES {
            self.w[k].expect_shape(&[c, h], "lstm input weights")?;
            self.u[k].expect_shape(&[h, h], "lstm recurrent weights")?;
            self.b[k].expect_shape(&[h], "lstm bias")?;
        }
        Ok(())
    }

    pub fn as_ref(&self) -> LstmRef<'_> {
        LstmRef {
            w: std::array::from_fn(|k| self.w[k].data()),
            u: std::array::from_fn(|k| self.u[k].data()),
            b: std::array::from_fn(|k| self.b[k].data()),
            input: self.input(),
            hidden: self.hidden(),
        }
    }

    pub fn as_grad_mut(&mut self) -> LstmGradMut<'_> {
        let [w0, w1, w2, w3] = &mut self.w;
        let [u0, u1, u2, u3] = &mut self.u;
        let [b0, b1, b2, b3] = &mut self.b;
        LstmGradMut {
            w: [w0.data_mut(), w1.data_mut(), w2.data_mut(), w3.data_mut()],
            u: [u0.data_mut(), u1.data_mut(), u2.data_mut(), u3.data_mut()],
            b: [b0.data_mut(), b1.data_mut(), b2.data_mut(), b3.data_mut()],
        }
    }

    /// Iterates parameter arrays in the order W_i..W_o, U_i..U_o, b_i..b_o.
    pub fn arrays(&self) -> impl Iterator<Item = &NumArray> {
        self.w.iter().chain(&self.u).chain(&self.b)
    }

    pub fn arrays_mut(&mut self) -> impl Iterator<Item = &mut NumArray> {
        self.w.iter_mut().chain(self.u.iter_mut()).chain(self.b.iter_mut())
    }
}

/// Caches of both directions, in processing order.
#[derive(Debug, Clone, Default)]
pub struct BiLstmCache {
    pub fwd: LstmCache,
    pub bwd: LstmCache,
}

fn reversed_rows(data: &[f64], cols: usize) -> Vec<f64> {
    data.chunks_exact(cols).rev().flatten().copied().collect()
}

/// Bidirectional LSTM over `[T × C]`, output `[T × 2H]` with rows
/// `[h_fwd(t) ; h_bwd(t)]`.
pub fn bilstm_forward(
    input: &NumArray,
    fwd: &LstmDirection,
    bwd: &LstmDirection,
) -> Result<(NumArray, BiLstmCache)> {
    input.expect_rank(2, "bilstm input")?;
    fwd.validate()?;
    bwd.validate()?;
    let (t_len, c) = (input.shape()[0], input.shape()[1]);
    if t_len == 0 {
        return Err(Error::Shape("bilstm needs at least one time step".into()));
    }
    if fwd.input() != c || bwd.input() != c || fwd.hidden() != bwd.hidden() {
        return Err(Error::Shape(format!(
            "bilstm parameters do not fit input with {c} channels"
        )));
    }
    let h = fwd.hidden();
    let mut cache = BiLstmCache::default();
    lstm_forward_raw(&PackedLstm::from_ref(&fwd.as_ref()), input.data(), &mut cache.fwd);
    lstm_forward_raw(&PackedLstm::from_ref(&bwd.as_ref()), &reversed_rows(input.data(), c), &mut cache.bwd);
    let mut out = NumArray::zeros(&[t_len, 2 * h]);
    for t in 0..t_len {
        let row = &mut out.data_mut()[t * 2 * h..(t + 1) * 2 * h];
        row[..h].copy_from_slice(cache.fwd.hidden_at(t));
        row[h..].copy_from_slice(cache.bwd.hidden_at(t_len - 1 - t));
    }
    if !out.is_finite() {
        return Err(Error::NonFinite("bilstm activations"));
    }
    Ok((out, cache))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmGrads {
    pub fwd: LstmDirection,
    pub bwd: LstmDirection,
    pub input: NumArray,
}

pub fn bilstm_backward(
    grad_out: &NumArray,
    cache: &BiLstmCache,
    fwd: &LstmDirection,
    bwd: &LstmDirection,
) -> Result<BiLstmGrads> {
    let (c, h) = (fwd.input(), fwd.hidden());
    let t_len = cache.fwd.steps();
    grad_out.expect_shape(&[t_len, 2 * h], "bilstm grad_out")?;
    let mut gh_f = vec![0.0; t_len * h];
    let mut gh_b = vec![0.0; t_len * h];
    for t in 0..t_len {
        let row = grad_out.row(t);
        gh_f[t * h..(t + 1) * h].copy_from_slice(&row[..h]);
        let s = t_len - 1 - t;
        gh_b[s * h..(s + 1) * h].copy_from_slice(&row[h..]);
    }
    let mut grads = BiLstmGrads {
        fwd: LstmDirection::zeros(c, h),
        bwd: LstmDirection::zeros(c, h),
        input: NumArray::zeros(&[t_len, c]),
    };
    let mut gx_b = vec![0.0; t_len * c];
    let mut scratch = Vec::new();
    for (dir, p) in [fwd, bwd].into_iter().enumerate() {
        let packed = PackedLstm::from_ref(&p.as_ref());
        let mut g = PackedLstm::zeros(c, h);
        let (lcache, gh, gx) = if dir == 0 {
            (&cache.fwd, &gh_f, grads.input.data_mut())
        } else {
            (&cache.bwd, &gh_b, &mut gx_b[..])
        };
        lstm_backward_raw(&packed, lcache, gh, Some(&mut g), Some(gx), &mut scratch);
        let target = if dir == 0 { &mut grads.fwd } else { &mut grads.bwd };
        g.add_into(&mut target.as_grad_mut());
    }
    for (dst, src) in grads
        .input
        .data_mut()
        .iter_mut()
        .zip(reversed_rows(&gx_b, c))
    {
        *dst += src;
    }
    Ok(grads)
}
