use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::Uniform;

use super::topology::{EqualizerTopology, OUTPUT_DIM};
use super::window::{to_complex, Polarization, WindowView, WindowedExample, N_FEATURES};
use crate::channel::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::tensor::{
    conv1d_backward_raw, conv1d_forward_raw, dense_backward_raw, dense_forward_raw, leaky_relu,
    leaky_relu_grad, lstm_backward_raw, lstm_forward_raw, mse_loss, Conv1dShape, LstmCache,
    LstmGradMut, LstmRef, NumArray, PackedLstm, ParamGroup, GATES,
};

pub const CHECKPOINT_MAGIC: &str = "CTEQCK1";

const CONV_KERNEL: usize = 0;
const CONV_BIAS: usize = 1;
const LSTM_BASE: usize = 2;
const LSTM_GROUPS: usize = 3 * GATES;
const DENSE_WEIGHT: usize = LSTM_BASE + 2 * LSTM_GROUPS;
const DENSE_BIAS: usize = DENSE_WEIGHT + 1;
#[cfg(test)]
const N_GROUPS: usize = DENSE_BIAS + 1;

const GATE_NAMES: [&str; GATES] = ["i", "f", "g", "o"];

/// Parameter groups in canonical order: conv, forward LSTM, backward LSTM,
/// dense. Each LSTM direction lists `W_*`, then `U_*`, then `b_*`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerModel {
    pub topology: EqualizerTopology,
    pub params: Vec<ParamGroup>,
}

fn group_shapes(t: &EqualizerTopology) -> Vec<(String, Vec<usize>)> {
    let (f, h) = (t.conv_filters, t.lstm_hidden);
    let mut out = vec![
        ("conv.kernel".to_string(), vec![t.conv_kernel, N_FEATURES, f]),
        ("conv.bias".to_string(), vec![f]),
    ];
    for dir in ["fwd", "bwd"] {
        for g in GATE_NAMES {
            out.push((format!("bilstm.{dir}.W_{g}"), vec![f, h]));
        }
        for g in GATE_NAMES {
            out.push((format!("bilstm.{dir}.U_{g}"), vec![h, h]));
        }
        for g in GATE_NAMES {
            out.push((format!("bilstm.{dir}.b_{g}"), vec![h]));
        }
    }
    out.push(("dense.weight".to_string(), vec![2 * h, OUTPUT_DIM]));
    out.push(("dense.bias".to_string(), vec![OUTPUT_DIM]));
    out
}

/// Glorot-uniform fan sizes; `None` for biases.
fn glorot_fans(shape: &[usize]) -> Option<(usize, usize)> {
    match shape {
        [k, c_in, c_out] => Some((k * c_in, k * c_out)),
        [n, m] => Some((*n, *m)),
        _ => None,
    }
}

impl EqualizerModel {
    /// Builds and initializes a model. Each group draws from its own stream
    /// derived from `seed` and its index.
    pub fn build(topology: EqualizerTopology, seed: u64) -> Result<Self> {
        topology.validate()?;
        let params = group_shapes(&topology)
            .into_iter()
            .enumerate()
            .map(|(idx, (id, shape))| {
                let n: usize = shape.iter().product();
                let data = match glorot_fans(&shape) {
                    Some((fan_in, fan_out)) => {
                        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                        let rng = seeded(derive_seed(seed, idx as u64));
                        rng.sample_iter(Uniform::new_inclusive(-a, a)).take(n).collect()
                    }
                    None => vec![0.0; n],
                };
                ParamGroup::new(id, NumArray::from_vec(&shape, data).expect("shape"))
            })
            .collect();
        Ok(Self { topology, params })
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(ParamGroup::len).sum()
    }

    pub fn group_ids(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.id.as_str())
    }

    pub fn is_conv_group(id: &str) -> bool {
        id.starts_with("conv.")
    }

    pub fn zero_grad(&mut self) {
        self.params.iter_mut().for_each(ParamGroup::zero_grad);
    }

    fn conv_shape(&self) -> Conv1dShape {
        Conv1dShape {
            len: self.topology.window_len(),
            c_in: N_FEATURES,
            c_out: self.topology.conv_filters,
            kernel: self.topology.conv_kernel,
        }
    }

    fn lstm_ref(&self, dir: usize) -> LstmRef<'_> {
        let base = LSTM_BASE + dir * LSTM_GROUPS;
        let p = &self.params;
        LstmRef {
            w: std::array::from_fn(|k| p[base + k].value.data()),
            u: std::array::from_fn(|k| p[base + GATES + k].value.data()),
            b: std::array::from_fn(|k| p[base + 2 * GATES + k].value.data()),
            input: self.topology.conv_filters,
            hidden: self.topology.lstm_hidden,
        }
    }

    fn pack_lstm(&self, ws: &mut Workspace) {
        for (dir, packed) in ws.packed.iter_mut().enumerate() {
            packed.pack(&self.lstm_ref(dir));
        }
    }

    /// Prediction for one `[(2M+1) × 4]` window, written into `out`.
    pub fn forward_window(&self, features: &[f64], ws: &mut Workspace, out: &mut [f64; OUTPUT_DIM]) -> Result<()> {
        ws.prepare(&self.topology, 1);
        self.pack_lstm(ws);
        self.forward_cached(&ws.packed, features, &mut ws.caches[0])?;
        out.copy_from_slice(&ws.caches[0].output);
        Ok(())
    }

    fn forward_cached(&self, packed: &[PackedLstm; 2], features: &[f64], c: &mut ExampleCache) -> Result<()> {
        let s = self.conv_shape();
        if features.len() != s.len * N_FEATURES {
            return Err(Error::Shape(format!(
                "window has {} values, model expects {} x {}",
                features.len(),
                s.len,
                N_FEATURES
            )));
        }
        let (m, f, h) = (self.topology.window_half, s.c_out, self.topology.lstm_hidden);
        c.features.clear();
        c.features.extend_from_slice(features);
        conv1d_forward_raw(
            features,
            self.params[CONV_KERNEL].value.data(),
            self.params[CONV_BIAS].value.data(),
            s,
            &mut c.conv_pre,
        );
        for (a, &z) in c.act.iter_mut().zip(&c.conv_pre) {
            *a = leaky_relu(z);
        }
        // Only the central readout is used, so each direction stops there.
        lstm_forward_raw(&packed[0], &c.act[..(m + 1) * f], &mut c.fwd);
        c.rev.clear();
        c.rev.extend(c.act.chunks_exact(f).rev().take(m + 1).flatten());
        lstm_forward_raw(&packed[1], &c.rev, &mut c.bwd);
        c.center[..h].copy_from_slice(c.fwd.last_hidden());
        c.center[h..].copy_from_slice(c.bwd.last_hidden());
        dense_forward_raw(
            &c.center,
            self.params[DENSE_WEIGHT].value.data(),
            self.params[DENSE_BIAS].value.data(),
            &mut c.output,
        );
        if !c.output.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("equalizer output"));
        }
        Ok(())
    }

    /// Accumulates parameter gradients for one cached example, skipping
    /// parameter-gradient work for groups flagged frozen. LSTM gradients go
    /// to the fused accumulators in `lstm_grads`.
    fn backward_cached(
        &mut self,
        c: &mut ExampleCache,
        packed: &[PackedLstm; 2],
        lstm_grads: &mut [PackedLstm; 2],
        scratch: &mut Vec<f64>,
        grad_out: &[f64],
        trainable: &[bool],
    ) {
        let s = self.conv_shape();
        let (m, f, h) = (self.topology.window_half, s.c_out, self.topology.lstm_hidden);
        let (head, tail) = self.params.split_at_mut(DENSE_WEIGHT);
        let (dense_w, dense_b) = tail.split_at_mut(1);
        let (dense_w, dense_b) = (&mut dense_w[0], &mut dense_b[0]);
        dense_backward_raw(
            grad_out,
            &c.center,
            dense_w.value.data(),
            dense_w.grad.data_mut(),
            dense_b.grad.data_mut(),
            Some(&mut c.d_center),
        );

        c.d_act.iter_mut().for_each(|v| *v = 0.0);
        for dir in 0..2 {
            c.d_h.iter_mut().for_each(|v| *v = 0.0);
            c.d_h[m * h..].copy_from_slice(&c.d_center[dir * h..(dir + 1) * h]);
            c.d_x.iter_mut().for_each(|v| *v = 0.0);
            let cache = if dir == 0 { &c.fwd } else { &c.bwd };
            let grads = Self::direction_trainable(trainable, dir).then_some(&mut lstm_grads[dir]);
            lstm_backward_raw(&packed[dir], cache, &c.d_h, grads, Some(&mut c.d_x), scratch);
            let t_len = 2 * m + 1;
            for (step, row) in c.d_x.chunks_exact(f).enumerate() {
                let t = if dir == 0 { step } else { t_len - 1 - step };
                for (d, &g) in c.d_act[t * f..(t + 1) * f].iter_mut().zip(row) {
                    *d += g;
                }
            }
        }
        for (d, &z) in c.d_act.iter_mut().zip(&c.conv_pre) {
            *d *= leaky_relu_grad(z);
        }
        if trainable[CONV_KERNEL] || trainable[CONV_BIAS] {
            let (kernel, bias) = head.split_at_mut(CONV_BIAS);
            let kernel = &mut kernel[CONV_KERNEL];
            conv1d_backward_raw(
                &c.d_act,
                &c.features,
                kernel.value.data(),
                s,
                None,
                kernel.grad.data_mut(),
                bias[0].grad.data_mut(),
            );
        }
    }

    fn direction_trainable(trainable: &[bool], dir: usize) -> bool {
        let base = LSTM_BASE + dir * LSTM_GROUPS;
        trainable[base..base + LSTM_GROUPS].iter().any(|&t| t)
    }

    fn lstm_grad_mut(&mut self, dir: usize) -> LstmGradMut<'_> {
        let base = LSTM_BASE + dir * LSTM_GROUPS;
        let mut groups = self.params[base..base + LSTM_GROUPS].iter_mut().map(|p| p.grad.data_mut());
        let mut next = || groups.next().expect("lstm group count");
        LstmGradMut {
            w: std::array::from_fn(|_| next()),
            u: std::array::from_fn(|_| next()),
            b: std::array::from_fn(|_| next()),
        }
    }

    /// Mean-squared-error loss of a batch; when `accumulate` is set the
    /// parameter gradients of that loss are added to each group's `grad`.
    pub fn batch_loss(
        &mut self,
        windows: &[&[f64]],
        labels: &[[f64; OUTPUT_DIM]],
        ws: &mut Workspace,
        accumulate: bool,
    ) -> Result<f64> {
        let all = vec![true; self.params.len()];
        self.run_batch(windows, labels, ws, accumulate.then_some(&all[..]))
    }

    /// As [`Self::batch_loss`] with accumulation, leaving the gradients of
    /// groups whose flag is false unspecified.
    pub fn batch_loss_masked(
        &mut self,
        windows: &[&[f64]],
        labels: &[[f64; OUTPUT_DIM]],
        ws: &mut Workspace,
        trainable: &[bool],
    ) -> Result<f64> {
        if trainable.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "{} mask flags for {} groups",
                trainable.len(),
                self.params.len()
            )));
        }
        self.run_batch(windows, labels, ws, Some(trainable))
    }

    fn run_batch(
        &mut self,
        windows: &[&[f64]],
        labels: &[[f64; OUTPUT_DIM]],
        ws: &mut Workspace,
        trainable: Option<&[bool]>,
    ) -> Result<f64> {
        if windows.len() != labels.len() || windows.is_empty() {
            return Err(Error::Shape(format!(
                "{} windows but {} labels",
                windows.len(),
                labels.len()
            )));
        }
        let b = windows.len();
        ws.prepare(&self.topology, b);
        self.pack_lstm(ws);
        for (win, c) in windows.iter().zip(ws.caches.iter_mut()) {
            self.forward_cached(&ws.packed, win, c)?;
        }
        let pred = NumArray::from_vec(
            &[b, OUTPUT_DIM],
            ws.caches[..b].iter().flat_map(|c| c.output).collect(),
        )?;
        let target = NumArray::from_vec(&[b, OUTPUT_DIM], labels.iter().flatten().copied().collect())?;
        let (loss, grad) = mse_loss(&pred, &target)?;
        if let Some(trainable) = trainable {
            let (f, h) = (self.topology.conv_filters, self.topology.lstm_hidden);
            ws.packed_grads.iter_mut().for_each(|g| g.reset(f, h));
            for (i, c) in ws.caches[..b].iter_mut().enumerate() {
                self.backward_cached(c, &ws.packed, &mut ws.packed_grads, &mut ws.scratch, grad.row(i), trainable);
            }
            for dir in 0..2 {
                if Self::direction_trainable(trainable, dir) {
                    ws.packed_grads[dir].add_into(&mut self.lstm_grad_mut(dir));
                }
            }
        }
        Ok(loss)
    }

    /// Batch inference, `[B × 2]`.
    pub fn forward(&self, batch: &[WindowedExample]) -> Result<NumArray> {
        let mut ws = Workspace::default();
        let mut data = Vec::with_capacity(batch.len() * OUTPUT_DIM);
        let mut out = [0.0; OUTPUT_DIM];
        for ex in batch {
            ex.features
                .expect_shape(&[self.topology.window_len(), N_FEATURES], "window features")?;
            self.forward_window(ex.features.data(), &mut ws, &mut out)?;
            data.extend_from_slice(&out);
        }
        NumArray::from_vec(&[batch.len(), OUTPUT_DIM], data)
    }

    /// Outputs (normalized units) for every window of a view.
    pub fn predict_view(&self, view: &WindowView, ws: &mut Workspace) -> Result<Vec<[f64; OUTPUT_DIM]>> {
        ws.prepare(&self.topology, 1);
        self.pack_lstm(ws);
        (0..view.len())
            .map(|k| {
                self.forward_cached(&ws.packed, view.features(k), &mut ws.caches[0])?;
                Ok(ws.caches[0].output)
            })
            .collect()
    }

    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let mut out = format!(
            "{CHECKPOINT_MAGIC}\ntopology {}\ngroups {}\n",
            self.topology.descriptor(),
            self.params.len()
        );
        for p in &self.params {
            let dims: Vec<String> = p.value.shape().iter().map(|d| d.to_string()).collect();
            out.push_str(&format!("group {} {}\n", p.id, dims.join(",")));
        }
        out.push_str("data\n");
        let mut bytes = out.into_bytes();
        for p in &self.params {
            bytes.extend(p.value_bytes());
        }
        bytes
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self> {
        const KIND: &str = "checkpoint";
        let bad = |why: String| Error::format(KIND, why);
        let mut lines = bytes.split(|&b| b == b'\n');
        let mut offset = 0;
        let mut next_line = || -> Result<&str> {
            let l = lines.next().ok_or_else(|| bad("truncated header".into()))?;
            offset += l.len() + 1;
            std::str::from_utf8(l).map_err(|_| bad("header is not text".into()))
        };
        if next_line()? != CHECKPOINT_MAGIC {
            return Err(bad("bad magic".into()));
        }
        let topo_line = next_line()?;
        let descriptor = topo_line
            .strip_prefix("topology ")
            .ok_or_else(|| bad("missing topology line".into()))?;
        let topology = EqualizerTopology::from_descriptor(descriptor)?;
        let expected = group_shapes(&topology);
        let n_groups: usize = next_line()?
            .strip_prefix("groups ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing group count".into()))?;
        if n_groups != expected.len() {
            return Err(bad(format!("{n_groups} groups, topology needs {}", expected.len())));
        }
        let mut shapes = Vec::with_capacity(n_groups);
        for (id, shape) in &expected {
            let line = next_line()?;
            let rest = line
                .strip_prefix("group ")
                .ok_or_else(|| bad(format!("bad group line {line:?}")))?;
            let (gid, dims) = rest
                .split_once(' ')
                .ok_or_else(|| bad(format!("bad group line {line:?}")))?;
            let dims: Vec<usize> = dims
                .split(',')
                .map(|d| d.parse().map_err(|_| bad(format!("bad shape {dims:?}"))))
                .collect::<Result<_>>()?;
            if gid != id || &dims != shape {
                return Err(Error::Topology {
                    expected: format!("{id} {shape:?}"),
                    found: format!("{gid} {dims:?}"),
                });
            }
            shapes.push((gid.to_string(), dims));
        }
        if next_line()? != "data" {
            return Err(bad("header not terminated by 'data'".into()));
        }
        let mut body = &bytes[offset..];
        let mut params = Vec::with_capacity(n_groups);
        for (id, shape) in shapes {
            let n: usize = shape.iter().product();
            if body.len() < 8 * n {
                return Err(bad(format!("truncated values for {id}")));
            }
            let (head, tail) = body.split_at(8 * n);
            body = tail;
            let data = head
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            params.push(ParamGroup::new(id, NumArray::from_vec(&shape, data)?));
        }
        if !body.is_empty() {
            return Err(bad("trailing bytes".into()));
        }
        Ok(Self { topology, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_bytes(&bytes)
    }

    /// Copies parameter values from a model with the same topology.
    pub fn load_values_from(&mut self, other: &EqualizerModel) -> Result<()> {
        if other.topology != self.topology {
            return Err(Error::Topology {
                expected: self.topology.descriptor(),
                found: other.topology.descriptor(),
            });
        }
        for (dst, src) in self.params.iter_mut().zip(&other.params) {
            dst.value = src.value.clone();
        }
        Ok(())
    }
}

/// Per-example activations kept between forward and backward.
#[derive(Debug, Clone, Default)]
struct ExampleCache {
    features: Vec<f64>,
    conv_pre: Vec<f64>,
    act: Vec<f64>,
    rev: Vec<f64>,
    fwd: LstmCache,
    bwd: LstmCache,
    center: Vec<f64>,
    output: [f64; OUTPUT_DIM],
    d_center: Vec<f64>,
    d_h: Vec<f64>,
    d_x: Vec<f64>,
    d_act: Vec<f64>,
}

impl ExampleCache {
    fn sized(t: &EqualizerTopology) -> Self {
        let (len, f, h) = (t.window_len(), t.conv_filters, t.lstm_hidden);
        let steps = t.window_half + 1;
        Self {
            conv_pre: vec![0.0; len * f],
            act: vec![0.0; len * f],
            center: vec![0.0; 2 * h],
            d_center: vec![0.0; 2 * h],
            d_h: vec![0.0; steps * h],
            d_x: vec![0.0; steps * f],
            d_act: vec![0.0; len * f],
            ..Self::default()
        }
    }
}

/// Reusable scratch buffers so training does not allocate per example.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    topology: Option<EqualizerTopology>,
    caches: Vec<ExampleCache>,
    packed: [PackedLstm; 2],
    packed_grads: [PackedLstm; 2],
    scratch: Vec<f64>,
}

impl Workspace {
    fn prepare(&mut self, t: &EqualizerTopology, batch: usize) -> &mut [ExampleCache] {
        if self.topology != Some(*t) {
            self.topology = Some(*t);
            self.caches.clear();
        }
        while self.caches.len() < batch {
            self.caches.push(ExampleCache::sized(t));
        }
        &mut self.caches[..batch]
    }
}

/// Equalized symbols for both polarizations, de-normalized to received
/// units. Each output has `len - 2M` symbols, aligned with `tx[M..len-M]`.
pub fn equalize_dataset(model: &EqualizerModel, ds: &Dataset) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let m = model.topology.window_half;
    let mut ws = Workspace::default();
    let x = model.predict_view(&WindowView::new(ds, m, Polarization::X)?, &mut ws)?;
    let y = model.predict_view(&WindowView::new(ds, m, Polarization::Y)?, &mut ws)?;
    let s = ds.normalization_scale;
    Ok((to_complex(&x, s), to_complex(&y, s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{bilstm_forward, conv1d_forward, dense_forward, LstmDirection};

    fn tiny() -> EqualizerTopology {
        EqualizerTopology {
            window_half: 2,
            conv_filters: 2,
            conv_kernel: 3,
            lstm_hidden: 3,
        }
    }

    fn random_window(t: &EqualizerTopology, seed: u64) -> Vec<f64> {
        let mut rng = seeded(seed);
        (0..t.window_len() * N_FEATURES).map(|_| rng.gen_range(-1.5..1.5)).collect()
    }

    fn direction(model: &EqualizerModel, dir: usize) -> LstmDirection {
        let base = LSTM_BASE + dir * LSTM_GROUPS;
        let p = &model.params;
        LstmDirection {
            w: std::array::from_fn(|k| p[base + k].value.clone()),
            u: std::array::from_fn(|k| p[base + GATES + k].value.clone()),
            b: std::array::from_fn(|k| p[base + 2 * GATES + k].value.clone()),
        }
    }

    #[test]
    fn param_count_matches_formula() {
        for t in [tiny(), EqualizerTopology::default()] {
            let m = EqualizerModel::build(t, 1).unwrap();
            assert_eq!(m.param_count(), t.param_count());
            assert_eq!(m.params.len(), N_GROUPS);
        }
        let d = EqualizerTopology::default();
        assert_eq!(d.conv_param_count(), 11 * 4 * 32 + 32);
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = EqualizerModel::build(tiny(), 9).unwrap();
        let b = EqualizerModel::build(tiny(), 9).unwrap();
        let c = EqualizerModel::build(tiny(), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.params[CONV_BIAS].value.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_composed_layer_oracles() {
        let t = EqualizerTopology {
            window_half: 3,
            conv_filters: 4,
            conv_kernel: 3,
            lstm_hidden: 5,
        };
        let mut model = EqualizerModel::build(t, 3).unwrap();
        let mut rng = seeded(77);
        for p in &mut model.params {
            p.value.data_mut().iter_mut().for_each(|v| *v += rng.gen_range(-0.2..0.2));
        }
        let win = random_window(&t, 4);
        let input = NumArray::from_vec(&[t.window_len(), N_FEATURES], win.clone()).unwrap();
        let conv = conv1d_forward(&input, &model.params[0].value, &model.params[1].value).unwrap();
        let act = NumArray::from_vec(conv.shape(), conv.data().iter().map(|&z| leaky_relu(z)).collect()).unwrap();
        let (seq, _) = bilstm_forward(&act, &direction(&model, 0), &direction(&model, 1)).unwrap();
        let center = NumArray::from_vec(&[2 * t.lstm_hidden], seq.row(t.window_half).to_vec()).unwrap();
        let want = dense_forward(&center, &model.params[DENSE_WEIGHT].value, &model.params[DENSE_BIAS].value).unwrap();

        let mut got = [0.0; 2];
        model.forward_window(&win, &mut Workspace::default(), &mut got).unwrap();
        for (g, w) in got.iter().zip(want.data()) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let t = tiny();
        let mut model = EqualizerModel::build(t, 5).unwrap();
        let mut rng = seeded(6);
        for p in &mut model.params {
            p.value.data_mut().iter_mut().for_each(|v| *v += rng.gen_range(-0.3..0.3));
        }
        let wins: Vec<Vec<f64>> = (0..3).map(|i| random_window(&t, 20 + i)).collect();
        let refs: Vec<&[f64]> = wins.iter().map(Vec::as_slice).collect();
        let labels = [[0.3, -0.2], [-0.7, 0.1], [0.5, 0.9]];
        let mut ws = Workspace::default();
        model.zero_grad();
        model.batch_loss(&refs, &labels, &mut ws, true).unwrap();
        let analytic: Vec<Vec<f64>> = model.params.iter().map(|p| p.grad.data().to_vec()).collect();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for g in 0..model.params.len() {
            for i in 0..model.params[g].len() {
                let orig = model.params[g].value.data()[i];
                model.params[g].value.data_mut()[i] = orig + h;
                let lp = model.batch_loss(&refs, &labels, &mut ws, false).unwrap();
                model.params[g].value.data_mut()[i] = orig - h;
                let lm = model.batch_loss(&refs, &labels, &mut ws, false).unwrap();
                model.params[g].value.data_mut()[i] = orig;
                let num = (lp - lm) / (2.0 * h);
                let a = analytic[g][i];
                let rel = (a - num).abs() / a.abs().max(num.abs()).max(1e-7);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn forward_is_pure_and_batch_order_consistent() {
        let t = tiny();
        let model = EqualizerModel::build(t, 2).unwrap();
        let ex: Vec<WindowedExample> = (0..4)
            .map(|i| WindowedExample {
                features: NumArray::from_vec(&[t.window_len(), N_FEATURES], random_window(&t, i)).unwrap(),
                label: NumArray::zeros(&[2]),
            })
            .collect();
        let a = model.forward(&ex).unwrap();
        assert_eq!(a.shape(), &[4, 2]);
        assert_eq!(a, model.forward(&ex).unwrap());
        let rev: Vec<_> = ex.iter().rev().cloned().collect();
        let b = model.forward(&rev).unwrap();
        for i in 0..4 {
            assert_eq!(a.row(i), b.row(3 - i));
        }
        let same = model.forward(&[ex[1].clone(), ex[1].clone()]).unwrap();
        assert_eq!(same.row(0), same.row(1));
    }

    #[test]
    fn wrong_window_rejected() {
        let model = EqualizerModel::build(tiny(), 2).unwrap();
        let mut out = [0.0; 2];
        assert!(model.forward_window(&[0.0; 12], &mut Workspace::default(), &mut out).is_err());
        let bad = WindowedExample {
            features: NumArray::zeros(&[4, 5]),
            label: NumArray::zeros(&[2]),
        };
        assert!(model.forward(&[bad]).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_byte_identical() {
        let model = EqualizerModel::build(tiny(), 8).unwrap();
        let bytes = model.to_checkpoint_bytes();
        let back = EqualizerModel::from_checkpoint_bytes(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_checkpoint_bytes(), bytes);
        assert!(EqualizerModel::from_checkpoint_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(EqualizerModel::from_checkpoint_bytes(&extra).is_err());
    }

    #[test]
    fn topology_mismatch_rejected() {
        let mut a = EqualizerModel::build(tiny(), 1).unwrap();
        let b = EqualizerModel::build(EqualizerTopology::default(), 1).unwrap();
        assert!(matches!(a.load_values_from(&b), Err(Error::Topology { .. })));
    }
}
