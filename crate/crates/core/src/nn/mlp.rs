//! Dense network `Linear -> ReLU -> LayerNorm` (hidden) with a
//! `Linear -> Softplus` scalar head.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NnError;

/// Hidden widths of the inductor Q surrogate.
pub const PAPER_WIDTHS: [usize; 10] = [256, 256, 256, 128, 128, 128, 64, 64, 64, 32];
/// `(f, W, L, Lv, Lh, Lcn)`.
pub const N_FEATURES: usize = 6;
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Numerically stable `ln(1 + e^z)`.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Derivative of [`softplus`], the logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Normalizes `x` over its length, then applies `gamma * x_hat + beta`.
pub fn layer_norm(x: &[f64], gamma: &[f64], beta: &[f64], eps: f64) -> Vec<f64> {
    assert!(!x.is_empty(), "layer_norm of an empty vector");
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + eps).sqrt();
    x.iter()
        .zip(gamma.iter().zip(beta))
        .map(|(v, (g, b))| g * (v - mean) * inv + b)
        .collect()
}

/// Per-feature standardization statistics from the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl NormStats {
    /// Population mean and standard deviation of each column.
    pub fn from_rows(rows: &[[f64; N_FEATURES]]) -> Result<Self, NnError> {
        if rows.is_empty() {
            return Err(NnError::EmptySplit("train"));
        }
        let n = rows.len() as f64;
        let mut mu = vec![0.0; N_FEATURES];
        for r in rows {
            for (m, v) in mu.iter_mut().zip(r) {
                *m += v;
            }
        }
        mu.iter_mut().for_each(|m| *m /= n);
        let mut sigma = vec![0.0; N_FEATURES];
        for r in rows {
            for ((s, v), m) in sigma.iter_mut().zip(r).zip(&mu) {
                *s += (v - m) * (v - m);
            }
        }
        // constant columns keep unit scale
        sigma.iter_mut().for_each(|s| {
            *s = (*s / n).sqrt();
            if *s <= 1e-12 {
                *s = 1.0;
            }
        });
        Ok(Self { mu, sigma })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mu: vec![0.0; dim],
            sigma: vec![1.0; dim],
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mu.iter().zip(&self.sigma))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn denormalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mu.iter().zip(&self.sigma))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out x in`, row-major.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    fn zeros(input: usize, output: usize) -> Self {
        Self {
            w: Array2::zeros((output, input)),
            b: Array1::zeros(output),
        }
    }

    fn kaiming_uniform(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / input as f64).sqrt();
        let w = Array2::from_shape_fn((output, input), |_| rng.gen_range(-bound..bound));
        Self {
            w,
            b: Array1::zeros(output),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.w.nrows()
    }

    fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.w.t());
        z += &self.b;
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    pub linear: Dense,
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

/// The Q-prediction network. Parameters are plain `f64` arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub hidden: Vec<HiddenLayer>,
    pub head: Dense,
    pub eps: f64,
}

/// Gradients with the same layout as [`MlpModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub hidden: Vec<HiddenLayer>,
    pub head: Dense,
}

impl MlpGrads {
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for h in &self.hidden {
            out.push(h.linear.w.as_slice().unwrap());
            out.push(h.linear.b.as_slice().unwrap());
            out.push(h.gamma.as_slice().unwrap());
            out.push(h.beta.as_slice().unwrap());
        }
        out.push(self.head.w.as_slice().unwrap());
        out.push(self.head.b.as_slice().unwrap());
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for h in &mut self.hidden {
            out.push(h.linear.w.as_slice_mut().unwrap());
            out.push(h.linear.b.as_slice_mut().unwrap());
            out.push(h.gamma.as_slice_mut().unwrap());
            out.push(h.beta.as_slice_mut().unwrap());
        }
        out.push(self.head.w.as_slice_mut().unwrap());
        out.push(self.head.b.as_slice_mut().unwrap());
        out
    }
}

/// Activations kept from a batch forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    xhat: Vec<Array2<f64>>,
    inv_std: Vec<Array1<f64>>,
    head_in: Array2<f64>,
    head_z: Array1<f64>,
    pub output: Array1<f64>,
}

/// Result of [`MlpModel::backward`].
#[derive(Debug, Clone)]
pub struct Backward {
    pub loss: f64,
    pub params: MlpGrads,
    /// `dQ_i / dx_raw_i` per sample (rows match the batch).
    pub inputs: Array2<f64>,
}

impl MlpModel {
    /// Kaiming-uniform weights, zero biases, unit LayerNorm gain.
    pub fn new(input_dim: usize, widths: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hidden = Vec::with_capacity(widths.len());
        let mut fan_in = input_dim;
        for &w in widths {
            hidden.push(HiddenLayer {
                linear: Dense::kaiming_uniform(fan_in, w, &mut rng),
                gamma: Array1::ones(w),
                beta: Array1::zeros(w),
            });
            fan_in = w;
        }
        let head = Dense::kaiming_uniform(fan_in, 1, &mut rng);
        Self {
            hidden,
            head,
            eps: LAYER_NORM_EPS,
        }
    }

    /// All parameters zero (LayerNorm gains included): the output is `ln 2`.
    pub fn zeros(input_dim: usize, widths: &[usize]) -> Self {
        let mut fan_in = input_dim;
        let hidden = widths
            .iter()
            .map(|&w| {
                let l = HiddenLayer {
                    linear: Dense::zeros(fan_in, w),
                    gamma: Array1::zeros(w),
                    beta: Array1::zeros(w),
                };
                fan_in = w;
                l
            })
            .collect();
        Self {
            hidden,
            head: Dense::zeros(fan_in, 1),
            eps: LAYER_NORM_EPS,
        }
    }

    pub fn paper(seed: u64) -> Self {
        Self::new(N_FEATURES, &PAPER_WIDTHS, seed)
    }

    pub fn input_dim(&self) -> usize {
        self.hidden
            .first()
            .map(|h| h.linear.inputs())
            .unwrap_or_else(|| self.head.inputs())
    }

    pub fn widths(&self) -> Vec<usize> {
        self.hidden.iter().map(|h| h.linear.outputs()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            hidden: self
                .hidden
                .iter()
                .map(|h| HiddenLayer {
                    linear: Dense::zeros(h.linear.inputs(), h.linear.outputs()),
                    gamma: Array1::zeros(h.gamma.len()),
                    beta: Array1::zeros(h.beta.len()),
                })
                .collect(),
            head: Dense::zeros(self.head.inputs(), 1),
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for h in &self.hidden {
            out.push(h.linear.w.as_slice().unwrap());
            out.push(h.linear.b.as_slice().unwrap());
            out.push(h.gamma.as_slice().unwrap());
            out.push(h.beta.as_slice().unwrap());
        }
        out.push(self.head.w.as_slice().unwrap());
        out.push(self.head.b.as_slice().unwrap());
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for h in &mut self.hidden {
            out.push(h.linear.w.as_slice_mut().unwrap());
            out.push(h.linear.b.as_slice_mut().unwrap());
            out.push(h.gamma.as_slice_mut().unwrap());
            out.push(h.beta.as_slice_mut().unwrap());
        }
        out.push(self.head.w.as_slice_mut().unwrap());
        out.push(self.head.b.as_slice_mut().unwrap());
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn check_dim(&self, len: usize) -> Result<(), NnError> {
        if len != self.input_dim() {
            return Err(NnError::Shape {
                expected: self.input_dim(),
                found: len,
            });
        }
        Ok(())
    }

    /// Standardizes raw rows into a batch matrix.
    pub fn normalize_batch(&self, stats: &NormStats, rows: &[Vec<f64>]) -> Result<Array2<f64>, NnError> {
        let d = self.input_dim();
        let mut x = Array2::zeros((rows.len(), d));
        for (i, r) in rows.iter().enumerate() {
            self.check_dim(r.len())?;
            for j in 0..d {
                x[[i, j]] = (r[j] - stats.mu[j]) / stats.sigma[j];
            }
        }
        Ok(x)
    }

    /// Batch forward on already-normalized inputs, keeping activations.
    pub fn forward_cached(&self, x: ArrayView2<f64>) -> ForwardCache {
        let n_layers = self.hidden.len();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut pre = Vec::with_capacity(n_layers);
        let mut xhat = Vec::with_capacity(n_layers);
        let mut inv_std = Vec::with_capacity(n_layers);
        let mut cur = x.to_owned();
        for layer in &self.hidden {
            let z = layer.linear.forward(cur.view());
            let mut a = z.mapv(|v| v.max(0.0));
            let width = a.ncols() as f64;
            let mut inv = Array1::zeros(a.nrows());
            for (mut row, inv_r) in a.axis_iter_mut(Axis(0)).zip(inv.iter_mut()) {
                let mean = row.sum() / width;
                let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / width;
                let is = 1.0 / (var + self.eps).sqrt();
                row.mapv_inplace(|v| (v - mean) * is);
                *inv_r = is;
            }
            let y = &a * &layer.gamma + &layer.beta;
            inputs.push(cur);
            pre.push(z);
            xhat.push(a);
            inv_std.push(inv);
            cur = y;
        }
        let head_z = self.head.forward(cur.view()).column(0).to_owned();
        let output = head_z.mapv(softplus);
        ForwardCache {
            inputs,
            pre,
            xhat,
            inv_std,
            head_in: cur,
            head_z,
            output,
        }
    }

    /// Predictions for normalized inputs, evaluated in chunks.
    pub fn predict_normalized(&self, x: ArrayView2<f64>) -> Array1<f64> {
        const CHUNK: usize = 4096;
        let mut out = Array1::zeros(x.nrows());
        let mut start = 0;
        while start < x.nrows() {
            let end = (start + CHUNK).min(x.nrows());
            let c = self.forward_cached(x.slice(s![start..end, ..]));
            out.slice_mut(s![start..end]).assign(&c.output);
            start = end;
        }
        out
    }

    /// Predicted Q for one raw feature vector.
    pub fn forward(&self, stats: &NormStats, x_raw: &[f64]) -> Result<f64, NnError> {
        self.check_dim(x_raw.len())?;
        let x = Array2::from_shape_vec((1, x_raw.len()), stats.normalize(x_raw)).expect("shape");
        Ok(self.forward_cached(x.view()).output[0])
    }

    /// Batched forward on raw rows.
    pub fn forward_batch(&self, stats: &NormStats, rows: &[Vec<f64>]) -> Result<Vec<f64>, NnError> {
        let x = self.normalize_batch(stats, rows)?;
        Ok(self.predict_normalized(x.view()).to_vec())
    }

    /// Backpropagates an output seed `d(objective)/d(Q_i)` through the cache.
    /// Returns parameter gradients and gradients w.r.t. the normalized inputs.
    pub fn backprop(&self, cache: &ForwardCache, seed: &Array1<f64>) -> (MlpGrads, Array2<f64>) {
        let mut grads = self.zero_grads();
        let dz_head: Array1<f64> = seed * &cache.head_z.mapv(sigmoid);
        let dz_col = dz_head.view().insert_axis(Axis(1));
        grads.head.w = dz_col.t().dot(&cache.head_in);
        grads.head.b[0] = dz_head.sum();
        let mut d_out = dz_col.dot(&self.head.w);

        for (l, layer) in self.hidden.iter().enumerate().rev() {
            let xhat = &cache.xhat[l];
            let g = &mut grads.hidden[l];
            g.gamma = (&d_out * xhat).sum_axis(Axis(0));
            g.beta = d_out.sum_axis(Axis(0));

            let mut dx = &d_out * &layer.gamma;
            let width = dx.ncols() as f64;
            for ((mut drow, xrow), &is) in dx
                .axis_iter_mut(Axis(0))
                .zip(xhat.axis_iter(Axis(0)))
                .zip(cache.inv_std[l].iter())
            {
                let mean_d = drow.sum() / width;
                let mean_dx = drow.iter().zip(xrow.iter()).map(|(a, b)| a * b).sum::<f64>() / width;
                drow.iter_mut()
                    .zip(xrow.iter())
                    .for_each(|(d, xh)| *d = is * (*d - mean_d - xh * mean_dx));
            }
            // ReLU mask
            dx.zip_mut_with(&cache.pre[l], |d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            g.linear.w = dx.t().dot(&cache.inputs[l]);
            g.linear.b = dx.sum_axis(Axis(0));
            d_out = dx.dot(&layer.linear.w);
        }
        (grads, d_out)
    }

    /// MSE loss and its parameter gradients on a normalized batch.
    pub fn mse_grads(&self, x: ArrayView2<f64>, targets: &[f64]) -> (f64, MlpGrads) {
        let cache = self.forward_cached(x);
        let n = targets.len() as f64;
        let resid: Array1<f64> = cache
            .output
            .iter()
            .zip(targets)
            .map(|(p, t)| p - t)
            .collect();
        let loss = resid.iter().map(|r| r * r).sum::<f64>() / n;
        let seed = resid.mapv(|r| 2.0 * r / n);
        let (grads, _) = self.backprop(&cache, &seed);
        (loss, grads)
    }

    /// Exact MSE parameter gradients for `(rows, targets)` and, per sample,
    /// the gradient of the predicted Q with respect to the raw inputs.
    pub fn backward(&self, stats: &NormStats, rows: &[Vec<f64>], targets: &[f64]) -> Result<Backward, NnError> {
        if rows.len() != targets.len() {
            return Err(NnError::LengthMismatch(rows.len(), targets.len()));
        }
        if rows.is_empty() {
            return Err(NnError::EmptySplit("batch"));
        }
        let x = self.normalize_batch(stats, rows)?;
        let (loss, params) = self.mse_grads(x.view(), targets);
        let cache = self.forward_cached(x.view());
        let (_, mut dx) = self.backprop(&cache, &Array1::ones(rows.len()));
        for mut row in dx.axis_iter_mut(Axis(0)) {
            row.iter_mut().zip(&stats.sigma).for_each(|(d, s)| *d /= s);
        }
        Ok(Backward {
            loss,
            params,
            inputs: dx,
        })
    }
}

/// Allocation-free single-sample evaluator for inverse design.
///
/// Holds scratch buffers sized for one model; reuse it across steps.
#[derive(Debug, Clone)]
pub struct SingleEval {
    pre: Vec<Vec<f64>>,
    xhat: Vec<Vec<f64>>,
    inv_std: Vec<f64>,
    acts: Vec<Vec<f64>>,
    grad_a: Vec<f64>,
    grad_b: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = acc.iter().sum::<f64>();
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

impl SingleEval {
    pub fn new(model: &MlpModel) -> Self {
        let widths = model.widths();
        let max_w = widths.iter().copied().max().unwrap_or(0).max(model.input_dim());
        Self {
            pre: widths.iter().map(|&w| vec![0.0; w]).collect(),
            xhat: widths.iter().map(|&w| vec![0.0; w]).collect(),
            inv_std: vec![0.0; widths.len()],
            acts: std::iter::once(model.input_dim())
                .chain(widths.iter().copied())
                .map(|w| vec![0.0; w])
                .collect(),
            grad_a: vec![0.0; max_w],
            grad_b: vec![0.0; max_w],
        }
    }

    /// Predicted Q and `dQ/dx_raw` for one raw input.
    pub fn value_and_input_grad(&mut self, model: &MlpModel, stats: &NormStats, x_raw: &[f64], grad: &mut [f64]) -> f64 {
        let d = model.input_dim();
        debug_assert_eq!(x_raw.len(), d);
        for j in 0..d {
            self.acts[0][j] = (x_raw[j] - stats.mu[j]) / stats.sigma[j];
        }
        for (l, layer) in model.hidden.iter().enumerate() {
            let w = layer.linear.w.as_slice().unwrap();
            let fan_in = layer.linear.inputs();
            let width = layer.linear.outputs();
            let (before, after) = self.acts.split_at_mut(l + 1);
            let input = &before[l];
            let out = &mut after[0];
            let pre = &mut self.pre[l];
            let xhat = &mut self.xhat[l];
            for j in 0..width {
                let z = layer.linear.b[j] + dot(&w[j * fan_in..(j + 1) * fan_in], input);
                pre[j] = z;
                xhat[j] = z.max(0.0);
            }
            let n = width as f64;
            let mean = xhat.iter().sum::<f64>() / n;
            let var = xhat.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let is = 1.0 / (var + model.eps).sqrt();
            self.inv_std[l] = is;
            for j in 0..width {
                xhat[j] = (xhat[j] - mean) * is;
                out[j] = layer.gamma[j] * xhat[j] + layer.beta[j];
            }
        }
        let last = self.acts.last().unwrap();
        let z = model.head.b[0] + dot(model.head.w.as_slice().unwrap(), last);
        let q = softplus(z);

        // reverse pass, seed dQ = 1
        let dz = sigmoid(z);
        let hw = model.head.w.as_slice().unwrap();
        let mut width = hw.len();
        for j in 0..width {
            self.grad_a[j] = dz * hw[j];
        }
        for (l, layer) in model.hidden.iter().enumerate().rev() {
            let xhat = &self.xhat[l];
            let pre = &self.pre[l];
            let n = width as f64;
            let g = &mut self.grad_a[..width];
            let mut mean_d = 0.0;
            let mut mean_dx = 0.0;
            for j in 0..width {
                g[j] *= layer.gamma[j];
                mean_d += g[j];
                mean_dx += g[j] * xhat[j];
            }
            mean_d /= n;
            mean_dx /= n;
            let is = self.inv_std[l];
            for j in 0..width {
                g[j] = if pre[j] > 0.0 {
                    is * (g[j] - mean_d - xhat[j] * mean_dx)
                } else {
                    0.0
                };
            }
            let fan_in = layer.linear.inputs();
            let w = layer.linear.w.as_slice().unwrap();
            let dx = &mut self.grad_b[..fan_in];
            dx.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..width {
                let gj = g[j];
                if gj != 0.0 {
                    for (d, wv) in dx.iter_mut().zip(&w[j * fan_in..(j + 1) * fan_in]) {
                        *d += gj * wv;
                    }
                }
            }
            std::mem::swap(&mut self.grad_a, &mut self.grad_b);
            width = fan_in;
        }
        for j in 0..d {
            grad[j] = self.grad_a[j] / stats.sigma[j];
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_values() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((softplus(100.0) - 100.0).abs() < 1e-12);
        let tiny = softplus(-100.0);
        assert!(tiny > 0.0);
        assert!((tiny / (-100.0f64).exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn layer_norm_reference() {
        let y = layer_norm(&[1.0, 2.0, 3.0], &[1.0; 3], &[0.0; 3], 0.0);
        let want = [-1.224744871391589, 0.0, 1.224744871391589];
        for (a, b) in y.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let c = layer_norm(&[4.2; 5], &[1.0; 5], &[0.0; 5], LAYER_NORM_EPS);
        assert!(c.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_model_outputs_ln2() {
        let m = MlpModel::zeros(N_FEATURES, &[8, 4]);
        let stats = NormStats::identity(N_FEATURES);
        let q = m.forward(&stats, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((q - std::f64::consts::LN_2).abs() < 1e-15);
        let b = m.backward(&stats, &[vec![1.0; 6]], &[0.0]).unwrap();
        assert!(b.inputs.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn shape_error() {
        let m = MlpModel::new(N_FEATURES, &[4], 1);
        let stats = NormStats::identity(N_FEATURES);
        assert!(matches!(m.forward(&stats, &[1.0; 5]), Err(NnError::Shape { expected: 6, found: 5 })));
    }

    #[test]
    fn single_path_matches_batch_path() {
        let m = MlpModel::new(N_FEATURES, &[16, 12, 8], 3);
        let stats = NormStats {
            mu: vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.5],
            sigma: vec![2.0, 0.5, 1.0, 3.0, 1.5, 0.7],
        };
        let x = vec![0.3, -1.0, 2.0, 4.0, -0.5, 1.0];
        let b = m.backward(&stats, std::slice::from_ref(&x), &[0.0]).unwrap();
        let mut ev = SingleEval::new(&m);
        let mut g = [0.0; N_FEATURES];
        let q = ev.value_and_input_grad(&m, &stats, &x, &mut g);
        assert!((q - m.forward(&stats, &x).unwrap()).abs() < 1e-12);
        for j in 0..N_FEATURES {
            assert!((g[j] - b.inputs[[0, j]]).abs() < 1e-12, "{j}");
        }
    }
}
