//! Transformer building blocks with explicit backward passes.
//!
//! Every layer exposes `forward`, which returns its output together with the
//! activations the backward pass needs, and `backward`, which accumulates
//! parameter gradients into a structurally identical gradient object.

use rand::Rng;

use super::tensor::{Mat, Scalar, Tensor};

const LN_EPS: f64 = 1e-5;

/// Walks trainable tensors in a fixed order with dotted names.
pub trait Params<F> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor<F>));
    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor<F>));
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear<F> {
    /// `[out, in]`
    pub weight: Tensor<F>,
    /// `[out]`
    pub bias: Tensor<F>,
}

impl<F: Scalar> Linear<F> {
    pub fn new<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        let std = 1.0 / (input as f64).sqrt();
        Self { weight: Tensor::gaussian(&[output, input], std, rng), bias: Tensor::zeros(&[output]) }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self { weight: Tensor::zeros(&[output, input]), bias: Tensor::zeros(&[output]) }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn forward_vec(&self, x: &[F]) -> Vec<F> {
        let (out, inp) = (self.output_dim(), self.input_dim());
        debug_assert_eq!(x.len(), inp);
        (0..out)
            .map(|o| {
                let w = &self.weight.data[o * inp..(o + 1) * inp];
                self.bias.data[o] + w.iter().zip(x).map(|(&a, &b)| a * b).sum::<F>()
            })
            .collect()
    }

    pub fn forward(&self, x: &Mat<F>) -> Mat<F> {
        let mut y = Mat::zeros(x.rows, self.output_dim());
        for r in 0..x.rows {
            y.row_mut(r).copy_from_slice(&self.forward_vec(x.row(r)));
        }
        y
    }

    /// Accumulates into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &Mat<F>, dy: &Mat<F>, grad: &mut Linear<F>) -> Mat<F> {
        let (out, inp) = (self.output_dim(), self.input_dim());
        let mut dx = Mat::zeros(x.rows, inp);
        for r in 0..x.rows {
            let xr = x.row(r);
            let dyr = dy.row(r);
            for o in 0..out {
                let g = dyr[o];
                if g == F::zero() {
                    continue;
                }
                grad.bias.data[o] = grad.bias.data[o] + g;
                let w = &self.weight.data[o * inp..(o + 1) * inp];
                let gw = &mut grad.weight.data[o * inp..(o + 1) * inp];
                let dxr = &mut dx.data[r * inp..(r + 1) * inp];
                for i in 0..inp {
                    gw[i] = gw[i] + g * xr[i];
                    dxr[i] = dxr[i] + g * w[i];
                }
            }
        }
        dx
    }
}

impl<F> Params<F> for Linear<F> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor<F>)) {
        f(join(prefix, "weight"), &self.weight);
        f(join(prefix, "bias"), &self.bias);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor<F>)) {
        f(join(prefix, "weight"), &mut self.weight);
        f(join(prefix, "bias"), &mut self.bias);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm<F> {
    pub gain: Tensor<F>,
    pub bias: Tensor<F>,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache<F> {
    normalized: Mat<F>,
    inv_std: Vec<F>,
}

impl<F: Scalar> LayerNorm<F> {
    pub fn new(dim: usize) -> Self {
        Self { gain: Tensor::filled(&[dim], F::one()), bias: Tensor::zeros(&[dim]) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { gain: Tensor::zeros(&[dim]), bias: Tensor::zeros(&[dim]) }
    }

    pub fn forward(&self, x: &Mat<F>) -> (Mat<F>, LayerNormCache<F>) {
        let n = F::from_usize(x.cols).unwrap();
        let mut y = Mat::zeros(x.rows, x.cols);
        let mut normalized = Mat::zeros(x.rows, x.cols);
        let mut inv_std = Vec::with_capacity(x.rows);
        for r in 0..x.rows {
            let row = x.row(r);
            let mean = row.iter().copied().sum::<F>() / n;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / n;
            let inv = F::one() / (var + F::lit(LN_EPS)).sqrt();
            inv_std.push(inv);
            for c in 0..x.cols {
                let xh = (row[c] - mean) * inv;
                normalized.data[r * x.cols + c] = xh;
                y.data[r * x.cols + c] = self.gain.data[c] * xh + self.bias.data[c];
            }
        }
        (y, LayerNormCache { normalized, inv_std })
    }

    pub fn backward(&self, cache: &LayerNormCache<F>, dy: &Mat<F>, grad: &mut LayerNorm<F>) -> Mat<F> {
        let cols = dy.cols;
        let n = F::from_usize(cols).unwrap();
        let mut dx = Mat::zeros(dy.rows, cols);
        for r in 0..dy.rows {
            let xh = cache.normalized.row(r);
            let dyr = dy.row(r);
            let mut g = vec![F::zero(); cols];
            for c in 0..cols {
                grad.gain.data[c] = grad.gain.data[c] + dyr[c] * xh[c];
                grad.bias.data[c] = grad.bias.data[c] + dyr[c];
                g[c] = dyr[c] * self.gain.data[c];
            }
            let mean_g = g.iter().copied().sum::<F>() / n;
            let mean_gx = g.iter().zip(xh).map(|(&a, &b)| a * b).sum::<F>() / n;
            let inv = cache.inv_std[r];
            for c in 0..cols {
                dx.data[r * cols + c] = inv * (g[c] - mean_g - xh[c] * mean_gx);
            }
        }
        dx
    }
}

impl<F> Params<F> for LayerNorm<F> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor<F>)) {
        f(join(prefix, "gain"), &self.gain);
        f(join(prefix, "bias"), &self.bias);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor<F>)) {
        f(join(prefix, "gain"), &mut self.gain);
        f(join(prefix, "bias"), &mut self.bias);
    }
}

/// Multi-head scaled dot-product attention with separate query and key/value
/// inputs (self-attention passes the same matrix twice).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadAttention<F> {
    pub heads: usize,
    pub query: Linear<F>,
    pub key: Linear<F>,
    pub value: Linear<F>,
    pub output: Linear<F>,
}

#[derive(Debug, Clone)]
pub struct AttentionCache<F> {
    q_in: Mat<F>,
    kv_in: Mat<F>,
    q: Mat<F>,
    k: Mat<F>,
    v: Mat<F>,
    /// One `[nq, nk]` probability matrix per head.
    probs: Vec<Mat<F>>,
    context: Mat<F>,
}

impl<F: Scalar> MultiHeadAttention<F> {
    pub fn new<R: Rng>(dim: usize, heads: usize, rng: &mut R) -> Self {
        assert!(heads > 0 && dim % heads == 0, "dim {dim} not divisible by {heads} heads");
        Self {
            heads,
            query: Linear::new(dim, dim, rng),
            key: Linear::new(dim, dim, rng),
            value: Linear::new(dim, dim, rng),
            output: Linear::new(dim, dim, rng),
        }
    }

    pub fn zeros(dim: usize, heads: usize) -> Self {
        Self {
            heads,
            query: Linear::zeros(dim, dim),
            key: Linear::zeros(dim, dim),
            value: Linear::zeros(dim, dim),
            output: Linear::zeros(dim, dim),
        }
    }

    pub fn forward(&self, q_in: &Mat<F>, kv_in: &Mat<F>) -> (Mat<F>, AttentionCache<F>) {
        let q = self.query.forward(q_in);
        let k = self.key.forward(kv_in);
        let v = self.value.forward(kv_in);
        let dim = q.cols;
        let dh = dim / self.heads;
        let scale = F::one() / F::from_usize(dh).unwrap().sqrt();
        let (nq, nk) = (q.rows, k.rows);

        let mut context = Mat::zeros(nq, dim);
        let mut probs = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let cols = h * dh..(h + 1) * dh;
            let mut p = Mat::zeros(nq, nk);
            for i in 0..nq {
                let qi = &q.row(i)[cols.clone()];
                let mut max = F::neg_infinity();
                for j in 0..nk {
                    let s = qi.iter().zip(&k.row(j)[cols.clone()]).map(|(&a, &b)| a * b).sum::<F>() * scale;
                    p.data[i * nk + j] = s;
                    max = max.max(s);
                }
                let mut total = F::zero();
                for j in 0..nk {
                    let e = (p.data[i * nk + j] - max).exp();
                    p.data[i * nk + j] = e;
                    total = total + e;
                }
                for j in 0..nk {
                    p.data[i * nk + j] = p.data[i * nk + j] / total;
                }
                for j in 0..nk {
                    let pij = p.data[i * nk + j];
                    let vj = &v.row(j)[cols.clone()];
                    let ci = &mut context.data[i * dim + h * dh..i * dim + (h + 1) * dh];
                    for c in 0..dh {
                        ci[c] = ci[c] + pij * vj[c];
                    }
                }
            }
            probs.push(p);
        }
        let out = self.output.forward(&context);
        let cache = AttentionCache { q_in: q_in.clone(), kv_in: kv_in.clone(), q, k, v, probs, context };
        (out, cache)
    }

    /// Returns `(dL/dq_in, dL/dkv_in)`.
    pub fn backward(&self, cache: &AttentionCache<F>, dout: &Mat<F>, grad: &mut Self) -> (Mat<F>, Mat<F>) {
        let dcontext = self.output.backward(&cache.context, dout, &mut grad.output);
        let (q, k, v) = (&cache.q, &cache.k, &cache.v);
        let dim = q.cols;
        let dh = dim / self.heads;
        let scale = F::one() / F::from_usize(dh).unwrap().sqrt();
        let (nq, nk) = (q.rows, k.rows);

        let mut dq = Mat::zeros(nq, dim);
        let mut dk = Mat::zeros(nk, dim);
        let mut dv = Mat::zeros(nk, dim);
        for (h, p) in cache.probs.iter().enumerate() {
            let off = h * dh;
            for i in 0..nq {
                let dci = &dcontext.row(i)[off..off + dh];
                let mut dp = vec![F::zero(); nk];
                for j in 0..nk {
                    let vj = &v.row(j)[off..off + dh];
                    dp[j] = dci.iter().zip(vj).map(|(&a, &b)| a * b).sum();
                    let pij = p.at(i, j);
                    for c in 0..dh {
                        dv.data[j * dim + off + c] = dv.data[j * dim + off + c] + pij * dci[c];
                    }
                }
                let weighted: F = (0..nk).map(|j| p.at(i, j) * dp[j]).sum();
                for j in 0..nk {
                    let ds = p.at(i, j) * (dp[j] - weighted) * scale;
                    if ds == F::zero() {
                        continue;
                    }
                    for c in 0..dh {
                        dq.data[i * dim + off + c] = dq.data[i * dim + off + c] + ds * k.data[j * dim + off + c];
                        dk.data[j * dim + off + c] = dk.data[j * dim + off + c] + ds * q.data[i * dim + off + c];
                    }
                }
            }
        }
        let dq_in = self.query.backward(&cache.q_in, &dq, &mut grad.query);
        let mut dkv_in = self.key.backward(&cache.kv_in, &dk, &mut grad.key);
        dkv_in.add_assign(&self.value.backward(&cache.kv_in, &dv, &mut grad.value));
        (dq_in, dkv_in)
    }
}

impl<F> Params<F> for MultiHeadAttention<F> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor<F>)) {
        self.query.visit(&join(prefix, "query"), f);
        self.key.visit(&join(prefix, "key"), f);
        self.value.visit(&join(prefix, "value"), f);
        self.output.visit(&join(prefix, "output"), f);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor<F>)) {
        self.query.visit_mut(&join(prefix, "query"), f);
        self.key.visit_mut(&join(prefix, "key"), f);
        self.value.visit_mut(&join(prefix, "value"), f);
        self.output.visit_mut(&join(prefix, "output"), f);
    }
}

// tanh approximation of GELU
fn gelu<F: Scalar>(x: F) -> F {
    let k = F::lit((2.0 / std::f64::consts::PI).sqrt());
    let inner = k * (x + F::lit(0.044715) * x * x * x);
    F::lit(0.5) * x * (F::one() + inner.tanh())
}

fn gelu_grad<F: Scalar>(x: F) -> F {
    let k = F::lit((2.0 / std::f64::consts::PI).sqrt());
    let inner = k * (x + F::lit(0.044715) * x * x * x);
    let t = inner.tanh();
    let dinner = k * (F::one() + F::lit(3.0 * 0.044715) * x * x);
    F::lit(0.5) * (F::one() + t) + F::lit(0.5) * x * (F::one() - t * t) * dinner
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward<F> {
    pub expand: Linear<F>,
    pub contract: Linear<F>,
}

#[derive(Debug, Clone)]
pub struct FeedForwardCache<F> {
    input: Mat<F>,
    pre: Mat<F>,
    act: Mat<F>,
}

impl<F: Scalar> FeedForward<F> {
    pub fn new<R: Rng>(dim: usize, hidden: usize, rng: &mut R) -> Self {
        Self { expand: Linear::new(dim, hidden, rng), contract: Linear::new(hidden, dim, rng) }
    }

    pub fn zeros(dim: usize, hidden: usize) -> Self {
        Self { expand: Linear::zeros(dim, hidden), contract: Linear::zeros(hidden, dim) }
    }

    pub fn forward(&self, x: &Mat<F>) -> (Mat<F>, FeedForwardCache<F>) {
        let pre = self.expand.forward(x);
        let act = Mat { rows: pre.rows, cols: pre.cols, data: pre.data.iter().map(|&v| gelu(v)).collect() };
        let out = self.contract.forward(&act);
        (out, FeedForwardCache { input: x.clone(), pre, act })
    }

    pub fn backward(&self, cache: &FeedForwardCache<F>, dy: &Mat<F>, grad: &mut Self) -> Mat<F> {
        let mut dact = self.contract.backward(&cache.act, dy, &mut grad.contract);
        for (d, &p) in dact.data.iter_mut().zip(&cache.pre.data) {
            *d = *d * gelu_grad(p);
        }
        self.expand.backward(&cache.input, &dact, &mut grad.expand)
    }
}

impl<F> Params<F> for FeedForward<F> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor<F>)) {
        self.expand.visit(&join(prefix, "expand"), f);
        self.contract.visit(&join(prefix, "contract"), f);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor<F>)) {
        self.expand.visit_mut(&join(prefix, "expand"), f);
        self.contract.visit_mut(&join(prefix, "contract"), f);
    }
}

/// Pre-norm encoder block: `x + Attn(LN(x))`, then `x + FFN(LN(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerBlock<F> {
    pub attn_norm: LayerNorm<F>,
    pub attn: MultiHeadAttention<F>,
    pub ffn_norm: LayerNorm<F>,
    pub ffn: FeedForward<F>,
}

#[derive(Debug, Clone)]
pub struct BlockCache<F> {
    attn_norm: LayerNormCache<F>,
    attn: AttentionCache<F>,
    ffn_norm: LayerNormCache<F>,
    ffn: FeedForwardCache<F>,
}

impl<F: Scalar> TransformerBlock<F> {
    pub fn new<R: Rng>(dim: usize, heads: usize, ffn_mult: usize, rng: &mut R) -> Self {
        Self {
            attn_norm: LayerNorm::new(dim),
            attn: MultiHeadAttention::new(dim, heads, rng),
            ffn_norm: LayerNorm::new(dim),
            ffn: FeedForward::new(dim, dim * ffn_mult, rng),
        }
    }

    pub fn zeros(dim: usize, heads: usize, ffn_mult: usize) -> Self {
        Self {
            attn_norm: LayerNorm::zeros(dim),
            attn: MultiHeadAttention::zeros(dim, heads),
            ffn_norm: LayerNorm::zeros(dim),
            ffn: FeedForward::zeros(dim, dim * ffn_mult),
        }
    }

    pub fn forward(&self, x: &Mat<F>) -> (Mat<F>, BlockCache<F>) {
        let (h, attn_norm) = self.attn_norm.forward(x);
        let (a, attn) = self.attn.forward(&h, &h);
        let mid = x.add(&a);
        let (h2, ffn_norm) = self.ffn_norm.forward(&mid);
        let (f, ffn) = self.ffn.forward(&h2);
        (mid.add(&f), BlockCache { attn_norm, attn, ffn_norm, ffn })
    }

    pub fn backward(&self, cache: &BlockCache<F>, dy: &Mat<F>, grad: &mut Self) -> Mat<F> {
        let dh2 = self.ffn.backward(&cache.ffn, dy, &mut grad.ffn);
        let mut dmid = dy.clone();
        dmid.add_assign(&self.ffn_norm.backward(&cache.ffn_norm, &dh2, &mut grad.ffn_norm));
        let (dq, dkv) = self.attn.backward(&cache.attn, &dmid, &mut grad.attn);
        let dh = dq.add(&dkv);
        let mut dx = dmid;
        dx.add_assign(&self.attn_norm.backward(&cache.attn_norm, &dh, &mut grad.attn_norm));
        dx
    }
}

impl<F> Params<F> for TransformerBlock<F> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor<F>)) {
        self.attn_norm.visit(&join(prefix, "attn_norm"), f);
        self.attn.visit(&join(prefix, "attn"), f);
        self.ffn_norm.visit(&join(prefix, "ffn_norm"), f);
        self.ffn.visit(&join(prefix, "ffn"), f);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor<F>)) {
        self.attn_norm.visit_mut(&join(prefix, "attn_norm"), f);
        self.attn.visit_mut(&join(prefix, "attn"), f);
        self.ffn_norm.visit_mut(&join(prefix, "ffn_norm"), f);
        self.ffn.visit_mut(&join(prefix, "ffn"), f);
    }
}

/// `q + Attn(LN_q(q), LN_kv(kv))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossAttentionBlock<F> {
    pub query_norm: LayerNorm<F>,
    pub context_norm: LayerNorm<F>,
    pub attn: MultiHeadAttention<F>,
}

#[derive(Debug, Clone)]
pub struct CrossCache<F> {
    query_norm: LayerNormCache<F>,
    context_norm: LayerNormCache<F>,
    attn: AttentionCache<F>,
}

impl<F: Scalar> CrossAttentionBlock<F> {
    pub fn new<R: Rng>(dim: usize, heads: usize, rng: &mut R) -> Self {
        Self {
            query_norm: LayerNorm::new(dim),
            context_norm: LayerNorm::new(dim),
            attn: MultiHeadAttention::new(dim, heads, rng),
        }
    }

    pub fn zeros(dim: usize, heads: usize) -> Self {
        Self {
            query_norm: LayerNorm::zeros(dim),
            context_norm: LayerNorm::zeros(dim),
            attn: MultiHeadAttention::zeros(dim, heads),
        }
    }

    pub fn forward(&self, queries: &Mat<F>, context: &Mat<F>) -> (Mat<F>, CrossCache<F>) {
        let (qn, query_norm) = self.query_norm.forward(queries);
        let (cn, context_norm) = self.context_norm.forward(context);
        let (a, attn) = self.attn.forward(&qn, &cn);
        (queries.add(&a), CrossCache { query_norm, context_norm, attn })
    }

    /// Returns `(dL/dqueries, dL/dcontext)`.
    pub fn backward(&self, cache: &CrossCache<F>, dy: &Mat<F>, grad: &mut Self) -> (Mat<F>, Mat<F>) {
        let (dqn, dcn) = self.attn.backward(&cache.attn, dy, &mut grad.attn);
        let mut dq = dy.clone();
        dq.add_assign(&self.query_norm.backward(&cache.query_norm, &dqn, &mut grad.query_norm));
        let dc = self.context_norm.backward(&cache.context_norm, &dcn, &mut grad.context_norm);
        (dq, dc)
    }
}

impl<F> Params<F> for CrossAttentionBlock<F> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor<F>)) {
        self.query_norm.visit(&join(prefix, "query_norm"), f);
        self.context_norm.visit(&join(prefix, "context_norm"), f);
        self.attn.visit(&join(prefix, "attn"), f);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor<F>)) {
        self.query_norm.visit_mut(&join(prefix, "query_norm"), f);
        self.context_norm.visit_mut(&join(prefix, "context_norm"), f);
        self.attn.visit_mut(&join(prefix, "attn"), f);
    }
}

impl<F, T: Params<F>> Params<F> for Vec<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor<F>)) {
        for (i, item) in self.iter().enumerate() {
            item.visit(&join(prefix, &i.to_string()), f);
        }
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor<F>)) {
        for (i, item) in self.iter_mut().enumerate() {
            item.visit_mut(&join(prefix, &i.to_string()), f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gelu_derivative_matches_difference() {
        for &x in &[-3.0f64, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn attention_rows_are_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let attn = MultiHeadAttention::<f64>::new(8, 2, &mut rng);
        let x = Mat { rows: 3, cols: 8, data: (0..24).map(|i| (i as f64 * 0.37).sin()).collect() };
        let (_, cache) = attn.forward(&x, &x);
        for p in &cache.probs {
            for i in 0..p.rows {
                let s: f64 = p.row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn layer_norm_output_is_standardized() {
        let ln = LayerNorm::<f64>::new(4);
        let x = Mat { rows: 1, cols: 4, data: vec![1.0, 2.0, 3.0, 10.0] };
        let (y, _) = ln.forward(&x);
        let mean: f64 = y.data.iter().sum::<f64>() / 4.0;
        let var: f64 = y.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-4);
    }
}
