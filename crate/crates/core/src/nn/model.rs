//! The fusion heads.
//!
//! Text side: the three description embeddings are projected to width `d`,
//! treated as a 3-token sequence, passed through a transformer stack, and then
//! attended to by the palette tokens through one cross-attention block. The
//! cross-attention output is mean-pooled over palette tokens and L2-normalized.
//!
//! Palette side: each color is converted to CIELAB, scaled to roughly
//! `[-1, 1]^3`, lifted to width `d` and passed through its own transformer
//! stack. An empty palette is replaced by a single learned null token that
//! skips the stack.
//!
//! Visual side: the three image embeddings are projected, passed through a
//! transformer stack, mean-pooled and L2-normalized.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::color::srgb_to_lab;
use crate::error::{Error, Result};
use crate::palette::{PaletteQuery, MAX_PALETTE_COLORS};

use super::layers::{BlockCache, CrossAttentionBlock, CrossCache, Linear, Params, TransformerBlock};
use super::tensor::{dot, l2_normalize, l2_normalize_backward, Mat, Scalar, Tensor};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Model width.
    pub d: usize,
    pub heads: usize,
    /// Blocks per transformer stack (text, palette and visual each).
    pub depth: usize,
    pub ffn_mult: usize,
    /// Raw input dims of `txt`, `mdd`, `nnp`.
    pub text_dims: [usize; 3],
    /// Raw input dims of `vs`, `va`, `vn`.
    pub visual_dims: [usize; 3],
    /// Learned per-slot palette position embeddings (off by default).
    #[serde(default)]
    pub palette_positions: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 1024,
            heads: 8,
            depth: 2,
            ffn_mult: 4,
            text_dims: [1024; 3],
            visual_dims: [1024; 3],
            palette_positions: false,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.heads == 0 || self.d % self.heads != 0 {
            return Err(Error::InvalidConfig(format!("width {} must be a positive multiple of heads {}", self.d, self.heads)));
        }
        if self.ffn_mult == 0 || self.text_dims.contains(&0) || self.visual_dims.contains(&0) {
            return Err(Error::InvalidConfig("dims and ffn_mult must be positive".into()));
        }
        Ok(())
    }
}

/// All trainable weights of the text, palette and visual heads.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParameters<F> {
    pub config: ModelConfig,
    pub text_proj: Vec<Linear<F>>,
    pub visual_proj: Vec<Linear<F>>,
    pub palette_lift: Linear<F>,
    pub palette_position: Option<Tensor<F>>,
    pub null_token: Tensor<F>,
    pub text_blocks: Vec<TransformerBlock<F>>,
    pub palette_blocks: Vec<TransformerBlock<F>>,
    pub cross: CrossAttentionBlock<F>,
    pub visual_blocks: Vec<TransformerBlock<F>>,
}

impl<F: Scalar> FusionParameters<F> {
    /// Seeded initialization: Gaussian weights with std `1/sqrt(fan_in)`, zero
    /// biases, unit norm gains, null token with std `1/sqrt(d)`.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.d;
        let text_proj = config.text_dims.iter().map(|&n| Linear::new(n, d, &mut rng)).collect();
        let visual_proj = config.visual_dims.iter().map(|&n| Linear::new(n, d, &mut rng)).collect();
        let palette_lift = Linear::new(3, d, &mut rng);
        let palette_position = config
            .palette_positions
            .then(|| Tensor::gaussian(&[MAX_PALETTE_COLORS, d], 1.0 / (d as f64).sqrt(), &mut rng));
        let null_token = Tensor::gaussian(&[d], 1.0 / (d as f64).sqrt(), &mut rng);
        let stack = |rng: &mut ChaCha8Rng| -> Vec<TransformerBlock<F>> {
            (0..config.depth).map(|_| TransformerBlock::new(d, config.heads, config.ffn_mult, rng)).collect()
        };
        let text_blocks = stack(&mut rng);
        let palette_blocks = stack(&mut rng);
        let visual_blocks = stack(&mut rng);
        let cross = CrossAttentionBlock::new(d, config.heads, &mut rng);
        Ok(Self {
            config: config.clone(),
            text_proj,
            visual_proj,
            palette_lift,
            palette_position,
            null_token,
            text_blocks,
            palette_blocks,
            cross,
            visual_blocks,
        })
    }

    /// All-zero parameters of the given shape.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let d = config.d;
        let stack = || -> Vec<TransformerBlock<F>> {
            (0..config.depth).map(|_| TransformerBlock::zeros(d, config.heads, config.ffn_mult)).collect()
        };
        Ok(Self {
            config: config.clone(),
            text_proj: config.text_dims.iter().map(|&n| Linear::zeros(n, d)).collect(),
            visual_proj: config.visual_dims.iter().map(|&n| Linear::zeros(n, d)).collect(),
            palette_lift: Linear::zeros(3, d),
            palette_position: config.palette_positions.then(|| Tensor::zeros(&[MAX_PALETTE_COLORS, d])),
            null_token: Tensor::zeros(&[d]),
            text_blocks: stack(),
            palette_blocks: stack(),
            cross: CrossAttentionBlock::zeros(d, config.heads),
            visual_blocks: stack(),
        })
    }

    /// Same structure with every tensor zeroed; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.config).expect("config already validated")
    }

    pub fn cast<G: Scalar>(&self) -> FusionParameters<G> {
        let c = &self.config;
        let mut out = FusionParameters::<G>::zeros(c).expect("config already validated");
        let mut src = Vec::new();
        self.visit("", &mut |_, t| src.push(t));
        let mut i = 0;
        out.visit_mut("", &mut |_, t| {
            *t = src[i].cast();
            i += 1;
        });
        out
    }

    pub fn num_parameters(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, t| n += t.len());
        n
    }

    pub fn named_tensors(&self) -> Vec<(String, &Tensor<F>)> {
        let mut v = Vec::new();
        self.visit("", &mut |name, t| v.push((name, t)));
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut v = Vec::new();
        self.visit_mut("", &mut |_, t| v.push(t));
        v
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        self.visit("", &mut |_, t| ok &= t.data.iter().all(|v| v.is_finite()));
        ok
    }

    /// Element-wise `self += other`.
    pub fn accumulate(&mut self, other: &Self) {
        let mut src = Vec::new();
        other.visit("", &mut |_, t| src.push(t));
        for (dst, s) in self.tensors_mut().into_iter().zip(src) {
            for (a, &b) in dst.data.iter_mut().zip(&s.data) {
                *a = *a + b;
            }
        }
    }
}

impl<F> Params<F> for FusionParameters<F> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor<F>)) {
        let p = |s: &str| if prefix.is_empty() { s.to_string() } else { format!("{prefix}.{s}") };
        self.text_proj.visit(&p("text_proj"), f);
        self.visual_proj.visit(&p("visual_proj"), f);
        self.palette_lift.visit(&p("palette_lift"), f);
        if let Some(t) = &self.palette_position {
            f(p("palette_position"), t);
        }
        f(p("null_token"), &self.null_token);
        self.text_blocks.visit(&p("text_blocks"), f);
        self.palette_blocks.visit(&p("palette_blocks"), f);
        self.cross.visit(&p("cross"), f);
        self.visual_blocks.visit(&p("visual_blocks"), f);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor<F>)) {
        let p = |s: &str| if prefix.is_empty() { s.to_string() } else { format!("{prefix}.{s}") };
        self.text_proj.visit_mut(&p("text_proj"), f);
        self.visual_proj.visit_mut(&p("visual_proj"), f);
        self.palette_lift.visit_mut(&p("palette_lift"), f);
        if let Some(t) = &mut self.palette_position {
            f(p("palette_position"), t);
        }
        f(p("null_token"), &mut self.null_token);
        self.text_blocks.visit_mut(&p("text_blocks"), f);
        self.palette_blocks.visit_mut(&p("palette_blocks"), f);
        self.cross.visit_mut(&p("cross"), f);
        self.visual_blocks.visit_mut(&p("visual_blocks"), f);
    }
}

/// Lab scaled to roughly [-1, 1]^3.
pub fn palette_features<F: Scalar>(palette: &PaletteQuery) -> Vec<[F; 3]> {
    palette
        .colors()
        .iter()
        .map(|&c| {
            let lab = srgb_to_lab(c);
            [F::lit(lab.l / 50.0 - 1.0), F::lit(lab.a / 128.0), F::lit(lab.b / 128.0)]
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PaletteTrace<F> {
    /// `None` for the empty palette (null token path).
    lifted_input: Option<Mat<F>>,
    blocks: Vec<BlockCache<F>>,
}

#[derive(Debug, Clone)]
pub struct TextTrace<F> {
    raw: [Vec<F>; 3],
    text_blocks: Vec<BlockCache<F>>,
    palette: PaletteTrace<F>,
    cross: CrossCache<F>,
    palette_tokens: usize,
    embedding: Vec<F>,
    norm: F,
}

#[derive(Debug, Clone)]
pub struct VisualTrace<F> {
    raw: [Vec<F>; 3],
    blocks: Vec<BlockCache<F>>,
    tokens: usize,
    embedding: Vec<F>,
    norm: F,
}

impl<F> TextTrace<F> {
    /// The unit-norm output of the forward pass.
    pub fn embedding(&self) -> &[F] {
        &self.embedding
    }
}

impl<F> VisualTrace<F> {
    /// The unit-norm output of the forward pass.
    pub fn embedding(&self) -> &[F] {
        &self.embedding
    }
}

fn run_stack<F: Scalar>(blocks: &[TransformerBlock<F>], x: Mat<F>) -> (Mat<F>, Vec<BlockCache<F>>) {
    let mut caches = Vec::with_capacity(blocks.len());
    let mut h = x;
    for b in blocks {
        let (next, cache) = b.forward(&h);
        caches.push(cache);
        h = next;
    }
    (h, caches)
}

fn back_stack<F: Scalar>(
    blocks: &[TransformerBlock<F>],
    caches: &[BlockCache<F>],
    dy: Mat<F>,
    grads: &mut [TransformerBlock<F>],
) -> Mat<F> {
    let mut d = dy;
    for i in (0..blocks.len()).rev() {
        d = blocks[i].backward(&caches[i], &d, &mut grads[i]);
    }
    d
}

fn check_dims<F>(inputs: &[&[F]; 3], dims: &[usize; 3], side: &str) -> Result<()> {
    for (x, &n) in inputs.iter().zip(dims) {
        if x.len() != n {
            return Err(Error::ShapeMismatch(format!("{side} input has dim {}, model expects {n}", x.len())));
        }
    }
    Ok(())
}

impl<F: Scalar> FusionParameters<F> {
    /// Palette tokens `[n, d]` (one null token for an empty palette).
    pub fn encode_palette(&self, palette: &PaletteQuery) -> (Mat<F>, PaletteTrace<F>) {
        let d = self.config.d;
        if palette.is_empty() {
            let tokens = Mat { rows: 1, cols: d, data: self.null_token.data.clone() };
            return (tokens, PaletteTrace { lifted_input: None, blocks: Vec::new() });
        }
        let feats = palette_features::<F>(palette);
        let input = Mat { rows: feats.len(), cols: 3, data: feats.iter().flatten().copied().collect() };
        let mut lifted = self.palette_lift.forward(&input);
        if let Some(pos) = &self.palette_position {
            for r in 0..lifted.rows {
                for c in 0..d {
                    lifted.data[r * d + c] = lifted.data[r * d + c] + pos.data[r * d + c];
                }
            }
        }
        let (tokens, blocks) = run_stack(&self.palette_blocks, lifted);
        (tokens, PaletteTrace { lifted_input: Some(input), blocks })
    }

    fn backward_palette(&self, trace: &PaletteTrace<F>, dtokens: Mat<F>, grads: &mut Self) {
        match &trace.lifted_input {
            None => {
                for (g, &v) in grads.null_token.data.iter_mut().zip(&dtokens.data) {
                    *g = *g + v;
                }
            }
            Some(input) => {
                let dlifted = back_stack(&self.palette_blocks, &trace.blocks, dtokens, &mut grads.palette_blocks);
                if let Some(gpos) = &mut grads.palette_position {
                    for (g, &v) in gpos.data.iter_mut().zip(&dlifted.data) {
                        *g = *g + v;
                    }
                }
                self.palette_lift.backward(input, &dlifted, &mut grads.palette_lift);
            }
        }
    }

    /// Language-palette embedding (unit norm) from the raw `txt`, `mdd`, `nnp`
    /// vectors and a palette.
    pub fn forward_text(&self, raw: [&[F]; 3], palette: &PaletteQuery) -> Result<(Vec<F>, TextTrace<F>)> {
        check_dims(&raw, &self.config.text_dims, "text")?;
        let tokens: Vec<Vec<F>> = raw.iter().zip(&self.text_proj).map(|(x, p)| p.forward_vec(x)).collect();
        let tokens = Mat::from_rows(&tokens.iter().map(|t| t.as_slice()).collect::<Vec<_>>());
        let (context, text_blocks) = run_stack(&self.text_blocks, tokens);
        let (queries, palette_trace) = self.encode_palette(palette);
        let (fused, cross) = self.cross.forward(&queries, &context);
        let pooled = fused.mean_rows();
        let (embedding, norm) = l2_normalize(&pooled);
        let trace = TextTrace {
            raw: [raw[0].to_vec(), raw[1].to_vec(), raw[2].to_vec()],
            text_blocks,
            palette: palette_trace,
            cross,
            palette_tokens: fused.rows,
            embedding: embedding.clone(),
            norm,
        };
        Ok((embedding, trace))
    }

    pub fn backward_text(&self, trace: &TextTrace<F>, d_embedding: &[F], grads: &mut Self) {
        let d = self.config.d;
        let dpooled = l2_normalize_backward(&trace.embedding, trace.norm, d_embedding);
        let n = F::from_usize(trace.palette_tokens).unwrap();
        let mut dfused = Mat::zeros(trace.palette_tokens, d);
        for r in 0..trace.palette_tokens {
            for c in 0..d {
                dfused.data[r * d + c] = dpooled[c] / n;
            }
        }
        let (dqueries, dcontext) = self.cross.backward(&trace.cross, &dfused, &mut grads.cross);
        self.backward_palette(&trace.palette, dqueries, grads);
        let dtokens = back_stack(&self.text_blocks, &trace.text_blocks, dcontext, &mut grads.text_blocks);
        for (k, proj) in self.text_proj.iter().enumerate() {
            let x = Mat { rows: 1, cols: trace.raw[k].len(), data: trace.raw[k].clone() };
            let dy = Mat { rows: 1, cols: d, data: dtokens.row(k).to_vec() };
            proj.backward(&x, &dy, &mut grads.text_proj[k]);
        }
    }

    /// Visual embedding (unit norm) from the raw `vs`, `va`, `vn` vectors.
    pub fn forward_visual(&self, raw: [&[F]; 3]) -> Result<(Vec<F>, VisualTrace<F>)> {
        check_dims(&raw, &self.config.visual_dims, "visual")?;
        let tokens: Vec<Vec<F>> = raw.iter().zip(&self.visual_proj).map(|(x, p)| p.forward_vec(x)).collect();
        let tokens = Mat::from_rows(&tokens.iter().map(|t| t.as_slice()).collect::<Vec<_>>());
        let (out, blocks) = run_stack(&self.visual_blocks, tokens);
        let pooled = out.mean_rows();
        let (embedding, norm) = l2_normalize(&pooled);
        let trace = VisualTrace {
            raw: [raw[0].to_vec(), raw[1].to_vec(), raw[2].to_vec()],
            blocks,
            tokens: out.rows,
            embedding: embedding.clone(),
            norm,
        };
        Ok((embedding, trace))
    }

    pub fn backward_visual(&self, trace: &VisualTrace<F>, d_embedding: &[F], grads: &mut Self) {
        let d = self.config.d;
        let dpooled = l2_normalize_backward(&trace.embedding, trace.norm, d_embedding);
        let n = F::from_usize(trace.tokens).unwrap();
        let mut dout = Mat::zeros(trace.tokens, d);
        for r in 0..trace.tokens {
            for c in 0..d {
                dout.data[r * d + c] = dpooled[c] / n;
            }
        }
        let dtokens = back_stack(&self.visual_blocks, &trace.blocks, dout, &mut grads.visual_blocks);
        for (k, proj) in self.visual_proj.iter().enumerate() {
            let x = Mat { rows: 1, cols: trace.raw[k].len(), data: trace.raw[k].clone() };
            let dy = Mat { rows: 1, cols: d, data: dtokens.row(k).to_vec() };
            proj.backward(&x, &dy, &mut grads.visual_proj[k]);
        }
    }

    pub fn fuse_text(&self, raw: [&[F]; 3], palette: &PaletteQuery) -> Result<Vec<F>> {
        self.forward_text(raw, palette).map(|(e, _)| e)
    }

    pub fn fuse_visual(&self, raw: [&[F]; 3]) -> Result<Vec<F>> {
        self.forward_visual(raw).map(|(e, _)| e)
    }
}

/// Cosine similarity of two unit vectors.
pub fn similarity<F: Scalar>(text: &[F], visual: &[F]) -> F {
    dot(text, visual)
}

/// `S[i][j] = similarity(text[i], visual[j])`, row-major.
pub fn similarity_matrix<F: Scalar>(text: &[Vec<F>], visual: &[Vec<F>]) -> Vec<F> {
    let mut s = Vec::with_capacity(text.len() * visual.len());
    for t in text {
        for v in visual {
            s.push(similarity(t, v));
        }
    }
    s
}
