//! Finite-difference harness for the fusion model's backward passes.

use palette_search::color::SrgbColor;
use palette_search::nn::{dot, FusionParameters, ModelConfig, Params};
use palette_search::palette::PaletteQuery;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
pub const SAMPLES_PER_TENSOR: usize = 12;
/// Denominator floor. Key biases have an exactly zero gradient (softmax is
/// shift invariant), so their central differences are pure round-off.
pub const SCALE_FLOOR: f64 = 1e-5;

pub fn config(d: usize, palette_positions: bool) -> ModelConfig {
    ModelConfig {
        d,
        heads: 4,
        depth: 2,
        ffn_mult: 2,
        text_dims: [5, 6, 7],
        visual_dims: [4, 5, 6],
        palette_positions,
        seed: 3,
    }
}

pub fn randn(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Initial weights with biases and gains moved off their constant defaults.
pub fn jittered(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> FusionParameters<f64> {
    let mut p = FusionParameters::<f64>::init(cfg).unwrap();
    p.visit_mut("", &mut |_, t| {
        for v in &mut t.data {
            *v += rng.random_range(-0.1..0.1);
        }
    });
    p
}

pub struct Probe {
    pub text: [Vec<f64>; 3],
    pub visual: [Vec<f64>; 3],
    pub palette: PaletteQuery,
    pub w_text: Vec<f64>,
    pub w_visual: Vec<f64>,
}

impl Probe {
    pub fn new(cfg: &ModelConfig, palette: PaletteQuery, rng: &mut ChaCha8Rng) -> Self {
        Self {
            text: cfg.text_dims.map(|n| randn(rng, n)),
            visual: cfg.visual_dims.map(|n| randn(rng, n)),
            palette,
            w_text: randn(rng, cfg.d),
            w_visual: randn(rng, cfg.d),
        }
    }

    /// Scalar objective touching both towers and their interaction.
    pub fn loss(&self, p: &FusionParameters<f64>) -> f64 {
        let t = p.fuse_text([&self.text[0], &self.text[1], &self.text[2]], &self.palette).unwrap();
        let v = p.fuse_visual([&self.visual[0], &self.visual[1], &self.visual[2]]).unwrap();
        dot(&t, &self.w_text) + dot(&v, &self.w_visual) + 2.0 * dot(&t, &v)
    }

    pub fn gradient(&self, p: &FusionParameters<f64>) -> FusionParameters<f64> {
        let (t, t_trace) = p.forward_text([&self.text[0], &self.text[1], &self.text[2]], &self.palette).unwrap();
        let (v, v_trace) = p.forward_visual([&self.visual[0], &self.visual[1], &self.visual[2]]).unwrap();
        let dt: Vec<f64> = self.w_text.iter().zip(&v).map(|(w, v)| w + 2.0 * v).collect();
        let dv: Vec<f64> = self.w_visual.iter().zip(&t).map(|(w, t)| w + 2.0 * t).collect();
        let mut grads = p.zeros_like();
        p.backward_text(&t_trace, &dt, &mut grads);
        p.backward_visual(&v_trace, &dv, &mut grads);
        grads
    }
}

/// Returns the worst relative error per tensor name.
pub fn check(p: &FusionParameters<f64>, probe: &Probe, rng: &mut ChaCha8Rng) -> Vec<(String, f64)> {
    let grads = probe.gradient(p);
    let analytic: Vec<(String, Vec<f64>)> = grads.named_tensors().into_iter().map(|(n, t)| (n, t.data.clone())).collect();
    let mut report = Vec::new();
    for (k, (name, g)) in analytic.iter().enumerate() {
        let mut worst = 0.0f64;
        let picks: Vec<usize> = if g.len() <= SAMPLES_PER_TENSOR {
            (0..g.len()).collect()
        } else {
            (0..SAMPLES_PER_TENSOR).map(|_| rng.random_range(0..g.len())).collect()
        };
        for idx in picks {
            let mut plus = p.clone();
            plus.tensors_mut()[k].data[idx] += STEP;
            let mut minus = p.clone();
            minus.tensors_mut()[k].data[idx] -= STEP;
            let numeric = (probe.loss(&plus) - probe.loss(&minus)) / (2.0 * STEP);
            let scale = g[idx].abs().max(numeric.abs()).max(SCALE_FLOOR);
            worst = worst.max((g[idx] - numeric).abs() / scale);
        }
        report.push((name.clone(), worst));
    }
    report
}

pub fn assert_all_within(report: &[(String, f64)]) {
    let bad: Vec<_> = report.iter().filter(|(_, e)| !(*e < TOLERANCE)).collect();
    assert!(bad.is_empty(), "gradient mismatch: {bad:?}");
}

pub fn colors() -> PaletteQuery {
    PaletteQuery::new(vec![SrgbColor::new(230, 40, 90), SrgbColor::new(20, 160, 200), SrgbColor::new(250, 240, 220)])
        .unwrap()
}
