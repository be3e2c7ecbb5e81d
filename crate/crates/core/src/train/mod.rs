//! Training with the relaxed contrastive loss, validation-based model
//! selection, and ranking metrics.

mod adam;
mod eval;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crc::{build_z, candidate_lists, crc_loss, BatchPair, CrcTerms, CrcWeights, UnlabeledPositiveSet};
use crate::dataset::{Channel, DatasetBundle, Split};
use crate::error::{Error, Result};
use crate::nn::{FusionParameters, ModelConfig, TextTrace, VisualTrace};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use eval::{
    evaluate, image_embedding, image_embeddings, mrr, rank, recall_at_k, score_corpus, split_corpus, text_embedding,
    EvalReport,
};

/// Samples per gradient-accumulation chunk. Chunks are reduced in a fixed
/// order so results do not depend on the thread count.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossMode {
    /// Relaxed contrastive loss with the stored confidences.
    Crc,
    /// Symmetric InfoNCE over the batch; Z is ignored.
    InfonceAblation,
    /// Relaxed contrastive loss with every confidence in Z set to a constant.
    CrcFixedC,
}

impl LossMode {
    pub fn name(self) -> &'static str {
        match self {
            LossMode::Crc => "crc",
            LossMode::InfonceAblation => "infonce-ablation",
            LossMode::CrcFixedC => "crc-fixed-c",
        }
    }
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [LossMode::Crc, LossMode::InfonceAblation, LossMode::CrcFixedC]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown loss mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: AdamConfig,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub weights: CrcWeights,
    pub loss: LossMode,
    /// Confidence used by [`LossMode::CrcFixedC`].
    pub fixed_c: f64,
    /// Softmax temperature of [`LossMode::InfonceAblation`].
    pub temperature: f64,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: AdamConfig::default(),
            batch: 64,
            epochs: 40,
            seed: 0,
            weights: CrcWeights::default(),
            loss: LossMode::Crc,
            fixed_c: 0.7,
            temperature: 0.05,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        self.weights.validate()?;
        self.model.validate()?;
        if self.batch == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig("batch and epochs must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.fixed_c) || !(self.temperature > 0.0) {
            return Err(Error::InvalidConfig("fixed_c must be in [0, 1] and temperature positive".into()));
        }
        Ok(())
    }
}

/// Model config whose input dims match the bundle's channels.
pub fn model_config_for(bundle: &DatasetBundle, base: &ModelConfig) -> Result<ModelConfig> {
    let dim = |ch: Channel| bundle.dim(ch).ok_or(Error::Empty("embedding channel"));
    Ok(ModelConfig {
        text_dims: [dim(Channel::Txt)?, dim(Channel::Mdd)?, dim(Channel::Nnp)?],
        visual_dims: [dim(Channel::Vs)?, dim(Channel::Va)?, dim(Channel::Vn)?],
        ..base.clone()
    })
}

/// Z from the bundle's confidences. With prefilter channels only the top
/// `n_cand` candidates per query are eligible; without them every scored pair is.
pub fn prepare_z(bundle: &DatasetBundle, n_cand: usize, theta: f64) -> Result<UnlabeledPositiveSet> {
    let candidates = if bundle.try_matrix(Channel::PrefilterTxt).is_some() {
        candidate_lists(bundle, n_cand)?
    } else {
        log::warn!("bundle has no prefilter channels; every scored pair is a candidate");
        let mut all: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for r in &bundle.confidences {
            all.entry(r.i).or_default().push(r.j);
        }
        all
    };
    build_z(&bundle.confidences, &candidates, theta)
}

/// Symmetric InfoNCE over a `b x b` similarity matrix (diagonal positives).
pub fn infonce_loss(s: &[f64], b: usize, temperature: f64) -> Result<(f64, Vec<f64>)> {
    if s.len() != b * b {
        return Err(Error::ShapeMismatch(format!("similarity matrix has {} entries, expected {b}x{b}", s.len())));
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; b * b];
    let at = |i: usize, j: usize, by_row: bool| if by_row { i * b + j } else { j * b + i };
    for by_row in [true, false] {
        for i in 0..b {
            let logits: Vec<f64> = (0..b).map(|j| s[at(i, j, by_row)] / temperature).collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = logits.iter().map(|l| (l - max).exp()).sum();
            loss += 0.5 * (sum.ln() + max - logits[i]);
            for j in 0..b {
                let p = (logits[j] - max).exp() / sum;
                let target = if i == j { 1.0 } else { 0.0 };
                grad[at(i, j, by_row)] += 0.5 * (p - target) / temperature;
            }
        }
    }
    Ok((loss, grad))
}

/// Loss and parameter gradient for one batch of records. Each record's query
/// sits on row `a` and its target image on column `a`.
pub struct BatchResult {
    pub loss: f64,
    pub terms: CrcTerms,
    pub grads: FusionParameters<f32>,
}

fn batch_loss(
    params: &FusionParameters<f32>,
    bundle: &DatasetBundle,
    records: &[usize],
    z: &UnlabeledPositiveSet,
    config: &TrainConfig,
) -> Result<(f64, CrcTerms, Vec<f64>, Vec<(TextTrace<f32>, VisualTrace<f32>)>)> {
    let images: Vec<usize> = records.iter().map(|&i| bundle.manifest[i].target_image_index).collect();
    let traces: Vec<(TextTrace<f32>, VisualTrace<f32>)> = records
        .par_iter()
        .zip(&images)
        .map(|(&i, &j)| {
            let text = [Channel::Txt, Channel::Mdd, Channel::Nnp].map(|ch| bundle.matrix(ch).row(i));
            let visual = Channel::VISUAL.map(|ch| bundle.matrix(ch).row(j));
            let (_, t) = params.forward_text(text, &bundle.manifest[i].palette)?;
            let (_, v) = params.forward_visual(visual)?;
            Ok((t, v))
        })
        .collect::<Result<_>>()?;
    let b = records.len();
    let mut s = vec![0.0f64; b * b];
    for a in 0..b {
        for c in 0..b {
            s[a * b + c] = traces[a].0.embedding().iter().zip(traces[c].1.embedding()).map(|(&x, &y)| x as f64 * y as f64).sum();
        }
    }
    let pairs: Vec<BatchPair> = match config.loss {
        LossMode::Crc => z.in_batch(records, &images),
        LossMode::CrcFixedC => z.with_fixed_confidence(config.fixed_c).in_batch(records, &images),
        LossMode::InfonceAblation => Vec::new(),
    };
    let (loss, terms, ds) = match config.loss {
        LossMode::InfonceAblation => {
            let (l, g) = infonce_loss(&s, b, config.temperature)?;
            (l, CrcTerms::default(), g)
        }
        _ => {
            // rounding can push a cosine of unit vectors a hair past 1
            let clipped: Vec<f64> = s.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
            let (t, g) = crc_loss(&clipped, b, &pairs, config.weights)?;
            (t.total(), t, g)
        }
    };
    Ok((loss, terms, ds, traces))
}

/// Forward, loss and backward for one batch.
pub fn batch_gradient(
    params: &FusionParameters<f32>,
    bundle: &DatasetBundle,
    records: &[usize],
    z: &UnlabeledPositiveSet,
    config: &TrainConfig,
) -> Result<BatchResult> {
    let (loss, terms, ds, traces) = batch_loss(params, bundle, records, z, config)?;
    let b = records.len();
    let d = params.config.d;
    let partials: Vec<FusionParameters<f32>> = (0..b)
        .collect::<Vec<_>>()
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut g = params.zeros_like();
            for &a in chunk {
                let mut dt = vec![0.0f64; d];
                let mut dv = vec![0.0f64; d];
                for c in 0..b {
                    let (row, col) = (ds[a * b + c], ds[c * b + a]);
                    for k in 0..d {
                        dt[k] += row * traces[c].1.embedding()[k] as f64;
                        dv[k] += col * traces[c].0.embedding()[k] as f64;
                    }
                }
                let dt: Vec<f32> = dt.into_iter().map(|v| v as f32).collect();
                let dv: Vec<f32> = dv.into_iter().map(|v| v as f32).collect();
                params.backward_text(&traces[a].0, &dt, &mut g);
                params.backward_visual(&traces[a].1, &dv, &mut g);
            }
            g
        })
        .collect();
    let mut grads = params.zeros_like();
    for p in &partials {
        grads.accumulate(p);
    }
    Ok(BatchResult { loss, terms, grads })
}

/// Mean batch loss over a split, batched in manifest order without updates.
pub fn split_loss(
    params: &FusionParameters<f32>,
    bundle: &DatasetBundle,
    split: Split,
    z: &UnlabeledPositiveSet,
    config: &TrainConfig,
) -> Result<f64> {
    let records = bundle.split_indices(split);
    if records.is_empty() {
        return Err(Error::Empty("split"));
    }
    let mut total = 0.0;
    let mut batches = 0;
    for chunk in records.chunks(config.batch) {
        total += batch_loss(params, bundle, chunk, z, config)?.0;
        batches += 1;
    }
    Ok(total / batches as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub steps: usize,
    /// Mean batch loss over the epoch.
    pub train_loss: f64,
    pub positive: f64,
    pub unlabeled: f64,
    pub negative: f64,
    pub val_recall1: f64,
    pub val_mrr: f64,
    pub best: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: FusionParameters<f32>,
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
}

/// Trains from a seeded initialization and keeps the epoch with the highest
/// validation recall@1 (earliest on ties).
pub fn train(bundle: &DatasetBundle, z: &UnlabeledPositiveSet, config: &TrainConfig) -> Result<TrainOutcome> {
    let init = FusionParameters::<f32>::init(&model_config_for(bundle, &config.model)?)?;
    train_from(init, bundle, z, config, |_| {})
}

/// [`train`] from given parameters, calling `on_epoch` after each epoch.
pub fn train_from(
    mut params: FusionParameters<f32>,
    bundle: &DatasetBundle,
    z: &UnlabeledPositiveSet,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut order = bundle.split_indices(Split::Train);
    if order.is_empty() {
        return Err(Error::Empty("train split"));
    }
    if bundle.split_indices(Split::Val).is_empty() {
        return Err(Error::Empty("validation split"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = AdamState::new();
    let mut best: Option<(f64, usize, FusionParameters<f32>)> = None;
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut sums = (0.0, CrcTerms::default());
        let mut steps = 0;
        for batch in order.chunks(config.batch) {
            let r = batch_gradient(&params, bundle, batch, z, config)?;
            adam_step(&mut params, &r.grads, &mut state, &config.optimizer)?;
            sums.0 += r.loss;
            sums.1.positive += r.terms.positive;
            sums.1.unlabeled += r.terms.unlabeled;
            sums.1.negative += r.terms.negative;
            steps += 1;
        }
        if !params.is_finite() {
            return Err(Error::InvalidConfig(format!("parameters diverged in epoch {epoch}")));
        }
        let val = evaluate(&params, bundle, Split::Val, &[1])?;
        let r1 = val.recall(1).unwrap_or(0.0);
        let improved = best.as_ref().is_none_or(|(score, _, _)| r1 > *score);
        if improved {
            best = Some((r1, epoch, params.clone()));
        }
        let n = steps as f64;
        let log = EpochLog {
            epoch,
            steps,
            train_loss: sums.0 / n,
            positive: sums.1.positive / n,
            unlabeled: sums.1.unlabeled / n,
            negative: sums.1.negative / n,
            val_recall1: r1,
            val_mrr: val.mrr,
            best: improved,
        };
        log::info!(
            "epoch {epoch}: loss {:.4} val r@1 {:.3} mrr {:.3} ({:.1}s)",
            log.train_loss,
            r1,
            val.mrr,
            started.elapsed().as_secs_f64()
        );
        on_epoch(&log);
        history.push(log);
    }
    let (_, best_epoch, best) = best.expect("at least one epoch");
    Ok(TrainOutcome { best, best_epoch, history })
}
