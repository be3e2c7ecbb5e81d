use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Channel, DatasetBundle, Split};
use crate::error::{Error, Result};
use crate::nn::{similarity, FusionParameters, Scalar};
use crate::palette::PaletteQuery;

/// Image indices ordered by descending score; ties keep ascending index.
pub fn rank<F: Scalar>(scores: &[F]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal));
    order
}

/// Mean reciprocal rank of 1-based target ranks.
pub fn mrr(ranks: &[usize]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Empty("rank list"));
    }
    if ranks.contains(&0) {
        return Err(Error::InvalidConfig("ranks are 1-based".into()));
    }
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

/// Mean over queries of |A_i ∩ top-K_i| / |A_i|.
pub fn recall_at_k(rankings: &[Vec<usize>], targets: &[Vec<usize>], k: usize) -> Result<f64> {
    if rankings.is_empty() {
        return Err(Error::Empty("ranking list"));
    }
    if rankings.len() != targets.len() {
        return Err(Error::ShapeMismatch(format!("{} rankings for {} target sets", rankings.len(), targets.len())));
    }
    let mut total = 0.0;
    for (ranking, a) in rankings.iter().zip(targets) {
        if a.is_empty() {
            return Err(Error::Empty("target set"));
        }
        let top = &ranking[..k.min(ranking.len())];
        total += a.iter().filter(|t| top.contains(t)).count() as f64 / a.len() as f64;
    }
    Ok(total / rankings.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: Split,
    pub mrr: f64,
    pub recall_at: BTreeMap<usize, f64>,
    /// 1-based rank of each query's target, in split order.
    pub ranks: Vec<usize>,
}

impl EvalReport {
    pub fn recall(&self, k: usize) -> Option<f64> {
        self.recall_at.get(&k).copied()
    }
}

fn rows<'a>(bundle: &'a DatasetBundle, channels: [Channel; 3], i: usize) -> [&'a [f32]; 3] {
    channels.map(|ch| bundle.matrix(ch).row(i))
}

/// Language-palette embedding of record `record` with an explicit palette.
pub fn text_embedding(
    params: &FusionParameters<f32>,
    bundle: &DatasetBundle,
    record: usize,
    palette: &PaletteQuery,
) -> Result<Vec<f32>> {
    params.fuse_text(rows(bundle, Channel::TEXT, record), palette)
}

pub fn image_embedding(params: &FusionParameters<f32>, bundle: &DatasetBundle, image: usize) -> Result<Vec<f32>> {
    params.fuse_visual(rows(bundle, Channel::VISUAL, image))
}

/// Embeds the given images in parallel; output follows `images`.
pub fn image_embeddings(params: &FusionParameters<f32>, bundle: &DatasetBundle, images: &[usize]) -> Result<Vec<Vec<f32>>> {
    images.par_iter().map(|&j| image_embedding(params, bundle, j)).collect()
}

/// Similarity of one query embedding against every corpus embedding.
pub fn score_corpus(query: &[f32], corpus: &[Vec<f32>]) -> Vec<f32> {
    corpus.iter().map(|v| similarity(query, v)).collect()
}

/// Images targeted by the records of a split, ascending and deduplicated.
pub fn split_corpus(bundle: &DatasetBundle, split: Split) -> Vec<usize> {
    let mut images: Vec<usize> =
        bundle.split_indices(split).iter().map(|&i| bundle.manifest[i].target_image_index).collect();
    images.sort_unstable();
    images.dedup();
    images
}

/// Ranks the split's images for each of its queries (stored palettes) and
/// reports MRR and recall@K.
pub fn evaluate(params: &FusionParameters<f32>, bundle: &DatasetBundle, split: Split, ks: &[usize]) -> Result<EvalReport> {
    let queries = bundle.split_indices(split);
    if queries.is_empty() {
        return Err(Error::Empty("evaluation split"));
    }
    let corpus = split_corpus(bundle, split);
    let embedded = image_embeddings(params, bundle, &corpus)?;
    let rankings: Vec<Vec<usize>> = queries
        .par_iter()
        .map(|&i| {
            let t = text_embedding(params, bundle, i, &bundle.manifest[i].palette)?;
            Ok(rank(&score_corpus(&t, &embedded)).into_iter().map(|pos| corpus[pos]).collect())
        })
        .collect::<Result<_>>()?;
    let targets: Vec<Vec<usize>> = queries.iter().map(|&i| vec![bundle.manifest[i].target_image_index]).collect();
    let ranks: Vec<usize> = rankings
        .iter()
        .zip(&targets)
        .map(|(r, a)| r.iter().position(|&j| j == a[0]).map_or(usize::MAX, |p| p + 1))
        .collect();
    let recall_at = ks.iter().map(|&k| Ok((k, recall_at_k(&rankings, &targets, k)?))).collect::<Result<_>>()?;
    Ok(EvalReport { split, mrr: mrr(&ranks)?, recall_at, ranks })
}
