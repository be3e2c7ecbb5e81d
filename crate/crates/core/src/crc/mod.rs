//! Confidence-based relaxed contrastive alignment: candidate prefiltering,
//! the unlabeled-positive set and the relaxed contrastive loss.

mod provider;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{ConfidenceRecord, EmbeddingMatrix};
use crate::error::{Error, Result};

pub use provider::{
    build_confidences, candidate_lists, score_candidates, ConfidenceProvider, ConfidenceRequest, FileProvider, MockProvider,
    RemoteProvider, RAW_SCORES,
};

/// Slack allowed on the cosine range of similarity entries.
const SIMILARITY_SLACK: f64 = 1e-6;

/// Indices of the `n_cand` images in `pool` most cosine-similar to `query`,
/// skipping `exclude`. Ties go to the lower index.
pub fn prefilter_candidates(
    query: &[f32],
    images: &EmbeddingMatrix,
    pool: &[usize],
    exclude: Option<usize>,
    n_cand: usize,
) -> Vec<usize> {
    let q_norm = norm(query);
    let mut scored: Vec<(f64, usize)> = pool
        .iter()
        .copied()
        .filter(|&j| Some(j) != exclude)
        .map(|j| {
            let row = images.row(j);
            let dot: f64 = query.iter().zip(row).map(|(&a, &b)| a as f64 * b as f64).sum();
            (dot / (q_norm * norm(row)).max(1e-12), j)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.truncate(n_cand);
    scored.into_iter().map(|(_, j)| j).collect()
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt()
}

/// Query/image pairs treated as unlabeled positives, with their confidence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UnlabeledPositiveSet {
    theta: f64,
    pairs: BTreeMap<(usize, usize), f64>,
}

impl UnlabeledPositiveSet {
    pub fn new(theta: f64) -> Self {
        Self { theta, pairs: BTreeMap::new() }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Adds `(i, j)` if `c >= theta`; returns whether it was added.
    pub fn insert(&mut self, i: usize, j: usize, c: f64) -> Result<bool> {
        ConfidenceRecord { i, j, c }.validate()?;
        if c < self.theta {
            return Ok(false);
        }
        self.pairs.insert((i, j), c);
        Ok(true)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.pairs.get(&(i, j)).copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.pairs.iter().map(|(&(i, j), &c)| (i, j, c))
    }

    /// Replaces every confidence with `c` (the fixed-confidence ablation).
    pub fn with_fixed_confidence(&self, c: f64) -> Self {
        Self { theta: self.theta, pairs: self.pairs.keys().map(|&k| (k, c)).collect() }
    }

    /// Restricts Z to a batch. Row `a` of the batch holds query
    /// `queries[a]`, column `b` holds image `images[b]`; returned pairs use
    /// batch positions.
    pub fn in_batch(&self, queries: &[usize], images: &[usize]) -> Vec<BatchPair> {
        let mut out = Vec::new();
        if self.pairs.is_empty() {
            return out;
        }
        for (a, &i) in queries.iter().enumerate() {
            for (b, &j) in images.iter().enumerate() {
                if a == b {
                    continue;
                }
                if let Some(c) = self.get(i, j) {
                    out.push(BatchPair { row: a, col: b, c });
                }
            }
        }
        out
    }
}

/// Builds Z from scored pairs: `(i, j)` enters when `j` is among `i`'s
/// candidates and its confidence reaches `theta`. Pairs with no record stay out.
pub fn build_z(
    confidences: &[ConfidenceRecord],
    candidates: &BTreeMap<usize, Vec<usize>>,
    theta: f64,
) -> Result<UnlabeledPositiveSet> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidConfig(format!("theta {theta} outside [0, 1]")));
    }
    let mut z = UnlabeledPositiveSet::new(theta);
    for r in confidences {
        r.validate()?;
        if candidates.get(&r.i).is_some_and(|c| c.contains(&r.j)) {
            z.insert(r.i, r.j, r.c)?;
        }
    }
    Ok(z)
}

/// An unlabeled positive at batch position `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchPair {
    pub row: usize,
    pub col: usize,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrcWeights {
    pub lambda_up: f64,
    pub lambda_n: f64,
}

impl Default for CrcWeights {
    fn default() -> Self {
        Self { lambda_up: 0.7, lambda_n: 0.7 }
    }
}

impl CrcWeights {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_up >= 0.0 && self.lambda_n >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("negative loss weight in {self:?}")))
        }
    }
}

/// Loss terms, kept apart for logging.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CrcTerms {
    pub positive: f64,
    pub unlabeled: f64,
    pub negative: f64,
}

impl CrcTerms {
    pub fn total(&self) -> f64 {
        self.positive + self.unlabeled + self.negative
    }
}

/// Relaxed contrastive loss over a row-major `b x b` similarity matrix whose
/// diagonal holds the labeled positives. Returns the loss terms and dL/dS.
pub fn crc_loss(s: &[f64], b: usize, z: &[BatchPair], weights: CrcWeights) -> Result<(CrcTerms, Vec<f64>)> {
    weights.validate()?;
    if s.len() != b * b {
        return Err(Error::ShapeMismatch(format!("similarity matrix has {} entries, expected {b}x{b}", s.len())));
    }
    if let Some(pos) = s.iter().position(|v| !(v.abs() <= 1.0 + SIMILARITY_SLACK)) {
        return Err(Error::InvalidConfig(format!("similarity {} at ({}, {}) is not a cosine", s[pos], pos / b, pos % b)));
    }
    let mut conf: Vec<Option<f64>> = vec![None; b * b];
    for p in z {
        if p.row >= b || p.col >= b {
            return Err(Error::PairOutsideBatch(p.row, p.col));
        }
        if p.row == p.col {
            return Err(Error::InvalidConfidence { i: p.row, j: p.col, reason: "labeled positive in Z".into() });
        }
        conf[p.row * b + p.col] = Some(p.c);
    }

    let mut terms = CrcTerms::default();
    let mut grad = vec![0.0; b * b];
    for i in 0..b {
        for j in 0..b {
            let k = i * b + j;
            let v = s[k];
            if i == j {
                terms.positive += (1.0 - v).powi(2);
                grad[k] = -2.0 * (1.0 - v);
            } else if let Some(c) = conf[k] {
                let gap = (c - v).max(0.0);
                terms.unlabeled += weights.lambda_up * gap * gap;
                grad[k] = -2.0 * weights.lambda_up * gap;
            } else {
                let over = v.max(0.0);
                terms.negative += weights.lambda_n * over * over;
                grad[k] = 2.0 * weights.lambda_n * over;
            }
        }
    }
    Ok((terms, grad))
}
