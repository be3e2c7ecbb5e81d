//! Confidence providers: who decides whether a candidate image is an
//! unlabeled positive for a query. Raw scores are 0, 5 or 10 and are scaled
//! to 0.0, 0.5 and 1.0.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{Channel, ConfidenceRecord, DatasetBundle, Split};
use crate::error::{Error, Result};

use super::prefilter_candidates;

pub const RAW_SCORES: [u8; 3] = [0, 5, 10];

/// One scoring question: is `image` a plausible match for query `query`?
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceRequest {
    #[serde(skip)]
    pub query: usize,
    #[serde(skip)]
    pub image: usize,
    pub query_nnp: String,
    pub image_id: String,
    pub cand_nnp: String,
}

pub trait ConfidenceProvider: Sync {
    /// Raw score in {0, 5, 10}, or `None` when the provider has no opinion.
    fn raw_score(&self, request: &ConfidenceRequest) -> Result<Option<u8>>;
}

fn scaled(i: usize, j: usize, raw: u8) -> Result<ConfidenceRecord> {
    if !RAW_SCORES.contains(&raw) {
        return Err(Error::InvalidConfidence { i, j, reason: format!("raw score {raw} not in {{0, 5, 10}}") });
    }
    Ok(ConfidenceRecord { i, j, c: raw as f64 / 10.0 })
}

/// Replays stored confidence records.
#[derive(Debug, Clone, Default)]
pub struct FileProvider {
    scores: HashMap<(usize, usize), f64>,
}

impl FileProvider {
    pub fn new(records: &[ConfidenceRecord]) -> Self {
        Self { scores: records.iter().map(|r| ((r.i, r.j), r.c)).collect() }
    }
}

impl ConfidenceProvider for FileProvider {
    fn raw_score(&self, req: &ConfidenceRequest) -> Result<Option<u8>> {
        Ok(self.scores.get(&(req.query, req.image)).map(|c| (c * 10.0).round() as u8))
    }
}

/// Deterministic stand-in driven by the records' concept labels: 10 for a
/// shared concept, 5 for designated neighbor concepts, 0 otherwise.
#[derive(Debug, Clone)]
pub struct MockProvider {
    query_concepts: Vec<Option<u32>>,
    image_concepts: Vec<Option<u32>>,
    neighbors: BTreeSet<(u32, u32)>,
}

impl MockProvider {
    pub fn new(bundle: &DatasetBundle, neighbors: &[(u32, u32)]) -> Self {
        let mut image_concepts = vec![None; bundle.num_images()];
        for r in bundle.manifest.iter().rev() {
            image_concepts[r.target_image_index] = r.concept;
        }
        Self {
            query_concepts: bundle.manifest.iter().map(|r| r.concept).collect(),
            image_concepts,
            neighbors: neighbors.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect(),
        }
    }

    pub fn score(&self, query: usize, image: usize) -> u8 {
        match (self.query_concepts[query], self.image_concepts[image]) {
            (Some(a), Some(b)) if a == b => 10,
            (Some(a), Some(b)) if self.neighbors.contains(&(a, b)) => 5,
            _ => 0,
        }
    }
}

impl ConfidenceProvider for MockProvider {
    fn raw_score(&self, req: &ConfidenceRequest) -> Result<Option<u8>> {
        Ok(Some(self.score(req.query, req.image)))
    }
}

/// Posts each request as JSON to an HTTP endpoint and reads the leading
/// integer of the response body.
#[derive(Debug, Clone)]
pub struct RemoteProvider {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl RemoteProvider {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Provider(e.to_string()))?;
        Ok(Self { endpoint: endpoint.into(), client })
    }
}

/// Leading unsigned integer of `text`, ignoring leading whitespace.
pub(crate) fn leading_integer(text: &str) -> Option<u32> {
    let t = text.trim_start();
    let end = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
    t[..end].parse().ok()
}

impl ConfidenceProvider for RemoteProvider {
    fn raw_score(&self, req: &ConfidenceRequest) -> Result<Option<u8>> {
        let resp = self
            .client
            .post(&self.endpoint)
            .json(req)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| Error::Provider(e.to_string()))?;
        let body = resp.text().map_err(|e| Error::Provider(e.to_string()))?;
        let n = leading_integer(&body)
            .ok_or_else(|| Error::Provider(format!("response does not start with a score: {body:?}")))?;
        u8::try_from(n)
            .ok()
            .filter(|v| RAW_SCORES.contains(v))
            .map(Some)
            .ok_or_else(|| Error::Provider(format!("score {n} not in {{0, 5, 10}}")))
    }
}

fn request(bundle: &DatasetBundle, query: usize, image: usize) -> ConfidenceRequest {
    let nnp = |i: usize| {
        let r = &bundle.manifest[i];
        r.nnp_text.clone().unwrap_or_else(|| r.description_text.clone())
    };
    let cand = bundle.manifest.iter().position(|r| r.target_image_index == image);
    ConfidenceRequest {
        query,
        image,
        query_nnp: nnp(query),
        image_id: bundle.image_id(image),
        cand_nnp: cand.map(nnp).unwrap_or_default(),
    }
}

/// Scores every (query, candidate) pair with at most `parallelism` requests
/// in flight. Output is sorted by `(i, j)` regardless of completion order.
pub fn score_candidates(
    bundle: &DatasetBundle,
    provider: &dyn ConfidenceProvider,
    candidates: &BTreeMap<usize, Vec<usize>>,
    parallelism: usize,
) -> Result<Vec<ConfidenceRecord>> {
    let requests: Vec<ConfidenceRequest> =
        candidates.iter().flat_map(|(&i, js)| js.iter().map(move |&j| (i, j))).map(|(i, j)| request(bundle, i, j)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let scored: Vec<Option<ConfidenceRecord>> = pool.install(|| {
        requests
            .par_iter()
            .map(|req| provider.raw_score(req)?.map(|raw| scaled(req.query, req.image, raw)).transpose())
            .collect::<Result<_>>()
    })?;
    let mut out: Vec<ConfidenceRecord> = scored.into_iter().flatten().collect();
    out.sort_by_key(|r| (r.i, r.j));
    Ok(out)
}

/// Prefilter candidates for every record: the `n_cand` images targeted by
/// same-split records that are closest in the prefilter space, excluding the
/// record's own target.
pub fn candidate_lists(bundle: &DatasetBundle, n_cand: usize) -> Result<BTreeMap<usize, Vec<usize>>> {
    if n_cand == 0 {
        return Err(Error::InvalidConfig("n_cand must be at least 1".into()));
    }
    let (Some(text), Some(images)) =
        (bundle.try_matrix(Channel::PrefilterTxt), bundle.try_matrix(Channel::PrefilterImg))
    else {
        return Err(Error::InvalidConfig("bundle has no prefilter_txt/prefilter_img channels".into()));
    };
    let mut out = BTreeMap::new();
    for split in [Split::Train, Split::Val, Split::Test] {
        let records = bundle.split_indices(split);
        let mut pool: Vec<usize> = records.iter().map(|&i| bundle.manifest[i].target_image_index).collect();
        pool.sort_unstable();
        pool.dedup();
        for &i in &records {
            let own = bundle.manifest[i].target_image_index;
            out.insert(i, prefilter_candidates(text.row(i), images, &pool, Some(own), n_cand));
        }
    }
    Ok(out)
}

/// Prefilter then score: the offline confidence acquisition pipeline.
pub fn build_confidences(
    bundle: &DatasetBundle,
    provider: &dyn ConfidenceProvider,
    n_cand: usize,
    parallelism: usize,
) -> Result<Vec<ConfidenceRecord>> {
    let candidates = candidate_lists(bundle, n_cand)?;
    score_candidates(bundle, provider, &candidates, parallelism)
}
