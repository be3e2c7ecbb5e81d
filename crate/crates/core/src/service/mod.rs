//! Interactive retrieval: a warmed index of fused image embeddings answering
//! (stored description, edited palette) queries, and its HTTP front end.

mod http;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetBundle, Split};
use crate::error::{Error, Result};
use crate::nn::FusionParameters;
use crate::palette::PaletteQuery;
use crate::train::{image_embeddings, model_config_for, rank, score_corpus, split_corpus, text_embedding};

pub use http::{router, serve, AppState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRequest {
    /// Position of the query among the index's queries.
    pub query_id: usize,
    /// Replaces the stored palette when present; may be empty.
    #[serde(default)]
    pub palette: Option<PaletteQuery>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub image_id: String,
    pub image_index: usize,
    pub score: f32,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub results: Vec<RankedResult>,
    pub timing_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySummary {
    pub query_id: usize,
    pub record_id: String,
    pub description_text: String,
    pub stored_palette: PaletteQuery,
    /// Image the description was written for, useful for highlighting.
    pub target_image_id: String,
}

/// Fused embeddings of every corpus image, computed once. Immutable after
/// construction, so one index can serve any number of threads.
#[derive(Debug, Clone)]
pub struct SearchIndex {
    params: FusionParameters<f32>,
    bundle: DatasetBundle,
    queries: Vec<usize>,
    corpus: Vec<usize>,
    embeddings: Vec<Vec<f32>>,
}

/// Builds the index over the images targeted by `split`'s records; the same
/// records are the selectable queries.
pub fn warm_index(bundle: DatasetBundle, params: FusionParameters<f32>, split: Split) -> Result<SearchIndex> {
    let expected = model_config_for(&bundle, &params.config)?;
    if expected.text_dims != params.config.text_dims || expected.visual_dims != params.config.visual_dims {
        return Err(Error::ShapeMismatch(format!(
            "checkpoint expects text dims {:?} / visual dims {:?}, bundle has {:?} / {:?}",
            params.config.text_dims, params.config.visual_dims, expected.text_dims, expected.visual_dims
        )));
    }
    let queries = bundle.split_indices(split);
    if queries.is_empty() {
        return Err(Error::Empty("query split"));
    }
    let corpus = split_corpus(&bundle, split);
    let embeddings = image_embeddings(&params, &bundle, &corpus)?;
    Ok(SearchIndex { params, bundle, queries, corpus, embeddings })
}

impl SearchIndex {
    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    pub fn bundle(&self) -> &DatasetBundle {
        &self.bundle
    }

    pub fn params(&self) -> &FusionParameters<f32> {
        &self.params
    }

    /// Corpus image indices, in index order.
    pub fn corpus(&self) -> &[usize] {
        &self.corpus
    }

    pub fn embeddings(&self) -> &[Vec<f32>] {
        &self.embeddings
    }

    /// Record index behind a query id.
    pub fn query_record(&self, query_id: usize) -> Result<usize> {
        self.queries.get(query_id).copied().ok_or(Error::UnknownQuery(query_id))
    }

    pub fn queries(&self) -> Vec<QuerySummary> {
        self.queries
            .iter()
            .enumerate()
            .map(|(query_id, &i)| {
                let r = &self.bundle.manifest[i];
                QuerySummary {
                    query_id,
                    record_id: r.id.clone(),
                    description_text: r.description_text.clone(),
                    stored_palette: r.palette.clone(),
                    target_image_id: self.bundle.image_id(r.target_image_index),
                }
            })
            .collect()
    }

    pub fn search(&self, req: &SearchRequest) -> Result<SearchResponse> {
        let started = Instant::now();
        if req.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let record = self.query_record(req.query_id)?;
        let palette = req.palette.as_ref().unwrap_or(&self.bundle.manifest[record].palette);
        let query = text_embedding(&self.params, &self.bundle, record, palette)?;
        let scores = score_corpus(&query, &self.embeddings);
        let results = rank(&scores)
            .into_iter()
            .take(req.k)
            .enumerate()
            .map(|(pos, slot)| {
                let image = self.corpus[slot];
                RankedResult { image_id: self.bundle.image_id(image), image_index: image, score: scores[slot], rank: pos + 1 }
            })
            .collect();
        Ok(SearchResponse { results, timing_ms: started.elapsed().as_secs_f64() * 1e3 })
    }
}
