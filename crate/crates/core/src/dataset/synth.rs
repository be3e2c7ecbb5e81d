//! Planted-structure synthetic bundles.
//!
//! Every record gets a concept; concept vectors have unit expected norm
//! (`N(0, I / latent_dim)`). A record's latent vector is its concept vector
//! plus `noise_sigma` Gaussian noise shared by all of the record's channels, so
//! a description and its own image agree beyond the concept level. Each
//! channel is a fixed random linear map of the latent plus a small amount of
//! independent per-channel noise. `txt`/`va` and the two prefilter channels
//! share their maps (when their dims agree), mimicking aligned encoders.
//! Palettes are 1-3 colors drawn from per-concept color anchors that are
//! themselves functions of the first `palette_subspace_dim` latent coordinates.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::color::{LabColor, SrgbColor};
use crate::error::{Error, Result};
use crate::palette::PaletteQuery;

use super::{Channel, ConfidenceRecord, DatasetBundle, EmbeddingMatrix, RecordMeta, Split};

const ANCHORS_PER_CONCEPT: usize = 3;
const PALETTE_JITTER: i16 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_records: usize,
    /// Validation records; defaults to `n_records / 11`.
    pub n_val: Option<usize>,
    /// Test records; defaults to `2 * n_records / 11`.
    pub n_test: Option<usize>,
    pub n_concepts: usize,
    pub latent_dim: usize,
    pub default_dim: usize,
    /// Per-channel overrides of `default_dim`.
    pub dims: BTreeMap<Channel, usize>,
    pub noise_sigma: f64,
    /// Per-channel noise as a fraction of `noise_sigma`.
    pub channel_noise_ratio: f64,
    pub palette_subspace_dim: usize,
    /// Concept pairs (2m, 2m+1), m < neighbor_pairs, are designated neighbors.
    pub neighbor_pairs: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_records: 704,
            n_val: None,
            n_test: None,
            n_concepts: 32,
            latent_dim: 32,
            default_dim: 64,
            dims: BTreeMap::new(),
            noise_sigma: 0.1,
            channel_noise_ratio: 0.25,
            palette_subspace_dim: 3,
            neighbor_pairs: 0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn dim(&self, ch: Channel) -> usize {
        self.dims.get(&ch).copied().unwrap_or(self.default_dim)
    }

    pub fn split_sizes(&self) -> (usize, usize, usize) {
        let n_val = self.n_val.unwrap_or(self.n_records / 11);
        let n_test = self.n_test.unwrap_or(2 * self.n_records / 11);
        (self.n_records.saturating_sub(n_val + n_test), n_val, n_test)
    }

    pub fn validate(&self) -> Result<()> {
        let (_, n_val, n_test) = self.split_sizes();
        let problem = if self.n_records == 0 {
            Some("n_records must be positive".to_string())
        } else if self.n_concepts == 0 || self.n_concepts > self.n_records {
            Some(format!("n_concepts must be in 1..={}", self.n_records))
        } else if n_val + n_test > self.n_records {
            Some("validation + test exceed n_records".into())
        } else if self.latent_dim == 0 || self.palette_subspace_dim == 0 || self.palette_subspace_dim > self.latent_dim {
            Some("palette_subspace_dim must be in 1..=latent_dim".into())
        } else if !(self.noise_sigma >= 0.0 && self.channel_noise_ratio >= 0.0) {
            Some("noise must be non-negative".into())
        } else if 2 * self.neighbor_pairs > self.n_concepts {
            Some("too many neighbor pairs".into())
        } else if Channel::ALL.iter().any(|&c| self.dim(c) == 0) {
            Some("channel dims must be positive".into())
        } else if self.dim(Channel::PrefilterTxt) != self.dim(Channel::PrefilterImg) {
            Some("prefilter dims must match".into())
        } else {
            None
        };
        match problem {
            Some(p) => Err(Error::InvalidConfig(p)),
            None => Ok(()),
        }
    }

    /// Designated neighbor concept pairs `(2m, 2m + 1)`.
    pub fn neighbor_list(&self) -> Vec<(u32, u32)> {
        (0..self.neighbor_pairs as u32).map(|m| (2 * m, 2 * m + 1)).collect()
    }

    pub fn are_neighbors(&self, a: u32, b: u32) -> bool {
        a != b && a / 2 == b / 2 && ((a / 2) as usize) < self.neighbor_pairs
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * scale).collect()
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<DatasetBundle> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let r = config.latent_dim;
    let n = config.n_records;

    let concept_std = 1.0 / (r as f64).sqrt();
    let mut concepts: Vec<Vec<f64>> =
        (0..config.n_concepts).map(|_| gaussian_vec(&mut rng, r, concept_std)).collect();
    for m in 0..config.neighbor_pairs {
        let base = concepts[2 * m].clone();
        let fresh = gaussian_vec(&mut rng, r, concept_std);
        concepts[2 * m + 1] = base.iter().zip(&fresh).map(|(b, f)| 0.8 * b + 0.6 * f).collect();
    }

    let p = config.palette_subspace_dim;
    let anchor_maps: Vec<Vec<f64>> = (0..ANCHORS_PER_CONCEPT)
        .map(|_| gaussian_vec(&mut rng, 3 * p, 1.0 / (p as f64).sqrt()))
        .collect();
    let anchors: Vec<Vec<SrgbColor>> = concepts
        .iter()
        .map(|c| {
            anchor_maps
                .iter()
                .map(|m| {
                    let u: Vec<f64> = (0..3).map(|row| (0..p).map(|k| m[row * p + k] * c[k] / concept_std).sum()).collect();
                    LabColor::new(55.0 + 25.0 * u[0].tanh(), 70.0 * u[1].tanh(), 70.0 * u[2].tanh()).to_srgb()
                })
                .collect()
        })
        .collect();

    let mut maps: BTreeMap<Channel, Vec<f64>> = BTreeMap::new();
    for ch in Channel::ALL {
        let shared = match ch {
            Channel::Va if config.dim(Channel::Va) == config.dim(Channel::Txt) => maps.get(&Channel::Txt).cloned(),
            Channel::PrefilterImg => maps.get(&Channel::PrefilterTxt).cloned(),
            _ => None,
        };
        let map = shared.unwrap_or_else(|| gaussian_vec(&mut rng, config.dim(ch) * r, 1.0 / (r as f64).sqrt()));
        maps.insert(ch, map);
    }

    let mut assignment: Vec<u32> = (0..n).map(|i| (i % config.n_concepts) as u32).collect();
    assignment.shuffle(&mut rng);
    let (n_train, n_val, _) = config.split_sizes();

    let mut latents = Vec::with_capacity(n);
    let mut manifest = Vec::with_capacity(n);
    for (i, &k) in assignment.iter().enumerate() {
        let concept = &concepts[k as usize];
        let eps = gaussian_vec(&mut rng, r, config.noise_sigma);
        latents.push(concept.iter().zip(&eps).map(|(c, e)| c + e).collect::<Vec<f64>>());

        let count = rng.random_range(1..=ANCHORS_PER_CONCEPT);
        let mut order: Vec<usize> = (0..ANCHORS_PER_CONCEPT).collect();
        order.shuffle(&mut rng);
        let colors = order[..count]
            .iter()
            .map(|&a| {
                let base = anchors[k as usize][a];
                let mut jitter = |v: u8| {
                    let d = rng.random_range(-PALETTE_JITTER..=PALETTE_JITTER);
                    (i16::from(v) + d).clamp(0, 255) as u8
                };
                SrgbColor::new(jitter(base.r), jitter(base.g), jitter(base.b))
            })
            .collect();

        let split = if i < n_train {
            Split::Train
        } else if i < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
        manifest.push(RecordMeta {
            id: format!("rec-{i:05}"),
            description_text: format!("synthetic design {i} of concept {k}"),
            nnp_text: Some(format!("concept-{k} design")),
            palette: PaletteQuery::new(colors)?,
            split,
            target_image_index: i,
            concept: Some(k),
        });
    }

    let channel_sigma = config.noise_sigma * config.channel_noise_ratio;
    let mut matrices = BTreeMap::new();
    for ch in Channel::ALL {
        let dim = config.dim(ch);
        let map = &maps[&ch];
        let mut values = Vec::with_capacity(n * dim);
        for z in &latents {
            for row in 0..dim {
                let clean: f64 = map[row * r..(row + 1) * r].iter().zip(z).map(|(a, b)| a * b).sum();
                let noise = rng.sample::<f64, _>(StandardNormal) * channel_sigma;
                values.push((clean + noise) as f32);
            }
        }
        matrices.insert(ch, EmbeddingMatrix::new(ch, n, dim, values)?);
    }

    let mut confidences = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || manifest[i].split != manifest[j].split {
                continue;
            }
            let (a, b) = (assignment[i], assignment[j]);
            let c = if a == b {
                1.0
            } else if config.are_neighbors(a, b) {
                0.5
            } else {
                continue;
            };
            confidences.push(ConfidenceRecord { i, j, c });
        }
    }

    DatasetBundle::new(manifest, matrices, confidences)
}
