//! Dataset bundles: the record manifest, per-channel embedding matrices and
//! pairwise confidence scores, all produced offline by external encoders.
//!
//! A bundle is a directory:
//!
//! ```text
//! manifest.jsonl       one RecordMeta per line
//! confidences.jsonl    {"i":..,"j":..,"c":..} per line (may be empty)
//! <channel>.nsem       one file per embedding channel
//! ```
//!
//! Text-side channels (`txt`, `mdd`, `nnp`, `prefilter_txt`) have one row per
//! record; image-side channels (`vs`, `va`, `vn`, `prefilter_img`) have one row
//! per image. The two prefilter channels are optional.

mod nsem;
mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::palette::PaletteQuery;

pub use nsem::{read_matrix, write_matrix};
pub use synth::{generate_synthetic, SynthConfig};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const CONFIDENCE_FILE: &str = "confidences.jsonl";
pub const SYNTH_CONFIG_FILE: &str = "synth.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Txt,
    Mdd,
    Nnp,
    Vs,
    Va,
    Vn,
    PrefilterTxt,
    PrefilterImg,
}

impl Channel {
    pub const ALL: [Channel; 8] = [
        Channel::Txt,
        Channel::Mdd,
        Channel::Nnp,
        Channel::Vs,
        Channel::Va,
        Channel::Vn,
        Channel::PrefilterTxt,
        Channel::PrefilterImg,
    ];
    /// The three description-side inputs of the text head.
    pub const TEXT: [Channel; 3] = [Channel::Txt, Channel::Mdd, Channel::Nnp];
    /// The three image-side inputs of the visual head.
    pub const VISUAL: [Channel; 3] = [Channel::Vs, Channel::Va, Channel::Vn];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Txt => "txt",
            Channel::Mdd => "mdd",
            Channel::Nnp => "nnp",
            Channel::Vs => "vs",
            Channel::Va => "va",
            Channel::Vn => "vn",
            Channel::PrefilterTxt => "prefilter_txt",
            Channel::PrefilterImg => "prefilter_img",
        }
    }

    pub fn is_text_side(self) -> bool {
        matches!(self, Channel::Txt | Channel::Mdd | Channel::Nnp | Channel::PrefilterTxt)
    }

    pub fn is_optional(self) -> bool {
        matches!(self, Channel::PrefilterTxt | Channel::PrefilterImg)
    }

    pub fn file_name(self) -> String {
        format!("{}.nsem", self.name())
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown channel {s:?}")))
    }
}

/// Row-major `f32` matrix for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    channel: Channel,
    rows: usize,
    dim: usize,
    values: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(channel: Channel, rows: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        if dim == 0 || values.len() != rows * dim {
            return Err(Error::ShapeMismatch(format!(
                "{channel}: {rows}x{dim} needs {} values, got {}",
                rows * dim,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { channel: channel.name().into(), row: pos / dim, col: pos % dim });
        }
        Ok(Self { channel, rows, dim, values })
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split {other:?}"))),
        }
    }
}

/// One description/palette query and its positive image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub id: String,
    pub description_text: String,
    /// Normalized noun phrase, used only for confidence-provider requests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nnp_text: Option<String>,
    pub palette: PaletteQuery,
    pub split: Split,
    pub target_image_index: usize,
    /// Planted concept id (synthetic bundles only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRecord {
    pub i: usize,
    pub j: usize,
    pub c: f64,
}

impl ConfidenceRecord {
    pub const LEVELS: [f64; 3] = [0.0, 0.5, 1.0];

    pub fn validate(&self) -> Result<()> {
        if self.i == self.j {
            return Err(Error::InvalidConfidence { i: self.i, j: self.j, reason: "self pair".into() });
        }
        if !Self::LEVELS.contains(&self.c) {
            return Err(Error::InvalidConfidence {
                i: self.i,
                j: self.j,
                reason: format!("score {} not in {{0, 0.5, 1}}", self.c),
            });
        }
        Ok(())
    }
}

/// Manifest, matrices and confidences of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub manifest: Vec<RecordMeta>,
    pub matrices: BTreeMap<Channel, EmbeddingMatrix>,
    pub confidences: Vec<ConfidenceRecord>,
}

impl DatasetBundle {
    pub fn new(
        manifest: Vec<RecordMeta>,
        matrices: BTreeMap<Channel, EmbeddingMatrix>,
        confidences: Vec<ConfidenceRecord>,
    ) -> Result<Self> {
        let bundle = Self { manifest, matrices, confidences };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn num_records(&self) -> usize {
        self.manifest.len()
    }

    pub fn num_images(&self) -> usize {
        self.matrix(Channel::Vs).rows()
    }

    /// Panics if a required channel is missing; bundles are validated on load.
    pub fn matrix(&self, channel: Channel) -> &EmbeddingMatrix {
        self.matrices
            .get(&channel)
            .unwrap_or_else(|| panic!("bundle has no {channel} channel"))
    }

    pub fn try_matrix(&self, channel: Channel) -> Option<&EmbeddingMatrix> {
        self.matrices.get(&channel)
    }

    pub fn dim(&self, channel: Channel) -> Option<usize> {
        self.matrices.get(&channel).map(|m| m.dim())
    }

    /// Record indices of one split, in manifest order.
    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        self.manifest.iter().enumerate().filter(|(_, r)| r.split == split).map(|(i, _)| i).collect()
    }

    /// Display id of an image: the id of the first record targeting it, or
    /// `image-<index>` for images no record targets.
    pub fn image_id(&self, image: usize) -> String {
        self.manifest
            .iter()
            .find(|r| r.target_image_index == image)
            .map(|r| r.id.clone())
            .unwrap_or_else(|| format!("image-{image}"))
    }

    pub fn validate(&self) -> Result<()> {
        for ch in Channel::ALL {
            if !ch.is_optional() && !self.matrices.contains_key(&ch) {
                return Err(Error::InconsistentCounts(format!("missing required channel {ch}")));
            }
        }
        let n_records = self.manifest.len();
        let n_images = self.matrix(Channel::Vs).rows();
        for (ch, m) in &self.matrices {
            if m.channel() != *ch {
                return Err(Error::InconsistentCounts(format!("matrix stored under {ch} is {}", m.channel())));
            }
            let expected = if ch.is_text_side() { n_records } else { n_images };
            if m.rows() != expected {
                return Err(Error::InconsistentCounts(format!(
                    "{ch} has {} rows, expected {expected}",
                    m.rows()
                )));
            }
        }
        match (self.dim(Channel::PrefilterTxt), self.dim(Channel::PrefilterImg)) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::InconsistentCounts(format!("prefilter dims differ: {a} vs {b}")))
            }
            (Some(_), None) | (None, Some(_)) => {
                return Err(Error::InconsistentCounts("prefilter channels must come as a pair".into()))
            }
            _ => {}
        }
        let mut ids = std::collections::HashSet::new();
        for r in &self.manifest {
            if r.target_image_index >= n_images {
                return Err(Error::InconsistentCounts(format!(
                    "record {} targets image {} of {n_images}",
                    r.id, r.target_image_index
                )));
            }
            if !ids.insert(r.id.as_str()) {
                return Err(Error::InconsistentCounts(format!("duplicate record id {}", r.id)));
            }
        }
        for c in &self.confidences {
            c.validate()?;
            if c.i >= n_records || c.j >= n_images {
                return Err(Error::InvalidConfidence { i: c.i, j: c.j, reason: "index out of range".into() });
            }
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_jsonl(&dir.join(MANIFEST_FILE), &self.manifest)?;
        write_jsonl(&dir.join(CONFIDENCE_FILE), &self.confidences)?;
        for (ch, m) in &self.matrices {
            let mut w = BufWriter::new(File::create(dir.join(ch.file_name()))?);
            write_matrix(m, &mut w)?;
            w.flush()?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Vec<RecordMeta> = read_jsonl(&dir.join(MANIFEST_FILE))?;
        let conf_path = dir.join(CONFIDENCE_FILE);
        let confidences = if conf_path.exists() { read_jsonl(&conf_path)? } else { Vec::new() };
        let mut matrices = BTreeMap::new();
        for ch in Channel::ALL {
            let path = dir.join(ch.file_name());
            if !path.exists() {
                if ch.is_optional() {
                    continue;
                }
                return Err(Error::Format { path, reason: "missing channel file".into() });
            }
            let m = read_matrix(BufReader::new(File::open(&path)?), &path)?;
            if m.channel() != ch {
                return Err(Error::Format { path, reason: format!("file holds channel {}", m.channel()) });
            }
            matrices.insert(ch, m);
        }
        Self::new(manifest, matrices, confidences)
    }

    /// Writes only the confidence file of an existing bundle directory.
    pub fn save_confidences(path: &Path, confidences: &[ConfidenceRecord]) -> Result<()> {
        write_jsonl(path, confidences)
    }
}

pub fn load_bundle(dir: &Path) -> Result<DatasetBundle> {
    DatasetBundle::load(dir)
}

pub fn save_bundle(bundle: &DatasetBundle, dir: &Path) -> Result<()> {
    bundle.save(dir)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::Format { path: path.to_path_buf(), reason: e.to_string() })?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Format {
            path: PathBuf::from(path),
            reason: format!("line {}: {e}", n + 1),
        })?;
        out.push(item);
    }
    Ok(out)
}
