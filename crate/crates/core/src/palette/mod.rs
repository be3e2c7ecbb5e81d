//! Palette-query extraction from an image region.
//!
//! The pipeline is: SLIC superpixels inside the mask, average-linkage
//! clustering of the superpixel colors under CIEDE2000, one representative
//! color per cluster (the area-weighted medoid), and finally area-ratio based
//! selection of at most `max_colors` colors.

mod cluster;
mod io;
mod select;
mod slic;

use serde::{Deserialize, Serialize};

use crate::color::{LabColor, SrgbColor};
use crate::error::{Error, Result};

pub use cluster::{average_linkage_cluster, cluster_representative, Cluster, ColorCluster};
pub use io::{extract_directory, load_masked_image, paired_files, write_palette_file, PaletteLine};
pub use select::select_palette;
pub use slic::{slic_segmentation, slic_superpixels, Segmentation, SlicParams};

/// Maximum number of colors a palette query may hold.
pub const MAX_PALETTE_COLORS: usize = 5;

/// An ordered list of zero to five colors.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<SrgbColor>", into = "Vec<SrgbColor>")]
pub struct PaletteQuery {
    colors: Vec<SrgbColor>,
}

impl PaletteQuery {
    pub fn new(colors: Vec<SrgbColor>) -> Result<Self> {
        if colors.len() > MAX_PALETTE_COLORS {
            return Err(Error::InvalidConfig(format!(
                "palette has {} colors, at most {MAX_PALETTE_COLORS} allowed",
                colors.len()
            )));
        }
        Ok(Self { colors })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_hex<S: AsRef<str>>(hex: &[S]) -> Result<Self> {
        let colors = hex
            .iter()
            .map(|h| SrgbColor::from_hex(h.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(colors)
    }

    pub fn colors(&self) -> &[SrgbColor] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn to_hex(&self) -> Vec<String> {
        self.colors.iter().map(|c| c.to_hex()).collect()
    }
}

impl TryFrom<Vec<SrgbColor>> for PaletteQuery {
    type Error = Error;

    fn try_from(colors: Vec<SrgbColor>) -> Result<Self> {
        Self::new(colors)
    }
}

impl From<PaletteQuery> for Vec<SrgbColor> {
    fn from(p: PaletteQuery) -> Self {
        p.colors
    }
}

/// An image together with its region-of-interest mask, both row-major.
#[derive(Debug, Clone)]
pub struct MaskedImage {
    width: usize,
    height: usize,
    pixels: Vec<SrgbColor>,
    mask: Vec<bool>,
}

impl MaskedImage {
    pub fn new(width: usize, height: usize, pixels: Vec<SrgbColor>, mask: Vec<bool>) -> Result<Self> {
        let n = width * height;
        if pixels.len() != n || mask.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{width}x{height} image needs {n} pixels and mask entries, got {} and {}",
                pixels.len(),
                mask.len()
            )));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::EmptyRegion);
        }
        Ok(Self { width, height, pixels, mask })
    }

    /// Image with every pixel selected.
    pub fn unmasked(width: usize, height: usize, pixels: Vec<SrgbColor>) -> Result<Self> {
        Self::new(width, height, pixels, vec![true; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[SrgbColor] {
        &self.pixels
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn mask_area(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn pixel(&self, x: usize, y: usize) -> SrgbColor {
        self.pixels[y * self.width + x]
    }

    pub fn selected(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }
}

/// Mean color and size of one superpixel.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelSummary {
    pub id: usize,
    pub mean_color: SrgbColor,
    pub mean_lab: LabColor,
    pub pixel_count: usize,
}

/// Knobs for [`extract_palette`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteConfig {
    /// Average-linkage merge threshold in ΔE00 units.
    pub theta_cluster: f64,
    pub theta_min: f64,
    pub theta_cum: f64,
    pub max_colors: usize,
    pub compactness: f64,
    pub iterations: usize,
    /// Fixed superpixel target; `None` derives it from the mask area.
    pub n_target: Option<usize>,
}

impl Default for PaletteConfig {
    fn default() -> Self {
        Self {
            theta_cluster: 20.0,
            theta_min: 0.05,
            theta_cum: 1.0,
            max_colors: MAX_PALETTE_COLORS,
            compactness: 10.0,
            iterations: 10,
            n_target: None,
        }
    }
}

impl PaletteConfig {
    /// Superpixel target for a mask of `area` pixels: at least 1000 for
    /// full-size regions, never below four pixels per superpixel, never below 1.
    pub fn target_for_area(&self, area: usize) -> usize {
        if let Some(n) = self.n_target {
            return n.max(1);
        }
        (area / 100).max(1000).min(area / 4).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.theta_cluster >= 0.0
            && self.theta_min > 0.0
            && self.theta_min < 1.0
            && self.theta_cum > 0.0
            && self.theta_cum <= 1.0
            && self.max_colors >= 1
            && self.compactness > 0.0
            && self.iterations >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("palette config out of range: {self:?}")))
        }
    }
}

/// Runs the full pipeline on one masked image.
pub fn extract_palette(img: &MaskedImage, config: &PaletteConfig) -> Result<PaletteQuery> {
    config.validate()?;
    let params = SlicParams {
        n_target: config.target_for_area(img.mask_area()),
        compactness: config.compactness,
        iterations: config.iterations,
    };
    let summaries = slic_superpixels(img, &params)?;
    let clusters = average_linkage_cluster(&summaries, config.theta_cluster);
    let colored: Vec<ColorCluster> = clusters
        .into_iter()
        .map(|c| {
            let representative = cluster_representative(&c, &summaries);
            ColorCluster { members: c.members, representative, area_ratio: c.area_ratio }
        })
        .collect();
    Ok(select_palette(&colored, config.theta_min, config.theta_cum, config.max_colors))
}
