use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::SrgbColor;
use crate::error::{Error, Result};

use super::{extract_palette, MaskedImage, PaletteConfig, PaletteQuery};

/// One line of a palette file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteLine {
    pub id: String,
    pub colors: PaletteQuery,
}

/// Loads an RGB image and a single-channel mask (nonzero = selected) of the
/// same size.
pub fn load_masked_image(image: &Path, mask: &Path) -> Result<MaskedImage> {
    let rgb = image::open(image)?.to_rgb8();
    let luma = image::open(mask)?.to_luma8();
    if rgb.dimensions() != luma.dimensions() {
        return Err(Error::Format {
            path: mask.to_path_buf(),
            reason: format!("mask is {:?}, image is {:?}", luma.dimensions(), rgb.dimensions()),
        });
    }
    let (w, h) = rgb.dimensions();
    let pixels = rgb.pixels().map(|p| SrgbColor::new(p[0], p[1], p[2])).collect();
    let mask = luma.pixels().map(|p| p[0] != 0).collect();
    MaskedImage::new(w as usize, h as usize, pixels, mask)
}

/// `(id, image path, mask path)` for every PNG in `images` with a
/// same-named mask in `masks`, sorted by id.
pub fn paired_files(images: &Path, masks: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(images)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()).map(|e| e.eq_ignore_ascii_case("png")) != Some(true) {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned) else { continue };
        let mask = masks.join(format!("{id}.png"));
        if !mask.exists() {
            return Err(Error::Format { path, reason: format!("no mask {}", mask.display()) });
        }
        out.push((id, path, mask));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Extracts palettes for every image/mask pair of two directories, in id order.
pub fn extract_directory(images: &Path, masks: &Path, config: &PaletteConfig) -> Result<Vec<PaletteLine>> {
    paired_files(images, masks)?
        .into_par_iter()
        .map(|(id, image, mask)| {
            let colors = extract_palette(&load_masked_image(&image, &mask)?, config)?;
            Ok(PaletteLine { id, colors })
        })
        .collect()
}

pub fn write_palette_file(path: &Path, lines: &[PaletteLine]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for line in lines {
        serde_json::to_writer(&mut w, line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
