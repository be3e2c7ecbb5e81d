//! Extract a palette query from a synthetic masked image: three planted
//! color bands inside a circular mask, surrounded by a distractor color.
//!
//! ```bash
//! cargo run --example palette_extraction
//! ```

use palette_search::color::{ciede2000, SrgbColor};
use palette_search::palette::{extract_palette, MaskedImage, PaletteConfig};

fn main() -> palette_search::Result<()> {
    let (w, h) = (120, 90);
    let planted = [SrgbColor::new(0xff, 0xd3, 0xe5), SrgbColor::new(0x20, 0x40, 0xa0), SrgbColor::new(0xe0, 0xb0, 0x20)];
    let distractor = SrgbColor::new(0x10, 0x90, 0x30);

    let mut pixels = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - 60.0, y as f64 - 45.0);
            let inside = dx * dx + dy * dy < 40.0 * 40.0;
            let band = if x < 55 { 0 } else if x < 78 { 1 } else { 2 };
            pixels.push(if inside { planted[band] } else { distractor });
            mask.push(inside);
        }
    }
    let img = MaskedImage::new(w, h, pixels, mask)?;
    let palette = extract_palette(&img, &PaletteConfig::default())?;

    println!("mask area {} px, palette {:?}", img.mask_area(), palette.to_hex());
    for c in palette.colors() {
        let (nearest, de) = planted
            .iter()
            .map(|p| (p, ciede2000(p.to_lab(), c.to_lab())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        println!("  {} nearest planted {} (dE00 {de:.2})", c.to_hex(), nearest.to_hex());
    }
    Ok(())
}
