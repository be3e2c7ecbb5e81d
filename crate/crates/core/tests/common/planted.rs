//! Planted-palette images: K well-separated colors in vertical bands of
//! distinct widths inside a rectangular mask, with a distractor outside.

use palette_search::color::{ciede2000, SrgbColor};
use palette_search::palette::MaskedImage;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MIN_SEPARATION: f64 = 25.0;

pub struct Planted {
    pub image: MaskedImage,
    /// Planted colors by descending in-mask area.
    pub colors: Vec<SrgbColor>,
}

fn separated_colors(rng: &mut ChaCha8Rng, k: usize) -> Vec<SrgbColor> {
    let mut colors: Vec<SrgbColor> = Vec::with_capacity(k + 1);
    while colors.len() < k + 1 {
        let c = SrgbColor::new(rng.random(), rng.random(), rng.random());
        if colors.iter().all(|o| ciede2000(o.to_lab(), c.to_lab()) >= MIN_SEPARATION) {
            colors.push(c);
        }
    }
    colors
}

/// Band widths summing to `total`, pairwise at least `gap` apart, each at
/// least `floor`.
fn distinct_widths(rng: &mut ChaCha8Rng, k: usize, total: usize, floor: usize, gap: usize) -> Vec<usize> {
    loop {
        let mut cuts: Vec<usize> = (0..k - 1).map(|_| rng.random_range(1..total)).collect();
        cuts.sort_unstable();
        let mut widths = Vec::with_capacity(k);
        let mut prev = 0;
        for c in cuts.into_iter().chain([total]) {
            widths.push(c - prev);
            prev = c;
        }
        let mut sorted = widths.clone();
        sorted.sort_unstable();
        if sorted[0] >= floor && sorted.windows(2).all(|w| w[1] - w[0] >= gap) {
            return widths;
        }
    }
}

pub fn planted_image(seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=5);
    let mut colors = separated_colors(&mut rng, k);
    let distractor = colors.pop().unwrap();

    let (w, h) = (rng.random_range(90..130), rng.random_range(60..90));
    let (x0, y0) = (rng.random_range(0..8), rng.random_range(0..8));
    let (mw, mh) = (w - x0 - rng.random_range(0..8), h - y0 - rng.random_range(0..8));
    let widths = distinct_widths(&mut rng, k, mw, mw / 10, 3);
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut rng);

    let mut band_of_column = Vec::with_capacity(mw);
    for &b in &order {
        band_of_column.extend(std::iter::repeat_n(b, widths[b]));
    }
    let mut pixels = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let inside = (x0..x0 + mw).contains(&x) && (y0..y0 + mh).contains(&y);
            pixels.push(if inside { colors[band_of_column[x - x0]] } else { distractor });
            mask.push(inside);
        }
    }
    let mut by_area: Vec<usize> = (0..k).collect();
    by_area.sort_by(|&a, &b| widths[b].cmp(&widths[a]));
    Planted {
        image: MaskedImage::new(w, h, pixels, mask).unwrap(),
        colors: by_area.into_iter().map(|b| colors[b]).collect(),
    }
}
