//! SLIC superpixels restricted to a mask.

use std::collections::VecDeque;

use crate::color::{srgb_to_lab, LabColor, SrgbColor};
use crate::error::{Error, Result};

use super::{MaskedImage, SuperpixelSummary};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    pub n_target: usize,
    pub compactness: f64,
    pub iterations: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self { n_target: 1000, compactness: 10.0, iterations: 10 }
    }
}

/// Per-pixel superpixel labels (`None` outside the mask) plus the summaries.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub labels: Vec<Option<usize>>,
    pub summaries: Vec<SuperpixelSummary>,
}

#[derive(Debug, Clone, Copy)]
struct Center {
    lab: LabColor,
    x: f64,
    y: f64,
}

pub fn slic_superpixels(img: &MaskedImage, params: &SlicParams) -> Result<Vec<SuperpixelSummary>> {
    slic_segmentation(img, params).map(|s| s.summaries)
}

pub fn slic_segmentation(img: &MaskedImage, params: &SlicParams) -> Result<Segmentation> {
    if params.n_target == 0 || params.compactness <= 0.0 || params.iterations == 0 {
        return Err(Error::InvalidConfig(format!("bad SLIC parameters {params:?}")));
    }
    let area = img.mask_area();
    if area == 0 {
        return Err(Error::EmptyRegion);
    }
    let (w, h) = (img.width(), img.height());
    let lab: Vec<LabColor> = img.pixels().iter().map(|&c| srgb_to_lab(c)).collect();
    let mask = img.mask();

    let step = (area as f64 / params.n_target as f64).sqrt().max(1.0);
    let mut centers = seed_centers(img, &lab, step);

    let mut labels: Vec<Option<usize>> = vec![None; w * h];
    let mut dist = vec![f64::INFINITY; w * h];
    let spatial_weight = (params.compactness / step).powi(2);
    let radius = step.ceil() as isize;

    for _ in 0..params.iterations {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            let cx = c.x.round() as isize;
            let cy = c.y.round() as isize;
            let x0 = (cx - radius).max(0) as usize;
            let x1 = ((cx + radius).min(w as isize - 1)) as usize;
            let y0 = (cy - radius).max(0) as usize;
            let y1 = ((cy + radius).min(h as isize - 1)) as usize;
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let i = y * w + x;
                    if !mask[i] {
                        continue;
                    }
                    let d = combined_distance(c, &lab[i], x, y, spatial_weight);
                    if d < dist[i] {
                        dist[i] = d;
                        labels[i] = Some(k);
                    }
                }
            }
        }

        let mut sums = vec![(0.0, 0.0, 0.0, 0.0, 0.0, 0usize); centers.len()];
        for (i, label) in labels.iter().enumerate() {
            if let (Some(k), true) = (label, mask[i]) {
                let s = &mut sums[*k];
                s.0 += lab[i].l;
                s.1 += lab[i].a;
                s.2 += lab[i].b;
                s.3 += (i % w) as f64;
                s.4 += (i / w) as f64;
                s.5 += 1;
            }
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s.5 > 0 {
                let n = s.5 as f64;
                *c = Center { lab: LabColor::new(s.0 / n, s.1 / n, s.2 / n), x: s.3 / n, y: s.4 / n };
            }
        }
    }

    // Pixels no window reached fall back to the globally nearest center.
    for i in 0..w * h {
        if mask[i] && labels[i].is_none() {
            let (x, y) = (i % w, i / w);
            labels[i] = centers
                .iter()
                .enumerate()
                .map(|(k, c)| (k, combined_distance(c, &lab[i], x, y, spatial_weight)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(k, _)| k);
        }
    }

    let min_size = ((step * step) / 4.0).floor().max(1.0) as usize;
    let labels = enforce_connectivity(img, &lab, &labels, min_size);
    let summaries = summarize(img, &labels);
    Ok(Segmentation { labels, summaries })
}

fn combined_distance(c: &Center, lab: &LabColor, x: usize, y: usize, spatial_weight: f64) -> f64 {
    let dx = x as f64 - c.x;
    let dy = y as f64 - c.y;
    c.lab.distance_sq(lab) + (dx * dx + dy * dy) * spatial_weight
}

/// Grid seeds over the mask's bounding box. Seeds that land outside the mask
/// move to the nearest masked pixel of their own grid cell, or are dropped if
/// the cell has none; then each seed moves to the lowest-gradient masked pixel
/// in its 3x3 neighbourhood.
fn seed_centers(img: &MaskedImage, lab: &[LabColor], step: f64) -> Vec<Center> {
    let (w, h) = (img.width(), img.height());
    let (mut bx0, mut by0, mut bx1, mut by1) = (w, h, 0, 0);
    for y in 0..h {
        for x in 0..w {
            if img.selected(x, y) {
                bx0 = bx0.min(x);
                by0 = by0.min(y);
                bx1 = bx1.max(x);
                by1 = by1.max(y);
            }
        }
    }

    let half = step / 2.0;
    let mut seeds: Vec<(usize, usize)> = Vec::new();
    let mut gy = by0 as f64 + half - 0.5;
    while gy <= by1 as f64 + 0.5 {
        let mut gx = bx0 as f64 + half - 0.5;
        while gx <= bx1 as f64 + 0.5 {
            let sx = (gx.round().max(0.0) as usize).min(w - 1);
            let sy = (gy.round().max(0.0) as usize).min(h - 1);
            if img.selected(sx, sy) {
                seeds.push((sx, sy));
            } else if let Some(p) = nearest_in_cell(img, gx, gy, half) {
                seeds.push(p);
            }
            gx += step;
        }
        gy += step;
    }

    let gradient = |x: usize, y: usize| {
        let at = |xx: usize, yy: usize| lab[yy * w + xx];
        let l = at(x.saturating_sub(1), y);
        let r = at((x + 1).min(w - 1), y);
        let u = at(x, y.saturating_sub(1));
        let d = at(x, (y + 1).min(h - 1));
        l.distance_sq(&r) + u.distance_sq(&d)
    };

    let mut taken = vec![false; w * h];
    let mut centers = Vec::with_capacity(seeds.len());
    for (sx, sy) in seeds {
        let mut best = (sx, sy);
        let mut best_g = gradient(sx, sy);
        for ny in sy.saturating_sub(1)..=(sy + 1).min(h - 1) {
            for nx in sx.saturating_sub(1)..=(sx + 1).min(w - 1) {
                if img.selected(nx, ny) {
                    let g = gradient(nx, ny);
                    if g < best_g {
                        best_g = g;
                        best = (nx, ny);
                    }
                }
            }
        }
        let idx = best.1 * w + best.0;
        if taken[idx] {
            continue;
        }
        taken[idx] = true;
        centers.push(Center { lab: lab[idx], x: best.0 as f64, y: best.1 as f64 });
    }

    if centers.is_empty() {
        let idx = img.mask().iter().position(|&m| m).expect("mask is non-empty");
        centers.push(Center { lab: lab[idx], x: (idx % w) as f64, y: (idx / w) as f64 });
    }
    centers
}

fn nearest_in_cell(img: &MaskedImage, gx: f64, gy: f64, half: f64) -> Option<(usize, usize)> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let x0 = (gx - half).floor().max(0.0) as usize;
    let x1 = (gx + half).ceil().min(w - 1.0) as usize;
    let y0 = (gy - half).floor().max(0.0) as usize;
    let y1 = (gy + half).ceil().min(h - 1.0) as usize;
    let mut best: Option<((usize, usize), f64)> = None;
    for y in y0..=y1 {
        for x in x0..=x1 {
            if img.selected(x, y) {
                let d = (x as f64 - gx).powi(2) + (y as f64 - gy).powi(2);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some(((x, y), d));
                }
            }
        }
    }
    best.map(|(p, _)| p)
}

/// Relabels 4-connected components. Each label keeps its largest component if
/// that component has at least `min_size` pixels; every other fragment is
/// absorbed by the adjacent segment with the closest mean Lab color. Fragments
/// with no masked neighbours become their own segments.
fn enforce_connectivity(
    img: &MaskedImage,
    lab: &[LabColor],
    labels: &[Option<usize>],
    min_size: usize,
) -> Vec<Option<usize>> {
    let (w, h) = (img.width(), img.height());
    let mut component = vec![usize::MAX; w * h];
    // (label, pixel count, lab sums)
    let mut comps: Vec<(usize, usize, [f64; 3])> = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..w * h {
        let Some(label) = labels[start] else { continue };
        if component[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut count = 0;
        let mut sum = [0.0; 3];
        component[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            count += 1;
            sum[0] += lab[i].l;
            sum[1] += lab[i].a;
            sum[2] += lab[i].b;
            for n in neighbours(i, w, h) {
                if component[n] == usize::MAX && labels[n] == Some(label) {
                    component[n] = id;
                    queue.push_back(n);
                }
            }
        }
        comps.push((label, count, sum));
    }

    let n_labels = comps.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let mut largest: Vec<Option<usize>> = vec![None; n_labels];
    for (id, c) in comps.iter().enumerate() {
        if largest[c.0].is_none_or(|b| comps[b].1 < c.1) {
            largest[c.0] = Some(id);
        }
    }
    let keep: Vec<bool> = comps
        .iter()
        .enumerate()
        .map(|(id, c)| largest[c.0] == Some(id) && c.1 >= min_size)
        .collect();

    // Adjacency between components.
    let mut adjacent: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
    for i in 0..w * h {
        let ci = component[i];
        if ci == usize::MAX {
            continue;
        }
        for n in neighbours(i, w, h) {
            let cn = component[n];
            if cn != usize::MAX && cn != ci && !adjacent[ci].contains(&cn) {
                adjacent[ci].push(cn);
            }
        }
    }

    // Union-find; each group tracks its pixel count and Lab sums.
    let mut parent: Vec<usize> = (0..comps.len()).collect();
    let mut group: Vec<(usize, [f64; 3])> = comps.iter().map(|c| (c.1, c.2)).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    // Smallest fragments first so they attach to substantial neighbours.
    let mut order: Vec<usize> = (0..comps.len()).filter(|&c| !keep[c]).collect();
    order.sort_by_key(|&c| (comps[c].1, c));
    for c in order {
        let root = find(&mut parent, c);
        let mean = |g: &(usize, [f64; 3])| {
            let n = g.0 as f64;
            LabColor::new(g.1[0] / n, g.1[1] / n, g.1[2] / n)
        };
        let own = mean(&group[root]);
        let mut best: Option<(usize, f64)> = None;
        for &n in &adjacent[c] {
            let r = find(&mut parent, n);
            if r == root {
                continue;
            }
            let d = own.distance_sq(&mean(&group[r]));
            if best.is_none_or(|(br, bd)| d < bd || (d == bd && r < br)) {
                best = Some((r, d));
            }
        }
        if let Some((target, _)) = best {
            parent[root] = target;
            let (count, sum) = group[root];
            let g = &mut group[target];
            g.0 += count;
            for k in 0..3 {
                g.1[k] += sum[k];
            }
        }
    }

    // Final ids follow first appearance in scan order.
    let mut final_id = vec![usize::MAX; comps.len()];
    let mut next = 0;
    let mut out = vec![None; w * h];
    for i in 0..w * h {
        let c = component[i];
        if c == usize::MAX {
            continue;
        }
        let r = find(&mut parent, c);
        if final_id[r] == usize::MAX {
            final_id[r] = next;
            next += 1;
        }
        out[i] = Some(final_id[r]);
    }
    out
}

fn neighbours(i: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (i % w, i / w);
    let left = (x > 0).then(|| i - 1);
    let right = (x + 1 < w).then(|| i + 1);
    let up = (y > 0).then(|| i - w);
    let down = (y + 1 < h).then(|| i + w);
    [left, right, up, down].into_iter().flatten()
}

fn summarize(img: &MaskedImage, labels: &[Option<usize>]) -> Vec<SuperpixelSummary> {
    let n = labels.iter().flatten().map(|&l| l + 1).max().unwrap_or(0);
    let mut sums = vec![([0u64; 3], 0usize); n];
    for (px, label) in img.pixels().iter().zip(labels) {
        if let Some(l) = label {
            let s = &mut sums[*l];
            s.0[0] += u64::from(px.r);
            s.0[1] += u64::from(px.g);
            s.0[2] += u64::from(px.b);
            s.1 += 1;
        }
    }
    sums.into_iter()
        .enumerate()
        .map(|(id, (rgb, count))| {
            let avg = |v: u64| ((v as f64) / count as f64).round() as u8;
            let mean_color = SrgbColor::new(avg(rgb[0]), avg(rgb[1]), avg(rgb[2]));
            SuperpixelSummary { id, mean_color, mean_lab: srgb_to_lab(mean_color), pixel_count: count }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::ciede2000;

    #[test]
    fn uniform_red() {
        let red = SrgbColor::new(255, 0, 0);
        let img = MaskedImage::unmasked(16, 16, vec![red; 256]).unwrap();
        let params = SlicParams { n_target: 4, ..Default::default() };
        let sp = slic_superpixels(&img, &params).unwrap();
        assert!(!sp.is_empty());
        assert!(sp.iter().all(|s| s.mean_color == red));
        assert_eq!(sp.iter().map(|s| s.pixel_count).sum::<usize>(), 256);
    }

    #[test]
    fn single_pixel_mask() {
        let mut mask = vec![false; 100];
        mask[37] = true;
        let img = MaskedImage::new(10, 10, vec![SrgbColor::new(9, 9, 9); 100], mask).unwrap();
        let params = SlicParams { n_target: 1000, ..Default::default() };
        let seg = slic_segmentation(&img, &params).unwrap();
        assert_eq!(seg.summaries.len(), 1);
        assert_eq!(seg.summaries[0].pixel_count, 1);
        assert_eq!(seg.labels.iter().flatten().count(), 1);
        assert_eq!(seg.labels[37], Some(0));
    }

    #[test]
    fn green_blue_halves_stay_pure() {
        let green = SrgbColor::new(0, 255, 0);
        let blue = SrgbColor::new(0, 0, 255);
        let mut pixels = Vec::with_capacity(64 * 64);
        for _y in 0..64 {
            for x in 0..64 {
                pixels.push(if x < 32 { green } else { blue });
            }
        }
        let img = MaskedImage::unmasked(64, 64, pixels).unwrap();
        let params = SlicParams { n_target: 16, ..Default::default() };
        let seg = slic_segmentation(&img, &params).unwrap();

        // brute force: every label's pixel set must be single-colored
        for s in &seg.summaries {
            let members: Vec<SrgbColor> = seg
                .labels
                .iter()
                .zip(img.pixels())
                .filter(|(l, _)| **l == Some(s.id))
                .map(|(_, &p)| p)
                .collect();
            assert_eq!(members.len(), s.pixel_count);
            let first = members[0];
            assert!(members.iter().all(|&p| p == first), "superpixel {} mixes colors", s.id);
            let d_green = ciede2000(s.mean_lab, green.to_lab());
            let d_blue = ciede2000(s.mean_lab, blue.to_lab());
            assert!(d_green.min(d_blue) <= 2.0);
        }
    }

    #[test]
    fn masked_out_pixels_are_unlabelled() {
        let mut mask = vec![false; 20 * 20];
        for y in 5..15 {
            for x in 3..12 {
                mask[y * 20 + x] = true;
            }
        }
        let img = MaskedImage::new(20, 20, vec![SrgbColor::new(1, 2, 3); 400], mask.clone()).unwrap();
        let params = SlicParams { n_target: 9, ..Default::default() };
        let seg = slic_segmentation(&img, &params).unwrap();
        for (l, m) in seg.labels.iter().zip(&mask) {
            assert_eq!(l.is_some(), *m);
        }
        assert_eq!(seg.summaries.iter().map(|s| s.pixel_count).sum::<usize>(), 90);
    }

    #[test]
    fn rejects_bad_params() {
        let img = MaskedImage::unmasked(2, 2, vec![SrgbColor::default(); 4]).unwrap();
        let params = SlicParams { n_target: 0, ..Default::default() };
        assert!(slic_superpixels(&img, &params).is_err());
    }
}
