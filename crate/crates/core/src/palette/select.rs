use super::{ColorCluster, PaletteQuery, MAX_PALETTE_COLORS};

// Slack for the cumulative ratio comparison; ratios are sums of pixel fractions.
const CUM_TOLERANCE: f64 = 1e-9;

/// Walks clusters from largest to smallest area ratio and keeps a cluster when
/// its own ratio is at least `theta_min`, the kept total including it stays
/// within `theta_cum`, and fewer than `max_colors` have been kept.
pub fn select_palette(clusters: &[ColorCluster], theta_min: f64, theta_cum: f64, max_colors: usize) -> PaletteQuery {
    let mut order: Vec<&ColorCluster> = clusters.iter().collect();
    order.sort_by(|a, b| {
        b.area_ratio
            .total_cmp(&a.area_ratio)
            .then_with(|| a.members.first().cmp(&b.members.first()))
    });

    let cap = max_colors.min(MAX_PALETTE_COLORS);
    let mut cumulative = 0.0;
    let mut colors = Vec::new();
    for c in order {
        if colors.len() >= cap {
            break;
        }
        if c.area_ratio >= theta_min && cumulative + c.area_ratio <= theta_cum + CUM_TOLERANCE {
            cumulative += c.area_ratio;
            colors.push(c.representative.to_srgb());
        }
    }
    PaletteQuery::new(colors).expect("capped at five colors")
}
