use crate::color::{ciede2000, LabColor};

use super::SuperpixelSummary;

/// A group of superpixels produced by [`average_linkage_cluster`].
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Superpixel ids, ascending.
    pub members: Vec<usize>,
    pub pixel_count: usize,
    pub area_ratio: f64,
}

/// A cluster with its representative color.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorCluster {
    pub members: Vec<usize>,
    pub representative: LabColor,
    pub area_ratio: f64,
}

/// Agglomerative clustering with average linkage on CIEDE2000 distances.
///
/// Repeatedly merges the closest pair of clusters while their average
/// inter-cluster distance is at most `theta_cluster`. Ties go to the
/// lexicographically smallest pair of cluster slots, where a slot is the
/// smallest summary index it contains. Output is ordered by first member.
pub fn average_linkage_cluster(summaries: &[SuperpixelSummary], theta_cluster: f64) -> Vec<Cluster> {
    let n = summaries.len();
    if n == 0 {
        return Vec::new();
    }

    // Full symmetric matrix, row-major. Entries for merged clusters hold the
    // average linkage distance (Lance-Williams update for UPGMA).
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = ciede2000(summaries[i].mean_lab, summaries[j].mean_lab);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut nn = vec![usize::MAX; n];
    let mut nn_dist = vec![f64::INFINITY; n];
    // A stale entry's `nn_dist` is only a lower bound: average-linkage
    // distances after a merge are weighted means of earlier ones, so they
    // never drop below a cluster's previous nearest distance.
    let mut stale = vec![false; n];

    let nearest = |i: usize, dist: &[f64], active: &[bool]| -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for j in 0..n {
            if j != i && active[j] && dist[i * n + j] < best.1 {
                best = (j, dist[i * n + j]);
            }
        }
        best
    };

    for i in 0..n {
        (nn[i], nn_dist[i]) = nearest(i, &dist, &active);
    }

    let mut remaining = n;
    while remaining > 1 {
        let mut a = usize::MAX;
        for i in 0..n {
            if active[i] && (a == usize::MAX || nn_dist[i] < nn_dist[a]) {
                a = i;
            }
        }
        if nn_dist[a] > theta_cluster {
            break;
        }
        if stale[a] {
            (nn[a], nn_dist[a]) = nearest(a, &dist, &active);
            stale[a] = false;
            continue;
        }
        let b = nn[a];
        if b == usize::MAX {
            break;
        }
        let (keep, gone) = if a < b { (a, b) } else { (b, a) };

        active[gone] = false;
        let (sk, sg) = (size[keep] as f64, size[gone] as f64);
        for k in 0..n {
            if active[k] && k != keep {
                let d = (sk * dist[keep * n + k] + sg * dist[gone * n + k]) / (sk + sg);
                dist[keep * n + k] = d;
                dist[k * n + keep] = d;
            }
        }
        size[keep] += size[gone];
        let moved = std::mem::take(&mut members[gone]);
        members[keep].extend(moved);
        remaining -= 1;

        (nn[keep], nn_dist[keep]) = nearest(keep, &dist, &active);
        stale[keep] = false;
        for k in 0..n {
            if !active[k] || k == keep || stale[k] {
                continue;
            }
            if nn[k] == keep || nn[k] == gone {
                stale[k] = true;
            } else {
                let d = dist[k * n + keep];
                if d < nn_dist[k] || (d == nn_dist[k] && keep < nn[k]) {
                    nn[k] = keep;
                    nn_dist[k] = d;
                }
            }
        }
    }

    let total: usize = summaries.iter().map(|s| s.pixel_count).sum();
    (0..n)
        .filter(|&i| active[i])
        .map(|i| {
            let mut m = std::mem::take(&mut members[i]);
            m.sort_unstable();
            let pixel_count = m.iter().map(|&k| summaries[k].pixel_count).sum();
            Cluster { members: m, pixel_count, area_ratio: pixel_count as f64 / total as f64 }
        })
        .collect()
}

/// The member color minimizing the pixel-count weighted sum of CIEDE2000
/// distances to the other members; ties go to the lowest superpixel id.
pub fn cluster_representative(cluster: &Cluster, summaries: &[SuperpixelSummary]) -> LabColor {
    let mut best: Option<(usize, f64)> = None;
    for &s in &cluster.members {
        let cost: f64 = cluster
            .members
            .iter()
            .filter(|&&k| k != s)
            .map(|&k| summaries[k].pixel_count as f64 * ciede2000(summaries[s].mean_lab, summaries[k].mean_lab))
            .sum();
        if best.is_none_or(|(bs, bc)| cost < bc || (cost == bc && summaries[s].id < summaries[bs].id)) {
            best = Some((s, cost));
        }
    }
    summaries[best.expect("cluster has members").0].mean_lab
}
