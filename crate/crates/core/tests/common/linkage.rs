//! Brute-force average-linkage oracle.
//!
//! Recomputes every inter-cluster distance from its definition (mean of all
//! member-pair CIEDE2000 distances) at every step and explores every merge
//! that is within `AMBIGUITY` of the minimum, so floating-point near-ties
//! cannot make the oracle disagree with a correct implementation by accident.

use std::collections::BTreeSet;

use palette_search::color::{ciede2000, LabColor};
use palette_search::palette::SuperpixelSummary;

pub const AMBIGUITY: f64 = 1e-9;

pub type Partition = BTreeSet<Vec<usize>>;

fn linkage(a: &[usize], b: &[usize], labs: &[LabColor]) -> f64 {
    let mut sum = 0.0;
    for &i in a {
        for &j in b {
            sum += ciede2000(labs[i], labs[j]);
        }
    }
    sum / (a.len() * b.len()) as f64
}

/// Every partition reachable by an admissible merge sequence, plus whether
/// any step was ambiguous.
pub fn reachable_partitions(summaries: &[SuperpixelSummary], theta: f64) -> (BTreeSet<Partition>, bool) {
    let labs: Vec<LabColor> = summaries.iter().map(|s| s.mean_lab).collect();
    let mut search = Search { theta, labs: &labs, seen: BTreeSet::new(), out: BTreeSet::new(), ambiguous: false };
    search.explore((0..labs.len()).map(|i| vec![i]).collect());
    (search.out, search.ambiguous)
}

struct Search<'a> {
    theta: f64,
    labs: &'a [LabColor],
    /// Partitions already expanded; bounds the work by the number of
    /// partitions of at most eight points.
    seen: BTreeSet<Vec<Vec<usize>>>,
    out: BTreeSet<Partition>,
    ambiguous: bool,
}

impl Search<'_> {
    fn explore(&mut self, clusters: Vec<Vec<usize>>) {
        if !self.seen.insert(clusters.clone()) {
            return;
        }
        let mut pairs = Vec::new();
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                pairs.push((linkage(&clusters[a], &clusters[b], self.labs), a, b));
            }
        }
        let Some(min) = pairs.iter().map(|p| p.0).min_by(f64::total_cmp) else {
            self.out.insert(clusters.into_iter().collect());
            return;
        };
        if min > self.theta + AMBIGUITY {
            self.out.insert(clusters.into_iter().collect());
            return;
        }
        if min > self.theta - AMBIGUITY {
            self.ambiguous = true;
            self.out.insert(clusters.iter().cloned().collect());
        }
        let candidates: Vec<(usize, usize)> = pairs.iter().filter(|p| p.0 <= min + AMBIGUITY).map(|p| (p.1, p.2)).collect();
        if candidates.len() > 1 {
            self.ambiguous = true;
        }
        for (a, b) in candidates {
            let mut next: Vec<Vec<usize>> =
                clusters.iter().enumerate().filter(|&(k, _)| k != a && k != b).map(|(_, c)| c.clone()).collect();
            let mut merged = [clusters[a].clone(), clusters[b].clone()].concat();
            merged.sort_unstable();
            next.push(merged);
            next.sort();
            self.explore(next);
        }
    }
}
