//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! with its measured numbers (written straight to stderr so the line shows
//! up whether or not the test output is captured).

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

use palette_search::color::{ciede2000, lab_to_srgb, srgb_to_lab, LabColor, SrgbColor};
use palette_search::crc::{crc_loss, BatchPair, CrcWeights};
use palette_search::dataset::{generate_synthetic, Channel, DatasetBundle, Split, SynthConfig};
use palette_search::nn::{similarity, FusionParameters, ModelConfig};
use palette_search::palette::{average_linkage_cluster, extract_palette, PaletteConfig, PaletteQuery, SuperpixelSummary};
use palette_search::service::{warm_index, SearchRequest};
use palette_search::train::{
    evaluate, model_config_for, mrr, prepare_z, rank, recall_at_k, train, AdamConfig, EvalReport, LossMode, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::gradcheck;
use common::linkage::reachable_partitions;
use common::planted::planted_image;

fn report(name: &str, pass: bool, elapsed: Duration, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("{verdict} {name}: {detail} [{:.2} s]\n", elapsed.as_secs_f64());
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

fn finish(name: &str, started: Instant, budget: Duration, failures: Vec<String>, detail: String) {
    let elapsed = started.elapsed();
    let mut failures = failures;
    if elapsed > budget {
        failures.push(format!("took {:.1} s, budget {:.0} s", elapsed.as_secs_f64(), budget.as_secs_f64()));
    }
    let detail = if failures.is_empty() { detail } else { format!("{detail}; {}", failures.join("; ")) };
    report(name, failures.is_empty(), elapsed, &detail);
    assert!(failures.is_empty(), "{name}: {detail}");
}

/// The 34 reference pairs of Sharma, Wu and Dalal (2005): L1 a1 b1 L2 a2 b2 ΔE00.
/// Cross-checked against scikit-image's `deltaE_ciede2000` (max |diff| 5e-5,
/// the table's rounding).
#[rustfmt::skip]
const CIEDE2000_PAIRS: [[f64; 7]; 34] = [
    [50.0000, 2.6772, -79.7751, 50.0000, 0.0000, -82.7485, 2.0425],
    [50.0000, 3.1571, -77.2803, 50.0000, 0.0000, -82.7485, 2.8615],
    [50.0000, 2.8361, -74.0200, 50.0000, 0.0000, -82.7485, 3.4412],
    [50.0000, -1.3802, -84.2814, 50.0000, 0.0000, -82.7485, 1.0000],
    [50.0000, -1.1848, -84.8006, 50.0000, 0.0000, -82.7485, 1.0000],
    [50.0000, -0.9009, -85.5211, 50.0000, 0.0000, -82.7485, 1.0000],
    [50.0000, 0.0000, 0.0000, 50.0000, -1.0000, 2.0000, 2.3669],
    [50.0000, -1.0000, 2.0000, 50.0000, 0.0000, 0.0000, 2.3669],
    [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0009, 7.1792],
    [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0010, 7.1792],
    [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0011, 7.2195],
    [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0012, 7.2195],
    [50.0000, -0.0010, 2.4900, 50.0000, 0.0009, -2.4900, 4.8045],
    [50.0000, -0.0010, 2.4900, 50.0000, 0.0010, -2.4900, 4.8045],
    [50.0000, -0.0010, 2.4900, 50.0000, 0.0011, -2.4900, 4.7461],
    [50.0000, 2.5000, 0.0000, 50.0000, 0.0000, -2.5000, 4.3065],
    [50.0000, 2.5000, 0.0000, 73.0000, 25.0000, -18.0000, 27.1492],
    [50.0000, 2.5000, 0.0000, 61.0000, -5.0000, 29.0000, 22.8977],
    [50.0000, 2.5000, 0.0000, 56.0000, -27.0000, -3.0000, 31.9030],
    [50.0000, 2.5000, 0.0000, 58.0000, 24.0000, 15.0000, 19.4535],
    [50.0000, 2.5000, 0.0000, 50.0000, 3.1736, 0.5854, 1.0000],
    [50.0000, 2.5000, 0.0000, 50.0000, 3.2972, 0.0000, 1.0000],
    [50.0000, 2.5000, 0.0000, 50.0000, 1.8634, 0.5757, 1.0000],
    [50.0000, 2.5000, 0.0000, 50.0000, 3.2592, 0.3350, 1.0000],
    [60.2574, -34.0099, 36.2677, 60.4626, -34.1751, 39.4387, 1.2644],
    [63.0109, -31.0961, -5.8663, 62.8187, -29.7946, -4.0864, 1.2630],
    [61.2901, 3.7196, -5.3901, 61.4292, 2.2480, -4.9620, 1.8731],
    [35.0831, -44.1164, 3.7933, 35.0232, -40.0716, 1.5901, 1.8645],
    [22.7233, 20.0904, -46.6940, 23.0331, 14.9730, -42.5619, 2.0373],
    [36.4612, 47.8580, 18.3852, 36.2715, 50.5065, 21.2231, 1.4146],
    [90.8027, -2.0831, 1.4410, 91.1528, -1.6435, 0.0447, 1.4441],
    [90.9257, -0.5406, -0.9208, 88.6381, -0.8985, -0.7239, 1.5381],
    [6.7747, -0.2908, -2.4247, 5.8714, -0.0985, -2.2286, 0.6377],
    [2.0776, 0.0795, -1.1350, 0.9033, -0.0636, -0.5514, 0.9082],
];

#[test]
fn color_math() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut worst_de = 0.0f64;
    for (k, p) in CIEDE2000_PAIRS.iter().enumerate() {
        let d = ciede2000(LabColor::new(p[0], p[1], p[2]), LabColor::new(p[3], p[4], p[5]));
        let d_rev = ciede2000(LabColor::new(p[3], p[4], p[5]), LabColor::new(p[0], p[1], p[2]));
        let err = (d - p[6]).abs().max((d_rev - p[6]).abs());
        worst_de = worst_de.max(err);
        if err > 1e-4 {
            failures.push(format!("pair {}: {d:.6} vs {}", k + 1, p[6]));
        }
    }
    let mut worst_channel = 0i32;
    let grid: Vec<u8> = (0..=255).step_by(3).collect();
    for &r in &grid {
        for &g in &grid {
            for &b in &grid {
                let c = SrgbColor::new(r, g, b);
                let back = lab_to_srgb(srgb_to_lab(c));
                let diff = [(c.r, back.r), (c.g, back.g), (c.b, back.b)]
                    .iter()
                    .map(|&(x, y)| (x as i32 - y as i32).abs())
                    .max()
                    .unwrap();
                worst_channel = worst_channel.max(diff);
            }
        }
    }
    if worst_channel > 1 {
        failures.push(format!("round trip off by {worst_channel}"));
    }
    let detail = format!(
        "34 reference pairs, max |dE00 error| {worst_de:.2e}; sRGB->Lab->sRGB on {} colors, max channel error {worst_channel}",
        grid.len().pow(3)
    );
    finish("color-math", started, Duration::from_secs(1), failures, detail);
}

#[test]
fn palette_pipeline_recovers_planted_colors() {
    let started = Instant::now();
    let config = PaletteConfig::default();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut ks = [0usize; 6];
    for seed in 0..50 {
        let planted = planted_image(seed);
        ks[planted.colors.len()] += 1;
        let palette = extract_palette(&planted.image, &config).unwrap();
        if palette.len() != planted.colors.len() {
            failures.push(format!("seed {seed}: {} colors for K = {}", palette.len(), planted.colors.len()));
            continue;
        }
        for (got, want) in palette.colors().iter().zip(&planted.colors) {
            let de = ciede2000(got.to_lab(), want.to_lab());
            worst = worst.max(de);
            if de > 3.0 {
                failures.push(format!("seed {seed}: {} vs planted {} (dE00 {de:.2})", got.to_hex(), want.to_hex()));
            }
        }
    }
    let detail = format!(
        "50 images (K=1..5: {:?}), exact K and descending-area order in {} cases, max dE00 {worst:.3}",
        &ks[1..],
        50 - failures.len().min(50)
    );
    finish("palette-pipeline", started, Duration::from_secs(30), failures, detail);
}

fn random_summaries(rng: &mut ChaCha8Rng, n: usize) -> Vec<SuperpixelSummary> {
    // A few centers with jitter gives real merge decisions; coarse
    // quantization on some instances produces exact ties.
    let centers: Vec<[f64; 3]> = (0..rng.random_range(1..=3))
        .map(|_| [rng.random_range(20.0..80.0), rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)])
        .collect();
    let spread = rng.random_range(1.0..25.0);
    let quantum = if rng.random_bool(0.25) { 10.0 } else { 0.0 };
    (0..n)
        .map(|id| {
            let c = centers[rng.random_range(0..centers.len())];
            let mut lab = [0.0; 3];
            for k in 0..3 {
                let v = c[k] + rng.random_range(-spread..spread);
                lab[k] = if quantum > 0.0 { (v / quantum).round() * quantum } else { v };
            }
            let mean_lab = LabColor::new(lab[0], lab[1], lab[2]);
            SuperpixelSummary { id, mean_color: mean_lab.to_srgb(), mean_lab, pixel_count: rng.random_range(1..50) }
        })
        .collect()
}

#[test]
fn clustering_matches_brute_force_oracle() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let (mut instances, mut ambiguous_count) = (0, 0);
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for n in 1..=8 {
            let summaries = random_summaries(&mut rng, n);
            let theta = [0.0, 5.0, 12.0, 20.0, 35.0, 1e9][rng.random_range(0..6)];
            let clusters = average_linkage_cluster(&summaries, theta);
            instances += 1;

            let got: BTreeSet<Vec<usize>> = clusters.iter().map(|c| c.members.clone()).collect();
            let (reachable, ambiguous) = reachable_partitions(&summaries, theta);
            ambiguous_count += ambiguous as usize;
            let consistent = if ambiguous { reachable.contains(&got) } else { reachable.len() == 1 && reachable.contains(&got) };
            let firsts: Vec<usize> = clusters.iter().map(|c| c.members[0]).collect();
            let total: usize = summaries.iter().map(|s| s.pixel_count).sum();
            let ratios_ok = clusters.iter().all(|c| {
                let count: usize = c.members.iter().map(|&m| summaries[m].pixel_count).sum();
                c.pixel_count == count && (c.area_ratio - count as f64 / total as f64).abs() < 1e-12
            });
            if !consistent || !firsts.windows(2).all(|w| w[0] < w[1]) || !ratios_ok {
                failures.push(format!("seed {seed}, n {n}, theta {theta}: got {got:?}, oracle {reachable:?}"));
            }
        }
    }
    let detail = format!(
        "{instances} instances (n = 1..8, 200 seeds), {ambiguous_count} with exact or near ties resolved by exhaustive merge orders, {} mismatches",
        failures.len()
    );
    finish("clustering-oracle", started, Duration::from_secs(10), failures, detail);
}

#[test]
fn crc_loss_examples_and_gradients() {
    let started = Instant::now();
    let w = CrcWeights { lambda_up: 0.7, lambda_n: 0.7 };
    let mut failures = Vec::new();

    let identity = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let (t, _) = crc_loss(&identity, 3, &[], w).unwrap();
    if t.total().abs() > 1e-9 {
        failures.push(format!("identity: {}", t.total()));
    }
    let (t, _) = crc_loss(&[0.8, 0.5, -0.2, 1.0], 2, &[BatchPair { row: 0, col: 1, c: 0.5 }], w).unwrap();
    if (t.positive - 0.04).abs() > 1e-9 || t.unlabeled.abs() > 1e-9 || t.negative.abs() > 1e-9 || (t.total() - 0.04).abs() > 1e-9 {
        failures.push(format!("0.04 case: {t:?}"));
    }
    let (t, _) = crc_loss(&[1.0, 0.9, 0.0, 1.0], 2, &[], w).unwrap();
    if (t.total() - 0.567).abs() > 1e-9 {
        failures.push(format!("0.567 case: {}", t.total()));
    }

    // The loss is piecewise quadratic, so central differences are exact up to
    // round-off as long as the step does not cross a hinge.
    let (b, h, kink) = (8, 1e-4, 1e-3);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let s: Vec<f64> = (0..b * b).map(|_| rng.random_range(-0.95..0.95)).collect();
        let mut z: Vec<BatchPair> = Vec::new();
        for _ in 0..rng.random_range(0..16) {
            let row = rng.random_range(0..b);
            let col = (row + rng.random_range(1..b)) % b;
            if !z.iter().any(|p| (p.row, p.col) == (row, col)) {
                z.push(BatchPair { row, col, c: if rng.random_bool(0.5) { 0.5 } else { 1.0 } });
            }
        }
        let (_, g) = crc_loss(&s, b, &z, w).unwrap();
        for k in 0..b * b {
            let (row, col) = (k / b, k % b);
            let hinge = match z.iter().find(|p| (p.row, p.col) == (row, col)) {
                Some(p) => p.c,
                None if row != col => 0.0,
                None => f64::INFINITY,
            };
            if (s[k] - hinge).abs() < kink {
                continue;
            }
            let (mut plus, mut minus) = (s.clone(), s.clone());
            plus[k] += h;
            minus[k] -= h;
            let numeric = (crc_loss(&plus, b, &z, w).unwrap().0.total() - crc_loss(&minus, b, &z, w).unwrap().0.total()) / (2.0 * h);
            let scale = g[k].abs().max(numeric.abs());
            let rel = if scale == 0.0 { 0.0 } else { (g[k] - numeric).abs() / scale.max(1e-8) };
            worst = worst.max(rel);
            checked += 1;
        }
    }
    if worst >= 1e-6 {
        failures.push(format!("gradient relative error {worst:.2e}"));
    }
    let detail = format!("3 worked examples within 1e-9; {checked} entries of 100 random 8x8 batches, max rel. gradient error {worst:.2e}");
    finish("crc-loss", started, Duration::from_secs(5), failures, detail);
}

#[test]
fn fusion_gradients_at_width_32() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut groups = 0;
    let colors = gradcheck::colors();
    for (seed, positions, palette) in [(11u64, false, colors.clone()), (12, true, colors), (13, false, PaletteQuery::empty())] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = gradcheck::config(32, positions);
        let p = gradcheck::jittered(&cfg, &mut rng);
        let probe = gradcheck::Probe::new(&cfg, palette.clone(), &mut rng);
        if palette.is_empty() {
            let grads = probe.gradient(&p);
            let null_moves = grads.named_tensors().iter().any(|(n, t)| n == "null_token" && t.data.iter().any(|v| *v != 0.0));
            if !null_moves {
                failures.push("empty palette leaves the null token without gradient".into());
            }
        }
        for (name, err) in gradcheck::check(&p, &probe, &mut rng) {
            groups += 1;
            worst = worst.max(err);
            if !(err < gradcheck::TOLERANCE) {
                failures.push(format!("{name}: {err:.2e}"));
            }
        }
    }
    let detail = format!("{groups} tensor checks (palette, palette positions, empty palette), max rel. error {worst:.2e}");
    finish("fusion-gradients", started, Duration::from_secs(60), failures, detail);
}

fn planted_bundle() -> DatasetBundle {
    generate_synthetic(&SynthConfig {
        n_records: 704,
        n_val: Some(64),
        n_test: Some(128),
        n_concepts: 32,
        default_dim: 64,
        noise_sigma: 0.1,
        seed: 0,
        ..Default::default()
    })
    .unwrap()
}

fn recall_ordered(r: &EvalReport) -> bool {
    r.recall(1).unwrap() <= r.recall(10).unwrap() && r.recall(10).unwrap() <= 1.0 && r.mrr >= r.recall(1).unwrap() && r.mrr <= 1.0
}

/// The reference schedule is 40 epochs of ~135 steps at lr 1e-5; ten epochs
/// of this bundle are 80 steps, so the learning rate is scaled by the step
/// ratio to keep the same total update budget.
const SCALED_LR: f64 = 1e-5 * (40.0 * 135.0) / 80.0;

#[test]
fn planted_structure_training() {
    let started = Instant::now();
    let bundle = planted_bundle();
    let z = prepare_z(&bundle, 30, 0.5).unwrap();
    let base = TrainConfig {
        optimizer: AdamConfig { lr: SCALED_LR, ..Default::default() },
        batch: 64,
        epochs: 10,
        seed: 0,
        model: model_config_for(&bundle, &ModelConfig { d: 64, heads: 8, depth: 2, ffn_mult: 4, ..Default::default() }).unwrap(),
        ..Default::default()
    };
    let runs = [
        ("crc", base.clone()),
        ("lambda_up=0", TrainConfig { weights: CrcWeights { lambda_up: 0.0, ..base.weights }, ..base.clone() }),
        ("fixed c=0.7", TrainConfig { loss: LossMode::CrcFixedC, fixed_c: 0.7, ..base.clone() }),
        ("infonce", TrainConfig { loss: LossMode::InfonceAblation, ..base.clone() }),
    ];
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    let mut main = None;
    for (label, cfg) in runs {
        let outcome = train(&bundle, &z, &cfg).unwrap();
        let r = evaluate(&outcome.best, &bundle, Split::Test, &[1, 10]).unwrap();
        if !recall_ordered(&r) {
            failures.push(format!("{label}: metric ordering violated"));
        }
        let line = format!(
            "{label}: r@1 {:.3} r@10 {:.3} mrr {:.3} (best epoch {})",
            r.recall(1).unwrap(),
            r.recall(10).unwrap(),
            r.mrr,
            outcome.best_epoch
        );
        eprintln!("  {line}");
        rows.push(line);
        if main.is_none() {
            main = Some(r);
        }
    }
    let main = main.unwrap();
    let (r1, m) = (main.recall(1).unwrap(), main.mrr);
    if r1 < 0.90 {
        failures.push(format!("crc test recall@1 {r1:.3} < 0.90"));
    }
    if m < 0.93 {
        failures.push(format!("crc test mrr {m:.3} < 0.93"));
    }
    let detail = format!("|Z| {}, lr {SCALED_LR:.2e}, 10 epochs; {}", z.len(), rows.join("; "));
    finish("planted-training", started, Duration::from_secs(600), failures, detail);
}

#[test]
fn ranking_metrics() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let m = mrr(&[1, 2, 4]).unwrap();
    if (m - 0.583333).abs() > 1e-6 || (m - 7.0 / 12.0).abs() > 1e-9 {
        failures.push(format!("mrr([1,2,4]) = {m}"));
    }
    let ranking: Vec<usize> = (0..20).collect();
    let r10 = recall_at_k(&[ranking.clone(), ranking.clone()], &[vec![0], vec![10]], 10).unwrap();
    if r10 != 0.5 {
        failures.push(format!("recall@10 with targets at ranks 1 and 11 = {r10}"));
    }
    let mut evaluations = 0;
    let bundle = generate_synthetic(&SynthConfig { n_records: 110, n_concepts: 10, default_dim: 16, seed: 5, ..Default::default() }).unwrap();
    for seed in 0..5 {
        let cfg = model_config_for(&bundle, &ModelConfig { d: 16, heads: 2, depth: 1, ffn_mult: 2, seed, ..Default::default() }).unwrap();
        let params = FusionParameters::init(&cfg).unwrap();
        for split in [Split::Train, Split::Val, Split::Test] {
            let r = evaluate(&params, &bundle, split, &[1, 10]).unwrap();
            evaluations += 1;
            if !recall_ordered(&r) {
                failures.push(format!("seed {seed} {split:?}: {r:?}"));
            }
        }
    }
    let detail = format!("mrr([1,2,4]) = {m:.9}, recall@10 = {r10}; recall@1 <= recall@10 on {evaluations} evaluations");
    finish("ranking-metrics", started, Duration::from_secs(5), failures, detail);
}

fn random_request(rng: &mut ChaCha8Rng, n: usize, queries: usize, corpus: usize) -> SearchRequest {
    let palette = match n % 3 {
        0 => None,
        1 => Some(PaletteQuery::empty()),
        _ => Some(
            PaletteQuery::new((0..rng.random_range(1..=5)).map(|_| SrgbColor::new(rng.random(), rng.random(), rng.random())).collect())
                .unwrap(),
        ),
    };
    SearchRequest { query_id: rng.random_range(0..queries), palette, k: rng.random_range(1..=corpus) }
}

#[test]
fn service_latency_and_equivalence() {
    let started = Instant::now();
    let bundle = generate_synthetic(&SynthConfig {
        n_records: 1700,
        n_val: Some(50),
        n_test: Some(1600),
        n_concepts: 100,
        default_dim: 64,
        seed: 8,
        ..Default::default()
    })
    .unwrap();
    let queries = bundle.split_indices(Split::Test);
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(21);

    // latency at full model width
    let wide = model_config_for(&bundle, &ModelConfig::default()).unwrap();
    let index = warm_index(bundle.clone(), FusionParameters::init(&wide).unwrap(), Split::Test).unwrap();
    let warm = started.elapsed();
    if index.len() != 1600 {
        failures.push(format!("index holds {} images", index.len()));
    }
    let mut slowest = Duration::ZERO;
    for n in 0..20 {
        let req = random_request(&mut rng, n, queries.len(), index.len());
        let t = Instant::now();
        let resp = index.search(&req).unwrap();
        slowest = slowest.max(t.elapsed());
        if resp.results.len() != req.k.min(index.len()) || !resp.results.windows(2).all(|w| w[0].score >= w[1].score) {
            failures.push(format!("request {n}: malformed response"));
        }
    }
    if slowest >= Duration::from_millis(800) {
        failures.push(format!("slowest search {:.1} ms", slowest.as_secs_f64() * 1e3));
    }
    drop(index);

    // equivalence against per-item forward passes, plain similarity and the shared ranking
    let narrow = model_config_for(&bundle, &ModelConfig { d: 256, ..Default::default() }).unwrap();
    let params = FusionParameters::<f32>::init(&narrow).unwrap();
    let index = warm_index(bundle.clone(), params.clone(), Split::Test).unwrap();
    let corpus = index.corpus();
    let visual: Vec<Vec<f32>> = corpus
        .iter()
        .map(|&j| params.fuse_visual(Channel::VISUAL.map(|ch| bundle.matrix(ch).row(j))).unwrap())
        .collect();
    let mut identical = 0;
    for n in 0..20 {
        let req = random_request(&mut rng, n, queries.len(), index.len());
        let resp = index.search(&req).unwrap();
        let record = queries[req.query_id];
        let palette = req.palette.clone().unwrap_or_else(|| bundle.manifest[record].palette.clone());
        let text = params.fuse_text(Channel::TEXT.map(|ch| bundle.matrix(ch).row(record)), &palette).unwrap();
        let scores: Vec<f32> = visual.iter().map(|v| similarity(&text, v)).collect();
        let expected: Vec<(usize, u32)> = rank(&scores).into_iter().take(req.k).map(|s| (corpus[s], scores[s].to_bits())).collect();
        let got: Vec<(usize, u32)> = resp.results.iter().map(|r| (r.image_index, r.score.to_bits())).collect();
        if got == expected {
            identical += 1;
        } else {
            failures.push(format!("request {n} differs from the offline pipeline"));
        }
    }
    let detail = format!(
        "1600 indexed images; width {}: warm-up {:.1} s, slowest of 20 searches {:.2} ms; width {}: {identical}/20 responses bit-identical to the offline pipeline",
        wide.d,
        warm.as_secs_f64(),
        slowest.as_secs_f64() * 1e3,
        narrow.d
    );
    // only per-search latency is bounded
    finish("search-service", started, Duration::MAX, failures, detail);
}
