//! Generate a planted-concept bundle, write it to disk, reload it, and check
//! that raw `va` nearest neighbors already find each record's image.
//!
//! ```bash
//! cargo run --example synthetic_bundle -- /tmp/bundle
//! ```

use palette_search::dataset::{generate_synthetic, load_bundle, Channel, SynthConfig};

fn main() -> palette_search::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("synthetic_bundle"));
    let config = SynthConfig { n_records: 220, n_concepts: 20, neighbor_pairs: 4, seed: 7, ..Default::default() };
    let bundle = generate_synthetic(&config)?;
    bundle.save(&out)?;
    let reloaded = load_bundle(&out)?;
    assert_eq!(reloaded, bundle);

    let (txt, va) = (bundle.matrix(Channel::Txt), bundle.matrix(Channel::Va));
    let hits = (0..bundle.num_records())
        .filter(|&i| {
            let dist = |j: usize| txt.row(i).iter().zip(va.row(j)).map(|(x, y)| (x - y) * (x - y)).sum::<f32>();
            let best = (0..va.rows()).min_by(|&a, &b| dist(a).total_cmp(&dist(b)));
            best == Some(bundle.manifest[i].target_image_index)
        })
        .count();

    println!("bundle at {}", out.display());
    println!("{} records, {} confidences", bundle.num_records(), bundle.confidences.len());
    println!("first record: {:?}", bundle.manifest[0]);
    println!("raw txt->va top-1: {hits}/{}", bundle.num_records());
    Ok(())
}
