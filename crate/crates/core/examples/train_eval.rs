//! Build confidences with the mock provider, train for a few epochs and
//! evaluate on the test split.
//!
//! ```bash
//! cargo run --release --example train_eval -- 8
//! ```

use palette_search::crc::{build_confidences, MockProvider};
use palette_search::dataset::{generate_synthetic, Split, SynthConfig};
use palette_search::nn::{FusionParameters, ModelConfig};
use palette_search::train::{evaluate, model_config_for, prepare_z, train_from, AdamConfig, TrainConfig};

fn main() -> palette_search::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let synth = SynthConfig { n_records: 352, n_concepts: 16, neighbor_pairs: 2, ..Default::default() };
    let mut bundle = generate_synthetic(&synth)?;
    bundle.confidences = build_confidences(&bundle, &MockProvider::new(&bundle, &synth.neighbor_list()), 30, 8)?;
    let z = prepare_z(&bundle, 30, 0.5)?;
    println!("|Z| = {}", z.len());

    let config = TrainConfig {
        optimizer: AdamConfig { lr: 5e-4, ..Default::default() },
        epochs,
        model: model_config_for(&bundle, &ModelConfig { d: 64, heads: 8, depth: 2, ..Default::default() })?,
        ..Default::default()
    };
    let init = FusionParameters::init(&config.model)?;
    let before = evaluate(&init, &bundle, Split::Test, &[1, 10])?;
    let outcome = train_from(init, &bundle, &z, &config, |e| {
        println!("epoch {:>2}  loss {:8.3}  val r@1 {:.3}  mrr {:.3}", e.epoch, e.train_loss, e.val_recall1, e.val_mrr)
    })?;
    let after = evaluate(&outcome.best, &bundle, Split::Test, &[1, 10])?;
    for (label, r) in [("init", &before), ("trained", &after)] {
        println!("{label:>8}: mrr {:.3}  r@1 {:.3}  r@10 {:.3}", r.mrr, r.recall(1).unwrap(), r.recall(10).unwrap());
    }
    println!("best epoch {}", outcome.best_epoch);
    Ok(())
}
