//! Run both fusion branches on one record and see how the palette moves
//! the text embedding.
//!
//! ```bash
//! cargo run --example fusion_forward
//! ```

use palette_search::dataset::{generate_synthetic, Channel, SynthConfig};
use palette_search::nn::{similarity, FusionParameters, ModelConfig};
use palette_search::palette::PaletteQuery;
use palette_search::train::model_config_for;

fn main() -> palette_search::Result<()> {
    let bundle = generate_synthetic(&SynthConfig { n_records: 33, n_concepts: 3, default_dim: 32, ..Default::default() })?;
    let config = model_config_for(&bundle, &ModelConfig { d: 64, heads: 8, depth: 2, ..Default::default() })?;
    let params = FusionParameters::<f32>::init(&config)?;
    println!("{} parameters", params.num_parameters());

    let text = Channel::TEXT.map(|ch| bundle.matrix(ch).row(0));
    let visual = Channel::VISUAL.map(|ch| bundle.matrix(ch).row(bundle.manifest[0].target_image_index));
    let v = params.fuse_visual(visual)?;

    let stored = &bundle.manifest[0].palette;
    for (label, palette) in [
        ("stored", stored.clone()),
        ("empty", PaletteQuery::empty()),
        ("edited", PaletteQuery::from_hex(&["#101010", "#00ffaa"])?),
    ] {
        let t = params.fuse_text(text, &palette)?;
        println!("{label:>6} {:?}: S = {:+.4}", palette.to_hex(), similarity(&t, &v));
    }
    Ok(())
}
