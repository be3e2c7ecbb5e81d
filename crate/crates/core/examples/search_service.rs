//! Serve a freshly initialized model over a synthetic bundle, or just run
//! a few searches in-process with `--once`.
//!
//! ```bash
//! cargo run --example search_service -- --once
//! cargo run --example search_service        # then: curl localhost:8080/api/queries
//! ```

use std::net::SocketAddr;

use palette_search::dataset::{generate_synthetic, Split, SynthConfig};
use palette_search::nn::{FusionParameters, ModelConfig};
use palette_search::palette::PaletteQuery;
use palette_search::service::{serve, warm_index, AppState, SearchRequest};
use palette_search::train::model_config_for;

#[tokio::main]
async fn main() -> palette_search::Result<()> {
    let bundle = generate_synthetic(&SynthConfig { n_records: 220, n_concepts: 20, ..Default::default() })?;
    let config = model_config_for(&bundle, &ModelConfig { d: 64, heads: 8, depth: 2, ..Default::default() })?;
    let index = warm_index(bundle, FusionParameters::init(&config)?, Split::Test)?;

    let query = &index.queries()[0];
    println!("query 0: {:?} palette {:?}", query.description_text, query.stored_palette.to_hex());
    for palette in [None, Some(PaletteQuery::from_hex(&["#ff0000"])?)] {
        let resp = index.search(&SearchRequest { query_id: 0, palette: palette.clone(), k: 3 })?;
        let top: Vec<_> = resp.results.iter().map(|r| format!("{} ({:.3})", r.image_id, r.score)).collect();
        println!("  palette {:?}: {} in {:.2} ms", palette.map(|p| p.to_hex()), top.join(", "), resp.timing_ms);
    }

    if std::env::args().any(|a| a == "--once") {
        return Ok(());
    }
    serve(AppState::new(index, None), SocketAddr::from(([127, 0, 0, 1], 8080)), None).await?;
    Ok(())
}
