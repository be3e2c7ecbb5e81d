//! Evaluate the relaxed contrastive loss on a hand-written 3x3 similarity
//! matrix with one unlabeled positive.
//!
//! ```bash
//! cargo run --example crc_loss
//! ```

use palette_search::crc::{crc_loss, BatchPair, CrcWeights};

fn main() -> palette_search::Result<()> {
    #[rustfmt::skip]
    let s = [
        0.9, 0.3, -0.2,
        0.1, 1.0,  0.4,
        0.6, 0.0,  0.8,
    ];
    let z = [BatchPair { row: 2, col: 0, c: 1.0 }];
    let (terms, grad) = crc_loss(&s, 3, &z, CrcWeights::default())?;
    println!("positive {:.4}  unlabeled {:.4}  negative {:.4}  total {:.4}", terms.positive, terms.unlabeled, terms.negative, terms.total());
    for row in grad.chunks(3) {
        println!("dL/dS {:+.3?}", row);
    }

    let (without, _) = crc_loss(&s, 3, &[], CrcWeights::default())?;
    println!("same pair treated as a negative: total {:.4}", without.total());
    Ok(())
}
