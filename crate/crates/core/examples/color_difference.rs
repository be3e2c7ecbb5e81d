//! Convert a few sRGB colors to CIELAB and print pairwise CIEDE2000.
//!
//! ```bash
//! cargo run --example color_difference -- '#ffd3e5' '#ffffff' '#2040a0'
//! ```

use palette_search::color::{ciede2000, SrgbColor};

fn main() -> palette_search::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let hex = if args.is_empty() { vec!["#ffd3e5".into(), "#ffffff".into(), "#2040a0".into()] } else { args };
    let colors = hex.iter().map(|h| SrgbColor::from_hex(h)).collect::<Result<Vec<_>, _>>()?;

    for c in &colors {
        let lab = c.to_lab();
        println!("{}  L {:6.2}  a {:7.2}  b {:7.2}", c.to_hex(), lab.l, lab.a, lab.b);
    }
    for i in 0..colors.len() {
        for j in i + 1..colors.len() {
            let de = ciede2000(colors[i].to_lab(), colors[j].to_lab());
            println!("dE00({}, {}) = {de:.3}", colors[i].to_hex(), colors[j].to_hex());
        }
    }
    Ok(())
}
