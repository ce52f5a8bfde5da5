//! C_eff(centre ↔ ring R) on a hexagonal ball. Resistance grows like
//! log R, which is what recurrence of the walk looks like at finite size.
//!
//!     cargo run --release --example recurrence_scaling -- plot.svg

use cpwalk::cli::ring_conductances;
use cpwalk::network::dubejko_weights;
use cpwalk::packing::build_hexagonal;
use cpwalk::report::{affine_fit, line_plot_svg};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rings = [8u32, 16, 32, 64, 128];
    let packing = build_hexagonal(128, 1.0)?;
    let net = dubejko_weights(&packing)?;
    let centre = packing.index_of(0.into()).expect("centre");
    let c = ring_conductances(&packing, &net, centre, &rings)?;

    let points: Vec<(f64, f64)> = rings
        .iter()
        .zip(&c)
        .map(|(&r, &c)| ((r as f64).ln(), 1.0 / c))
        .collect();
    println!("{:>5} {:>10} {:>10}", "R", "C_eff", "1/C_eff");
    for (r, c) in rings.iter().zip(&c) {
        println!("{r:>5} {c:>10.6} {:>10.6}", 1.0 / c);
    }
    let (a, b, rel) = affine_fit(&points);
    println!(
        "1/C_eff ~ {a:.4} + {b:.4} log R (relative residual {rel:.1e}; 1/2π = {:.4})",
        0.5 / std::f64::consts::PI
    );
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, line_plot_svg(&points, "log R", "1/C_eff"))?;
        println!("wrote {path}");
    }
    Ok(())
}
