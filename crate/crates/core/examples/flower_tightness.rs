//! The weight sum at a flower's centre creeps up to 2π as petals are added.
//!
//!     cargo run --example flower_tightness

use std::f64::consts::PI;

use cpwalk::network::dubejko_weights;
use cpwalk::packing::{build_flower, flower_petal_radius};
use cpwalk::VertexId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:>6} {:>12} {:>12} {:>10}",
        "n", "petal r", "centre sum", "gap to 2π"
    );
    for n in [3, 4, 6, 10, 30, 100, 300, 1000, 3000] {
        let net = dubejko_weights(&build_flower(n)?)?;
        let sum = net.pi(VertexId(0));
        println!(
            "{n:>6} {:>12.6} {sum:>12.8} {:>9.4}%",
            flower_petal_radius(n),
            100.0 * (2.0 * PI - sum) / (2.0 * PI)
        );
    }
    Ok(())
}
