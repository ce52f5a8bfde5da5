//! Dubejko weights on a hexagonal ball: every interior edge gets 1/√3.
//!
//!     cargo run --example hexagonal_weights -- 10

use cpwalk::geometry::weight_lower_bound;
use cpwalk::network::dubejko_weights;
use cpwalk::packing::build_hexagonal;
use cpwalk::VertexId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let radius: u32 = std::env::args().nth(1).map_or(Ok(10), |s| s.parse())?;
    let packing = build_hexagonal(radius, 1.0)?;
    let net = dubejko_weights(&packing)?;
    println!(
        "{} circles, {} weighted edges",
        packing.len(),
        net.edge_count()
    );

    let (lo, hi) = net
        .weighted_edges()
        .fold((f64::INFINITY, 0.0f64), |(l, h), (_, _, c)| {
            (l.min(c), h.max(c))
        });
    println!("weights in [{lo:.16}, {hi:.16}]");
    println!("1/sqrt(3)     = {:.16}", 1.0 / 3f64.sqrt());
    println!("lower bound M=1 {:.16}", weight_lower_bound(1.0));
    println!(
        "pi(centre)    = {:.16} (6/sqrt(3) = {:.16})",
        net.pi(VertexId(0)),
        6.0 / 3f64.sqrt()
    );

    // the exported format
    let mut json = Vec::new();
    dubejko_weights(&build_hexagonal(1, 1.0)?)?.to_json(&mut json)?;
    println!("R=1 network: {}", String::from_utf8_lossy(&json));
    Ok(())
}
