//! Inside a refined triangle the discrete harmonic extension of affine
//! corner data is the affine function itself.
//!
//!     cargo run --example affine_harmonic

use std::collections::BTreeMap;

use cpwalk::network::dubejko_weights;
use cpwalk::packing::{build_triangle, refine_face};
use cpwalk::VertexId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tri = build_triangle(1.0, 1.5, 2.5)?;
    let (refined, report) = refine_face(&tri, [VertexId(0), VertexId(1), VertexId(2)], 5)?;
    let net = dubejko_weights(&refined)?;
    let affine = |id: VertexId| {
        let p = refined.get(id).expect("vertex").center;
        1.0 + 0.5 * p.x - 2.0 * p.y
    };
    let boundary: BTreeMap<VertexId, f64> =
        (0..3).map(|i| (VertexId(i), affine(VertexId(i)))).collect();
    let h = net.harmonic_extend(&boundary)?;
    for v in &report.chain_ids {
        println!(
            "vertex {v}: harmonic {:.12}, affine {:.12}",
            h.get(*v),
            affine(*v)
        );
    }
    Ok(())
}
