//! Monte Carlo escape probability from the centre of a hexagonal ball
//! against C_eff/π(ρ) from the linear solve.
//!
//!     cargo run --release --example escape_probability -- 12 50000

use std::collections::BTreeSet;

use cpwalk::network::dubejko_weights;
use cpwalk::packing::build_hexagonal;
use cpwalk::walk::escape_probability;
use cpwalk::VertexId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let radius: u32 = args.next().map_or(Ok(12), |s| s.parse())?;
    let samples: u64 = args.next().map_or(Ok(50_000), |s| s.parse())?;
    let packing = build_hexagonal(radius, 1.0)?;
    let net = dubejko_weights(&packing)?;
    let hops = packing.hop_distances(0);
    let ring: BTreeSet<VertexId> = (0..packing.len())
        .filter(|&i| hops[i] == Some(radius - 1))
        .map(|i| packing.circle_at(i).id)
        .collect();

    let est = escape_probability(&net, VertexId(0), &ring, samples, 3)?;
    let exact = net.effective_conductance(VertexId(0), &ring)? / net.pi(VertexId(0));
    println!(
        "escape to ring {}: MC {:.5} ± {:.5}, solve {exact:.5}",
        radius - 1,
        est.estimate,
        est.stderr
    );
    println!(
        "{} of {} walks escaped, {} hit the step cap",
        est.escaped, est.samples, est.censored
    );
    Ok(())
}
