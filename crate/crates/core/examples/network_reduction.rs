//! Censoring a vertex out of a small network: weights gain
//! c_xw c_yw / (π(w) − c_ww), loops appear, π and terminal conductances stay.
//!
//!     cargo run --example network_reduction

use std::collections::BTreeSet;

use cpwalk::network::WeightedNetwork;
use cpwalk::VertexId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = VertexId;
    // a square with one diagonal and a loop
    let net = WeightedNetwork::from_edges([
        (v(0), v(1), 1.0),
        (v(1), v(2), 2.0),
        (v(2), v(3), 1.0),
        (v(3), v(0), 3.0),
        (v(1), v(3), 0.5),
        (v(1), v(1), 0.25),
    ])?;
    let reduced = net.censor_set(&BTreeSet::from([v(1), v(3)]))?;
    for (a, b, c) in reduced.weighted_edges() {
        println!("{a}-{b}: {c:.6}");
    }
    for x in reduced.ids() {
        println!(
            "pi({x}) = {:.6} before, {:.6} after",
            net.pi(x),
            reduced.pi(x)
        );
    }
    let target = BTreeSet::from([v(2)]);
    println!(
        "C_eff(0 <-> 2): {:.12} before, {:.12} after",
        net.effective_conductance(v(0), &target)?,
        reduced.effective_conductance(v(0), &target)?
    );
    let plain = reduced.delete_loops()?;
    let mut out = Vec::new();
    plain.to_json(&mut out)?;
    println!("{}", String::from_utf8(out)?);
    Ok(())
}
