//! Walks on a refined packing, watched only on the original vertices with
//! repeats collapsed, against walks on the reduced network.
//!
//!     cargo run --release --example coupling -- 100000

use std::collections::BTreeSet;

use cpwalk::network::dubejko_weights;
use cpwalk::packing::{build_hexagonal, refine_face};
use cpwalk::walk::coupling_experiment;
use cpwalk::VertexId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let samples: u64 = std::env::args().nth(1).map_or(Ok(100_000), |s| s.parse())?;
    let base = build_hexagonal(4, 1.0)?;
    let (refined, report) = refine_face(&base, [VertexId(0), VertexId(1), VertexId(2)], 4)?;
    let fine = dubejko_weights(&refined)?;
    let chain: BTreeSet<VertexId> = report.chain_ids.iter().copied().collect();
    let reduced = fine.censor_set(&chain)?.delete_loops()?;
    let retained: BTreeSet<VertexId> = reduced.ids().collect();

    let hops = base.hop_distances(base.index_of(VertexId(0)).expect("centre"));
    let targets: BTreeSet<VertexId> = (0..base.len())
        .filter(|&i| hops[i] == Some(4))
        .map(|i| base.circle_at(i).id)
        .filter(|v| reduced.contains(*v))
        .collect();

    let r = coupling_experiment(
        &fine,
        &reduced,
        VertexId(0),
        &retained,
        &targets,
        3,
        samples,
        1,
    )?;
    println!(
        "exit law: TV {:.4}, chi2 {:.2} on {} dof, p = {:.3}",
        r.exit.total_variation, r.exit.chi_square, r.exit.degrees_of_freedom, r.exit.p_value
    );
    println!(
        "first 3 moves: TV {:.4}, p = {:.3}",
        r.prefix_comparison.total_variation, r.prefix_comparison.p_value
    );
    for (v, n) in r.censored_exit.iter().take(6) {
        println!(
            "  exit {v}: {n} censored vs {} direct",
            r.direct_exit.get(v).copied().unwrap_or(0)
        );
    }
    Ok(())
}
