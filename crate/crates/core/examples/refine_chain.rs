//! Chain refinement of a face of three unit circles, checked against the
//! curvature recursion k ↦ k + 2 + 2√(2k + 1).
//!
//!     cargo run --example refine_chain -- 0.1

use cpwalk::geometry::dubejko_weight_formula;
use cpwalk::packing::{build_triangle, refine_until};
use cpwalk::VertexId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let target: f64 = std::env::args().nth(1).map_or(Ok(0.1), |s| s.parse())?;
    let tri = build_triangle(1.0, 1.0, 1.0)?;
    let (refined, report) = refine_until(&tri, [VertexId(0), VertexId(1), VertexId(2)], target)?;

    println!(
        "{:>3} {:>14} {:>14} {:>8}",
        "i", "radius", "1/curvature", "ratio"
    );
    let mut k = 1.0f64;
    let ratios = report.radius_ratios(1.0);
    for (i, r) in report.chain_radii.iter().enumerate() {
        k += 2.0 + 2.0 * (2.0 * k + 1.0).sqrt();
        println!(
            "{:>3} {r:>14.10e} {:>14.10e} {:>8.4}",
            i + 1,
            1.0 / k,
            ratios[i]
        );
    }
    println!(
        "k = {}, last two weights sum {:.6} < {target}",
        report.k, report.final_weight_sum
    );
    println!(
        "smallest new angle {:.4} rad, exempt angle {:.4} rad, {} circles, {} violations",
        report.min_new_angle,
        report.last_corner_angle,
        refined.len(),
        refined.validate().len()
    );
    // the y-side weight from radii alone, for a chain circle of radius r
    let r = *report.chain_radii.last().unwrap_or(&1.0);
    let prev = report
        .chain_radii
        .iter()
        .rev()
        .nth(1)
        .copied()
        .unwrap_or(1.0);
    println!(
        "c(v_k, y) = {:.6}",
        dubejko_weight_formula(r, 1.0, prev, 1.0)
    );
    Ok(())
}
