//! Dirichlet energies of the annulus test function and of averages of
//! nested annuli, against the 160π budget.
//!
//!     cargo run --release --example energy_certificates

use std::f64::consts::PI;

use cpwalk::network::{
    annulus_test_function, averaged_test_function, carrier_inradius, dubejko_weights,
};
use cpwalk::packing::build_hexagonal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let packing = build_hexagonal(190, 1.0)?;
    let net = dubejko_weights(&packing)?;
    println!(
        "carrier covers radius {:.1} about the origin",
        carrier_inradius(&packing)
    );
    for r in [5.0, 10.0, 20.0, 40.0] {
        let f = annulus_test_function(&packing, r)?;
        println!(
            "annulus R = {r:>4}: E = {:.4}  (bound {:.1})",
            net.dirichlet_energy(&f),
            160.0 * PI
        );
    }
    for n in [1, 2, 4] {
        let g = averaged_test_function(&packing, n)?;
        let radii: Vec<String> = g.radii.iter().map(|r| format!("{r:.1}")).collect();
        println!(
            "average of {n}: E = {:.4} < {:.1}, radii [{}]",
            net.dirichlet_energy(&g.function),
            160.0 * PI / n as f64,
            radii.join(", ")
        );
    }
    Ok(())
}
