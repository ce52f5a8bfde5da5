//! Cell polyhedra of cubic and FCC sphere packings: cubes and rhombic
//! dodecahedra, with the 3D martingale and reciprocity checks.
//!
//!     cargo run --release --example sphere_cells

use cpwalk::cli::verify_spatial;
use cpwalk::sphere3d::{cell_polyhedron, SpherePacking3D};
use cpwalk::VertexId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, packing, centre) in [
        ("cubic", SpherePacking3D::cubic(3)?, VertexId(13)),
        ("fcc", SpherePacking3D::fcc(5)?, VertexId(31)),
    ] {
        let cell = cell_polyhedron(&packing, centre)?;
        println!(
            "{name}: {} faces, surface {:.6}, volume {:.6}, first face area {:.6}",
            cell.faces.len(),
            cell.surface_area(),
            cell.volume(),
            cell.faces[0].area
        );
        print!("{}", verify_spatial(&packing)?.to_text());
    }
    Ok(())
}
