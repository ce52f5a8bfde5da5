//! Walk drift on a randomly refined packing. Each interior vertex's
//! expected displacement vanishes, so the walk on centres is a martingale.
//!
//!     cargo run --example martingale -- 100 7

use cpwalk::cli::verify_planar;
use cpwalk::packing::{build_hexagonal, refine_face};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().map_or(Ok(100), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(7), |s| s.parse())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut packing = build_hexagonal(3, 1.0)?;
    for _ in 0..steps {
        let face = packing.faces()[rng.gen_range(0..packing.faces().len())].vertices;
        packing = refine_face(&packing, face, rng.gen_range(1..=3))?.0;
    }
    let smallest = packing
        .circles()
        .iter()
        .map(|c| c.radius)
        .fold(f64::INFINITY, f64::min);
    println!(
        "{} circles after {steps} refinements, smallest radius {smallest:.3e}",
        packing.len()
    );
    print!("{}", verify_planar(&packing)?.to_text());
    Ok(())
}
