//! The disc and polygon integral inequalities on random harmonic
//! functions, and corner splitting of tangential polygons.
//!
//!     cargo run --release --example integration_lemmas -- 0.4

use cpwalk::geometry::AlphaNice;
use cpwalk::harmonic::{
    disc_integral_ratio, nicify_polygon, polygon_constant, polygon_integral_check,
    predicted_split_depth, FourierHarmonic, TangentialPolygon,
};
use cpwalk::walk::sample_rng;
use nalgebra::Vector2;
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha: f64 = std::env::args().nth(1).map_or(Ok(0.4), |s| s.parse())?;
    let mut sup: f64 = 0.0;
    for i in 0..1000 {
        let mut rng = sample_rng(0, i);
        let rate = rng.gen_range(0.001..1.0);
        sup = sup.max(disc_integral_ratio(&FourierHarmonic::random(&mut rng, 10, rate)).ratio());
    }
    println!("disc: sup ratio over 1000 expansions {sup:.6} (constant 2)");

    let mut rng = sample_rng(1, 0);
    println!(
        "polygons, alpha = {alpha}, C1 = {:.2}",
        polygon_constant(alpha)
    );
    for _ in 0..5 {
        let p = TangentialPolygon::random_nice(&mut rng, alpha);
        let f = FourierHarmonic::random(&mut rng, 10, 0.7).shifted(p.incenter, 4.0 * p.inradius);
        let q = polygon_integral_check(&p, &f, alpha)?;
        println!(
            "  {} sides: lhs {:.4e}, C1*area {:.4e}, ratio {:.4}",
            p.sides(),
            q.lhs,
            q.rhs,
            q.ratio()
        );
    }

    // one thin corner, split until nice
    let p = TangentialPolygon::new(Vector2::zeros(), 1.0, vec![0.0, 2.9, 3.4])?;
    let (q, depths) = nicify_polygon(&p, alpha)?;
    for (beta, d) in p.angles.iter().zip(&depths) {
        println!(
            "corner {beta:.4} rad: split depth {d} (predicted {})",
            predicted_split_depth(*beta, alpha)
        );
    }
    println!(
        "{} sides after splitting, alpha-nice: {}",
        q.sides(),
        q.is_alpha_nice(alpha)
    );
    Ok(())
}
