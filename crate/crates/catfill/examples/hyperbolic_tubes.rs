//! Tubes around geodesic segments in the hyperbolic plane: both boundary
//! length and area grow linearly in the core length, which is the
//! top-dimensional linearity mechanism for neutered rank-one spaces.
//!
//! ```sh
//! cargo run -p catfill --example hyperbolic_tubes
//! ```

use catfill::fit::{fit_exponent, hyperbolic_tube};
use catfill::space::ProductSpace;

fn main() -> catfill::Result<()> {
    let (sp, _) = ProductSpace::parse("H2")?;
    let delta = 1.0f64;
    println!("delta = 1 tubes around geodesic segments in H2:");
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>12}",
        "length", "side arcs", "2l cosh 1", "strip area", "2l sinh 1"
    );
    let mut pairs = Vec::new();
    for l in [10.0, 25.0, 50.0, 100.0] {
        let tube = hyperbolic_tube(&sp, l, delta, 0.05)?;
        let len = tube.side_arcs.k_volume(&sp);
        let area = tube.strip.k_volume(&sp);
        println!(
            "{l:8.1} {len:12.4} {:12.4} {area:12.4} {:12.4}",
            2.0 * l * delta.cosh(),
            2.0 * l * delta.sinh()
        );
        pairs.push((l, area));
    }
    let est = fit_exponent(&pairs)?;
    println!("\narea-vs-length slope {:.4} (linear regime)", est.slope);
    let tube = hyperbolic_tube(&sp, 20.0, delta, 0.02)?;
    println!(
        "end caps at l=20: length {:.4} vs 2 pi sinh 1 = {:.4}",
        tube.cap_arcs.k_volume(&sp),
        2.0 * std::f64::consts::PI * delta.sinh()
    );
    Ok(())
}
