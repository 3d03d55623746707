//! One cone filling in detail: flow a circle toward the boundary direction,
//! truncate at a horosphere, cap, and verify the boundary identity by exact
//! integer cancellation.
//!
//! ```sh
//! cargo run -p catfill --example cone_filling
//! ```

use catfill::chain::slice_sphere;
use catfill::cone::{cone_fill, CapStrategy, ConeParams};
use catfill::space::ProductSpace;

fn main() -> catfill::Result<()> {
    let (sp, _) = ProductSpace::parse("H2xH2")?;
    let radius = 3.0;
    let circle = slice_sphere(&sp, radius, 1, 0.2)?;
    println!(
        "circle of radius {radius} in H2xH2: {} segments, length {:.4}",
        circle.terms().len(),
        circle.k_volume(&sp)
    );

    let w = sp.default_direction()?;
    let params = ConeParams::new(w, 2.0 * radius + 4.0, -(radius + 1.0), 32)?;
    for strategy in [CapStrategy::FlatConeInHorosphere, CapStrategy::LpFill] {
        let p = params.clone().with_cap_strategy(strategy);
        let (filling, report) = cone_fill(&sp, &circle, &p)?;
        let boundary_ok = filling
            .boundary()?
            .add(&circle.negated())?
            .canonicalized()
            .terms()
            .is_empty();
        println!("\ncap strategy {strategy:?}:");
        println!("  cone volume   {:.4}", report.cone_volume);
        println!("  cap volume    {:.4}", report.cap_volume);
        println!("  total volume  {:.4}", report.total_volume);
        println!("  total / cycle {:.4}", report.total_volume / report.cycle_volume);
        println!("  measured density decay rate {:.4}", report.measured_decay);
        println!("  boundary(filling) == cycle: {boundary_ok}");
    }
    Ok(())
}
