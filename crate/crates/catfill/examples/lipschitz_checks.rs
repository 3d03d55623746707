//! Sampled Lipschitz surveys: the cone flow is 3-Lipschitz and the convex
//! projections (flats, horoballs) are 1-Lipschitz.
//!
//! ```sh
//! cargo run -p catfill --example lipschitz_checks
//! ```

use catfill::chain::slice_sphere;
use catfill::cone::verify_three_lipschitz;
use catfill::space::ProductSpace;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn main() -> catfill::Result<()> {
    let (sp, _) = ProductSpace::parse("H2xH2")?;
    let w = sp.default_direction()?;

    let circle = slice_sphere(&sp, 4.0, 1, 0.3)?;
    let ratio = verify_three_lipschitz(&sp, &circle, &w, 50_000, 42);
    println!("flow map tau on a radius-4 circle: max sampled ratio {ratio:.4} (bound 3)");

    let flat = sp.maximal_flat();
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst_flat = 0.0f64;
    let mut worst_horo = 0.0f64;
    let level = -1.5;
    let mut tested = 0;
    while tested < 50_000 {
        let p = sp.sample_point(&mut rng, 3.0);
        let q = sp.sample_point(&mut rng, 3.0);
        let d = sp.distance(&p, &q)?;
        if d < 1e-9 {
            continue;
        }
        let dflat = sp.distance(&sp.project_to_flat(&flat, &p)?, &sp.project_to_flat(&flat, &q)?)?;
        worst_flat = worst_flat.max(dflat / d);
        if sp.busemann(&w, &p) >= level && sp.busemann(&w, &q) >= level {
            let dh = sp.distance(
                &sp.project_to_horosphere(&w, level, &p)?,
                &sp.project_to_horosphere(&w, level, &q)?,
            )?;
            worst_horo = worst_horo.max(dh / d);
        }
        tested += 1;
    }
    println!("projection to a maximal flat: max sampled ratio {worst_flat:.6} (bound 1)");
    println!("projection to a horosphere:   max sampled ratio {worst_horo:.6} (bound 1)");
    Ok(())
}
