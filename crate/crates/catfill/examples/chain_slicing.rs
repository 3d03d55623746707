//! Chains as data: text serialization, slab slicing along a projection
//! coordinate, and the coarea lower bound it certifies.
//!
//! ```sh
//! cargo run -p catfill --example chain_slicing
//! ```

use catfill::chain::{Functional, SimplicialChain};
use catfill::fit::{coarea_lower_check, round_ball_in_flat};
use catfill::space::{FlatComponent, FlatSpec, ProductSpace};

fn main() -> catfill::Result<()> {
    let (sp, _) = ProductSpace::parse("E2")?;
    let flat = sp.maximal_flat();
    let disc = round_ball_in_flat(&sp, &flat, 1, 5.0, 0.04)?;
    println!(
        "round disc of radius 5: {} triangles, area {:.4}",
        disc.terms().len(),
        disc.k_volume(&sp)
    );

    let geodesic = FlatSpec::new(
        &sp,
        vec![FlatComponent::Affine {
            origin: vec![0.0, 0.0],
            axes: vec![vec![1.0, 0.0]],
        }],
    )?;
    let functional = Functional::FlatCoordinate {
        flat: geodesic.clone(),
        axis: 0,
    };
    for slab in [(-1.0, 1.0), (-3.0, 3.0), (2.0, 4.0)] {
        let clipped = disc.clip(&sp, &functional, slab);
        let certified = coarea_lower_check(&sp, &disc, &geodesic, slab)?;
        println!(
            "slab {slab:?}: {} triangles kept, slab volume {certified:.4}",
            clipped.terms().len()
        );
    }

    // chains round-trip through the plain-text format
    let circle = disc.boundary()?;
    let text = circle.to_text("E2");
    let (spec, back) = SimplicialChain::from_text(&text)?;
    println!(
        "\nserialized a {}-chain over {spec:?}: {} lines, parses back equal: {}",
        back.k(),
        text.lines().count(),
        back.add(&circle.negated())?.canonicalized().terms().is_empty()
    );
    Ok(())
}
