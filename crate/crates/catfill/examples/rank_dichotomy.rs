//! The rank dichotomy at desk scale: filling exponents are Euclidean below
//! the rank and linear above it.
//!
//! Round circles inside a maximal flat of H2xH2 (rank 2) fill like l^2;
//! circles in H2 (rank 1) filled by the cone construction fill linearly.
//!
//! ```sh
//! cargo run -p catfill --example rank_dichotomy
//! ```

use catfill::fit::{
    compare_theory, fit_exponent, run_family, ExperimentSpec, Family, Filler, DEFAULT_SLOPE_TOL,
};
use catfill::space::ProductSpace;

fn main() -> catfill::Result<()> {
    // Below the rank: 1-spheres in a maximal flat of H2xH2, filled by the
    // round flat ball.
    let mut below = ExperimentSpec::new(
        "H2xH2",
        Family::FlatRoundSpheres,
        1,
        vec![2.0, 4.0, 8.0, 12.0],
    );
    below.filler = Filler::FlatBall;
    below.mesh = 0.04;
    let samples = run_family(&below)?;
    let est = fit_exponent(&samples)?;
    let (sp, _) = ProductSpace::parse("H2xH2")?;
    let (verdict, expected) = compare_theory(&est, 1, sp.rank(), sp.dim(), DEFAULT_SLOPE_TOL)?;
    println!("H2xH2, k=1 (below rank 2):");
    for (l, fv) in &samples {
        println!("  cycle volume {l:10.3}  filling volume {fv:10.3}");
    }
    println!("  expected exponent {expected}, measured {:.3}, {verdict}\n", est.slope);

    // Above the rank: circles in H2 filled by coning toward infinity.
    let mut above = ExperimentSpec::new("H2", Family::SliceSpheres, 1, vec![2.0, 3.0, 4.0, 5.0]);
    above.filler = Filler::Cone;
    above.mesh = 0.3;
    let samples = run_family(&above)?;
    let est = fit_exponent(&samples)?;
    let (sp, _) = ProductSpace::parse("H2")?;
    let (verdict, expected) = compare_theory(&est, 1, sp.rank(), sp.dim(), DEFAULT_SLOPE_TOL)?;
    println!("H2, k=1 (at/above rank 1):");
    for (l, fv) in &samples {
        println!("  cycle volume {l:10.3}  filling volume {fv:10.3}");
    }
    println!("  expected exponent {expected}, measured {:.3}, {verdict}", est.slope);
    Ok(())
}
