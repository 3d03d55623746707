//! Neutered vs open fillings: circles on the horosphere of neutered H3 can
//! only fill inside the region and pay Euclidean cost, while the same
//! circles in the open space escape upward and fill sub-quadratically.
//!
//! ```sh
//! cargo run -p catfill --example neutered_contrast
//! ```

use catfill::fit::{fit_exponent, run_family, ExperimentSpec, Family, Filler};

fn main() -> catfill::Result<()> {
    let schedule = vec![1.2, 1.8, 2.4];
    for space in ["H3 neutered level=0", "H3"] {
        let mut spec = ExperimentSpec::new(
            space,
            Family::HorosphereSpheresNeutered,
            1,
            schedule.clone(),
        );
        spec.filler = Filler::Lp;
        spec.mesh = 0.6;
        let samples = run_family(&spec)?;
        let est = fit_exponent(&samples)?;
        println!("{space}:");
        for (rho, (l, fv)) in schedule.iter().zip(&samples) {
            println!("  radius {rho:4.1}: circle length {l:8.3}, minimal filling {fv:8.3}");
        }
        println!("  fitted exponent {:.3}\n", est.slope);
    }
    println!("the neutered region forces the Euclidean exponent; the open space does not");
    Ok(())
}
