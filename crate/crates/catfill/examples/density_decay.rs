//! Stable Jacobi decay two ways: abstract root-system rates at the chamber
//! barycenter, and the measured cone density along the barycentric ray of
//! H2xH2, which decays like exp(-sqrt(2) t) for the aligned 2-frame.
//!
//! ```sh
//! cargo run -p catfill --example density_decay
//! ```

use catfill::cone::{density_phi, DecayRates};
use catfill::roots::{chamber_barycenter, curvature_eigenvalues, RootSystem};
use catfill::space::ProductSpace;

fn main() -> catfill::Result<()> {
    for label in ["A1", "A1xA1", "A1^3", "A2", "B2", "G2"] {
        let rs = RootSystem::from_label(label)?;
        let bc = chamber_barycenter(&rs);
        let eigen = curvature_eigenvalues(&rs, &bc.h0)?;
        println!("{label}: rank {}, rho_star {:.6}", rs.rank(), bc.rho_star);
        for (root, (lambda, mult)) in rs.positive_roots().iter().zip(&eigen) {
            println!(
                "  root value {:.6}  lambda {:.6}  multiplicity {mult}",
                RootSystem::pairing(&root.covector, &bc.h0),
                lambda
            );
        }
    }

    let (sp, _) = ProductSpace::parse("H2xH2")?;
    let w = sp.default_direction()?;
    let rates = DecayRates::from_direction(&sp, &w);
    let frame = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]];
    println!("\ndensity along the barycentric ray of H2xH2 (aligned 2-frame):");
    println!("{:>6} {:>14} {:>14}", "t", "phi(t)", "exp(-sqrt2 t)");
    for i in 0..=8 {
        let t = i as f64;
        let phi = density_phi(&sp, &rates, sp.basepoint(), &frame, &w, t)?;
        println!(
            "{t:6.2} {phi:14.6e} {:14.6e}",
            (-std::f64::consts::SQRT_2 * t).exp()
        );
    }
    Ok(())
}
