//! The minimal-filling oracle on grid complexes: exact square fillings,
//! exact rational re-solves, and an infeasible cycle around a hole.
//!
//! ```sh
//! cargo run -p catfill --example minimal_filling_lp
//! ```

use catfill::lp::{
    build_grid, grid_on_flat, min_fill, min_fill_rational, rational_is_integral,
};
use catfill::space::ProductSpace;

fn main() -> catfill::Result<()> {
    println!("L x L square loops on a unit grid fill with value L^2:");
    for l in [2usize, 4, 6] {
        let n = l + 2;
        let grid = grid_on_flat(2, &[0.0, 0.0], &[n as f64, n as f64], &[n, n])?;
        let block = grid.select(2, 0b11, |b| b.iter().all(|&c| c > 1.0 && c < 1.0 + l as f64));
        let z = grid.boundary_cycle(2, &block);
        let fill = min_fill(&grid.complex, 1, &z)?;
        let (chain, exact) = min_fill_rational(&grid.complex, 1, &z)?;
        println!(
            "  L={l}: float value {:.9}, rational value {exact}, integral chain {}",
            fill.value,
            rational_is_integral(&chain)
        );
    }

    // a 4x4 grid with the middle block removed: the inner loop wraps the
    // hole and bounds nothing
    let (e2, _) = ProductSpace::parse("E2")?;
    let axes = vec![
        vec![0.0, 1.0, 2.0, 3.0, 4.0],
        vec![0.0, 1.0, 2.0, 3.0, 4.0],
    ];
    let annulus = build_grid(&e2, axes, |d, bary| {
        !(d == 2 && bary.iter().all(|&c| c > 1.0 && c < 3.0))
    })?;
    let full = grid_on_flat(2, &[0.0, 0.0], &[4.0, 4.0], &[4, 4])?;
    let hole = full.select(2, 0b11, |b| b.iter().all(|&c| c > 1.0 && c < 3.0));
    let z_full = full.boundary_cycle(2, &hole);
    let mut z = vec![0i64; annulus.cell_count(1)];
    for (id, &v) in z_full.iter().enumerate() {
        if v != 0 {
            let (mask, idx) = full.cell_shape(1, id);
            z[annulus.cell_id(1, mask, idx).unwrap()] = v;
        }
    }
    match min_fill(&annulus.complex, 1, &z) {
        Err(e) => println!("\nannulus generator: {e}"),
        Ok(_) => println!("\nannulus generator unexpectedly filled"),
    }
    Ok(())
}
