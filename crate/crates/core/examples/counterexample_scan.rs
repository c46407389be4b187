//! The qubit family on which the unconditional chain rule fails: threshold in
//! `ε` at `θ = π/2, p = 0`, the regularized bound, and an optional CSV scan.
//!
//! ```text
//! cargo run --release --example counterexample_scan -- region.csv
//! ```

use std::error::Error;
use std::f64::consts::PI;
use std::fs::File;

use qchain::counterexample::{
    default_eps_grid, default_p_values, default_theta_grid, eps_star, lhs_gap, region_scan, rhs_limit, rhs_numeric_n, write_csv,
    FamilyPoint, DEFAULT_SCAN_N,
};

fn main() -> Result<(), Box<dyn Error>> {
    println!("threshold eps* at theta = pi/2, p = 0: {}", eps_star(PI / 2.0, 0.0));
    for eps in [0.15, 0.19, 0.2, 0.21, 0.25] {
        let pt = FamilyPoint::new(0.0, PI / 2.0, eps)?;
        let (gap, bound) = (lhs_gap(&pt), rhs_limit(&pt));
        println!(
            "eps = {eps:.2}: gap {gap:+.6} vs bound {bound:+.6} -> violated {}",
            gap < bound
        );
    }

    let pt = FamilyPoint::new(0.0, PI / 2.0, 0.1)?;
    for n in [1, 2, 4, 8] {
        println!(
            "n = {n}: regularized bound from {}x{} matrices = {:.12}",
            1 << n,
            1 << n,
            rhs_numeric_n(&pt, n)?
        );
    }
    println!("p -> 1/2 threshold at theta = pi/2: {:.6}", eps_star(PI / 2.0, 0.49));

    if let Some(path) = std::env::args().nth(1) {
        let rows = region_scan(
            &default_p_values(),
            &default_theta_grid(),
            &default_eps_grid(),
            DEFAULT_SCAN_N,
        )?;
        let violated = rows.iter().filter(|r| r.violated_analytic).count();
        write_csv(&rows, File::create(&path)?)?;
        println!("wrote {} rows ({violated} violations) to {path}", rows.len());
    }
    Ok(())
}
