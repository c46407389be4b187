//! Pairs the eigenbases of `ρ` and `σ` to minimize the right-hand-side cost
//! of the different-basis chain rule, and compares with the identity pairing.
//! The left-hand side depends on the pairing too, so a cheaper pairing need
//! not give a smaller slack.
//!
//! ```text
//! cargo run --example pairing -- 4 9
//! ```

use qchain::inequalities::{optimize_pairing, pairing_cost, pairing_costs, verify_difbasis};
use qchain::quantum::{random_channel_with, random_density_with};
use qchain::rng::seeded;
use qchain::{Pairing, Result};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let d: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(9);
    let mut rng = seeded(seed);
    let rho = random_density_with(&mut rng, d, d)?;
    let sigma = random_density_with(&mut rng, d, d)?;
    let m = random_channel_with(&mut rng, d, d, d)?;
    let n = random_channel_with(&mut rng, d, d, d)?;

    let costs = pairing_costs(&rho, &sigma, &m, &n)?;
    let identity = Pairing::identity(d);
    let (best, report) = optimize_pairing(&rho, &sigma, &m, &n)?;
    println!("identity pairing  cost {:.6}", pairing_cost(&costs, &identity));
    println!(
        "optimal pairing {:?} cost {:.6}",
        best.permutation(),
        pairing_cost(&costs, &best)
    );

    let plain = verify_difbasis(&rho, &sigma, &m, &n, &identity)?;
    for (label, r) in [("identity", &plain), ("optimal", &report)] {
        println!("{label:<8} pairing: lhs {:.6} rhs {:.6} slack {:.6}", r.lhs, r.rhs, r.slack);
    }
    Ok(())
}
