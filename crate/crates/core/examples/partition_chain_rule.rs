//! Splits a state into an ensemble along a POVM, then checks the partition
//! chain rule on the resulting instance.
//!
//! ```text
//! cargo run --example partition_chain_rule -- 3 42
//! ```
//! Arguments: dimension (default 3) and seed (default 42).

use qchain::inequalities::{verify_partition_chain, verify_partition_chain_in};
use qchain::linalg::max_abs_diff;
use qchain::partitions::{ensemble_partition, PartitionConvention};
use qchain::quantum::{random_channel_with, random_density_with, random_povm_with};
use qchain::rng::seeded;
use qchain::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let d: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let mut rng = seeded(seed);

    let rho = random_density_with(&mut rng, d, d)?;
    let sigma = random_density_with(&mut rng, d, d)?;
    let g = random_povm_with(&mut rng, d, d + 1)?;
    let m = random_channel_with(&mut rng, d, d, d)?;
    let n = random_channel_with(&mut rng, d, d, d)?;

    let part = ensemble_partition(&rho, &g, PartitionConvention::EigenbasisTranspose)?;
    println!("outcome weights: {:?}", part.weights.weights());
    println!(
        "reconstruction error: {:.2e}",
        max_abs_diff(&part.reconstruct(), rho.matrix())
    );

    for strengthened in [false, true] {
        let r = verify_partition_chain(&rho, &sigma, &m, &n, &g, strengthened)?;
        println!(
            "{:<18} lhs {}  rhs {}  slack {}  pass {}",
            r.inequality_id, r.lhs, r.rhs, r.slack, r.pass
        );
    }
    let r = verify_partition_chain_in(&rho, &sigma, &m, &n, &g, false, PartitionConvention::CanonicalTranspose)?;
    println!("canonical partition: slack {}  pass {}", r.slack, r.pass);
    Ok(())
}
