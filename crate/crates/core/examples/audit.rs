//! Runs every verifier on seeded random instances and prints a summary table.
//!
//! ```text
//! cargo run --release --example audit -- 200 3
//! ```
//! Arguments: trials per verifier (default 50) and dimension (default 3).

use qchain::cli::{run_trial, LoadedInputs};
use qchain::inequalities::InequalityId;
use qchain::recovery::QuadratureScheme;
use qchain::ExtendedReal;

fn main() {
    let mut args = std::env::args().skip(1);
    let trials: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);
    let dim: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let q = QuadratureScheme::default();
    let loaded = LoadedInputs::default();

    println!(
        "{:<20} {:>8} {:>8} {:>10} {:>14}",
        "inequality", "trials", "passed", "asserted", "min slack"
    );
    for id in InequalityId::ALL {
        let (mut passed, mut asserted) = (0, 0);
        let mut min_slack = ExtendedReal::PosInfinity;
        for k in 0..trials {
            let r = run_trial(id, 0, k, dim, &loaded, &q).expect("random instances are valid");
            if r.pass_is_asserted() {
                asserted += 1;
                if r.slack < min_slack {
                    min_slack = r.slack;
                }
            }
            passed += usize::from(r.pass);
        }
        let slack = match min_slack {
            ExtendedReal::Finite(x) => format!("{x:.3e}"),
            other => other.to_string(),
        };
        println!("{:<20} {trials:>8} {passed:>8} {asserted:>10} {slack:>14}", id.as_str());
    }
}
