//! Runs alone in its own binary because the log base is process-global.

use std::f64::consts::{E, LN_2, PI};

use qchain::counterexample::{eps_star, rhs_numeric_n, FamilyPoint};
use qchain::divergences::{kl, ProbVec};

#[test]
fn natural_log_base_rescales_divergences_only() {
    let p = ProbVec::new(vec![0.7, 0.2, 0.1]).unwrap();
    let q = ProbVec::new(vec![0.3, 0.3, 0.4]).unwrap();
    let bits = kl(&p, &q).unwrap().value();
    let star_bits = eps_star(1.1, 0.25);

    qchain::set_log_base(E).unwrap();
    let nats: f64 = [(0.7f64, 0.3f64), (0.2, 0.3), (0.1, 0.4)]
        .iter()
        .map(|(a, b)| a * (a / b).ln())
        .sum();
    assert!((kl(&p, &q).unwrap().value() - nats).abs() < 1e-14);
    assert!((bits * LN_2 - nats).abs() < 1e-14);
    // the violation boundary does not depend on the unit
    assert!((eps_star(1.1, 0.25) - star_bits).abs() < 1e-14);
    let pt = FamilyPoint::new(0.0, PI / 2.0, 0.1).unwrap();
    assert!((rhs_numeric_n(&pt, 3).unwrap() + LN_2).abs() < 1e-12);
    qchain::set_log_base(2.0).unwrap();
}
