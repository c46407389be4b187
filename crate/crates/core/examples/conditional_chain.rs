//! The eigenbasis chain rule holds whenever the trace condition `T ≤ 1` does.
//! Prints `T` with the verdict for random instances and for a point of the
//! qubit counterexample family, where `T > 1`.
//!
//! ```text
//! cargo run --release --example conditional_chain
//! ```

use std::f64::consts::PI;

use qchain::cli::{run_trial, LoadedInputs};
use qchain::counterexample::{family_states, FamilyPoint};
use qchain::inequalities::{verify_conditional_chain, InequalityId, SideValue};
use qchain::recovery::QuadratureScheme;
use qchain::{Result, VerdictReport};

fn show(label: &str, r: &VerdictReport) {
    let t = match r.side_conditions.get("trace_condition_t") {
        Some(SideValue::Number(x)) => x.to_string(),
        _ => "?".into(),
    };
    let holds = matches!(
        r.side_conditions.get("inequality_holds_numerically"),
        Some(SideValue::Flag(true))
    );
    println!("{label:<28} T = {t:<22} inequality holds {holds:<5} pass {}", r.pass);
}

fn main() -> Result<()> {
    let q = QuadratureScheme::default();
    for k in 0..8 {
        let r = run_trial(InequalityId::ConditionalChain, 1, k, 2, &LoadedInputs::default(), &q).expect("valid instance");
        show(&format!("random qubit instance {k}"), &r);
    }
    let f = family_states(&FamilyPoint::new(0.0, PI / 2.0, 0.1)?)?;
    show(
        "family p=0 theta=pi/2 eps=.1",
        &verify_conditional_chain(&f.rho, &f.sigma, &f.m, &f.n, &q)?,
    );
    Ok(())
}
