//! Relative entropies and fidelity of two qubit states.
//!
//! ```text
//! cargo run --example divergences
//! ```

use qchain::divergences::{fidelity, measured, measured_eigenbasis, umegaki};
use qchain::linalg::from_real_rows;
use qchain::quantum::{DensityMatrix, Povm};
use qchain::Result;

fn main() -> Result<()> {
    let rho = DensityMatrix::diagonal(&[0.9, 0.1])?;
    let sigma = DensityMatrix::from_matrix(from_real_rows(&[&[0.5, 0.3], &[0.3, 0.5]]))?;

    println!("D(rho||sigma)            = {}", umegaki(&rho, sigma.psd())?);
    println!(
        "D_Z(rho||sigma)          = {}",
        measured(&rho, sigma.psd(), &Povm::computational(2))?
    );
    println!("D_eig(rho)(rho||sigma)   = {}", measured_eigenbasis(&rho, sigma.psd())?);
    println!("F(rho, sigma)            = {:.6}", fidelity(&rho, &sigma)?);

    // a pure state against a state without its support
    let pure = DensityMatrix::diagonal(&[1.0, 0.0])?;
    let other = DensityMatrix::diagonal(&[0.0, 1.0])?;
    println!("D(|0><0| || |1><1|)      = {}", umegaki(&pure, other.psd())?);
    Ok(())
}
