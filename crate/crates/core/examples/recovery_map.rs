//! The rotated-Petz average that recovers `σ` from `M(σ)`, and the fidelity
//! bound it certifies.
//!
//! ```text
//! cargo run --example recovery_map
//! ```

use qchain::divergences::fidelity;
use qchain::inequalities::verify_universal_bound;
use qchain::linalg::max_abs_diff;
use qchain::quantum::{random_channel, random_density, DensityMatrix};
use qchain::recovery::{averaged_apply, build_quadrature, petz_map};
use qchain::Result;

fn main() -> Result<()> {
    let q = build_quadrature(400, 12.0)?;
    println!(
        "quadrature: {} nodes on [-{}, {}], mass - 1 = {:.1e}",
        q.len(),
        q.cutoff,
        q.cutoff,
        q.mass() - 1.0
    );

    let sigma = random_density(3, 3, 1)?;
    let rho = random_density(3, 3, 2)?;
    let m = random_channel(3, 2, 2, 3)?;
    let m_sigma = m.apply_psd(sigma.psd())?;
    let m_rho = m.apply_psd(rho.psd())?;

    let back = averaged_apply(&m_sigma, &sigma, &m, &q, m_sigma.matrix())?;
    println!("|R(M(sigma)) - sigma|_max = {:.2e}", max_abs_diff(&back, sigma.matrix()));

    let recovered = DensityMatrix::from_matrix(averaged_apply(&m_sigma, &sigma, &m, &q, m_rho.matrix())?)?;
    println!("F(rho, R(M(rho)))         = {:.6}", fidelity(&rho, &recovered)?);
    let petz = petz_map(&sigma, &m)?;
    println!("Petz map min Choi eigenvalue = {:.2e}", petz.min_choi_eigenvalue());

    let r = verify_universal_bound(&rho, &sigma, &m, &q)?;
    println!("fidelity bound: lhs {} >= rhs {}  pass {}", r.lhs, r.rhs, r.pass);
    Ok(())
}
