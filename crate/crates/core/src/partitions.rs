//! Ensemble partitions of a state induced by a POVM, and the classical
//! processes they define.
//!
//! For a state `τ` and POVM `{G_j}` the partition is `τ = Σ_j w_j τ_j` with
//! `w_j = Tr[G_j τ]` and `τ_j ∝ √τ G_jᵀ √τ`, the transpose taken in the
//! eigenbasis of `τ`. The canonical-basis variant transposes the whole
//! product instead and reconstructs `τᵀ`.

use serde::{Deserialize, Serialize};

use crate::divergences::{kl_slices, ExtendedReal, ProbVec, PROB_FLOOR};
use crate::error::{Error, Result};
use crate::inequalities::{expectation, InequalityId, InstanceDigest, VerdictReport, DEFAULT_TOL};
use crate::linalg::{c, frac_power, CMatrix};
use crate::quantum::{Channel, DensityMatrix, Povm};

/// Where the transpose in `τ_j` is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionConvention {
    /// `√τ G_j^{T_τ} √τ` with `T_τ` the transpose in the eigenbasis of `τ`; sums to `τ`.
    #[default]
    EigenbasisTranspose,
    /// `(√τ G_j √τ)ᵀ` in the canonical basis; sums to `τᵀ`.
    CanonicalTranspose,
}

impl PartitionConvention {
    pub fn name(self) -> &'static str {
        match self {
            Self::EigenbasisTranspose => "eigenbasis_transpose",
            Self::CanonicalTranspose => "canonical_transpose",
        }
    }
}

/// `τ = Σ_j w_j τ_j`. Outcomes with `w_j ≤ 1e-14` have no state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePartition {
    pub weights: ProbVec,
    pub states: Vec<Option<DensityMatrix>>,
    pub convention: PartitionConvention,
}

impl EnsemblePartition {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `Σ_j w_j τ_j` over the outcomes that carry a state.
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.states.iter().flatten().next().map_or(0, |s| s.dim());
        let mut out = CMatrix::zeros(d, d);
        for (w, s) in self.weights.weights().iter().zip(&self.states) {
            if let Some(s) = s {
                out += s.matrix() * c(*w, 0.0);
            }
        }
        out
    }
}

/// `G^{T_τ} = V (V†GV)ᵀ V†` for the eigenbasis `V` of `τ`.
pub fn transpose_in_basis(g: &CMatrix, v: &CMatrix) -> CMatrix {
    v * (v.adjoint() * g * v).transpose() * v.adjoint()
}

pub fn ensemble_partition(tau: &DensityMatrix, g: &Povm, convention: PartitionConvention) -> Result<EnsemblePartition> {
    if g.dim() != tau.dim() {
        return Err(Error::DimensionMismatch {
            context: "ensemble_partition",
            expected: tau.dim(),
            found: g.dim(),
        });
    }
    let weights = g.probabilities(tau.matrix())?;
    let sqrt_tau = frac_power(tau.psd(), c(0.5, 0.0));
    let basis = &tau.psd().spectral().basis;
    let mut states = Vec::with_capacity(g.len());
    for (gj, &w) in g.elements().iter().zip(&weights) {
        if w <= PROB_FLOOR {
            states.push(None);
            continue;
        }
        let m = match convention {
            PartitionConvention::EigenbasisTranspose => &sqrt_tau * transpose_in_basis(gj.matrix(), basis) * &sqrt_tau,
            PartitionConvention::CanonicalTranspose => (&sqrt_tau * gj.matrix() * &sqrt_tau).transpose(),
        };
        let psd = crate::linalg::PsdMatrix::from_hermitian_part(&m)?;
        states.push(Some(DensityMatrix::normalize(&psd)?));
    }
    Ok(EnsemblePartition {
        weights: ProbVec::unnormalized(weights)?,
        states,
        convention,
    })
}

/// Column-stochastic matrix: `entry(i, j)` is the probability of `j → i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticMatrix {
    cols: Vec<Vec<f64>>,
}

impl StochasticMatrix {
    pub fn new(cols: Vec<Vec<f64>>) -> Result<Self> {
        let rows = cols
            .first()
            .map(|c| c.len())
            .ok_or_else(|| Error::InvalidParameter("stochastic matrix needs a column".into()))?;
        for col in &cols {
            if col.len() != rows {
                return Err(Error::LengthMismatch {
                    left: rows,
                    right: col.len(),
                });
            }
            let v = ProbVec::new(col.clone())?;
            debug_assert_eq!(v.len(), rows);
        }
        Ok(Self { cols })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            cols: (0..n).map(|j| ProbVec::delta(n, j).weights().to_vec()).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.cols[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.cols[j][i]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }

    /// `M p`.
    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.n_cols() {
            return Err(Error::LengthMismatch {
                left: self.n_cols(),
                right: p.len(),
            });
        }
        let mut out = vec![0.0; self.n_rows()];
        for (col, &pj) in self.cols.iter().zip(p) {
            for (o, &m) in out.iter_mut().zip(col) {
                *o += m * pj;
            }
        }
        Ok(out)
    }
}

/// `M_ij = Tr[F_i c(τ_j)]` for the eigenbasis-transpose partition of `τ` by `G`.
///
/// Zero-weight outcomes have no `τ_j`; their column is the outcome distribution
/// of `c(I/d)`, which leaves `M P_τ^G` unchanged.
pub fn induced_stochastic(tau: &DensityMatrix, c: &Channel, g: &Povm, f: &Povm) -> Result<StochasticMatrix> {
    if f.dim() != c.d_out() {
        return Err(Error::DimensionMismatch {
            context: "induced_stochastic output povm",
            expected: c.d_out(),
            found: f.dim(),
        });
    }
    let part = ensemble_partition(tau, g, PartitionConvention::EigenbasisTranspose)?;
    let fallback = DensityMatrix::maximally_mixed(tau.dim());
    let cols = part
        .states
        .iter()
        .map(|s| {
            let input = s.as_ref().unwrap_or(&fallback);
            let probs = f.probabilities(&c.apply(input.matrix())?)?;
            let total: f64 = probs.iter().sum();
            Ok(probs.into_iter().map(|x| x / total).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    StochasticMatrix::new(cols)
}

/// Measured divergence between `c1(a)` and `c2(b)` under `f`.
fn output_measured(f: &Povm, c1: &Channel, a: &CMatrix, c2: &Channel, b: &CMatrix) -> Result<ExtendedReal> {
    kl_slices(&f.probabilities(&c1.apply(a)?)?, &f.probabilities(&c2.apply(b)?)?)
}

/// Finite-measurement chain rule `D_F(M(ρ)‖N(σ)) ≤ D_G(ρ‖σ) + E_p D_F(M(ρ_j)‖N(σ_j))`.
///
/// Reported sign-arranged as `lhs = D_G(ρ‖σ) − D_F(M(ρ)‖N(σ))` against
/// `rhs = −E_p D_F(M(ρ_j)‖N(σ_j))`, so that `pass ⇔ lhs ≥ rhs − tol`.
pub fn measured_chain_audit(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    m: &Channel,
    n: &Channel,
    g: &Povm,
    f: &Povm,
) -> Result<VerdictReport> {
    measured_chain_audit_in(rho, sigma, m, n, g, f, PartitionConvention::EigenbasisTranspose)
}

/// [`measured_chain_audit`] with a chosen partition convention. Under the
/// canonical convention the partitions reconstruct `ρᵀ, σᵀ`, so the output
/// term is evaluated on `M(ρᵀ), N(σᵀ)`.
pub fn measured_chain_audit_in(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    m: &Channel,
    n: &Channel,
    g: &Povm,
    f: &Povm,
    convention: PartitionConvention,
) -> Result<VerdictReport> {
    let pr = ensemble_partition(rho, g, convention)?;
    let ps = ensemble_partition(sigma, g, convention)?;
    let d_g = kl_slices(pr.weights.weights(), ps.weights.weights())?;
    let (r_in, s_in) = match convention {
        PartitionConvention::EigenbasisTranspose => (rho.matrix().clone(), sigma.matrix().clone()),
        PartitionConvention::CanonicalTranspose => (rho.matrix().transpose(), sigma.matrix().transpose()),
    };
    let d_out = output_measured(f, m, &r_in, n, &s_in)?;
    let terms = pr
        .states
        .iter()
        .zip(&ps.states)
        .map(|(rj, sj)| match (rj, sj) {
            (Some(rj), Some(sj)) => output_measured(f, m, rj.matrix(), n, sj.matrix()),
            (Some(_), None) => Ok(ExtendedReal::PosInfinity),
            (None, _) => Ok(ExtendedReal::ZERO),
        })
        .collect::<Result<Vec<_>>>()?;
    let rhs = -expectation(pr.weights.weights(), &terms);
    let lhs = crate::inequalities::difference(d_g, d_out);
    let digest = InstanceDigest::new(InequalityId::MeasuredChain)
        .density(rho)
        .density(sigma)
        .channel(m)
        .channel(n)
        .povm(g)
        .povm(f)
        .finish();
    Ok(VerdictReport::new(
        InequalityId::MeasuredChain,
        lhs,
        rhs,
        DEFAULT_TOL,
        digest,
        format!("partition convention {}", convention.name()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::quantum::{random_channel, random_density, random_povm};

    #[test]
    fn maximally_mixed_with_canonical_projectors() {
        let tau = DensityMatrix::maximally_mixed(3);
        let g = Povm::computational(3);
        for conv in [
            PartitionConvention::EigenbasisTranspose,
            PartitionConvention::CanonicalTranspose,
        ] {
            let part = ensemble_partition(&tau, &g, conv).unwrap();
            for (j, s) in part.states.iter().enumerate() {
                assert!((part.weights.weights()[j] - 1.0 / 3.0).abs() < 1e-14);
                assert!(max_abs_diff(s.as_ref().unwrap().matrix(), g.elements()[j].matrix()) < 1e-12);
            }
        }
    }

    #[test]
    fn commuting_pair_partitions_into_projectors() {
        let rho = DensityMatrix::diagonal(&[0.5, 0.3, 0.2]).unwrap();
        let g = Povm::computational(3);
        let part = ensemble_partition(&rho, &g, PartitionConvention::EigenbasisTranspose).unwrap();
        for (j, s) in part.states.iter().enumerate() {
            assert!(max_abs_diff(s.as_ref().unwrap().matrix(), g.elements()[j].matrix()) < 1e-12);
        }
    }

    #[test]
    fn reconstruction_in_both_conventions() {
        for seed in 0..30 {
            let tau = random_density(3, 3, seed).unwrap();
            let g = random_povm(3, 4, seed + 77).unwrap();
            let a = ensemble_partition(&tau, &g, PartitionConvention::EigenbasisTranspose).unwrap();
            assert!(max_abs_diff(&a.reconstruct(), tau.matrix()) < 1e-10);
            let b = ensemble_partition(&tau, &g, PartitionConvention::CanonicalTranspose).unwrap();
            assert!(max_abs_diff(&b.reconstruct(), &tau.matrix().transpose()) < 1e-10);
            let direct = g.probabilities(tau.matrix()).unwrap();
            assert_eq!(a.weights.weights(), &direct[..]);
        }
    }

    #[test]
    fn zero_weight_outcomes_are_flagged() {
        let tau = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let part = ensemble_partition(&tau, &Povm::computational(2), PartitionConvention::EigenbasisTranspose).unwrap();
        assert!(part.states[0].is_some() && part.states[1].is_none());
    }

    #[test]
    fn stochastic_matrix_cases() {
        let tau = DensityMatrix::diagonal(&[0.6, 0.4]).unwrap();
        let g = Povm::computational(2);
        let s = induced_stochastic(&tau, &Channel::identity(2), &g, &g).unwrap();
        assert!((s.entry(0, 0) - 1.0).abs() < 1e-12 && s.entry(1, 0).abs() < 1e-12);

        let w0 = random_density(2, 2, 3).unwrap();
        let repl = Channel::replacement(&w0, 2);
        let f = random_povm(2, 3, 4).unwrap();
        let s = induced_stochastic(&tau, &repl, &g, &f).unwrap();
        let expected = f.probabilities(w0.matrix()).unwrap();
        for j in 0..2 {
            for (i, e) in expected.iter().enumerate() {
                assert!((s.entry(i, j) - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn induced_matrix_maps_input_to_output_distribution() {
        for seed in 0..20 {
            let tau = random_density(3, 3, seed).unwrap();
            let c = random_channel(3, 2, 2, seed + 5).unwrap();
            let g = random_povm(3, 3, seed + 6).unwrap();
            let f = random_povm(2, 3, seed + 7).unwrap();
            let s = induced_stochastic(&tau, &c, &g, &f).unwrap();
            let lhs = s.apply(&g.probabilities(tau.matrix()).unwrap()).unwrap();
            let rhs = f.probabilities(&c.apply(tau.matrix()).unwrap()).unwrap();
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn audit_trivial_and_random() {
        let rho = random_density(3, 3, 1).unwrap();
        let m = random_channel(3, 2, 2, 2).unwrap();
        let g = random_povm(3, 3, 3).unwrap();
        let f = random_povm(2, 2, 4).unwrap();
        let r = measured_chain_audit(&rho, &rho, &m, &m, &g, &f).unwrap();
        assert!(r.pass && r.lhs.value().abs() < 1e-12 && r.rhs.value().abs() < 1e-12);
        for seed in 0..30 {
            let rho = random_density(3, 3, seed).unwrap();
            let sigma = random_density(3, 3, seed + 1).unwrap();
            let m = random_channel(3, 2, 2, seed + 2).unwrap();
            let n = random_channel(3, 2, 3, seed + 3).unwrap();
            let g = random_povm(3, 4, seed + 4).unwrap();
            let f = random_povm(2, 3, seed + 5).unwrap();
            for conv in [
                PartitionConvention::EigenbasisTranspose,
                PartitionConvention::CanonicalTranspose,
            ] {
                let r = measured_chain_audit_in(&rho, &sigma, &m, &n, &g, &f, conv).unwrap();
                assert!(r.pass, "seed {seed}: {r:?}");
            }
        }
    }
}
