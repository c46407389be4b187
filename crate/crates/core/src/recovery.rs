//! Petz, rotated and twisted recovery maps, and their `β₀`-weighted average.
//!
//! The twisted map with references `γ` (output side) and `σ` (input side) is
//!
//! ```text
//! R^α(X) = σ^α M†(γ^{-α} X γ^{-α*}) σ^{α*},   α = (1 − i t)/2
//! ```
//!
//! with pseudo-powers on supports. It has Kraus operators `σ^α K_i† γ^{-α}`,
//! so it is completely positive by construction. Averaging over `t` with the
//! density `β₀(t) = π / (2(cosh πt + 1))` gives [`averaged_map`].

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, eig_hermitian, frac_power, identity, support_projector, CMatrix, HermitianMatrix, PsdMatrix, SUPPORT_REL_TOL,
};
use crate::quantum::{Channel, DensityMatrix};

pub const DEFAULT_QUAD_NODES: usize = 400;
pub const DEFAULT_QUAD_CUTOFF: f64 = 12.0;
/// `T ≤ 1 + TRACE_CONDITION_TOL` counts as satisfied.
pub const TRACE_CONDITION_TOL: f64 = 1e-8;

/// Linear map on `d_in × d_in` matrices, stored as a `d_out² × d_in²` matrix on column-stacked vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub d_in: usize,
    pub d_out: usize,
    pub matrix: CMatrix,
}

/// Column-stacking `vec(X)`.
pub fn vectorize(x: &CMatrix) -> CMatrix {
    CMatrix::from_column_slice(x.len(), 1, x.as_slice())
}

pub fn unvectorize(v: &CMatrix, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

impl Superoperator {
    /// `X ↦ Σ K X K†`, i.e. `Σ conj(K) ⊗ K` on `vec(X)`.
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidParameter("Kraus family is empty".into()))?;
        let (d_out, d_in) = first.shape();
        let mut matrix = CMatrix::zeros(d_out * d_out, d_in * d_in);
        for k in kraus {
            if k.shape() != (d_out, d_in) {
                return Err(Error::DimensionMismatch {
                    context: "superoperator kraus",
                    expected: d_out,
                    found: k.nrows(),
                });
            }
            matrix += k.map(|z| z.conj()).kronecker(k);
        }
        Ok(Self { d_in, d_out, matrix })
    }

    /// `X ↦ A X B`.
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Self {
        Self {
            d_in: a.ncols(),
            d_out: a.nrows(),
            matrix: b.transpose().kronecker(a),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d_in: d,
            d_out: d,
            matrix: identity(d * d),
        }
    }

    pub fn from_channel(ch: &Channel) -> Self {
        Self::from_kraus(ch.kraus()).expect("channel has Kraus operators")
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != (self.d_in, self.d_in) {
            return Err(Error::DimensionMismatch {
                context: "superoperator input",
                expected: self.d_in,
                found: x.nrows(),
            });
        }
        Ok(unvectorize(&(&self.matrix * vectorize(x)), self.d_out))
    }

    /// `self ∘ other`.
    pub fn after(&self, other: &Superoperator) -> Result<Self> {
        if self.d_in != other.d_out {
            return Err(Error::DimensionMismatch {
                context: "superoperator composition",
                expected: self.d_in,
                found: other.d_out,
            });
        }
        Ok(Self {
            d_in: other.d_in,
            d_out: self.d_out,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn scaled(&self, w: f64) -> Self {
        Self {
            d_in: self.d_in,
            d_out: self.d_out,
            matrix: &self.matrix * c(w, 0.0),
        }
    }

    /// `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.
    pub fn choi(&self) -> CMatrix {
        let (di, dout) = (self.d_in, self.d_out);
        let mut out = CMatrix::zeros(di * dout, di * dout);
        for i in 0..di {
            for j in 0..di {
                let col = self.matrix.column(i + j * di);
                for a in 0..dout {
                    for b in 0..dout {
                        out[(i * dout + a, j * dout + b)] = col[a + b * dout];
                    }
                }
            }
        }
        out
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        let h = HermitianMatrix::from_hermitian_part(&self.choi());
        eig_hermitian(&h).eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Largest entry of `Φ(X) − Φ(X)†` over the Hermitian basis `|i⟩⟨j| + |j⟩⟨i|`, `i(|i⟩⟨j| − |j⟩⟨i|)`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.d_in;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                let mut sym = CMatrix::zeros(d, d);
                sym[(i, j)] += c(1.0, 0.0);
                sym[(j, i)] += c(1.0, 0.0);
                let mut anti = CMatrix::zeros(d, d);
                anti[(i, j)] += c(0.0, 1.0);
                anti[(j, i)] -= c(0.0, 1.0);
                for x in [sym, anti] {
                    let y = self.apply(&x).expect("basis has input dimension");
                    worst = worst.max(crate::linalg::max_abs_diff(&y, &y.adjoint()));
                }
            }
        }
        worst
    }
}

impl std::ops::Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!((self.d_in, self.d_out), (rhs.d_in, rhs.d_out), "superoperator shapes differ");
        Superoperator {
            d_in: self.d_in,
            d_out: self.d_out,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

/// `β₀(t) = π / (2(cosh πt + 1)) = π / (4 cosh²(πt/2))`.
pub fn beta0(t: f64) -> f64 {
    let ch = (std::f64::consts::PI * t / 2.0).cosh();
    std::f64::consts::PI / (4.0 * ch * ch)
}

/// Gauss–Legendre nodes on `[−T, T]` with weights that already include `β₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub cutoff: f64,
}

impl QuadratureScheme {
    /// `Σ_k w_k`, an approximation of `∫ β₀ = 1`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        build_quadrature(DEFAULT_QUAD_NODES, DEFAULT_QUAD_CUTOFF).expect("default quadrature parameters are valid")
    }
}

pub fn build_quadrature(n_nodes: usize, cutoff: f64) -> Result<QuadratureScheme> {
    if n_nodes < 8 {
        return Err(Error::InvalidParameter(format!(
            "quadrature needs at least 8 nodes, got {n_nodes}"
        )));
    }
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quadrature cutoff must be positive, got {cutoff}"
        )));
    }
    let rule = GaussLegendre::new(n_nodes).map_err(|e| Error::InvalidParameter(format!("Gauss-Legendre rule: {e}")))?;
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // enforce exact t → −t symmetry
    let n = pairs.len();
    for k in 0..n / 2 {
        let (x, w) = (
            0.5 * (pairs[n - 1 - k].0 - pairs[k].0),
            0.5 * (pairs[k].1 + pairs[n - 1 - k].1),
        );
        pairs[k] = (-x, w);
        pairs[n - 1 - k] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let nodes: Vec<f64> = pairs.iter().map(|p| p.0 * cutoff).collect();
    let weights = pairs.iter().zip(&nodes).map(|(p, &t)| p.1 * cutoff * beta0(t)).collect();
    Ok(QuadratureScheme { nodes, weights, cutoff })
}

fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

/// Kraus operators `σ^α K_i† γ^{−α}` of the twisted map at parameter `t`.
pub fn twisted_kraus(gamma: &PsdMatrix, sigma: &DensityMatrix, m: &Channel, t: f64) -> Result<Vec<CMatrix>> {
    check_dim("twisted map gamma", m.d_out(), gamma.dim())?;
    check_dim("twisted map sigma", m.d_in(), sigma.dim())?;
    let alpha = c(0.5, -0.5 * t);
    let s_alpha = frac_power(sigma.psd(), alpha);
    let g_alpha = frac_power(gamma, -alpha);
    Ok(m.kraus().iter().map(|k| &s_alpha * k.adjoint() * &g_alpha).collect())
}

pub fn twisted_map(gamma: &PsdMatrix, sigma: &DensityMatrix, m: &Channel, t: f64) -> Result<Superoperator> {
    Superoperator::from_kraus(&twisted_kraus(gamma, sigma, m, t)?)
}

/// `R^α(X)` without building the superoperator.
pub fn twisted_apply(gamma: &PsdMatrix, sigma: &DensityMatrix, m: &Channel, t: f64, x: &CMatrix) -> Result<CMatrix> {
    check_dim("twisted map input", m.d_out(), x.nrows())?;
    let mut out = CMatrix::zeros(m.d_in(), m.d_in());
    for l in twisted_kraus(gamma, sigma, m, t)? {
        out += &l * x * l.adjoint();
    }
    Ok(out)
}

/// `Σ_k w_k R^{α(t_k)}`. Nodes are evaluated in parallel and summed in node order.
pub fn averaged_map(gamma: &PsdMatrix, sigma: &DensityMatrix, m: &Channel, q: &QuadratureScheme) -> Result<Superoperator> {
    let parts = q
        .nodes
        .par_iter()
        .zip(q.weights.par_iter())
        .map(|(&t, &w)| Ok(twisted_map(gamma, sigma, m, t)?.scaled(w)))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = Superoperator {
        d_in: m.d_out(),
        d_out: m.d_in(),
        matrix: CMatrix::zeros(m.d_in() * m.d_in(), m.d_out() * m.d_out()),
    };
    for p in &parts {
        acc = &acc + p;
    }
    Ok(acc)
}

/// `R̄(X)` by direct summation over quadrature nodes.
pub fn averaged_apply(
    gamma: &PsdMatrix,
    sigma: &DensityMatrix,
    m: &Channel,
    q: &QuadratureScheme,
    x: &CMatrix,
) -> Result<CMatrix> {
    let parts = q
        .nodes
        .par_iter()
        .zip(q.weights.par_iter())
        .map(|(&t, &w)| Ok(twisted_apply(gamma, sigma, m, t, x)? * c(w, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = CMatrix::zeros(m.d_in(), m.d_in());
    for p in &parts {
        acc += p;
    }
    Ok(acc)
}

/// Petz map `σ^{1/2} M†(M(σ)^{−1/2} · M(σ)^{−1/2}) σ^{1/2}`.
pub fn petz_map(sigma: &DensityMatrix, m: &Channel) -> Result<Superoperator> {
    twisted_map(&m.apply_psd(sigma.psd())?, sigma, m, 0.0)
}

/// Rotated Petz map at parameter `t`.
pub fn rotated_petz_map(sigma: &DensityMatrix, m: &Channel, t: f64) -> Result<Superoperator> {
    twisted_map(&m.apply_psd(sigma.psd())?, sigma, m, t)
}

/// `R̄_{M(σ),σ,M}`, the universal recovery map.
pub fn universal_map(sigma: &DensityMatrix, m: &Channel, q: &QuadratureScheme) -> Result<Superoperator> {
    averaged_map(&m.apply_psd(sigma.psd())?, sigma, m, q)
}

/// Value of `Tr[Π_ρ R̄_{γ,σ,M}(ω)]` and whether it is at most one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceCondition {
    pub value: f64,
    pub holds: bool,
}

pub fn trace_condition(
    rho: &DensityMatrix,
    gamma: &PsdMatrix,
    sigma: &DensityMatrix,
    m: &Channel,
    omega: &PsdMatrix,
    q: &QuadratureScheme,
) -> Result<TraceCondition> {
    check_dim("trace condition rho", m.d_in(), rho.dim())?;
    check_dim("trace condition omega", m.d_out(), omega.dim())?;
    let recovered = averaged_apply(gamma, sigma, m, q, omega.matrix())?;
    let proj = support_projector(rho.psd(), SUPPORT_REL_TOL);
    let value = crate::linalg::trace_product(proj.matrix(), &recovered).re;
    Ok(TraceCondition {
        value,
        holds: value <= 1.0 + TRACE_CONDITION_TOL,
    })
}
