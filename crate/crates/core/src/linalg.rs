//! Hermitian spectral calculus on dense complex matrices.
//!
//! Everything here works on [`CMatrix`] (a column-major `nalgebra` matrix of
//! `Complex64`). Spectral decompositions are deterministic: eigenvalues come
//! sorted descending, each eigenvector has its largest-magnitude component made
//! real and positive, and ties are broken by lexicographic order of the
//! eigenvector entries. Functions of positive operators act on the support
//! only; kernel directions map to zero.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::cmp::Ordering;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance for the Hermiticity check, scaled by `1 + max|entry|`.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Eigenvalues above `-PSD_REL_TOL * λ_max` are accepted (and clamped to 0).
pub const PSD_REL_TOL: f64 = 1e-10;
/// Default relative support cutoff: `λ > SUPPORT_REL_TOL * λ_max`.
pub const SUPPORT_REL_TOL: f64 = 1e-10;
/// Eigenvalues closer than this (relative to `λ_max`) share an eigenspace when grouping.
pub const DEGENERACY_REL_GAP: f64 = 1e-8;

const ABS_FLOOR: f64 = 1e-300;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(values.len(), values.len());
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = c(*v, 0.0);
    }
    m
}

/// Build a matrix from row-major real entries.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

pub fn ketbra(v: &[Complex64]) -> CMatrix {
    let n = v.len();
    CMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj())
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `Tr[a b]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `V diag(f) V†` for a matrix `V` with orthonormal columns.
pub fn unitary_congruence(v: &CMatrix, f: &[Complex64]) -> CMatrix {
    let mut scaled = v.clone();
    for (j, fj) in f.iter().enumerate() {
        for z in scaled.column_mut(j).iter_mut() {
            *z *= fj;
        }
    }
    scaled * v.adjoint()
}

/// Which factor of a bipartite operator survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of an operator on `C^{d_a} ⊗ C^{d_b}` (row index `a * d_b + b`).
pub fn partial_trace(x: &CMatrix, d_a: usize, d_b: usize, keep: Keep) -> Result<CMatrix> {
    if x.nrows() != d_a * d_b || x.ncols() != d_a * d_b {
        return Err(Error::DimensionMismatch {
            context: "partial_trace",
            expected: d_a * d_b,
            found: x.nrows(),
        });
    }
    Ok(match keep {
        Keep::First => CMatrix::from_fn(d_a, d_a, |a, a2| (0..d_b).map(|b| x[(a * d_b + b, a2 * d_b + b)]).sum()),
        Keep::Second => CMatrix::from_fn(d_b, d_b, |b, b2| (0..d_a).map(|a| x[(a * d_b + b, a * d_b + b2)]).sum()),
    })
}

/// A complex matrix that equals its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: CMatrix,
}

impl HermitianMatrix {
    /// Validates Hermiticity within `1e-12 · (1 + max|entry|)` and stores the
    /// exactly symmetrized matrix `(A + A†) / 2`.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        let adj = entries.adjoint();
        let deviation = max_abs_diff(&entries, &adj);
        if deviation > HERMITICITY_TOL * (1.0 + max_abs(&entries)) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            entries: (entries + adj) * c(0.5, 0.0),
        })
    }

    /// Symmetrizes without checking. Callers guarantee Hermiticity up to rounding.
    pub fn from_hermitian_part(entries: &CMatrix) -> Self {
        Self {
            entries: (entries + entries.adjoint()) * c(0.5, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }
}

/// Deterministic eigendecomposition `h = Σ_k λ_k |v_k⟩⟨v_k|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectral {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Unitary whose columns are the eigenvectors, in eigenvalue order.
    pub basis: CMatrix,
}

/// A group of (numerically) degenerate eigenvalues and the projector onto their span.
#[derive(Debug, Clone)]
pub struct EigenSpace {
    pub eigenvalue: f64,
    pub indices: Vec<usize>,
    pub projector: CMatrix,
}

impl Spectral {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Largest eigenvalue magnitude.
    pub fn scale(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |a, l| a.max(l.abs()))
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.basis.column(k).iter().copied().collect()
    }

    /// Rank-1 projector onto the `k`-th eigenvector.
    pub fn projector(&self, k: usize) -> CMatrix {
        let v = self.basis.column(k);
        v * v.adjoint()
    }

    pub fn eigenprojectors(&self) -> Vec<CMatrix> {
        (0..self.dim()).map(|k| self.projector(k)).collect()
    }

    /// Merge eigenvalues within `rel_gap · scale` of their neighbour into one eigenspace.
    pub fn grouped(&self, rel_gap: f64) -> Vec<EigenSpace> {
        let tol = rel_gap * self.scale().max(ABS_FLOOR);
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for k in 0..self.dim() {
            match groups.last_mut() {
                Some(g) if self.eigenvalues[*g.last().unwrap()] - self.eigenvalues[k] <= tol => g.push(k),
                _ => groups.push(vec![k]),
            }
        }
        groups
            .into_iter()
            .map(|indices| {
                let d = self.dim();
                let mut projector = CMatrix::zeros(d, d);
                for &k in &indices {
                    projector += self.projector(k);
                }
                let eigenvalue = indices.iter().map(|&k| self.eigenvalues[k]).sum::<f64>() / indices.len() as f64;
                EigenSpace {
                    eigenvalue,
                    indices,
                    projector,
                }
            })
            .collect()
    }

    /// `Σ_k f(λ_k) |v_k⟩⟨v_k|`.
    pub fn map<F: Fn(f64) -> Complex64>(&self, f: F) -> CMatrix {
        let values: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        unitary_congruence(&self.basis, &values)
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|l| c(l, 0.0))
    }
}

fn lexicographic_desc(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Hermitian eigendecomposition with deterministic ordering and phases.
pub fn eig_hermitian(h: &HermitianMatrix) -> Spectral {
    let d = h.dim();
    if d == 0 {
        return Spectral {
            eigenvalues: vec![],
            basis: CMatrix::zeros(0, 0),
        };
    }
    let eig = h.matrix().clone().symmetric_eigen();
    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..d)
        .map(|k| {
            let mut v: Vec<Complex64> = eig.eigenvectors.column(k).iter().copied().collect();
            let mut best = 0;
            for i in 1..d {
                if v[i].norm() > v[best].norm() * (1.0 + 1e-12) {
                    best = i;
                }
            }
            let pivot = v[best];
            if pivot.norm() > 0.0 {
                let phase = pivot.conj() / pivot.norm();
                for z in v.iter_mut() {
                    *z *= phase;
                }
                v[best] = c(v[best].norm(), 0.0);
            }
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    // break ties inside clusters of equal eigenvalues
    let scale = pairs.iter().fold(0.0_f64, |a, p| a.max(p.0.abs())).max(ABS_FLOOR);
    let tie = 1e-12 * scale;
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && pairs[end - 1].0 - pairs[end].0 <= tie {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|a, b| lexicographic_desc(&a.1, &b.1));
        }
        start = end;
    }

    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let basis = CMatrix::from_fn(d, d, |i, k| pairs[k].1[i]);
    Spectral { eigenvalues, basis }
}

/// A Hermitian matrix with nonnegative spectrum, stored with its spectral decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix {
    base: HermitianMatrix,
    spectral: Spectral,
}

impl PsdMatrix {
    /// Eigenvalues in `[-1e-10 λ_max, 0)` are clamped to zero; anything more negative is rejected.
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let mut spectral = eig_hermitian(&h);
        let lmax = spectral.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        let lmin = spectral.eigenvalues.last().copied().unwrap_or(0.0);
        if lmin < -(PSD_REL_TOL * lmax + 1e-15) {
            return Err(Error::NotPsd { min_eigenvalue: lmin });
        }
        if lmin < 0.0 {
            for l in spectral.eigenvalues.iter_mut() {
                *l = l.max(0.0);
            }
            let base = HermitianMatrix::from_hermitian_part(&spectral.reconstruct());
            return Ok(Self { base, spectral });
        }
        Ok(Self { base: h, spectral })
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    /// For matrices that are PSD by construction up to rounding (e.g. `K X K†`).
    pub fn from_hermitian_part(m: &CMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::from_hermitian_part(m))
    }

    pub fn zeros(d: usize) -> Self {
        Self::new(HermitianMatrix {
            entries: CMatrix::zeros(d, d),
        })
        .expect("zero matrix is PSD")
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.base.matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.base
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn trace(&self) -> f64 {
        trace(self.matrix()).re
    }

    pub fn lambda_max(&self) -> f64 {
        self.spectral.eigenvalues.first().copied().unwrap_or(0.0).max(0.0)
    }

    /// Absolute eigenvalue threshold for the support at relative tolerance `rel_tol`.
    pub fn cutoff(&self, rel_tol: f64) -> f64 {
        rel_tol * self.lambda_max()
    }

    pub fn in_support(&self, lambda: f64) -> bool {
        lambda > self.cutoff(SUPPORT_REL_TOL) && lambda > 0.0
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_hermitian_part(&(self.matrix() * c(factor, 0.0)))
    }
}

/// Projector onto the span of eigenvectors with `λ > rel_tol · λ_max`.
pub fn support_projector(a: &PsdMatrix, rel_tol: f64) -> PsdMatrix {
    let cut = a.cutoff(rel_tol);
    let m = a
        .spectral()
        .map(|l| if l > cut && l > 0.0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    PsdMatrix::from_hermitian_part(&m).expect("projector is PSD")
}

/// `Σ_{λ_k in support} log_b(λ_k) P_k`, zero on the kernel.
pub fn mat_log_support(a: &PsdMatrix) -> HermitianMatrix {
    let m = a.spectral().map(|l| {
        if a.in_support(l) {
            c(crate::log_b(l), 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    HermitianMatrix::from_hermitian_part(&m)
}

/// `Σ_{λ_k in support} exp(α ln λ_k) P_k`; the kernel maps to zero for every `α`.
pub fn frac_power(a: &PsdMatrix, alpha: Complex64) -> CMatrix {
    a.spectral().map(|l| {
        if a.in_support(l) {
            (alpha * l.ln()).exp()
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Unitary whose columns simultaneously diagonalize two commuting Hermitian matrices.
///
/// Columns are ordered by the eigenvalues of `a` (descending), then by those of `b`
/// inside each degenerate eigenspace of `a`.
pub fn common_eigenbasis(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<CMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context: "common_eigenbasis",
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let d = a.dim();
    let spec = eig_hermitian(a);
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for space in spec.grouped(DEGENERACY_REL_GAP) {
        let k = space.indices.len();
        let v = CMatrix::from_fn(d, k, |i, j| spec.basis[(i, space.indices[j])]);
        if k == 1 {
            columns.push(v.column(0).iter().copied().collect());
            continue;
        }
        let restricted = HermitianMatrix::from_hermitian_part(&(v.adjoint() * b.matrix() * &v));
        let inner = eig_hermitian(&restricted);
        let rotated = &v * &inner.basis;
        for j in 0..k {
            columns.push(rotated.column(j).iter().copied().collect());
        }
    }
    Ok(CMatrix::from_fn(d, d, |i, j| columns[j][i]))
}
