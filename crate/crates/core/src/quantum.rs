//! States, measurements and channels on finite-dimensional Hilbert spaces.
//!
//! Channels are stored as Kraus families; Choi operators and adjoints are
//! derived on demand. All random generators are deterministic in their seed.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, eig_hermitian, frac_power, identity, kron, max_abs_diff, trace, CMatrix, HermitianMatrix, PsdMatrix, DEGENERACY_REL_GAP,
};
use crate::rng::{gaussian_matrix, seeded};

/// Trace-one tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Resolution-of-identity tolerance for POVMs.
pub const POVM_TOL: f64 = 1e-10;
/// `Σ K†K = I` tolerance for channels.
pub const TP_TOL: f64 = 1e-9;

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

/// A positive semidefinite operator of unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    base: PsdMatrix,
}

impl DensityMatrix {
    pub fn new(base: PsdMatrix) -> Result<Self> {
        let tr = base.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace { trace: tr });
        }
        Ok(Self { base })
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(PsdMatrix::from_matrix(m)?)
    }

    /// Divides a nonzero PSD operator by its trace.
    pub fn normalize(a: &PsdMatrix) -> Result<Self> {
        let tr = a.trace();
        if tr <= 0.0 {
            return Err(Error::InvalidTrace { trace: tr });
        }
        Self::new(PsdMatrix::from_hermitian_part(&(a.matrix() * c(1.0 / tr, 0.0)))?)
    }

    /// `|ψ⟩⟨ψ|` for a unit vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        Self::from_matrix(crate::linalg::ketbra(psi))
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::from_matrix(crate::linalg::real_diag(probs))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::diagonal(&vec![1.0 / d as f64; d]).expect("I/d is a state")
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.base.matrix()
    }

    pub fn psd(&self) -> &PsdMatrix {
        &self.base
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.base.spectral().eigenvalues
    }

    /// Transpose in the canonical basis.
    pub fn transpose(&self) -> Self {
        Self::from_matrix(self.matrix().transpose()).expect("transpose of a state is a state")
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Self {
        Self::from_matrix(kron(self.matrix(), other.matrix())).expect("product of states is a state")
    }
}

/// A finite family of PSD operators summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<PsdMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<PsdMatrix>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidParameter("POVM needs at least one element".into()))?;
        let d = first.dim();
        let mut sum = CMatrix::zeros(d, d);
        for e in &elements {
            check_dim("povm element", d, e.dim())?;
            sum += e.matrix();
        }
        let deviation = max_abs_diff(&sum, &identity(d));
        if deviation > POVM_TOL {
            return Err(Error::NotResolutionOfIdentity { deviation });
        }
        Ok(Self { elements })
    }

    pub fn from_matrices(ms: Vec<CMatrix>) -> Result<Self> {
        Self::new(ms.into_iter().map(PsdMatrix::from_matrix).collect::<Result<_>>()?)
    }

    /// Rank-1 projective measurement onto the columns of a unitary.
    pub fn from_basis(u: &CMatrix) -> Result<Self> {
        let ms = (0..u.ncols())
            .map(|k| {
                let v = u.column(k);
                v * v.adjoint()
            })
            .collect();
        Self::from_matrices(ms)
    }

    pub fn computational(d: usize) -> Self {
        Self::from_basis(&identity(d)).expect("canonical basis is a POVM")
    }

    pub fn trivial(d: usize) -> Self {
        Self::from_matrices(vec![identity(d)]).expect("{I} is a POVM")
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[PsdMatrix] {
        &self.elements
    }

    /// Outcome weights `Re Tr[G_j x]`, clamped at zero.
    pub fn probabilities(&self, x: &CMatrix) -> Result<Vec<f64>> {
        check_dim("povm probabilities", self.dim(), x.nrows())?;
        Ok(self
            .elements
            .iter()
            .map(|g| crate::linalg::trace_product(g.matrix(), x).re.max(0.0))
            .collect())
    }

    pub fn tensor(&self, other: &Povm) -> Result<Self> {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.elements {
            for b in &other.elements {
                out.push(kron(a.matrix(), b.matrix()));
            }
        }
        Self::from_matrices(out)
    }
}

/// A completely positive map given by Kraus operators, `x ↦ Σ K x K†`.
///
/// Not necessarily trace preserving; adjoints of channels live here.
#[derive(Debug, Clone, PartialEq)]
pub struct CpMap {
    kraus: Vec<CMatrix>,
    d_in: usize,
    d_out: usize,
}

impl CpMap {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidParameter("Kraus family is empty".into()))?;
        let (d_out, d_in) = first.shape();
        for k in &kraus {
            check_dim("kraus rows", d_out, k.nrows())?;
            check_dim("kraus cols", d_in, k.ncols())?;
        }
        Ok(Self { kraus, d_in, d_out })
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        check_dim("map input", self.d_in, x.nrows())?;
        check_dim("map input", self.d_in, x.ncols())?;
        let mut out = CMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        Ok(out)
    }

    /// `x ↦ Σ K† x K`.
    pub fn adjoint(&self) -> CpMap {
        CpMap {
            kraus: self.kraus.iter().map(|k| k.adjoint()).collect(),
            d_in: self.d_out,
            d_out: self.d_in,
        }
    }

    /// `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, of size `d_in·d_out`.
    pub fn choi(&self) -> CMatrix {
        let n = self.d_in * self.d_out;
        let mut out = CMatrix::zeros(n, n);
        for k in &self.kraus {
            // vec-of-Kraus trick: Choi = Σ_K |K⟩⟩⟨⟨K| with |K⟩⟩ = Σ_i |i⟩ ⊗ K|i⟩
            let v = CMatrix::from_fn(n, 1, |r, _| {
                let (i, o) = (r / self.d_out, r % self.d_out);
                k[(o, i)]
            });
            out += &v * v.adjoint();
        }
        out
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        let h = HermitianMatrix::from_hermitian_part(&self.choi());
        eig_hermitian(&h).eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `Φ ∘ other`: apply `other` first.
    pub fn after(&self, other: &CpMap) -> Result<CpMap> {
        check_dim("composition", self.d_in, other.d_out)?;
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a * b);
            }
        }
        CpMap::new(kraus)
    }

    /// Applies the map independently to each of `n` tensor factors of `x`.
    pub fn apply_tensor_power(&self, x: &CMatrix, n: usize) -> Result<CMatrix> {
        let expected = self.d_in.pow(n as u32);
        check_dim("tensor power input", expected, x.nrows())?;
        check_dim("tensor power input", expected, x.ncols())?;
        let mut current = x.clone();
        for site in 0..n {
            current = self.apply_on_site(&current, n, site);
        }
        Ok(current)
    }

    // sites before `site` already carry d_out, sites after still carry d_in
    fn apply_on_site(&self, x: &CMatrix, n: usize, site: usize) -> CMatrix {
        let (di, dout) = (self.d_in, self.d_out);
        let pre = dout.pow(site as u32);
        let post = di.pow((n - site - 1) as u32);
        let dim_in = pre * di * post;
        let dim_out = pre * dout * post;
        let mut y = CMatrix::zeros(dim_out, dim_out);
        let mut left = CMatrix::zeros(dim_out, dim_in);
        for k in &self.kraus {
            left.fill(c(0.0, 0.0));
            for a in 0..pre {
                for o in 0..dout {
                    for i in 0..di {
                        let kv = k[(o, i)];
                        if kv == c(0.0, 0.0) {
                            continue;
                        }
                        for b in 0..post {
                            let r_out = (a * dout + o) * post + b;
                            let r_in = (a * di + i) * post + b;
                            for col in 0..dim_in {
                                left[(r_out, col)] += kv * x[(r_in, col)];
                            }
                        }
                    }
                }
            }
            for a in 0..pre {
                for o in 0..dout {
                    for i in 0..di {
                        let kv = k[(o, i)].conj();
                        if kv == c(0.0, 0.0) {
                            continue;
                        }
                        for b in 0..post {
                            let c_out = (a * dout + o) * post + b;
                            let c_in = (a * di + i) * post + b;
                            for row in 0..dim_out {
                                y[(row, c_out)] += left[(row, c_in)] * kv;
                            }
                        }
                    }
                }
            }
        }
        y
    }
}

/// A completely positive trace-preserving map.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    map: CpMap,
}

impl Channel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let map = CpMap::new(kraus)?;
        let mut sum = CMatrix::zeros(map.d_in, map.d_in);
        for k in &map.kraus {
            sum += k.adjoint() * k;
        }
        let deviation = max_abs_diff(&sum, &identity(map.d_in));
        if deviation > TP_TOL {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Self { map })
    }

    pub fn identity(d: usize) -> Self {
        Self::new(vec![identity(d)]).expect("identity channel")
    }

    pub fn unitary(u: &CMatrix) -> Result<Self> {
        Self::new(vec![u.clone()])
    }

    /// `x ↦ Tr(x) ω` for a fixed output state `ω`.
    pub fn replacement(output: &DensityMatrix, d_in: usize) -> Self {
        let spec = output.psd().spectral();
        let d_out = output.dim();
        let mut kraus = Vec::new();
        for (k, &w) in spec.eigenvalues.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let v = spec.basis.column(k);
            for i in 0..d_in {
                kraus.push(CMatrix::from_fn(d_out, d_in, |r, col| {
                    if col == i {
                        v[r] * w.sqrt()
                    } else {
                        c(0.0, 0.0)
                    }
                }));
            }
        }
        Self::new(kraus).expect("replacement channel is CPTP")
    }

    pub fn map(&self) -> &CpMap {
        &self.map
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.map.kraus
    }

    pub fn d_in(&self) -> usize {
        self.map.d_in
    }

    pub fn d_out(&self) -> usize {
        self.map.d_out
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        self.map.apply(x)
    }

    pub fn apply_psd(&self, x: &PsdMatrix) -> Result<PsdMatrix> {
        PsdMatrix::from_hermitian_part(&self.map.apply(x.matrix())?)
    }

    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(self.apply_psd(rho.psd())?)
    }

    pub fn adjoint(&self) -> CpMap {
        self.map.adjoint()
    }

    pub fn choi(&self) -> CMatrix {
        self.map.choi()
    }

    /// `self ∘ other`.
    pub fn after(&self, other: &Channel) -> Result<Channel> {
        Channel::new(self.map.after(&other.map)?.kraus)
    }

    pub fn apply_tensor_power(&self, x: &CMatrix, n: usize) -> Result<CMatrix> {
        self.map.apply_tensor_power(x, n)
    }
}

/// `x ↦ Σ K x K` evaluated through [`Channel::apply`].
pub fn apply_channel(ch: &Channel, x: &CMatrix) -> Result<CMatrix> {
    ch.apply(x)
}

/// The unital CP map `x ↦ Σ K† x K`.
pub fn adjoint_channel(ch: &Channel) -> CpMap {
    ch.adjoint()
}

/// Pinching onto the (degeneracy-grouped) eigenspaces of `sigma`.
pub fn pinching_channel(sigma: &DensityMatrix) -> Channel {
    let kraus = sigma
        .psd()
        .spectral()
        .grouped(DEGENERACY_REL_GAP)
        .into_iter()
        .map(|g| g.projector)
        .collect();
    Channel::new(kraus).expect("eigenprojectors resolve the identity")
}

/// Classical-quantum channel `X ↦ Σ_i τ_i Tr[Π_i X]` for an orthonormal rank-1 measurement `{Π_i}`.
pub fn cq_channel(projectors: &Povm, outputs: &[DensityMatrix]) -> Result<Channel> {
    if projectors.len() != outputs.len() {
        return Err(Error::LengthMismatch {
            left: projectors.len(),
            right: outputs.len(),
        });
    }
    let d_in = projectors.dim();
    let d_out = outputs[0].dim();
    let mut vectors = Vec::with_capacity(projectors.len());
    for p in projectors.elements() {
        let sq = p.matrix() * p.matrix();
        if max_abs_diff(&sq, p.matrix()) > 1e-9 || (p.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("cq_channel needs rank-1 projectors".into()));
        }
        vectors.push(p.spectral().basis.column(0).clone_owned());
    }
    for (i, a) in projectors.elements().iter().enumerate() {
        for b in &projectors.elements()[i + 1..] {
            if crate::linalg::trace_product(a.matrix(), b.matrix()).norm() > 1e-9 {
                return Err(Error::InvalidParameter("cq_channel projectors must be orthogonal".into()));
            }
        }
    }
    let mut kraus = Vec::new();
    for (e, tau) in vectors.iter().zip(outputs) {
        check_dim("cq output", d_out, tau.dim())?;
        let spec = tau.psd().spectral();
        for (k, &w) in spec.eigenvalues.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let v = spec.basis.column(k);
            kraus.push((v * e.adjoint()) * c(w.sqrt(), 0.0));
        }
    }
    let ch = Channel::new(kraus)?;
    check_dim("cq input", d_in, ch.d_in())?;
    Ok(ch)
}

/// How the bipartite state `ω_τ^ε` is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaConvention {
    /// `(id ⊗ ε)(|τ⟩⟩⟨⟨τ|)` with `|τ⟩⟩ = Σ_k √τ_k |τ_k, τ_k⟩` in the eigenbasis of `τ`.
    Purification,
    /// `(τ^{1/2} ⊗ I)(id ⊗ ε)(Σ_ij |ii⟩⟨jj|)(τ^{1/2} ⊗ I)` with the canonical basis.
    Transpose,
}

/// A state on `A ⊗ B` where the channel acted on `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    pub state: DensityMatrix,
    pub d_a: usize,
    pub d_b: usize,
    pub convention: OmegaConvention,
}

pub fn bipartite_omega(tau: &DensityMatrix, ch: &Channel, convention: OmegaConvention) -> Result<BipartiteState> {
    let d = tau.dim();
    check_dim("bipartite_omega", ch.d_in(), d)?;
    let d_out = ch.d_out();
    let (left, seed_vec) = match convention {
        OmegaConvention::Purification => {
            let spec = tau.psd().spectral();
            let mut v = CMatrix::zeros(d * d, 1);
            for (k, &w) in spec.eigenvalues.iter().enumerate() {
                let e = spec.basis.column(k);
                let amp = w.max(0.0).sqrt();
                for a in 0..d {
                    for b in 0..d {
                        v[(a * d + b, 0)] += e[a] * e[b] * amp;
                    }
                }
            }
            (identity(d), v)
        }
        OmegaConvention::Transpose => {
            let v = CMatrix::from_fn(d * d, 1, |r, _| if r / d == r % d { c(1.0, 0.0) } else { c(0.0, 0.0) });
            (frac_power(tau.psd(), c(0.5, 0.0)), v)
        }
    };
    let mut out = CMatrix::zeros(d * d_out, d * d_out);
    for k in ch.kraus() {
        let w = kron(&left, k) * &seed_vec;
        out += &w * w.adjoint();
    }
    Ok(BipartiteState {
        state: DensityMatrix::from_matrix(out)?,
        d_a: d,
        d_b: d_out,
        convention,
    })
}

fn check_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidParameter(format!("{name} must be positive")));
    }
    Ok(())
}

/// `G G† / Tr` with `G` a `dim × rank` complex Gaussian matrix.
pub fn random_density_with<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Result<DensityMatrix> {
    check_positive("dim", dim)?;
    check_positive("rank", rank)?;
    if rank > dim {
        return Err(Error::InvalidParameter(format!("rank {rank} exceeds dim {dim}")));
    }
    let g = gaussian_matrix(rng, dim, rank);
    let m = &g * g.adjoint();
    let tr = trace(&m).re;
    DensityMatrix::from_matrix(m * c(1.0 / tr, 0.0))
}

pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(&mut seeded(seed), dim, rank)
}

/// Random PSD elements `E_j`, normalized as `S^{-1/2} E_j S^{-1/2}` with `S = Σ E_j`.
pub fn random_povm_with<R: Rng + ?Sized>(rng: &mut R, dim: usize, n_outcomes: usize) -> Result<Povm> {
    check_positive("dim", dim)?;
    check_positive("n_outcomes", n_outcomes)?;
    let raw: Vec<CMatrix> = (0..n_outcomes)
        .map(|_| {
            let g = gaussian_matrix(rng, dim, dim);
            &g * g.adjoint()
        })
        .collect();
    let sum: CMatrix = raw.iter().sum();
    let s = PsdMatrix::from_hermitian_part(&sum)?;
    let inv_sqrt = frac_power(&s, c(-0.5, 0.0));
    let elements = raw
        .iter()
        .map(|e| PsdMatrix::from_hermitian_part(&(&inv_sqrt * e * &inv_sqrt)))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(elements)
}

pub fn random_povm(dim: usize, n_outcomes: usize, seed: u64) -> Result<Povm> {
    random_povm_with(&mut seeded(seed), dim, n_outcomes)
}

/// Kraus blocks of an isometry `C^{d_in} → C^{d_out} ⊗ C^{n_kraus}` obtained by QR.
pub fn random_channel_with<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize, n_kraus: usize) -> Result<Channel> {
    check_positive("d_in", d_in)?;
    check_positive("d_out", d_out)?;
    check_positive("n_kraus", n_kraus)?;
    if d_out * n_kraus < d_in {
        return Err(Error::InvalidParameter(format!(
            "d_out * n_kraus = {} cannot embed d_in = {d_in}",
            d_out * n_kraus
        )));
    }
    let g = gaussian_matrix(rng, d_out * n_kraus, d_in);
    let q = g.qr().q();
    let kraus = (0..n_kraus).map(|k| q.rows(k * d_out, d_out).clone_owned()).collect();
    Channel::new(kraus)
}

pub fn random_channel(d_in: usize, d_out: usize, n_kraus: usize, seed: u64) -> Result<Channel> {
    random_channel_with(&mut seeded(seed), d_in, d_out, n_kraus)
}

/// JSON file formats: complex scalars are `[re, im]`, matrices are row-major nested arrays.
pub mod io {
    use super::*;

    pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

    pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect()
    }

    pub fn matrix_from_json(rows: &JsonMatrix, n_rows: usize, n_cols: usize) -> Result<CMatrix> {
        check_dim("json rows", n_rows, rows.len())?;
        for r in rows {
            check_dim("json cols", n_cols, r.len())?;
        }
        Ok(CMatrix::from_fn(n_rows, n_cols, |i, j| c(rows[i][j][0], rows[i][j][1])))
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct StateFile {
        pub dim: usize,
        pub matrix: JsonMatrix,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct ChannelFile {
        pub d_in: usize,
        pub d_out: usize,
        pub kraus: Vec<JsonMatrix>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct PovmFile {
        pub dim: usize,
        pub elements: Vec<JsonMatrix>,
    }

    /// Any of the three file kinds, recognised by its fields.
    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    #[serde(untagged)]
    pub enum ObjectFile {
        State(StateFile),
        Channel(ChannelFile),
        Povm(PovmFile),
    }

    impl StateFile {
        pub fn from_state(rho: &DensityMatrix) -> Self {
            Self {
                dim: rho.dim(),
                matrix: matrix_to_json(rho.matrix()),
            }
        }

        pub fn to_state(&self) -> Result<DensityMatrix> {
            DensityMatrix::from_matrix(matrix_from_json(&self.matrix, self.dim, self.dim)?)
        }
    }

    impl ChannelFile {
        pub fn from_channel(ch: &Channel) -> Self {
            Self {
                d_in: ch.d_in(),
                d_out: ch.d_out(),
                kraus: ch.kraus().iter().map(matrix_to_json).collect(),
            }
        }

        pub fn to_channel(&self) -> Result<Channel> {
            let kraus = self
                .kraus
                .iter()
                .map(|k| matrix_from_json(k, self.d_out, self.d_in))
                .collect::<Result<Vec<_>>>()?;
            Channel::new(kraus)
        }
    }

    impl PovmFile {
        pub fn from_povm(g: &Povm) -> Self {
            Self {
                dim: g.dim(),
                elements: g.elements().iter().map(|e| matrix_to_json(e.matrix())).collect(),
            }
        }

        pub fn to_povm(&self) -> Result<Povm> {
            let ms = self
                .elements
                .iter()
                .map(|e| matrix_from_json(e, self.dim, self.dim))
                .collect::<Result<Vec<_>>>()?;
            Povm::from_matrices(ms)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, partial_trace, Keep};

    fn ket_minus() -> Vec<Complex64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        vec![c(r, 0.0), c(-r, 0.0)]
    }

    #[test]
    fn identity_channel_is_identity() {
        let rho = random_density(3, 3, 5).unwrap();
        let out = Channel::identity(3).apply(rho.matrix()).unwrap();
        assert!(max_abs_diff(&out, rho.matrix()) < 1e-15);
    }

    #[test]
    fn fully_depolarizing_qubit() {
        let ch = Channel::replacement(&DensityMatrix::maximally_mixed(2), 2);
        let rho = random_density(2, 1, 9).unwrap();
        let out = ch.apply(rho.matrix()).unwrap();
        assert!(max_abs_diff(&out, &identity(2).scale(0.5).map(|z| z)) < 1e-14);
    }

    #[test]
    fn replacement_to_minus() {
        let minus = DensityMatrix::pure(&ket_minus()).unwrap();
        let ch = Channel::replacement(&minus, 2);
        let zero = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert!(max_abs_diff(&ch.apply(zero.matrix()).unwrap(), minus.matrix()) < 1e-14);
    }

    #[test]
    fn adjoint_identity_and_unitary() {
        let id = Channel::identity(2).adjoint();
        let x = random_density(2, 2, 1).unwrap();
        assert!(max_abs_diff(&id.apply(x.matrix()).unwrap(), x.matrix()) < 1e-15);
        let u = crate::rng::random_unitary(&mut seeded(4), 3);
        let ch = Channel::unitary(&u).unwrap();
        let y = random_density(3, 3, 2).unwrap();
        let expected = u.adjoint() * y.matrix() * &u;
        assert!(max_abs_diff(&ch.adjoint().apply(y.matrix()).unwrap(), &expected) < 1e-14);
    }

    #[test]
    fn adjoint_duality() {
        let ch = random_channel(3, 3, 2, 11).unwrap();
        let mut rng = seeded(12);
        for _ in 0..20 {
            let a = gaussian_matrix(&mut rng, 3, 3);
            let b = gaussian_matrix(&mut rng, 3, 3);
            let lhs = trace(&(&a * ch.apply(&b).unwrap()));
            let rhs = trace(&(ch.adjoint().apply(&a).unwrap() * &b));
            assert!((lhs - rhs).norm() < 1e-10);
        }
        let unital = ch.adjoint().apply(&identity(3)).unwrap();
        assert!(max_abs_diff(&unital, &identity(3)) < 1e-9);
    }

    #[test]
    fn pinching_cases() {
        let mm = DensityMatrix::maximally_mixed(3);
        let p = pinching_channel(&mm);
        assert_eq!(p.kraus().len(), 1);
        let rho = random_density(3, 3, 3).unwrap();
        assert!(max_abs_diff(&p.apply(rho.matrix()).unwrap(), rho.matrix()) < 1e-14);

        let sigma = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        let rho = random_density(2, 2, 8).unwrap();
        let out = pinching_channel(&sigma).apply(rho.matrix()).unwrap();
        assert!(out[(0, 1)].norm() < 1e-15 && (out[(0, 0)] - rho.matrix()[(0, 0)]).norm() < 1e-15);

        // σ diagonal in |±⟩: pinching |0⟩⟨0| gives I/2
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let eps = 0.1;
        let plus = crate::linalg::ketbra(&[c(r, 0.0), c(r, 0.0)]);
        let minus = crate::linalg::ketbra(&ket_minus());
        let sigma = DensityMatrix::from_matrix(plus * c(1.0 - eps, 0.0) + minus * c(eps, 0.0)).unwrap();
        let zero = crate::linalg::real_diag(&[1.0, 0.0]);
        let out = pinching_channel(&sigma).apply(&zero).unwrap();
        assert!(max_abs_diff(&out, &crate::linalg::real_diag(&[0.5, 0.5])) < 1e-14);
    }

    #[test]
    fn cq_channel_cases() {
        let basis = Povm::computational(2);
        let tau0 = random_density(3, 3, 1).unwrap();
        let tau1 = random_density(3, 2, 2).unwrap();
        let ch = cq_channel(&basis, &[tau0.clone(), tau1.clone()]).unwrap();
        let p0 = crate::linalg::real_diag(&[1.0, 0.0]);
        assert!(max_abs_diff(&ch.apply(&p0).unwrap(), tau0.matrix()) < 1e-13);
        let rho = crate::linalg::real_diag(&[0.3, 0.7]);
        let mix = tau0.matrix() * c(0.3, 0.0) + tau1.matrix() * c(0.7, 0.0);
        assert!(max_abs_diff(&ch.apply(&rho).unwrap(), &mix) < 1e-13);

        let mm = DensityMatrix::maximally_mixed(2);
        let ch = cq_channel(&basis, &[mm.clone(), mm.clone()]).unwrap();
        let x = random_density(2, 2, 7).unwrap();
        assert!(max_abs_diff(&ch.apply(x.matrix()).unwrap(), mm.matrix()) < 1e-14);

        assert!(matches!(
            cq_channel(&basis, std::slice::from_ref(&mm)),
            Err(Error::LengthMismatch { .. })
        ));
        let nonproj = random_povm(2, 2, 3).unwrap();
        assert!(cq_channel(&nonproj, &[mm.clone(), mm]).is_err());
    }

    #[test]
    fn omega_cases() {
        let mm = DensityMatrix::maximally_mixed(2);
        let id = Channel::identity(2);
        let a = bipartite_omega(&mm, &id, OmegaConvention::Purification).unwrap();
        let b = bipartite_omega(&mm, &id, OmegaConvention::Transpose).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let phi = DensityMatrix::pure(&[c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0)]).unwrap();
        assert!(max_abs_diff(a.state.matrix(), phi.matrix()) < 1e-14);
        assert!(max_abs_diff(b.state.matrix(), phi.matrix()) < 1e-14);

        let zero = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let z = bipartite_omega(&zero, &id, OmegaConvention::Purification).unwrap();
        let expected = crate::linalg::real_diag(&[1.0, 0.0, 0.0, 0.0]);
        assert!(max_abs_diff(z.state.matrix(), &expected) < 1e-14);
    }

    #[test]
    fn omega_marginal_is_tau() {
        for seed in 0..10 {
            let tau = random_density(3, 3, seed).unwrap();
            let ch = random_channel(3, 2, 3, seed + 100).unwrap();
            for conv in [OmegaConvention::Purification, OmegaConvention::Transpose] {
                let w = bipartite_omega(&tau, &ch, conv).unwrap();
                let ta = partial_trace(w.state.matrix(), 3, 2, Keep::First).unwrap();
                assert!(max_abs_diff(&ta, tau.matrix()) < 1e-9);
            }
        }
    }

    #[test]
    fn generators_are_deterministic_and_valid() {
        assert_eq!(random_density(4, 2, 3).unwrap(), random_density(4, 2, 3).unwrap());
        let full = random_density(4, 4, 3).unwrap();
        assert!(full.eigenvalues().iter().all(|&l| l > 1e-12));
        assert!((full.psd().trace() - 1.0).abs() < 1e-12);
        let ch = random_channel(3, 2, 4, 5).unwrap();
        let mut s = CMatrix::zeros(3, 3);
        for k in ch.kraus() {
            s += k.adjoint() * k;
        }
        assert!(max_abs_diff(&s, &identity(3)) < 1e-10);
        assert!(ch.map().min_choi_eigenvalue() > -1e-9);
        assert_eq!(random_povm(3, 4, 1).unwrap(), random_povm(3, 4, 1).unwrap());
        assert!(random_density(2, 3, 0).is_err());
        assert!(random_channel(4, 1, 2, 0).is_err());
    }

    #[test]
    fn tensor_power_matches_kronecker_kraus() {
        let ch = random_channel(2, 3, 2, 21).unwrap();
        let x = random_density(4, 4, 22).unwrap();
        let mut kraus2 = Vec::new();
        for a in ch.kraus() {
            for b in ch.kraus() {
                kraus2.push(kron(a, b));
            }
        }
        let direct = CpMap::new(kraus2).unwrap().apply(x.matrix()).unwrap();
        let sitewise = ch.apply_tensor_power(x.matrix(), 2).unwrap();
        assert!(max_abs_diff(&direct, &sitewise) < 1e-13);
    }

    #[test]
    fn json_roundtrip_and_errors() {
        let ch = random_channel(2, 3, 2, 1).unwrap();
        let text = serde_json::to_string(&io::ChannelFile::from_channel(&ch)).unwrap();
        match serde_json::from_str::<io::ObjectFile>(&text).unwrap() {
            io::ObjectFile::Channel(f) => assert!(max_abs_diff(&f.to_channel().unwrap().kraus()[0], &ch.kraus()[0]) == 0.0),
            other => panic!("parsed as {other:?}"),
        }
        let bad = io::StateFile {
            dim: 2,
            matrix: vec![vec![[1.0, 0.0], [0.0, 0.0]]],
        };
        assert!(bad.to_state().is_err());
        assert!(max_abs(&io::matrix_from_json(&vec![vec![[0.0, 0.0]]], 1, 1).unwrap()) == 0.0);
    }
}
