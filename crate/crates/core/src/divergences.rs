//! Classical and quantum relative entropies, measured divergences and fidelity.
//!
//! Every divergence returns an [`ExtendedReal`]: support violations produce
//! `+∞` instead of an error. Second arguments may be unnormalized positive
//! operators.

use std::fmt;
use std::ops::{Add, Neg};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, frac_power, CMatrix, PsdMatrix};
use crate::log_b;
use crate::quantum::{DensityMatrix, Povm};

/// Outcome weights at or below this are treated as exact zeros.
pub const PROB_FLOOR: f64 = 1e-14;
/// `Tr[ρ(I − Π_σ)]` above this (relative to `Tr ρ`) makes the divergence infinite.
pub const SUPPORT_LEAK_TOL: f64 = 1e-9;

/// A real number or one of `±∞`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtendedReal {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal::Finite(0.0);

    /// Maps `±inf` to the matching infinity. NaN is a caller bug.
    pub fn from_f64(x: f64) -> Self {
        debug_assert!(!x.is_nan(), "NaN is not an extended real");
        if x == f64::INFINITY {
            Self::PosInfinity
        } else if x == f64::NEG_INFINITY {
            Self::NegInfinity
        } else {
            Self::Finite(x)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Self::NegInfinity => f64::NEG_INFINITY,
            Self::Finite(x) => x,
            Self::PosInfinity => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }

    pub fn is_pos_infinite(self) -> bool {
        self == Self::PosInfinity
    }

    pub fn is_neg_infinite(self) -> bool {
        self == Self::NegInfinity
    }

    /// `w · self` for `w ≥ 0`, with `0 · ∞ = 0`.
    pub fn weighted(self, w: f64) -> Self {
        if w == 0.0 {
            return Self::ZERO;
        }
        match self {
            Self::Finite(x) => Self::Finite(w * x),
            inf => inf,
        }
    }
}

impl Neg for ExtendedReal {
    type Output = Self;

    fn neg(self) -> Self {
        match self {
            Self::NegInfinity => Self::PosInfinity,
            Self::Finite(x) => Self::Finite(-x),
            Self::PosInfinity => Self::NegInfinity,
        }
    }
}

/// Sum where `+∞` wins over everything and `-∞` over finite values.
impl Add for ExtendedReal {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        match (self, other) {
            (Self::PosInfinity, _) | (_, Self::PosInfinity) => Self::PosInfinity,
            (Self::NegInfinity, _) | (_, Self::NegInfinity) => Self::NegInfinity,
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a + b),
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NegInfinity => write!(f, "-inf"),
            Self::Finite(x) => fmt::Display::fmt(x, f),
            Self::PosInfinity => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::NegInfinity => s.serialize_str("-inf"),
            Self::Finite(x) => s.serialize_f64(*x),
            Self::PosInfinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = ExtendedReal;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a number, \"inf\" or \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtendedReal, E> {
                Ok(ExtendedReal::Finite(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtendedReal, E> {
                Ok(ExtendedReal::Finite(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtendedReal, E> {
                Ok(ExtendedReal::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtendedReal, E> {
                match v {
                    "inf" => Ok(ExtendedReal::PosInfinity),
                    "-inf" => Ok(ExtendedReal::NegInfinity),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// A vector of nonnegative weights, optionally required to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVec {
    weights: Vec<f64>,
}

impl ProbVec {
    /// Nonnegative entries summing to 1 within `1e-10`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let v = Self::unnormalized(weights)?;
        let total: f64 = v.weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidProbability(format!("weights sum to {total}")));
        }
        Ok(v)
    }

    /// Nonnegative entries with no constraint on the total.
    pub fn unnormalized(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidProbability(format!("entry {w} is not a nonnegative real")));
        }
        Ok(Self { weights })
    }

    pub fn delta(n: usize, j: usize) -> Self {
        let mut w = vec![0.0; n];
        w[j] = 1.0;
        Self { weights: w }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `Σ_x p_x log(p_x / q_x)` with the `1e-14` floor on both sides.
pub fn kl(p: &ProbVec, q: &ProbVec) -> Result<ExtendedReal> {
    kl_slices(p.weights(), q.weights())
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> Result<ExtendedReal> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut acc = 0.0;
    for (&px, &qx) in p.iter().zip(q) {
        if px <= PROB_FLOOR {
            continue;
        }
        if qx <= PROB_FLOOR {
            return Ok(ExtendedReal::PosInfinity);
        }
        acc += px * (log_b(px) - log_b(qx));
    }
    Ok(ExtendedReal::Finite(acc))
}

fn check_same_dim(context: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            context,
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// `Tr[a(log a − log b)]` for positive operators, `+∞` when `a` leaks out of the support of `b`.
pub fn relative_entropy(a: &PsdMatrix, b: &PsdMatrix) -> Result<ExtendedReal> {
    check_same_dim("relative_entropy", a.dim(), b.dim())?;
    let tr_a = a.trace();
    if tr_a <= 0.0 {
        return Ok(ExtendedReal::ZERO);
    }
    let sb = b.spectral();
    let vb = &sb.basis;
    // diagonal of a in the eigenbasis of b
    let rotated = vb.adjoint() * a.matrix() * vb;
    let mut leak = 0.0;
    let mut cross = 0.0;
    for (k, &mu) in sb.eigenvalues.iter().enumerate() {
        let w = rotated[(k, k)].re;
        if b.in_support(mu) {
            cross += w * log_b(mu);
        } else {
            leak += w;
        }
    }
    if leak > SUPPORT_LEAK_TOL * tr_a {
        return Ok(ExtendedReal::PosInfinity);
    }
    let self_term: f64 = a
        .spectral()
        .eigenvalues
        .iter()
        .filter(|&&l| a.in_support(l))
        .map(|&l| l * log_b(l))
        .sum();
    Ok(ExtendedReal::Finite(self_term - cross))
}

/// Umegaki relative entropy `D(ρ‖σ)`; `σ` may be unnormalized.
pub fn umegaki(rho: &DensityMatrix, sigma: &PsdMatrix) -> Result<ExtendedReal> {
    relative_entropy(rho.psd(), sigma)
}

/// `D(P_ρ^G ‖ P_σ^G)`; the `σ` side may be unnormalized.
pub fn measured(rho: &DensityMatrix, sigma: &PsdMatrix, g: &Povm) -> Result<ExtendedReal> {
    check_same_dim("measured", rho.dim(), sigma.dim())?;
    check_same_dim("measured", g.dim(), rho.dim())?;
    kl_slices(&g.probabilities(rho.matrix())?, &g.probabilities(sigma.matrix())?)
}

/// Rank-1 eigenprojectors of `ρ` in the deterministic order of [`eig_hermitian`].
pub fn eigenbasis_povm(rho: &DensityMatrix) -> Povm {
    Povm::from_basis(&rho.psd().spectral().basis).expect("eigenbasis is orthonormal")
}

/// `D_Π(ρ‖x)`: measured relative entropy in the eigenbasis of `ρ`.
pub fn measured_eigenbasis(rho: &DensityMatrix, x: &PsdMatrix) -> Result<ExtendedReal> {
    check_same_dim("measured_eigenbasis", rho.dim(), x.dim())?;
    let spec = rho.psd().spectral();
    let p = &spec.eigenvalues;
    let rotated = spec.basis.adjoint() * x.matrix() * &spec.basis;
    let q: Vec<f64> = (0..p.len()).map(|k| rotated[(k, k)].re.max(0.0)).collect();
    kl_slices(p, &q)
}

/// Same as [`measured_eigenbasis`] but for a general (possibly non-PSD-checked) matrix `x`.
pub fn measured_eigenbasis_raw(rho: &DensityMatrix, x: &CMatrix) -> Result<ExtendedReal> {
    let spec = rho.psd().spectral();
    check_same_dim("measured_eigenbasis", rho.dim(), x.nrows())?;
    let rotated = spec.basis.adjoint() * x * &spec.basis;
    let q: Vec<f64> = (0..spec.dim()).map(|k| rotated[(k, k)].re.max(0.0)).collect();
    kl_slices(&spec.eigenvalues, &q)
}

/// `‖√a √b‖₁` for positive operators.
pub fn fidelity_psd(a: &PsdMatrix, b: &PsdMatrix) -> Result<f64> {
    check_same_dim("fidelity", a.dim(), b.dim())?;
    // singular values of √a√b directly; eigenvalues of √a b √a lose half the digits under sqrt
    let prod = frac_power(a, c(0.5, 0.0)) * frac_power(b, c(0.5, 0.0));
    Ok(prod.singular_values().iter().sum())
}

pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    fidelity_psd(rho.psd(), sigma.psd())
}

/// `−p log p − (1−p) log(1−p)` in the configured base.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * log_b(x) } else { 0.0 };
    h(p) + h(1.0 - p)
}
