//! A qubit family on which the unconditional eigenbasis chain rule fails.
//!
//! For `p ∈ [0, 1/2)`, `θ ∈ (0, π)`, `ε ∈ (0, 1)`:
//!
//! ```text
//! ρ = (1−p)|0⟩⟨0| + p|1⟩⟨1|
//! σ = (1−ε)|θ+⟩⟨θ+| + ε|θ−⟩⟨θ−|,  |θ+⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩,  |θ−⟩ = sin(θ/2)|0⟩ − cos(θ/2)|1⟩
//! M(x) = Tr(x)|θ−⟩⟨θ−|,  N = pinching onto the eigenspaces of σ
//! ```
//!
//! The regularized bound compares `D(ρ‖σ) − D(M(ρ)‖N(σ))` against
//! `−lim (1/n) E D(M^{⊗n}(Π_k)‖N^{⊗n}(Π_k))` over the eigenprojectors `Π_k`
//! of `ρ^{⊗n}`. Both sides have closed forms, and the right side is in fact
//! independent of `n`. The bound fails exactly for `ε < ε*(θ, p)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergences::{binary_entropy, relative_entropy, umegaki};
use crate::error::{Error, Result};
use crate::linalg::{c, ketbra, CMatrix, PsdMatrix};
use crate::quantum::{pinching_channel, Channel, DensityMatrix};
use crate::{exp_b, log_b};

pub const MAX_FINITE_N: usize = 10;
pub const MAX_NUMERIC_N: usize = 8;
pub const MAX_SCAN_N: usize = 6;
pub const CSV_HEADER: &str = "p,theta,eps,lhs_gap,rhs_limit,eps_star,violated_analytic,violated_numeric,n_used";

/// A member `(p, θ, ε)` of the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub p: f64,
    pub theta: f64,
    pub eps: f64,
}

impl FamilyPoint {
    pub fn new(p: f64, theta: f64, eps: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&p) {
            return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1/2)")));
        }
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(Error::InvalidParameter(format!("theta = {theta} outside (0, pi)")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1)")));
        }
        Ok(Self { p, theta, eps })
    }

    fn sin2(&self) -> f64 {
        (self.theta / 2.0).sin().powi(2)
    }

    fn cos2(&self) -> f64 {
        (self.theta / 2.0).cos().powi(2)
    }
}

/// The four objects `(ρ, σ, M, N)` at a family point.
#[derive(Debug, Clone)]
pub struct FamilyStates {
    pub rho: DensityMatrix,
    pub sigma: DensityMatrix,
    pub m: Channel,
    pub n: Channel,
}

pub fn family_states(pt: &FamilyPoint) -> Result<FamilyStates> {
    let pt = FamilyPoint::new(pt.p, pt.theta, pt.eps)?;
    let (s, co) = ((pt.theta / 2.0).sin(), (pt.theta / 2.0).cos());
    let plus = ketbra(&[c(co, 0.0), c(s, 0.0)]);
    let minus_vec = [c(s, 0.0), c(-co, 0.0)];
    let minus = ketbra(&minus_vec);
    let rho = DensityMatrix::diagonal(&[1.0 - pt.p, pt.p])?;
    let sigma = DensityMatrix::from_matrix(plus * c(1.0 - pt.eps, 0.0) + &minus * c(pt.eps, 0.0))?;
    let m = Channel::replacement(&DensityMatrix::from_matrix(minus)?, 2);
    let n = pinching_channel(&sigma);
    Ok(FamilyStates { rho, sigma, m, n })
}

/// Closed form of `D(ρ‖σ) − D(M(ρ)‖N(σ))`.
pub fn lhs_gap(pt: &FamilyPoint) -> f64 {
    let weight = (1.0 - pt.p) * pt.cos2() + pt.p * pt.sin2();
    -binary_entropy(pt.p) + (log_b(pt.eps) - log_b(1.0 - pt.eps)) * weight
}

/// `D(ρ‖σ) − D(M(ρ)‖N(σ))` evaluated with matrix logarithms.
pub fn lhs_gap_numeric(pt: &FamilyPoint) -> Result<f64> {
    let f = family_states(pt)?;
    let d_in = umegaki(&f.rho, f.sigma.psd())?;
    let d_out = relative_entropy(&f.m.apply_psd(f.rho.psd())?, &f.n.apply_psd(f.sigma.psd())?)?;
    Ok(d_in.value() - d_out.value())
}

/// `(1−p) log sin²(θ/2) + p log cos²(θ/2)`.
pub fn rhs_limit(pt: &FamilyPoint) -> f64 {
    (1.0 - pt.p) * log_b(pt.sin2()) + pt.p * log_b(pt.cos2())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_n(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(Error::InvalidParameter(format!("n = {n} outside 1..={max}")));
    }
    Ok(())
}

/// `(1/n) Σ_k C(n,k)(1−p)^k p^{n−k} log(sin^{2k}(θ/2) cos^{2(n−k)}(θ/2))`.
pub fn rhs_finite_n(pt: &FamilyPoint, n: usize) -> Result<f64> {
    check_n(n, MAX_FINITE_N)?;
    let (ls, lc) = (log_b(pt.sin2()), log_b(pt.cos2()));
    let mut acc = 0.0;
    for k in 0..=n {
        let w = binomial(n, k) * (1.0 - pt.p).powi(k as i32) * pt.p.powi((n - k) as i32);
        if w == 0.0 {
            continue;
        }
        acc += w * (k as f64 * ls + (n - k) as f64 * lc);
    }
    Ok(acc / n as f64)
}

/// `−(1/n) Σ_k λ_k D(M^{⊗n}(Π_k)‖N^{⊗n}(Π_k))` from the `n`-copy matrices.
///
/// `Π_k` projects onto the computational basis strings with `k` zeros, the
/// eigenspace of `ρ^{⊗n}` with eigenvalue `λ_k = (1−p)^k p^{n−k}`. The
/// divergence is taken between the unnormalized images (both of trace
/// `C(n,k)`), which carries the multiplicity factor.
pub fn rhs_numeric_n(pt: &FamilyPoint, n: usize) -> Result<f64> {
    check_n(n, MAX_NUMERIC_N)?;
    let f = family_states(pt)?;
    let dim = 1usize << n;
    let mut acc = 0.0;
    for k in 0..=n {
        let lambda = (1.0 - pt.p).powi(k as i32) * pt.p.powi((n - k) as i32);
        if lambda == 0.0 {
            continue;
        }
        let mut proj = CMatrix::zeros(dim, dim);
        for idx in 0..dim {
            // bit set = |1⟩ on that site
            if n - idx.count_ones() as usize == k {
                proj[(idx, idx)] = c(1.0, 0.0);
            }
        }
        let a = PsdMatrix::from_hermitian_part(&f.m.apply_tensor_power(&proj, n)?)?;
        let b = PsdMatrix::from_hermitian_part(&f.n.apply_tensor_power(&proj, n)?)?;
        let d = relative_entropy(&a, &b)?;
        if !d.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
        acc += lambda * d.value();
    }
    Ok(-acc / n as f64)
}

/// Boundary `ε* = E/(1+E)`: the bound fails iff `ε < ε*`.
pub fn eps_star(theta: f64, p: f64) -> f64 {
    let s2 = (theta / 2.0).sin().powi(2);
    let c2 = (theta / 2.0).cos().powi(2);
    let num = (1.0 - p) * log_b(s2) + p * log_b(c2) + binary_entropy(p);
    let den = (1.0 - p) * c2 + p * s2;
    let e = exp_b(num / den);
    e / (1.0 + e)
}

/// One grid point of a region scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub p: f64,
    pub theta: f64,
    pub eps: f64,
    pub lhs_gap: f64,
    pub rhs_limit: f64,
    pub eps_star: f64,
    pub violated_analytic: bool,
    pub violated_numeric: bool,
    pub n_used: usize,
}

pub fn evaluate_point(pt: &FamilyPoint, n_numeric: usize) -> Result<RegionRow> {
    let gap = lhs_gap(pt);
    let limit = rhs_limit(pt);
    let numeric_gap = lhs_gap_numeric(pt)?;
    let numeric_rhs = rhs_numeric_n(pt, n_numeric)?;
    Ok(RegionRow {
        p: pt.p,
        theta: pt.theta,
        eps: pt.eps,
        lhs_gap: gap,
        rhs_limit: limit,
        eps_star: eps_star(pt.theta, pt.p),
        violated_analytic: gap < limit,
        violated_numeric: numeric_gap < numeric_rhs,
        n_used: n_numeric,
    })
}

/// `θ = kπ/50` for `k = 1..=49`.
pub fn default_theta_grid() -> Vec<f64> {
    (1..50).map(|k| k as f64 * std::f64::consts::PI / 50.0).collect()
}

/// `ε = 0.01, 0.02, …, 0.49`.
pub fn default_eps_grid() -> Vec<f64> {
    (1..50).map(|k| k as f64 / 100.0).collect()
}

pub fn default_p_values() -> Vec<f64> {
    vec![0.0, 0.25, 0.49]
}

pub const DEFAULT_SCAN_N: usize = 4;

/// Evaluates every `(p, θ, ε)` in lexicographic order. Points run in
/// parallel; the output order is the grid order.
pub fn region_scan(p_values: &[f64], theta_grid: &[f64], eps_grid: &[f64], n_numeric: usize) -> Result<Vec<RegionRow>> {
    if p_values.is_empty() || theta_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidParameter("scan grids must be nonempty".into()));
    }
    check_n(n_numeric, MAX_SCAN_N)?;
    let mut points = Vec::with_capacity(p_values.len() * theta_grid.len() * eps_grid.len());
    for &p in p_values {
        for &theta in theta_grid {
            for &eps in eps_grid {
                points.push(FamilyPoint::new(p, theta, eps)?);
            }
        }
    }
    points.par_iter().map(|pt| evaluate_point(pt, n_numeric)).collect()
}

/// `%.12g`-style formatting.
pub fn format_g12(x: f64) -> String {
    const P: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-4..P).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x))
    }
}

fn strip_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Writes the header and one LF-terminated line per row.
pub fn write_csv<W: Write>(rows: &[RegionRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            format_g12(r.p),
            format_g12(r.theta),
            format_g12(r.eps),
            format_g12(r.lhs_gap),
            format_g12(r.rhs_limit),
            format_g12(r.eps_star),
            u8::from(r.violated_analytic),
            u8::from(r.violated_numeric),
            r.n_used
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use std::f64::consts::PI;

    #[test]
    fn base_example_objects() {
        let f = family_states(&FamilyPoint::new(0.0, PI / 2.0, 0.1).unwrap()).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let minus = ketbra(&[c(r, 0.0), c(-r, 0.0)]);
        let zero = crate::linalg::real_diag(&[1.0, 0.0]);
        assert!(max_abs_diff(f.rho.matrix(), &zero) < 1e-15);
        assert!(max_abs_diff(&f.m.apply(&zero).unwrap(), &minus) < 1e-14);
        let expected = crate::linalg::real_diag(&[0.5, 0.5]);
        assert!(max_abs_diff(&f.n.apply(&zero).unwrap(), &expected) < 1e-14);
    }

    #[test]
    fn range_checks() {
        assert!(FamilyPoint::new(0.5, 1.0, 0.1).is_err());
        assert!(FamilyPoint::new(0.0, 0.0, 0.1).is_err());
        assert!(FamilyPoint::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn lhs_gap_values() {
        let pt = FamilyPoint::new(0.0, PI / 2.0, 0.2).unwrap();
        assert!((lhs_gap(&pt) + 1.0).abs() < 1e-12);
        let pt = FamilyPoint::new(0.0, 1.1, 0.5).unwrap();
        assert!(lhs_gap(&pt).abs() < 1e-15);
        for (p, theta, eps) in [(0.1, 0.7, 0.3), (0.3, 2.2, 0.05), (0.45, 1.5, 0.8)] {
            let pt = FamilyPoint::new(p, theta, eps).unwrap();
            assert!((lhs_gap(&pt) - lhs_gap_numeric(&pt).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn rhs_forms_agree() {
        let pt = FamilyPoint::new(0.0, PI / 2.0, 0.1).unwrap();
        for n in 1..=MAX_FINITE_N {
            assert!((rhs_finite_n(&pt, n).unwrap() + 1.0).abs() < 1e-12);
        }
        let pt = FamilyPoint::new(0.0, 0.9, 0.1).unwrap();
        assert!((rhs_limit(&pt) - (0.45f64).sin().powi(2).log2()).abs() < 1e-14);
        let pt = FamilyPoint::new(0.3, 1.0, 0.2).unwrap();
        for n in 1..=4 {
            assert!((rhs_numeric_n(&pt, n).unwrap() - rhs_finite_n(&pt, n).unwrap()).abs() < 1e-8);
        }
        assert!(rhs_finite_n(&pt, 0).is_err() && rhs_numeric_n(&pt, 9).is_err());
    }

    #[test]
    fn eps_star_values() {
        assert!((eps_star(PI / 2.0, 0.0) - 0.2).abs() < 1e-12);
        let s = eps_star(PI / 2.0, 0.49);
        assert!((s - 0.5).abs() < 0.01);
        for k in 1..50 {
            let e = eps_star(k as f64 * PI / 50.0, 0.25);
            assert!(e > 0.0 && e < 1.0);
        }
    }

    #[test]
    fn g12_format() {
        assert_eq!(format_g12(0.0), "0");
        assert_eq!(format_g12(0.2), "0.2");
        assert_eq!(format_g12(-1.0), "-1");
        assert_eq!(format_g12(PI), "3.14159265359");
        assert_eq!(format_g12(1.5e-7), "1.5e-07");
        assert_eq!(format_g12(123456789012345.0), "1.23456789012e+14");
        assert_eq!(format_g12(0.0001), "0.0001");
    }

    #[test]
    fn csv_layout() {
        let rows = region_scan(&[0.0], &[PI / 2.0], &[0.19, 0.21], 2).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].ends_with(",1,1,2"));
        assert!(lines[2].ends_with(",0,0,2"));
        assert!(!text.contains('\r'));
    }
}
