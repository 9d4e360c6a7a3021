//! Inner–outer factorization of finite MA filters.
//!
//! Writing `p(z) = c ∏ (z − a_j)`, roots strictly inside the unit disk are
//! reflected: the outer factor receives `(1 − ā_j z)` in place of `(z − a_j)`,
//! and the inner (Blaschke) factor `∏ (z − a_j)/(1 − ā_j z)` keeps only the
//! phase. The outer factor has the same modulus on the unit circle as `p`, so
//! it drives the same covariance structure, and `|outer(0)|` is the one-step
//! root MSFE of the filtered process.

use num_complex::Complex64;

use super::{expand_complex, poly_roots, PolyError, PolyResult, TransferPoly};

/// Roots with modulus in `[1 − tol, 1)` are classified as outer-side.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-9;

const IMAG_RESIDUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub outer: TransferPoly,
    /// Roots strictly inside the disk (conjugate-closed).
    pub inner_roots: Vec<Complex64>,
    /// Sign of the leading coefficient `c`.
    pub scale_sign: f64,
    /// Roots within the boundary band around the unit circle, kept outer-side.
    pub unimodular_roots: Vec<Complex64>,
}

impl Factorization {
    pub fn is_invertible(&self) -> bool {
        self.inner_roots.is_empty()
    }

    /// `|outer(0)|`
    pub fn root_msfe(&self) -> f64 {
        self.outer.at_zero().abs()
    }

    /// Blaschke product evaluated at `z`.
    pub fn inner_eval(&self, z: Complex64) -> Complex64 {
        self.inner_roots
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &a| {
                acc * (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z)
            })
    }
}

pub fn inner_outer_factor(p: &TransferPoly, boundary_tol: f64) -> PolyResult<Factorization> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let scale_sign = p.leading().signum();
    if p.degree() == 0 {
        return Ok(Factorization {
            outer: p.clone(),
            inner_roots: vec![],
            scale_sign,
            unimodular_roots: vec![],
        });
    }
    let roots = poly_roots(p)?;
    let threshold = 1.0 - boundary_tol;
    let unimodular_roots: Vec<Complex64> = roots
        .iter()
        .copied()
        .filter(|r| (r.norm() - 1.0).abs() <= boundary_tol)
        .collect();
    let (inner, outer_roots): (Vec<Complex64>, Vec<Complex64>) =
        roots.into_iter().partition(|r| r.norm() < threshold);

    if inner.is_empty() {
        return Ok(Factorization {
            outer: p.clone(),
            inner_roots: vec![],
            scale_sign,
            unimodular_roots,
        });
    }

    let one = Complex64::new(1.0, 0.0);
    let factors = outer_roots
        .iter()
        .map(|&a| (-a, one))
        .chain(inner.iter().map(|&a| (one, -a.conj())));
    let expanded = expand_complex(Complex64::new(p.leading(), 0.0), factors);

    let scale = expanded.iter().fold(1.0_f64, |m, c| m.max(c.norm()));
    let residue = expanded.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()));
    if residue > IMAG_RESIDUE_TOL * scale {
        return Err(PolyError::NumericalInstability(format!(
            "outer factor has imaginary residue {residue:e} after conjugate pairing"
        )));
    }
    let outer = TransferPoly::new(expanded.iter().map(|c| c.re).collect::<Vec<_>>());
    Ok(Factorization {
        outer,
        inner_roots: inner,
        scale_sign,
        unimodular_roots,
    })
}

/// One-step root MSFE of the process `p(B) ε_t` under the optimal predictor.
pub fn root_msfe(p: &TransferPoly) -> PolyResult<f64> {
    Ok(inner_outer_factor(p, DEFAULT_BOUNDARY_TOL)?.root_msfe())
}

/// True iff no root lies strictly inside the disk `|z| < 1 − tol`.
pub fn is_invertible(p: &TransferPoly, boundary_tol: f64) -> PolyResult<bool> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    if p.degree() == 0 {
        return Ok(true);
    }
    let threshold = 1.0 - boundary_tol;
    Ok(poly_roots(p)?.iter().all(|r| r.norm() >= threshold))
}
