//! Real polynomials in the backshift variable.
//!
//! A [`TransferPoly`] holds the coefficients `c_0..c_q` of `c(z) = Σ c_k z^k`.
//! The same type carries market filters `ψ(z)`, allocation transfers `T_n(z)`,
//! seller filters `ψ_n(z)` and outer factors `O_n(z)`. All filters are driven
//! by unit-variance white noise, so the variance of the filtered process is
//! the squared coefficient norm.
//!
//! Root finding lives in [`roots`], inner–outer splitting and the root MSFE in
//! [`factor`].

mod factor;
mod roots;

pub use factor::{
    inner_outer_factor, is_invertible, root_msfe, Factorization, DEFAULT_BOUNDARY_TOL,
};
pub use roots::poly_roots;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Trailing coefficients below this magnitude are dropped.
pub const TRIM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("polynomial has degree 0 and therefore no roots")]
    NoRoots,
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("numerical instability: {0}")]
    NumericalInstability(String),
}

pub type PolyResult<T> = Result<T, PolyError>;

/// Finite real-coefficient polynomial `c_0 + c_1 z + … + c_q z^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct TransferPoly {
    coeffs: Vec<f64>,
}

impl TransferPoly {
    /// Builds a polynomial from `c_0..c_q`, trimming negligible trailing terms.
    /// An empty slice yields the zero polynomial.
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() < TRIM_TOL) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        if coeffs.len() == 1 && coeffs[0].abs() < TRIM_TOL {
            coeffs[0] = 0.0;
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `c · z^k`
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    /// Monic-free expansion `scale · ∏ (z − r)` for a conjugate-closed root set.
    /// Imaginary residue left after expansion is discarded.
    pub fn from_roots(scale: f64, roots: &[Complex64]) -> Self {
        let expanded = expand_complex(
            Complex64::new(scale, 0.0),
            roots.iter().map(|&r| (-r, Complex64::new(1.0, 0.0))),
        );
        Self::new(expanded.iter().map(|c| c.re).collect::<Vec<_>>())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `z^k`, zero past the degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.degree()]
    }

    /// `c(0)`, returned exactly.
    pub fn at_zero(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect::<Vec<_>>())
    }

    /// Sum of squared coefficients: the variance of the filtered unit white noise.
    pub fn variance(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Coefficient-wise convolution.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..len)
                .map(|k| self.coeff(k) + other.coeff(k))
                .collect::<Vec<_>>(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..len)
                .map(|k| self.coeff(k) - other.coeff(k))
                .collect::<Vec<_>>(),
        )
    }

    /// `z^k · c(z)`
    pub fn shift(&self, k: usize) -> Self {
        let mut coeffs = vec![0.0; k];
        coeffs.extend_from_slice(&self.coeffs);
        Self::new(coeffs)
    }

    /// Largest absolute coefficient difference, zero-padding the shorter operand.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let len = self.coeffs.len().max(other.coeffs.len());
        (0..len)
            .map(|k| (self.coeff(k) - other.coeff(k)).abs())
            .fold(0.0, f64::max)
    }
}

/// Expands `lead · ∏ (a_j + b_j z)` with complex factors.
pub(crate) fn expand_complex(
    lead: Complex64,
    factors: impl Iterator<Item = (Complex64, Complex64)>,
) -> Vec<Complex64> {
    let mut acc = vec![lead];
    for (a, b) in factors {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (k, c) in acc.iter().enumerate() {
            next[k] += c * a;
            next[k + 1] += c * b;
        }
        acc = next;
    }
    acc
}

/// Product of two polynomials.
pub fn poly_mul(a: &TransferPoly, b: &TransferPoly) -> TransferPoly {
    a.mul(b)
}

/// Sum of squared coefficients.
pub fn variance(p: &TransferPoly) -> f64 {
    p.variance()
}

impl From<Vec<f64>> for TransferPoly {
    fn from(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs)
    }
}

impl From<TransferPoly> for Vec<f64> {
    fn from(p: TransferPoly) -> Self {
        p.coeffs
    }
}

impl Mul for &TransferPoly {
    type Output = TransferPoly;
    fn mul(self, rhs: Self) -> TransferPoly {
        TransferPoly::mul(self, rhs)
    }
}

impl Add for &TransferPoly {
    type Output = TransferPoly;
    fn add(self, rhs: Self) -> TransferPoly {
        TransferPoly::add(self, rhs)
    }
}

impl Sub for &TransferPoly {
    type Output = TransferPoly;
    fn sub(self, rhs: Self) -> TransferPoly {
        TransferPoly::sub(self, rhs)
    }
}

impl Neg for &TransferPoly {
    type Output = TransferPoly;
    fn neg(self) -> TransferPoly {
        self.scale(-1.0)
    }
}

impl fmt::Display for TransferPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 && self.coeffs.len() > 1 {
                continue;
            }
            if first {
                write!(f, "{c}")?;
                first = false;
            } else if c < 0.0 {
                write!(f, " - {}", -c)?;
            } else {
                write!(f, " + {c}")?;
            }
            match k {
                0 => {}
                1 => write!(f, "·z")?,
                _ => write!(f, "·z^{k}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_identity_and_difference_of_squares() {
        let one = TransferPoly::constant(1.0);
        let p = TransferPoly::new(vec![1.0, 0.8]);
        assert_eq!(poly_mul(&one, &p), p);
        let q = poly_mul(
            &TransferPoly::new(vec![1.0, 1.0]),
            &TransferPoly::new(vec![1.0, -1.0]),
        );
        assert_eq!(q.coeffs(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn expand_from_roots_recovers_example_seller() {
        // brute-force product of monomials -0.48 (z - 5/6)(z + 5/4)
        let roots = [Complex64::new(5.0 / 6.0, 0.0), Complex64::new(-1.25, 0.0)];
        let mut acc = vec![-0.48];
        for r in roots {
            let mut next = vec![0.0; acc.len() + 1];
            for (k, c) in acc.iter().enumerate() {
                next[k] -= c * r.re;
                next[k + 1] += c;
            }
            acc = next;
        }
        let brute = TransferPoly::new(acc);
        let built = TransferPoly::from_roots(-0.48, &roots);
        assert!(brute.max_abs_diff(&TransferPoly::new(vec![0.5, -0.2, -0.48])) < 1e-12);
        assert!(built.max_abs_diff(&brute) < 1e-12);
    }

    #[test]
    fn trims_trailing_zeros_and_keeps_zero_poly() {
        let p = TransferPoly::new(vec![1.0, 2.0, 1e-13, 0.0]);
        assert_eq!(p.degree(), 1);
        let z = TransferPoly::new(Vec::<f64>::new());
        assert!(z.is_zero());
        assert_eq!(z.degree(), 0);
    }

    #[test]
    fn variance_matches_quoted_values() {
        assert!((variance(&TransferPoly::new(vec![0.5, -0.2, -0.48])) - 0.5204).abs() < 1e-12);
        assert!((variance(&TransferPoly::new(vec![0.5, 1.0, 0.48])) - 1.4804).abs() < 1e-12);
        assert!((variance(&TransferPoly::constant(3.0)) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn eval_at_zero_is_exact() {
        let p = TransferPoly::new(vec![0.1 + 0.2, 3.0, -7.0]);
        assert_eq!(p.eval(0.0), p.at_zero());
        assert_eq!(p.at_zero(), 0.1 + 0.2);
    }

    #[test]
    fn serde_as_plain_array() {
        #[derive(Serialize, Deserialize)]
        struct Doc {
            psi: TransferPoly,
        }
        let doc: Doc = toml::from_str("psi = [1.0, 0.5, 0.0]").unwrap();
        assert_eq!(doc.psi.coeffs(), &[1.0, 0.5]);
    }
}
