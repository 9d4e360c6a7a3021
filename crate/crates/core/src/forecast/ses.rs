//! Linear-filter forecasters and their one-step MSFE.
//!
//! A forecaster predicts `D_{t+1}` from `Σ_k w_k D_{t−k}`. Its error filter is
//! `(1 − z·w(z))·ψ_n(z)`, and since every filter here is a finite polynomial
//! the MSFE is the exact coefficient sum of squares of that product.

use serde::{Deserialize, Serialize};

use super::{ForecastError, ForecastResult};
use crate::polyalg::{TransferPoly, TRIM_TOL};

/// Geometric tail mass left after truncating SES weights.
pub const SES_TAIL_TOL: f64 = 1e-12;

const UNBIASED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterForecaster {
    pub weights: TransferPoly,
    pub description: String,
}

impl FilterForecaster {
    /// Weights must sum to one so the forecast is unbiased.
    pub fn new(weights: TransferPoly, description: impl Into<String>) -> ForecastResult<Self> {
        let total = weights.eval(1.0);
        if (total - 1.0).abs() > UNBIASED_TOL || weights.coeffs().iter().any(|c| !c.is_finite()) {
            return Err(ForecastError::InvalidArgument(format!(
                "forecaster weights sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            weights,
            description: description.into(),
        })
    }

    /// Error filter `1 − z·w(z)`.
    pub fn error_filter(&self) -> TransferPoly {
        TransferPoly::constant(1.0).sub(&self.weights.shift(1))
    }
}

/// Number of SES weights kept: enough for the tail `(1−λ)^K` to drop below
/// [`SES_TAIL_TOL`], but never so many that the last weight would be trimmed
/// as negligible by [`TransferPoly`].
pub fn ses_order(lambda: f64) -> usize {
    if lambda >= 1.0 {
        return 1;
    }
    let beta_ln = (1.0 - lambda).ln();
    let tail = (SES_TAIL_TOL.ln() / beta_ln).ceil();
    let representable = ((2.0 * TRIM_TOL / lambda).ln() / beta_ln).floor() + 1.0;
    tail.min(representable).max(1.0) as usize
}

/// Geometric weights `λ(1−λ)^k`, `k < order`, rescaled to sum to one.
pub fn ses_truncated_weights(lambda: f64, order: usize) -> ForecastResult<FilterForecaster> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(ForecastError::InvalidArgument(format!(
            "smoothing constant must lie in (0, 1], got {lambda}"
        )));
    }
    if order == 0 {
        return Err(ForecastError::InvalidArgument(
            "order must be at least 1".into(),
        ));
    }
    let raw: Vec<f64> = (0..order)
        .map(|k| lambda * (1.0 - lambda).powi(k as i32))
        .collect();
    let total: f64 = raw.iter().sum();
    let trimmed = TransferPoly::new(raw.iter().map(|w| w / total).collect::<Vec<_>>());
    // trimming may drop a negligible tail; rescale what survived
    let weights = trimmed.scale(1.0 / trimmed.eval(1.0));
    FilterForecaster::new(weights, format!("ses(lambda={lambda}, order={order})"))
}

/// SES weights truncated at [`ses_order`].
pub fn ses_weights(lambda: f64) -> ForecastResult<FilterForecaster> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(ForecastError::InvalidArgument(format!(
            "smoothing constant must lie in (0, 1], got {lambda}"
        )));
    }
    ses_truncated_weights(lambda, ses_order(lambda))
}

/// Root MSFE of `forecaster` on the process with filter `psi_n`.
pub fn filter_msfe(psi_n: &TransferPoly, forecaster: &FilterForecaster) -> f64 {
    forecaster.error_filter().mul(psi_n).variance().sqrt()
}

/// Root MSFE of SES with constant `lambda ∈ [0, 1]`. At `lambda = 0` the
/// forecast degenerates to the long-run mean, so the error is the whole
/// unconditional spread of the process.
pub fn ses_msfe(psi_n: &TransferPoly, lambda: f64) -> ForecastResult<f64> {
    if lambda == 0.0 {
        return Ok(psi_n.variance().sqrt());
    }
    Ok(filter_msfe(psi_n, &ses_weights(lambda)?))
}

/// Root MSFE of SES with constant `lambda` for a seller with transfer `1 + αz`
/// under i.i.d. market demand:
/// `(|ψ(0)|/N)·√(1 + (α−λ)² + λ/(2−λ)·(1−λ+α)²)`.
pub fn ses_msfe_closed_form(
    psi0_abs: f64,
    n: usize,
    alpha: f64,
    lambda: f64,
) -> ForecastResult<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(ForecastError::InvalidArgument(format!(
            "closed form needs lambda in [0, 1), got {lambda}"
        )));
    }
    let s = psi0_abs / n as f64;
    let sq =
        1.0 + (alpha - lambda).powi(2) + lambda / (2.0 - lambda) * (1.0 - lambda + alpha).powi(2);
    Ok(s * sq.sqrt())
}

/// Minimizer of `f` over `grid`; ties keep the first point.
pub fn argmin_on_grid(grid: &[f64], f: impl Fn(f64) -> f64) -> Option<(f64, f64)> {
    grid.iter()
        .map(|&x| (x, f(x)))
        .fold(None, |best, (x, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((x, v)),
        })
}
