//! Innovations algorithm for finite MA processes.
//!
//! Works from autocovariances alone, so it never looks at roots. The
//! one-step innovation variance `v_n` converges to the optimal MSFE, which
//! makes it an independent check on the factorization path.

use super::{ForecastError, ForecastResult};
use crate::polyalg::TransferPoly;

const REL_TOL: f64 = 1e-10;

/// Converged state of the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationsPredictor {
    /// Steady-state weights `θ_1..θ_q` on past innovations.
    pub theta: Vec<f64>,
    /// One-step innovation variance.
    pub v: f64,
    pub iterations: usize,
}

fn autocovariances(c: &[f64]) -> Vec<f64> {
    (0..c.len())
        .map(|h| c.iter().zip(&c[h..]).map(|(a, b)| a * b).sum())
        .collect()
}

impl InnovationsPredictor {
    /// Runs the recursion for at most `horizon` steps.
    pub fn fit(psi: &TransferPoly, horizon: usize) -> ForecastResult<Self> {
        if psi.is_zero() {
            return Err(ForecastError::InvalidArgument(
                "zero filter has no innovations".into(),
            ));
        }
        let q = psi.degree();
        if horizon < (10 * q).max(1) {
            return Err(ForecastError::InvalidArgument(format!(
                "horizon {horizon} is shorter than 10 times the order {q}"
            )));
        }
        let gamma = autocovariances(psi.coeffs());
        if q == 0 {
            return Ok(Self {
                theta: vec![],
                v: gamma[0],
                iterations: 0,
            });
        }
        // rows[i][j-1] holds θ_{m, j} for the row m stored in slot i; only lags up to q are nonzero
        let mut rows: Vec<Vec<f64>> = vec![vec![0.0; q]];
        let mut vs: Vec<f64> = vec![gamma[0]];
        let mut stable = 0usize;
        let min_iters = 10 * q;
        for m in 1..=horizon {
            let mut row = vec![0.0; q];
            // θ_{m, m−k} for k = max(0, m−q) .. m−1
            for k in m.saturating_sub(q)..m {
                let lag = m - k;
                let mut acc = gamma[lag];
                for j in m.saturating_sub(q)..k {
                    let (lk, lm) = (k - j, m - j);
                    if lk <= q {
                        acc -= theta_of(&rows, m, k, lk) * row_get(&row, lm) * v_of(&vs, m, j);
                    }
                }
                row[lag - 1] = acc / v_of(&vs, m, k);
            }
            let mut v = gamma[0];
            for j in m.saturating_sub(q)..m {
                let t = row[m - j - 1];
                v -= t * t * v_of(&vs, m, j);
            }
            let prev = *vs.last().expect("history is non-empty");
            if v <= 0.0 {
                return Err(ForecastError::NonConvergence {
                    last_v: v,
                    iterations: m,
                });
            }
            let rel = (v - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
            stable = if rel < REL_TOL { stable + 1 } else { 0 };
            rows.push(row);
            vs.push(v);
            if rows.len() > q {
                rows.remove(0);
                vs.remove(0);
            }
            if stable > 2 * q && m >= min_iters {
                let theta = rows.last().expect("row just pushed").clone();
                return Ok(Self {
                    theta,
                    v,
                    iterations: m,
                });
            }
        }
        Err(ForecastError::NonConvergence {
            last_v: *vs.last().unwrap_or(&f64::NAN),
            iterations: horizon,
        })
    }

    /// One-step errors `x_t − μ − Σ_j θ_j e_{t−j}` of the steady-state predictor,
    /// started from zero past errors.
    pub fn one_step_errors(&self, series: &[f64], mean: f64) -> Vec<f64> {
        let q = self.theta.len();
        let mut errs = vec![0.0; series.len()];
        for t in 0..series.len() {
            let pred: f64 = (1..=q.min(t))
                .map(|j| self.theta[j - 1] * errs[t - j])
                .sum();
            errs[t] = series[t] - mean - pred;
        }
        errs
    }

    /// Root mean squared one-step error on `series`, skipping the first `burn_in` errors.
    pub fn empirical_msfe(&self, series: &[f64], mean: f64, burn_in: usize) -> f64 {
        let errs = self.one_step_errors(series, mean);
        let tail = errs.get(burn_in..).unwrap_or(&[]);
        if tail.is_empty() {
            return f64::NAN;
        }
        (tail.iter().map(|e| e * e).sum::<f64>() / tail.len() as f64).sqrt()
    }
}

// The window holds rows m−q..m−1 (or fewer at the start); row r lives at slot r − (m − len).
fn slot(len: usize, m: usize, r: usize) -> usize {
    r + len - m
}

fn theta_of(rows: &[Vec<f64>], m: usize, k: usize, lag: usize) -> f64 {
    if lag == 0 {
        return 1.0;
    }
    rows[slot(rows.len(), m, k)][lag - 1]
}

fn v_of(vs: &[f64], m: usize, j: usize) -> f64 {
    vs[slot(vs.len(), m, j)]
}

fn row_get(row: &[f64], lag: usize) -> f64 {
    row.get(lag - 1).copied().unwrap_or(0.0)
}

/// Square root of the converged one-step innovation variance.
pub fn innovations_msfe(psi: &TransferPoly, horizon: usize) -> ForecastResult<f64> {
    Ok(InnovationsPredictor::fit(psi, horizon)?.v.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_quoted_and_reflected_values() {
        let p = TransferPoly::new(vec![0.5, -0.2, -0.48]);
        assert!((innovations_msfe(&p, 100_000).unwrap() - 0.6).abs() < 1e-6);
        assert!(
            (innovations_msfe(&TransferPoly::new(vec![1.0, 0.5]), 100_000).unwrap() - 1.0).abs()
                < 1e-6
        );
        assert!(
            (innovations_msfe(&TransferPoly::new(vec![1.0, 2.0]), 100_000).unwrap() - 2.0).abs()
                < 1e-6
        );
    }

    #[test]
    fn zero_lag_one_covariance_still_converges() {
        // γ(1) = 0, so a single quiet step must not stop the recursion
        let p = TransferPoly::new(vec![1.0, 0.0, -2.0]);
        assert!((innovations_msfe(&p, 100_000).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn constant_filter_and_bad_inputs() {
        assert_eq!(
            innovations_msfe(&TransferPoly::constant(-3.0), 1).unwrap(),
            3.0
        );
        assert!(innovations_msfe(&TransferPoly::zero(), 10).is_err());
        assert!(innovations_msfe(&TransferPoly::new(vec![1.0, 0.5]), 5).is_err());
    }

    #[test]
    fn steady_state_weights_are_normalized_outer_factor() {
        // outer of (1, 2) is (2, 1): θ_1 = 1/2
        let pred = InnovationsPredictor::fit(&TransferPoly::new(vec![1.0, 2.0]), 100_000).unwrap();
        assert!((pred.theta[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn empirical_msfe_on_constructed_series() {
        // x_t = e_t + 0.5 e_{t−1} with a known innovation sequence
        let e: Vec<f64> = (0..200)
            .map(|t| if t % 3 == 0 { 1.0 } else { -0.5 })
            .collect();
        let x: Vec<f64> = (0..200)
            .map(|t| e[t] + if t > 0 { 0.5 * e[t - 1] } else { 0.0 })
            .collect();
        let pred = InnovationsPredictor {
            theta: vec![0.5],
            v: 1.0,
            iterations: 0,
        };
        let rms = (e.iter().map(|v| v * v).sum::<f64>() / 200.0).sqrt();
        assert!((pred.empirical_msfe(&x, 0.0, 0) - rms).abs() < 1e-12);
    }
}
