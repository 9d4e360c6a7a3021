//! Market demand `D_t = μ + Σ_k ψ_k ε_{t−k}` with unit-variance Gaussian shocks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polyalg::{is_invertible, PolyError, TransferPoly, DEFAULT_BOUNDARY_TOL};
use crate::seller::std_normal_cdf;

/// Screening level above which simulation warns about negative demand.
pub const NEGATIVE_DEMAND_WARN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DemandError {
    #[error("mean demand must be positive, got {0}")]
    NonPositiveMean(f64),
    #[error("psi(0) must be nonzero")]
    ZeroContemporaneous,
    #[error("market filter psi is not invertible")]
    NotInvertible,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

pub type DemandResult<T> = Result<T, DemandError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    pub mu: f64,
    pub psi: TransferPoly,
}

/// A simulated demand path. `shocks[0]` is `ε_{−q}`, so `demands[t]` uses
/// `shocks[t..=t+q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandPath {
    pub demands: Vec<f64>,
    pub shocks: Vec<f64>,
    pub seed: u64,
}

impl DemandModel {
    pub fn new(mu: f64, psi: TransferPoly) -> DemandResult<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(DemandError::NonPositiveMean(mu));
        }
        if psi.at_zero() == 0.0 {
            return Err(DemandError::ZeroContemporaneous);
        }
        if !is_invertible(&psi, DEFAULT_BOUNDARY_TOL)? {
            return Err(DemandError::NotInvertible);
        }
        Ok(Self { mu, psi })
    }

    /// Order `q` of the MA filter.
    pub fn order(&self) -> usize {
        self.psi.degree()
    }

    /// Unconditional standard deviation of `D_t`.
    pub fn std_dev(&self) -> f64 {
        self.psi.variance().sqrt()
    }

    pub fn coefficient_of_variation(&self) -> f64 {
        self.std_dev() / self.mu
    }

    /// `P(D_t ≤ 0) = Φ(−1/CV)`.
    pub fn prob_negative(&self) -> f64 {
        std_normal_cdf(-self.mu / self.std_dev())
    }

    /// Conservative screening bound `CV·√(2(1 + ᾱ²))` on a seller's demand CV.
    pub fn seller_cv_bound(&self, alpha_bar: f64) -> DemandResult<f64> {
        if !(alpha_bar >= 1.0) {
            return Err(DemandError::InvalidArgument(format!(
                "alpha_bar must be at least 1, got {alpha_bar}"
            )));
        }
        Ok(self.coefficient_of_variation() * (2.0 * (1.0 + alpha_bar * alpha_bar)).sqrt())
    }

    /// Simulates `horizon` periods after a `q`-period shock burn-in.
    pub fn simulate(&self, horizon: usize, seed: u64) -> DemandResult<DemandPath> {
        if horizon == 0 {
            return Err(DemandError::InvalidArgument(
                "horizon must be at least 1".into(),
            ));
        }
        let p = self.prob_negative();
        if p > NEGATIVE_DEMAND_WARN {
            log::warn!("demand model puts probability {p:.4} on nonpositive demand");
        }
        let q = self.order();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shocks: Vec<f64> = (0..horizon + q)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let c = self.psi.coeffs();
        let demands = (0..horizon)
            .map(|t| {
                self.mu
                    + c.iter()
                        .enumerate()
                        .map(|(k, ck)| ck * shocks[t + q - k])
                        .sum::<f64>()
            })
            .collect();
        Ok(DemandPath {
            demands,
            shocks,
            seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n)
    }

    #[test]
    fn constructor_validation() {
        assert!(DemandModel::new(15.0, TransferPoly::constant(5.0)).is_ok());
        assert_eq!(
            DemandModel::new(0.0, TransferPoly::constant(5.0)),
            Err(DemandError::NonPositiveMean(0.0))
        );
        assert_eq!(
            DemandModel::new(1.0, TransferPoly::new(vec![0.0, 1.0])),
            Err(DemandError::ZeroContemporaneous)
        );
        assert_eq!(
            DemandModel::new(1.0, TransferPoly::new(vec![1.0, 2.0])),
            Err(DemandError::NotInvertible)
        );
    }

    #[test]
    fn iid_moments() {
        let m = DemandModel::new(15.0, TransferPoly::constant(5.0)).unwrap();
        let path = m.simulate(100_000, 7).unwrap();
        let (mean, var) = moments(&path.demands);
        assert!((mean - 15.0).abs() < 0.05, "{mean}");
        assert!((var - 25.0).abs() < 0.5, "{var}");
    }

    #[test]
    fn ma1_autocorrelation() {
        let m = DemandModel::new(3.0, TransferPoly::new(vec![1.0, 0.8])).unwrap();
        let path = m.simulate(100_000, 11).unwrap();
        let (mean, var) = moments(&path.demands);
        let n = path.demands.len();
        let cov = path
            .demands
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / n as f64;
        assert!((cov / var - 0.8 / 1.64).abs() < 0.01);
    }

    #[test]
    fn path_is_deterministic_and_consistent() {
        let m = DemandModel::new(10.0, TransferPoly::new(vec![2.0, -0.5, 0.3])).unwrap();
        let a = m.simulate(500, 3).unwrap();
        assert_eq!(a, m.simulate(500, 3).unwrap());
        assert_ne!(a.demands, m.simulate(500, 4).unwrap().demands);
        assert_eq!(a.shocks.len(), 502);
        let t = 17;
        let direct = 10.0 + 2.0 * a.shocks[t + 2] - 0.5 * a.shocks[t + 1] + 0.3 * a.shocks[t];
        assert_eq!(a.demands[t], direct);
    }

    #[test]
    fn negative_demand_screen() {
        let m = DemandModel::new(15.0, TransferPoly::constant(5.0)).unwrap();
        assert!((m.prob_negative() - 1.349_898_031_630_094_6e-3).abs() < 1e-12);
        let unit = DemandModel::new(1.0, TransferPoly::constant(1.0)).unwrap();
        let p = unit.prob_negative();
        assert!((p - 0.158_655_253_931_457_05).abs() < 1e-12, "{p}");
        let tight = DemandModel::new(1e6, TransferPoly::constant(1.0)).unwrap();
        assert_eq!(tight.prob_negative(), 0.0);
    }

    #[test]
    fn seller_cv_bound_values() {
        let m = DemandModel::new(15.0, TransferPoly::constant(5.0)).unwrap();
        assert!((m.seller_cv_bound(1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.seller_cv_bound(17.735608).unwrap() - 8.3739).abs() < 1e-3);
        assert!(m.seller_cv_bound(0.5).is_err());
        let slope = m.seller_cv_bound(2e6).unwrap() - m.seller_cv_bound(1e6).unwrap();
        assert!((slope / 1e6 - 2f64.sqrt() / 3.0).abs() < 1e-9);
    }
}
