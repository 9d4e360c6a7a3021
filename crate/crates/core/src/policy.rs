//! Demand-allocation policies.
//!
//! Seller `n` receives `ψ_n(z) = (ψ(z)/N)·T_n(z)` with `T_n(0) = 1` and
//! `Σ_n T_n = N`, so every seller gets the uniform contemporaneous share and
//! the allocation always adds back up to market demand. Raising σ above the
//! lower bound `|ψ(0)|/N` is done by routing lagged demand deviations between
//! sellers, which makes every seller's filter non-invertible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{DemandModel, DemandPath};
use crate::polyalg::{root_msfe, PolyError, TransferPoly};

/// Absolute tolerance for admissibility checks on transfer coefficients.
pub const COEFF_TOL: f64 = 1e-10;
/// Tolerance on the per-seller σ spread for a neutrality verdict.
pub const SIGMA_SPREAD_TOL: f64 = 1e-9;

const LOWER_BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("sigma target {sigma} is below the lower bound {sigma_l}")]
    BelowLowerBound { sigma: f64, sigma_l: f64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("seller index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("transfers are not admissible: {0}")]
    NotAdmissible(String),
    #[error("path has {got} periods but the policy needs more than {needed}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

pub type PolicyResult<T> = Result<T, PolicyError>;

/// Which construction produced a policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyDesign {
    Uniform,
    /// `T_n = 1 + (−1)^n ᾱ z`, N even.
    EvenMa1 {
        alpha_bar: f64,
    },
    /// Sellers 1 and 2 carry two-lag transfers, N odd.
    OddMa2 {
        alpha_bar: f64,
    },
    /// `T_n = 1 + (−1)^n ᾱ z^k`, N even.
    Lagged {
        alpha_bar: f64,
        lag: usize,
    },
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPolicy {
    pub n_sellers: usize,
    pub transfers: Vec<TransferPoly>,
    pub mean_share: f64,
    pub design: PolicyDesign,
    /// σ the policy was built for, when it came from a design.
    pub sigma_target: Option<f64>,
    /// `roles[i]` is the design slot (1-based) held by seller `i + 1`.
    pub roles: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutralityReport {
    pub per_seller_sigma: Vec<f64>,
    pub per_seller_mean: Vec<f64>,
    pub is_neutral: bool,
    pub max_sigma_spread: f64,
}

/// Per-seller demand series `D_{n,t}` for `t ≥ start`.
#[derive(Debug, Clone, PartialEq)]
pub struct SellerSeries {
    pub start: usize,
    pub series: Vec<Vec<f64>>,
}

fn check_n(n: usize) -> PolicyResult<()> {
    if n == 0 {
        return Err(PolicyError::InvalidArgument(
            "need at least one seller".into(),
        ));
    }
    Ok(())
}

/// `σ_L = |ψ(0)|/N`
pub fn sigma_lower_bound(model: &DemandModel, n: usize) -> f64 {
    model.psi.at_zero().abs() / n as f64
}

impl AllocationPolicy {
    fn from_design(
        model: &DemandModel,
        transfers: Vec<TransferPoly>,
        design: PolicyDesign,
        sigma: Option<f64>,
    ) -> Self {
        let n = transfers.len();
        Self {
            n_sellers: n,
            transfers,
            mean_share: model.mu / n as f64,
            design,
            sigma_target: sigma,
            roles: (1..=n).collect(),
        }
    }

    pub fn alpha_bar(&self) -> Option<f64> {
        match self.design {
            PolicyDesign::Uniform => Some(1.0),
            PolicyDesign::EvenMa1 { alpha_bar }
            | PolicyDesign::OddMa2 { alpha_bar }
            | PolicyDesign::Lagged { alpha_bar, .. } => Some(alpha_bar),
            PolicyDesign::Custom => None,
        }
    }

    /// Largest lag used by any transfer.
    pub fn max_lag(&self) -> usize {
        self.transfers
            .iter()
            .map(TransferPoly::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn transfer(&self, n: usize) -> PolicyResult<&TransferPoly> {
        if n == 0 || n > self.n_sellers {
            return Err(PolicyError::IndexOutOfRange {
                index: n,
                n: self.n_sellers,
            });
        }
        Ok(&self.transfers[n - 1])
    }

    /// Relabels sellers: seller `i + 1` of the result takes the transfer of seller `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> PolicyResult<Self> {
        let n = self.n_sellers;
        let mut seen = vec![false; n];
        if perm.len() != n {
            return Err(PolicyError::InvalidArgument(format!(
                "permutation has {} entries, need {n}",
                perm.len()
            )));
        }
        for &p in perm {
            if p == 0 || p > n || std::mem::replace(&mut seen[p - 1], true) {
                return Err(PolicyError::InvalidArgument(format!(
                    "{perm:?} is not a permutation of 1..={n}"
                )));
            }
        }
        Ok(Self {
            transfers: perm
                .iter()
                .map(|&p| self.transfers[p - 1].clone())
                .collect(),
            roles: perm.iter().map(|&p| self.roles[p - 1]).collect(),
            ..self.clone()
        })
    }

    /// `b_n = (1/N) Σ_{k≥1} T_{n,k}(D_{t−k} − μ)`; `lagged[k−1]` holds `D_{t−k}`.
    pub fn offsets(&self, mu: f64, lagged: &[f64]) -> Vec<f64> {
        let n = self.n_sellers as f64;
        self.transfers
            .iter()
            .map(|t| {
                t.coeffs()
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, c)| c * (lagged.get(k - 1).copied().unwrap_or(mu) - mu))
                    .sum::<f64>()
                    / n
            })
            .collect()
    }
}

/// Every seller gets `T_n = 1`.
pub fn uniform_policy(model: &DemandModel, n: usize) -> PolicyResult<AllocationPolicy> {
    check_n(n)?;
    let sigma_l = sigma_lower_bound(model, n);
    Ok(AllocationPolicy::from_design(
        model,
        vec![TransferPoly::constant(1.0); n],
        PolicyDesign::Uniform,
        Some(sigma_l),
    ))
}

/// Returns `ᾱ = σ/σ_L`, or `None` when the target is the lower bound itself.
fn alpha_for(model: &DemandModel, n: usize, sigma: f64) -> PolicyResult<Option<f64>> {
    let sigma_l = sigma_lower_bound(model, n);
    if !sigma.is_finite() || sigma < sigma_l * (1.0 - LOWER_BOUND_SLACK) {
        return Err(PolicyError::BelowLowerBound { sigma, sigma_l });
    }
    if sigma <= sigma_l * (1.0 + LOWER_BOUND_SLACK) {
        return Ok(None);
    }
    if n == 1 {
        return Err(PolicyError::Infeasible(format!(
            "a single seller always receives market demand, so sigma = {sigma_l} is the only option"
        )));
    }
    Ok(Some(n as f64 * sigma / model.psi.at_zero().abs()))
}

fn sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Neutral policy whose sellers all have root MSFE `sigma`.
pub fn neutral_policy(model: &DemandModel, n: usize, sigma: f64) -> PolicyResult<AllocationPolicy> {
    check_n(n)?;
    let Some(alpha_bar) = alpha_for(model, n, sigma)? else {
        return uniform_policy(model, n);
    };
    let alternating = |i: usize| TransferPoly::new(vec![1.0, sign(i) * alpha_bar]);
    if n % 2 == 0 {
        let transfers = (1..=n).map(alternating).collect();
        return Ok(AllocationPolicy::from_design(
            model,
            transfers,
            PolicyDesign::EvenMa1 { alpha_bar },
            Some(sigma),
        ));
    }
    let mut transfers = vec![
        TransferPoly::new(vec![1.0, alpha_bar, alpha_bar]),
        TransferPoly::new(vec![1.0, 0.0, -alpha_bar]),
    ];
    transfers.extend((3..=n).map(alternating));
    Ok(AllocationPolicy::from_design(
        model,
        transfers,
        PolicyDesign::OddMa2 { alpha_bar },
        Some(sigma),
    ))
}

/// Even-N design with the transfer acting at lag `k` instead of lag 1.
pub fn lagged_variant(
    model: &DemandModel,
    n: usize,
    sigma: f64,
    k: usize,
) -> PolicyResult<AllocationPolicy> {
    check_n(n)?;
    if n % 2 != 0 {
        return Err(PolicyError::InvalidArgument(format!(
            "lagged variants need an even number of sellers, got {n}"
        )));
    }
    if k == 0 {
        return Err(PolicyError::InvalidArgument(
            "lag must be at least 1".into(),
        ));
    }
    let Some(alpha_bar) = alpha_for(model, n, sigma)? else {
        return uniform_policy(model, n);
    };
    let transfers = (1..=n)
        .map(|i| TransferPoly::monomial(sign(i) * alpha_bar, k).add(&TransferPoly::constant(1.0)))
        .collect();
    let design = if k == 1 {
        PolicyDesign::EvenMa1 { alpha_bar }
    } else {
        PolicyDesign::Lagged { alpha_bar, lag: k }
    };
    Ok(AllocationPolicy::from_design(
        model,
        transfers,
        design,
        Some(sigma),
    ))
}

/// Wraps hand-built transfers after checking `T_n(0) = 1` and `Σ T_n = N`.
pub fn custom_policy(
    model: &DemandModel,
    transfers: Vec<TransferPoly>,
) -> PolicyResult<AllocationPolicy> {
    let n = transfers.len();
    check_n(n)?;
    for (i, t) in transfers.iter().enumerate() {
        if (t.at_zero() - 1.0).abs() > COEFF_TOL {
            return Err(PolicyError::NotAdmissible(format!(
                "seller {} has T(0) = {}",
                i + 1,
                t.at_zero()
            )));
        }
    }
    let total = transfers
        .iter()
        .fold(TransferPoly::zero(), |acc, t| acc.add(t));
    let residual = total.max_abs_diff(&TransferPoly::constant(n as f64));
    if residual > COEFF_TOL {
        return Err(PolicyError::NotAdmissible(format!(
            "transfers sum to {total}, expected {n} (residual {residual:e})"
        )));
    }
    Ok(AllocationPolicy::from_design(
        model,
        transfers,
        PolicyDesign::Custom,
        None,
    ))
}

/// `ψ_n = (ψ/N)·T_n` for the 1-based seller `n`.
pub fn seller_filter(
    policy: &AllocationPolicy,
    model: &DemandModel,
    n: usize,
) -> PolicyResult<TransferPoly> {
    Ok(model
        .psi
        .mul(policy.transfer(n)?)
        .scale(1.0 / policy.n_sellers as f64))
}

/// Root MSFE of every seller and the neutrality verdict.
pub fn check_neutral(
    policy: &AllocationPolicy,
    model: &DemandModel,
    tol: f64,
) -> PolicyResult<NeutralityReport> {
    let per_seller_sigma = (1..=policy.n_sellers)
        .map(|n| Ok(root_msfe(&seller_filter(policy, model, n)?)?))
        .collect::<PolicyResult<Vec<f64>>>()?;
    let per_seller_mean = vec![policy.mean_share; policy.n_sellers];
    let hi = per_seller_sigma
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = per_seller_sigma
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let max_sigma_spread = hi - lo;
    let target_mean = model.mu / policy.n_sellers as f64;
    let means_ok = per_seller_mean
        .iter()
        .all(|m| (m - target_mean).abs() <= COEFF_TOL * target_mean.abs().max(1.0));
    Ok(NeutralityReport {
        per_seller_sigma,
        per_seller_mean,
        is_neutral: means_ok && max_sigma_spread <= tol,
        max_sigma_spread,
    })
}

/// `D_{n,t} = μ/N + (1/N) Σ_k T_{n,k}(D_{t−k} − μ)` for every `t` with a full lag window.
pub fn allocate_ex_post(
    policy: &AllocationPolicy,
    model: &DemandModel,
    path: &DemandPath,
) -> PolicyResult<SellerSeries> {
    let d = policy.max_lag();
    let len = path.demands.len();
    if len <= d {
        return Err(PolicyError::InsufficientHistory {
            needed: d,
            got: len,
        });
    }
    let n = policy.n_sellers as f64;
    let mu = model.mu;
    let series = policy
        .transfers
        .iter()
        .map(|t| {
            (d..len)
                .map(|s| {
                    let dev: f64 = t
                        .coeffs()
                        .iter()
                        .enumerate()
                        .map(|(k, c)| c * (path.demands[s - k] - mu))
                        .sum();
                    mu / n + dev / n
                })
                .collect()
        })
        .collect();
    Ok(SellerSeries { start: d, series })
}
