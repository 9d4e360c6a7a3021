//! Online order routing.
//!
//! Each period the benchmark allocation gives seller `n` the target
//! `x_n = D_t/N + b_n`, where the offset `b_n` depends only on lagged market
//! demand. Orders arrive one at a time and each goes to the seller with the
//! smallest `A_n − b_n` (orders so far minus offset). When every target is
//! nonnegative this keeps every seller within one order of its target.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::DemandPath;
use crate::policy::AllocationPolicy;

const TIE_TOL: f64 = 1e-12;
const TARGET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("negative benchmark targets for sellers {sellers:?}{}", period.map(|p| format!(" in period {p}")).unwrap_or_default())]
    InfeasibleTargets {
        period: Option<usize>,
        sellers: Vec<usize>,
    },
    #[error("no eligible seller for order {order}")]
    NoEligibleSeller { order: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("csv export failed: {0}")]
    Csv(String),
}

pub type RoutingResultT<T> = Result<T, RoutingError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodOffsets {
    pub period: usize,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// Uniformly random among tied sellers, seeded.
    Random { seed: u64 },
    /// Lowest seller index wins.
    LowestIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingResult {
    pub counts: Vec<u64>,
    pub targets: Vec<f64>,
    pub max_discrepancy: f64,
    /// 1-based seller receiving each order, in arrival order.
    pub assignment_log: Vec<usize>,
}

/// Closed-form offsets of the neutral designs.
///
/// With `c = σ/(Nσ_L)`: alternating sellers get `(−1)^n c (D_{t−1} − μ)`;
/// for odd `N`, seller 1 gets `c[(D_{t−1} − μ) + (D_{t−2} − μ)]` and seller 2
/// gets `−c (D_{t−2} − μ)`.
pub fn compute_offsets(
    n: usize,
    mu: f64,
    sigma: f64,
    sigma_l: f64,
    d_prev: f64,
    d_prev2: f64,
) -> PeriodOffsets {
    let c = sigma / (n as f64 * sigma_l);
    let (e1, e2) = (d_prev - mu, d_prev2 - mu);
    let alt = |i: usize| if i % 2 == 0 { c * e1 } else { -c * e1 };
    let offsets = match n {
        1 => vec![0.0],
        _ if n % 2 == 0 => (1..=n).map(alt).collect(),
        _ => {
            let mut v = vec![c * (e1 + e2), -c * e2];
            v.extend((3..=n).map(alt));
            v
        }
    };
    PeriodOffsets { period: 0, offsets }
}

fn targets_for(offsets: &[f64], d_t: u64) -> Vec<f64> {
    let share = d_t as f64 / offsets.len() as f64;
    offsets.iter().map(|b| share + b).collect()
}

fn negative_targets(targets: &[f64]) -> Vec<usize> {
    targets
        .iter()
        .enumerate()
        .filter(|(_, &x)| x < -TARGET_TOL)
        .map(|(i, _)| i + 1)
        .collect()
}

/// Greedy core shared by every entry point. Does not check targets.
fn route_core<R: Rng>(
    offsets: &[f64],
    d_t: u64,
    rng: Option<&mut R>,
    mut allowed: impl FnMut(usize, usize) -> bool,
) -> RoutingResultT<RoutingResult> {
    let n = offsets.len();
    let mut counts = vec![0u64; n];
    let mut log = Vec::with_capacity(d_t as usize);
    let mut tied = Vec::with_capacity(n);
    let mut rng = rng;
    for order in 0..d_t as usize {
        let mut best = f64::INFINITY;
        tied.clear();
        for i in 0..n {
            if !allowed(order, i) {
                continue;
            }
            let v = counts[i] as f64 - offsets[i];
            if v < best - TIE_TOL {
                best = v;
                tied.clear();
                tied.push(i);
            } else if v <= best + TIE_TOL {
                tied.push(i);
            }
        }
        let pick = match (tied.len(), rng.as_deref_mut()) {
            (0, _) => return Err(RoutingError::NoEligibleSeller { order }),
            (1, _) | (_, None) => tied[0],
            (k, Some(r)) => tied[r.random_range(0..k)],
        };
        counts[pick] += 1;
        log.push(pick + 1);
    }
    let targets = targets_for(offsets, d_t);
    let max_discrepancy = counts
        .iter()
        .zip(&targets)
        .map(|(&c, x)| (c as f64 - x).abs())
        .fold(0.0, f64::max);
    Ok(RoutingResult {
        counts,
        targets,
        max_discrepancy,
        assignment_log: log,
    })
}

fn check_offsets(offsets: &PeriodOffsets) -> RoutingResultT<()> {
    if offsets.offsets.is_empty() {
        return Err(RoutingError::InvalidArgument(
            "need at least one seller".into(),
        ));
    }
    if offsets.offsets.iter().any(|b| !b.is_finite()) {
        return Err(RoutingError::InvalidArgument(
            "offsets must be finite".into(),
        ));
    }
    Ok(())
}

/// Routes `d_t` orders for one period.
pub fn route_orders(
    offsets: &PeriodOffsets,
    d_t: u64,
    tie: TieBreak,
) -> RoutingResultT<RoutingResult> {
    route_orders_masked(offsets, d_t, tie, |_, _| true)
}

/// As [`route_orders`], with `allowed(order, seller)` (both 0-based) restricting
/// which sellers may take each order. The one-order bound is not guaranteed
/// once the mask excludes anyone.
pub fn route_orders_masked(
    offsets: &PeriodOffsets,
    d_t: u64,
    tie: TieBreak,
    allowed: impl FnMut(usize, usize) -> bool,
) -> RoutingResultT<RoutingResult> {
    check_offsets(offsets)?;
    let bad = negative_targets(&targets_for(&offsets.offsets, d_t));
    if !bad.is_empty() {
        return Err(RoutingError::InfeasibleTargets {
            period: None,
            sellers: bad,
        });
    }
    match tie {
        TieBreak::Random { seed } => route_core(
            &offsets.offsets,
            d_t,
            Some(&mut ChaCha8Rng::seed_from_u64(seed)),
            allowed,
        ),
        TieBreak::LowestIndex => route_core::<ChaCha8Rng>(&offsets.offsets, d_t, None, allowed),
    }
}

/// Orders per period: simulated demand rounded to the nearest integer, floored at zero.
pub fn integerize(demand: f64) -> u64 {
    if demand.is_nan() || demand <= 0.0 {
        0
    } else {
        demand.round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRouting {
    pub period: usize,
    pub demand: u64,
    pub offsets: Vec<f64>,
    pub result: RoutingResult,
    /// Sellers whose target was negative; empty when the period was feasible.
    pub infeasible_sellers: Vec<usize>,
}

impl PeriodRouting {
    pub fn is_feasible(&self) -> bool {
        self.infeasible_sellers.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRouting {
    pub periods: Vec<PeriodRouting>,
    /// Orders received per seller over the whole path.
    pub cumulative_counts: Vec<u64>,
}

impl PathRouting {
    pub fn infeasible_periods(&self) -> Vec<usize> {
        self.periods
            .iter()
            .filter(|p| !p.is_feasible())
            .map(|p| p.period)
            .collect()
    }

    /// Largest discrepancy over feasible periods.
    pub fn max_feasible_discrepancy(&self) -> f64 {
        self.periods
            .iter()
            .filter(|p| p.is_feasible())
            .map(|p| p.result.max_discrepancy)
            .fold(0.0, f64::max)
    }

    /// Share of all orders received by each seller.
    pub fn cumulative_shares(&self) -> Vec<f64> {
        let total: u64 = self.cumulative_counts.iter().sum();
        self.cumulative_counts
            .iter()
            .map(|&c| {
                if total == 0 {
                    0.0
                } else {
                    c as f64 / total as f64
                }
            })
            .collect()
    }

    /// Fails on the first period with a negative target.
    pub fn into_strict(self) -> RoutingResultT<Self> {
        if let Some(p) = self.periods.iter().find(|p| !p.is_feasible()) {
            return Err(RoutingError::InfeasibleTargets {
                period: Some(p.period),
                sellers: p.infeasible_sellers.clone(),
            });
        }
        Ok(self)
    }

    /// Writes one row per order: `period,order_index,seller,adjusted_counts`,
    /// the last column holding `A_n − b_n` after the order, `;`-separated.
    pub fn write_assignment_log<W: Write>(&self, out: W) -> RoutingResultT<()> {
        let csv_err = |e: csv::Error| RoutingError::Csv(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["period", "order_index", "seller", "adjusted_counts"])
            .map_err(csv_err)?;
        for p in &self.periods {
            let mut counts = vec![0u64; p.offsets.len()];
            for (j, &s) in p.result.assignment_log.iter().enumerate() {
                counts[s - 1] += 1;
                let snapshot = counts
                    .iter()
                    .zip(&p.offsets)
                    .map(|(&c, b)| format!("{:.6}", c as f64 - b))
                    .collect::<Vec<_>>()
                    .join(";");
                w.write_record([p.period.to_string(), j.to_string(), s.to_string(), snapshot])
                    .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| RoutingError::Csv(e.to_string()))
    }
}

/// Routes a whole demand path under `policy`, recomputing offsets each period
/// from lagged routed demand. Lags before the path start are taken at `mu`.
/// Periods with negative targets are routed anyway and flagged.
pub fn route_path(
    policy: &AllocationPolicy,
    mu: f64,
    path: &DemandPath,
    tie: TieBreak,
) -> RoutingResultT<PathRouting> {
    let n = policy.n_sellers;
    let lags = policy.max_lag();
    let demands: Vec<u64> = path.demands.iter().map(|&d| integerize(d)).collect();
    let mut rng = match tie {
        TieBreak::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        TieBreak::LowestIndex => None,
    };
    let mut periods = Vec::with_capacity(demands.len());
    let mut cumulative_counts = vec![0u64; n];
    let mut lagged = vec![mu; lags];
    for (t, &d_t) in demands.iter().enumerate() {
        for k in 1..=lags {
            lagged[k - 1] = if t >= k { demands[t - k] as f64 } else { mu };
        }
        let offsets = policy.offsets(mu, &lagged);
        let infeasible_sellers = negative_targets(&targets_for(&offsets, d_t));
        let result = route_core(&offsets, d_t, rng.as_mut(), |_, _| true)?;
        for (acc, c) in cumulative_counts.iter_mut().zip(&result.counts) {
            *acc += c;
        }
        periods.push(PeriodRouting {
            period: t,
            demand: d_t,
            offsets,
            result,
            infeasible_sellers,
        });
    }
    Ok(PathRouting {
        periods,
        cumulative_counts,
    })
}
