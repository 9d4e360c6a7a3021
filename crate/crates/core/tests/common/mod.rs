//! Instance builders and property checks shared by the property tests and the
//! acceptance runner. Each check returns `Err` with a description on failure.

#![allow(dead_code)]

use std::f64::consts::PI;

use demand_alloc::demand::DemandModel;
use demand_alloc::forecast::{filter_msfe, innovations_msfe, leadtime_msfe, FilterForecaster};
use demand_alloc::platform::{collinearity_defect, linear_grid, Marketplace};
use demand_alloc::policy::{
    check_neutral, custom_policy, lagged_variant, neutral_policy, seller_filter, sigma_lower_bound,
    AllocationPolicy,
};
use demand_alloc::polyalg::{
    inner_outer_factor, is_invertible, root_msfe, TransferPoly, DEFAULT_BOUNDARY_TOL,
};
use demand_alloc::routing::{route_orders, PeriodOffsets, TieBreak};
use demand_alloc::seller::{PlatformCosts, SellerParams};
use rand::Rng;

pub type Check = Result<(), String>;

/// A root of modulus `m` at angle `theta`; `pair` adds the conjugate.
#[derive(Debug, Clone, Copy)]
pub struct RootSpec {
    pub m: f64,
    pub theta: f64,
    pub pair: bool,
}

/// `psi0 · Π (1 − z/a)` over the listed roots, so the constant term is `psi0`.
pub fn poly_from_roots(psi0: f64, roots: &[RootSpec]) -> TransferPoly {
    roots.iter().fold(TransferPoly::constant(psi0), |acc, r| {
        let factor = if r.pair {
            TransferPoly::new(vec![1.0, -2.0 * r.theta.cos() / r.m, 1.0 / (r.m * r.m)])
        } else {
            let a = if r.theta < PI / 2.0 { r.m } else { -r.m };
            TransferPoly::new(vec![1.0, -1.0 / a])
        };
        acc.mul(&factor)
    })
}

fn random_roots(rng: &mut impl Rng, max_deg: usize, inside_too: bool) -> Vec<RootSpec> {
    let mut roots = Vec::new();
    let mut deg = 0;
    let target = rng.random_range(0..=max_deg);
    while deg < target {
        let pair = deg + 2 <= target && rng.random_bool(0.5);
        let mut m = rng.random_range(1.2..4.0);
        if inside_too && rng.random_bool(0.5) {
            m = 1.0 / m;
        }
        roots.push(RootSpec {
            m,
            theta: rng.random_range(0.0..PI),
            pair,
        });
        deg += if pair { 2 } else { 1 };
    }
    roots
}

/// Invertible market filter of degree at most `max_deg`.
pub fn random_model(rng: &mut impl Rng, max_deg: usize) -> DemandModel {
    let psi0 = rng.random_range(0.5..6.0) * if rng.random_bool(0.2) { -1.0 } else { 1.0 };
    let psi = poly_from_roots(psi0, &random_roots(rng, max_deg, false));
    DemandModel::new(rng.random_range(5.0..40.0), psi).expect("roots lie outside the disk")
}

/// Polynomial with roots on both sides of the unit circle.
pub fn random_ma(rng: &mut impl Rng, max_deg: usize) -> TransferPoly {
    poly_from_roots(
        rng.random_range(0.2..5.0),
        &random_roots(rng, max_deg, true),
    )
}

/// Hand-built admissible transfers: `N − 1` random quadratics with unit
/// constant term, and a last one that restores `Σ T_n = N`.
pub fn custom_transfers(n: usize, coeffs: &[(f64, f64)]) -> Vec<TransferPoly> {
    let mut ts: Vec<TransferPoly> = coeffs
        .iter()
        .take(n - 1)
        .map(|&(a, b)| TransferPoly::new(vec![1.0, a, b]))
        .collect();
    let partial = ts.iter().fold(TransferPoly::zero(), |acc, t| acc.add(t));
    ts.push(TransferPoly::constant(n as f64).sub(&partial));
    ts
}

/// One of the three policy families, picked by `kind`.
pub fn build_policy(
    model: &DemandModel,
    n: usize,
    sigma: f64,
    kind: u8,
    lag: usize,
    coeffs: &[(f64, f64)],
) -> AllocationPolicy {
    match kind % 3 {
        0 => neutral_policy(model, n, sigma).unwrap(),
        1 if n.is_multiple_of(2) => lagged_variant(model, n, sigma, lag.max(1)).unwrap(),
        1 => neutral_policy(model, n, sigma).unwrap(),
        _ => custom_policy(model, custom_transfers(n, coeffs)).unwrap(),
    }
}

pub fn random_policy(rng: &mut impl Rng, model: &DemandModel) -> (usize, f64, AllocationPolicy) {
    let n = rng.random_range(2..=9);
    let sigma = sigma_lower_bound(model, n) * rng.random_range(1.0..8.0);
    let coeffs: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)))
        .collect();
    let policy = build_policy(
        model,
        n,
        sigma,
        rng.random_range(0..3),
        rng.random_range(1..4),
        &coeffs,
    );
    (n, sigma, policy)
}

fn scale(p: &TransferPoly) -> f64 {
    p.max_abs_coeff().max(1.0)
}

pub fn check_admissible(model: &DemandModel, policy: &AllocationPolicy) -> Check {
    let mut total = TransferPoly::zero();
    for i in 1..=policy.n_sellers {
        total = total.add(&seller_filter(policy, model, i).map_err(|e| e.to_string())?);
    }
    let diff = total.max_abs_diff(&model.psi);
    if diff > 1e-9 * scale(&model.psi) * policy.n_sellers as f64 {
        return Err(format!(
            "seller filters sum to {:?}, market filter {:?}",
            total.coeffs(),
            model.psi.coeffs()
        ));
    }
    Ok(())
}

pub fn check_sigma_target(model: &DemandModel, n: usize, sigma: f64) -> Check {
    let policy = neutral_policy(model, n, sigma).map_err(|e| e.to_string())?;
    let report = check_neutral(&policy, model, 1e-9 * sigma.max(1.0)).map_err(|e| e.to_string())?;
    for (i, s) in report.per_seller_sigma.iter().enumerate() {
        if (s - sigma).abs() > 1e-9 * sigma.max(1.0) {
            return Err(format!("seller {} has sigma {s}, target {sigma}", i + 1));
        }
    }
    if !report.is_neutral {
        return Err(format!("policy not reported neutral: {report:?}"));
    }
    Ok(())
}

pub fn check_sum_bound(model: &DemandModel, policy: &AllocationPolicy) -> Check {
    let mut sum = 0.0;
    for i in 1..=policy.n_sellers {
        sum += root_msfe(&seller_filter(policy, model, i).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    }
    let bound = model.psi.at_zero().abs();
    if sum < bound * (1.0 - 1e-9) {
        return Err(format!(
            "sum of seller sigmas {sum} below |psi(0)| = {bound}"
        ));
    }
    Ok(())
}

pub fn check_noninvertible(model: &DemandModel, n: usize, sigma: f64) -> Check {
    if sigma <= sigma_lower_bound(model, n) * (1.0 + 1e-6) {
        return Ok(());
    }
    let policy = neutral_policy(model, n, sigma).map_err(|e| e.to_string())?;
    for i in 1..=n {
        let f = seller_filter(&policy, model, i).map_err(|e| e.to_string())?;
        if is_invertible(&f, DEFAULT_BOUNDARY_TOL).map_err(|e| e.to_string())? {
            return Err(format!(
                "seller {i} filter {:?} is invertible at sigma {sigma}",
                f.coeffs()
            ));
        }
    }
    Ok(())
}

/// Zero-sum offsets with a demand large enough that every target is nonnegative.
pub fn feasible_routing_instance(raw: &[f64], extra: u64) -> (Vec<f64>, u64) {
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let offsets: Vec<f64> = raw.iter().map(|b| b - mean).collect();
    let worst = offsets.iter().fold(0.0f64, |m, &b| m.max(-b));
    let d_min = (worst * raw.len() as f64).ceil() as u64;
    (offsets, d_min + extra)
}

pub fn check_routing(offsets: &[f64], d_t: u64, seed: u64) -> Check {
    let po = PeriodOffsets {
        period: 0,
        offsets: offsets.to_vec(),
    };
    let r = route_orders(&po, d_t, TieBreak::Random { seed }).map_err(|e| e.to_string())?;
    if r.counts.iter().sum::<u64>() != d_t {
        return Err(format!(
            "routed {} of {d_t} orders",
            r.counts.iter().sum::<u64>()
        ));
    }
    if r.max_discrepancy > 1.0 + 1e-9 {
        return Err(format!(
            "discrepancy {} for offsets {offsets:?}, d = {d_t}",
            r.max_discrepancy
        ));
    }
    Ok(())
}

pub fn check_innovations(psi: &TransferPoly) -> Check {
    let exact = root_msfe(psi).map_err(|e| e.to_string())?;
    let approx = innovations_msfe(psi, 200_000).map_err(|e| e.to_string())?;
    if (approx - exact).abs() > 0.005 * exact {
        return Err(format!(
            "innovations {approx} vs root MSFE {exact} for {:?}",
            psi.coeffs()
        ));
    }
    Ok(())
}

pub fn check_filter_bound(psi_n: &TransferPoly, raw_weights: &[f64]) -> Check {
    let total: f64 = raw_weights.iter().sum();
    let f = FilterForecaster::new(
        TransferPoly::new(raw_weights.iter().map(|w| w / total).collect::<Vec<_>>()),
        "random",
    )
    .map_err(|e| e.to_string())?;
    let achieved = filter_msfe(psi_n, &f);
    let best = root_msfe(psi_n).map_err(|e| e.to_string())?;
    if achieved < best * (1.0 - 1e-9) - 1e-12 {
        return Err(format!("filter error {achieved} beats the optimum {best}"));
    }
    Ok(())
}

pub fn check_lead_zero(psi: &TransferPoly) -> Check {
    let f = inner_outer_factor(psi, DEFAULT_BOUNDARY_TOL).map_err(|e| e.to_string())?;
    let zero = leadtime_msfe(&f.outer, 0);
    let direct = root_msfe(psi).map_err(|e| e.to_string())?;
    if zero != f.root_msfe() || zero != direct {
        return Err(format!(
            "lead-0 error {zero} differs from root MSFE {direct}"
        ));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MarketSpec {
    pub mu: f64,
    pub psi0: f64,
    pub costs: PlatformCosts,
    pub sellers: Vec<SellerParams>,
}

impl MarketSpec {
    pub fn build(&self) -> Marketplace {
        let model = DemandModel::new(self.mu, TransferPoly::constant(self.psi0)).unwrap();
        Marketplace::new(model, self.costs, self.sellers.clone()).unwrap()
    }
}

pub fn random_market(rng: &mut impl Rng) -> MarketSpec {
    let fbp_fulfillment = rng.random_range(5.0..15.0);
    let costs = PlatformCosts {
        rho: rng.random_range(5.0..20.0),
        fbp_fulfillment,
        fbp_holding: rng.random_range(1.5..3.5),
        delta_f: rng.random_range(0.0..4.0),
        delta_h: rng.random_range(0.0..4.0),
        r: 100.0,
    };
    let n = rng.random_range(2..=12);
    let sellers = (0..n)
        .map(|_| SellerParams {
            h: rng.random_range(0.3..3.0),
            b: rng.random_range(4.0..15.0),
            f: fbp_fulfillment + rng.random_range(-2.0..16.0),
        })
        .collect();
    MarketSpec {
        mu: rng.random_range(5.0..40.0),
        psi0: rng.random_range(1.0..8.0),
        costs,
        sellers,
    }
}

pub fn check_collinear(market: &Marketplace) -> Check {
    let u = market.sigma_upper(None).map_err(|e| e.to_string())?.sigma_u;
    let curve = market.payoff_curve(
        &linear_grid(market.sigma_l(), 1.2 * u.max(market.sigma_l()), 500),
        u,
    );
    let d = collinearity_defect(&curve);
    if d > 1e-9 {
        return Err(format!("collinearity defect {d:e}"));
    }
    Ok(())
}

/// The optimizer must do at least as well as a dense grid over the feasible range.
pub fn check_optimizer(market: &Marketplace, points: usize) -> Check {
    let sol = match market.optimize(None) {
        Ok(s) => s,
        Err(demand_alloc::platform::PlatformError::EmptyFeasibleSet { .. }) => return Ok(()),
        Err(e) => return Err(e.to_string()),
    };
    let best = linear_grid(sol.sigma_l, sol.sigma_u, points)
        .into_iter()
        .map(|s| market.payoff(s).total())
        .fold(f64::NEG_INFINITY, f64::max);
    if sol.payoff_star < best - 1e-9 * best.abs().max(1.0) {
        return Err(format!(
            "optimizer {} at {} loses to grid {best}",
            sol.payoff_star, sol.sigma_star
        ));
    }
    Ok(())
}
