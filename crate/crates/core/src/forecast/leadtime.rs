//! Replenishment lead times.
//!
//! With a lead time of `L` periods a seller stocks against the cumulative
//! demand `D_{t+1} + … + D_{t+1+L}`. Its forecast error is driven by partial
//! sums of the outer factor's coefficients `θ_k`, so two modes with different
//! lead times see different uncertainty under the same allocation policy.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ForecastError, ForecastResult};
use crate::demand::DemandModel;
use crate::policy::{seller_filter, AllocationPolicy, PolicyDesign};
use crate::polyalg::{inner_outer_factor, TransferPoly, DEFAULT_BOUNDARY_TOL};
use crate::seller::{Mode, PlatformCosts, SellerEconomics, SellerParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LeadTimeSpec {
    pub l_fbp: usize,
    pub l_fbm: usize,
}

impl LeadTimeSpec {
    pub fn lead(&self, mode: Mode) -> usize {
        match mode {
            Mode::Fbp => self.l_fbp,
            Mode::Fbm => self.l_fbm,
        }
    }
}

/// `σ̄ = √(Σ_{ℓ=0}^{L} (Σ_{k=0}^{L−ℓ} θ_k)²)` over the outer factor's coefficients.
pub fn leadtime_msfe(outer: &TransferPoly, lead: usize) -> f64 {
    if lead == 0 {
        return outer.at_zero().abs();
    }
    let mut partial = 0.0;
    let mut total = 0.0;
    // partial sums for upper limits 0..=L cover every ℓ once
    for k in 0..=lead {
        partial += outer.coeff(k);
        total += partial * partial;
    }
    total.sqrt()
}

/// Outer-factor coefficients of a designed seller filter, written out directly.
///
/// With `α = (−1)^r σ/σ_L` for design slot `r`:
/// slot 1 of an odd design gives `(αψ_k + αψ_{k−1} − ψ_{k−2})/N`,
/// slot 2 gives `(αψ_k − ψ_{k−2})/N`, and every alternating slot gives
/// `(αψ_k + ψ_{k−1})/N`. Signs agree with the factorization up to one global sign.
pub fn leadtime_theta(
    model: &DemandModel,
    policy: &AllocationPolicy,
    n: usize,
    sigma: f64,
    sigma_l: f64,
) -> ForecastResult<TransferPoly> {
    let n_sellers = policy.n_sellers;
    if n == 0 || n > n_sellers {
        return Err(ForecastError::InvalidArgument(format!(
            "seller {n} out of range 1..={n_sellers}"
        )));
    }
    let nf = n_sellers as f64;
    let psi = |k: isize| {
        if k < 0 {
            0.0
        } else {
            model.psi.coeff(k as usize)
        }
    };
    let q = model.psi.degree() as isize;
    let role = policy.roles[n - 1];
    let alpha = if role % 2 == 0 {
        sigma / sigma_l
    } else {
        -sigma / sigma_l
    };
    let build = |extra: isize, f: &dyn Fn(isize) -> f64| {
        TransferPoly::new((0..=q + extra).map(f).map(|v| v / nf).collect::<Vec<_>>())
    };
    match policy.design {
        PolicyDesign::Uniform => Ok(model.psi.scale(1.0 / nf)),
        PolicyDesign::OddMa2 { .. } if role == 1 => Ok(build(2, &|k| {
            alpha * psi(k) + alpha * psi(k - 1) - psi(k - 2)
        })),
        PolicyDesign::OddMa2 { .. } if role == 2 => Ok(build(2, &|k| alpha * psi(k) - psi(k - 2))),
        PolicyDesign::EvenMa1 { .. } | PolicyDesign::OddMa2 { .. } => {
            Ok(build(1, &|k| alpha * psi(k) + psi(k - 1)))
        }
        other => Err(ForecastError::UnsupportedPolicy(format!("{other:?}"))),
    }
}

/// Mode choice when each mode carries its own lead time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadTimeChoice {
    pub mode: Mode,
    pub sigma_bar_fbp: f64,
    pub sigma_bar_fbm: f64,
    pub utility_fbp: f64,
    pub utility_fbm: f64,
}

impl LeadTimeChoice {
    pub fn sigma_bar(&self) -> f64 {
        match self.mode {
            Mode::Fbp => self.sigma_bar_fbp,
            Mode::Fbm => self.sigma_bar_fbm,
        }
    }
}

fn choice_from_outer(
    econ: &SellerEconomics,
    outer: &TransferPoly,
    leads: LeadTimeSpec,
    mu_share: f64,
) -> LeadTimeChoice {
    let sigma_bar_fbp = leadtime_msfe(outer, leads.l_fbp);
    let sigma_bar_fbm = leadtime_msfe(outer, leads.l_fbm);
    let utility_fbp = econ.utility(Mode::Fbp, mu_share, sigma_bar_fbp);
    let utility_fbm = econ.utility(Mode::Fbm, mu_share, sigma_bar_fbm);
    let mode = if utility_fbp >= utility_fbm {
        Mode::Fbp
    } else {
        Mode::Fbm
    };
    LeadTimeChoice {
        mode,
        sigma_bar_fbp,
        sigma_bar_fbm,
        utility_fbp,
        utility_fbm,
    }
}

fn seller_outer(
    model: &DemandModel,
    policy: &AllocationPolicy,
    n: usize,
) -> ForecastResult<TransferPoly> {
    let filter = seller_filter(policy, model, n)?;
    Ok(inner_outer_factor(&filter, DEFAULT_BOUNDARY_TOL)?.outer)
}

/// Preferred mode of seller `n` (1-based) given mode-specific lead times.
pub fn leadtime_mode_choice(
    params: &SellerParams,
    costs: &PlatformCosts,
    leads: LeadTimeSpec,
    model: &DemandModel,
    policy: &AllocationPolicy,
    n: usize,
    mu_share: f64,
) -> ForecastResult<LeadTimeChoice> {
    let econ = SellerEconomics::new(params, costs)?;
    Ok(choice_from_outer(
        &econ,
        &seller_outer(model, policy, n)?,
        leads,
        mu_share,
    ))
}

/// Adoption and platform payoff when every seller plans against its lead-time demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadTimeOutcome {
    pub choices: Vec<LeadTimeChoice>,
    pub adopters: BTreeSet<usize>,
    pub gamma_fbp: f64,
    pub gamma_fbm: f64,
    pub payoff: f64,
}

/// Lead-time version of the adoption step. Average FBP stock of an adopter is
/// `(L^FBP + 1)·μ/N + ζ^FBP·σ̄^FBP`, on which the platform earns storage rent.
pub fn leadtime_adoption(
    sellers: &[SellerParams],
    costs: &PlatformCosts,
    leads: LeadTimeSpec,
    model: &DemandModel,
    policy: &AllocationPolicy,
) -> ForecastResult<LeadTimeOutcome> {
    if sellers.len() != policy.n_sellers {
        return Err(ForecastError::InvalidArgument(format!(
            "{} sellers but the policy allocates to {}",
            sellers.len(),
            policy.n_sellers
        )));
    }
    let mu_share = model.mu / policy.n_sellers as f64;
    let mut choices = Vec::with_capacity(sellers.len());
    let mut adopters = BTreeSet::new();
    let (mut gamma_fbp, mut gamma_fbm, mut stock_fbp) = (0.0, 0.0, 0.0);
    for (i, s) in sellers.iter().enumerate() {
        let econ = SellerEconomics::new(s, costs)?;
        let c = choice_from_outer(&econ, &seller_outer(model, policy, i + 1)?, leads, mu_share);
        match c.mode {
            Mode::Fbp => {
                adopters.insert(i + 1);
                gamma_fbp += econ.fbp.zeta * c.sigma_bar_fbp;
                stock_fbp += (leads.l_fbp + 1) as f64 * mu_share;
            }
            Mode::Fbm => gamma_fbm += econ.fbm.zeta * c.sigma_bar_fbm,
        }
        choices.push(c);
    }
    let payoff = costs.rho * model.mu
        + costs.delta_f * mu_share * adopters.len() as f64
        + costs.delta_h * (stock_fbp + gamma_fbp);
    Ok(LeadTimeOutcome {
        choices,
        adopters,
        gamma_fbp,
        gamma_fbm,
        payoff,
    })
}
